//! Scripted attacker and victim agents driving the contract end to end.

use std::io::{BufRead, Write};

use num_bigint::BigUint;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contract::{contract_apply, Action, Actor, Balances, ContractEvent, ContractState, Phase, ScheduleEntry};
use crate::error::{Error, Result};
use crate::group::{setup, GroupParams, DEFAULT_CHUNK_BITS};
use crate::veck::{decrypt_bundle, encrypt_with_proof, tamper, TamperTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackerBehavior {
    #[default]
    Honest,
    /// Never reveals the key.
    WithholdKey,
    /// Reveals a key that does not match vk, then gives up.
    WrongKey,
    /// Ships a bundle with one flipped bit.
    TamperBundle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct E2eConfig {
    pub mode: Mode,
    /// Payment rounds; must be 1 in single mode.
    #[serde(default = "one")]
    pub rounds: usize,
    /// Total demand in whole tokens.
    pub ransom: u64,
    /// Explicit per-round amounts. Overrides `ransom` when present.
    #[serde(default)]
    pub schedule: Option<Vec<u64>>,
    /// Victim cancels once this many rounds have been withdrawn.
    #[serde(default)]
    pub cancel_at: Option<usize>,
    #[serde(default)]
    pub attacker: AttackerBehavior,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_chunk_bits")]
    pub chunk_bits: u32,
    #[serde(default = "default_data_len")]
    pub data_len: usize,
    #[serde(default = "default_timelock")]
    pub timelock_blocks: u64,
    #[serde(default = "default_interval")]
    pub round_interval: u64,
}

fn one() -> usize {
    1
}
fn default_chunk_bits() -> u32 {
    DEFAULT_CHUNK_BITS
}
fn default_data_len() -> usize {
    64
}
fn default_timelock() -> u64 {
    20
}
fn default_interval() -> u64 {
    5
}

impl E2eConfig {
    pub fn single(ransom: u64, seed: u64) -> Self {
        Self {
            mode: Mode::Single,
            rounds: 1,
            ransom,
            schedule: None,
            cancel_at: None,
            attacker: AttackerBehavior::Honest,
            seed,
            chunk_bits: DEFAULT_CHUNK_BITS,
            data_len: default_data_len(),
            timelock_blocks: default_timelock(),
            round_interval: default_interval(),
        }
    }

    pub fn multi(ransom: u64, rounds: usize, cancel_at: Option<usize>, seed: u64) -> Self {
        Self {
            mode: Mode::Multi,
            rounds,
            cancel_at,
            ..Self::single(ransom, seed)
        }
    }

    /// Per-round amounts: the explicit schedule, else an even split with the
    /// remainder on round 1.
    pub fn amounts(&self) -> Result<Vec<u64>> {
        let bad = |m: String| Err(Error::Scenario(m));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.mode == Mode::Single && self.rounds != 1 {
            return bad(format!("single mode needs rounds = 1, got {}", self.rounds));
        }
        if let Some(c) = self.cancel_at {
            if self.mode == Mode::Single {
                return bad("cancel_at needs multi mode".into());
            }
            if c > self.rounds {
                return bad(format!("cancel_at {c} exceeds {} rounds", self.rounds));
            }
        }
        if self.data_len == 0 {
            return bad("data_len must be positive".into());
        }
        let amounts = match &self.schedule {
            Some(s) => {
                if s.len() != self.rounds {
                    return bad(format!("schedule has {} entries for {} rounds", s.len(), self.rounds));
                }
                s.clone()
            }
            None => {
                let n = self.rounds as u64;
                if self.ransom < n {
                    return bad(format!("ransom {} cannot cover {n} positive rounds", self.ransom));
                }
                let mut v = vec![self.ransom / n; self.rounds];
                v[0] += self.ransom % n;
                v
            }
        };
        if amounts.contains(&0) {
            return bad("every scheduled amount must be positive".into());
        }
        if self.timelock_blocks == 0 {
            return bad("timelock_blocks must be positive".into());
        }
        Ok(amounts)
    }
}

/// Off-chain steps recorded alongside contract actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Genesis {
        params: GroupParams,
        victim_balance: u64,
        attacker_balance: u64,
    },
    EncryptData {
        chunks: usize,
        data_digest: String,
    },
    RansomNote {
        commit_digest: String,
        chunks: usize,
        amounts: Vec<u64>,
    },
    VerifyBundle {
        accepted: bool,
        reason: Option<String>,
    },
    Decline,
    WithholdKey,
    DecryptData {
        recovered: bool,
        reason: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    Contract(Action),
    Message(Message),
}

/// One JSONL line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: usize,
    pub height: u64,
    pub actor: Actor,
    pub action: Step,
    pub phase_before: Phase,
    pub phase_after: Phase,
    pub balances: Balances,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<ContractEvent>,
    /// SHA-256 of the contract state after this step, hex.
    pub state_digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct E2eSummary {
    pub final_phase: Phase,
    pub scheduled: Vec<u64>,
    pub bundle_accepted: bool,
    pub data_recovered: bool,
    pub attacker_gain: u64,
    pub victim_spent: u64,
    pub victim_refunded: u64,
    pub total_deposited: u64,
    pub refusals: usize,
    pub conservation_holds: bool,
}

#[derive(Debug, Clone)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
    pub final_state: ContractState,
    pub summary: E2eSummary,
    pub recovered_data: Option<Vec<u8>>,
    pub original_data: Vec<u8>,
}

pub fn state_digest(state: &ContractState) -> String {
    let json = serde_json::to_vec(state).expect("state serializes");
    hex::encode(Sha256::digest(json))
}

struct Recorder<'a> {
    params: &'a GroupParams,
    state: ContractState,
    entries: Vec<TranscriptEntry>,
    refusals: usize,
}

impl Recorder<'_> {
    fn push(&mut self, actor: Actor, action: Step, before: Phase, events: Vec<ContractEvent>) {
        self.entries.push(TranscriptEntry {
            seq: self.entries.len(),
            height: self.state.height,
            actor,
            action,
            phase_before: before,
            phase_after: self.state.phase,
            balances: self.state.balances(),
            events,
            state_digest: state_digest(&self.state),
        });
    }

    fn act(&mut self, action: Action) -> bool {
        let before = self.state.phase;
        let (next, events) = contract_apply(self.params, &self.state, &action);
        let refused = matches!(events.first(), Some(ContractEvent::Refused(_)));
        self.refusals += refused as usize;
        self.state = next;
        self.push(action.actor(), Step::Contract(action), before, events);
        !refused
    }

    fn say(&mut self, actor: Actor, msg: Message) {
        let phase = self.state.phase;
        self.push(actor, Step::Message(msg), phase, Vec::new());
    }
}

/// Runs one scripted exchange. Contract refusals are recorded, never raised.
pub fn run_end_to_end(cfg: &E2eConfig) -> Result<Transcript> {
    let amounts = cfg.amounts()?;
    let total: u64 = amounts
        .iter()
        .try_fold(0u64, |a, &b| a.checked_add(b))
        .ok_or_else(|| Error::Scenario("schedule total overflows".into()))?;
    let params = setup(cfg.chunk_bits, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = vec![0u8; cfg.data_len];
    rng.fill_bytes(&mut data);

    let genesis = ContractState::genesis(total, 0);
    let genesis_total = genesis.balances().total();
    let mut rec = Recorder {
        params: &params,
        state: genesis,
        entries: Vec::new(),
        refusals: 0,
    };
    rec.say(
        Actor::Ledger,
        Message::Genesis {
            params: params.clone(),
            victim_balance: total,
            attacker_balance: 0,
        },
    );

    // attacker encrypts; from here on the victim only holds the bundle
    let (sk, honest) = encrypt_with_proof(&params, &data, &mut rng)?;
    let mut bundle = honest;
    rec.say(
        Actor::Attacker,
        Message::EncryptData {
            chunks: bundle.ciphertext.len(),
            data_digest: bundle.data_digest.clone(),
        },
    );
    if cfg.attacker == AttackerBehavior::TamperBundle {
        tamper(&mut bundle, TamperTarget::Ciphertext, &mut rng);
    }

    let start = rec.state.height;
    let schedule: Vec<ScheduleEntry> = amounts
        .iter()
        .enumerate()
        .map(|(i, &amount)| ScheduleEntry {
            amount,
            unlock_height: start + i as u64 * cfg.round_interval,
        })
        .collect();
    rec.act(Action::Deploy {
        vk: bundle.vk.clone(),
        schedule: schedule.clone(),
        timelock_height: start + cfg.timelock_blocks,
    });
    rec.say(
        Actor::Attacker,
        Message::RansomNote {
            commit_digest: bundle.commit_digest.clone(),
            chunks: bundle.ciphertext.len(),
            amounts: amounts.clone(),
        },
    );

    let verdict = bundle.verify(&params);
    rec.say(
        Actor::Victim,
        Message::VerifyBundle {
            accepted: verdict.is_ok(),
            reason: verdict.as_ref().err().map(|r| r.to_string()),
        },
    );
    let mut recovered = None;
    if verdict.is_err() {
        rec.say(Actor::Victim, Message::Decline);
    } else {
        rec.act(Action::Deposit { amount: total });
        match cfg.attacker {
            AttackerBehavior::Honest | AttackerBehavior::TamperBundle => {
                rec.act(Action::RevealKey { sk: sk.clone() });
            }
            AttackerBehavior::WrongKey => {
                let wrong: BigUint = (&sk % (&params.q - 2u32)) + 1u32;
                let wrong = if wrong == sk { &wrong + 1u32 } else { wrong };
                rec.act(Action::RevealKey { sk: wrong });
                rec.say(Actor::Attacker, Message::WithholdKey);
            }
            AttackerBehavior::WithholdKey => rec.say(Actor::Attacker, Message::WithholdKey),
        }
        if rec.state.phase == Phase::KeyVerified {
            let published = rec.state.revealed_sk.clone().expect("verified key is public");
            let opened = decrypt_bundle(&params, &published, &bundle);
            rec.say(
                Actor::Victim,
                Message::DecryptData {
                    recovered: opened.as_ref().is_ok_and(|d| *d == data),
                    reason: opened.as_ref().err().map(|e| e.to_string()),
                },
            );
            recovered = opened.ok();
            collect_rounds(&mut rec, &schedule, cfg.cancel_at);
        } else {
            // victim waits out the timelock and reclaims the deposit
            let wait = rec.state.timelock_height.saturating_sub(rec.state.height);
            rec.act(Action::AdvanceClock { blocks: wait });
            rec.act(Action::ExpireRefund);
        }
    }

    let s = &rec.state;
    let summary = E2eSummary {
        final_phase: s.phase,
        scheduled: amounts,
        bundle_accepted: verdict.is_ok(),
        data_recovered: recovered.as_deref() == Some(data.as_slice()),
        attacker_gain: s.attacker_balance,
        victim_spent: s.withdrawn_total,
        victim_refunded: s.refunded_total,
        total_deposited: s.total_deposited,
        refusals: rec.refusals,
        conservation_holds: s.conserves(genesis_total) && s.attacker_balance == s.withdrawn_total,
    };
    Ok(Transcript {
        final_state: rec.state,
        entries: rec.entries,
        summary,
        recovered_data: recovered,
        original_data: data,
    })
}

fn collect_rounds(rec: &mut Recorder<'_>, schedule: &[ScheduleEntry], cancel_at: Option<usize>) {
    for (i, entry) in schedule.iter().enumerate() {
        if cancel_at == Some(i) {
            rec.act(Action::Cancel);
            return;
        }
        if entry.unlock_height > rec.state.height {
            rec.act(Action::AdvanceClock {
                blocks: entry.unlock_height - rec.state.height,
            });
        }
        rec.act(Action::Withdraw { round: i + 1 });
    }
    if cancel_at == Some(schedule.len()) {
        // nothing left to stop; the contract refuses and the refusal is kept
        rec.act(Action::Cancel);
    }
}

pub fn write_jsonl(entries: &[TranscriptEntry], mut w: impl Write) -> Result<()> {
    for e in entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(r: impl BufRead) -> Result<Vec<TranscriptEntry>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| Error::TranscriptLine { line: i + 1, source })?);
    }
    Ok(out)
}

/// Re-applies every contract action from genesis, checking each entry's
/// recorded fields and state digest on the way. Returns the final state.
pub fn replay(entries: &[TranscriptEntry]) -> Result<ContractState> {
    let Some(TranscriptEntry {
        action:
            Step::Message(Message::Genesis {
                params,
                victim_balance,
                attacker_balance,
            }),
        ..
    }) = entries.first()
    else {
        return Err(Error::Scenario("transcript does not start with a genesis entry".into()));
    };
    let mut state = ContractState::genesis(*victim_balance, *attacker_balance);
    for (i, e) in entries.iter().enumerate() {
        let diverges = |what: &str| Error::Scenario(format!("replay diverges at entry {i}: {what}"));
        let before = state.phase;
        match &e.action {
            Step::Contract(action) => {
                let (next, events) = contract_apply(params, &state, action);
                if events != e.events {
                    return Err(diverges("events"));
                }
                if action.actor() != e.actor {
                    return Err(diverges("actor"));
                }
                state = next;
            }
            Step::Message(_) if !e.events.is_empty() => return Err(diverges("events")),
            Step::Message(_) => {}
        }
        if e.seq != i {
            return Err(diverges("seq"));
        }
        if e.height != state.height {
            return Err(diverges("height"));
        }
        if e.phase_before != before || e.phase_after != state.phase {
            return Err(diverges("phase"));
        }
        if e.balances != state.balances() {
            return Err(diverges("balances"));
        }
        if state_digest(&state) != e.state_digest {
            return Err(diverges("state digest"));
        }
    }
    Ok(state)
}
