//! Escrow contract as a pure state machine over exact integer balances.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::group::{hexint, GroupParams};
use crate::veck::verify_key;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    /// Ledger exists but no contract has been deployed yet.
    Undeployed,
    Deployed,
    Funded,
    KeyVerified,
    Complete,
    Refunded,
    Cancelled,
}

impl Phase {
    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Complete | Phase::Refunded | Phase::Cancelled)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Undeployed => "UNDEPLOYED",
            Phase::Deployed => "DEPLOYED",
            Phase::Funded => "FUNDED",
            Phase::KeyVerified => "KEY_VERIFIED",
            Phase::Complete => "COMPLETE",
            Phase::Refunded => "REFUNDED",
            Phase::Cancelled => "CANCELLED",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Attacker,
    Victim,
    Ledger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Account {
    Attacker,
    Victim,
    Escrow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub amount: u64,
    pub unlock_height: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Deploy {
        #[serde(with = "hexint")]
        vk: BigUint,
        schedule: Vec<ScheduleEntry>,
        timelock_height: u64,
    },
    Deposit {
        amount: u64,
    },
    RevealKey {
        #[serde(with = "hexint")]
        sk: BigUint,
    },
    /// 1-based round index.
    Withdraw {
        round: usize,
    },
    Cancel,
    AdvanceClock {
        blocks: u64,
    },
    ExpireRefund,
}

impl Action {
    pub fn actor(&self) -> Actor {
        match self {
            Action::Deploy { .. } | Action::RevealKey { .. } | Action::Withdraw { .. } => Actor::Attacker,
            Action::Deposit { .. } | Action::Cancel | Action::ExpireRefund => Actor::Victim,
            Action::AdvanceClock { .. } => Actor::Ledger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "refusal", rename_all = "snake_case")]
pub enum Refusal {
    WrongPhase {
        phase: Phase,
        allowed: Vec<Phase>,
    },
    InvalidSchedule {
        reason: String,
    },
    InvalidKey,
    TimelockExpired {
        height: u64,
        timelock_height: u64,
    },
    TimelockPending {
        height: u64,
        timelock_height: u64,
    },
    AmountMismatch {
        expected: u64,
        got: u64,
    },
    InsufficientFunds {
        balance: u64,
        needed: u64,
    },
    RoundOutOfRange {
        round: usize,
        rounds: usize,
    },
    RoundAlreadyWithdrawn {
        round: usize,
    },
    RoundLocked {
        round: usize,
        unlock_height: u64,
        height: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ContractEvent {
    PhaseChanged {
        from: Phase,
        to: Phase,
    },
    Transfer {
        from: Account,
        to: Account,
        amount: u64,
    },
    KeyPublished {
        #[serde(with = "hexint")]
        sk: BigUint,
    },
    ClockAdvanced {
        height: u64,
    },
    Refused(Refusal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Balances {
    pub attacker: u64,
    pub victim: u64,
    pub escrow: u64,
}

impl Balances {
    pub fn total(&self) -> u128 {
        self.attacker as u128 + self.victim as u128 + self.escrow as u128
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractState {
    pub phase: Phase,
    pub attacker_account: String,
    pub victim_account: String,
    pub attacker_balance: u64,
    pub victim_balance: u64,
    #[serde(with = "hexint::opt")]
    pub vk: Option<BigUint>,
    pub schedule: Vec<ScheduleEntry>,
    pub timelock_height: u64,
    /// Tokens currently held in escrow.
    pub deposited: u64,
    pub total_deposited: u64,
    pub withdrawn_rounds: BTreeSet<usize>,
    pub withdrawn_total: u64,
    pub refunded_total: u64,
    #[serde(with = "hexint::opt")]
    pub revealed_sk: Option<BigUint>,
    pub height: u64,
}

impl ContractState {
    pub fn genesis(victim_balance: u64, attacker_balance: u64) -> Self {
        Self {
            phase: Phase::Undeployed,
            attacker_account: "attacker".into(),
            victim_account: "victim".into(),
            attacker_balance,
            victim_balance,
            vk: None,
            schedule: Vec::new(),
            timelock_height: 0,
            deposited: 0,
            total_deposited: 0,
            withdrawn_rounds: BTreeSet::new(),
            withdrawn_total: 0,
            refunded_total: 0,
            revealed_sk: None,
            height: 0,
        }
    }

    pub fn balances(&self) -> Balances {
        Balances {
            attacker: self.attacker_balance,
            victim: self.victim_balance,
            escrow: self.deposited,
        }
    }

    pub fn scheduled_total(&self) -> u64 {
        self.schedule.iter().map(|e| e.amount).sum()
    }

    /// Escrow bookkeeping and wallet totals both reconcile.
    pub fn conserves(&self, genesis_total: u128) -> bool {
        let escrow = self.deposited as u128 + self.withdrawn_total as u128 + self.refunded_total as u128;
        escrow == self.total_deposited as u128 && self.balances().total() == genesis_total
    }
}

fn wrong_phase(phase: Phase, allowed: &[Phase]) -> Refusal {
    Refusal::WrongPhase {
        phase,
        allowed: allowed.to_vec(),
    }
}

fn check_schedule(schedule: &[ScheduleEntry], height: u64, timelock: u64) -> Result<(), String> {
    if schedule.is_empty() {
        return Err("schedule is empty".into());
    }
    if schedule.iter().any(|e| e.amount == 0) {
        return Err("scheduled amounts must be positive".into());
    }
    if schedule.windows(2).any(|w| w[1].unlock_height < w[0].unlock_height) {
        return Err("unlock heights must be non-decreasing".into());
    }
    if schedule
        .iter()
        .try_fold(0u64, |acc, e| acc.checked_add(e.amount))
        .is_none()
    {
        return Err("schedule total overflows".into());
    }
    if timelock <= height {
        return Err(format!("timelock {timelock} is not after height {height}"));
    }
    Ok(())
}

/// Applies one action. Refused actions leave the state untouched and emit a
/// single `Refused` event.
pub fn contract_apply(
    params: &GroupParams,
    state: &ContractState,
    action: &Action,
) -> (ContractState, Vec<ContractEvent>) {
    match step(params, state, action) {
        Ok((next, events)) => (next, events),
        Err(r) => (state.clone(), vec![ContractEvent::Refused(r)]),
    }
}

fn step(
    params: &GroupParams,
    s: &ContractState,
    action: &Action,
) -> Result<(ContractState, Vec<ContractEvent>), Refusal> {
    let mut n = s.clone();
    let mut ev = Vec::new();
    let goto = |n: &mut ContractState, ev: &mut Vec<ContractEvent>, to: Phase| {
        ev.push(ContractEvent::PhaseChanged { from: n.phase, to });
        n.phase = to;
    };
    let need = |allowed: &[Phase]| {
        if allowed.contains(&s.phase) {
            Ok(())
        } else {
            Err(wrong_phase(s.phase, allowed))
        }
    };
    match action {
        Action::Deploy {
            vk,
            schedule,
            timelock_height,
        } => {
            need(&[Phase::Undeployed])?;
            check_schedule(schedule, s.height, *timelock_height)
                .map_err(|reason| Refusal::InvalidSchedule { reason })?;
            if !params.contains(vk) || vk.is_one() {
                return Err(Refusal::InvalidKey);
            }
            n.vk = Some(vk.clone());
            n.schedule = schedule.clone();
            n.timelock_height = *timelock_height;
            goto(&mut n, &mut ev, Phase::Deployed);
        }
        Action::Deposit { amount } => {
            need(&[Phase::Deployed])?;
            let expected = s.scheduled_total();
            if *amount != expected {
                return Err(Refusal::AmountMismatch { expected, got: *amount });
            }
            if s.victim_balance < *amount {
                return Err(Refusal::InsufficientFunds {
                    balance: s.victim_balance,
                    needed: *amount,
                });
            }
            n.victim_balance -= amount;
            n.deposited += amount;
            n.total_deposited += amount;
            ev.push(ContractEvent::Transfer {
                from: Account::Victim,
                to: Account::Escrow,
                amount: *amount,
            });
            goto(&mut n, &mut ev, Phase::Funded);
        }
        Action::RevealKey { sk } => {
            need(&[Phase::Funded])?;
            if s.height >= s.timelock_height {
                return Err(Refusal::TimelockExpired {
                    height: s.height,
                    timelock_height: s.timelock_height,
                });
            }
            let vk = s.vk.as_ref().expect("deployed contract has a key");
            if !verify_key(params, vk, sk) {
                return Err(Refusal::InvalidKey);
            }
            n.revealed_sk = Some(sk.clone());
            ev.push(ContractEvent::KeyPublished { sk: sk.clone() });
            goto(&mut n, &mut ev, Phase::KeyVerified);
        }
        Action::Withdraw { round } => {
            need(&[Phase::KeyVerified])?;
            let rounds = s.schedule.len();
            if *round == 0 || *round > rounds {
                return Err(Refusal::RoundOutOfRange { round: *round, rounds });
            }
            if s.withdrawn_rounds.contains(round) {
                return Err(Refusal::RoundAlreadyWithdrawn { round: *round });
            }
            let entry = &s.schedule[round - 1];
            if entry.unlock_height > s.height {
                return Err(Refusal::RoundLocked {
                    round: *round,
                    unlock_height: entry.unlock_height,
                    height: s.height,
                });
            }
            n.deposited -= entry.amount;
            n.withdrawn_total += entry.amount;
            n.attacker_balance += entry.amount;
            n.withdrawn_rounds.insert(*round);
            ev.push(ContractEvent::Transfer {
                from: Account::Escrow,
                to: Account::Attacker,
                amount: entry.amount,
            });
            if n.withdrawn_rounds.len() == rounds {
                goto(&mut n, &mut ev, Phase::Complete);
            }
        }
        Action::Cancel => {
            // before the key is out the timelock refund already protects the victim
            need(&[Phase::KeyVerified])?;
            refund(&mut n, &mut ev);
            goto(&mut n, &mut ev, Phase::Cancelled);
        }
        Action::AdvanceClock { blocks } => {
            n.height = s.height.saturating_add(*blocks);
            ev.push(ContractEvent::ClockAdvanced { height: n.height });
        }
        Action::ExpireRefund => {
            need(&[Phase::Funded])?;
            if s.height < s.timelock_height {
                return Err(Refusal::TimelockPending {
                    height: s.height,
                    timelock_height: s.timelock_height,
                });
            }
            refund(&mut n, &mut ev);
            goto(&mut n, &mut ev, Phase::Refunded);
        }
    }
    Ok((n, ev))
}

fn refund(n: &mut ContractState, ev: &mut Vec<ContractEvent>) {
    let amount = n.deposited;
    n.deposited = 0;
    n.refunded_total += amount;
    n.victim_balance += amount;
    if amount > 0 {
        ev.push(ContractEvent::Transfer {
            from: Account::Escrow,
            to: Account::Victim,
            amount,
        });
    }
}
