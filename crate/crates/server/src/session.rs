//! Interactive decision sessions. Pure state transitions; the HTTP layer only
//! adds storage and locking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ransomgame_core::strategy::{round_costs, subgame_policy, victim_policy, VictimPolicy};
use ransomgame_core::{GameInstance, Reputation};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Pay,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    /// Victim refused a round; the attacker sells.
    Aborted,
    /// First payment made but the key never came.
    KeyWithheld,
    /// Attacker sold the data after a payment.
    DataSold,
    /// Every round paid and the data stayed private.
    Completed,
}

/// What happened after one decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub round: usize,
    pub decision: Decision,
    /// Present only for a first-round payment.
    pub key_returned: Option<bool>,
    pub sold: bool,
    pub status_after: Status,
    /// Uniform draws consumed, in order.
    pub draws: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub round: usize,
    /// Expected loss from this round on if the victim pays and continues optimally.
    pub pay_loss: f64,
    /// `L_t`, the loss of refusing now.
    pub abort_loss: f64,
    pub recommended: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub instance: GameInstance,
    pub reputation: Reputation,
    pub seed: u64,
    /// Round awaiting a decision (1-based). Frozen once the session ends.
    pub round: usize,
    pub history: Vec<HistoryEntry>,
    pub alive: bool,
    pub status: Status,
    pub ransom_paid: f64,
    /// Set once the session ends.
    pub realized_victim_loss: Option<f64>,
    pub realized_attacker_profit: Option<f64>,
}

/// Session state plus derived advice for the current round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    #[serde(flatten)]
    pub state: SessionState,
    pub recommendation: Option<Recommendation>,
    pub policy: Option<VictimPolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIf {
    pub round: usize,
    pub reputation: Reputation,
    pub policy: VictimPolicy,
    pub recommendation: Recommendation,
}

pub fn recommendation(inst: &GameInstance, rep: &Reputation, round: usize) -> Result<Recommendation, ApiError> {
    let (pay_loss, abort_loss) = round_costs(inst, rep, round)?;
    Ok(Recommendation {
        round,
        pay_loss,
        abort_loss,
        recommended: if pay_loss < abort_loss {
            Decision::Pay
        } else {
            Decision::Abort
        },
    })
}

/// Best response for the game from `round` on, the key already returned when `round >= 2`.
pub fn remaining_policy(inst: &GameInstance, rep: &Reputation, round: usize) -> Result<VictimPolicy, ApiError> {
    Ok(if round == 1 {
        victim_policy(inst, rep)?
    } else {
        subgame_policy(inst, rep, round)?
    })
}

impl SessionState {
    pub fn new(id: String, instance: GameInstance, reputation: Reputation, seed: u64) -> Result<Self, ApiError> {
        instance.check()?;
        reputation.check_for(&instance)?;
        Ok(Self {
            id,
            instance,
            reputation,
            seed,
            round: 1,
            history: Vec::new(),
            alive: true,
            status: Status::Active,
            ransom_paid: 0.0,
            realized_victim_loss: None,
            realized_attacker_profit: None,
        })
    }

    pub fn view(&self) -> Result<SessionView, ApiError> {
        let (recommendation, policy) = if self.alive {
            (
                Some(recommendation(&self.instance, &self.reputation, self.round)?),
                Some(remaining_policy(&self.instance, &self.reputation, self.round)?),
            )
        } else {
            (None, None)
        };
        Ok(SessionView {
            state: self.clone(),
            recommendation,
            policy,
        })
    }

    /// Recomputes advice under another reputation without touching the session.
    pub fn what_if(&self, rep: &Reputation) -> Result<WhatIf, ApiError> {
        if !self.alive {
            return Err(ApiError::SessionEnded(self.id.clone()));
        }
        rep.check_for(&self.instance)?;
        Ok(WhatIf {
            round: self.round,
            reputation: rep.clone(),
            policy: remaining_policy(&self.instance, rep, self.round)?,
            recommendation: recommendation(&self.instance, rep, self.round)?,
        })
    }

    /// Draw stream for the k-th decision; replaying decisions replays draws.
    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.history.len() as u64);
        rng
    }

    fn finish(&mut self, status: Status, victim_loss: f64, attacker_profit: f64) {
        self.alive = false;
        self.status = status;
        self.realized_victim_loss = Some(victim_loss);
        self.realized_attacker_profit = Some(attacker_profit);
    }

    pub fn decide(&mut self, decision: Decision) -> Result<&HistoryEntry, ApiError> {
        if !self.alive {
            return Err(ApiError::SessionEnded(self.id.clone()));
        }
        let inst = self.instance.clone();
        let t = self.round;
        let n = inst.rounds();
        let key_back = t >= 2;
        let recovered = if key_back { inst.data_value } else { 0.0 };
        let cost = if key_back { inst.recovery_cost } else { 0.0 };
        let mut draws = Vec::new();
        let mut key_returned = None;
        let mut sold = false;
        match decision {
            Decision::Abort => {
                let loss = self.ransom_paid - recovered + inst.loss(t);
                let profit = self.ransom_paid + inst.sale(t) - cost;
                self.finish(Status::Aborted, loss, profit);
                sold = true;
            }
            Decision::Pay => {
                let mut rng = self.rng();
                self.ransom_paid += inst.ransom(t);
                if t == 1 {
                    let u: f64 = rng.random();
                    draws.push(u);
                    let back = u < self.reputation.beta_r;
                    key_returned = Some(back);
                    if !back {
                        let (paid, l1, a1) = (self.ransom_paid, inst.loss(1), inst.sale(1));
                        self.finish(Status::KeyWithheld, paid + l1, paid + a1);
                    }
                }
                if self.alive {
                    let u: f64 = rng.random();
                    draws.push(u);
                    let (paid, v, cr) = (self.ransom_paid, inst.data_value, inst.recovery_cost);
                    if u < self.reputation.beta(t) {
                        sold = true;
                        let (l, a) = (inst.loss(t), inst.sale(t));
                        self.finish(Status::DataSold, paid - v + l, paid + a - cr);
                    } else if t == n {
                        self.finish(Status::Completed, paid - v, paid - cr);
                    } else {
                        self.round += 1;
                    }
                }
            }
        }
        self.history.push(HistoryEntry {
            round: t,
            decision,
            key_returned,
            sold,
            status_after: self.status,
            draws,
        });
        Ok(self.history.last().expect("just pushed"))
    }
}
