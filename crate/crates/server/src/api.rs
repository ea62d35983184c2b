//! Request bodies and the pure handlers behind them.

use std::collections::BTreeMap;

use ransomgame_core::montecarlo::{
    compare_scenarios, expected_profit_sweep, reputation_sweep, write_profit_sweep_csv, write_reputation_sweep_csv,
    write_rounds_csv, write_victims_csv, ReputationMode, ScenarioConfig, SweepConfig,
};
use ransomgame_core::strategy::{attacker_expected_profit, ProfitBreakdown, VictimPolicy};
use ransomgame_core::{optimal_reputation, GameInstance, InstanceSpec, OptimalReputationResult, Reputation};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{parse_json, ApiError};
use crate::session::{recommendation, remaining_policy, Recommendation};

pub const MAX_VICTIMS: usize = 100_000;
pub const MAX_ROUNDS: usize = 64;
pub const MAX_SWEEP_POINTS: usize = 2_000;

/// A reputation given by name, as `[beta_r, beta_1, ...]`, or as an object.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ReputationInput {
    Named(String),
    Components(Vec<f64>),
    Explicit(Reputation),
}

impl ReputationInput {
    pub fn resolve(&self, inst: &GameInstance) -> Result<Reputation, ApiError> {
        let n = inst.rounds();
        let rep = match self {
            ReputationInput::Named(name) => match name.to_ascii_lowercase().as_str() {
                "perfect" => Reputation::perfect(n),
                "worst" => Reputation::worst(n),
                other => {
                    return Err(ApiError::invalid(
                        "reputation",
                        format!("unknown reputation {other:?}; expected perfect, worst, a list or an object"),
                    ))
                }
            },
            ReputationInput::Components(v) => Reputation::from_components(v)?,
            ReputationInput::Explicit(r) => r.clone(),
        };
        rep.check_for(inst)
            .map_err(|e| ApiError::invalid("reputation", e.to_string()))?;
        Ok(rep)
    }
}

pub fn build_instance(spec: &InstanceSpec) -> Result<GameInstance, ApiError> {
    let inst = spec.build().map_err(|v| ApiError::Invalid(v).nest("instance"))?;
    if inst.rounds() > MAX_ROUNDS {
        return Err(ApiError::invalid(
            "instance.n",
            format!("at most {MAX_ROUNDS} rounds are supported"),
        ));
    }
    Ok(inst)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    pub instance: InstanceSpec,
    pub reputation: ReputationInput,
    /// Solve the subgame starting here, the key already returned when >= 2.
    #[serde(default)]
    pub from_round: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct SolveResponse {
    pub instance: GameInstance,
    pub reputation: Reputation,
    pub from_round: usize,
    pub policy: VictimPolicy,
    pub recommendation: Recommendation,
    /// Attacker profit along the outcome tree; only for the full game.
    pub breakdown: Option<ProfitBreakdown>,
}

pub fn solve(body: &[u8]) -> Result<SolveResponse, ApiError> {
    let req: SolveRequest = parse_json(body)?;
    let inst = build_instance(&req.instance)?;
    let rep = req.reputation.resolve(&inst)?;
    let from = req.from_round.unwrap_or(1);
    if from == 0 || from > inst.rounds() {
        return Err(ApiError::invalid(
            "from_round",
            format!("must lie in 1..={}", inst.rounds()),
        ));
    }
    let policy = remaining_policy(&inst, &rep, from)?;
    let breakdown = if from == 1 {
        Some(attacker_expected_profit(&inst, &rep, &policy)?)
    } else {
        None
    };
    Ok(SolveResponse {
        recommendation: recommendation(&inst, &rep, from)?,
        instance: inst,
        reputation: rep,
        from_round: from,
        policy,
        breakdown,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeRequest {
    pub instance: InstanceSpec,
    #[serde(default)]
    pub epsilon_margin: Option<f64>,
}

pub fn optimize(body: &[u8]) -> Result<OptimalReputationResult, ApiError> {
    let req: OptimizeRequest = parse_json(body)?;
    let inst = build_instance(&req.instance)?;
    if let Some(e) = req.epsilon_margin {
        if !(e.is_finite() && e >= 0.0) {
            return Err(ApiError::invalid("epsilon_margin", "must be finite and non-negative"));
        }
    }
    Ok(optimal_reputation(&inst, req.epsilon_margin)?)
}

/// CSV outputs kept in memory and served under `/v1/artifacts`.
pub type Artifacts = BTreeMap<String, String>;

fn artifact_id(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(&h.finalize()[..8])
}

#[derive(Debug, Serialize)]
pub struct ModeSummary {
    pub mode: ReputationMode,
    pub total_profit: f64,
    pub mean_profit: f64,
    pub total_loss: f64,
    pub cumulative_profit: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct SimulateResponse {
    pub id: String,
    pub scenario: ScenarioConfig,
    pub results: Vec<ModeSummary>,
    /// Artifact name to URL.
    pub artifacts: BTreeMap<String, String>,
}

/// The body is a scenario config with an optional extra `modes` list.
pub fn simulate(body: &[u8]) -> Result<(SimulateResponse, Artifacts), ApiError> {
    let mut value: serde_json::Value = parse_json(body)?;
    let modes = match value.as_object_mut().and_then(|o| o.remove("modes")) {
        Some(m) => {
            serde_json::from_value::<Vec<ReputationMode>>(m).map_err(|e| ApiError::invalid("modes", e.to_string()))?
        }
        None => Vec::new(),
    };
    let cfg: ScenarioConfig = parse_json(&serde_json::to_vec(&value).expect("value serializes"))?;
    cfg.validate()?;
    if cfg.victim_count > MAX_VICTIMS {
        return Err(ApiError::invalid("victim_count", format!("at most {MAX_VICTIMS}")));
    }
    if cfg.rounds > MAX_ROUNDS {
        return Err(ApiError::invalid("rounds", format!("at most {MAX_ROUNDS}")));
    }
    let modes = if modes.is_empty() {
        vec![cfg.reputation_mode]
    } else {
        modes
    };
    let results = compare_scenarios(&cfg, &modes)?;

    let canonical = serde_json::to_vec(&(&cfg, &modes)).expect("config serializes");
    let id = artifact_id(&[b"simulate", &canonical]);
    let mut victims = Vec::new();
    write_victims_csv(&results, &mut victims)?;
    let mut rounds = Vec::new();
    write_rounds_csv(&results, &mut rounds)?;
    let mut store = Artifacts::new();
    let mut urls = BTreeMap::new();
    for (name, bytes) in [("victims.csv", victims), ("rounds.csv", rounds)] {
        store.insert(format!("{id}/{name}"), String::from_utf8(bytes).expect("csv is utf-8"));
        urls.insert(name.to_string(), format!("/v1/artifacts/{id}/{name}"));
    }
    let summaries = results
        .into_iter()
        .map(|r| ModeSummary {
            mode: r.mode,
            total_profit: r.total_profit,
            mean_profit: r.mean_profit,
            total_loss: r.total_loss,
            cumulative_profit: r.cumulative_profit,
        })
        .collect();
    Ok((
        SimulateResponse {
            id,
            scenario: cfg,
            results: summaries,
            artifacts: urls,
        },
        store,
    ))
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Reputation,
    Profit,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub kind: SweepKind,
    pub config: SweepConfig,
}

#[derive(Debug, Serialize)]
pub struct SweepResponse {
    pub id: String,
    pub kind: SweepKind,
    pub rows: serde_json::Value,
    pub artifacts: BTreeMap<String, String>,
}

pub fn sweep(body: &[u8]) -> Result<(SweepResponse, Artifacts), ApiError> {
    let req: SweepRequest = parse_json(body)?;
    let cfg = &req.config;
    if cfg.ransom_grid.is_empty() || cfg.ransom_grid.len() > MAX_SWEEP_POINTS {
        return Err(ApiError::invalid(
            "config.ransom_grid",
            format!("needs 1..={MAX_SWEEP_POINTS} points"),
        ));
    }
    if cfg.rounds == 0 || cfg.rounds > MAX_ROUNDS {
        return Err(ApiError::invalid(
            "config.rounds",
            format!("must lie in 1..={MAX_ROUNDS}"),
        ));
    }
    let mut csv = Vec::new();
    let rows = match req.kind {
        SweepKind::Reputation => {
            let rows = reputation_sweep(cfg).map_err(|e| ApiError::from(e).nest("config"))?;
            write_reputation_sweep_csv(&rows, &mut csv)?;
            serde_json::to_value(rows)
        }
        SweepKind::Profit => {
            let rows = expected_profit_sweep(cfg).map_err(|e| ApiError::from(e).nest("config"))?;
            write_profit_sweep_csv(&rows, &mut csv)?;
            serde_json::to_value(rows)
        }
    }
    .map_err(|e| ApiError::Internal(e.to_string()))?;
    let canonical = serde_json::to_vec(&(req.kind, cfg)).expect("config serializes");
    let id = artifact_id(&[b"sweep", &canonical]);
    let mut store = Artifacts::new();
    store.insert(format!("{id}/sweep.csv"), String::from_utf8(csv).expect("csv is utf-8"));
    let artifacts = BTreeMap::from([("sweep.csv".to_string(), format!("/v1/artifacts/{id}/sweep.csv"))]);
    Ok((
        SweepResponse {
            id,
            kind: req.kind,
            rows,
            artifacts,
        },
        store,
    ))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub instance: InstanceSpec,
    pub reputation: ReputationInput,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub action: crate::session::Decision,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub reputation: ReputationInput,
}
