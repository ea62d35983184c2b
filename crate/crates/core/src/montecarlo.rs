//! Seeded scenario studies over populations of victims.
//!
//! Each victim draws its data value and decay profile from its own ChaCha
//! stream `(seed, victim index)`, so results do not depend on how work is
//! split across threads. Per-victim figures are expected values from the
//! outcome tree, not single sampled plays.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AbortRound, Decay, GameInstance, RansomSchedule, Reputation, DEFAULT_SALE_RATIO};
use crate::par;
use crate::reputation::{fmt_money, optimal_reputation};
use crate::strategy::{profit_tree, victim_policy_unchecked, ProfitBreakdown};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReputationMode {
    Worst,
    PerfectSingle,
    PerfectMulti,
    OptimalMulti,
}

impl ReputationMode {
    pub const ALL: [ReputationMode; 4] = [
        ReputationMode::Worst,
        ReputationMode::PerfectSingle,
        ReputationMode::PerfectMulti,
        ReputationMode::OptimalMulti,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReputationMode::Worst => "WORST",
            ReputationMode::PerfectSingle => "PERFECT_SINGLE",
            ReputationMode::PerfectMulti => "PERFECT_MULTI",
            ReputationMode::OptimalMulti => "OPTIMAL_MULTI",
        }
    }
}

impl std::str::FromStr for ReputationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| Error::Scenario(format!("unknown reputation mode {s:?}")))
    }
}

/// Uniform distribution of data values on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueDistribution {
    pub lo: f64,
    pub hi: f64,
}

impl ValueDistribution {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

fn default_fraction() -> f64 {
    0.5
}

fn default_sale_ratio() -> f64 {
    DEFAULT_SALE_RATIO
}

fn default_decay_mix() -> Vec<Decay> {
    Decay::BUILT_IN.to_vec()
}

fn default_mode() -> ReputationMode {
    ReputationMode::PerfectMulti
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub rounds: usize,
    pub total_ransom: f64,
    #[serde(default = "default_fraction")]
    pub first_round_fraction: f64,
    pub victim_count: usize,
    pub value_distribution: ValueDistribution,
    #[serde(default = "default_decay_mix")]
    pub decay_mix: Vec<Decay>,
    #[serde(default = "default_sale_ratio")]
    pub sale_ratio: f64,
    #[serde(default)]
    pub recovery_cost: f64,
    #[serde(default = "default_mode")]
    pub reputation_mode: ReputationMode,
    #[serde(default)]
    pub seed: u64,
    /// Rounds the victim keeps paying after an undetected sale.
    #[serde(default)]
    pub detection_lag: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_margin: Option<f64>,
    /// Free-form remarks carried along with presets.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if !(self.first_round_fraction > 0.0 && self.first_round_fraction <= 1.0) {
            return bad(format!(
                "first_round_fraction {} is outside (0, 1]",
                self.first_round_fraction
            ));
        }
        if self.rounds > 1 && self.first_round_fraction == 1.0 {
            return bad("first_round_fraction 1 leaves later rounds without ransom".into());
        }
        if self.victim_count == 0 {
            return bad("victim_count must be at least 1".into());
        }
        let d = self.value_distribution;
        if !(d.lo.is_finite() && d.hi.is_finite()) || d.lo < 0.0 {
            return bad("value distribution bounds must be finite and non-negative".into());
        }
        if d.hi < d.lo {
            return bad(format!("value distribution has hi {} < lo {}", d.hi, d.lo));
        }
        if self.decay_mix.is_empty() {
            return bad("decay_mix must not be empty".into());
        }
        for decay in &self.decay_mix {
            decay.validate()?;
        }
        if !(0.0..=1.0).contains(&self.sale_ratio) {
            return bad(format!("sale_ratio {} is outside [0, 1]", self.sale_ratio));
        }
        if !(self.total_ransom.is_finite() && self.total_ransom > 0.0) {
            return bad("total_ransom must be positive".into());
        }
        if !(self.recovery_cost.is_finite() && self.recovery_cost >= 0.0) {
            return bad("recovery_cost must be non-negative".into());
        }
        Ok(())
    }

    pub fn with_mode(&self, mode: ReputationMode) -> Self {
        Self {
            reputation_mode: mode,
            ..self.clone()
        }
    }

    fn schedule(&self) -> RansomSchedule {
        RansomSchedule::FirstFraction(self.first_round_fraction)
    }
}

/// Data value and decay profile of one victim; identical across modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VictimDraw {
    pub victim_id: usize,
    pub data_value: f64,
    pub decay: Decay,
}

pub fn draw_victim(cfg: &ScenarioConfig, victim_id: usize) -> VictimDraw {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(victim_id as u64);
    let data_value = cfg.value_distribution.sample(&mut rng);
    let decay = cfg.decay_mix[rng.random_range(0..cfg.decay_mix.len())].clone();
    VictimDraw {
        victim_id,
        data_value,
        decay,
    }
}

/// The multi-round instance faced by a victim.
pub fn victim_instance(cfg: &ScenarioConfig, draw: &VictimDraw) -> Result<GameInstance> {
    let ransoms = cfg.schedule().amounts(cfg.total_ransom, cfg.rounds, draw.data_value)?;
    GameInstance::from_decay(ransoms, draw.data_value, cfg.recovery_cost, &draw.decay, cfg.sale_ratio)
}

/// The whole demand collected in one round, with the first-round loss and
/// sale value of the multi-round instance.
pub fn single_round_instance(inst: &GameInstance) -> GameInstance {
    GameInstance {
        n: 1,
        ransoms: vec![inst.total_ransom()],
        data_value: inst.data_value,
        recovery_cost: inst.recovery_cost,
        losses: vec![inst.loss(1)],
        sale_profits: vec![inst.sale(1)],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VictimRecord {
    pub victim_id: usize,
    pub data_value: f64,
    pub decay: String,
    pub mode: ReputationMode,
    pub abort_round: AbortRound,
    /// Rounds paid under the victim's plan.
    pub rounds_paid: usize,
    pub profit: f64,
    pub loss: f64,
    /// Expected attacker profit accrued per round, padded to the scenario's rounds.
    pub per_round_profit: Vec<f64>,
    pub reputation: Reputation,
}

/// Extra ransom collected when a sale after payment goes unnoticed for `lag` rounds.
fn lagged_payments(
    inst: &GameInstance,
    rep: &Reputation,
    bd: &ProfitBreakdown,
    abort: AbortRound,
    lag: usize,
) -> Vec<f64> {
    let n = inst.rounds();
    let last_planned = abort.index(n) - 1;
    let mut extra = vec![0.0; n];
    if lag == 0 || last_planned < 2 {
        return extra;
    }
    for i in 1..last_planned {
        // probability of a sale right after paying round i with the key returned
        let p = bd.payment_probability[i - 1] * if i == 1 { rep.beta_r } else { 1.0 } * rep.beta(i);
        for j in i + 1..=(i + lag).min(last_planned) {
            extra[j - 1] += p * inst.ransom(j);
        }
    }
    extra
}

pub fn evaluate_victim(cfg: &ScenarioConfig, draw: &VictimDraw) -> Result<VictimRecord> {
    let inst = victim_instance(cfg, draw)?;
    let (game, rep) = match cfg.reputation_mode {
        ReputationMode::Worst => (inst.clone(), Reputation::worst(inst.rounds())),
        ReputationMode::PerfectMulti => (inst.clone(), Reputation::perfect(inst.rounds())),
        ReputationMode::PerfectSingle => (single_round_instance(&inst), Reputation::perfect(1)),
        ReputationMode::OptimalMulti => {
            let best = optimal_reputation(&inst, cfg.epsilon_margin)?;
            (inst.clone(), best.reputation)
        }
    };
    let policy = victim_policy_unchecked(&game, &rep);
    let bd = profit_tree(&game, &rep, policy.abort_round);
    let extra = lagged_payments(&game, &rep, &bd, policy.abort_round, cfg.detection_lag);
    let extra_total: f64 = extra.iter().sum();
    let mut per_round = vec![0.0; cfg.rounds];
    for (i, (p, e)) in bd.per_round_profit.iter().zip(&extra).enumerate() {
        per_round[i] = p + e;
    }
    Ok(VictimRecord {
        victim_id: draw.victim_id,
        data_value: draw.data_value,
        decay: draw.decay.name().to_string(),
        mode: cfg.reputation_mode,
        abort_round: policy.abort_round,
        rounds_paid: policy.abort_round.paid_rounds(game.rounds()),
        profit: bd.expected_profit + extra_total,
        loss: policy.expected_loss + extra_total,
        per_round_profit: per_round,
        reputation: rep,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub mode: ReputationMode,
    pub victims: Vec<VictimRecord>,
    /// Cumulative attacker profit summed over victims after each round.
    pub cumulative_profit: Vec<f64>,
    pub total_profit: f64,
    pub mean_profit: f64,
    pub total_loss: f64,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    let victims = par::map_indexed(cfg.victim_count, |i| evaluate_victim(cfg, &draw_victim(cfg, i)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut per_round = vec![0.0; cfg.rounds];
    let mut total_profit = 0.0;
    let mut total_loss = 0.0;
    for v in &victims {
        total_profit += v.profit;
        total_loss += v.loss;
        for (acc, p) in per_round.iter_mut().zip(&v.per_round_profit) {
            *acc += p;
        }
    }
    let mut running = 0.0;
    let cumulative_profit = per_round
        .iter()
        .map(|p| {
            running += p;
            running
        })
        .collect();
    Ok(ScenarioResult {
        mode: cfg.reputation_mode,
        mean_profit: total_profit / victims.len() as f64,
        victims,
        cumulative_profit,
        total_profit,
        total_loss,
    })
}

/// Runs each mode on the same victim draws.
pub fn compare_scenarios(base: &ScenarioConfig, modes: &[ReputationMode]) -> Result<Vec<ScenarioResult>> {
    if modes.is_empty() {
        return Err(Error::Scenario("no reputation modes given".into()));
    }
    modes.iter().map(|m| run_scenario(&base.with_mode(*m))).collect()
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Csv(e.to_string())
}

/// `victims.csv`: one row per victim and mode.
pub fn write_victims_csv<W: Write>(results: &[ScenarioResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "victim_id",
        "data_value",
        "decay",
        "mode",
        "abort_round",
        "profit",
        "loss",
    ])
    .map_err(csv_err)?;
    for r in results {
        for v in &r.victims {
            w.write_record([
                v.victim_id.to_string(),
                fmt_money(v.data_value),
                v.decay.clone(),
                v.mode.as_str().to_string(),
                v.abort_round.to_string(),
                fmt_money(v.profit),
                fmt_money(v.loss),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

/// `rounds.csv`: cumulative attacker profit after each round.
pub fn write_rounds_csv<W: Write>(results: &[ScenarioResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mode", "round", "cumulative_profit"])
        .map_err(csv_err)?;
    for r in results {
        for (i, c) in r.cumulative_profit.iter().enumerate() {
            w.write_record([r.mode.as_str().to_string(), (i + 1).to_string(), fmt_money(*c)])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

fn default_gamma() -> f64 {
    0.1
}

fn default_schedule() -> RansomSchedule {
    RansomSchedule::FirstFraction(0.5)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub data_value: f64,
    pub rounds: usize,
    pub decay: Decay,
    #[serde(default = "default_sale_ratio")]
    pub sale_ratio: f64,
    #[serde(default)]
    pub recovery_cost: f64,
    pub ransom_grid: Vec<f64>,
    #[serde(default = "default_schedule")]
    pub schedule: RansomSchedule,
    /// Only used for the lower-bound column of the profit sweep.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SweepConfig {
    pub fn instance(&self, total: f64) -> Result<GameInstance> {
        let ransoms = self.schedule.amounts(total, self.rounds, self.data_value)?;
        GameInstance::from_decay(
            ransoms,
            self.data_value,
            self.recovery_cost,
            &self.decay,
            self.sale_ratio,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReputationSweepRow {
    pub total_ransom: f64,
    /// Probability of returning the data.
    pub beta_r: f64,
    pub betas: Vec<f64>,
    /// Probability of keeping the data confidential in each round, `1 - beta_i`.
    pub confidentiality: Vec<f64>,
    pub expected_profit: f64,
    pub case_k: Option<usize>,
    pub fallback: bool,
}

pub fn reputation_sweep(cfg: &SweepConfig) -> Result<Vec<ReputationSweepRow>> {
    par::map_indexed(cfg.ransom_grid.len(), |i| {
        let total = cfg.ransom_grid[i];
        let inst = cfg.instance(total)?;
        let best = optimal_reputation(&inst, cfg.epsilon_margin)?;
        Ok(ReputationSweepRow {
            total_ransom: total,
            beta_r: best.reputation.beta_r,
            confidentiality: best.reputation.betas.iter().map(|b| 1.0 - b).collect(),
            betas: best.reputation.betas,
            expected_profit: best.expected_profit,
            case_k: best.case_k,
            fallback: best.fallback,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfitSweepRow {
    pub total_ransom: f64,
    pub expected_profit: f64,
    /// `(1 - gamma) V + A_1 - C_r`; does not depend on the total ransom.
    pub bound: f64,
}

pub fn expected_profit_sweep(cfg: &SweepConfig) -> Result<Vec<ProfitSweepRow>> {
    par::map_indexed(cfg.ransom_grid.len(), |i| {
        let total = cfg.ransom_grid[i];
        let inst = cfg.instance(total)?;
        let best = optimal_reputation(&inst, cfg.epsilon_margin)?;
        Ok(ProfitSweepRow {
            total_ransom: total,
            expected_profit: best.expected_profit,
            bound: (1.0 - cfg.gamma) * cfg.data_value + inst.sale(1) - cfg.recovery_cost,
        })
    })
    .into_iter()
    .collect()
}

/// `sweep.csv` in long form: `x, series, value`.
pub fn write_reputation_sweep_csv<W: Write>(rows: &[ReputationSweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "series", "value"]).map_err(csv_err)?;
    for r in rows {
        let x = fmt_money(r.total_ransom);
        w.write_record([x.clone(), "beta_r".into(), fmt_money(r.beta_r)])
            .map_err(csv_err)?;
        for (i, c) in r.confidentiality.iter().enumerate() {
            w.write_record([x.clone(), format!("keep_{}", i + 1), fmt_money(*c)])
                .map_err(csv_err)?;
        }
        w.write_record([x, "expected_profit".into(), fmt_money(r.expected_profit)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn write_profit_sweep_csv<W: Write>(rows: &[ProfitSweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "series", "value"]).map_err(csv_err)?;
    for r in rows {
        let x = fmt_money(r.total_ransom);
        w.write_record([x.clone(), "expected_profit".into(), fmt_money(r.expected_profit)])
            .map_err(csv_err)?;
        w.write_record([x, "bound".into(), fmt_money(r.bound)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: ReputationMode) -> ScenarioConfig {
        ScenarioConfig {
            rounds: 8,
            total_ransom: 1000.0,
            first_round_fraction: 0.25,
            victim_count: 40,
            value_distribution: ValueDistribution { lo: 250.0, hi: 350.0 },
            decay_mix: default_decay_mix(),
            sale_ratio: 0.7,
            recovery_cost: 0.0,
            reputation_mode: mode,
            seed: 7,
            detection_lag: 0,
            epsilon_margin: None,
            notes: Vec::new(),
        }
    }

    #[test]
    fn worst_mode_collects_first_sale_only() {
        let c = cfg(ReputationMode::Worst);
        let r = run_scenario(&c).unwrap();
        let mut expected = 0.0;
        for v in &r.victims {
            let inst = victim_instance(&c, &draw_victim(&c, v.victim_id)).unwrap();
            assert_eq!(v.profit, inst.sale(1));
            expected += inst.sale(1);
        }
        assert_eq!(r.total_profit, expected);
    }

    #[test]
    fn total_is_sum_of_victims() {
        let r = run_scenario(&cfg(ReputationMode::PerfectMulti)).unwrap();
        let mut s = 0.0;
        for v in &r.victims {
            s += v.profit;
        }
        assert_eq!(r.total_profit, s);
        assert!(r.cumulative_profit.windows(2).all(|w| w[1] >= w[0]));
        assert!((r.cumulative_profit.last().unwrap() - r.total_profit).abs() < 1e-6);
    }

    #[test]
    fn modes_share_draws() {
        let res = compare_scenarios(&cfg(ReputationMode::Worst), &ReputationMode::ALL).unwrap();
        for r in &res[1..] {
            for (a, b) in r.victims.iter().zip(&res[0].victims) {
                assert_eq!(a.data_value, b.data_value);
                assert_eq!(a.decay, b.decay);
            }
        }
    }

    #[test]
    fn single_round_profit_is_all_or_first_sale() {
        let c = cfg(ReputationMode::PerfectSingle);
        let r = run_scenario(&c).unwrap();
        for v in &r.victims {
            let inst = victim_instance(&c, &draw_victim(&c, v.victim_id)).unwrap();
            assert!(v.profit == inst.sale(1) || v.profit == c.total_ransom - c.recovery_cost);
        }
    }

    #[test]
    fn degenerate_distribution_matches_direct_call() {
        let mut c = cfg(ReputationMode::PerfectMulti);
        c.victim_count = 1;
        c.value_distribution = ValueDistribution { lo: 300.0, hi: 300.0 };
        c.decay_mix = vec![Decay::Linear];
        let r = run_scenario(&c).unwrap();
        let inst = GameInstance::from_decay(
            RansomSchedule::FirstFraction(0.25).amounts(1000.0, 8, 300.0).unwrap(),
            300.0,
            0.0,
            &Decay::Linear,
            0.7,
        )
        .unwrap();
        let rep = Reputation::perfect(8);
        let p = crate::strategy::victim_policy(&inst, &rep).unwrap();
        let bd = crate::strategy::attacker_expected_profit(&inst, &rep, &p).unwrap();
        assert_eq!(r.total_profit, bd.expected_profit);
        assert_eq!(r.victims[0].abort_round, p.abort_round);
    }

    #[test]
    fn invalid_distribution() {
        let mut c = cfg(ReputationMode::Worst);
        c.value_distribution = ValueDistribution { lo: 5.0, hi: 1.0 };
        assert!(matches!(run_scenario(&c), Err(Error::Scenario(_))));
    }

    #[test]
    fn detection_lag_adds_ransom_after_sales() {
        let mut c = cfg(ReputationMode::OptimalMulti);
        c.victim_count = 5;
        let base = run_scenario(&c).unwrap();
        c.detection_lag = 2;
        let lagged = run_scenario(&c).unwrap();
        assert!(lagged.total_profit >= base.total_profit);
    }

    #[test]
    fn sweep_shapes() {
        let s = SweepConfig {
            data_value: 500.0,
            rounds: 6,
            decay: Decay::Quadratic,
            sale_ratio: 0.7,
            recovery_cost: 0.0,
            ransom_grid: vec![800.0],
            schedule: default_schedule(),
            gamma: 0.1,
            epsilon_margin: None,
            notes: Vec::new(),
        };
        assert_eq!(reputation_sweep(&s).unwrap().len(), 1);
        let rows = expected_profit_sweep(&SweepConfig {
            ransom_grid: vec![600.0, 900.0, 1200.0],
            ..s.clone()
        })
        .unwrap();
        assert!(rows.windows(2).all(|w| w[0].bound == w[1].bound));
        let empty = expected_profit_sweep(&SweepConfig {
            ransom_grid: vec![],
            ..s
        })
        .unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "optimal-multi".parse::<ReputationMode>().unwrap(),
            ReputationMode::OptimalMulti
        );
        assert!("best".parse::<ReputationMode>().is_err());
    }
}
