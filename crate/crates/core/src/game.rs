//! Economic parameters of one attack and the attacker reputation vector.
//!
//! Rounds are numbered from 1 in every public API. Vectors are stored
//! 0-based, so round `i` lives at index `i - 1`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default fraction of the leakage loss the attacker can realize by selling.
pub const DEFAULT_SALE_RATIO: f64 = 0.7;

/// Shape of the remaining confidentiality value over normalized time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    /// f(x) = (1 - x)^2
    Quadratic,
    /// f(x) = 1 - x
    Linear,
    /// f(x) = sqrt(1 - x^2)
    Circular,
    /// f sampled at evenly spaced points of [0, 1], linearly interpolated.
    Custom(Vec<f64>),
}

impl Decay {
    pub const BUILT_IN: [Decay; 3] = [Decay::Quadratic, Decay::Linear, Decay::Circular];

    pub fn name(&self) -> &'static str {
        match self {
            Decay::Quadratic => "quadratic",
            Decay::Linear => "linear",
            Decay::Circular => "circular",
            Decay::Custom(_) => "custom",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Decay::Custom(table) = self else {
            return Ok(());
        };
        if table.len() < 2 {
            return Err(Error::DecayTable("needs at least two samples".into()));
        }
        if let Some(i) = table.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::DecayTable(format!("sample {i} is negative or not finite")));
        }
        if let Some(i) = table.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::DecayTable(format!(
                "table increases between samples {i} and {}",
                i + 1
            )));
        }
        Ok(())
    }

    /// Remaining value fraction at normalized time `x` in [0, 1].
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Decay::Quadratic => (1.0 - x) * (1.0 - x),
            Decay::Linear => 1.0 - x,
            Decay::Circular => (1.0 - x * x).max(0.0).sqrt(),
            Decay::Custom(table) => {
                let segments = (table.len() - 1) as f64;
                let pos = x * segments;
                let lo = (pos.floor() as usize).min(table.len() - 2);
                let frac = pos - lo as f64;
                table[lo] + (table[lo + 1] - table[lo]) * frac
            }
        }
    }
}

impl fmt::Display for Decay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Leakage losses `L_i = f(i/n) V` and sale profits `A_i = sale_ratio * L_i`.
pub fn build_profiles(data_value: f64, rounds: usize, decay: &Decay, sale_ratio: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if rounds == 0 {
        return Err(Error::ZeroRounds);
    }
    if !(data_value.is_finite() && data_value >= 0.0) {
        return Err(Error::InvalidInstance(vec![Violation::new(
            "data_value",
            "must be finite and non-negative",
        )]));
    }
    check_probability("sale_ratio", sale_ratio)?;
    decay.validate()?;
    let losses: Vec<f64> = (1..=rounds)
        .map(|i| decay.eval(i as f64 / rounds as f64) * data_value)
        .collect();
    let sales = losses.iter().map(|l| sale_ratio * l).collect();
    Ok((losses, sales))
}

/// How a total ransom is split over the rounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RansomSchedule {
    /// First round takes `fraction` of the total, the rest is split evenly.
    FirstFraction(f64),
    /// First round is `(1 - gamma) V`, the rest of the total is split evenly.
    FirstBelowValue { gamma: f64 },
}

impl RansomSchedule {
    pub fn amounts(&self, total: f64, rounds: usize, data_value: f64) -> Result<Vec<f64>> {
        if rounds == 0 {
            return Err(Error::ZeroRounds);
        }
        let first = match *self {
            RansomSchedule::FirstFraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::Scenario(format!("first_round_fraction {f} is outside (0, 1]")));
                }
                if rounds == 1 {
                    total
                } else {
                    f * total
                }
            }
            RansomSchedule::FirstBelowValue { gamma } => {
                if rounds == 1 {
                    total
                } else {
                    (1.0 - gamma) * data_value
                }
            }
        };
        let mut out = Vec::with_capacity(rounds);
        out.push(first);
        if rounds > 1 {
            let rest = (total - first) / (rounds - 1) as f64;
            out.extend(std::iter::repeat_n(rest, rounds - 1));
        }
        Ok(out)
    }
}

/// One violated invariant, addressed by a JSON-style field path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// All economic parameters of one attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameInstance {
    pub n: usize,
    pub ransoms: Vec<f64>,
    pub data_value: f64,
    #[serde(default)]
    pub recovery_cost: f64,
    pub losses: Vec<f64>,
    pub sale_profits: Vec<f64>,
}

impl GameInstance {
    /// Builds and validates an instance.
    pub fn new(
        ransoms: Vec<f64>,
        data_value: f64,
        recovery_cost: f64,
        losses: Vec<f64>,
        sale_profits: Vec<f64>,
    ) -> Result<Self> {
        let inst = Self {
            n: ransoms.len(),
            ransoms,
            data_value,
            recovery_cost,
            losses,
            sale_profits,
        };
        inst.check()?;
        Ok(inst)
    }

    /// Instance whose losses and sale profits come from a decay profile.
    pub fn from_decay(
        ransoms: Vec<f64>,
        data_value: f64,
        recovery_cost: f64,
        decay: &Decay,
        sale_ratio: f64,
    ) -> Result<Self> {
        let (losses, sales) = build_profiles(data_value, ransoms.len(), decay, sale_ratio)?;
        Self::new(ransoms, data_value, recovery_cost, losses, sales)
    }

    pub fn rounds(&self) -> usize {
        self.n
    }

    /// `R_round`; zero past the last round.
    pub fn ransom(&self, round: usize) -> f64 {
        self.ransoms.get(round - 1).copied().unwrap_or(0.0)
    }

    /// `L_round`, with `L_{n+1} = 0` (no confidentiality value after the game).
    pub fn loss(&self, round: usize) -> f64 {
        self.losses.get(round - 1).copied().unwrap_or(0.0)
    }

    /// `A_round`, with `A_{n+1} = 0`.
    pub fn sale(&self, round: usize) -> f64 {
        self.sale_profits.get(round - 1).copied().unwrap_or(0.0)
    }

    pub fn total_ransom(&self) -> f64 {
        self.ransoms.iter().sum()
    }

    pub fn check(&self) -> Result<()> {
        let v = validate_instance(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(v))
        }
    }

    /// Multiplies every monetary quantity by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| x * c).collect();
        Self {
            n: self.n,
            ransoms: s(&self.ransoms),
            data_value: self.data_value * c,
            recovery_cost: self.recovery_cost * c,
            losses: s(&self.losses),
            sale_profits: s(&self.sale_profits),
        }
    }
}

/// Returns every violated invariant; an empty list means the instance is valid.
pub fn validate_instance(inst: &GameInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    if inst.n == 0 {
        out.push(Violation::new("n", "round count must be at least 1"));
    }
    let non_negative = |out: &mut Vec<Violation>, path: String, v: f64| {
        if !v.is_finite() {
            out.push(Violation::new(path, "must be finite"));
        } else if v < 0.0 {
            out.push(Violation::new(path, "must be non-negative"));
        }
    };
    for (name, vec) in [
        ("ransoms", &inst.ransoms),
        ("losses", &inst.losses),
        ("sale_profits", &inst.sale_profits),
    ] {
        if vec.len() != inst.n {
            out.push(Violation::new(
                name,
                format!("expected {} entries, found {}", inst.n, vec.len()),
            ));
        }
    }
    for (i, r) in inst.ransoms.iter().enumerate() {
        if !r.is_finite() {
            out.push(Violation::new(format!("ransoms[{i}]"), "must be finite"));
        } else if *r <= 0.0 {
            out.push(Violation::new(format!("ransoms[{i}]"), "ransom must be positive"));
        }
    }
    non_negative(&mut out, "data_value".into(), inst.data_value);
    non_negative(&mut out, "recovery_cost".into(), inst.recovery_cost);
    for (i, l) in inst.losses.iter().enumerate() {
        non_negative(&mut out, format!("losses[{i}]"), *l);
    }
    for (i, a) in inst.sale_profits.iter().enumerate() {
        non_negative(&mut out, format!("sale_profits[{i}]"), *a);
    }
    for i in 1..inst.losses.len() {
        if inst.losses[i] > inst.losses[i - 1] {
            out.push(Violation::new(
                format!("losses[{i}]"),
                format!("losses not non-increasing at index {i}"),
            ));
        }
    }
    out
}

/// JSON input form of a [`GameInstance`]; losses may be derived from a decay profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default)]
    pub n: Option<usize>,
    pub ransoms: Vec<f64>,
    pub data_value: f64,
    #[serde(default)]
    pub recovery_cost: f64,
    #[serde(default)]
    pub losses: Option<Vec<f64>>,
    #[serde(default)]
    pub sale_profits: Option<Vec<f64>>,
    #[serde(default)]
    pub decay: Option<Decay>,
    #[serde(default = "default_sale_ratio")]
    pub sale_ratio: f64,
}

fn default_sale_ratio() -> f64 {
    DEFAULT_SALE_RATIO
}

impl InstanceSpec {
    /// Resolves derived fields without validating the result.
    pub fn resolve(&self) -> std::result::Result<GameInstance, Vec<Violation>> {
        let n = self.n.unwrap_or(self.ransoms.len());
        let losses = match (&self.losses, &self.decay) {
            (Some(l), _) => l.clone(),
            (None, Some(decay)) => {
                if n == 0 {
                    return Err(vec![Violation::new("n", "round count must be at least 1")]);
                }
                if let Err(e) = decay.validate() {
                    return Err(vec![Violation::new("decay", e.to_string())]);
                }
                (1..=n)
                    .map(|i| decay.eval(i as f64 / n as f64) * self.data_value)
                    .collect()
            }
            (None, None) => return Err(vec![Violation::new("losses", "either losses or decay must be given")]),
        };
        if !(0.0..=1.0).contains(&self.sale_ratio) {
            return Err(vec![Violation::new("sale_ratio", "must lie in [0, 1]")]);
        }
        let sale_profits = self
            .sale_profits
            .clone()
            .unwrap_or_else(|| losses.iter().map(|l| self.sale_ratio * l).collect());
        Ok(GameInstance {
            n,
            ransoms: self.ransoms.clone(),
            data_value: self.data_value,
            recovery_cost: self.recovery_cost,
            losses,
            sale_profits,
        })
    }

    /// Resolves and validates.
    pub fn build(&self) -> std::result::Result<GameInstance, Vec<Violation>> {
        let inst = self.resolve()?;
        let v = validate_instance(&inst);
        if v.is_empty() {
            Ok(inst)
        } else {
            Err(v)
        }
    }
}

/// Attacker behaviour: `beta_r` is the probability of returning the key after
/// the first payment; `betas[i-1]` is the probability of selling in round `i`
/// after that round was paid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reputation {
    pub beta_r: f64,
    pub betas: Vec<f64>,
}

impl Reputation {
    pub fn new(beta_r: f64, betas: Vec<f64>) -> Result<Self> {
        let rep = Self { beta_r, betas };
        rep.check_probabilities()?;
        Ok(rep)
    }

    /// Always returns the key and never sells after payment.
    pub fn perfect(rounds: usize) -> Self {
        Self {
            beta_r: 1.0,
            betas: vec![0.0; rounds],
        }
    }

    /// Never returns the key and always sells.
    pub fn worst(rounds: usize) -> Self {
        Self {
            beta_r: 0.0,
            betas: vec![1.0; rounds],
        }
    }

    /// Parses `beta_r, beta_1, ..., beta_n`.
    pub fn from_components(values: &[f64]) -> Result<Self> {
        let (first, rest) = values.split_first().ok_or_else(|| Error::Probability {
            name: "beta_r".into(),
            value: f64::NAN,
        })?;
        Self::new(*first, rest.to_vec())
    }

    pub fn components(&self) -> Vec<f64> {
        std::iter::once(self.beta_r).chain(self.betas.iter().copied()).collect()
    }

    /// Probability of selling in `round`; rounds past the end always sell.
    pub fn beta(&self, round: usize) -> f64 {
        self.betas.get(round - 1).copied().unwrap_or(1.0)
    }

    pub fn check_probabilities(&self) -> Result<()> {
        check_probability("beta_r", self.beta_r)?;
        for (i, b) in self.betas.iter().enumerate() {
            check_probability(&format!("beta_{}", i + 1), *b)?;
        }
        Ok(())
    }

    pub fn check_for(&self, inst: &GameInstance) -> Result<()> {
        if self.betas.len() != inst.rounds() {
            return Err(Error::ReputationLength {
                expected: inst.rounds(),
                got: self.betas.len(),
            });
        }
        self.check_probabilities()
    }

    /// Reach probabilities `x_1 = beta_r`, `x_{j+1} = x_j (1 - beta_j)`, length n + 1.
    pub fn survival_chain(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.betas.len() + 1);
        x.push(self.beta_r);
        for b in &self.betas {
            let last = *x.last().unwrap();
            x.push(last * (1.0 - b));
        }
        x
    }
}

fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Probability {
            name: name.into(),
            value,
        })
    }
}

/// First unpaid round of a threshold policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AbortRound {
    Round(usize),
    PayAll,
}

impl AbortRound {
    /// Round index with `PayAll` mapped to `n + 1`.
    pub fn index(self, rounds: usize) -> usize {
        match self {
            AbortRound::Round(t) => t,
            AbortRound::PayAll => rounds + 1,
        }
    }

    pub fn from_index(t: usize, rounds: usize) -> Self {
        if t > rounds {
            AbortRound::PayAll
        } else {
            AbortRound::Round(t)
        }
    }

    pub fn paid_rounds(self, rounds: usize) -> usize {
        self.index(rounds) - 1
    }
}

impl fmt::Display for AbortRound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortRound::Round(t) => write!(f, "{t}"),
            AbortRound::PayAll => f.write_str("PAY_ALL"),
        }
    }
}

impl Serialize for AbortRound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AbortRound::Round(t) => s.serialize_u64(*t as u64),
            AbortRound::PayAll => s.serialize_str("PAY_ALL"),
        }
    }
}

impl<'de> Deserialize<'de> for AbortRound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Round(usize),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Round(0) => Err(serde::de::Error::custom("rounds are numbered from 1")),
            Repr::Round(t) => Ok(AbortRound::Round(t)),
            Repr::Tag(s) if s.eq_ignore_ascii_case("pay_all") => Ok(AbortRound::PayAll),
            Repr::Tag(s) => Err(serde::de::Error::custom(format!(
                "expected a round number or \"PAY_ALL\", found {s:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn linear_profile_values() {
        let (l, a) = build_profiles(500.0, 6, &Decay::Linear, 0.7).unwrap();
        assert_eq!(l[5], 0.0);
        assert_eq!(a[5], 0.0);
        assert!(approx(l[2], 250.0));
        assert!(approx(a[2], 175.0));
    }

    #[test]
    fn circular_profile_midpoint() {
        let (l, _) = build_profiles(500.0, 6, &Decay::Circular, 0.7).unwrap();
        assert!(approx(l[2], 500.0 * 3f64.sqrt() / 2.0));
        assert!((l[2] - 433.013).abs() < 1e-3);
    }

    #[test]
    fn built_in_endpoints() {
        for d in Decay::BUILT_IN {
            assert_eq!(d.eval(0.0), 1.0, "{d}");
            assert_eq!(d.eval(1.0), 0.0, "{d}");
        }
    }

    #[test]
    fn zero_rounds_rejected() {
        assert_eq!(build_profiles(500.0, 0, &Decay::Linear, 0.7), Err(Error::ZeroRounds));
    }

    #[test]
    fn increasing_custom_table_rejected() {
        let d = Decay::Custom(vec![1.0, 0.5, 0.7, 0.0]);
        assert!(matches!(build_profiles(100.0, 4, &d, 0.7), Err(Error::DecayTable(_))));
        let ok = Decay::Custom(vec![1.0, 0.5, 0.5, 0.0]);
        let (l, _) = build_profiles(100.0, 2, &ok, 0.7).unwrap();
        assert!(approx(l[0], 50.0));
        assert_eq!(l[1], 0.0);
    }

    #[test]
    fn increasing_losses_flagged() {
        let inst = GameInstance {
            n: 2,
            ransoms: vec![10.0, 10.0],
            data_value: 100.0,
            recovery_cost: 0.0,
            losses: vec![100.0, 150.0],
            sale_profits: vec![0.0, 0.0],
        };
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "losses[1]");
        assert_eq!(v[0].message, "losses not non-increasing at index 1");
    }

    #[test]
    fn zero_ransom_flagged() {
        let inst = GameInstance {
            n: 2,
            ransoms: vec![10.0, 0.0],
            data_value: 100.0,
            recovery_cost: 0.0,
            losses: vec![100.0, 50.0],
            sale_profits: vec![70.0, 35.0],
        };
        let v = validate_instance(&inst);
        assert_eq!(v, vec![Violation::new("ransoms[1]", "ransom must be positive")]);
    }

    #[test]
    fn length_and_sign_violations_are_all_reported() {
        let inst = GameInstance {
            n: 3,
            ransoms: vec![10.0, 10.0],
            data_value: -1.0,
            recovery_cost: f64::NAN,
            losses: vec![1.0, 1.0, 1.0],
            sale_profits: vec![0.0, -2.0, 0.0],
        };
        let paths: Vec<_> = validate_instance(&inst).into_iter().map(|v| v.path).collect();
        assert_eq!(paths, ["ransoms", "data_value", "recovery_cost", "sale_profits[1]"]);
    }

    #[test]
    fn canonical_instance_is_valid() {
        let ransoms = RansomSchedule::FirstFraction(0.5).amounts(800.0, 6, 500.0).unwrap();
        assert_eq!(ransoms, vec![400.0, 80.0, 80.0, 80.0, 80.0, 80.0]);
        let inst = GameInstance::from_decay(ransoms, 500.0, 0.0, &Decay::Linear, 0.7).unwrap();
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn below_value_schedule() {
        let r = RansomSchedule::FirstBelowValue { gamma: 0.1 }
            .amounts(1450.0, 6, 500.0)
            .unwrap();
        assert_eq!(r[0], 450.0);
        assert!(r[1..].iter().all(|x| approx(*x, 200.0)));
    }

    #[test]
    fn spec_json_derives_losses() {
        let spec: InstanceSpec =
            serde_json::from_str(r#"{"n": 6, "ransoms": [400,80,80,80,80,80], "data_value": 500, "decay": "linear"}"#)
                .unwrap();
        let inst = spec.build().unwrap();
        assert!(approx(inst.losses[2], 250.0));
        assert!(approx(inst.sale_profits[2], 175.0));
        assert_eq!(inst.recovery_cost, 0.0);
    }

    #[test]
    fn spec_json_requires_a_loss_source() {
        let spec: InstanceSpec = serde_json::from_str(r#"{"ransoms": [1], "data_value": 5}"#).unwrap();
        assert_eq!(spec.build().unwrap_err()[0].path, "losses");
    }

    #[test]
    fn abort_round_serde() {
        assert_eq!(serde_json::to_string(&AbortRound::Round(3)).unwrap(), "3");
        assert_eq!(serde_json::to_string(&AbortRound::PayAll).unwrap(), "\"PAY_ALL\"");
        let back: AbortRound = serde_json::from_str("\"PAY_ALL\"").unwrap();
        assert_eq!(back, AbortRound::PayAll);
        assert!(serde_json::from_str::<AbortRound>("0").is_err());
    }

    #[test]
    fn survival_chain_matches_products() {
        let rep = Reputation::new(0.8, vec![0.5, 0.75]).unwrap();
        let x = rep.survival_chain();
        assert!(approx(x[0], 0.8) && approx(x[1], 0.4) && approx(x[2], 0.1));
    }

    #[test]
    fn out_of_range_probability() {
        assert!(Reputation::new(1.2, vec![0.0]).is_err());
        assert!(Reputation::new(0.5, vec![-0.1]).is_err());
    }
}
