//! Optimal attacker reputation.
//!
//! For every case `k` (the victim pays rounds `1..=k` and refuses round
//! `k + 1`, or pays everything when `k = n`) the attacker's expected profit is
//! linear in the reach probabilities `x_1 = beta_r`, `x_{j+1} = x_j (1 - beta_j)`,
//! and the victim's incentive conditions are linear too. Each case becomes a
//! small LP over `x_1..x_{k+1}`; the best case after re-evaluating the true
//! induced policy wins, with immediate sale as the fallback.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AbortRound, GameInstance, Reputation};
use crate::lp::{solve_lp, Constraint, LinearProgram, LpStatus};
use crate::par;
use crate::strategy::{induced_abort, profit_tree, profit_value, victim_policy_unchecked, VictimPolicy};

/// Default strictness margin: `1e-6 * max(V, sum R)`.
pub fn default_epsilon_margin(inst: &GameInstance) -> f64 {
    1e-6 * inst.data_value.max(inst.total_ransom())
}

/// One linear row `constant + coefficients . x < 0`.
#[derive(Clone, Debug, PartialEq)]
struct Row {
    round: usize,
    constant: f64,
    coefficients: Vec<f64>,
}

fn check_case(inst: &GameInstance, case_k: usize) -> Result<()> {
    if case_k == 0 || case_k > inst.rounds() {
        Err(Error::CaseOutOfRange {
            case: case_k,
            rounds: inst.rounds(),
        })
    } else {
        Ok(())
    }
}

fn tree_objective(inst: &GameInstance, k: usize) -> Vec<f64> {
    let (r, a) = (|i| inst.ransom(i), |i| inst.sale(i));
    let mut c = vec![0.0; k + 1];
    c[0] = -inst.recovery_cost;
    for l in 2..=k {
        c[l - 1] = r(l) + a(l) - a(l - 1);
    }
    c[k] = a(k + 1) - a(k);
    c
}

/// Incentive rows of case `k` from expanding the victim's threshold loss.
fn tree_rows(inst: &GameInstance, k: usize) -> Vec<Row> {
    let (r, l) = (|i| inst.ransom(i), |i| inst.loss(i));
    let tail = l(k + 1) - l(k);
    let mut rows = Vec::with_capacity(k);
    let mut first = vec![0.0; k + 1];
    first[0] = -inst.data_value;
    for v in 2..=k {
        first[v - 1] = r(v) + l(v) - l(v - 1);
    }
    first[k] += tail;
    rows.push(Row {
        round: 1,
        constant: r(1),
        coefficients: first,
    });
    for j in 2..=k {
        let mut c = vec![0.0; k + 1];
        c[j - 1] = r(j);
        for v in j + 1..=k {
            c[v - 1] = r(v) + l(v) - l(v - 1);
        }
        c[k] += tail;
        rows.push(Row {
            round: j,
            constant: 0.0,
            coefficients: c,
        });
    }
    rows
}

/// Incentive rows of case `k` transcribed from the closed-form system as
/// printed, sign slips and index slips included. `L_0` is read as 0.
fn printed_rows(inst: &GameInstance, k: usize) -> Vec<Row> {
    let n = inst.rounds();
    let mut rows = tree_rows(inst, k);
    if k == 1 {
        return rows;
    }
    let (r, l) = (|i| inst.ransom(i), |i: usize| if i == 0 { 0.0 } else { inst.loss(i) });
    let first = &mut rows[0].coefficients;
    first.iter_mut().for_each(|c| *c = 0.0);
    first[0] = -inst.data_value;
    if k == n {
        for v in 2..=n {
            first[v - 1] -= r(v) + l(v) - l(v - 1);
        }
        first[n] += l(n);
    } else {
        for v in 1..k {
            first[v - 1] -= r(k - v) + l(k - v) - l(k - v - 1);
        }
        first[k] += l(k + 1) - l(k);
        for row in rows.iter_mut().filter(|row| row.round >= 2 && row.round + 1 < k) {
            row.coefficients[k] = -(l(k + 1) - l(k));
        }
    }
    rows
}

fn assemble(objective: Vec<f64>, rows: Vec<Row>, inst: &GameInstance, margin: f64) -> LinearProgram {
    let m = objective.len();
    let mut lp = LinearProgram::new(objective);
    lp.constant = inst.ransom(1) + inst.sale(1);
    for row in rows {
        lp.push(
            Constraint::strict(row.coefficients, -row.constant, margin).labeled(format!("pay round {}", row.round)),
        );
    }
    for j in 1..m {
        let mut c = vec![0.0; m];
        c[j] = 1.0;
        c[j - 1] = -1.0;
        lp.push(Constraint::le(c, 0.0).labeled(format!("chain x{} <= x{}", j + 1, j)));
    }
    lp
}

/// LP of case `case_k` with objective value equal to the attacker's expected
/// profit (the constant `R_1 + A_1` is included).
pub fn build_lp(inst: &GameInstance, case_k: usize, epsilon_margin: f64) -> Result<LinearProgram> {
    inst.check()?;
    check_case(inst, case_k)?;
    Ok(build_lp_unchecked(inst, case_k, epsilon_margin))
}

fn build_lp_unchecked(inst: &GameInstance, k: usize, margin: f64) -> LinearProgram {
    assemble(tree_objective(inst, k), tree_rows(inst, k), inst, margin)
}

/// The same LP with the incentive rows exactly as printed in closed form.
pub fn printed_lp(inst: &GameInstance, case_k: usize, epsilon_margin: f64) -> Result<LinearProgram> {
    inst.check()?;
    check_case(inst, case_k)?;
    Ok(assemble(
        tree_objective(inst, case_k),
        printed_rows(inst, case_k),
        inst,
        epsilon_margin,
    ))
}

/// One coefficient where the printed system and the tree expansion disagree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDivergence {
    pub case_k: usize,
    /// Round whose payment condition the row encodes.
    pub round: usize,
    /// 1-based `x` index, or `None` for the row constant.
    pub variable: Option<usize>,
    pub printed: f64,
    pub tree: f64,
}

/// Coefficient-by-coefficient comparison of every case's incentive rows.
pub fn lp_divergence(inst: &GameInstance) -> Result<Vec<CoefficientDivergence>> {
    inst.check()?;
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    let mut out = Vec::new();
    for k in 1..=inst.rounds() {
        for (p, t) in printed_rows(inst, k).iter().zip(tree_rows(inst, k)) {
            if !same(p.constant, t.constant) {
                out.push(CoefficientDivergence {
                    case_k: k,
                    round: t.round,
                    variable: None,
                    printed: p.constant,
                    tree: t.constant,
                });
            }
            for (v, (a, b)) in p.coefficients.iter().zip(&t.coefficients).enumerate() {
                if !same(*a, *b) {
                    out.push(CoefficientDivergence {
                        case_k: k,
                        round: t.round,
                        variable: Some(v + 1),
                        printed: *a,
                        tree: *b,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Reach probabilities `x_1..x_{len}` of a reputation.
pub fn reach_probabilities(rep: &Reputation, len: usize) -> Vec<f64> {
    let mut x = rep.survival_chain();
    x.truncate(len);
    x
}

/// Inverts the reach substitution. `x` may be shorter than `n + 1`; missing
/// and unreachable sale probabilities are set to 1.
pub fn recover_reputation(x: &[f64], rounds: usize) -> Result<Reputation> {
    const TOL: f64 = 1e-12;
    if x.is_empty() || x.len() > rounds + 1 {
        return Err(Error::LpShape(format!(
            "expected between 1 and {} reach probabilities, got {}",
            rounds + 1,
            x.len()
        )));
    }
    for (j, v) in x.iter().enumerate() {
        let upper = if j == 0 { 1.0 } else { x[j - 1] };
        if !v.is_finite() || *v < -TOL || *v > upper + TOL {
            return Err(Error::ChainViolation(j));
        }
    }
    let beta_r = x[0].clamp(0.0, 1.0);
    let mut betas = vec![1.0; rounds];
    for j in 1..x.len() {
        let prev = x[j - 1];
        if prev <= 0.0 {
            break;
        }
        betas[j - 1] = (1.0 - x[j] / prev).clamp(0.0, 1.0);
    }
    Reputation::new(beta_r, betas)
}

/// Pulls an LP point onto the chain `0 <= x_{j+1} <= x_j <= 1` when it misses
/// by rounding noise only.
fn snap_to_chain(x: &mut [f64]) {
    for j in 0..x.len() {
        let upper = if j == 0 { 1.0 } else { x[j - 1] };
        if x[j] > upper && x[j] - upper <= 1e-9 {
            x[j] = upper;
        }
        if x[j] < 0.0 && x[j] >= -1e-9 {
            x[j] = 0.0;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub case_k: usize,
    pub status: LpStatus,
    /// LP optimum including the `R_1 + A_1` constant.
    pub lp_value: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub reputation: Option<Reputation>,
    /// Profit of the recovered reputation under the policy it really induces.
    pub tree_profit: Option<f64>,
    pub induced_abort_round: Option<AbortRound>,
    /// Whether the induced policy is the one this case was built for.
    pub induces_case: bool,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalReputationResult {
    pub reputation: Reputation,
    /// Winning case, `None` when immediate sale is best.
    pub case_k: Option<usize>,
    pub expected_profit: f64,
    pub policy: VictimPolicy,
    /// True when no case beats selling at once under the worst reputation.
    pub fallback: bool,
    pub epsilon_margin: f64,
    pub cases: Vec<CaseRow>,
}

fn solve_case(inst: &GameInstance, k: usize, margin: f64) -> Result<CaseRow> {
    let lp = build_lp_unchecked(inst, k, margin);
    let sol = solve_lp(&lp)?;
    let mut row = CaseRow {
        case_k: k,
        status: sol.status,
        lp_value: None,
        x: None,
        reputation: None,
        tree_profit: None,
        induced_abort_round: None,
        induces_case: false,
        iterations: sol.iterations,
    };
    if sol.status != LpStatus::Optimal {
        return Ok(row);
    }
    let mut x = sol.x;
    snap_to_chain(&mut x);
    let rep = recover_reputation(&x, inst.rounds())?;
    let abort = induced_abort(inst, &rep);
    row.lp_value = Some(sol.value);
    row.tree_profit = Some(profit_tree(inst, &rep, abort).expected_profit);
    row.induced_abort_round = Some(abort);
    row.induces_case = abort == AbortRound::from_index(k + 1, inst.rounds());
    row.x = Some(x);
    row.reputation = Some(rep);
    Ok(row)
}

/// Solves every case LP, re-evaluates each candidate on the outcome tree and
/// returns the most profitable reputation. `epsilon_margin = None` uses
/// [`default_epsilon_margin`].
pub fn optimal_reputation(inst: &GameInstance, epsilon_margin: Option<f64>) -> Result<OptimalReputationResult> {
    inst.check()?;
    optimal_reputation_unchecked(inst, epsilon_margin)
}

fn optimal_reputation_unchecked(inst: &GameInstance, epsilon_margin: Option<f64>) -> Result<OptimalReputationResult> {
    let n = inst.rounds();
    let margin = epsilon_margin.unwrap_or_else(|| default_epsilon_margin(inst));
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::LpShape(format!(
            "epsilon margin {margin} must be finite and non-negative"
        )));
    }
    let cases = par::map_indexed(n, |i| solve_case(inst, i + 1, margin))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let worst = Reputation::worst(n);
    let mut best_rep = worst.clone();
    let mut best_case = None;
    let mut best_profit = profit_tree(inst, &worst, AbortRound::Round(1)).expected_profit;
    for row in &cases {
        if let (Some(p), Some(rep)) = (row.tree_profit, &row.reputation) {
            if p > best_profit {
                best_profit = p;
                best_rep = rep.clone();
                best_case = Some(row.case_k);
            }
        }
    }
    let policy = victim_policy_unchecked(inst, &best_rep);
    Ok(OptimalReputationResult {
        reputation: best_rep,
        case_k: best_case,
        expected_profit: best_profit,
        policy,
        fallback: best_case.is_none(),
        epsilon_margin: margin,
        cases,
    })
}

/// Writes the per-case table as CSV.
pub fn write_case_table<W: Write>(result: &OptimalReputationResult, rounds: usize, out: W) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["case".to_string(), "status".into(), "lp_value".into(), "beta_r".into()];
    header.extend((1..=rounds).map(|i| format!("beta_{i}")));
    header.extend(["tree_profit".into(), "induced_abort_round".into()]);
    w.write_record(&header).map_err(csv_err)?;
    let num = |v: Option<f64>| v.map(fmt_money).unwrap_or_default();
    for row in &result.cases {
        let mut rec = vec![
            row.case_k.to_string(),
            row.status.as_str().to_string(),
            num(row.lp_value),
        ];
        match &row.reputation {
            Some(rep) => rec.extend(rep.components().into_iter().map(fmt_money)),
            None => rec.extend(std::iter::repeat_n(String::new(), rounds + 1)),
        }
        rec.push(num(row.tree_profit));
        rec.push(row.induced_abort_round.map(|a| a.to_string()).unwrap_or_default());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// Fixed nine-decimal rendering used by every CSV writer.
pub fn fmt_money(v: f64) -> String {
    let s = format!("{v:.9}");
    if s == "-0.000000000" {
        "0.000000000".into()
    } else {
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub resolution: f64,
    /// Refuse full grids larger than this many evaluations.
    pub max_evaluations: u128,
    /// Random starting points of the coordinate search used beyond three rounds.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            resolution: 0.02,
            max_evaluations: 50_000_000,
            restarts: 8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub reputation: Reputation,
    pub profit: f64,
    pub evaluations: u128,
    /// True when the coordinate search was used instead of the full grid.
    pub heuristic: bool,
}

pub const FULL_GRID_MAX_ROUNDS: usize = 3;

pub fn grid_search_reputation(inst: &GameInstance, resolution: f64) -> Result<GridSearchResult> {
    grid_search_with(
        inst,
        &GridOptions {
            resolution,
            ..GridOptions::default()
        },
    )
}

fn grid_steps(resolution: f64) -> Result<usize> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::Scenario(format!(
            "grid resolution {resolution} is outside (0, 1]"
        )));
    }
    Ok((1.0 / resolution).round().max(1.0) as usize)
}

fn induced_profit(inst: &GameInstance, rep: &Reputation) -> f64 {
    profit_value(inst, rep, induced_abort(inst, rep))
}

/// Best reputation on the grid `{0, h, 2h, ..., 1}^{n+1}`. Up to three rounds
/// every point is evaluated; beyond that a coordinate search from the corner
/// reputations and seeded random starts is used.
pub fn grid_search_with(inst: &GameInstance, opts: &GridOptions) -> Result<GridSearchResult> {
    inst.check()?;
    let steps = grid_steps(opts.resolution)?;
    let n = inst.rounds();
    let base = steps as u128 + 1;
    let dims = n + 1;
    if n <= FULL_GRID_MAX_ROUNDS {
        let total = base.pow(dims as u32);
        if total > opts.max_evaluations {
            return Err(Error::SearchBudget {
                needed: total,
                limit: opts.max_evaluations,
            });
        }
        let decode = |mut idx: u64| {
            let mut comps = vec![0.0; dims];
            for c in comps.iter_mut().rev() {
                *c = (idx % base as u64) as f64 / steps as f64;
                idx /= base as u64;
            }
            Reputation {
                beta_r: comps[0],
                betas: comps[1..].to_vec(),
            }
        };
        let (idx, profit) =
            par::argmax(total as u64, |i| induced_profit(inst, &decode(i))).expect("grid is never empty");
        return Ok(GridSearchResult {
            reputation: decode(idx),
            profit,
            evaluations: total,
            heuristic: false,
        });
    }

    let mut starts = vec![
        Reputation::worst(n).components(),
        Reputation::perfect(n).components(),
        std::iter::once(1.0).chain(std::iter::repeat_n(1.0, n)).collect(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        starts.push(
            (0..dims)
                .map(|_| rng.random_range(0..=steps) as f64 / steps as f64)
                .collect(),
        );
    }
    let runs = par::map_indexed(starts.len(), |s| coordinate_search(inst, &starts[s], steps));
    let mut evaluations = 0u128;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (comps, profit, evals) in runs {
        evaluations += evals;
        if best.as_ref().is_none_or(|(_, p)| profit > *p) {
            best = Some((comps, profit));
        }
    }
    let (comps, profit) = best.expect("at least one start");
    Ok(GridSearchResult {
        reputation: Reputation::from_components(&comps)?,
        profit,
        evaluations,
        heuristic: true,
    })
}

fn coordinate_search(inst: &GameInstance, start: &[f64], steps: usize) -> (Vec<f64>, f64, u128) {
    let mut rep = Reputation {
        beta_r: start[0],
        betas: start[1..].to_vec(),
    };
    let mut best = induced_profit(inst, &rep);
    let mut evals = 1u128;
    for _sweep in 0..50 {
        let mut improved = false;
        for d in 0..start.len() {
            let current = if d == 0 { rep.beta_r } else { rep.betas[d - 1] };
            let mut pick = current;
            for s in 0..=steps {
                let v = s as f64 / steps as f64;
                if d == 0 {
                    rep.beta_r = v;
                } else {
                    rep.betas[d - 1] = v;
                }
                let p = induced_profit(inst, &rep);
                evals += 1;
                if p > best {
                    best = p;
                    pick = v;
                    improved = true;
                }
            }
            if d == 0 {
                rep.beta_r = pick;
            } else {
                rep.betas[d - 1] = pick;
            }
        }
        if !improved {
            break;
        }
    }
    (rep.components(), best, evals)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverchargeCheck {
    pub bound: f64,
    pub optimal_profit: f64,
    /// `optimal_profit` exceeds `bound` by more than rounding noise.
    pub holds: bool,
    /// Unmet preconditions of the bound; the bound is still computed.
    pub precondition_violations: Vec<String>,
}

/// Checks `Pro > (1 - gamma) V + A_1 - C_r` against the optimizer.
pub fn overcharge_bound(inst: &GameInstance, gamma: f64) -> Result<OverchargeCheck> {
    inst.check()?;
    let v = inst.data_value;
    let first = (1.0 - gamma) * v;
    let mut violations = Vec::new();
    if gamma.is_nan() || gamma <= 0.0 {
        violations.push(format!("gamma must be positive, got {gamma}"));
    }
    if (inst.ransom(1) - first).abs() > 1e-9 * first.abs().max(1.0) {
        violations.push(format!(
            "first ransom {} differs from (1 - gamma) V = {first}",
            inst.ransom(1)
        ));
    }
    if first + inst.sale(2) <= inst.sale(1) {
        violations.push("(1 - gamma) V + A_2 must exceed A_1".into());
    }
    let bound = first + inst.sale(1) - inst.recovery_cost;
    let optimal_profit = optimal_reputation_unchecked(inst, None)?.expected_profit;
    Ok(OverchargeCheck {
        bound,
        optimal_profit,
        holds: optimal_profit - bound > 1e-9 * bound.abs().max(1.0),
        precondition_violations: violations,
    })
}

/// Best one-round reputation `(beta_r, beta_1)` and its profit.
pub fn single_round_optimum(
    ransom: f64,
    data_value: f64,
    loss: f64,
    sale: f64,
    recovery_cost: f64,
) -> Result<(Reputation, f64)> {
    for (name, v) in [
        ("ransom", ransom),
        ("data_value", data_value),
        ("loss", loss),
        ("sale", sale),
        ("recovery_cost", recovery_cost),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidInstance(vec![crate::game::Violation::new(
                name,
                "must be finite and non-negative",
            )]));
        }
    }
    let inst = GameInstance {
        n: 1,
        ransoms: vec![ransom],
        data_value,
        recovery_cost,
        losses: vec![loss],
        sale_profits: vec![sale],
    };
    let res = optimal_reputation_unchecked(&inst, None)?;
    Ok((res.reputation, res.expected_profit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Decay;

    fn inst(r: &[f64], v: f64, l: &[f64], a: &[f64], cr: f64) -> GameInstance {
        GameInstance::new(r.to_vec(), v, cr, l.to_vec(), a.to_vec()).unwrap()
    }

    #[test]
    fn first_case_lp_shape() {
        let g = inst(&[100.0, 50.0], 200.0, &[300.0, 150.0], &[210.0, 105.0], 10.0);
        let lp = build_lp(&g, 1, 0.5).unwrap();
        assert_eq!(lp.objective, vec![-10.0, -105.0]);
        assert_eq!(lp.constant, 310.0);
        let row = &lp.constraints[0];
        assert_eq!(row.coefficients, vec![-200.0, -150.0]);
        assert_eq!(row.bound, -100.0 - 0.5);
        assert_eq!(row.margin, 0.5);
    }

    #[test]
    fn last_case_row_count_and_objective() {
        let g = inst(&[10.0, 20.0, 30.0], 200.0, &[150.0, 100.0, 50.0], &[0.0; 3], 0.0);
        let lp = build_lp(&g, 3, 1e-3).unwrap();
        assert_eq!(lp.constraints.len(), 3 + 3);
        assert_eq!(lp.objective, vec![0.0, 20.0, 30.0, 0.0]);
        assert_eq!(lp.constant, 10.0);
        // final row: R_3 x_3 - L_3 x_4
        assert_eq!(lp.constraints[2].coefficients, vec![0.0, 0.0, 30.0, -50.0]);
    }

    #[test]
    fn case_out_of_range() {
        let g = inst(&[10.0], 20.0, &[5.0], &[0.0], 0.0);
        assert!(matches!(build_lp(&g, 2, 0.0), Err(Error::CaseOutOfRange { .. })));
        assert!(matches!(build_lp(&g, 0, 0.0), Err(Error::CaseOutOfRange { .. })));
    }

    #[test]
    fn lp_rows_match_direct_loss_difference() {
        let g = inst(
            &[120.0, 40.0, 30.0, 10.0],
            300.0,
            &[250.0, 180.0, 90.0, 20.0],
            &[175.0, 126.0, 63.0, 14.0],
            5.0,
        );
        let rep = Reputation::new(0.8, vec![0.1, 0.25, 0.3, 0.6]).unwrap();
        for k in 1..=4 {
            let lp = build_lp(&g, k, 0.0).unwrap();
            let x = reach_probabilities(&rep, k + 1);
            let abort = AbortRound::from_index(k + 1, 4);
            let loss = crate::strategy::threshold_policy_loss(&g, &rep, abort);
            // round-1 row equals threshold loss minus L_1
            let lhs = lp.constraints[0].lhs(&x) - lp.constraints[0].bound;
            assert!((lhs - (loss - g.loss(1))).abs() < 1e-9);
            let profit = profit_tree(&g, &rep, abort).expected_profit;
            assert!((lp.value_at(&x) - profit).abs() < 1e-9);
        }
    }

    #[test]
    fn recover_examples() {
        let r = recover_reputation(&[1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(r.components(), vec![1.0, 0.0, 0.0]);
        let r = recover_reputation(&[0.8, 0.4, 0.1], 2).unwrap();
        assert_eq!(r.beta_r, 0.8);
        assert!((r.betas[0] - 0.5).abs() < 1e-15 && (r.betas[1] - 0.75).abs() < 1e-15);
        let r = recover_reputation(&[0.6, 0.0, 0.0], 4).unwrap();
        assert_eq!(r.components(), vec![0.6, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(recover_reputation(&[0.5, 0.7], 2), Err(Error::ChainViolation(1)));
        assert_eq!(recover_reputation(&[1.5], 2), Err(Error::ChainViolation(0)));
    }

    #[test]
    fn recover_inverts_substitution() {
        let rep = Reputation::new(0.7, vec![0.2, 0.5, 0.9]).unwrap();
        let back = recover_reputation(&rep.survival_chain(), 3).unwrap();
        for (a, b) in back.components().iter().zip(rep.components()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn overpriced_instance_falls_back() {
        let g = inst(&[900.0, 900.0], 200.0, &[150.0, 100.0], &[105.0, 70.0], 0.0);
        let res = optimal_reputation(&g, None).unwrap();
        assert!(res.fallback);
        assert_eq!(res.expected_profit, 105.0);
        assert_eq!(res.reputation, Reputation::worst(2));
        let grid = grid_search_reputation(&g, 0.1).unwrap();
        assert_eq!(grid.profit, 105.0);
    }

    #[test]
    fn cheap_instance_prefers_collecting_everything() {
        let g = inst(&[1.0, 1.0, 1.0], 1000.0, &[900.0, 800.0, 700.0], &[0.0; 3], 0.0);
        let res = optimal_reputation(&g, None).unwrap();
        assert!(!res.fallback);
        assert!((res.expected_profit - 3.0).abs() < 1e-6);
        let grid = grid_search_reputation(&g, 0.1).unwrap();
        assert!((grid.profit - 3.0).abs() < 1e-9);
    }

    #[test]
    fn optimum_beats_corners() {
        let g = GameInstance::from_decay(vec![400.0, 100.0, 100.0], 500.0, 0.0, &Decay::Linear, 0.7).unwrap();
        let res = optimal_reputation(&g, None).unwrap();
        for rep in [Reputation::worst(3), Reputation::perfect(3)] {
            let p = victim_policy_unchecked(&g, &rep);
            let corner = profit_tree(&g, &rep, p.abort_round).expected_profit;
            assert!(res.expected_profit >= corner - 1e-6);
        }
        let winner = &res.cases[res.case_k.unwrap() - 1];
        assert_eq!(winner.tree_profit, Some(res.expected_profit));
    }

    #[test]
    fn case_table_csv() {
        let g = inst(&[100.0, 50.0], 200.0, &[300.0, 150.0], &[210.0, 105.0], 10.0);
        let res = optimal_reputation(&g, None).unwrap();
        let mut buf = Vec::new();
        write_case_table(&res, 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "case,status,lp_value,beta_r,beta_1,beta_2,tree_profit,induced_abort_round"
        );
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn printed_first_row_diverges_for_last_case() {
        let g = inst(&[100.0, 50.0, 25.0], 400.0, &[300.0, 200.0, 100.0], &[0.0; 3], 0.0);
        let d = lp_divergence(&g).unwrap();
        assert!(d.iter().any(|c| c.case_k == 3 && c.round == 1 && c.variable == Some(4)));
        assert!(d.iter().all(|c| c.case_k != 1));
    }

    #[test]
    fn single_round_examples() {
        // overpriced: refuse even at perfect reputation
        let (_, p) = single_round_optimum(800.0, 400.0, 300.0, 210.0, 0.0).unwrap();
        assert_eq!(p, 210.0);
        // collect and sell
        let (rep, p) = single_round_optimum(300.0, 400.0, 300.0, 210.0, 0.0).unwrap();
        assert!((p - 510.0).abs() < 1e-6);
        assert!((rep.betas[0] - 1.0).abs() < 1e-9);
        // nothing to sell
        let (_, p) = single_round_optimum(300.0, 400.0, 300.0, 0.0, 0.0).unwrap();
        assert!((p - 300.0).abs() < 1e-6);
    }

    #[test]
    fn bound_precondition_flags_zero_gamma() {
        let g = GameInstance::from_decay(vec![500.0, 100.0], 500.0, 0.0, &Decay::Linear, 0.7).unwrap();
        let chk = overcharge_bound(&g, 0.0).unwrap();
        assert!(!chk.precondition_violations.is_empty());
        assert_eq!(chk.bound, 500.0 + g.sale(1));
    }

    #[test]
    fn bound_reduces_without_sale_or_cost() {
        let g = inst(&[450.0, 100.0], 500.0, &[0.0, 0.0], &[0.0, 0.0], 0.0);
        assert_eq!(overcharge_bound(&g, 0.1).unwrap().bound, 450.0);
    }
}
