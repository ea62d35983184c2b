//! Victim best responses and the attacker's expected profit.
//!
//! The victim loss recursion runs backwards from the last round. For rounds
//! `i >= 2` paying costs `R_i + beta_i L_i + (1 - beta_i) b_{i+1}` and refusing
//! costs `L_i`; the first round additionally involves the key return
//! probability `beta_r` and the recovered value `V`. After the last round the
//! continuation value is zero. Ties resolve to refusing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AbortRound, GameInstance, Reputation};

/// Largest round count accepted by [`enumerate_best_response`].
pub const ENUMERATION_MAX_ROUNDS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VictimPolicy {
    pub abort_round: AbortRound,
    /// Per-round continuation values (`a_i` or `b_i`), round 1 first.
    pub continuation_values: Vec<f64>,
    /// Expected total loss of the victim; equals `-U_{v,1}`.
    pub expected_loss: f64,
}

impl VictimPolicy {
    pub fn threshold(abort_round: AbortRound) -> Self {
        Self {
            abort_round,
            continuation_values: Vec::new(),
            expected_loss: f64::NAN,
        }
    }
}

/// Cost of paying round 1 given the continuation value `next` of round 2.
#[inline]
fn first_round_pay_cost(inst: &GameInstance, rep: &Reputation, next: f64) -> f64 {
    let l1 = inst.loss(1);
    let b1 = rep.beta(1);
    inst.ransom(1) + (1.0 - rep.beta_r) * l1 + rep.beta_r * (-inst.data_value + b1 * l1 + (1.0 - b1) * next)
}

/// Cost of paying round `i >= 2` given the continuation value of round `i + 1`.
#[inline]
fn later_round_pay_cost(inst: &GameInstance, rep: &Reputation, i: usize, next: f64) -> f64 {
    let b = rep.beta(i);
    inst.ransom(i) + b * inst.loss(i) + (1.0 - b) * next
}

/// Backward induction over rounds `from..=n`. Returns the continuation values
/// for those rounds and the first refused round at or after `from`.
fn backward_induction(inst: &GameInstance, rep: &Reputation, from: usize) -> (Vec<f64>, AbortRound) {
    let n = inst.rounds();
    let mut values = vec![0.0; n + 1 - from];
    let mut pays = vec![false; n + 1 - from];
    let mut next = 0.0;
    for i in (from..=n).rev() {
        let cost = if i == 1 {
            first_round_pay_cost(inst, rep, next)
        } else {
            later_round_pay_cost(inst, rep, i, next)
        };
        let refuse = inst.loss(i);
        let pay = cost < refuse;
        let value = if pay { cost } else { refuse };
        values[i - from] = value;
        pays[i - from] = pay;
        next = value;
    }
    let abort = pays
        .iter()
        .position(|p| !p)
        .map_or(AbortRound::PayAll, |k| AbortRound::Round(from + k));
    (values, abort)
}

/// Best response against an arbitrary reputation.
pub fn victim_policy(inst: &GameInstance, rep: &Reputation) -> Result<VictimPolicy> {
    inst.check()?;
    rep.check_for(inst)?;
    Ok(victim_policy_unchecked(inst, rep))
}

pub(crate) fn victim_policy_unchecked(inst: &GameInstance, rep: &Reputation) -> VictimPolicy {
    let (values, abort_round) = backward_induction(inst, rep, 1);
    VictimPolicy {
        abort_round,
        expected_loss: values[0],
        continuation_values: values,
    }
}

/// Best response in the subgame that starts at `from_round` with the key
/// already returned (for `from_round >= 2`). Continuation values cover rounds
/// `from_round..=n`; `expected_loss` is the loss from that round onward.
pub fn subgame_policy(inst: &GameInstance, rep: &Reputation, from_round: usize) -> Result<VictimPolicy> {
    inst.check()?;
    rep.check_for(inst)?;
    if from_round == 0 || from_round > inst.rounds() {
        return Err(Error::CaseOutOfRange {
            case: from_round,
            rounds: inst.rounds(),
        });
    }
    let (values, abort_round) = backward_induction(inst, rep, from_round);
    Ok(VictimPolicy {
        abort_round,
        expected_loss: values[0],
        continuation_values: values,
    })
}

/// Expected loss from `round` onward if the victim pays that round and then
/// plays optimally, paired with the loss `L_round` of refusing it.
pub fn round_costs(inst: &GameInstance, rep: &Reputation, round: usize) -> Result<(f64, f64)> {
    inst.check()?;
    rep.check_for(inst)?;
    let n = inst.rounds();
    if round == 0 || round > n {
        return Err(Error::CaseOutOfRange { case: round, rounds: n });
    }
    let next = if round < n {
        backward_induction(inst, rep, round + 1).0[0]
    } else {
        0.0
    };
    let pay = if round == 1 {
        first_round_pay_cost(inst, rep, next)
    } else {
        later_round_pay_cost(inst, rep, round, next)
    };
    Ok((pay, inst.loss(round)))
}

/// Best response against the perfect reputation `(1, 0, ..., 0)`:
/// `a_n = min{R_n, L_n}`, `a_i = min{R_i + a_{i+1}, L_i}`,
/// `a_1 = min{R_1 - V + a_2, L_1}` with `a_{n+1} = 0`.
pub fn perfect_reputation_policy(inst: &GameInstance) -> Result<VictimPolicy> {
    inst.check()?;
    let n = inst.rounds();
    let mut a = vec![0.0; n];
    let mut pays = vec![false; n];
    let mut next = 0.0;
    for i in (1..=n).rev() {
        let cost = if i == 1 {
            inst.ransom(1) - inst.data_value + next
        } else {
            inst.ransom(i) + next
        };
        let refuse = inst.loss(i);
        pays[i - 1] = cost < refuse;
        a[i - 1] = if pays[i - 1] { cost } else { refuse };
        next = a[i - 1];
    }
    let abort_round = pays
        .iter()
        .position(|p| !p)
        .map_or(AbortRound::PayAll, |k| AbortRound::Round(k + 1));
    Ok(VictimPolicy {
        abort_round,
        expected_loss: a[0],
        continuation_values: a,
    })
}

/// Victim's expected loss under the threshold policy "pay rounds before
/// `abort`, refuse at `abort`".
pub fn threshold_policy_loss(inst: &GameInstance, rep: &Reputation, abort: AbortRound) -> f64 {
    let n = inst.rounds();
    let t = abort.index(n);
    if t == 1 {
        return inst.loss(1);
    }
    let mut value = if t <= n { inst.loss(t) } else { 0.0 };
    for i in (2..t).rev() {
        value = later_round_pay_cost(inst, rep, i, value);
    }
    first_round_pay_cost(inst, rep, value)
}

/// Brute-force best response: evaluates every threshold policy and returns the
/// minimizer, ties going to the earliest abort round.
pub fn enumerate_best_response(inst: &GameInstance, rep: &Reputation) -> Result<VictimPolicy> {
    inst.check()?;
    rep.check_for(inst)?;
    let n = inst.rounds();
    if n > ENUMERATION_MAX_ROUNDS {
        return Err(Error::EnumerationBudget {
            rounds: n,
            max: ENUMERATION_MAX_ROUNDS,
        });
    }
    let losses: Vec<f64> = (1..=n + 1)
        .map(|t| threshold_policy_loss(inst, rep, AbortRound::from_index(t, n)))
        .collect();
    let mut best = 0;
    for (k, l) in losses.iter().enumerate() {
        if *l < losses[best] {
            best = k;
        }
    }
    Ok(VictimPolicy {
        abort_round: AbortRound::from_index(best + 1, n),
        expected_loss: losses[best],
        continuation_values: losses,
    })
}

/// Proposition-style single payment decision: pay iff
/// `R < beta_r (V + (1 - beta_1) L_1)`; equality refuses.
pub fn decide_single_round(ransom: f64, data_value: f64, loss: f64, beta_r: f64, beta_1: f64) -> bool {
    ransom < beta_r * (data_value + (1.0 - beta_1) * loss)
}

/// Attacker's expected profit decomposed along the outcome tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfitBreakdown {
    pub expected_profit: f64,
    pub ransom_component: f64,
    pub sale_component: f64,
    pub recovery_cost_component: f64,
    /// Probability that the data is sold in round `i` (index `i - 1`).
    pub sale_probability: Vec<f64>,
    /// Probability that every round is paid and the data is never sold.
    pub completed_unsold_probability: f64,
    /// Probability that the victim pays round `i`.
    pub payment_probability: Vec<f64>,
    /// Expected net profit accrued in round `i`.
    pub per_round_profit: Vec<f64>,
}

impl ProfitBreakdown {
    pub fn outcome_probability_total(&self) -> f64 {
        self.sale_probability.iter().sum::<f64>() + self.completed_unsold_probability
    }
}

/// Exact expected attacker profit for a threshold policy.
pub fn attacker_expected_profit(
    inst: &GameInstance,
    rep: &Reputation,
    policy: &VictimPolicy,
) -> Result<ProfitBreakdown> {
    inst.check()?;
    rep.check_for(inst)?;
    let n = inst.rounds();
    if let AbortRound::Round(t) = policy.abort_round {
        if t == 0 || t > n {
            return Err(Error::NonThresholdPolicy(format!("abort round {t} is outside 1..={n}")));
        }
    }
    Ok(profit_tree(inst, rep, policy.abort_round))
}

pub(crate) fn profit_tree(inst: &GameInstance, rep: &Reputation, abort: AbortRound) -> ProfitBreakdown {
    let n = inst.rounds();
    let t = abort.index(n);
    let mut sale = vec![0.0; n];
    let mut paid = vec![0.0; n];
    let mut per_round = vec![0.0; n];
    let mut ransom = 0.0;
    let mut recovery = 0.0;
    let mut unsold = 0.0;

    if t == 1 {
        sale[0] = 1.0;
    } else {
        paid[0] = 1.0;
        ransom += inst.ransom(1);
        // key withheld: data sold immediately
        sale[0] += 1.0 - rep.beta_r;
        recovery += rep.beta_r * inst.recovery_cost;
        let mut reach = rep.beta_r;
        sale[0] += reach * rep.beta(1);
        reach *= 1.0 - rep.beta(1);
        for i in 2..=n {
            if i == t {
                sale[i - 1] += reach;
                reach = 0.0;
                break;
            }
            paid[i - 1] = reach;
            ransom += reach * inst.ransom(i);
            sale[i - 1] += reach * rep.beta(i);
            reach *= 1.0 - rep.beta(i);
        }
        unsold = reach;
    }

    let mut sale_component = 0.0;
    for i in 1..=n {
        let s = sale[i - 1] * inst.sale(i);
        sale_component += s;
        per_round[i - 1] = paid[i - 1] * inst.ransom(i) + s;
    }
    per_round[0] -= recovery;

    ProfitBreakdown {
        expected_profit: ransom + sale_component - recovery,
        ransom_component: ransom,
        sale_component,
        recovery_cost_component: recovery,
        sale_probability: sale,
        completed_unsold_probability: unsold,
        payment_probability: paid,
        per_round_profit: per_round,
    }
}

/// Abort round of the best response, without building continuation vectors.
pub(crate) fn induced_abort(inst: &GameInstance, rep: &Reputation) -> AbortRound {
    let n = inst.rounds();
    let mut next = 0.0;
    let mut abort = AbortRound::PayAll;
    for i in (1..=n).rev() {
        let cost = if i == 1 {
            first_round_pay_cost(inst, rep, next)
        } else {
            later_round_pay_cost(inst, rep, i, next)
        };
        let refuse = inst.loss(i);
        if cost < refuse {
            next = cost;
        } else {
            next = refuse;
            abort = AbortRound::Round(i);
        }
    }
    abort
}

/// Expected profit of the outcome tree, value only.
pub(crate) fn profit_value(inst: &GameInstance, rep: &Reputation, abort: AbortRound) -> f64 {
    let n = inst.rounds();
    let t = abort.index(n);
    if t == 1 {
        return inst.sale(1);
    }
    let mut total = inst.ransom(1) + (1.0 - rep.beta_r) * inst.sale(1) - rep.beta_r * inst.recovery_cost;
    let mut reach = rep.beta_r;
    total += reach * rep.beta(1) * inst.sale(1);
    reach *= 1.0 - rep.beta(1);
    for i in 2..=n {
        if i == t {
            return total + reach * inst.sale(i);
        }
        total += reach * (inst.ransom(i) + rep.beta(i) * inst.sale(i));
        reach *= 1.0 - rep.beta(i);
    }
    total
}

/// Attacker's strategy in the worst-reputation equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackerAction {
    SellAtRound(usize),
}

/// 2x2 stage game: rows are the victim's pay decision `p`, columns the
/// attacker's sell decision `s`; entries are (attacker, victim) utilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagePayoffMatrix {
    pub round: usize,
    pub pay_sell: (f64, f64),
    pub pay_keep: (f64, f64),
    pub refuse_sell: (f64, f64),
    pub refuse_keep: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseEquilibrium {
    pub policy: VictimPolicy,
    pub attacker_action: AttackerAction,
    /// (attacker utility, victim utility)
    pub payoffs: (f64, f64),
    pub stage_matrices: Vec<StagePayoffMatrix>,
}

/// Stage game of round `round >= 2` when every later round is played as the
/// worst-reputation equilibrium (attacker ends with `A_{i+1}`, victim `-L_{i+1}`).
pub fn stage_payoff_matrix(inst: &GameInstance, round: usize) -> StagePayoffMatrix {
    let (r, a, l) = (inst.ransom(round), inst.sale(round), inst.loss(round));
    let (next_a, next_v) = if round < inst.rounds() {
        (inst.sale(round + 1), -inst.loss(round + 1))
    } else {
        (0.0, 0.0)
    };
    StagePayoffMatrix {
        round,
        pay_sell: (r + a, -r - l),
        pay_keep: (r + next_a, -r + next_v),
        refuse_sell: (a, -l),
        refuse_keep: (a, -l),
    }
}

/// Equilibrium against the worst reputation: the victim never pays and the
/// attacker sells in round 1.
pub fn worst_case_equilibrium(inst: &GameInstance) -> Result<WorstCaseEquilibrium> {
    inst.check()?;
    let rep = Reputation::worst(inst.rounds());
    let policy = victim_policy_unchecked(inst, &rep);
    let stage_matrices = (2..=inst.rounds()).map(|i| stage_payoff_matrix(inst, i)).collect();
    Ok(WorstCaseEquilibrium {
        attacker_action: AttackerAction::SellAtRound(1),
        payoffs: (inst.sale(1), -inst.loss(1)),
        policy,
        stage_matrices,
    })
}

fn survival(rep: &Reputation, upto: usize) -> f64 {
    (1..=upto).map(|s| 1.0 - rep.beta(s)).product()
}

/// Expected attacker profit for "victim pays the first `case_k` rounds"
/// evaluated with the closed forms exactly as printed, including their
/// inconsistencies. Use [`attacker_expected_profit`] for the true value.
pub fn printed_ep_reference(inst: &GameInstance, rep: &Reputation, case_k: usize) -> Result<f64> {
    inst.check()?;
    rep.check_for(inst)?;
    let n = inst.rounds();
    if case_k == 0 || case_k > n {
        return Err(Error::CaseOutOfRange {
            case: case_k,
            rounds: n,
        });
    }
    let (r, a) = (|i| inst.ransom(i), |i| inst.sale(i));
    let br = rep.beta_r;
    let cr = inst.recovery_cost;
    if case_k == 1 {
        return Ok(r(1) + a(1) - br * cr + (1.0 - br) * (a(2) - a(1)));
    }
    let head_sum: f64 = (1..=n.saturating_sub(2))
        .map(|l| (r(l + 1) + a(l + 1) - a(l)) * survival(rep, l))
        .sum();
    if case_k == n {
        let tail = survival(rep, n - 1);
        return Ok(r(1) + a(1) - br * cr
            + br * head_sum
            + br * tail * (r(n) - a(n - 1))
            + br * tail * rep.beta(n) * a(n));
    }
    let i = case_k;
    Ok(r(1) + a(1) - cr
        + br * head_sum
        + br * survival(rep, i - 1) * (r(i) + a(i) - a(i - 1))
        + br * (a(i + 1) - a(i)) * survival(rep, i) * rep.beta(n))
}

/// One row of the printed-vs-tree comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpDivergence {
    pub case_k: usize,
    pub printed: f64,
    pub tree: f64,
    pub difference: f64,
}

/// Compares the printed closed forms against the outcome tree for every case.
pub fn ep_divergence(inst: &GameInstance, rep: &Reputation) -> Result<Vec<EpDivergence>> {
    let n = inst.rounds();
    (1..=n)
        .map(|k| {
            let printed = printed_ep_reference(inst, rep, k)?;
            let tree = profit_tree(inst, rep, AbortRound::from_index(k + 1, n)).expected_profit;
            Ok(EpDivergence {
                case_k: k,
                printed,
                tree,
                difference: printed - tree,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(r: &[f64], v: f64, l: &[f64], a: &[f64], cr: f64) -> GameInstance {
        GameInstance::new(r.to_vec(), v, cr, l.to_vec(), a.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    }

    /// Victim loss of a threshold policy computed by walking outcome
    /// probabilities forward, independent of the backward recursions.
    fn forward_loss(inst: &GameInstance, rep: &Reputation, t: usize) -> f64 {
        let n = inst.rounds();
        if t == 1 {
            return inst.loss(1);
        }
        let mut loss = inst.ransom(1) + (1.0 - rep.beta_r) * inst.loss(1);
        let mut reach = rep.beta_r;
        loss -= reach * inst.data_value;
        loss += reach * rep.beta(1) * inst.loss(1);
        reach *= 1.0 - rep.beta(1);
        for i in 2..=n {
            if i == t {
                return loss + reach * inst.loss(i);
            }
            loss += reach * (inst.ransom(i) + rep.beta(i) * inst.loss(i));
            reach *= 1.0 - rep.beta(i);
        }
        loss
    }

    fn forward_best(inst: &GameInstance, rep: &Reputation) -> (usize, f64) {
        let n = inst.rounds();
        (1..=n + 1)
            .map(|t| (t, forward_loss(inst, rep, t)))
            .fold(
                (0, f64::INFINITY),
                |acc, (t, l)| if l < acc.1 - 1e-12 { (t, l) } else { acc },
            )
    }

    #[test]
    fn perfect_pay_all_example() {
        let g = inst(&[100.0, 50.0], 200.0, &[300.0, 150.0], &[0.0, 0.0], 0.0);
        let p = perfect_reputation_policy(&g).unwrap();
        assert_eq!(p.continuation_values, vec![-50.0, 50.0]);
        assert_eq!(p.abort_round, AbortRound::PayAll);
        // forward oracle: losses for t = 1, 2, PAY_ALL
        assert_eq!(forward_best(&g, &Reputation::perfect(2)), (3, -50.0));
    }

    #[test]
    fn perfect_abort_after_first_example() {
        let g = inst(&[100.0, 50.0], 200.0, &[300.0, 40.0], &[0.0, 0.0], 0.0);
        let p = perfect_reputation_policy(&g).unwrap();
        assert_eq!(p.continuation_values[1], 40.0);
        assert_eq!(p.abort_round, AbortRound::Round(2));
        assert_eq!(forward_best(&g, &Reputation::perfect(2)).0, 2);
    }

    #[test]
    fn worthless_data_is_never_ransomed() {
        let g = inst(&[10.0, 20.0, 5.0], 0.0, &[0.0; 3], &[0.0; 3], 0.0);
        let p = perfect_reputation_policy(&g).unwrap();
        assert_eq!(p.continuation_values, vec![0.0; 3]);
        assert_eq!(p.abort_round, AbortRound::Round(1));
    }

    #[test]
    fn single_round_perfect_degenerates() {
        let g = inst(&[100.0], 250.0, &[80.0], &[0.0], 0.0);
        let p = perfect_reputation_policy(&g).unwrap();
        assert_eq!(p.continuation_values, vec![-150.0]);
        assert_eq!(p.abort_round, AbortRound::PayAll);
    }

    #[test]
    fn imperfect_reputation_example() {
        let g = inst(&[100.0, 50.0], 200.0, &[300.0, 150.0], &[0.0, 0.0], 0.0);
        let rep = Reputation::new(0.9, vec![0.3, 0.5]).unwrap();
        let p = victim_policy(&g, &rep).unwrap();
        assert!(close(p.continuation_values[1], 125.0));
        // 100 + 0.1*300 + 0.9*(-200 + 0.3*300 + 0.7*125) = 109.75
        assert!(close(p.continuation_values[0], 109.75));
        assert_eq!(p.abort_round, AbortRound::PayAll);
        let (t, loss) = forward_best(&g, &rep);
        assert_eq!(t, 3);
        assert!(close(loss, 109.75));
        let (pay, refuse) = round_costs(&g, &rep, 2).unwrap();
        assert!(close(pay, 125.0) && refuse == 150.0);
        let (pay, refuse) = round_costs(&g, &rep, 1).unwrap();
        assert!(close(pay, 109.75) && refuse == 300.0);
        assert!(round_costs(&g, &rep, 3).is_err());
    }

    #[test]
    fn perfect_reputation_reduces_to_a_recursion() {
        let g = inst(
            &[120.0, 40.0, 30.0, 10.0],
            300.0,
            &[250.0, 180.0, 90.0, 0.0],
            &[175.0, 126.0, 63.0, 0.0],
            5.0,
        );
        let b = victim_policy(&g, &Reputation::perfect(4)).unwrap();
        let a = perfect_reputation_policy(&g).unwrap();
        assert_eq!(a.abort_round, b.abort_round);
        for (x, y) in a.continuation_values.iter().zip(&b.continuation_values) {
            assert!(close(*x, *y));
        }
    }

    #[test]
    fn worst_reputation_refuses_immediately() {
        let g = inst(
            &[10.0, 10.0, 10.0],
            500.0,
            &[400.0, 300.0, 200.0],
            &[280.0, 210.0, 140.0],
            0.0,
        );
        let p = victim_policy(&g, &Reputation::worst(3)).unwrap();
        assert_eq!(p.abort_round, AbortRound::Round(1));
        assert_eq!(p.expected_loss, 400.0);
        let eq = worst_case_equilibrium(&g).unwrap();
        assert_eq!(eq.payoffs, (280.0, -400.0));
        assert_eq!(eq.attacker_action, AttackerAction::SellAtRound(1));
    }

    #[test]
    fn zero_sale_value_worst_case() {
        let g = inst(&[10.0, 10.0], 50.0, &[40.0, 20.0], &[0.0, 0.0], 0.0);
        assert_eq!(worst_case_equilibrium(&g).unwrap().payoffs, (0.0, -40.0));
    }

    #[test]
    fn final_round_stage_matrix() {
        let g = inst(&[10.0, 50.0], 500.0, &[200.0, 100.0], &[140.0, 70.0], 0.0);
        let m = stage_payoff_matrix(&g, 2);
        assert_eq!(m.pay_sell, (120.0, -150.0));
        assert_eq!(m.pay_keep, (50.0, -50.0));
        assert_eq!(m.refuse_sell, (70.0, -100.0));
        assert_eq!(m.refuse_keep, (70.0, -100.0));
    }

    #[test]
    fn single_round_decision() {
        assert!(decide_single_round(500.0, 400.0, 300.0, 0.9, 0.2));
        assert!(!decide_single_round(576.0, 400.0, 300.0, 0.9, 0.2));
        assert!(!decide_single_round(1.0, 400.0, 300.0, 0.0, 0.0));
        assert!(decide_single_round(699.0, 400.0, 300.0, 1.0, 0.0));
        assert!(!decide_single_round(700.0, 400.0, 300.0, 1.0, 0.0));
    }

    #[test]
    fn profit_worst_reputation_is_first_sale() {
        let g = inst(&[10.0, 10.0], 50.0, &[40.0, 20.0], &[28.0, 14.0], 3.0);
        let rep = Reputation::worst(2);
        let p = victim_policy(&g, &rep).unwrap();
        let bd = attacker_expected_profit(&g, &rep, &p).unwrap();
        assert_eq!(bd.expected_profit, 28.0);
        assert_eq!(bd.outcome_probability_total(), 1.0);
    }

    #[test]
    fn profit_perfect_pay_all() {
        let g = inst(
            &[100.0, 50.0, 25.0],
            400.0,
            &[300.0, 200.0, 100.0],
            &[210.0, 140.0, 70.0],
            7.0,
        );
        let rep = Reputation::perfect(3);
        let bd = profit_tree(&g, &rep, AbortRound::PayAll);
        assert_eq!(bd.expected_profit, 175.0 - 7.0);
        assert_eq!(bd.completed_unsold_probability, 1.0);
    }

    #[test]
    fn profit_sell_after_first_payment() {
        let g = inst(
            &[100.0, 50.0, 25.0],
            400.0,
            &[300.0, 200.0, 100.0],
            &[210.0, 140.0, 70.0],
            7.0,
        );
        let rep = Reputation::new(1.0, vec![1.0; 3]).unwrap();
        let bd = profit_tree(&g, &rep, AbortRound::Round(2));
        assert_eq!(bd.expected_profit, 100.0 - 7.0 + 210.0);
    }

    #[test]
    fn non_threshold_policy_rejected() {
        let g = inst(&[10.0, 10.0], 50.0, &[40.0, 20.0], &[28.0, 14.0], 0.0);
        let bad = VictimPolicy::threshold(AbortRound::Round(3));
        assert!(matches!(
            attacker_expected_profit(&g, &Reputation::perfect(2), &bad),
            Err(Error::NonThresholdPolicy(_))
        ));
    }

    #[test]
    fn breakdown_components_add_up() {
        let g = inst(
            &[100.0, 50.0, 25.0],
            400.0,
            &[300.0, 200.0, 100.0],
            &[210.0, 140.0, 70.0],
            7.0,
        );
        let rep = Reputation::new(0.7, vec![0.2, 0.4, 0.6]).unwrap();
        for t in 1..=4 {
            let bd = profit_tree(&g, &rep, AbortRound::from_index(t, 3));
            let sum = bd.ransom_component + bd.sale_component - bd.recovery_cost_component;
            assert!(close(bd.expected_profit, sum));
            assert!((bd.outcome_probability_total() - 1.0).abs() < 1e-12);
            assert!(close(bd.per_round_profit.iter().sum::<f64>(), bd.expected_profit));
        }
    }

    #[test]
    fn enumeration_budget() {
        let n = ENUMERATION_MAX_ROUNDS + 1;
        let g = inst(&vec![1.0; n], 10.0, &vec![1.0; n], &vec![0.0; n], 0.0);
        assert!(matches!(
            enumerate_best_response(&g, &Reputation::perfect(n)),
            Err(Error::EnumerationBudget { .. })
        ));
    }

    #[test]
    fn printed_case_n_at_perfect_reputation() {
        let g = inst(
            &[100.0, 50.0, 25.0, 10.0],
            400.0,
            &[300.0, 200.0, 100.0, 50.0],
            &[210.0, 140.0, 70.0, 35.0],
            7.0,
        );
        let rep = Reputation::perfect(4);
        let got = printed_ep_reference(&g, &rep, 4).unwrap();
        let expected = 100.0 + 210.0 - 7.0 + (50.0 + 140.0 - 210.0) + (25.0 + 70.0 - 140.0) + (10.0 - 70.0);
        assert!(close(got, expected));
        // case n agrees with the tree: R_1 + R_2 + R_3 + R_4 - C_r
        assert!(close(got, 185.0 - 7.0));
    }

    #[test]
    fn printed_case_one_with_key_return() {
        let g = inst(&[100.0, 50.0], 400.0, &[300.0, 200.0], &[210.0, 140.0], 7.0);
        let rep = Reputation::new(1.0, vec![0.4, 0.9]).unwrap();
        assert_eq!(printed_ep_reference(&g, &rep, 1).unwrap(), 100.0 + 210.0 - 7.0);
    }

    #[test]
    fn printed_case_one_diverges_from_tree() {
        let g = inst(
            &[100.0, 50.0, 20.0],
            400.0,
            &[300.0, 200.0, 90.0],
            &[210.0, 140.0, 63.0],
            0.0,
        );
        let rep = Reputation::new(0.5, vec![0.5, 0.5, 0.5]).unwrap();
        let rows = ep_divergence(&g, &rep).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].difference.abs() > 1.0);
        assert!(rows[2].difference.abs() < 1e-9);
    }

    #[test]
    fn subgame_matches_suffix_of_full_recursion() {
        let g = inst(
            &[120.0, 40.0, 30.0, 10.0],
            300.0,
            &[250.0, 180.0, 90.0, 20.0],
            &[175.0, 126.0, 63.0, 14.0],
            0.0,
        );
        let rep = Reputation::new(0.9, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let full = victim_policy(&g, &rep).unwrap();
        let sub = subgame_policy(&g, &rep, 3).unwrap();
        assert_eq!(sub.continuation_values, full.continuation_values[2..].to_vec());
    }
}
