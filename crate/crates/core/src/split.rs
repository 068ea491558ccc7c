//! Task split with the precoders and subchannel shares fixed.
//!
//! For one VT the cost in the remote share `S^S` is the maximum of two
//! linear delay branches plus a linear energy term, so the minimum sits at an
//! end of the deadline-feasible interval or at the kink where both branches
//! meet.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::{
    rate_sat, rate_terrestrial, transfer_time, weighted, Decision, DelayAggregation, ScenarioConfig,
};

/// Per-VT data of the split step.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTerms {
    pub total_bits: f64,
    pub t_trans: f64,
    /// Seconds per bit sent to and computed at the SAPs, `1/R_s + 1/f^CPU`.
    pub remote_delay_per_bit: f64,
    pub local_delay_per_bit: f64,
    /// Joules per remote bit, compute plus RSU→SAP transmission.
    pub remote_energy_per_bit: f64,
    pub local_energy_per_bit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSubproblem {
    pub terms: Vec<SplitTerms>,
    pub beta: f64,
    pub max_delay_s: f64,
    pub aggregation: DelayAggregation,
}

impl SplitTerms {
    fn remote_delay(&self, remote: f64) -> f64 {
        if remote <= 0.0 {
            0.0
        } else {
            remote * self.remote_delay_per_bit
        }
    }

    fn delay(&self, remote: f64) -> f64 {
        let local = self.total_bits - remote;
        self.t_trans + self.remote_delay(remote).max(local * self.local_delay_per_bit)
    }

    fn energy(&self, remote: f64) -> f64 {
        let local = self.total_bits - remote;
        let mut e = local * self.local_energy_per_bit;
        if remote > 0.0 {
            e += remote * self.remote_energy_per_bit;
        }
        e
    }

    /// Feasible range of `S^S` for a total-delay cap `limit`.
    fn interval(&self, limit: f64) -> Option<(f64, f64)> {
        let slack = limit - self.t_trans;
        if !(slack >= 0.0) {
            return None;
        }
        let lo = (self.total_bits - slack / self.local_delay_per_bit).max(0.0);
        let hi = if self.remote_delay_per_bit.is_finite() {
            (slack / self.remote_delay_per_bit).min(self.total_bits)
        } else {
            0.0
        };
        (lo <= hi).then_some((lo, hi))
    }

    /// Where the remote and local branches meet.
    fn kink(&self) -> f64 {
        if !self.remote_delay_per_bit.is_finite() {
            return 0.0;
        }
        self.total_bits * self.local_delay_per_bit / (self.remote_delay_per_bit + self.local_delay_per_bit)
    }
}

pub fn build_split_subproblem(
    decision: &Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> SplitSubproblem {
    let terms = (0..cfg.num_vts)
        .map(|vt| {
            let rate = rate_sat(realization, &decision.precoders, vt, cfg);
            let power = decision.power(vt);
            let (remote_delay_per_bit, tx_per_bit) = if rate > 0.0 {
                (1.0 / rate + 1.0 / cfg.cpu_freq_hz, power / rate)
            } else {
                (f64::INFINITY, 0.0)
            };
            let total_bits = cfg.task_bits[vt];
            SplitTerms {
                total_bits,
                t_trans: transfer_time(
                    total_bits,
                    rate_terrestrial(decision.alpha[vt], cfg, realization.terr_gains[vt]),
                ),
                remote_delay_per_bit,
                local_delay_per_bit: 1.0 / cfg.rsu_freq_hz,
                remote_energy_per_bit: cfg.remote_compute_energy_per_bit() + tx_per_bit,
                local_energy_per_bit: cfg.local_energy_per_bit(),
            }
        })
        .collect();
    SplitSubproblem {
        terms,
        beta: cfg.weight_beta,
        max_delay_s: cfg.max_delay_s,
        aggregation: cfg.delay_aggregation,
    }
}

/// `(S^S, S^R)` with `S^S + S^R == total` exactly in floating point.
///
/// The larger part is computed by one subtraction and the smaller one from
/// it; by Sterbenz's lemma the second subtraction is exact.
pub fn exact_split(remote: f64, total: f64) -> (f64, f64) {
    let remote = remote.clamp(0.0, total);
    if remote >= total / 2.0 {
        (remote, total - remote)
    } else {
        let local = total - remote;
        (total - local, local)
    }
}

fn infeasible(vt: usize) -> Error {
    Error::Infeasible {
        vt,
        reason: "no task split meets T^max".into(),
    }
}

/// Cost-minimizing `S^S` of one VT under a total-delay cap.
fn best_remote(term: &SplitTerms, beta: f64, limit: f64, with_delay: bool) -> Option<f64> {
    let (lo, hi) = term.interval(limit)?;
    let mut best = lo;
    let mut best_cost = f64::INFINITY;
    for cand in [lo, term.kink().clamp(lo, hi), hi] {
        let delay = if with_delay { term.delay(cand) } else { 0.0 };
        let cost = weighted(beta, delay, term.energy(cand));
        // Candidates come in increasing order, so `<` keeps ties local.
        if cost < best_cost || (cost == best_cost && cand < best) {
            best = cand;
            best_cost = cost;
        }
    }
    Some(best)
}

/// Optimal remote shares `S^S` for the sum-of-delays objective.
pub fn solve_split(sub: &SplitSubproblem) -> Result<Vec<f64>> {
    sub.terms
        .iter()
        .enumerate()
        .map(|(vt, t)| best_remote(t, sub.beta, sub.max_delay_s, true).ok_or_else(|| infeasible(vt)))
        .collect()
}

/// Objective of the split step, up to terms that do not depend on it.
pub fn split_objective(sub: &SplitSubproblem, remote: &[f64]) -> f64 {
    let delays: Vec<f64> = sub.terms.iter().zip(remote).map(|(t, &s)| t.delay(s)).collect();
    let energy: f64 = sub.terms.iter().zip(remote).map(|(t, &s)| t.energy(s)).sum();
    weighted(sub.beta, sub.aggregation.aggregate(&delays), energy)
}

/// Worst-case delay objective: search over a common delay level `τ`, with
/// each VT spending the least energy that meets it.
fn solve_split_max(sub: &SplitSubproblem) -> Result<Vec<f64>> {
    for (vt, t) in sub.terms.iter().enumerate() {
        if t.interval(sub.max_delay_s).is_none() {
            return Err(infeasible(vt));
        }
    }
    // Fastest achievable delay of each VT is at its kink.
    let floor = sub.terms.iter().map(|t| t.delay(t.kink())).fold(0.0, f64::max);
    let energy_only: Vec<f64> = sub
        .terms
        .iter()
        .map(|t| best_remote(t, 0.0, sub.max_delay_s, false).unwrap_or(0.0))
        .collect();
    let ceiling = sub
        .terms
        .iter()
        .zip(&energy_only)
        .map(|(t, &s)| t.delay(s))
        .fold(floor, f64::max)
        .min(sub.max_delay_s);

    let at_level = |tau: f64| -> Vec<f64> {
        sub.terms
            .iter()
            .map(|t| best_remote(t, 0.0, tau, false).unwrap_or_else(|| t.kink()))
            .collect()
    };
    let cost = |tau: f64| split_objective(sub, &at_level(tau));

    let mut best_tau = floor;
    let mut best_cost = cost(floor);
    let c = cost(ceiling);
    if c < best_cost {
        best_tau = ceiling;
        best_cost = c;
    }
    let (mut a, mut b) = (floor, ceiling);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    if b > a {
        let mut x1 = b - ratio * (b - a);
        let mut x2 = a + ratio * (b - a);
        let (mut f1, mut f2) = (cost(x1), cost(x2));
        for _ in 0..200 {
            if b - a <= 1e-12 * b.abs().max(1e-300) {
                break;
            }
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - ratio * (b - a);
                f1 = cost(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + ratio * (b - a);
                f2 = cost(x2);
            }
        }
        for (tau, f) in [(x1, f1), (x2, f2)] {
            if f < best_cost {
                best_tau = tau;
                best_cost = f;
            }
        }
    }
    Ok(at_level(best_tau))
}

/// New decision with the split replaced by the optimum for the incumbent
/// precoders and subchannel shares.
pub fn optimize_split(
    decision: &Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Result<Decision> {
    let sub = build_split_subproblem(decision, realization, cfg);
    let remote = match cfg.delay_aggregation {
        DelayAggregation::Sum => solve_split(&sub)?,
        DelayAggregation::Max => solve_split_max(&sub)?,
    };
    let mut out = decision.clone();
    for (vt, s) in remote.into_iter().enumerate() {
        let (r, l) = exact_split(s, cfg.task_bits[vt]);
        out.split_remote_bits[vt] = r;
        out.split_local_bits[vt] = l;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn term() -> SplitTerms {
        SplitTerms {
            total_bits: 100.0,
            t_trans: 1.0,
            remote_delay_per_bit: 0.03,
            local_delay_per_bit: 0.01,
            remote_energy_per_bit: 0.0,
            local_energy_per_bit: 0.0,
        }
    }

    fn sub(terms: Vec<SplitTerms>, beta: f64) -> SplitSubproblem {
        SplitSubproblem {
            terms,
            beta,
            max_delay_s: f64::INFINITY,
            aggregation: DelayAggregation::Sum,
        }
    }

    #[test]
    fn kink_balances_branches() {
        // 0.03 S = 0.01 (100 − S) at S = 25.
        let t = term();
        assert_relative_eq!(t.kink(), 25.0, max_relative = 1e-15);
        let s = solve_split(&sub(vec![t], 1.0)).unwrap();
        assert_relative_eq!(s[0], 25.0, max_relative = 1e-15);
    }

    #[test]
    fn energy_only_picks_cheaper_side() {
        let mut t = term();
        t.remote_energy_per_bit = 2.0;
        t.local_energy_per_bit = 1.0;
        assert_eq!(solve_split(&sub(vec![t.clone()], 0.0)).unwrap()[0], 0.0);
        t.remote_energy_per_bit = 0.5;
        assert_eq!(solve_split(&sub(vec![t], 0.0)).unwrap()[0], 100.0);
    }

    #[test]
    fn ties_stay_local() {
        let mut t = term();
        t.remote_energy_per_bit = 1.0;
        t.local_energy_per_bit = 1.0;
        assert_eq!(solve_split(&sub(vec![t], 0.0)).unwrap()[0], 0.0);
    }

    #[test]
    fn matches_dense_grid() {
        let mut t = term();
        t.remote_energy_per_bit = 0.004;
        t.local_energy_per_bit = 0.001;
        let p = sub(vec![t.clone()], 0.6);
        let s = solve_split(&p).unwrap();
        let best_grid = (0..=100_000)
            .map(|k| split_objective(&p, &[k as f64 * 1e-3]))
            .fold(f64::INFINITY, f64::min);
        assert!(split_objective(&p, &s) <= best_grid + 1e-12);
    }

    #[test]
    fn deadline_bounds_the_split() {
        let mut t = term();
        t.remote_energy_per_bit = 10.0;
        let mut p = sub(vec![t], 0.0);
        // Local-only takes 1 + 1 = 2 s; a 1.9 s cap forces S^S ≥ 10.
        p.max_delay_s = 1.9;
        assert_relative_eq!(solve_split(&p).unwrap()[0], 10.0, max_relative = 1e-12);
        // Fastest is 1 + 0.75 at the kink.
        p.max_delay_s = 1.7;
        assert!(matches!(solve_split(&p), Err(Error::Infeasible { vt: 0, .. })));
    }

    #[test]
    fn dead_link_forces_local() {
        let mut t = term();
        t.remote_delay_per_bit = f64::INFINITY;
        assert_eq!(solve_split(&sub(vec![t], 0.5)).unwrap()[0], 0.0);
    }

    #[test]
    fn exact_split_sums_exactly() {
        for (s, tot) in [
            (0.1, 0.3),
            (1e-20, 1.0),
            (0.7, 1.0),
            (3.3e6, 8.1e6),
            (8.1e6, 8.1e6),
            (0.0, 5.0),
        ] {
            let (r, l) = exact_split(s, tot);
            assert_eq!(r + l, tot);
            assert!(r >= 0.0 && l >= 0.0);
        }
    }

    #[test]
    fn max_mode_levels_delays() {
        let a = term();
        let mut b = term();
        b.t_trans = 0.0;
        b.local_energy_per_bit = 1.0;
        let p = SplitSubproblem {
            terms: vec![a.clone(), b.clone()],
            beta: 0.5,
            max_delay_s: f64::INFINITY,
            aggregation: DelayAggregation::Max,
        };
        let s = solve_split_max(&p).unwrap();
        let got = split_objective(&p, &s);
        let mut grid_best = f64::INFINITY;
        for i in 0..=200 {
            for j in 0..=200 {
                grid_best = grid_best.min(split_objective(&p, &[i as f64 * 0.5, j as f64 * 0.5]));
            }
        }
        assert!(got <= grid_best + 1e-9, "{got} vs {grid_best}");
    }
}
