//! Subchannel allocation with the task split and precoders held fixed.
//!
//! With summed delays the α-dependent cost is `Σ c_i / α_i`, minimized over
//! `Σ α_i ≤ 1, α_i ≥ α_i^min`. The KKT conditions give
//! `α_i = max(α_i^min, √c_i / ν)` with the multiplier `ν` fixed by a tight
//! budget, found here by bisection.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::{rate_sat, transfer_time, weighted, Decision, DelayAggregation, ScenarioConfig};

/// Floor on `α_i` for VTs with a nonzero task, keeping rates finite.
pub const ALPHA_FLOOR: f64 = 1e-9;
/// Bisection stops once `|Σ α − 1|` is below this.
pub const BUDGET_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSubproblem {
    /// Factor multiplying `1/α_i` in the weighted cost.
    pub coeff: Vec<f64>,
    /// Smallest share that keeps `t_i^tot ≤ T^max`.
    pub alpha_min: Vec<f64>,
}

/// Per-VT quantities that do not depend on α.
struct AlphaTerms {
    /// Bits per unit share: `S^tot / (B log2(1 + SNR))`.
    time_per_share: Vec<f64>,
    /// `max(t^S, t^R_cp)` at the incumbent split and precoders.
    compute_time: Vec<f64>,
}

fn alpha_terms(decision: &Decision, realization: &ChannelRealization, cfg: &ScenarioConfig) -> AlphaTerms {
    let n = cfg.num_vts;
    let mut time_per_share = Vec::with_capacity(n);
    let mut compute_time = Vec::with_capacity(n);
    for vt in 0..n {
        let full_rate = cfg.total_bandwidth_hz * cfg.terr_spectral_efficiency(realization.terr_gains[vt]);
        time_per_share.push(transfer_time(cfg.task_bits[vt], full_rate));
        let remote = decision.split_remote_bits[vt].max(0.0);
        let t_sat = transfer_time(remote, rate_sat(realization, &decision.precoders, vt, cfg))
            + remote / cfg.cpu_freq_hz;
        let t_cp = decision.split_local_bits[vt].max(0.0) / cfg.rsu_freq_hz;
        compute_time.push(t_sat.max(t_cp));
    }
    AlphaTerms {
        time_per_share,
        compute_time,
    }
}

fn deadline_floor(vt: usize, time_per_share: f64, compute_time: f64, max_delay: f64) -> Result<f64> {
    if time_per_share == 0.0 || max_delay.is_infinite() {
        return Ok(0.0);
    }
    if max_delay > compute_time && time_per_share.is_finite() {
        Ok(time_per_share / (max_delay - compute_time))
    } else {
        Err(Error::Infeasible {
            vt,
            reason: format!(
                "compute-stage delay {compute_time:.6e} s leaves no room under T^max = {max_delay:.6e} s"
            ),
        })
    }
}

pub fn build_alpha_subproblem(
    decision: &Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Result<AlphaSubproblem> {
    let terms = alpha_terms(decision, realization, cfg);
    let beta = cfg.weight_beta;
    let mut coeff = Vec::with_capacity(cfg.num_vts);
    let mut alpha_min = Vec::with_capacity(cfg.num_vts);
    for vt in 0..cfg.num_vts {
        let tps = terms.time_per_share[vt];
        // Delay S/r and VT transmit energy p·S/r share the same 1/α shape.
        coeff.push(if tps > 0.0 {
            weighted(beta, tps, cfg.vt_tx_power_w * tps)
        } else {
            0.0
        });
        alpha_min.push(deadline_floor(vt, tps, terms.compute_time[vt], cfg.max_delay_s)?);
    }
    Ok(AlphaSubproblem { coeff, alpha_min })
}

/// Value of `Σ c_i / α_i` (∞ if a positive coefficient meets a zero share).
pub fn alpha_objective(coeff: &[f64], alpha: &[f64]) -> f64 {
    coeff
        .iter()
        .zip(alpha)
        .map(|(&c, &a)| {
            if c == 0.0 {
                0.0
            } else if a > 0.0 {
                c / a
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// Exact minimizer of `Σ c_i / α_i` over `Σ α ≤ 1, α ≥ α^min`.
pub fn solve_alpha(sub: &AlphaSubproblem) -> Result<Vec<f64>> {
    if sub.coeff.len() != sub.alpha_min.len() {
        return Err(Error::Dimension("coefficient and bound lengths differ".into()));
    }
    let lower: Vec<f64> = sub
        .coeff
        .iter()
        .zip(&sub.alpha_min)
        .map(|(&c, &lb)| if c > 0.0 { lb.max(ALPHA_FLOOR) } else { lb.max(0.0) })
        .collect();
    let lower_sum: f64 = lower.iter().sum();
    if lower_sum > 1.0 + BUDGET_TOL || lower.iter().any(|lb| !lb.is_finite()) {
        let vt = lower
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(vt, _)| vt);
        return Err(Error::Infeasible {
            vt,
            reason: format!("minimum subchannel shares sum to {lower_sum:.6}"),
        });
    }
    let roots: Vec<f64> = sub.coeff.iter().map(|&c| c.max(0.0).sqrt()).collect();
    let root_sum: f64 = roots.iter().sum();
    if root_sum == 0.0 || lower_sum >= 1.0 - BUDGET_TOL {
        return Ok(lower);
    }

    let shares = |nu: f64| -> Vec<f64> { roots.iter().zip(&lower).map(|(&r, &lb)| lb.max(r / nu)).collect() };
    // g(ν) = Σ max(lb, √c/ν) is decreasing; g(lo) ≥ 1 ≥ g(hi).
    let mut lo = root_sum;
    let mut hi = root_sum / (1.0 - lower_sum);
    let mut alpha = shares(hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        alpha = shares(mid);
        let total: f64 = alpha.iter().sum();
        if (total - 1.0).abs() <= BUDGET_TOL {
            break;
        }
        if total > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(alpha)
}

/// Best α for the incumbent split and precoders under the configured delay
/// aggregation.
pub fn optimize_alpha(
    decision: &Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Result<Vec<f64>> {
    match cfg.delay_aggregation {
        DelayAggregation::Sum => solve_alpha(&build_alpha_subproblem(decision, realization, cfg)?),
        DelayAggregation::Max => solve_alpha_max_delay(decision, realization, cfg),
    }
}

/// α step when the objective uses the worst VT delay.
///
/// For a delay level `τ` every VT needs `α_i ≥ S_i/(r_i (τ − t_c,i))`; the
/// remaining energy term is again a KKT problem. The resulting value
/// `F(τ)` is convex, minimized by golden-section search.
fn solve_alpha_max_delay(
    decision: &Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Result<Vec<f64>> {
    let terms = alpha_terms(decision, realization, cfg);
    let n = cfg.num_vts;
    let beta = cfg.weight_beta;
    let energy_coeff: Vec<f64> = terms
        .time_per_share
        .iter()
        .map(|&t| cfg.vt_tx_power_w * t)
        .collect();
    let t_c_max = terms.compute_time.iter().copied().fold(0.0, f64::max);
    if !t_c_max.is_finite() {
        let vt = terms
            .compute_time
            .iter()
            .position(|t| !t.is_finite())
            .unwrap_or(0);
        return Err(Error::Infeasible {
            vt,
            reason: "infinite compute-stage delay".into(),
        });
    }

    let floors = |tau: f64| -> Vec<f64> {
        (0..n)
            .map(|vt| {
                let tps = terms.time_per_share[vt];
                if tps == 0.0 {
                    0.0
                } else {
                    tps / (tau - terms.compute_time[vt])
                }
            })
            .collect()
    };
    let floor_sum = |tau: f64| floors(tau).iter().sum::<f64>();

    // Smallest reachable level: Σ floors(τ) = 1.
    let mut lo = t_c_max;
    let mut hi = t_c_max + terms.time_per_share.iter().sum::<f64>() + 1e-12;
    while floor_sum(hi) > 1.0 {
        hi = t_c_max + 2.0 * (hi - t_c_max);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if floor_sum(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau_min = hi;
    if tau_min > cfg.max_delay_s * (1.0 + 1e-12) {
        return Err(Error::Infeasible {
            vt: 0,
            reason: "no subchannel split meets T^max".into(),
        });
    }

    let energy_only = solve_alpha(&AlphaSubproblem {
        coeff: energy_coeff.clone(),
        alpha_min: vec![0.0; n],
    })?;
    let tau_free = (0..n)
        .map(|vt| {
            let tps = terms.time_per_share[vt];
            let t = if tps > 0.0 { tps / energy_only[vt] } else { 0.0 };
            t + terms.compute_time[vt]
        })
        .fold(0.0, f64::max);
    let tau_max = tau_free.max(tau_min).min(cfg.max_delay_s);

    let alpha_at = |tau: f64| -> Result<Vec<f64>> {
        let mut lb = floors(tau);
        let s: f64 = lb.iter().sum();
        if s > 1.0 {
            lb.iter_mut().for_each(|x| *x /= s);
        }
        solve_alpha(&AlphaSubproblem {
            coeff: energy_coeff.clone(),
            alpha_min: lb,
        })
    };
    let value = |tau: f64| -> f64 {
        match alpha_at(tau) {
            Ok(a) => {
                let delay = (0..n)
                    .map(|vt| transfer_time(terms.time_per_share[vt], a[vt]) + terms.compute_time[vt])
                    .fold(0.0, f64::max);
                weighted(beta, delay, alpha_objective(&energy_coeff, &a))
            }
            Err(_) => f64::INFINITY,
        }
    };

    let (mut a, mut b) = (tau_min, tau_max);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (value(x1), value(x2));
    for _ in 0..120 {
        if (b - a) <= 1e-14 * b.abs().max(1e-300) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = value(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = value(x2);
        }
    }
    let candidates = [tau_min, tau_max, x1, x2];
    let best = candidates
        .iter()
        .copied()
        .min_by(|p, q| value(*p).total_cmp(&value(*q)))
        .unwrap_or(tau_min);
    alpha_at(best)
}
