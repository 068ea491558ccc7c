//! Precoder optimization with the task split and subchannel shares fixed.
//!
//! The satellite rate `R_i = B_s log2(1 + M_i/N_i)` is replaced by a surrogate
//! `R̃_i(v; γ_i, z_i)` built from two transforms: the Lagrangian-dual rewrite
//! of the log (auxiliary `γ_i`) and a quadratic transform of the resulting
//! ratio (auxiliary `z_i`). For any `(γ, z)`, `R̃_i ≤ R_i`, with equality at
//! the closed-form updates. The transmit-energy ratio `S_i ‖v_i‖² / R̃_i` is
//! bounded through a third auxiliary `y_i`, tight at its closed form.
//!
//! The auxiliaries are refreshed in closed form and the precoders are then
//! improved by projected gradient descent on the resulting surrogate cost.
//! Every block update leaves the surrogate cost non-increasing, and the
//! surrogate equals the true cost right after the auxiliaries are refreshed.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::{
    precoder_power, rate_terrestrial, signal_and_interference, stream_gain, transfer_time, weighted,
    Decision, DelayAggregation, ScenarioConfig,
};

/// Relative decrease of the surrogate cost below which rounds stop.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ROUNDS: usize = 100;

const INNER_MAX_ITER: usize = 500;
const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const INITIAL_STEP: f64 = 1.0;
const MIN_STEP: f64 = 1e-30;
const PENALTY_GROWTH: f64 = 10.0;
const PENALTY_CAP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct FpState {
    pub gamma: Vec<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    /// Dual variable of the SINR constraint; reported, not used by the solve.
    pub lambda_dual: Vec<f64>,
    /// Epigraph delay `max_i (S_i/R̃_i + S_i/f^CPU)` over VTs with remote bits.
    pub t_aux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecodingSolution {
    pub precoders: Vec<Vec<Complex64>>,
    pub t_aux: f64,
    pub fp_state: FpState,
    pub surrogate_rates: Vec<f64>,
    /// Surrogate cost at the start of every round and after the last one.
    pub objective_trace: Vec<f64>,
    pub rounds: usize,
}

/// `γ_i = M_i / N_i`, the SINR of every stream.
pub fn update_gamma(
    precoders: &[Vec<Complex64>],
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Vec<f64> {
    (0..precoders.len())
        .map(|vt| {
            let (m, n) = signal_and_interference(realization, precoders, vt, cfg.noise_sat_w);
            m / n
        })
        .collect()
}

/// `λ_i = B_s / (1 + γ_i)`.
pub fn update_lambda(gamma: &[f64], cfg: &ScenarioConfig) -> Vec<f64> {
    gamma.iter().map(|g| cfg.sat_bandwidth_hz / (1.0 + g)).collect()
}

/// The same multiplier written through the powers, `B_s N / (M + N)`.
pub fn lambda_from_powers(signal: f64, interference: f64, cfg: &ScenarioConfig) -> f64 {
    cfg.sat_bandwidth_hz * interference / (signal + interference)
}

/// `z_i = √(B_s M_i (1 + γ_i)) / (M_i + N_i)`.
pub fn update_z(
    precoders: &[Vec<Complex64>],
    gamma: &[f64],
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Vec<f64> {
    (0..precoders.len())
        .map(|vt| {
            let (m, n) = signal_and_interference(realization, precoders, vt, cfg.noise_sat_w);
            (cfg.sat_bandwidth_hz * m * (1.0 + gamma[vt])).sqrt() / (m + n)
        })
        .collect()
}

/// Surrogate from the signal and interference powers.
///
/// The log and linear `γ` terms are taken in nats and the whole expression
/// converted to bits, so that `γ = M/N` is stationary and the surrogate
/// equals `B_s log2(1 + M/N)` at the closed-form auxiliaries.
pub fn surrogate_from_powers(signal: f64, interference: f64, gamma: f64, z: f64, bandwidth: f64) -> f64 {
    let quad = 2.0 * z * (bandwidth * signal * (1.0 + gamma)).sqrt() - z * z * (signal + interference);
    (quad + bandwidth * gamma.ln_1p() - bandwidth * gamma) / LN_2
}

/// `R̃_i(v_i, γ_i, z_i)` in bits per second.
pub fn surrogate_rate(
    realization: &ChannelRealization,
    precoders: &[Vec<Complex64>],
    gamma: &[f64],
    z: &[f64],
    vt: usize,
    cfg: &ScenarioConfig,
) -> f64 {
    let (m, n) = signal_and_interference(realization, precoders, vt, cfg.noise_sat_w);
    surrogate_from_powers(m, n, gamma[vt], z[vt], cfg.sat_bandwidth_hz)
}

/// `y_i = √(S_i^S ‖v_i‖²) / R̃_i`.
pub fn update_y(
    precoders: &[Vec<Complex64>],
    surrogate_rates: &[f64],
    decision: &Decision,
    _cfg: &ScenarioConfig,
) -> Result<Vec<f64>> {
    precoders
        .iter()
        .enumerate()
        .map(|(vt, v)| {
            let bits = decision.split_remote_bits[vt];
            if bits <= 0.0 {
                return Ok(0.0);
            }
            let rate = surrogate_rates[vt];
            if !(rate > 0.0) {
                return Err(Error::DegenerateRate { vt });
            }
            Ok((bits * precoder_power(v)).sqrt() / rate)
        })
        .collect()
}

/// Upper bound on the transmit-energy ratio `S ‖v‖² / R̃`.
///
/// `½ (y √S ‖v‖ + S^{3/2} ‖v‖³ / (y R̃²))` is convex in `y` and minimized at
/// `y = √(S ‖v‖²)/R̃`, where it equals the ratio.
pub fn energy_bound(bits: f64, norm: f64, rate: f64, y: f64) -> f64 {
    if bits <= 0.0 || norm == 0.0 {
        return 0.0;
    }
    if !(rate > 0.0) || !(y > 0.0) {
        return f64::INFINITY;
    }
    let root = bits.sqrt();
    0.5 * (y * root * norm + bits * root * norm.powi(3) / (y * rate * rate))
}

/// Everything about the precoding step that is fixed by the incumbent split
/// and subchannel shares.
pub struct PrecodingProblem<'a> {
    realization: &'a ChannelRealization,
    cfg: &'a ScenarioConfig,
    remote: Vec<f64>,
    t_trans: Vec<f64>,
    t_cp: Vec<f64>,
    /// Largest remote delay allowed by `T^max`.
    caps: Vec<f64>,
    constant_energy: f64,
}

/// Surrogate cost split into the parts the solver needs.
#[derive(Debug, Clone)]
struct SurrogateEval {
    objective: f64,
    remote_delay: Vec<f64>,
    violation: f64,
    rates: Vec<f64>,
}

impl<'a> PrecodingProblem<'a> {
    pub fn new(decision: &Decision, realization: &'a ChannelRealization, cfg: &'a ScenarioConfig) -> Self {
        let n = cfg.num_vts;
        let remote: Vec<f64> = decision.split_remote_bits.iter().map(|s| s.max(0.0)).collect();
        let t_trans: Vec<f64> = (0..n)
            .map(|vt| {
                transfer_time(
                    cfg.task_bits[vt],
                    rate_terrestrial(decision.alpha[vt], cfg, realization.terr_gains[vt]),
                )
            })
            .collect();
        let t_cp: Vec<f64> = decision
            .split_local_bits
            .iter()
            .map(|s| s.max(0.0) / cfg.rsu_freq_hz)
            .collect();
        let caps = t_trans.iter().map(|t| cfg.max_delay_s - t).collect();
        let constant_energy = (0..n)
            .map(|vt| {
                cfg.vt_tx_power_w * t_trans[vt]
                    + cfg.local_energy_per_bit() * decision.split_local_bits[vt].max(0.0)
                    + cfg.remote_compute_energy_per_bit() * remote[vt]
            })
            .sum();
        PrecodingProblem {
            realization,
            cfg,
            remote,
            t_trans,
            t_cp,
            caps,
            constant_energy,
        }
    }

    fn is_active(&self, vt: usize) -> bool {
        self.remote[vt] > 0.0
    }

    fn any_active(&self) -> bool {
        self.remote.iter().any(|&s| s > 0.0)
    }

    /// Closed-form auxiliaries at `precoders`.
    pub fn refresh(&self, precoders: &[Vec<Complex64>], decision: &Decision) -> Result<FpState> {
        let gamma = update_gamma(precoders, self.realization, self.cfg);
        let z = update_z(precoders, &gamma, self.realization, self.cfg);
        let rates: Vec<f64> = (0..precoders.len())
            .map(|vt| surrogate_rate(self.realization, precoders, &gamma, &z, vt, self.cfg))
            .collect();
        let y = update_y(precoders, &rates, decision, self.cfg)?;
        let lambda_dual = update_lambda(&gamma, self.cfg);
        let t_aux = self.epigraph(&rates);
        Ok(FpState {
            gamma,
            z,
            y,
            lambda_dual,
            t_aux,
        })
    }

    fn epigraph(&self, rates: &[f64]) -> f64 {
        (0..rates.len())
            .filter(|&vt| self.is_active(vt))
            .map(|vt| transfer_time(self.remote[vt], rates[vt]) + self.remote[vt] / self.cfg.cpu_freq_hz)
            .fold(0.0, f64::max)
    }

    /// Surrogate cost (the full weighted objective with `R̃` and the energy
    /// bound in place of the true rate and energy).
    pub fn objective(&self, precoders: &[Vec<Complex64>], state: &FpState) -> f64 {
        self.eval(precoders, state).objective
    }

    fn eval(&self, precoders: &[Vec<Complex64>], state: &FpState) -> SurrogateEval {
        let cfg = self.cfg;
        let n = cfg.num_vts;
        let mut rates = vec![0.0; n];
        let mut remote_delay = vec![0.0; n];
        let mut violation = 0.0;
        let mut energy = self.constant_energy;
        let mut totals = Vec::with_capacity(n);
        for vt in 0..n {
            if self.is_active(vt) {
                let bits = self.remote[vt];
                let rate = surrogate_rate(self.realization, precoders, &state.gamma, &state.z, vt, cfg);
                rates[vt] = rate;
                let delay = if rate > 0.0 { bits / rate } else { f64::INFINITY } + bits / cfg.cpu_freq_hz;
                remote_delay[vt] = delay;
                if delay > self.caps[vt] {
                    violation += delay - self.caps[vt];
                }
                energy += energy_bound(bits, precoder_power(&precoders[vt]).sqrt(), rate, state.y[vt]);
            }
            totals.push(self.t_trans[vt] + remote_delay[vt].max(self.t_cp[vt]));
        }
        let delay = cfg.delay_aggregation.aggregate(&totals);
        let objective = weighted(cfg.weight_beta, delay, energy);
        SurrogateEval {
            objective: sanitize(objective),
            remote_delay,
            violation: sanitize(violation),
            rates,
        }
    }

    /// Gradient of the penalized surrogate with respect to the real and
    /// imaginary parts of every active precoder, packed as complex numbers.
    fn gradient(
        &self,
        precoders: &[Vec<Complex64>],
        state: &FpState,
        eval: &SurrogateEval,
        penalty: f64,
    ) -> Vec<Vec<Complex64>> {
        let cfg = self.cfg;
        let n = cfg.num_vts;
        let k = cfg.num_saps;
        let beta = cfg.weight_beta;
        let zero = Complex64::new(0.0, 0.0);
        let mut grad = vec![vec![zero; k]; n];

        // Weight of each VT's remote delay in the objective.
        let mut delay_weight = vec![0.0; n];
        match cfg.delay_aggregation {
            DelayAggregation::Sum => {
                for vt in 0..n {
                    if self.is_active(vt) && eval.remote_delay[vt] >= self.t_cp[vt] {
                        delay_weight[vt] = beta;
                    }
                }
            }
            DelayAggregation::Max => {
                let worst = (0..n)
                    .map(|vt| (vt, self.t_trans[vt] + eval.remote_delay[vt].max(self.t_cp[vt])))
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                if let Some((vt, _)) = worst {
                    if self.is_active(vt) && eval.remote_delay[vt] >= self.t_cp[vt] {
                        delay_weight[vt] = beta;
                    }
                }
            }
        }

        for i in 0..n {
            if !self.is_active(i) {
                continue;
            }
            let bits = self.remote[i];
            let rate = eval.rates[i];
            let norm = precoder_power(&precoders[i]).sqrt();
            let y = state.y[i];
            let mut d_rate = -bits / (rate * rate) * delay_weight[i];
            if eval.remote_delay[i] > self.caps[i] {
                d_rate -= penalty * bits / (rate * rate);
            }
            if y > 0.0 && norm > 0.0 {
                let cube = bits * bits.sqrt() * norm.powi(3);
                d_rate -= (1.0 - beta) * cube / (y * rate * rate * rate);
                // Direct dependence of the energy bound on ‖v_i‖.
                let direct = 0.5
                    * (1.0 - beta)
                    * (y * bits.sqrt() / norm + 3.0 * cube / (norm * norm * y * rate * rate));
                for (g, v) in grad[i].iter_mut().zip(&precoders[i]) {
                    *g += v * direct;
                }
            }

            // ∇_{v_j} R̃_i = (δ_ij 2 z c s_ii/|s_ii| − 2 z² s_ij) conj(h_i) / ln 2
            let h = &self.realization.sat_channels[i];
            let z = state.z[i];
            let c = (cfg.sat_bandwidth_hz * (1.0 + state.gamma[i])).sqrt();
            for j in 0..n {
                if !self.is_active(j) {
                    continue;
                }
                let s = stream_gain(h, &precoders[j]);
                let mut coeff = -2.0 * z * z * s;
                if j == i && s.norm() > 0.0 {
                    coeff += 2.0 * z * c * s / s.norm();
                }
                let scale = coeff * (d_rate / LN_2);
                for (g, hk) in grad[j].iter_mut().zip(h) {
                    *g += scale * hk.conj();
                }
            }
        }
        grad
    }

    fn project(&self, precoders: &mut [Vec<Complex64>]) {
        let cap = self.cfg.max_precoder_power_w;
        for v in precoders.iter_mut() {
            let p = precoder_power(v);
            if p > cap {
                let s = (cap / p).sqrt();
                v.iter_mut().for_each(|x| *x *= s);
            }
        }
    }
}

fn sanitize(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

fn penalized(eval: &SurrogateEval, penalty: f64, require_feasible: bool) -> f64 {
    if require_feasible && eval.violation > 0.0 {
        return f64::INFINITY;
    }
    if eval.violation > 0.0 {
        eval.objective + penalty * eval.violation
    } else {
        eval.objective
    }
}

/// Matched-filter precoders at half the power budget for VTs with remote
/// bits, zero otherwise.
pub fn matched_filter_init(
    decision: &Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Vec<Vec<Complex64>> {
    (0..cfg.num_vts)
        .map(|vt| {
            if decision.split_remote_bits[vt] > 0.0 {
                matched_filter(&realization.sat_channels[vt], 0.5 * cfg.max_precoder_power_w)
            } else {
                vec![Complex64::new(0.0, 0.0); cfg.num_saps]
            }
        })
        .collect()
}

/// `√P · conj(h)/‖h‖`.
pub fn matched_filter(h: &[Complex64], power: f64) -> Vec<Complex64> {
    let norm = precoder_power(h).sqrt();
    if norm == 0.0 {
        let mut v = vec![Complex64::new(0.0, 0.0); h.len()];
        if let Some(first) = v.first_mut() {
            *first = Complex64::new(power.sqrt(), 0.0);
        }
        return v;
    }
    h.iter().map(|x| x.conj() * (power.sqrt() / norm)).collect()
}

/// Minimizes the surrogate cost over the precoders with `state` fixed.
///
/// Projected gradient with Armijo backtracking; the `T^max` constraint on
/// every remote delay enters as an exact penalty. Starting from a point that
/// meets the deadlines, steps that would break them are rejected.
pub fn solve_v(
    state: &FpState,
    decision: &Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Result<Vec<Vec<Complex64>>> {
    let problem = PrecodingProblem::new(decision, realization, cfg);
    problem.solve_v_from(decision.precoders.clone(), state)
}

impl PrecodingProblem<'_> {
    fn solve_v_from(&self, start: Vec<Vec<Complex64>>, state: &FpState) -> Result<Vec<Vec<Complex64>>> {
        let mut current = start;
        self.project(&mut current);
        for vt in 0..self.cfg.num_vts {
            if !self.is_active(vt) {
                current[vt].iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            }
        }
        if !self.any_active() {
            return Ok(current);
        }

        let first = self.eval(&current, state);
        let scale = first.objective.abs().max(1.0);
        let mut weight = 1.0;
        loop {
            let start_eval = self.eval(&current, state);
            let keep_feasible = start_eval.violation == 0.0;
            current = self.descend(current, state, weight * scale, keep_feasible)?;
            let end = self.eval(&current, state);
            if end.violation == 0.0 || weight >= PENALTY_CAP {
                break;
            }
            weight = (weight * PENALTY_GROWTH).min(PENALTY_CAP);
        }
        Ok(current)
    }

    fn descend(
        &self,
        mut current: Vec<Vec<Complex64>>,
        state: &FpState,
        penalty: f64,
        keep_feasible: bool,
    ) -> Result<Vec<Vec<Complex64>>> {
        let cfg = self.cfg;
        let dim_scale = ((cfg.num_vts * cfg.num_saps) as f64).sqrt();
        let mut eval = self.eval(&current, state);
        let mut value = penalized(&eval, penalty, keep_feasible);
        if !value.is_finite() {
            return Ok(current);
        }
        let mut step = INITIAL_STEP;
        for _ in 0..INNER_MAX_ITER {
            let grad = self.gradient(&current, state, &eval, penalty);
            if grad
                .iter()
                .flatten()
                .any(|g| !g.re.is_finite() || !g.im.is_finite())
            {
                return Err(Error::Numerical("non-finite precoder gradient".into()));
            }

            // Projected-gradient residual with a unit step.
            let mut probe = axpy(&current, &grad, -1.0);
            self.project(&mut probe);
            let residual = distance(&probe, &current);
            if residual <= 1e-6 * dim_scale {
                break;
            }

            let mut accepted = None;
            let mut trial_step = step;
            while trial_step > MIN_STEP {
                let mut candidate = axpy(&current, &grad, -trial_step);
                self.project(&mut candidate);
                let cand_eval = self.eval(&candidate, state);
                let cand_value = penalized(&cand_eval, penalty, keep_feasible);
                let decrease: f64 = inner(&grad, &candidate, &current);
                if cand_value <= value + ARMIJO_C * decrease && cand_value < value {
                    accepted = Some((candidate, cand_eval, cand_value));
                    break;
                }
                trial_step *= BACKTRACK;
            }
            let Some((next, next_eval, next_value)) = accepted else {
                break;
            };
            let improvement = value - next_value;
            current = next;
            eval = next_eval;
            value = next_value;
            // Allow the step to grow back after easy iterations.
            step = (trial_step * 2.0).min(INITIAL_STEP.max(trial_step * 2.0));
            if improvement <= f64::EPSILON * value.abs() {
                break;
            }
        }
        Ok(current)
    }

    /// Block-coordinate loop over `γ → z → y → v`.
    pub fn solve(&self, decision: &Decision, tol: f64, max_rounds: usize) -> Result<PrecodingSolution> {
        let cfg = self.cfg;
        let n = cfg.num_vts;
        let mut precoders = decision.precoders.clone();
        for vt in 0..n {
            if !self.is_active(vt) {
                precoders[vt] = vec![Complex64::new(0.0, 0.0); cfg.num_saps];
            } else if precoder_power(&precoders[vt]) == 0.0 {
                precoders[vt] =
                    matched_filter(&self.realization.sat_channels[vt], 0.5 * cfg.max_precoder_power_w);
            }
        }
        self.project(&mut precoders);

        let mut state = self.refresh(&precoders, decision)?;
        let mut value = self.objective(&precoders, &state);
        let mut trace = vec![value];
        let mut best = (precoders.clone(), state.clone(), value);
        let mut rounds = 0;

        if self.any_active() {
            for _ in 0..max_rounds {
                rounds += 1;
                let next = self.solve_v_from(precoders.clone(), &state)?;
                let next_state = self.refresh(&next, decision)?;
                let next_value = self.objective(&next, &next_state);
                trace.push(next_value);
                let improvement = value - next_value;
                precoders = next;
                state = next_state;
                if next_value < best.2 || (best.2.is_infinite() && next_value.is_finite()) {
                    best = (precoders.clone(), state.clone(), next_value);
                }
                let done = improvement.is_finite() && improvement <= tol * value.abs();
                value = next_value;
                if done {
                    break;
                }
            }
        }

        let (precoders, state, _) = best;
        let surrogate_rates: Vec<f64> = (0..n)
            .map(|vt| surrogate_rate(self.realization, &precoders, &state.gamma, &state.z, vt, cfg))
            .collect();
        for vt in 0..n {
            if self.is_active(vt) {
                let delay =
                    transfer_time(self.remote[vt], surrogate_rates[vt]) + self.remote[vt] / cfg.cpu_freq_hz;
                if delay > self.caps[vt] * (1.0 + 1e-9) {
                    return Err(Error::Infeasible {
                        vt,
                        reason: format!(
                            "remote delay {delay:.6e} s exceeds the {:.6e} s left by T^max",
                            self.caps[vt]
                        ),
                    });
                }
            }
        }
        Ok(PrecodingSolution {
            t_aux: state.t_aux,
            precoders,
            fp_state: state,
            surrogate_rates,
            objective_trace: trace,
            rounds,
        })
    }
}

/// Alternates closed-form auxiliary updates with the precoder solve until the
/// surrogate cost stalls; returns the best iterate seen.
pub fn solve_precoding_subproblem(
    decision: &Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
    tol: f64,
    max_rounds: usize,
) -> Result<PrecodingSolution> {
    PrecodingProblem::new(decision, realization, cfg).solve(decision, tol, max_rounds)
}

fn axpy(x: &[Vec<Complex64>], d: &[Vec<Complex64>], a: f64) -> Vec<Vec<Complex64>> {
    x.iter()
        .zip(d)
        .map(|(xr, dr)| xr.iter().zip(dr).map(|(p, q)| p + q * a).collect())
        .collect()
}

fn distance(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(p, q)| (p - q).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `⟨g, a − b⟩` over the real parametrization.
fn inner(g: &[Vec<Complex64>], a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    g.iter()
        .flatten()
        .zip(a.iter().flatten().zip(b.iter().flatten()))
        .map(|(gi, (ai, bi))| {
            let d = ai - bi;
            gi.re * d.re + gi.im * d.im
        })
        .sum()
}
