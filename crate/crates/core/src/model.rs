//! Cost accounting shared by every solver and baseline.
//!
//! A [`Decision`] fixes the task split, the satellite precoders and the
//! terrestrial subchannel shares. [`evaluate`] turns it into per-VT delays,
//! aggregate energies and the weighted objective
//! `β · delay + (1 − β) · energy`.

use std::fmt;

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

/// Relative tolerance used by [`check_feasible`].
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// How per-VT total delays enter the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayAggregation {
    #[default]
    Sum,
    Max,
}

impl DelayAggregation {
    pub fn aggregate(self, delays: &[f64]) -> f64 {
        match self {
            DelayAggregation::Sum => delays.iter().sum(),
            DelayAggregation::Max => delays.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_vts: usize,
    pub num_saps: usize,
    pub total_bandwidth_hz: f64,
    pub sat_bandwidth_hz: f64,
    pub vt_tx_power_w: f64,
    pub max_precoder_power_w: f64,
    /// RSU compute rate, also the per-VT rate used for local delay.
    pub rsu_freq_hz: f64,
    pub cpu_freq_hz: f64,
    pub kappa_rsu: f64,
    pub kappa_sap: f64,
    pub noise_terr_w: f64,
    pub noise_sat_w: f64,
    pub weight_beta: f64,
    pub max_delay_s: f64,
    pub task_bits: Vec<f64>,
    pub delay_aggregation: DelayAggregation,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_vts == 0 || self.num_saps == 0 {
            return Err(Error::Domain("need at least one VT and one SAP".into()));
        }
        if self.task_bits.len() != self.num_vts {
            return Err(Error::Dimension(format!(
                "{} task sizes for {} VTs",
                self.task_bits.len(),
                self.num_vts
            )));
        }
        if !(0.0..=1.0).contains(&self.weight_beta) {
            return Err(Error::Domain(format!("beta {} outside [0, 1]", self.weight_beta)));
        }
        let positives = [
            ("total_bandwidth_hz", self.total_bandwidth_hz),
            ("sat_bandwidth_hz", self.sat_bandwidth_hz),
            ("vt_tx_power_w", self.vt_tx_power_w),
            ("max_precoder_power_w", self.max_precoder_power_w),
            ("rsu_freq_hz", self.rsu_freq_hz),
            ("cpu_freq_hz", self.cpu_freq_hz),
            ("noise_terr_w", self.noise_terr_w),
            ("noise_sat_w", self.noise_sat_w),
            ("max_delay_s", self.max_delay_s),
        ];
        for (name, value) in positives {
            if !(value > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.kappa_rsu >= 0.0) || !(self.kappa_sap >= 0.0) {
            return Err(Error::Domain("switching capacitances must be nonnegative".into()));
        }
        if self.task_bits.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
            return Err(Error::Domain("task sizes must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// RSU computation energy per bit, `ρ_R (f^R)²`.
    pub fn local_energy_per_bit(&self) -> f64 {
        self.kappa_rsu * self.rsu_freq_hz * self.rsu_freq_hz
    }

    /// CPU computation energy per bit, `ρ_S (f^CPU)²`.
    pub fn remote_compute_energy_per_bit(&self) -> f64 {
        self.kappa_sap * self.cpu_freq_hz * self.cpu_freq_hz
    }

    /// `log2(1 + g p / σ²)` of the VT→RSU link with the whole band.
    pub fn terr_spectral_efficiency(&self, terr_gain: f64) -> f64 {
        (terr_gain * self.vt_tx_power_w / self.noise_terr_w).ln_1p() / std::f64::consts::LN_2
    }

    /// `β · delay + (1 − β) · energy`, skipping zero-weight terms so that an
    /// infinite component never produces `0 · ∞`.
    pub fn weighted(&self, delay: f64, energy: f64) -> f64 {
        weighted(self.weight_beta, delay, energy)
    }
}

pub(crate) fn weighted(beta: f64, delay: f64, energy: f64) -> f64 {
    let mut total = 0.0;
    if beta > 0.0 {
        total += beta * delay;
    }
    if beta < 1.0 {
        total += (1.0 - beta) * energy;
    }
    total
}

/// `bits / rate` with the conventions `0 / r = 0` and `b / 0 = ∞` for `b > 0`.
pub(crate) fn transfer_time(bits: f64, rate: f64) -> f64 {
    if bits <= 0.0 {
        0.0
    } else if rate > 0.0 {
        bits / rate
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub split_remote_bits: Vec<f64>,
    pub split_local_bits: Vec<f64>,
    /// `v_i`, one length-`K` vector per VT stream.
    pub precoders: Vec<Vec<Complex64>>,
    pub alpha: Vec<f64>,
}

impl Decision {
    /// All-local split, zero precoders and equal subchannel shares.
    pub fn all_local(cfg: &ScenarioConfig) -> Self {
        let i = cfg.num_vts;
        Decision {
            split_remote_bits: vec![0.0; i],
            split_local_bits: cfg.task_bits.clone(),
            precoders: vec![vec![Complex64::new(0.0, 0.0); cfg.num_saps]; i],
            alpha: vec![1.0 / i as f64; i],
        }
    }

    pub fn power(&self, vt: usize) -> f64 {
        precoder_power(&self.precoders[vt])
    }

    fn check_dims(&self, realization: &ChannelRealization, cfg: &ScenarioConfig) -> Result<()> {
        let i = cfg.num_vts;
        let k = cfg.num_saps;
        let ok = self.split_remote_bits.len() == i
            && self.split_local_bits.len() == i
            && self.alpha.len() == i
            && self.precoders.len() == i
            && self.precoders.iter().all(|v| v.len() == k)
            && realization.num_vts() == i
            && realization.num_saps() == k
            && realization.terr_gains.len() == i;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "decision or realization does not match I={i}, K={k}"
            )))
        }
    }
}

pub fn precoder_power(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum()
}

/// `h · v` without conjugation.
pub fn stream_gain(h: &[Complex64], v: &[Complex64]) -> Complex64 {
    h.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Useful power `M_i = |h_i v_i|²` and interference-plus-noise
/// `N_i = Σ_{j≠i} |h_i v_j|² + σ²` of stream `i`.
pub fn signal_and_interference(
    realization: &ChannelRealization,
    precoders: &[Vec<Complex64>],
    vt: usize,
    noise: f64,
) -> (f64, f64) {
    let h = &realization.sat_channels[vt];
    let mut signal = 0.0;
    let mut interference = noise;
    for (j, v) in precoders.iter().enumerate() {
        let p = stream_gain(h, v).norm_sqr();
        if j == vt {
            signal = p;
        } else {
            interference += p;
        }
    }
    (signal, interference)
}

/// VT→RSU rate `α B log2(1 + g p / σ²)`.
pub fn rate_terrestrial(alpha: f64, cfg: &ScenarioConfig, terr_gain: f64) -> f64 {
    if alpha <= 0.0 {
        return 0.0;
    }
    alpha * cfg.total_bandwidth_hz * cfg.terr_spectral_efficiency(terr_gain)
}

pub fn sinr_sat(
    realization: &ChannelRealization,
    precoders: &[Vec<Complex64>],
    vt: usize,
    cfg: &ScenarioConfig,
) -> f64 {
    let (m, n) = signal_and_interference(realization, precoders, vt, cfg.noise_sat_w);
    m / n
}

/// RSU→SAP rate `B_s log2(1 + SINR_i)`.
pub fn rate_sat(
    realization: &ChannelRealization,
    precoders: &[Vec<Complex64>],
    vt: usize,
    cfg: &ScenarioConfig,
) -> f64 {
    cfg.sat_bandwidth_hz * sinr_sat(realization, precoders, vt, cfg).ln_1p() / std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub rate_terr: Vec<f64>,
    pub rate_sat: Vec<f64>,
    pub t_trans_terr: Vec<f64>,
    pub t_cp_rsu: Vec<f64>,
    pub t_sat: Vec<f64>,
    pub t_tot: Vec<f64>,
    /// VT transmit energy plus RSU computation energy.
    pub e_rsu: f64,
    /// CPU computation energy plus RSU→SAP transmit energy.
    pub e_sat: f64,
    pub e_tot: f64,
    /// Aggregated delay entering the objective.
    pub delay: f64,
    pub objective: f64,
}

impl CostBreakdown {
    pub fn delay_sum(&self) -> f64 {
        self.t_tot.iter().sum()
    }
}

/// Delays, energies and the weighted objective of `decision`.
///
/// A zero rate carrying a positive number of bits yields an infinite delay
/// (and objective); the result never contains NaN.
pub fn evaluate(
    decision: &Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Result<CostBreakdown> {
    decision.check_dims(realization, cfg)?;
    let n = cfg.num_vts;
    let mut out = CostBreakdown {
        rate_terr: Vec::with_capacity(n),
        rate_sat: Vec::with_capacity(n),
        t_trans_terr: Vec::with_capacity(n),
        t_cp_rsu: Vec::with_capacity(n),
        t_sat: Vec::with_capacity(n),
        t_tot: Vec::with_capacity(n),
        e_rsu: 0.0,
        e_sat: 0.0,
        e_tot: 0.0,
        delay: 0.0,
        objective: 0.0,
    };
    let local_per_bit = cfg.local_energy_per_bit();
    let remote_per_bit = cfg.remote_compute_energy_per_bit();

    for vt in 0..n {
        let total = cfg.task_bits[vt];
        let local = decision.split_local_bits[vt].max(0.0);
        let remote = decision.split_remote_bits[vt].max(0.0);

        let r_terr = rate_terrestrial(decision.alpha[vt], cfg, realization.terr_gains[vt]);
        let r_sat = rate_sat(realization, &decision.precoders, vt, cfg);
        let t_trans = transfer_time(total, r_terr);
        let t_cp = local / cfg.rsu_freq_hz;
        let t_up = transfer_time(remote, r_sat);
        let t_sat = t_up + remote / cfg.cpu_freq_hz;

        out.e_rsu += cfg.vt_tx_power_w * t_trans + local_per_bit * local;
        // p_i^S = ‖v_i‖²; a precoder carrying no bits spends no transmit energy.
        let power = decision.power(vt);
        let tx_sat = if remote > 0.0 && power > 0.0 {
            power * t_up
        } else {
            0.0
        };
        out.e_sat += remote_per_bit * remote + tx_sat;

        out.rate_terr.push(r_terr);
        out.rate_sat.push(r_sat);
        out.t_trans_terr.push(t_trans);
        out.t_cp_rsu.push(t_cp);
        out.t_sat.push(t_sat);
        out.t_tot.push(t_trans + t_sat.max(t_cp));
    }
    out.e_tot = out.e_rsu + out.e_sat;
    out.delay = cfg.delay_aggregation.aggregate(&out.t_tot);
    out.objective = cfg.weighted(out.delay, out.e_tot);
    Ok(out)
}

/// A violated constraint of the joint problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    /// `S^R + S^S ≠ S^tot` or a negative part.
    Split { vt: usize },
    /// `‖v_i‖² > P^max`.
    PrecoderPower { vt: usize },
    /// `Σ α > 1` or a negative share.
    AlphaBudget,
    /// `t_i^tot > T^max`.
    Deadline { vt: usize },
    /// Wrong vector lengths; nothing else was checked.
    Shape,
}

impl Violation {
    /// The VT concerned, for per-VT constraints.
    pub fn vt(&self) -> Option<usize> {
        match *self {
            Violation::Split { vt } | Violation::PrecoderPower { vt } | Violation::Deadline { vt } => {
                Some(vt)
            }
            Violation::AlphaBudget | Violation::Shape => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Split { vt } => write!(f, "task split of VT {vt}"),
            Violation::PrecoderPower { vt } => write!(f, "precoder power of VT {vt}"),
            Violation::AlphaBudget => write!(f, "subchannel budget"),
            Violation::Deadline { vt } => write!(f, "deadline of VT {vt}"),
            Violation::Shape => write!(f, "decision shape"),
        }
    }
}

/// Lists every violated constraint; empty means feasible.
pub fn check_feasible(
    decision: &Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Vec<Violation> {
    let Ok(cost) = evaluate(decision, realization, cfg) else {
        return vec![Violation::Shape];
    };
    let mut out = Vec::new();
    for vt in 0..cfg.num_vts {
        let total = cfg.task_bits[vt];
        let local = decision.split_local_bits[vt];
        let remote = decision.split_remote_bits[vt];
        let slack = FEASIBILITY_TOL * total.max(f64::MIN_POSITIVE);
        if local < -slack || remote < -slack || (local + remote - total).abs() > slack {
            out.push(Violation::Split { vt });
        }
        if decision.power(vt) > cfg.max_precoder_power_w * (1.0 + FEASIBILITY_TOL) {
            out.push(Violation::PrecoderPower { vt });
        }
    }
    let alpha_sum: f64 = decision.alpha.iter().sum();
    if alpha_sum > 1.0 + FEASIBILITY_TOL || decision.alpha.iter().any(|&a| a < 0.0) {
        out.push(Violation::AlphaBudget);
    }
    for (vt, &t) in cost.t_tot.iter().enumerate() {
        if !(t <= cfg.max_delay_s * (1.0 + FEASIBILITY_TOL)) {
            out.push(Violation::Deadline { vt });
        }
    }
    out
}
