#![allow(dead_code)]

pub mod oracles;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use satvec::channel::ChannelRealization;
use satvec::experiment::ScenarioParams;
use satvec::model::{Decision, DelayAggregation, ScenarioConfig};
use satvec::rng::trial_seed;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

pub fn cn<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// A scenario with unit-scale channels where both the local and the remote
/// path are competitive.
pub fn random_instance(seed: u64, i: usize, k: usize) -> (ScenarioConfig, ChannelRealization) {
    let mut r = rng(seed);
    let task_bits = (0..i).map(|_| r.random_range(0.5e6..=2e6)).collect();
    let cfg = ScenarioConfig {
        num_vts: i,
        num_saps: k,
        total_bandwidth_hz: 1e6,
        sat_bandwidth_hz: r.random_range(0.5e6..=2e6),
        vt_tx_power_w: r.random_range(0.05..=0.5),
        max_precoder_power_w: r.random_range(0.5..=4.0),
        rsu_freq_hz: r.random_range(0.5e6..=2e6),
        cpu_freq_hz: r.random_range(5e6..=2e7),
        kappa_rsu: log_uniform(&mut r, 1e-21, 1e-19),
        kappa_sap: log_uniform(&mut r, 1e-24, 1e-22),
        noise_terr_w: 1e-3,
        noise_sat_w: log_uniform(&mut r, 0.05, 1.0),
        weight_beta: r.random_range(0.1..=0.9),
        max_delay_s: f64::INFINITY,
        task_bits,
        delay_aggregation: DelayAggregation::Sum,
    };
    let real = ChannelRealization {
        sat_channels: (0..i).map(|_| (0..k).map(|_| cn(&mut r)).collect()).collect(),
        terr_gains: (0..i).map(|_| log_uniform(&mut r, 0.1, 10.0)).collect(),
    };
    (cfg, real)
}

/// Random feasible decision for `cfg` with `T^max = ∞`.
pub fn random_decision<R: Rng>(r: &mut R, cfg: &ScenarioConfig) -> Decision {
    let i = cfg.num_vts;
    let mut d = Decision::all_local(cfg);
    let weights: Vec<f64> = (0..i).map(|_| r.random_range(0.1..=1.0)).collect();
    let total: f64 = weights.iter().sum();
    d.alpha = weights.iter().map(|w| w / total).collect();
    for vt in 0..i {
        let u: f64 = r.random_range(0.05..=0.95);
        let (remote, local) = satvec::split::exact_split(u * cfg.task_bits[vt], cfg.task_bits[vt]);
        d.split_remote_bits[vt] = remote;
        d.split_local_bits[vt] = local;
        let v: Vec<Complex64> = (0..cfg.num_saps).map(|_| cn(r)).collect();
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let target = r.random_range(0.1..=1.0) * cfg.max_precoder_power_w.sqrt();
        d.precoders[vt] = v.iter().map(|x| x * (target / norm)).collect();
    }
    d
}

/// The default physical scenario of trial `trial` under master seed `seed`.
pub fn default_instance(seed: u64, trial: u64) -> (ScenarioConfig, ChannelRealization) {
    ScenarioParams::default()
        .draw(trial_seed(seed, trial))
        .expect("default scenario draws")
}
