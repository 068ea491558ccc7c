//! Alternating optimization over α, the precoders and the task split, plus the
//! baseline schemes it is compared against.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;

use crate::alpha::optimize_alpha;
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::{check_feasible, evaluate, CostBreakdown, Decision, ScenarioConfig};
use crate::precoding::{
    matched_filter_init, solve_precoding_subproblem, DEFAULT_MAX_ROUNDS, DEFAULT_TOLERANCE,
};
use crate::rng::{substream, Purpose};
use crate::split::{exact_split, optimize_split};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Outer loop stops once the objective changes by at most this much.
    pub tolerance: f64,
    pub max_iter: usize,
    pub fp_tolerance: f64,
    pub fp_max_rounds: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-4,
            max_iter: 1000,
            fp_tolerance: DEFAULT_TOLERANCE,
            fp_max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }
}

/// One pass of the alternating loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    /// 0 is the starting point.
    pub iteration: usize,
    pub objective: f64,
    /// Objective after the α, precoder and split steps of this pass.
    pub subproblem_objectives: [f64; 3],
    pub feasible: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub decision: Decision,
    pub cost: CostBreakdown,
    pub trace: Vec<SolveTrace>,
    pub iterations: usize,
    pub converged: bool,
    /// Why the loop stopped early, if a step failed.
    pub diagnostic: Option<String>,
}

impl SolveResult {
    pub fn objectives(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.objective).collect()
    }
}

/// Which blocks the outer loop updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Blocks {
    precoders: bool,
    split: bool,
}

const ALL_BLOCKS: Blocks = Blocks {
    precoders: true,
    split: true,
};

/// Runs `α → V → S` passes from `initial` and returns the best iterate.
///
/// A failing step ends the loop; the best iterate so far is returned with
/// `converged = false` and the error text in `diagnostic`.
pub fn alternate_optimize(
    initial: Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    run_blocks(initial, realization, cfg, opts, ALL_BLOCKS)
}

fn one_pass(
    current: &mut Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
    opts: &SolverOptions,
    blocks: Blocks,
) -> Result<[f64; 3]> {
    let mut after = [0.0; 3];
    current.alpha = optimize_alpha(current, realization, cfg)?;
    after[0] = evaluate(current, realization, cfg)?.objective;
    if blocks.precoders {
        let sol =
            solve_precoding_subproblem(current, realization, cfg, opts.fp_tolerance, opts.fp_max_rounds)?;
        current.precoders = sol.precoders;
    }
    after[1] = evaluate(current, realization, cfg)?.objective;
    if blocks.split {
        *current = optimize_split(current, realization, cfg)?;
    }
    after[2] = evaluate(current, realization, cfg)?.objective;
    Ok(after)
}

fn run_blocks(
    initial: Decision,
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
    opts: &SolverOptions,
    blocks: Blocks,
) -> Result<SolveResult> {
    cfg.validate()?;
    if let Some(v) = check_feasible(&initial, realization, cfg).first() {
        return Err(Error::Domain(format!("infeasible starting point: {v}")));
    }
    let clock = Instant::now();
    let mut current = initial;
    let mut value = evaluate(&current, realization, cfg)?.objective;
    let mut trace = vec![SolveTrace {
        iteration: 0,
        objective: value,
        subproblem_objectives: [value; 3],
        feasible: true,
        wall_time_s: clock.elapsed().as_secs_f64(),
    }];
    let mut best = (current.clone(), value);
    let mut converged = false;
    let mut diagnostic = None;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let mut next_decision = current.clone();
        let after = match one_pass(&mut next_decision, realization, cfg, opts, blocks) {
            Ok(a) => a,
            Err(e) => {
                diagnostic = Some(e.to_string());
                break;
            }
        };
        current = next_decision;
        let next = after[2];
        let feasible = check_feasible(&current, realization, cfg).is_empty();
        trace.push(SolveTrace {
            iteration: iterations,
            objective: next,
            subproblem_objectives: after,
            feasible,
            wall_time_s: clock.elapsed().as_secs_f64(),
        });
        if feasible && next < best.1 {
            best = (current.clone(), next);
        }
        // Equal infinite values would give `∞ − ∞`.
        let change = if next == value { 0.0 } else { (value - next).abs() };
        value = next;
        if change <= opts.tolerance {
            converged = true;
            break;
        }
    }

    let (decision, _) = best;
    let cost = evaluate(&decision, realization, cfg)?;
    Ok(SolveResult {
        decision,
        cost,
        trace,
        iterations,
        converged,
        diagnostic,
    })
}

fn point(iteration: usize, objective: f64) -> SolveTrace {
    SolveTrace {
        iteration,
        objective,
        subproblem_objectives: [objective; 3],
        feasible: true,
        wall_time_s: 0.0,
    }
}

/// Everything at the RSU: no remote bits, zero precoders, equal shares.
pub fn rsu_only_start(cfg: &ScenarioConfig) -> Decision {
    Decision::all_local(cfg)
}

/// Everything to the SAPs with half-power matched filters.
pub fn saps_only_start(realization: &ChannelRealization, cfg: &ScenarioConfig) -> Decision {
    let mut d = Decision::all_local(cfg);
    d.split_remote_bits = cfg.task_bits.clone();
    d.split_local_bits = vec![0.0; cfg.num_vts];
    d.precoders = matched_filter_init(&d, realization, cfg);
    d
}

/// Half of every task to each side with half-power matched filters.
pub fn half_split_start(realization: &ChannelRealization, cfg: &ScenarioConfig) -> Decision {
    let mut d = Decision::all_local(cfg);
    for vt in 0..cfg.num_vts {
        let (r, l) = exact_split(cfg.task_bits[vt] / 2.0, cfg.task_bits[vt]);
        d.split_remote_bits[vt] = r;
        d.split_local_bits[vt] = l;
    }
    d.precoders = matched_filter_init(&d, realization, cfg);
    d
}

/// All computation at the RSU; only the subchannel shares are optimized.
pub fn baseline_rsu_only(realization: &ChannelRealization, cfg: &ScenarioConfig) -> Result<SolveResult> {
    let mut d = rsu_only_start(cfg);
    let start = evaluate(&d, realization, cfg)?.objective;
    d.alpha = optimize_alpha(&d, realization, cfg)?;
    let cost = evaluate(&d, realization, cfg)?;
    let trace = vec![point(0, start), point(1, cost.objective)];
    Ok(SolveResult {
        decision: d,
        cost,
        trace,
        iterations: 1,
        converged: true,
        diagnostic: None,
    })
}

/// All computation at the SAPs; subchannel shares and precoders are optimized
/// alternately.
pub fn baseline_saps_only(
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    run_blocks(
        saps_only_start(realization, cfg),
        realization,
        cfg,
        opts,
        Blocks {
            precoders: true,
            split: false,
        },
    )
}

/// Uniformly random split, equal shares and half-power matched filters,
/// evaluated without optimization. A draw that misses a deadline is an
/// error.
pub fn baseline_random(
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<SolveResult> {
    let mut rng = substream(seed, Purpose::RandomSplit);
    let mut d = Decision::all_local(cfg);
    for vt in 0..cfg.num_vts {
        let u: f64 = rng.random();
        let (r, l) = exact_split(u * cfg.task_bits[vt], cfg.task_bits[vt]);
        d.split_remote_bits[vt] = r;
        d.split_local_bits[vt] = l;
    }
    d.precoders = matched_filter_init(&d, realization, cfg);
    let cost = evaluate(&d, realization, cfg)?;
    if let Some(v) = check_feasible(&d, realization, cfg).first() {
        return Err(Error::Infeasible {
            vt: v.vt().unwrap_or(0),
            reason: format!("random decision violates the {v}"),
        });
    }
    let trace = vec![point(0, cost.objective)];
    Ok(SolveResult {
        decision: d,
        cost,
        trace,
        iterations: 0,
        converged: true,
        diagnostic: None,
    })
}

/// Runs the alternating loop from the RSU-only, SAPs-only and half-split
/// starts and keeps the lowest objective. Starts that fail are skipped.
pub fn multi_start(
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let starts = [
        rsu_only_start(cfg),
        saps_only_start(realization, cfg),
        half_split_start(realization, cfg),
    ];
    let mut best: Option<SolveResult> = None;
    let mut last_err = None;
    for start in starts {
        match alternate_optimize(start, realization, cfg, opts) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.cost.objective < b.cost.objective) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Numerical("no start produced a result".into())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Proposed,
    RsuOnly,
    SapsOnly,
    Random,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Proposed,
        Scheme::RsuOnly,
        Scheme::SapsOnly,
        Scheme::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::RsuOnly => "rsu_only",
            Scheme::SapsOnly => "saps_only",
            Scheme::Random => "random",
        }
    }

    /// `seed` only matters for [`Scheme::Random`].
    pub fn solve(
        self,
        realization: &ChannelRealization,
        cfg: &ScenarioConfig,
        opts: &SolverOptions,
        seed: u64,
    ) -> Result<SolveResult> {
        match self {
            Scheme::Proposed => multi_start(realization, cfg, opts),
            Scheme::RsuOnly => baseline_rsu_only(realization, cfg),
            Scheme::SapsOnly => baseline_saps_only(realization, cfg, opts),
            Scheme::Random => baseline_random(realization, cfg, seed),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown scheme `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DelayAggregation;
    use num_complex::Complex64;

    fn small_config() -> ScenarioConfig {
        ScenarioConfig {
            num_vts: 3,
            num_saps: 2,
            total_bandwidth_hz: 1e6,
            sat_bandwidth_hz: 1e6,
            vt_tx_power_w: 0.2,
            max_precoder_power_w: 2.0,
            rsu_freq_hz: 1e6,
            cpu_freq_hz: 1e7,
            kappa_rsu: 1e-20,
            kappa_sap: 1e-22,
            noise_terr_w: 1e-3,
            noise_sat_w: 1e-2,
            weight_beta: 0.5,
            max_delay_s: f64::INFINITY,
            task_bits: vec![2e6, 1e6, 3e6],
            delay_aggregation: DelayAggregation::Sum,
        }
    }

    fn small_realization() -> ChannelRealization {
        ChannelRealization {
            sat_channels: vec![
                vec![Complex64::new(0.5, 0.1), Complex64::new(-0.2, 0.3)],
                vec![Complex64::new(0.1, -0.4), Complex64::new(0.6, 0.2)],
                vec![Complex64::new(0.3, 0.3), Complex64::new(0.2, -0.5)],
            ],
            terr_gains: vec![2.0, 0.5, 1.0],
        }
    }

    #[test]
    fn trace_is_monotone_and_feasible() {
        let cfg = small_config();
        let real = small_realization();
        let r = alternate_optimize(
            half_split_start(&real, &cfg),
            &real,
            &cfg,
            &SolverOptions::default(),
        )
        .unwrap();
        let obj = r.objectives();
        for w in obj.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{obj:?}");
        }
        assert!(check_feasible(&r.decision, &real, &cfg).is_empty());
        assert!(r.converged);
    }

    #[test]
    fn proposed_beats_every_baseline() {
        let cfg = small_config();
        let real = small_realization();
        let opts = SolverOptions::default();
        let p = Scheme::Proposed
            .solve(&real, &cfg, &opts, 7)
            .unwrap()
            .cost
            .objective;
        for s in [Scheme::RsuOnly, Scheme::SapsOnly, Scheme::Random] {
            let b = s.solve(&real, &cfg, &opts, 7).unwrap().cost.objective;
            assert!(p <= b * (1.0 + 1e-9), "{s}: {p} > {b}");
        }
    }

    #[test]
    fn rsu_only_has_no_remote_bits() {
        let cfg = small_config();
        let real = small_realization();
        let r = baseline_rsu_only(&real, &cfg).unwrap();
        assert!(r.decision.split_remote_bits.iter().all(|&s| s == 0.0));
        assert_eq!(r.cost.e_sat, 0.0);
    }

    #[test]
    fn random_baseline_is_reproducible() {
        let cfg = small_config();
        let real = small_realization();
        let a = baseline_random(&real, &cfg, 11).unwrap();
        let b = baseline_random(&real, &cfg, 11).unwrap();
        assert_eq!(a, b);
        for vt in 0..3 {
            assert_eq!(
                a.decision.split_remote_bits[vt] + a.decision.split_local_bits[vt],
                cfg.task_bits[vt]
            );
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("nope".parse::<Scheme>().is_err());
    }
}
