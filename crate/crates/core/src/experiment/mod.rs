//! Monte-Carlo experiment driver: sweeps, trials, schemes and CSV output.

mod config;
mod output;
mod scenario;

pub use config::{apply_key, parse_config, ConfigError, ExperimentSpec, SweepParam};
pub use output::{format_float, trace_path, write_summary, write_trace, SUMMARY_HEADER, TRACE_HEADER};
pub use scenario::{noise_power_w, ScenarioParams, BITS_PER_MB};

use crate::error::Result;
use crate::orchestrator::{Scheme, SolveResult};
use crate::rng::trial_seed;

/// How independent trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl ExecMode {
    /// `jobs.map(f)` in input order.
    pub fn map<T, R, F>(self, jobs: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            ExecMode::Sequential => jobs.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            ExecMode::Parallel => {
                use rayon::prelude::*;
                jobs.par_iter().map(f).collect()
            }
        }
    }
}

/// One (sweep value, scheme, trial) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub sweep_index: usize,
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub trial: usize,
    pub seed: u64,
    /// `Err` holds the message of a trial that could not be solved.
    pub outcome: std::result::Result<SolveResult, String>,
}

impl TrialRecord {
    pub fn objective(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|r| r.cost.objective)
    }
}

/// Solves one trial of one scheme.
pub fn run_trial(
    spec: &ExperimentSpec,
    sweep_value: f64,
    scheme: Scheme,
    trial: usize,
) -> Result<SolveResult> {
    let params = spec.sweep_param.apply(&spec.scenario, sweep_value);
    let seed = trial_seed(spec.seed, trial as u64);
    let (cfg, real) = params.draw(seed)?;
    scheme.solve(&real, &cfg, &spec.solver, seed)
}

/// Every trial of `spec`, sorted by (sweep value, scheme, trial).
pub fn run_experiment(spec: &ExperimentSpec, mode: ExecMode) -> Vec<TrialRecord> {
    let mut jobs = Vec::new();
    for (sweep_index, &value) in spec.sweep_values.iter().enumerate() {
        for &scheme in &spec.schemes {
            for trial in 0..spec.trials {
                jobs.push((sweep_index, value, scheme, trial));
            }
        }
    }
    let mut records = mode.map(&jobs, |&(sweep_index, sweep_value, scheme, trial)| TrialRecord {
        sweep_index,
        sweep_value,
        scheme,
        trial,
        seed: trial_seed(spec.seed, trial as u64),
        outcome: run_trial(spec, sweep_value, scheme, trial).map_err(|e| e.to_string()),
    });
    records.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(a.sweep_index.cmp(&b.sweep_index))
            .then(a.scheme.cmp(&b.scheme))
            .then(a.trial.cmp(&b.trial))
    });
    records
}

/// Mean objective per (sweep value, scheme) over the trials that solved.
pub fn mean_objectives(records: &[TrialRecord]) -> Vec<(f64, Scheme, f64)> {
    let mut out: Vec<(f64, Scheme, f64, usize)> = Vec::new();
    for r in records {
        let Some(obj) = r.objective() else { continue };
        match out.iter_mut().find(|e| e.0 == r.sweep_value && e.1 == r.scheme) {
            Some(e) => {
                e.2 += obj;
                e.3 += 1;
            }
            None => out.push((r.sweep_value, r.scheme, obj, 1)),
        }
    }
    out.into_iter()
        .map(|(v, s, sum, n)| (v, s, sum / n as f64))
        .collect()
}
