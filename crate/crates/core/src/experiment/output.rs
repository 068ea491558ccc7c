//! CSV output.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::ExperimentSpec;
use super::TrialRecord;

pub const SUMMARY_HEADER: [&str; 11] = [
    "sweep_param",
    "sweep_value",
    "scheme",
    "trial",
    "seed",
    "objective",
    "delay_sum_s",
    "energy_j",
    "iterations",
    "converged",
    "wall_time_s",
];

pub const TRACE_HEADER: [&str; 6] = [
    "sweep_param",
    "sweep_value",
    "scheme",
    "trial",
    "iteration",
    "objective",
];

/// `%.9g`: nine significant digits, trailing zeros dropped, exponent form
/// outside `[1e-4, 1e9)`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// `<stem>_trace.csv` next to the summary file.
pub fn trace_path(summary: &Path) -> PathBuf {
    let stem = summary
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    summary.with_file_name(format!("{stem}_trace.csv"))
}

fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink)
}

pub fn write_summary<W: Write>(sink: W, spec: &ExperimentSpec, records: &[TrialRecord]) -> csv::Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(SUMMARY_HEADER)?;
    for r in records {
        let mut row = vec![
            spec.sweep_param.name().to_string(),
            format_float(r.sweep_value),
            r.scheme.name().to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
        ];
        match &r.outcome {
            Ok(res) => {
                row.push(format_float(res.cost.objective));
                row.push(format_float(res.cost.delay_sum()));
                row.push(format_float(res.cost.e_tot));
                row.push(res.iterations.to_string());
                row.push(res.converged.to_string());
                let wall = res.trace.last().map_or(0.0, |t| t.wall_time_s);
                row.push(if spec.record_wall_time {
                    format_float(wall)
                } else {
                    String::new()
                });
            }
            Err(_) => {
                row.extend([
                    String::new(),
                    String::new(),
                    String::new(),
                    "0".into(),
                    "false".into(),
                    String::new(),
                ]);
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(sink: W, spec: &ExperimentSpec, records: &[TrialRecord]) -> csv::Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(TRACE_HEADER)?;
    for r in records {
        let Ok(res) = &r.outcome else { continue };
        for t in &res.trace {
            w.write_record([
                spec.sweep_param.name().to_string(),
                format_float(r.sweep_value),
                r.scheme.name().to_string(),
                r.trial.to_string(),
                t.iteration.to_string(),
                format_float(t.objective),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g9() {
        // Expected strings from C printf("%.9g").
        let cases = [
            (1.0, "1"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (1e-5, "1e-05"),
            (1.5e-6, "1.5e-06"),
            (2.0 / 3.0 * 1e-4, "6.66666667e-05"),
            (-42.5, "-42.5"),
            (8e6, "8000000"),
            (1e300, "1e+300"),
            (0.0, "0"),
            (1e-4, "0.0001"),
            (0.00012345, "0.00012345"),
            (999999999.5, "1e+09"),
        ];
        for (x, want) in cases {
            assert_eq!(format_float(x), want, "{x}");
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn trace_file_name() {
        assert_eq!(
            trace_path(Path::new("out/run.csv")),
            PathBuf::from("out/run_trace.csv")
        );
    }
}
