//! Monte-Carlo sweeps over one scenario parameter.

use std::io::Write;
use std::path::Path;

use irs_core::channel::{draw_realization, seeded_rng};
use irs_core::schemes::{run_scheme, SchemeKind, SchemeParams};
use irs_core::system::SystemParams;
use rayon::prelude::*;

use crate::config::{SweepSpec, SweepVariable};

/// RNG stream of one grid point; distinct `(value, trial)` pairs never collide.
pub fn trial_stream(value_index: usize, trial_index: usize) -> u64 {
    ((value_index as u64) << 32) | trial_index as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub value: f64,
    pub scheme: SchemeKind,
    pub trial: usize,
    pub seed: u64,
    pub stream: u64,
    pub status: String,
}

/// One `(value, scheme)` aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub scheme: SchemeKind,
    pub trials: usize,
    pub mean_rate: f64,
    pub stderr_rate: f64,
    pub mean_seconds: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<TrialFailure>,
}

impl SweepTable {
    pub fn row(&self, value: f64, scheme: SchemeKind) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.value == value && r.scheme == scheme)
    }
}

type Outcome = Result<(f64, f64), String>;

/// Runs every scheme on `trials` draws per sweep value. Trials run in
/// parallel on at most `jobs` threads; the table does not depend on `jobs`.
pub fn run_sweep(spec: &SweepSpec, params: &SchemeParams, jobs: usize) -> SweepTable {
    let grid: Vec<(usize, usize)> =
        (0..spec.values.len()).flat_map(|v| (0..spec.trials).map(move |t| (v, t))).collect();
    let run_point = |&(vi, ti): &(usize, usize)| -> Vec<Outcome> {
        let cfg = spec.variable.apply(&spec.base, spec.values[vi]);
        let sys = SystemParams::from_config(&cfg);
        let mut rng = seeded_rng(cfg.seed, trial_stream(vi, ti));
        match draw_realization::<f64, _>(&cfg, &mut rng) {
            Err(e) => spec.schemes.iter().map(|_| Err(format!("channel draw: {e}"))).collect(),
            Ok((_, ch)) => spec
                .schemes
                .iter()
                .map(|kind| match run_scheme(*kind, &ch, &sys, params) {
                    Ok(r) if r.is_feasible(sys.p_max) => Ok((r.sum_rate, r.wall_time)),
                    Ok(r) => Err(format!("infeasible output (worst violation {:e})", r.feasibility.worst_violation)),
                    Err(e) => Err(e.to_string()),
                })
                .collect(),
        }
    };
    let outcomes: Vec<Vec<Outcome>> = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(|| grid.par_iter().map(run_point).collect()),
        Err(_) => grid.iter().map(run_point).collect(),
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (vi, value) in spec.values.iter().enumerate() {
        for (si, scheme) in spec.schemes.iter().enumerate() {
            let mut rates = Vec::new();
            let mut seconds = 0.0;
            let mut failed = 0;
            for ti in 0..spec.trials {
                match &outcomes[vi * spec.trials + ti][si] {
                    Ok((rate, secs)) => {
                        rates.push(*rate);
                        seconds += secs;
                    }
                    Err(status) => {
                        failed += 1;
                        failures.push(TrialFailure {
                            value: *value,
                            scheme: *scheme,
                            trial: ti,
                            seed: spec.base.seed,
                            stream: trial_stream(vi, ti),
                            status: status.clone(),
                        });
                    }
                }
            }
            let (mean, stderr) = mean_stderr(&rates);
            let mean_seconds = if spec.timing && !rates.is_empty() { seconds / rates.len() as f64 } else { 0.0 };
            rows.push(SweepRow {
                value: *value,
                scheme: *scheme,
                trials: spec.trials,
                mean_rate: mean,
                stderr_rate: stderr,
                mean_seconds,
                failures: failed,
            });
        }
    }
    SweepTable { variable: spec.variable, rows, failures }
}

/// Sample mean and standard error; NaN mean for an empty sample.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `%g`-style formatting with `digits` significant digits.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    // Rounding can carry into the next decade, e.g. 9.999995.
    let sci = format!("{:.*e}", digits - 1, x);
    let exp = sci.rsplit_once('e').and_then(|(_, e)| e.parse::<i32>().ok()).unwrap_or(exp);
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if exp < -5 || exp >= digits as i32 {
        let (mantissa, _) = sci.rsplit_once('e').expect("scientific format has an exponent");
        format!("{}e{}{:02}", trim(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    }
}

pub const CSV_HEADER: [&str; 8] =
    ["sweep_var", "value", "scheme", "trials", "mean_rate", "stderr_rate", "mean_seconds", "failures"];

/// Writes the table in the fixed CSV schema.
pub fn write_csv_to<W: Write>(table: &SweepTable, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &table.rows {
        w.write_record([
            table.variable.name().to_string(),
            format_sig(r.value, 6),
            r.scheme.name().to_string(),
            r.trials.to_string(),
            format_sig(r.mean_rate, 6),
            format_sig(r.stderr_rate, 6),
            format_sig(r.mean_seconds, 6),
            r.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(table: &SweepTable, path: &Path) -> std::io::Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    write_csv_to(table, std::io::BufWriter::new(file))
        .map_err(|e| std::io::Error::other(format!("{}: {e}", path.display())))
}
