//! Monte-Carlo genericity sweep: how often does a uniformly random
//! constellation give a basis?

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::constellation::random_constellation;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Backend};
use crate::gram::{diagnostics, gram, FrameDiagnostics, Threshold};
use crate::rng::derived_rng;
use crate::spin::SpinLabel;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub doubled_spin: u32,
    pub spin: String,
    pub trials: usize,
    pub passed: usize,
    pub pass_fraction: f64,
    pub median_log_abs_det: f64,
    pub median_condition_number: f64,
    pub worst_relative_min_eigenvalue: f64,
}

/// Seed of the constellation used for trial `trial` at spin `s`.
pub fn trial_seed(seed: u64, s: SpinLabel, trial: usize) -> u64 {
    derived_rng(seed, &[u64::from(s.doubled()), trial as u64]).random()
}

/// Diagnostics of every trial at one spin, in trial order.
pub fn sweep_trials(
    s: SpinLabel,
    trials: usize,
    seed: u64,
    threshold: Threshold,
    backend: Backend,
) -> Vec<FrameDiagnostics> {
    map_indexed(backend, trials, |t| {
        diagnostics(&gram(&random_constellation(s, trial_seed(seed, s, t))), threshold)
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn summarize(s: SpinLabel, diags: &[FrameDiagnostics]) -> SweepRow {
    let passed = diags.iter().filter(|d| d.is_basis).count();
    let mut log_dets: Vec<f64> = diags.iter().map(|d| d.log_abs_det).collect();
    let mut conds: Vec<f64> = diags.iter().map(|d| d.condition_number).collect();
    SweepRow {
        doubled_spin: s.doubled(),
        spin: s.to_string(),
        trials: diags.len(),
        passed,
        pass_fraction: passed as f64 / diags.len() as f64,
        median_log_abs_det: median(&mut log_dets),
        median_condition_number: median(&mut conds),
        worst_relative_min_eigenvalue: diags
            .iter()
            .map(|d| d.min_eigenvalue() / d.max_eigenvalue())
            .fold(f64::INFINITY, f64::min),
    }
}

/// One summary row per spin, in the order given.
pub fn sweep(
    spins: &[SpinLabel],
    trials: usize,
    seed: u64,
    threshold: Threshold,
    backend: Backend,
) -> Result<Vec<SweepRow>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let threshold = threshold.validate()?;
    Ok(spins
        .iter()
        .map(|&s| summarize(s, &sweep_trials(s, trials, seed, threshold, backend)))
        .collect())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_half_always_passes() {
        let rows = sweep(&[SpinLabel::HALF], 200, 7, Threshold::Relative(1e-12), Backend::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].pass_fraction, 1.0);
        assert_eq!(rows[0].trials, 200);
    }

    #[test]
    fn one_row_per_spin_and_deterministic_csv() {
        let spins = [SpinLabel::HALF, SpinLabel::ONE, SpinLabel::from_doubled(3)];
        let render = |backend| {
            let rows = sweep(&spins, 20, 99, Threshold::Default, backend).unwrap();
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = render(Backend::Parallel);
        let b = render(Backend::Parallel);
        let c = render(Backend::Sequential);
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.lines().count(), 4);
        assert!(a.starts_with("doubled_spin,spin,trials,passed,pass_fraction"));
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(sweep(&[SpinLabel::HALF], 0, 1, Threshold::Default, Backend::Sequential).is_err());
    }
}
