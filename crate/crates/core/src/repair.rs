//! Moving a singular constellation onto a nearby basis.
//!
//! Spikes are visited in order. A spike is moved, by a tangent step of
//! length in `(ε / (4 N_s), ε / (2 N_s)]`, only when the move raises the numerical rank of
//! the Gram matrix; otherwise it stays put. The walk stops as soon as the
//! Gram matrix passes the basis test, so each moved spike is displaced by
//! less than `ε / N_s` and the total displacement stays below `ε`.

use nalgebra::Vector3;
use rand::Rng;
use serde::Serialize;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::exec::{find_first, Backend};
use crate::gram::{diagnostics, gram, FrameDiagnostics, Threshold};
use crate::rng::derived_rng;
use crate::spin::UnitVector;

pub const DEFAULT_MAX_ATTEMPTS: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RepairStrategy {
    /// Random tangent directions.
    #[default]
    RandomProbe,
    /// One step up the tangent gradient of `log|det G|`, then random probes.
    GradientAscent,
}

#[derive(Clone, Debug)]
pub struct RepairOptions {
    pub epsilon: f64,
    pub threshold: Threshold,
    pub seed: u64,
    pub max_attempts: usize,
    pub strategy: RepairStrategy,
    pub backend: Backend,
}

impl RepairOptions {
    pub fn new(epsilon: f64, threshold: Threshold, seed: u64) -> Self {
        RepairOptions {
            epsilon,
            threshold,
            seed,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            strategy: RepairStrategy::default(),
            backend: Backend::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepairReport {
    pub moved_indices: Vec<usize>,
    pub total_displacement: f64,
    pub max_spike_displacement: f64,
    pub final_log_abs_det: f64,
    pub final_min_eigenvalue: f64,
    pub tau: f64,
    pub attempts: usize,
}

impl RepairReport {
    pub fn to_json_string(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

pub fn repair(
    m: &Constellation,
    epsilon: f64,
    threshold: Threshold,
    seed: u64,
) -> Result<(Constellation, RepairReport)> {
    repair_with(m, &RepairOptions::new(epsilon, threshold, seed))
}

fn step_along(v: &UnitVector, direction: &Vector3<f64>, length: f64) -> UnitVector {
    UnitVector::from_vector(v.as_vector() + direction * length).expect("short tangent step")
}

/// Tangent gradient of `Σ ln max(λ_i, tiny)` for spike `index`.
fn log_det_ascent_direction(
    current: &Constellation,
    index: usize,
    threshold: Threshold,
) -> Option<Vector3<f64>> {
    const H: f64 = 1e-6;
    let v = current.vectors()[index];
    let objective = |w: UnitVector| -> f64 {
        let c = current.replace_vector(index, w).expect("index in range");
        diagnostics(&gram(&c), threshold)
            .eigenvalues
            .iter()
            .map(|l| l.max(1e-300).ln())
            .sum()
    };
    let (e1, e2) = v.tangent_basis();
    let partial = |e: Vector3<f64>| {
        (objective(step_along(&v, &e, H)) - objective(step_along(&v, &e, -H))) / (2.0 * H)
    };
    let g = e1 * partial(e1) + e2 * partial(e2);
    let norm = g.norm();
    (norm.is_finite() && norm > 0.0).then(|| g / norm)
}

pub fn repair_with(m: &Constellation, opts: &RepairOptions) -> Result<(Constellation, RepairReport)> {
    if !(opts.epsilon > 0.0 && opts.epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {}",
            opts.epsilon
        )));
    }
    if opts.max_attempts == 0 {
        return Err(Error::InvalidArgument("max_attempts must be at least 1".into()));
    }
    let threshold = opts.threshold.validate()?;
    let n_points = m.len();
    let step = opts.epsilon / (2.0 * n_points as f64);

    let mut current = m.clone();
    let mut diag = diagnostics(&gram(&current), threshold);
    let mut moved = Vec::new();
    let mut attempts = 0;
    let mut last_stuck = None;

    for index in 0..n_points {
        if diag.is_basis {
            break;
        }
        let rank = diag.numerical_rank();
        let origin = current.vectors()[index];
        let accept = |candidate: UnitVector| -> Option<(Constellation, FrameDiagnostics)> {
            let c = current.replace_vector(index, candidate).expect("index in range");
            let d = diagnostics(&gram(&c), threshold);
            (d.is_basis || d.numerical_rank() > rank).then_some((c, d))
        };

        let mut found = None;
        if opts.strategy == RepairStrategy::GradientAscent {
            attempts += 1;
            found = log_det_ascent_direction(&current, index, threshold)
                .and_then(|dir| accept(step_along(&origin, &dir, step)));
        }
        if found.is_none() {
            let probe = |attempt: usize| {
                let mut rng = derived_rng(opts.seed, &[index as u64, attempt as u64]);
                let dir = origin.random_tangent(&mut rng);
                // random length: equal-length moves of coincident spikes land
                // on one circle, which is itself degenerate
                let length = step * (1.0 - 0.5 * rng.random::<f64>());
                accept(step_along(&origin, &dir, length))
            };
            match find_first(opts.backend, opts.max_attempts, probe) {
                Some((attempt, hit)) => {
                    attempts += attempt + 1;
                    found = Some(hit);
                }
                None => {
                    attempts += opts.max_attempts;
                    last_stuck = Some(index);
                }
            }
        }
        if let Some((c, d)) = found {
            current = c;
            diag = d;
            moved.push(index);
        }
    }

    if !diag.is_basis {
        return Err(Error::RepairFailed {
            index: last_stuck.unwrap_or(n_points.saturating_sub(1)),
            attempts,
        });
    }

    let per_spike: Vec<f64> = m
        .vectors()
        .iter()
        .zip(current.vectors())
        .map(|(a, b)| a.chord(b))
        .collect();
    let report = RepairReport {
        total_displacement: m.distance(&current)?,
        max_spike_displacement: per_spike.iter().copied().fold(0.0, f64::max),
        moved_indices: moved,
        final_log_abs_det: diag.log_abs_det,
        final_min_eigenvalue: diag.min_eigenvalue(),
        tau: diag.tau,
        attempts,
    };
    let label = if report.moved_indices.is_empty() {
        m.label().to_string()
    } else {
        format!("{} (repaired)", m.label())
    };
    Ok((current.with_label(label), report))
}
