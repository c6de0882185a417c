//! Gram matrix of coherent-state projectors and its spectral diagnostics.
//!
//! `G[n][n'] = Tr[Q_n Q_n'] = ((1 + m_n · m_n') / 2)^{2s}`. The matrix is
//! real, symmetric and positive semidefinite with unit diagonal; the
//! projectors form a basis of the operator space exactly when it is
//! nonsingular.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::spin::{coherent_projector, overlap_from_dot, HermitianOperator, SpinLabel};

/// Target relative residual `‖G c − p‖ / max(‖p‖, 1)` of [`solve`].
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    spin: SpinLabel,
}

impl GramMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn spin(&self) -> SpinLabel {
        self.spin
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Closed-form Gram matrix.
pub fn gram(m: &Constellation) -> GramMatrix {
    let s = m.spin();
    let v = m.vectors();
    let n = v.len();
    let mut entries = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let g = overlap_from_dot(s, v[i].dot(&v[j]));
            entries[(i, j)] = g;
            entries[(j, i)] = g;
        }
    }
    GramMatrix { entries, spin: s }
}

/// Gram matrix from Hilbert–Schmidt products of explicit projectors.
pub fn gram_via_traces(m: &Constellation) -> GramMatrix {
    let s = m.spin();
    let projectors: Vec<HermitianOperator> =
        m.vectors().iter().map(|v| coherent_projector(s, v)).collect();
    let n = projectors.len();
    let entries = DMatrix::from_fn(n, n, |i, j| projectors[i].trace_product(&projectors[j]));
    GramMatrix { entries, spin: s }
}

/// Rule for the basis threshold `tau` on the smallest Gram eigenvalue.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Threshold {
    /// `N_s · f64::EPSILON · λ_max`.
    #[default]
    Default,
    /// `factor · λ_max`.
    Relative(f64),
    /// A fixed value.
    Absolute(f64),
}

impl Threshold {
    pub fn resolve(self, n_points: usize, lambda_max: f64) -> f64 {
        match self {
            Threshold::Default => n_points as f64 * f64::EPSILON * lambda_max,
            Threshold::Relative(r) => r * lambda_max,
            Threshold::Absolute(t) => t,
        }
    }

    pub fn validate(self) -> Result<Self> {
        match self {
            Threshold::Relative(t) | Threshold::Absolute(t) if !(t > 0.0 && t.is_finite()) => {
                Err(Error::InvalidArgument(format!("tau must be positive, got {t}")))
            }
            _ => Ok(self),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Default => write!(f, "default (N_s * eps * lambda_max)"),
            Threshold::Relative(r) => write!(f, "relative ({r:e} * lambda_max)"),
            Threshold::Absolute(t) => write!(f, "absolute ({t:e})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameDiagnostics {
    pub det: f64,
    /// `-inf` when an eigenvalue is exactly zero.
    pub log_abs_det: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `+inf` when the smallest eigenvalue is not positive.
    pub condition_number: f64,
    pub is_basis: bool,
    pub tau: f64,
    pub tau_rule: String,
}

impl FrameDiagnostics {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    /// Number of eigenvalues above `tau`.
    pub fn numerical_rank(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > self.tau).count()
    }

    pub fn is_singular(&self) -> bool {
        !self.is_basis
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

fn diagnostics_from_eigenvalues(eigenvalues: Vec<f64>, threshold: Threshold) -> FrameDiagnostics {
    let n = eigenvalues.len();
    let lambda_min = eigenvalues.first().copied().unwrap_or(0.0);
    let lambda_max = eigenvalues.last().copied().unwrap_or(0.0);
    let tau = threshold.resolve(n, lambda_max);
    let det = eigenvalues.iter().product();
    let log_abs_det = eigenvalues.iter().map(|l| l.abs().ln()).sum();
    let condition_number = if lambda_min > 0.0 {
        lambda_max / lambda_min
    } else {
        f64::INFINITY
    };
    FrameDiagnostics {
        det,
        log_abs_det,
        condition_number,
        is_basis: lambda_min > tau,
        tau,
        tau_rule: threshold.to_string(),
        eigenvalues,
    }
}

pub fn diagnostics(g: &GramMatrix, threshold: Threshold) -> FrameDiagnostics {
    diagnostics_from_eigenvalues(g.eigenvalues(), threshold)
}

/// Symmetric factorization `P G Pᵀ = L Lᵀ` with diagonal pivoting.
#[derive(Clone, Debug)]
struct PivotedCholesky {
    lower: DMatrix<f64>,
    perm: Vec<usize>,
}

impl PivotedCholesky {
    fn factor(a: &DMatrix<f64>) -> Option<Self> {
        let n = a.nrows();
        let mut work = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&i, &j| work[(i, i)].total_cmp(&work[(j, j)]))
                .expect("non-empty range");
            if pivot != k {
                work.swap_rows(k, pivot);
                work.swap_columns(k, pivot);
                perm.swap(k, pivot);
            }
            let d = work[(k, k)];
            if d.is_nan() || d <= 0.0 {
                return None;
            }
            let root = d.sqrt();
            work[(k, k)] = root;
            for i in (k + 1)..n {
                work[(i, k)] /= root;
                work[(k, i)] = work[(i, k)];
            }
            // full trailing update: later symmetric swaps read both triangles
            for j in (k + 1)..n {
                let ljk = work[(j, k)];
                for i in (k + 1)..n {
                    work[(i, j)] -= work[(i, k)] * ljk;
                }
            }
        }
        let lower = work.lower_triangle();
        Some(PivotedCholesky { lower, perm })
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let permuted = DVector::from_iterator(rhs.len(), self.perm.iter().map(|&i| rhs[i]));
        let y = self
            .lower
            .solve_lower_triangular(&permuted)
            .expect("positive pivots");
        let w = self
            .lower
            .tr_solve_lower_triangular(&y)
            .expect("positive pivots");
        let mut out = DVector::zeros(rhs.len());
        for (k, &i) in self.perm.iter().enumerate() {
            out[i] = w[k];
        }
        out
    }
}

/// A Gram matrix that passed the basis test, factored for repeated solves.
#[derive(Clone, Debug)]
pub struct FactoredGram {
    gram: GramMatrix,
    diagnostics: FrameDiagnostics,
    factor: PivotedCholesky,
}

impl FactoredGram {
    pub fn new(gram: GramMatrix, threshold: Threshold) -> Result<Self> {
        let diagnostics = diagnostics(&gram, threshold);
        if !diagnostics.is_basis {
            return Err(Error::SingularGram(Box::new(diagnostics)));
        }
        let factor = match PivotedCholesky::factor(gram.entries()) {
            Some(f) => f,
            None => return Err(Error::SingularGram(Box::new(diagnostics))),
        };
        Ok(FactoredGram {
            gram,
            diagnostics,
            factor,
        })
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn diagnostics(&self) -> &FrameDiagnostics {
        &self.diagnostics
    }

    /// Solves `G c = p` with one step of iterative refinement.
    pub fn solve(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.gram.size();
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: p.len(),
            });
        }
        let rhs = DVector::from_column_slice(p);
        let g = self.gram.entries();
        let mut c = self.factor.solve(&rhs);
        let residual = &rhs - g * &c;
        c += self.factor.solve(&residual);
        Ok(c.iter().copied().collect())
    }

    /// `G^{-1}` column by column.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.gram.size();
        let mut inv = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            let mut col = self.factor.solve(&e);
            let residual = &e - self.gram.entries() * &col;
            col += self.factor.solve(&residual);
            inv.set_column(j, &col);
        }
        inv
    }
}

/// Solves `G c = p` under the default threshold.
pub fn solve(g: &GramMatrix, p: &[f64]) -> Result<Vec<f64>> {
    solve_with(g, p, Threshold::Default)
}

pub fn solve_with(g: &GramMatrix, p: &[f64], threshold: Threshold) -> Result<Vec<f64>> {
    FactoredGram::new(g.clone(), threshold)?.solve(p)
}

/// `‖G c − p‖ / max(‖p‖, 1)`.
pub fn relative_residual(g: &GramMatrix, c: &[f64], p: &[f64]) -> f64 {
    let c = DVector::from_column_slice(c);
    let p = DVector::from_column_slice(p);
    (g.entries() * c - &p).norm() / p.norm().max(1.0)
}
