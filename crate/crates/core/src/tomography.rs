//! Discrete Q-symbol sampling and reconstruction in the projector basis.
//!
//! For a constellation `m_1 … m_N` with projectors `Q_n = |m_n⟩⟨m_n|`, an
//! operator is expanded as `A = Σ c_n Q_n`. Its Q-symbol values satisfy
//! `p = G c`, so reconstruction is one Gram solve. The dual frame
//! `Q̃_n = Σ_m (G⁻¹)_{nm} Q_m` gives the same result as `A = Σ p_n Q̃_n`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constellation::{Constellation, LOAD_UNIT_TOL};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Backend};
use crate::gram::{gram, FactoredGram, FrameDiagnostics, Threshold};
use crate::spin::{
    coherent_projector, coherent_state, expectation, HermitianOperator, SpinLabel, UnitVector,
};

/// Q-symbol values of an operator on a constellation.
#[derive(Clone, Debug, PartialEq)]
pub struct QSample {
    constellation: Constellation,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct QSampleRow {
    n: usize,
    x: f64,
    y: f64,
    z: f64,
    p: f64,
}

impl QSample {
    pub fn new(constellation: Constellation, values: Vec<f64>) -> Result<Self> {
        if values.len() != constellation.len() {
            return Err(Error::DimensionMismatch {
                expected: constellation.len(),
                actual: values.len(),
            });
        }
        Ok(QSample {
            constellation,
            values,
        })
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// CSV with header `n,x,y,z,p`; `n` counts from zero.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (n, (v, &p)) in self.constellation.vectors().iter().zip(&self.values).enumerate() {
            w.serialize(QSampleRow {
                n,
                x: v.x(),
                y: v.y(),
                z: v.z(),
                p,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV format; the spin follows from the row count.
    pub fn read_csv<R: Read>(reader: R) -> Result<QSample> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut vectors = Vec::new();
        let mut values = Vec::new();
        for (i, row) in rdr.deserialize::<QSampleRow>().enumerate() {
            let row = row.map_err(|e| Error::Format(format!("row {i}: {e}")))?;
            if row.n != i {
                return Err(Error::Format(format!("row {i} carries index {}", row.n)));
            }
            let v = UnitVector::checked(row.x, row.y, row.z, LOAD_UNIT_TOL)
                .map_err(|e| Error::Format(format!("row {i}: {e}")))?;
            vectors.push(v);
            values.push(row.p);
        }
        let dim = (vectors.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != vectors.len() {
            return Err(Error::Format(format!(
                "{} rows is not a square (2s+1)^2",
                vectors.len()
            )));
        }
        let spin = SpinLabel::from_doubled(dim as u32 - 1);
        let constellation = Constellation::new(spin, vectors, "samples")?;
        QSample::new(constellation, values)
    }
}

/// Q-symbol of `a` at every spike.
pub fn sample_q(a: &HermitianOperator, m: &Constellation) -> Result<QSample> {
    let s = m.spin();
    if a.dimension() != s.dimension() {
        return Err(Error::DimensionMismatch {
            expected: s.dimension(),
            actual: a.dimension(),
        });
    }
    let values = m
        .vectors()
        .iter()
        .map(|n| expectation(a, &coherent_state(s, n)))
        .collect();
    QSample::new(m.clone(), values)
}

/// Projectors of a constellation together with its factored Gram matrix.
#[derive(Clone, Debug)]
pub struct Reconstructor {
    constellation: Constellation,
    projectors: Vec<HermitianOperator>,
    factored: FactoredGram,
}

impl Reconstructor {
    /// Fails with `SingularGram` when the constellation is not a basis
    /// under `threshold`.
    pub fn new(m: &Constellation, threshold: Threshold) -> Result<Self> {
        let factored = FactoredGram::new(gram(m), threshold)?;
        let s = m.spin();
        let projectors = m.vectors().iter().map(|v| coherent_projector(s, v)).collect();
        Ok(Reconstructor {
            constellation: m.clone(),
            projectors,
            factored,
        })
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn diagnostics(&self) -> &FrameDiagnostics {
        self.factored.diagnostics()
    }

    pub fn projectors(&self) -> &[HermitianOperator] {
        &self.projectors
    }

    /// Expansion coefficients `c` with `G c = p`.
    pub fn coefficients(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.factored.solve(values)
    }

    /// `Σ c_n Q_n`, followed by one refinement pass on the Q-symbol
    /// residual to undo cancellation in the sum.
    pub fn reconstruct(&self, values: &[f64]) -> Result<HermitianOperator> {
        let c = self.coefficients(values)?;
        let mut op = self.combine(&self.projectors, &c);
        let residual: Vec<f64> = values
            .iter()
            .zip(self.projectors.iter())
            .map(|(p, q)| p - op.trace_product(q))
            .collect();
        let dc = self.coefficients(&residual)?;
        op.add_scaled(1.0, &self.combine(&self.projectors, &dc));
        Ok(op)
    }

    /// Biorthogonal companions `Q̃_n` with `Tr[Q̃_n Q_m] = δ_nm`.
    ///
    /// Forming `Σ_m (G⁻¹)_{nm} Q_m` cancels large coefficients, so one
    /// refinement pass adds `Σ_m (R G⁻¹)_{nm} Q_m` for the residual
    /// `R = I − [Tr[Q̃_n Q_k]]`.
    pub fn dual_frame(&self) -> Vec<HermitianOperator> {
        let inv = self.factored.inverse();
        let n = self.projectors.len();
        let mut duals: Vec<HermitianOperator> = (0..n)
            .map(|i| {
                let row: Vec<f64> = inv.row(i).iter().copied().collect();
                self.combine(&self.projectors, &row)
            })
            .collect();
        let residual = DMatrix::from_fn(n, n, |i, k| {
            let target = if i == k { 1.0 } else { 0.0 };
            target - duals[i].trace_product(&self.projectors[k])
        });
        let correction = residual * &inv;
        for (i, dual) in duals.iter_mut().enumerate() {
            let row: Vec<f64> = correction.row(i).iter().copied().collect();
            let delta = self.combine(&self.projectors, &row);
            dual.add_scaled(1.0, &delta);
        }
        duals
    }

    fn combine(&self, ops: &[HermitianOperator], weights: &[f64]) -> HermitianOperator {
        let mut acc = HermitianOperator::zeros(self.constellation.spin().dimension());
        for (op, &w) in ops.iter().zip(weights) {
            acc.add_scaled(w, op);
        }
        acc
    }

    /// `‖reconstruct(sample_q(a)) − a‖_F / max(‖a‖_F, 1)`.
    pub fn round_trip_error(&self, a: &HermitianOperator) -> Result<f64> {
        let sample = sample_q(a, &self.constellation)?;
        let back = self.reconstruct(sample.values())?;
        Ok(back.distance(a) / a.frobenius_norm().max(1.0))
    }
}

/// Reconstructs `Σ c_n Q_n` from Q-symbol values on `m`.
pub fn reconstruct(values: &[f64], m: &Constellation) -> Result<HermitianOperator> {
    Reconstructor::new(m, Threshold::Default)?.reconstruct(values)
}

pub fn round_trip_error(a: &HermitianOperator, m: &Constellation) -> Result<f64> {
    Reconstructor::new(m, Threshold::Default)?.round_trip_error(a)
}

pub fn dual_frame(m: &Constellation) -> Result<Vec<HermitianOperator>> {
    Ok(Reconstructor::new(m, Threshold::Default)?.dual_frame())
}

/// Round-trip errors of every operator against one constellation.
pub fn round_trip_batch(
    operators: &[HermitianOperator],
    m: &Constellation,
    threshold: Threshold,
    backend: Backend,
) -> Result<Vec<f64>> {
    let rec = Reconstructor::new(m, threshold)?;
    map_indexed(backend, operators.len(), |i| rec.round_trip_error(&operators[i]))
        .into_iter()
        .collect()
}

#[derive(Serialize, Deserialize)]
struct OperatorFile {
    doubled_spin: u32,
    entries: Vec<Vec<[f64; 2]>>,
}

/// JSON with `doubled_spin` and row-major `[re, im]` entries.
pub fn operator_to_json(a: &HermitianOperator) -> Result<String> {
    let m = a.matrix();
    let file = OperatorFile {
        doubled_spin: (a.dimension() - 1) as u32,
        entries: (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    Ok(text)
}

pub fn operator_from_json(text: &str) -> Result<HermitianOperator> {
    let file: OperatorFile = serde_json::from_str(text)?;
    let d = file.doubled_spin as usize + 1;
    if file.entries.len() != d || file.entries.iter().any(|row| row.len() != d) {
        return Err(Error::Format(format!("operator entries are not {d}x{d}")));
    }
    let m = DMatrix::from_fn(d, d, |i, j| {
        let [re, im] = file.entries[i][j];
        Complex64::new(re, im)
    });
    HermitianOperator::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::random_constellation;
    use crate::rng::seeded_rng;
    use crate::spin::spin_matrices;

    fn tetrahedron() -> Constellation {
        let v = |x: f64, y: f64, z: f64| UnitVector::new(x, y, z).unwrap();
        Constellation::new(
            SpinLabel::HALF,
            vec![v(1., 1., 1.), v(1., -1., -1.), v(-1., 1., -1.), v(-1., -1., 1.)],
            "tetrahedron",
        )
        .unwrap()
    }

    /// Random constellation whose Gram matrix has min eigenvalue above 1e-4.
    fn well_conditioned(s: SpinLabel, mut seed: u64) -> Constellation {
        loop {
            let m = random_constellation(s, seed);
            if gram(&m).eigenvalues()[0] > 1e-4 {
                return m;
            }
            seed += 1000;
        }
    }

    #[test]
    fn sample_examples() {
        let m = random_constellation(SpinLabel::ONE, 4);
        let id = HermitianOperator::identity(SpinLabel::ONE);
        assert!(sample_q(&id, &m).unwrap().values().iter().all(|p| (p - 1.0).abs() < 1e-12));

        let q0 = coherent_projector(SpinLabel::ONE, &m.vectors()[0]);
        let g = gram(&m);
        let sample = sample_q(&q0, &m).unwrap();
        for (n, p) in sample.values().iter().enumerate() {
            assert!((p - g.get(n, 0)).abs() < 1e-12);
        }

        let half = random_constellation(SpinLabel::HALF, 6);
        let sz = spin_matrices(SpinLabel::HALF).z;
        let sample = sample_q(&sz, &half).unwrap();
        for (v, p) in half.vectors().iter().zip(sample.values()) {
            assert!((p - 0.5 * v.z()).abs() < 1e-12);
        }

        assert!(matches!(sample_q(&id, &half), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn density_matrix_samples_are_probabilities() {
        let m = random_constellation(SpinLabel::from_doubled(3), 12);
        let psi = coherent_state(SpinLabel::from_doubled(3), &UnitVector::new(0.2, -0.3, 0.9).unwrap());
        let rho = crate::spin::projector(&psi);
        let sample = sample_q(&rho, &m).unwrap();
        assert!(sample.values().iter().all(|&p| (-1e-12..=1.0 + 1e-12).contains(&p)));
    }

    #[test]
    fn tetrahedron_identity_is_exact() {
        let id = reconstruct(&[1.0; 4], &tetrahedron()).unwrap();
        assert!(id.distance(&HermitianOperator::identity(SpinLabel::HALF)) < 1e-12);
        let err = round_trip_error(&HermitianOperator::identity(SpinLabel::HALF), &tetrahedron());
        assert!(err.unwrap() < 1e-12);
    }

    #[test]
    fn basis_elements_round_trip() {
        let m = well_conditioned(SpinLabel::from_doubled(3), 1);
        let rec = Reconstructor::new(&m, Threshold::Default).unwrap();
        for (n, q) in rec.projectors().iter().enumerate() {
            let sample = sample_q(q, &m).unwrap();
            let c = rec.coefficients(sample.values()).unwrap();
            assert!((c[n] - 1.0).abs() < 1e-10);
            assert!(rec.round_trip_error(q).unwrap() < 1e-10);
        }
    }

    #[test]
    fn random_operators_round_trip() {
        let mut rng = seeded_rng(77);
        for doubled in 1..=4 {
            let s = SpinLabel::from_doubled(doubled);
            let m = well_conditioned(s, u64::from(doubled));
            let rec = Reconstructor::new(&m, Threshold::Default).unwrap();
            for _ in 0..5 {
                let a = HermitianOperator::random(s, &mut rng);
                let back = rec.reconstruct(sample_q(&a, &m).unwrap().values()).unwrap();
                assert!(back.distance(&a) / a.frobenius_norm() < 1e-8);
            }
        }
    }

    #[test]
    fn error_grows_when_conditioning_degrades() {
        let s = SpinLabel::HALF;
        let tet = tetrahedron();
        let base = tet.vectors()[0];
        let (e1, _) = base.tangent_basis();
        let close = UnitVector::from_vector(base.as_vector() + e1 * 1e-4).unwrap();
        let near = tet.replace_vector(1, close).unwrap();
        let a = HermitianOperator::random(s, &mut seeded_rng(3));
        let good = Reconstructor::new(&tet, Threshold::Default).unwrap().round_trip_error(&a).unwrap();
        let bad = Reconstructor::new(&near, Threshold::Default).unwrap().round_trip_error(&a).unwrap();
        assert!(bad > good, "near-degenerate {bad:e} vs tetrahedron {good:e}");
    }

    #[test]
    fn singular_constellation_is_rejected() {
        let m = random_constellation(SpinLabel::ONE, 2);
        let dup = m.replace_vector(1, m.vectors()[0]).unwrap();
        assert!(matches!(reconstruct(&[0.0; 9], &dup), Err(Error::SingularGram(_))));
        assert!(matches!(dual_frame(&dup), Err(Error::SingularGram(_))));
    }

    #[test]
    fn dual_frame_properties() {
        for doubled in 1..=4 {
            let s = SpinLabel::from_doubled(doubled);
            let m = well_conditioned(s, 40 + u64::from(doubled));
            let rec = Reconstructor::new(&m, Threshold::Default).unwrap();
            let duals = rec.dual_frame();
            for (n, d) in duals.iter().enumerate() {
                for (k, q) in rec.projectors().iter().enumerate() {
                    let expected = if n == k { 1.0 } else { 0.0 };
                    let err = (d.trace_product(q) - expected).abs();
                    assert!(err < 1e-10, "s={s} n={n} k={k} err={err:e} cond={:e}", rec.diagnostics().condition_number);
                }
            }
            let a = HermitianOperator::random(s, &mut seeded_rng(u64::from(doubled)));
            let p = sample_q(&a, &m).unwrap();
            let via_coeffs = rec.reconstruct(p.values()).unwrap();
            let mut via_duals = HermitianOperator::zeros(s.dimension());
            for (d, &pn) in duals.iter().zip(p.values()) {
                via_duals.add_scaled(pn, d);
            }
            assert!(via_coeffs.distance(&via_duals) < 1e-10);
        }

        let duals = dual_frame(&tetrahedron()).unwrap();
        let mut sum = HermitianOperator::zeros(2);
        for d in &duals {
            sum.add_scaled(1.0, d);
        }
        assert!(sum.distance(&HermitianOperator::identity(SpinLabel::HALF)) < 1e-12);
    }

    #[test]
    fn reconstruction_is_linear_hermitian_and_trace_consistent() {
        let s = SpinLabel::ONE;
        let m = well_conditioned(s, 5);
        let rec = Reconstructor::new(&m, Threshold::Default).unwrap();
        let p: Vec<f64> = (0..9).map(|i| (i as f64 * 0.7).sin()).collect();
        let q: Vec<f64> = (0..9).map(|i| (i as f64 * 1.3).cos()).collect();
        let combo: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let lhs = rec.reconstruct(&combo).unwrap();
        let rhs = rec
            .reconstruct(&p)
            .unwrap()
            .linear_combination(2.0, &rec.reconstruct(&q).unwrap(), -0.5);
        assert!(lhs.distance(&rhs) < 1e-10);

        let op = rec.reconstruct(&p).unwrap();
        assert!((op.matrix() - op.matrix().adjoint()).camax() < 1e-12);
        let c = rec.coefficients(&p).unwrap();
        assert!((op.trace() - c.iter().sum::<f64>()).abs() < 1e-10);
    }

    #[test]
    fn non_physical_reconstruction_is_flagged_not_altered() {
        let m = tetrahedron();
        let op = reconstruct(&[1.0, -1.0, 0.0, 0.0], &m).unwrap();
        assert!(!op.negative_eigenvalues(1e-12).is_empty());
    }

    #[test]
    fn batch_matches_serial_errors() {
        let s = SpinLabel::ONE;
        let m = well_conditioned(s, 9);
        let mut rng = seeded_rng(1);
        let ops: Vec<_> = (0..8).map(|_| HermitianOperator::random(s, &mut rng)).collect();
        let seq = round_trip_batch(&ops, &m, Threshold::Default, Backend::Sequential).unwrap();
        let par = round_trip_batch(&ops, &m, Threshold::Default, Backend::Parallel).unwrap();
        assert_eq!(seq, par);
        assert!(seq.iter().all(|&e| e < 1e-8));
    }

    #[test]
    fn csv_and_json_formats() {
        let m = random_constellation(SpinLabel::ONE, 31);
        let a = HermitianOperator::random(SpinLabel::ONE, &mut seeded_rng(2));
        let sample = sample_q(&a, &m).unwrap();
        let mut buf = Vec::new();
        sample.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,x,y,z,p\n"));
        let back = QSample::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.values(), sample.values());
        assert_eq!(back.constellation().spin(), SpinLabel::ONE);

        let truncated: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(matches!(QSample::read_csv(truncated.as_bytes()), Err(Error::Format(_))));

        let json = operator_to_json(&a).unwrap();
        let parsed = operator_from_json(&json).unwrap();
        assert_eq!(parsed.matrix(), a.matrix());
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["doubled_spin"], 2);
        assert_eq!(v["entries"][0][1].as_array().unwrap().len(), 2);
    }
}
