//! `det G` as the energy of one moving spike, and its precession flow
//! `dv/dt = v × ∂H/∂v` on the unit sphere.
//!
//! Off the sphere the energy is extended as `H(v) = H(v / |v|)`, so the
//! ambient gradient is tangent and the flow field is defined at the
//! intermediate Runge–Kutta stages.

use std::io::Write;

use nalgebra::{DMatrix, Vector3};
use serde::Serialize;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::gram::gram;
use crate::spin::{overlap_from_dot, SpinLabel, UnitVector};

/// Base finite-difference step, scaled by `max(1, |H|)`.
pub const GRADIENT_STEP: f64 = 1e-5;

/// Energy landscape of spike `index` with every other spike frozen.
#[derive(Clone, Debug)]
pub struct SpikeHamiltonian {
    spin: SpinLabel,
    index: usize,
    others: Vec<UnitVector>,
    base: DMatrix<f64>,
}

impl SpikeHamiltonian {
    pub fn new(m: &Constellation, index: usize) -> Result<Self> {
        if index >= m.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: m.len(),
            });
        }
        Ok(SpikeHamiltonian {
            spin: m.spin(),
            index,
            others: m.vectors().to_vec(),
            base: gram(m).entries().clone(),
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// `det G` with spike `index` pointing along `v / |v|`.
    pub fn value(&self, v: &Vector3<f64>) -> f64 {
        let u = v.normalize();
        let mut g = self.base.clone();
        for (j, m) in self.others.iter().enumerate() {
            if j == self.index {
                continue;
            }
            let entry = overlap_from_dot(self.spin, u.dot(m.as_vector()));
            g[(self.index, j)] = entry;
            g[(j, self.index)] = entry;
        }
        g.determinant()
    }

    /// Central-difference gradient along the ambient axes with step
    /// `GRADIENT_STEP · max(1, |H(v)|)`.
    pub fn gradient(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let h = GRADIENT_STEP * self.value(v).abs().max(1.0);
        self.gradient_with_step(v, h)
    }

    pub fn gradient_with_step(&self, v: &Vector3<f64>, h: f64) -> Vector3<f64> {
        Vector3::from_fn(|i, _| {
            let mut e = Vector3::zeros();
            e[i] = h;
            (self.value(&(v + e)) - self.value(&(v - e))) / (2.0 * h)
        })
    }

    /// Right-hand side `v × ∇H(v)`.
    pub fn velocity(&self, v: &Vector3<f64>) -> Vector3<f64> {
        v.cross(&self.gradient(v))
    }

    /// True when `|v × ∇H| <= tol · max(|∇H|, 1)`.
    pub fn is_fixed_point(&self, v: &Vector3<f64>, tol: f64) -> bool {
        let g = self.gradient(v);
        v.normalize().cross(&g).norm() <= tol * g.norm().max(1.0)
    }
}

/// `det G` of `m` with spike `k` replaced by `v`.
pub fn hamiltonian(m: &Constellation, k: usize, v: &UnitVector) -> Result<f64> {
    Ok(SpikeHamiltonian::new(m, k)?.value(v.as_vector()))
}

pub fn grad_hamiltonian(m: &Constellation, k: usize, v: &UnitVector) -> Result<Vector3<f64>> {
    Ok(SpikeHamiltonian::new(m, k)?.gradient(v.as_vector()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowState {
    pub active_index: usize,
    pub t: f64,
    pub v: UnitVector,
    /// `H(v)` at this state.
    pub energy: f64,
    /// `| |v| - 1 |` after the step, before projection back to the sphere.
    pub norm_drift: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub constellation: Constellation,
    pub active_index: usize,
    pub states: Vec<FlowState>,
}

impl Trajectory {
    pub fn max_energy_error(&self) -> f64 {
        let h0 = self.states[0].energy;
        self.states
            .iter()
            .map(|s| (s.energy - h0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.states.iter().map(|s| s.norm_drift).fold(0.0, f64::max)
    }

    /// CSV with header `t,x,y,z,H`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "x", "y", "z", "H"])?;
        for s in &self.states {
            w.serialize((s.t, s.v.x(), s.v.y(), s.v.z(), s.energy))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Classic fourth-order Runge–Kutta steps of the spike flow, projecting
/// back to the sphere after each step. Returns `steps + 1` states.
pub fn integrate_flow(
    m: &Constellation,
    k: usize,
    v0: &UnitVector,
    dt: f64,
    steps: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    let ham = SpikeHamiltonian::new(m, k)?;
    let mut states = Vec::with_capacity(steps + 1);
    let mut v = *v0.as_vector();
    states.push(FlowState {
        active_index: k,
        t: 0.0,
        v: *v0,
        energy: ham.value(&v),
        norm_drift: 0.0,
    });
    for step in 1..=steps {
        let k1 = ham.velocity(&v);
        let k2 = ham.velocity(&(v + k1 * (0.5 * dt)));
        let k3 = ham.velocity(&(v + k2 * (0.5 * dt)));
        let k4 = ham.velocity(&(v + k3 * dt));
        let next = v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let norm = next.norm();
        v = next / norm;
        let unit = UnitVector::from_vector(v)?;
        states.push(FlowState {
            active_index: k,
            t: step as f64 * dt,
            v: unit,
            energy: ham.value(&v),
            norm_drift: (norm - 1.0).abs(),
        });
    }
    Ok(Trajectory {
        constellation: m.clone(),
        active_index: k,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::random_constellation;
    use crate::gram::{diagnostics, Threshold};
    use crate::rng::seeded_rng;
    use rand::Rng;

    fn tetrahedron() -> Constellation {
        let v = |x: f64, y: f64, z: f64| UnitVector::new(x, y, z).unwrap();
        Constellation::new(
            SpinLabel::HALF,
            vec![v(1., 1., 1.), v(1., -1., -1.), v(-1., 1., -1.), v(-1., -1., 1.)],
            "tetrahedron",
        )
        .unwrap()
    }

    #[test]
    fn energy_is_gram_determinant() {
        let tet = tetrahedron();
        for k in 0..4 {
            let h = hamiltonian(&tet, k, &tet.vectors()[k]).unwrap();
            assert!((h - 16.0 / 27.0).abs() < 1e-12);
            let other = tet.vectors()[(k + 1) % 4];
            assert!(hamiltonian(&tet, k, &other).unwrap().abs() < 1e-14);
        }
        let m = random_constellation(SpinLabel::ONE, 4);
        let v = UnitVector::new(0.3, 0.1, -0.8).unwrap();
        let direct = diagnostics(&gram(&m.replace_vector(5, v).unwrap()), Threshold::Default).det;
        assert!((hamiltonian(&m, 5, &v).unwrap() - direct).abs() < 1e-12 * direct.abs().max(1e-3));
        assert!(hamiltonian(&m, 9, &v).is_err());
    }

    /// Least-squares fit of a trigonometric polynomial of the given degree.
    fn trig_fit_residual(samples: &[(f64, f64)], degree: usize) -> f64 {
        let cols = 2 * degree + 1;
        let a = DMatrix::from_fn(samples.len(), cols, |r, c| {
            let t = samples[r].0;
            match c {
                0 => 1.0,
                c if c % 2 == 1 => (c.div_ceil(2) as f64 * t).cos(),
                c => ((c / 2) as f64 * t).sin(),
            }
        });
        let b = nalgebra::DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
        let svd = a.clone().svd(true, true);
        let x = svd.solve(&b, 1e-14).unwrap();
        (a * x - b).amax()
    }

    #[test]
    fn energy_is_polynomial_along_great_circles() {
        // On the sphere H has degree 2·2s in v, so along a great circle it is
        // a trigonometric polynomial of that degree.
        for doubled in [1u32, 2] {
            let m = random_constellation(SpinLabel::from_doubled(doubled), 10);
            let ham = SpikeHamiltonian::new(&m, 1).unwrap();
            let (a, b) = m.vectors()[1].tangent_basis();
            let samples: Vec<(f64, f64)> = (0..60)
                .map(|i| {
                    let t = i as f64 * std::f64::consts::TAU / 60.0;
                    (t, ham.value(&(a * t.cos() + b * t.sin())))
                })
                .collect();
            let scale = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
            let degree = 2 * doubled as usize;
            assert!(trig_fit_residual(&samples, degree) < 1e-8);
            assert!(trig_fit_residual(&samples, degree - 1) > 1e-3 * scale);
        }
    }

    #[test]
    fn gradient_matches_directional_derivatives() {
        let mut rng = seeded_rng(8);
        for trial in 0..10u64 {
            let s = SpinLabel::from_doubled(1 + (trial % 2) as u32);
            let m = random_constellation(s, 100 + trial);
            let k = rng.random_range(0..m.len());
            let ham = SpikeHamiltonian::new(&m, k).unwrap();
            let v = UnitVector::random(&mut rng);
            let u = v.random_tangent(&mut rng);
            let g = ham.gradient(v.as_vector());
            let h = 1e-5;
            let fd = (ham.value(&(v.as_vector() + u * h)) - ham.value(&(v.as_vector() - u * h))) / (2.0 * h);
            assert!((fd - g.dot(&u)).abs() < 1e-6);
        }
    }

    #[test]
    fn gradient_finite_at_duplicate_spike() {
        let tet = tetrahedron();
        let ham = SpikeHamiltonian::new(&tet, 0).unwrap();
        let v = tet.vectors()[2];
        assert!(ham.value(v.as_vector()).abs() < 1e-14);
        let g = ham.gradient(v.as_vector());
        assert!(g.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn integrate_conserves_norm_and_energy() {
        let tet = tetrahedron();
        let v0 = UnitVector::new(0.8, 0.5, 0.2).unwrap();
        let traj = integrate_flow(&tet, 0, &v0, 1e-3, 1000).unwrap();
        assert_eq!(traj.states.len(), 1001);
        assert!(traj.max_norm_drift() < 1e-9);
        assert!(traj.max_energy_error() < 1e-8);
        let moved = traj.states.last().unwrap().v.chord(&v0);
        assert!(moved > 1e-3, "trajectory should move, moved {moved}");
    }

    #[test]
    fn tetrahedron_vertex_is_a_fixed_point() {
        let tet = tetrahedron();
        let v0 = tet.vectors()[0];
        let ham = SpikeHamiltonian::new(&tet, 0).unwrap();
        assert!(ham.is_fixed_point(v0.as_vector(), 1e-8));
        let traj = integrate_flow(&tet, 0, &v0, 1e-3, 1).unwrap();
        assert!(traj.states[1].v.chord(&v0) < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let tet = tetrahedron();
        let v = tet.vectors()[0];
        assert!(integrate_flow(&tet, 0, &v, 0.0, 10).is_err());
        assert!(integrate_flow(&tet, 0, &v, 1e-3, 0).is_err());
        assert!(integrate_flow(&tet, 4, &v, 1e-3, 1).is_err());
    }

    #[test]
    fn trajectory_csv() {
        let tet = tetrahedron();
        let traj = integrate_flow(&tet, 1, &UnitVector::PLUS_Z, 1e-2, 3).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,x,y,z,H");
        assert_eq!(lines.len(), 5);
    }
}
