//! Spin operators, coherent spin states and their projectors in the
//! `(2s+1)`-dimensional Hilbert space (units with ħ = 1).
//!
//! Basis vectors are ordered by magnetic quantum number `m = s, s-1, …, -s`,
//! so index `i` carries `m = s - i`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest `2s` for which binomial coefficients are formed exactly.
const EXACT_BINOMIAL_MAX: u32 = 30;

/// Tolerance used when checking hermiticity and imaginary residues.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A spin quantum number `s`, stored as the integer `2s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpinLabel(u32);

impl SpinLabel {
    pub const HALF: SpinLabel = SpinLabel(1);
    pub const ONE: SpinLabel = SpinLabel(2);

    pub const fn from_doubled(doubled_spin: u32) -> Self {
        SpinLabel(doubled_spin)
    }

    pub const fn doubled(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    /// Hilbert space dimension `2s + 1`.
    pub const fn dimension(self) -> usize {
        self.0 as usize + 1
    }

    /// Number of real parameters of a Hermitian operator, `(2s+1)^2`.
    pub const fn n_points(self) -> usize {
        self.dimension() * self.dimension()
    }
}

impl fmt::Display for SpinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for SpinLabel {
    type Err = Error;

    /// Accepts `"2"`, `"1/2"`, `"3/2"`; any `k/2` is taken as `2s = k`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::InvalidSpin(text.to_string());
        let t = text.trim();
        match t.split_once('/') {
            Some((num, den)) => {
                if den.trim() != "2" {
                    return Err(bad());
                }
                num.trim().parse::<u32>().map(SpinLabel).map_err(|_| bad())
            }
            None => {
                let s = t.parse::<u32>().map_err(|_| bad())?;
                s.checked_mul(2).map(SpinLabel).ok_or_else(bad)
            }
        }
    }
}

/// A direction on the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVector(Vector3<f64>);

impl UnitVector {
    pub const PLUS_X: UnitVector = UnitVector(Vector3::new(1.0, 0.0, 0.0));
    pub const PLUS_Y: UnitVector = UnitVector(Vector3::new(0.0, 1.0, 0.0));
    pub const PLUS_Z: UnitVector = UnitVector(Vector3::new(0.0, 0.0, 1.0));
    pub const MINUS_Z: UnitVector = UnitVector(Vector3::new(0.0, 0.0, -1.0));

    /// Normalizes `(x, y, z)`; fails on a zero or non-finite vector.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vector(Vector3::new(x, y, z))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::ZeroVector(v.x, v.y, v.z));
        }
        Ok(UnitVector(v / norm))
    }

    /// Accepts `(x, y, z)` only if it is already unit within `tol`, then
    /// renormalizes. Vectors unit to rounding are kept bit-for-bit, so
    /// saved constellations reload exactly.
    pub fn checked(x: f64, y: f64, z: f64, tol: f64) -> Result<Self> {
        let v = Vector3::new(x, y, z);
        let norm = v.norm();
        if norm.is_nan() || (norm - 1.0).abs() > tol {
            return Err(Error::NotUnit { norm });
        }
        if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(UnitVector(v));
        }
        Ok(UnitVector(v / norm))
    }

    /// Direction with polar angle `theta` and azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        UnitVector(Vector3::new(st * cp, st * sp, ct))
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        self.0.dot(&other.0)
    }

    /// Euclidean (chord) distance `|a - b|`.
    pub fn chord(&self, other: &UnitVector) -> f64 {
        (self.0 - other.0).norm()
    }

    pub fn neg(&self) -> UnitVector {
        UnitVector(-self.0)
    }

    /// Polar angle in `[0, π]`.
    pub fn polar(&self) -> f64 {
        self.0.xy().norm().atan2(self.0.z)
    }

    /// Azimuth in `(-π, π]`; zero at the poles.
    pub fn azimuth(&self) -> f64 {
        if self.0.x == 0.0 && self.0.y == 0.0 {
            0.0
        } else {
            self.0.y.atan2(self.0.x)
        }
    }

    /// Rotation about the z axis by `angle`.
    pub fn rotate_z(&self, angle: f64) -> UnitVector {
        let (s, c) = angle.sin_cos();
        let v = &self.0;
        UnitVector(Vector3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z))
    }

    /// Uniform sample on the sphere: `z ~ U(-1, 1)`, `phi ~ U(0, 2π)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        UnitVector(Vector3::new(r * phi.cos(), r * phi.sin(), z))
    }

    /// A unit vector orthogonal to `self` in a uniformly random direction.
    pub fn random_tangent<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector3<f64> {
        let (e1, e2) = self.tangent_basis();
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        e1 * phi.cos() + e2 * phi.sin()
    }

    /// Orthonormal pair spanning the tangent plane at `self`.
    pub fn tangent_basis(&self) -> (Vector3<f64>, Vector3<f64>) {
        let v = self.0;
        let helper = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let e1 = (helper - v * v.dot(&helper)).normalize();
        let e2 = v.cross(&e1);
        (e1, e2)
    }
}

impl Serialize for UnitVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for UnitVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(deserializer)?;
        UnitVector::new(x, y, z).map_err(serde::de::Error::custom)
    }
}

/// Normalized state in the `|s, m⟩` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<Complex64>);

impl StateVector {
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidArgument("state vector has zero norm".into()));
        }
        Ok(StateVector(amplitudes / Complex64::from(norm)))
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.0.dotc(&other.0)
    }
}

/// Hermitian operator on the spin Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator(DMatrix<Complex64>);

impl HermitianOperator {
    /// Validates hermiticity within `1e-12` (scaled by the largest entry
    /// when that exceeds one) and stores the exactly Hermitian part.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                actual: entries.ncols(),
            });
        }
        let scale = entries.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let deviation = (&entries - entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max);
        if deviation > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(deviation));
        }
        Ok(Self::from_hermitian_part(entries))
    }

    pub(crate) fn from_hermitian_part(entries: DMatrix<Complex64>) -> Self {
        let adj = entries.adjoint();
        HermitianOperator((entries + adj).scale(0.5))
    }

    pub fn identity(s: SpinLabel) -> Self {
        let d = s.dimension();
        HermitianOperator(DMatrix::identity(d, d))
    }

    pub fn zeros(dimension: usize) -> Self {
        HermitianOperator(DMatrix::zeros(dimension, dimension))
    }

    /// Random test operator: standard normal real diagonal, complex
    /// standard normal upper triangle mirrored to the lower one.
    pub fn random<R: Rng + ?Sized>(s: SpinLabel, rng: &mut R) -> Self {
        let d = s.dimension();
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = Complex64::new(rng.sample(StandardNormal), 0.0);
            for j in (i + 1)..d {
                let z = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        HermitianOperator(m)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Hilbert–Schmidt product `Tr[self · other]`, real for Hermitian pairs.
    pub fn trace_product(&self, other: &HermitianOperator) -> f64 {
        // Tr[A B] = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij)
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &HermitianOperator, b: f64) -> Self {
        HermitianOperator(self.0.scale(a) + other.0.scale(b))
    }

    pub fn scale(&self, factor: f64) -> Self {
        HermitianOperator(self.0.scale(factor))
    }

    /// Adds `weight · other` in place.
    pub fn add_scaled(&mut self, weight: f64, other: &HermitianOperator) {
        self.0 += other.0.scale(weight);
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &HermitianOperator) -> f64 {
        (&self.0 - &other.0).norm()
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Eigenvalues below `-tol`; a non-empty result marks an operator that
    /// is not positive semidefinite (not a physical, unnormalized state).
    pub fn negative_eigenvalues(&self, tol: f64) -> Vec<f64> {
        self.eigenvalues().into_iter().filter(|&l| l < -tol).collect()
    }

    fn check_dimension(&self, s: SpinLabel) -> Result<()> {
        if self.dimension() != s.dimension() {
            return Err(Error::DimensionMismatch {
                expected: s.dimension(),
                actual: self.dimension(),
            });
        }
        Ok(())
    }
}

/// The three components of the spin operator.
#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub x: HermitianOperator,
    pub y: HermitianOperator,
    pub z: HermitianOperator,
}

impl SpinMatrices {
    /// `n · S`.
    pub fn along(&self, n: &UnitVector) -> HermitianOperator {
        let m = self.x.0.scale(n.x()) + self.y.0.scale(n.y()) + self.z.0.scale(n.z());
        HermitianOperator(m)
    }

    /// `S^2 = Sx^2 + Sy^2 + Sz^2`.
    pub fn casimir(&self) -> DMatrix<Complex64> {
        &self.x.0 * &self.x.0 + &self.y.0 * &self.y.0 + &self.z.0 * &self.z.0
    }
}

pub fn spin_matrices(s: SpinLabel) -> SpinMatrices {
    let d = s.dimension();
    let sv = s.value();
    let mut raise = DMatrix::<Complex64>::zeros(d, d);
    let mut sz = DMatrix::<Complex64>::zeros(d, d);
    for i in 0..d {
        let m = sv - i as f64;
        sz[(i, i)] = Complex64::from(m);
        // S+ |m⟩ = sqrt(s(s+1) - m(m+1)) |m+1⟩, and m+1 sits at index i-1
        if i > 0 {
            raise[(i - 1, i)] = Complex64::from((sv * (sv + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let lower = raise.adjoint();
    let sx = (&raise + &lower).scale(0.5);
    let sy = (&raise - &lower) * Complex64::new(0.0, -0.5);
    SpinMatrices {
        x: HermitianOperator(sx),
        y: HermitianOperator(sy),
        z: HermitianOperator(sz),
    }
}

/// `C(n, k)` in floating point, exact for `n <= 30`.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= EXACT_BINOMIAL_MAX {
        let mut acc: u64 = 1;
        for j in 0..u64::from(k) {
            acc = acc * (u64::from(n) - j) / (j + 1);
        }
        acc as f64
    } else {
        let (n, k) = (f64::from(n), f64::from(k));
        (libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)).exp()
    }
}

/// Coherent state `|n⟩`, the `+s` eigenvector of `n · S`.
///
/// Amplitudes are `⟨m|n⟩ = sqrt(C(2s, s-m)) cos^{s+m}(θ/2) sin^{s-m}(θ/2) e^{i(s-m)φ}`.
pub fn coherent_state(s: SpinLabel, n: &UnitVector) -> StateVector {
    let two_s = s.doubled();
    let half = 0.5 * n.polar();
    let (sin_h, cos_h) = half.sin_cos();
    let phi = n.azimuth();
    let amplitudes = DVector::from_iterator(
        s.dimension(),
        (0..=two_s).map(|k| {
            // k = s - m
            let magnitude = binomial(two_s, k).sqrt()
                * cos_h.powi((two_s - k) as i32)
                * sin_h.powi(k as i32);
            Complex64::from_polar(magnitude, f64::from(k) * phi)
        }),
    );
    StateVector(amplitudes)
}

/// `|v⟩⟨v|`.
pub fn projector(v: &StateVector) -> HermitianOperator {
    let a = &v.0;
    HermitianOperator(a * a.adjoint())
}

/// Projector onto the coherent state along `n`.
pub fn coherent_projector(s: SpinLabel, n: &UnitVector) -> HermitianOperator {
    projector(&coherent_state(s, n))
}

/// Q-symbol `⟨n|A|n⟩`.
pub fn q_symbol(a: &HermitianOperator, s: SpinLabel, n: &UnitVector) -> Result<f64> {
    a.check_dimension(s)?;
    let v = coherent_state(s, n);
    Ok(expectation(a, &v))
}

pub(crate) fn expectation(a: &HermitianOperator, v: &StateVector) -> f64 {
    let value = v.0.dotc(&(&a.0 * &v.0));
    debug_assert!(
        value.im.abs() <= 1e3 * HERMITIAN_TOL * a.frobenius_norm().max(1.0),
        "imaginary residue {} in expectation value",
        value.im
    );
    value.re
}

/// `|⟨n|n2⟩|^2` from explicit amplitudes.
pub fn overlap_probability(s: SpinLabel, n: &UnitVector, n2: &UnitVector) -> f64 {
    coherent_state(s, n).inner(&coherent_state(s, n2)).norm_sqr()
}

/// Closed form `((1 + n·n2) / 2)^{2s}` of the coherent-state overlap.
pub fn overlap_closed_form(s: SpinLabel, n: &UnitVector, n2: &UnitVector) -> f64 {
    overlap_from_dot(s, n.dot(n2))
}

pub(crate) fn overlap_from_dot(s: SpinLabel, dot: f64) -> f64 {
    (0.5 * (1.0 + dot)).clamp(0.0, 1.0).powi(s.doubled() as i32)
}
