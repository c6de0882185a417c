//! Hedgehogs: ordered sets of `(2s+1)^2` unit vectors labeling coherent states.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use crate::spin::{SpinLabel, UnitVector};

/// Unit tolerance applied to vectors read from files.
pub const LOAD_UNIT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    spin: SpinLabel,
    vectors: Vec<UnitVector>,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct ConstellationFile {
    doubled_spin: u32,
    label: String,
    vectors: Vec<[f64; 3]>,
}

impl Constellation {
    pub fn new(spin: SpinLabel, vectors: Vec<UnitVector>, label: impl Into<String>) -> Result<Self> {
        if vectors.len() != spin.n_points() {
            return Err(Error::DimensionMismatch {
                expected: spin.n_points(),
                actual: vectors.len(),
            });
        }
        Ok(Constellation {
            spin,
            vectors,
            label: label.into(),
        })
    }

    pub fn spin(&self) -> SpinLabel {
        self.spin
    }

    pub fn vectors(&self) -> &[UnitVector] {
        &self.vectors
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Copy with spike `index` replaced by `v`.
    pub fn replace_vector(&self, index: usize, v: UnitVector) -> Result<Constellation> {
        if index >= self.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            });
        }
        let mut out = self.clone();
        out.vectors[index] = v;
        Ok(out)
    }

    /// Sum of chord distances between equally indexed spikes.
    pub fn distance(&self, other: &Constellation) -> Result<f64> {
        if self.spin != other.spin {
            return Err(Error::SpinMismatch(self.spin.doubled(), other.spin.doubled()));
        }
        Ok(self
            .vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| a.chord(b))
            .sum())
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        let file = ConstellationFile {
            doubled_spin: self.spin.doubled(),
            label: self.label.clone(),
            vectors: self.vectors.iter().map(UnitVector::to_array).collect(),
        };
        serde_json::to_writer_pretty(writer, &file)?;
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_json(&mut buf)?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
    }

    /// Parses the JSON constellation format; every vector must be unit
    /// within [`LOAD_UNIT_TOL`].
    pub fn read_json<R: Read>(reader: R) -> Result<Constellation> {
        let file: ConstellationFile = serde_json::from_reader(reader)?;
        Self::from_file(file)
    }

    pub fn from_json_str(text: &str) -> Result<Constellation> {
        Self::from_file(serde_json::from_str(text)?)
    }

    fn from_file(file: ConstellationFile) -> Result<Constellation> {
        let spin = SpinLabel::from_doubled(file.doubled_spin);
        let vectors = file
            .vectors
            .iter()
            .enumerate()
            .map(|(i, &[x, y, z])| {
                UnitVector::checked(x, y, z, LOAD_UNIT_TOL)
                    .map_err(|e| Error::Format(format!("vector {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Constellation::new(spin, vectors, file.label)
            .map_err(|e| Error::Format(e.to_string()))
    }

    /// CSV with header `x,y,z`, one spike per row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "y", "z"])?;
        for v in &self.vectors {
            w.serialize(v.to_array())?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Regular hedgehog: `2s+1` cones about z, each carrying `2s+1` azimuths
/// `offset_a + 2πb/(2s+1)`.
///
/// Defaults: `θ_a = π(a+1)/(2s+2)` and `offset_a = aπ/N_s`.
pub fn regular_hedgehog(
    s: SpinLabel,
    cone_angles: Option<&[f64]>,
    azimuth_offsets: Option<&[f64]>,
) -> Result<Constellation> {
    let cones = s.dimension();
    let n_points = s.n_points() as f64;
    let thetas: Vec<f64> = match cone_angles {
        Some(angles) => angles.to_vec(),
        None => (0..cones).map(|a| PI * (a + 1) as f64 / (cones + 1) as f64).collect(),
    };
    let offsets: Vec<f64> = match azimuth_offsets {
        Some(off) => off.to_vec(),
        None => (0..cones).map(|a| a as f64 * PI / n_points).collect(),
    };
    if thetas.len() != cones {
        return Err(Error::InvalidConstruction(format!(
            "expected {cones} cone angles, got {}",
            thetas.len()
        )));
    }
    if offsets.len() != cones {
        return Err(Error::InvalidConstruction(format!(
            "expected {cones} azimuth offsets, got {}",
            offsets.len()
        )));
    }
    if let Some(bad) = thetas.iter().find(|t| !(**t > 0.0 && **t < PI)) {
        return Err(Error::InvalidConstruction(format!(
            "cone angle {bad} outside (0, π)"
        )));
    }
    if offsets.iter().any(|o| !o.is_finite()) {
        return Err(Error::InvalidConstruction("non-finite azimuth offset".into()));
    }
    for (i, a) in thetas.iter().enumerate() {
        if thetas[..i].contains(a) {
            return Err(Error::InvalidConstruction(format!("duplicate cone angle {a}")));
        }
    }
    let step = TAU / cones as f64;
    let vectors = thetas
        .iter()
        .zip(&offsets)
        .flat_map(|(&theta, &offset)| {
            (0..cones).map(move |b| UnitVector::from_angles(theta, offset + step * b as f64))
        })
        .collect();
    Constellation::new(s, vectors, format!("regular s={s}"))
}

/// `N_s` independent uniform directions from the stream seeded by `seed`.
pub fn random_constellation(s: SpinLabel, seed: u64) -> Constellation {
    let mut rng = seeded_rng(seed);
    let vectors = (0..s.n_points()).map(|_| UnitVector::random(&mut rng)).collect();
    Constellation::new(s, vectors, format!("random s={s} seed={seed}"))
        .expect("length is n_points by construction")
}

/// Fibonacci-lattice directions: an evenly spread baseline, not a regular
/// hedgehog.
pub fn fibonacci_constellation(s: SpinLabel) -> Constellation {
    let n = s.n_points();
    let golden_angle = PI * (3.0 - 5.0_f64.sqrt());
    let vectors = (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * i as f64;
            UnitVector::new(r * phi.cos(), r * phi.sin(), z).expect("nonzero by construction")
        })
        .collect();
    Constellation::new(s, vectors, format!("fibonacci s={s}")).expect("length is n_points")
}
