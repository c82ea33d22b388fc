//! The tagged fingerprint container shared by every pipeline.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FingerprintKind {
    /// Cross-correlation of two estimated CIRs.
    CirXcorr,
    /// Received power on one antenna.
    Rssi,
    /// Phase of the averaged cross-product between two antennas of a sensor.
    Rspd,
    /// Cross-correlation of raw received samples between two sensors.
    RxXcorr,
    /// Inter-element phase differences of one sensor's array.
    PhaseDiff,
    /// One detection bit per sensor.
    BinaryVector,
}

impl FingerprintKind {
    /// Kinds whose values are angles in (-pi, pi].
    pub fn is_angular(self) -> bool {
        matches!(self, FingerprintKind::Rspd | FingerprintKind::PhaseDiff)
    }
}

/// Where and how a fingerprint was captured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FingerprintMeta {
    /// Sensor index `m` (for two-sensor fingerprints, the first sensor).
    pub sensor: usize,
    /// Antenna or sensor pair `(i, j)`.
    pub pair: (usize, usize),
    /// Center frequency, Hz.
    pub center_freq: f64,
    /// Bandwidth, Hz.
    pub bandwidth: f64,
}

/// One fingerprint observation. Real-valued kinds store their values in
/// the real part with a zero imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFingerprint")]
pub struct FingerprintVector {
    kind: FingerprintKind,
    values: Vec<Complex64>,
    dim: usize,
    meta: FingerprintMeta,
}

#[derive(Deserialize)]
struct RawFingerprint {
    kind: FingerprintKind,
    values: Vec<Complex64>,
    dim: usize,
    meta: FingerprintMeta,
}

impl TryFrom<RawFingerprint> for FingerprintVector {
    type Error = Error;

    fn try_from(raw: RawFingerprint) -> Result<Self> {
        if raw.dim != raw.values.len() {
            return Err(Error::arg(format!(
                "fingerprint dim {} does not match {} values",
                raw.dim,
                raw.values.len()
            )));
        }
        FingerprintVector::new(raw.kind, raw.values, raw.meta)
    }
}

impl FingerprintVector {
    pub fn new(
        kind: FingerprintKind,
        values: Vec<Complex64>,
        meta: FingerprintMeta,
    ) -> Result<Self> {
        if values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::arg("fingerprint values must be finite"));
        }
        match kind {
            FingerprintKind::BinaryVector => {
                if values
                    .iter()
                    .any(|v| v.im != 0.0 || (v.re != 0.0 && v.re != 1.0))
                {
                    return Err(Error::arg("binary fingerprint entries must be 0 or 1"));
                }
            }
            FingerprintKind::Rspd | FingerprintKind::PhaseDiff => {
                if values
                    .iter()
                    .any(|v| v.im != 0.0 || v.re <= -PI || v.re > PI)
                {
                    return Err(Error::arg(
                        "phase fingerprint entries must lie in (-pi, pi]",
                    ));
                }
            }
            FingerprintKind::Rssi => {
                if values.iter().any(|v| v.im != 0.0) {
                    return Err(Error::arg("RSSI fingerprint entries must be real"));
                }
            }
            FingerprintKind::CirXcorr | FingerprintKind::RxXcorr => {}
        }
        let dim = values.len();
        Ok(Self {
            kind,
            values,
            dim,
            meta,
        })
    }

    pub fn from_real(kind: FingerprintKind, values: &[f64], meta: FingerprintMeta) -> Result<Self> {
        Self::new(
            kind,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            meta,
        )
    }

    /// Phase fingerprint from arbitrary angles, wrapped into (-pi, pi].
    pub fn from_phases(
        kind: FingerprintKind,
        phases: &[f64],
        meta: FingerprintMeta,
    ) -> Result<Self> {
        let wrapped: Vec<f64> = phases.iter().map(|&p| wrap_angle(p)).collect();
        Self::from_real(kind, &wrapped, meta)
    }

    pub fn kind(&self) -> FingerprintKind {
        self.kind
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn meta(&self) -> &FingerprintMeta {
        &self.meta
    }

    pub fn with_meta(mut self, meta: FingerprintMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Same kind and meta, new values (re-validated).
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(self.kind, values, self.meta)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}
