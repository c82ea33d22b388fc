//! Static localization over the grid: likelihood maps from each pipeline,
//! maximum-likelihood selection, threshold sets and the hybrid
//! cross-correlation/phase matcher.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::database::{FingerprintDatabase, LearnedModel};
use crate::error::{Error, Result};
use crate::fingerprint::{wrap_angle, FingerprintKind, FingerprintVector};
use crate::geom::Grid;
use crate::statfit::{gamma_logpdf, vonmises_logpdf, DetectionMap, GaussianModel};

/// Scale of the values in a [`LikelihoodMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapMode {
    /// Log-likelihood; larger is better.
    LogLik,
    /// Squared fingerprint error; smaller is better.
    SqErr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodMap {
    grid: Grid,
    values: Vec<f64>,
    mode: MapMode,
}

impl LikelihoodMap {
    pub fn new(grid: Grid, values: Vec<f64>, mode: MapMode) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::arg(format!(
                "map has {} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "map value at index {i} is not finite"
            )));
        }
        Ok(Self { grid, values, mode })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mode(&self) -> MapMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Best index for the map's mode, lowest index on ties.
    pub fn best(&self) -> usize {
        match self.mode {
            MapMode::LogLik => argmax(&self.values),
            MapMode::SqErr => argmin(&self.values),
        }
    }

    /// CSV with header `index,x,y,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x,y,value\n");
        for (i, (p, v)) in self.grid.points().iter().zip(&self.values).enumerate() {
            let _ = writeln!(out, "{i},{},{},{}", p.x, p.y, v);
        }
        out
    }
}

/// Index of the largest value; ties and NaN-free input resolve to the
/// lowest index. Returns 0 for an empty slice.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Index of the smallest value, lowest index on ties.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Gaussian models of a database, factorized once for repeated matching.
#[derive(Debug, Clone)]
pub struct GaussianBank {
    grid: Grid,
    keys: Vec<String>,
    /// `models[grid index][key index]`.
    models: Vec<Vec<GaussianModel>>,
}

impl GaussianBank {
    pub fn from_db(db: &FingerprintDatabase, keys: &[String]) -> Result<Self> {
        let mut models = Vec::with_capacity(db.len());
        for (i, e) in db.entries().iter().enumerate() {
            let row = keys
                .iter()
                .map(|k| match e.get(k) {
                    Some(LearnedModel::Gaussian(g)) => g.factorize(),
                    _ => Err(Error::arg(format!(
                        "grid index {i} has no Gaussian model for {k:?}"
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            models.push(row);
        }
        Ok(Self {
            grid: db.grid().clone(),
            keys: keys.to_vec(),
            models,
        })
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    /// Sum of per-pair Gaussian log-likelihoods at every grid point.
    pub fn evaluate(
        &self,
        target: &[(String, FingerprintVector)],
    ) -> Result<(usize, LikelihoodMap)> {
        let slots: Vec<(usize, &FingerprintVector)> = target
            .iter()
            .map(|(k, f)| {
                self.keys
                    .iter()
                    .position(|x| x == k)
                    .map(|j| (j, f))
                    .ok_or_else(|| Error::arg(format!("pair {k:?} is not in the database")))
            })
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(self.models.len());
        for row in &self.models {
            let mut acc = 0.0;
            for &(j, f) in &slots {
                if f.dim() != row[j].dim() {
                    return Err(Error::arg(format!(
                        "pair {:?}: target dim {} but model dim {}",
                        self.keys[j],
                        f.dim(),
                        row[j].dim()
                    )));
                }
                acc += row[j].loglik(f.values())?;
            }
            values.push(acc);
        }
        let map = LikelihoodMap::new(self.grid.clone(), values, MapMode::LogLik)?;
        Ok((map.best(), map))
    }
}

/// Maximum-likelihood location from CIR cross-correlation fingerprints,
/// one per sensor pair, against Gaussian models in `db`.
pub fn mle_cir(
    target: &[(String, FingerprintVector)],
    db: &FingerprintDatabase,
) -> Result<(usize, LikelihoodMap)> {
    let keys: Vec<String> = target.iter().map(|(k, _)| k.clone()).collect();
    GaussianBank::from_db(db, &keys)?.evaluate(target)
}

/// Maximum-likelihood location from RSSI and RSPD features.
///
/// Each target value is read according to the model stored under its key:
/// RSSI (positive power) for Gamma models, phase for von Mises models.
pub fn mle_rssi_rspd(
    target: &[(String, f64)],
    db: &FingerprintDatabase,
) -> Result<(usize, LikelihoodMap)> {
    let mut values = vec![0.0; db.len()];
    for (key, x) in target {
        for (i, e) in db.entries().iter().enumerate() {
            values[i] += match e.get(key) {
                Some(LearnedModel::Gamma(g)) => {
                    if !(*x > 0.0) {
                        return Err(Error::arg(format!(
                            "RSSI feature {key:?} must be positive, got {x}"
                        )));
                    }
                    gamma_logpdf(*x, g)?
                }
                Some(LearnedModel::VonMises(v)) => vonmises_logpdf(*x, v),
                _ => {
                    return Err(Error::arg(format!(
                        "grid index {i} has no Gamma or von Mises model for {key:?}"
                    )))
                }
            };
        }
    }
    let map = LikelihoodMap::new(db.grid().clone(), values, MapMode::LogLik)?;
    Ok((map.best(), map))
}

/// Probabilities are kept this far from 0 and 1 so the map stays finite.
const DETECTION_CLAMP: f64 = 1e-12;

/// Log-likelihood of a binary sensor vector, assuming independent sensors.
pub fn binary_likelihood(
    bits: &FingerprintVector,
    maps: &[DetectionMap],
    grid: &Grid,
) -> Result<LikelihoodMap> {
    if bits.kind() != FingerprintKind::BinaryVector {
        return Err(Error::arg(
            "binary likelihood needs a BinaryVector fingerprint",
        ));
    }
    if bits.dim() != maps.len() {
        return Err(Error::arg(format!(
            "{} bits for {} sensors",
            bits.dim(),
            maps.len()
        )));
    }
    if let Some(m) = maps.iter().position(|m| m.len() != grid.len()) {
        return Err(Error::arg(format!(
            "detection map {m} does not cover the grid"
        )));
    }
    let b = bits.real_values();
    let values = (0..grid.len())
        .map(|u| {
            maps.iter()
                .zip(&b)
                .map(|(m, bit)| {
                    let p = m.p_detect[u].clamp(DETECTION_CLAMP, 1.0 - DETECTION_CLAMP);
                    if *bit == 1.0 {
                        p.ln()
                    } else {
                        (1.0 - p).ln()
                    }
                })
                .sum()
        })
        .collect();
    LikelihoodMap::new(grid.clone(), values, MapMode::LogLik)
}

/// Indices with value above `eta`, or `{argmax}` when none qualify.
pub fn threshold_set(map: &LikelihoodMap, eta: f64) -> Vec<usize> {
    let set: Vec<usize> = map
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > eta)
        .map(|(i, _)| i)
        .collect();
    if set.is_empty() {
        vec![argmax(map.values())]
    } else {
        set
    }
}

/// Residual used for cross-correlation squared errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XcorrResidual {
    #[default]
    Complex,
    Magnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    /// Weight of the phase error relative to the cross-correlation error.
    pub gamma: f64,
    /// Whether the zero-lag bin of cross-correlation fingerprints counts.
    #[serde(default = "default_true")]
    pub include_zero_lag: bool,
    #[serde(default)]
    pub residual: XcorrResidual,
}

fn default_true() -> bool {
    true
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            include_zero_lag: true,
            residual: XcorrResidual::Complex,
        }
    }
}

/// Squared error between two fingerprints of the same kind: complex
/// residuals for cross-correlations, wrapped angular residuals for
/// phases, plain residuals otherwise.
pub fn fingerprint_sqerr(target: &FingerprintVector, reference: &FingerprintVector) -> Result<f64> {
    fingerprint_sqerr_with(target, reference, XcorrResidual::Complex, true)
}

pub fn fingerprint_sqerr_with(
    target: &FingerprintVector,
    reference: &FingerprintVector,
    residual: XcorrResidual,
    include_zero_lag: bool,
) -> Result<f64> {
    if target.kind() != reference.kind() {
        return Err(Error::arg(format!(
            "cannot compare {:?} with {:?}",
            target.kind(),
            reference.kind()
        )));
    }
    if target.dim() != reference.dim() {
        return Err(Error::arg(format!(
            "dimension mismatch: {} vs {}",
            target.dim(),
            reference.dim()
        )));
    }
    let pairs = target.values().iter().zip(reference.values());
    Ok(match target.kind() {
        FingerprintKind::PhaseDiff | FingerprintKind::Rspd => {
            pairs.map(|(a, b)| wrap_angle(a.re - b.re).powi(2)).sum()
        }
        FingerprintKind::CirXcorr | FingerprintKind::RxXcorr => {
            let centre = target.dim() / 2;
            pairs
                .enumerate()
                .filter(|(k, _)| include_zero_lag || *k != centre)
                .map(|(_, (a, b))| match residual {
                    XcorrResidual::Complex => (a - b).norm_sqr(),
                    XcorrResidual::Magnitude => (a.norm() - b.norm()).powi(2),
                })
                .sum()
        }
        FingerprintKind::Rssi | FingerprintKind::BinaryVector => pairs
            .map(|(a, b): (&Complex64, &Complex64)| (a - b).norm_sqr())
            .sum(),
    })
}

/// Squared-error map of keyed target fingerprints against the raw
/// fingerprints stored under the same keys.
pub fn sqerr_map(
    target: &[(String, FingerprintVector)],
    db: &FingerprintDatabase,
    residual: XcorrResidual,
    include_zero_lag: bool,
) -> Result<LikelihoodMap> {
    let mut values = vec![0.0; db.len()];
    for (key, f) in target {
        for (i, e) in db.entries().iter().enumerate() {
            match e.get(key) {
                Some(LearnedModel::Raw(r)) => {
                    values[i] += fingerprint_sqerr_with(f, r, residual, include_zero_lag)?;
                }
                _ => {
                    return Err(Error::arg(format!(
                        "grid index {i} has no raw fingerprint {key:?}"
                    )))
                }
            }
        }
    }
    LikelihoodMap::new(db.grid().clone(), values, MapMode::SqErr)
}

/// Combined error `err_xcorr + γ·err_phase` and its argmin.
pub fn hybrid_match(
    err_xcorr: &LikelihoodMap,
    err_phase: &LikelihoodMap,
    cfg: &HybridConfig,
) -> Result<(usize, LikelihoodMap)> {
    if !cfg.gamma.is_finite() || cfg.gamma < 0.0 {
        return Err(Error::arg(format!(
            "gamma must be finite and non-negative, got {}",
            cfg.gamma
        )));
    }
    if err_xcorr.grid() != err_phase.grid() {
        return Err(Error::arg("error maps are on different grids"));
    }
    let values = err_xcorr
        .values()
        .iter()
        .zip(err_phase.values())
        .map(|(x, p)| x + cfg.gamma * p)
        .collect();
    let map = LikelihoodMap::new(err_xcorr.grid().clone(), values, MapMode::SqErr)?;
    Ok((argmin(map.values()), map))
}
