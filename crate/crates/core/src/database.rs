//! The radio map: learned models and raw fingerprints per grid location,
//! plus the Euclidean nearest-fingerprint baseline matcher.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::{FingerprintKind, FingerprintVector};
use crate::geom::Grid;
use crate::statfit::{GammaParams, GaussianStats, VonMisesParams};

/// Format tag written into every serialized database.
pub const DB_VERSION: &str = "fingerloc-db-1";

/// One learned model, or a raw fingerprint, for one feature at one location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum LearnedModel {
    Gaussian(GaussianStats),
    Gamma(GammaParams),
    VonMises(VonMisesParams),
    /// Detection probability of a binary sensor.
    Detection {
        p_detect: f64,
    },
    Raw(FingerprintVector),
}

impl LearnedModel {
    /// Dimension used for the equal-dim-per-key invariant.
    pub fn dim(&self) -> usize {
        match self {
            LearnedModel::Gaussian(g) => g.dim(),
            LearnedModel::Raw(f) => f.dim(),
            LearnedModel::Gamma(_) | LearnedModel::VonMises(_) | LearnedModel::Detection { .. } => {
                1
            }
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            LearnedModel::Gaussian(_) => "gaussian",
            LearnedModel::Gamma(_) => "gamma",
            LearnedModel::VonMises(_) => "von_mises",
            LearnedModel::Detection { .. } => "detection",
            LearnedModel::Raw(_) => "raw",
        }
    }
}

/// All models stored for one grid location, keyed by feature id
/// (for example `"cir:0-3"` or `"rssi:2.1"`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DbEntry {
    pub models: BTreeMap<String, LearnedModel>,
    /// Number of training snapshots behind the models.
    #[serde(default)]
    pub sample_count: usize,
    /// Per-feature reliability weights in [0, 1], used by phase
    /// interpolation. Missing keys count as 1.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub confidence: BTreeMap<String, f64>,
}

impl DbEntry {
    pub fn get(&self, key: &str) -> Option<&LearnedModel> {
        self.models.get(key)
    }

    pub fn confidence(&self, key: &str) -> f64 {
        self.confidence.get(key).copied().unwrap_or(1.0)
    }

    pub fn insert(&mut self, key: impl Into<String>, model: LearnedModel) {
        self.models.insert(key.into(), model);
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DbMeta {
    /// Training center frequencies, Hz.
    pub train_freqs: Vec<f64>,
    /// Training bandwidths, Hz.
    pub train_bandwidths: Vec<f64>,
    /// Set on databases produced by interpolation rather than measurement.
    #[serde(default)]
    pub derived: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDatabase")]
pub struct FingerprintDatabase {
    version: String,
    grid: Grid,
    meta: DbMeta,
    entries: Vec<DbEntry>,
}

#[derive(Deserialize)]
struct RawDatabase {
    version: String,
    grid: Grid,
    meta: DbMeta,
    entries: Vec<DbEntry>,
}

impl TryFrom<RawDatabase> for FingerprintDatabase {
    type Error = Error;

    fn try_from(raw: RawDatabase) -> Result<Self> {
        if raw.version != DB_VERSION {
            return Err(Error::arg(format!(
                "unsupported database version {:?}, expected {DB_VERSION:?}",
                raw.version
            )));
        }
        FingerprintDatabase::new(raw.grid, raw.meta, raw.entries)
    }
}

impl FingerprintDatabase {
    pub fn new(grid: Grid, meta: DbMeta, entries: Vec<DbEntry>) -> Result<Self> {
        if entries.len() != grid.len() {
            return Err(Error::arg(format!(
                "database has {} entries for {} grid points",
                entries.len(),
                grid.len()
            )));
        }
        let mut dims: BTreeMap<&str, (&'static str, usize)> = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            for (k, m) in &e.models {
                let seen = *dims.entry(k).or_insert((m.tag(), m.dim()));
                if seen != (m.tag(), m.dim()) {
                    return Err(Error::arg(format!(
                        "feature {k:?} at grid index {i} is {} of dim {}, elsewhere {} of dim {}",
                        m.tag(),
                        m.dim(),
                        seen.0,
                        seen.1
                    )));
                }
            }
        }
        Ok(Self {
            version: DB_VERSION.to_string(),
            grid,
            meta,
            entries,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn meta(&self) -> &DbMeta {
        &self.meta
    }

    pub fn entries(&self) -> &[DbEntry] {
        &self.entries
    }

    pub fn entry(&self, index: usize) -> &DbEntry {
        &self.entries[index]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Feature keys present at grid index 0.
    pub fn keys(&self) -> Vec<String> {
        self.entries
            .first()
            .map(|e| e.models.keys().cloned().collect())
            .unwrap_or_default()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// Nearest stored fingerprint by Euclidean distance.
///
/// Each entry must hold exactly one raw fingerprint of `target.kind()`
/// with the target's dimension. Ties go to the lowest grid index.
pub fn euclidean_match(target: &FingerprintVector, db: &FingerprintDatabase) -> Result<usize> {
    if db.is_empty() {
        return Err(Error::State("database is empty".into()));
    }
    let mut best = (0usize, f64::INFINITY);
    for (i, e) in db.entries().iter().enumerate() {
        let stored = raw_of_kind(e, target.kind())
            .map_err(|m| Error::arg(format!("grid index {i}: {m}")))?;
        if stored.dim() != target.dim() {
            return Err(Error::arg(format!(
                "grid index {i}: stored dim {} does not match target dim {}",
                stored.dim(),
                target.dim()
            )));
        }
        let d2: f64 = target
            .values()
            .iter()
            .zip(stored.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    Ok(best.0)
}

fn raw_of_kind(
    entry: &DbEntry,
    kind: FingerprintKind,
) -> std::result::Result<&FingerprintVector, String> {
    let mut found = entry.models.values().filter_map(|m| match m {
        LearnedModel::Raw(f) if f.kind() == kind => Some(f),
        _ => None,
    });
    let first = found
        .next()
        .ok_or_else(|| format!("no raw {kind:?} fingerprint stored"))?;
    if found.next().is_some() {
        return Err(format!("several raw {kind:?} fingerprints stored"));
    }
    Ok(first)
}
