#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Fingerprint-based localization of radio emitters from multi-sensor
//! measurements.
//!
//! The crate is organised along the two phases of a fingerprinting
//! system. In the learning phase fingerprints are extracted
//! ([`fingerprints`]) from measured or simulated ([`simkit`]) signals and
//! summarised per grid location ([`statfit`]) into a
//! [`FingerprintDatabase`]. In the estimation phase a target fingerprint
//! is matched against the database ([`matching`]), optionally tracked over
//! time ([`tracking`]). For emitters with unknown signal parameters the
//! database is first re-projected to the target's bandwidth, frequency and
//! a denser spatial grid ([`interp`]). [`lighting`] turns tracked occupant
//! locations into a minimum-power dimming plan.

pub mod database;
pub mod error;
pub mod fingerprint;
pub mod fingerprints;
pub mod geom;
pub mod interp;
pub mod lighting;
pub mod linalg;
pub mod matching;
pub mod rng;
pub mod simkit;
pub mod simplex;
pub mod special;
pub mod statfit;
pub mod tracking;

pub use database::{euclidean_match, DbEntry, DbMeta, FingerprintDatabase, LearnedModel};
pub use error::{Error, Result};
pub use fingerprint::{FingerprintKind, FingerprintMeta, FingerprintVector};
pub use geom::{build_uniform_grid, Grid, Position};

pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
