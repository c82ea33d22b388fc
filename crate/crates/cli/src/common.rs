//! Helpers shared by the study pipelines.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use fingerloc::rng::SeedMixer;
use fingerloc::simkit::ChannelModel;
use fingerloc::Complex64;
use rand::Rng;

use crate::data::Sample;
use crate::error::CliError;

/// Stream tags keep the random draws of different purposes apart.
pub mod tag {
    pub const CHANNEL: u64 = 1;
    pub const TX_PHASE: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const BITS: u64 = 4;
    pub const WALK: u64 = 5;
    pub const PDR: u64 = 6;
    pub const SENSOR: u64 = 7;
    pub const PARTICLES: u64 = 8;
    pub const TRIALS: u64 = 9;
}

/// Channel model whose seed also depends on the experiment seed.
pub fn seeded_channel(model: &ChannelModel, seed: u64) -> ChannelModel {
    ChannelModel {
        seed: SeedMixer::new(seed)
            .word(tag::CHANNEL)
            .word(model.seed)
            .finish(),
        ..model.clone()
    }
}

/// Unknown transmitter carrier phase of one transmission.
pub fn tx_rotation(seed: u64, location: usize, snapshot: u64) -> Complex64 {
    let mut rng = SeedMixer::new(seed)
        .word(tag::TX_PHASE)
        .word(location as u64)
        .word(snapshot)
        .rng();
    Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI)
}

pub fn noise_seed(seed: u64, location: usize, snapshot: u64, antenna: usize) -> u64 {
    SeedMixer::new(seed)
        .word(tag::NOISE)
        .word(location as u64)
        .word(snapshot)
        .word(antenna as u64)
        .finish()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Training samples grouped by grid index, optionally leaving out one
/// snapshot.
pub fn group_by_location(
    train: &[Sample],
    n: usize,
    exclude: Option<u64>,
) -> Result<Vec<Vec<&Sample>>, CliError> {
    let mut groups: Vec<Vec<&Sample>> = vec![Vec::new(); n];
    for s in train {
        if Some(s.snapshot) != exclude {
            groups[s.grid_index].push(s);
        }
    }
    if let Some(i) = groups.iter().position(|g| g.is_empty()) {
        return Err(CliError::Config(format!(
            "no training samples at grid index {i}"
        )));
    }
    Ok(groups)
}

/// Sorted distinct snapshot ids.
pub fn snapshot_ids(train: &[Sample]) -> Vec<u64> {
    let set: BTreeMap<u64, ()> = train.iter().map(|s| (s.snapshot, ())).collect();
    set.into_keys().collect()
}
