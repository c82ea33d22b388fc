//! Wi-Fi study: three two-antenna sensors report RSSI and the phase
//! difference between their antennas (RSPD). Gamma and von Mises models
//! are learned per grid point; a random-walk target is localized per
//! snapshot from RSSI, RSPD or both, and tracked with a particle filter
//! driven by noisy dead-reckoning steps.

use fingerloc::database::{DbEntry, DbMeta, FingerprintDatabase, LearnedModel};
use fingerloc::fingerprint::{FingerprintKind, FingerprintMeta, FingerprintVector};
use fingerloc::fingerprints::{rspd, rssi, SignalBuffer};
use fingerloc::geom::{Grid, Position};
use fingerloc::interp::UcaGeometry;
use fingerloc::matching::{mle_rssi_rspd, LikelihoodMap};
use fingerloc::rng::SeedMixer;
use fingerloc::simkit::{
    gen_array_cirs, required_taps, simulate_pdr, synthesize_rx, ChannelModel, SequenceKind,
    TxSignalSpec,
};
use fingerloc::statfit::{fit_gamma, fit_vonmises};
use fingerloc::tracking::{particle_predict, particle_update, ParticleSet};
use fingerloc::{Error, SPEED_OF_LIGHT};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::common::{
    db_to_linear, group_by_location, noise_seed, seeded_channel, tag, tx_rotation,
};
use crate::config::{GridSpec, Pipeline};
use crate::data::{feature, Features, Measurements, Observation, Sample, TrialRow, TrialTable};
use crate::defaults::Params;
use crate::error::CliError;

pub const SNAPSHOT_METHODS: [&str; 3] = ["rssi", "rspd", "rssi_rspd"];
pub const TRACK_METHODS: [&str; 4] = ["rssi", "rspd", "rssi_rspd", "rssi_rspd_pdr"];

/// Snapshot ids of test transmissions start here, apart from training ids.
const TEST_SNAPSHOT_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WifiScenario {
    pub grid: GridSpec,
    pub sensors: Vec<Position>,
    pub array: UcaGeometry,
    pub center_freq: f64,
    pub bandwidth: f64,
    pub train_snapshots: usize,
    pub snr_db: f64,
    pub channel: ChannelModel,
    pub sequence_length: usize,
    pub steps: usize,
    /// Probability that the walker stays on its cell for a step.
    pub p_stay: f64,
    /// Dead-reckoning noise per axis and step, meters.
    pub pdr_sigma: f64,
}

impl Default for WifiScenario {
    fn default() -> Self {
        let f = 2.437e9;
        Self {
            grid: GridSpec {
                origin: Position::new(0.0, 0.0),
                nx: 10,
                ny: 10,
                spacing: 1.0,
            },
            sensors: vec![
                Position::new(-1.0, -1.0),
                Position::new(10.0, -1.0),
                Position::new(4.5, 10.0),
            ],
            array: UcaGeometry {
                element_count: 2,
                radius: SPEED_OF_LIGHT / f / 4.0,
            },
            center_freq: f,
            bandwidth: 20e6,
            train_snapshots: 30,
            snr_db: 10.0,
            channel: ChannelModel {
                path_count: 8,
                delay_spread: 30e-9,
                rician_k_db: 4.0,
                snapshot_phase_jitter: 1.6,
                ..ChannelModel::default()
            },
            sequence_length: 64,
            steps: 500,
            p_stay: 0.2,
            pdr_sigma: 0.2,
        }
    }
}

impl WifiScenario {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(format!("scenario: {m}")));
        self.grid.build()?;
        if self.sensors.is_empty() {
            return bad("at least one sensor is needed");
        }
        if self.array.element_count < 2 || !(self.array.radius > 0.0) {
            return bad("each sensor needs an array of at least two elements");
        }
        if !(self.center_freq > 0.0 && self.bandwidth > 0.0) {
            return bad("center_freq and bandwidth must be positive");
        }
        if self.train_snapshots < 2 {
            return bad("train_snapshots must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.p_stay) || !(self.pdr_sigma >= 0.0) {
            return bad("p_stay must be in [0, 1] and pdr_sigma non-negative");
        }
        if self.sequence_length == 0 {
            return bad("sequence_length must be positive");
        }
        self.channel.validate()?;
        Ok(())
    }

    pub fn rssi_keys(&self) -> Vec<String> {
        (0..self.sensors.len())
            .map(|m| format!("rssi:{m}"))
            .collect()
    }

    pub fn rspd_keys(&self) -> Vec<String> {
        (0..self.sensors.len())
            .map(|m| format!("rspd:{m}"))
            .collect()
    }
}

struct Sounder<'a> {
    sc: &'a WifiScenario,
    model: ChannelModel,
    taps: usize,
    seed: u64,
}

impl Sounder<'_> {
    /// RSSI and RSPD of every sensor for one transmission from `pos`.
    fn features(
        &self,
        pos: &Position,
        location: usize,
        snapshot: u64,
    ) -> Result<Features, CliError> {
        let sc = self.sc;
        let rot = tx_rotation(self.seed, location, snapshot);
        let spec = TxSignalSpec {
            sequence_kind: SequenceKind::RandomBits,
            length: sc.sequence_length,
            root: 0,
            pulse: vec![1.0],
            sample_rate: sc.bandwidth,
            bits_seed: SeedMixer::new(self.seed)
                .word(tag::BITS)
                .word(location as u64)
                .word(snapshot)
                .finish(),
            amplitude: 1.0,
        };
        let snr = db_to_linear(sc.snr_db);
        let mut out = Features::new();
        for (m, sensor) in sc.sensors.iter().enumerate() {
            let mut cirs = gen_array_cirs(
                pos,
                sensor,
                sc.center_freq,
                sc.bandwidth,
                &self.model,
                self.taps,
                &sc.array,
                Some(snapshot),
            )?;
            let power = cirs.iter().map(|c| c.power()).sum::<f64>() / cirs.len() as f64;
            let bufs: Vec<SignalBuffer> = cirs
                .iter_mut()
                .enumerate()
                .map(|(k, c)| {
                    c.taps.iter_mut().for_each(|t| *t *= rot);
                    let ant = m * sc.array.element_count + k;
                    synthesize_rx(
                        c,
                        &spec,
                        power / snr,
                        noise_seed(self.seed, location, snapshot, ant),
                    )
                })
                .collect::<Result<_, _>>()?;
            let meta = FingerprintMeta {
                sensor: m,
                pair: (0, 1),
                center_freq: sc.center_freq,
                bandwidth: sc.bandwidth,
            };
            out.insert(
                format!("rssi:{m}"),
                FingerprintVector::from_real(FingerprintKind::Rssi, &[rssi(&bufs[0])], meta)?,
            );
            out.insert(
                format!("rspd:{m}"),
                FingerprintVector::from_phases(
                    FingerprintKind::Rspd,
                    &[rspd(&bufs[0], &bufs[1])?],
                    meta,
                )?,
            );
        }
        Ok(out)
    }
}

/// Grid-constrained random walk: each step stays with probability
/// `p_stay`, otherwise moves to a uniformly chosen 4-neighbour cell.
pub fn random_walk(
    grid: &Grid,
    nx: usize,
    ny: usize,
    steps: usize,
    p_stay: f64,
    seed: u64,
) -> Vec<usize> {
    let mut rng = SeedMixer::new(seed).word(tag::WALK).rng();
    if steps == 0 {
        return Vec::new();
    }
    let mut cell = rng.random_range(0..grid.len());
    let mut out = vec![cell];
    for _ in 1..steps {
        if rng.random::<f64>() >= p_stay {
            let (ix, iy) = (cell % nx, cell / nx);
            let mut next = Vec::with_capacity(4);
            if ix > 0 {
                next.push(cell - 1);
            }
            if ix + 1 < nx {
                next.push(cell + 1);
            }
            if iy > 0 {
                next.push(cell - nx);
            }
            if iy + 1 < ny {
                next.push(cell + nx);
            }
            if !next.is_empty() {
                cell = next[rng.random_range(0..next.len())];
            }
        }
        out.push(cell);
    }
    out
}

pub fn simulate(sc: &WifiScenario, seed: u64) -> Result<Measurements, CliError> {
    let grid = sc.grid.build()?;
    let model = seeded_channel(&sc.channel, seed);
    let bounds = grid.bounds();
    let corners = [
        bounds.min,
        bounds.max,
        Position::new(bounds.min.x, bounds.max.y),
        Position::new(bounds.max.x, bounds.min.y),
    ];
    let far = sc
        .sensors
        .iter()
        .flat_map(|s| corners.iter().map(move |c| s.distance(c)))
        .fold(0.0, f64::max);
    let sounder = Sounder {
        sc,
        taps: required_taps(far + sc.array.radius, sc.bandwidth, &model),
        model,
        seed,
    };
    let mut train = Vec::with_capacity(grid.len() * sc.train_snapshots);
    for (i, p) in grid.points().iter().enumerate() {
        for s in 0..sc.train_snapshots as u64 {
            train.push(Sample {
                grid_index: i,
                snapshot: s,
                moving: None,
                features: sounder.features(p, i, s)?,
            });
        }
    }
    let walk = random_walk(&grid, sc.grid.nx, sc.grid.ny, sc.steps, sc.p_stay, seed);
    let path: Vec<Position> = walk.iter().map(|&i| grid.point(i)).collect();
    let pdr = simulate_pdr(
        &path,
        sc.pdr_sigma,
        SeedMixer::new(seed).word(tag::PDR).finish(),
    );
    let mut test = Vec::with_capacity(walk.len());
    for (t, &cell) in walk.iter().enumerate() {
        test.push(Observation {
            step: t,
            position: path[t],
            grid_index: Some(cell),
            moving: None,
            pdr: t.checked_sub(1).map(|k| pdr[k]),
            features: sounder.features(&path[t], cell, TEST_SNAPSHOT_BASE + t as u64)?,
        });
    }
    Ok(Measurements::new(Pipeline::WifiRssiRspd, grid, train, test))
}

/// Gamma models of RSSI and von Mises models of RSPD per grid point.
pub fn learn(sc: &WifiScenario, meas: &Measurements) -> Result<FingerprintDatabase, CliError> {
    meas.check(Pipeline::WifiRssiRspd)?;
    let groups = group_by_location(&meas.train, meas.grid.len(), None)?;
    let mut entries = Vec::with_capacity(groups.len());
    for group in &groups {
        let mut e = DbEntry {
            sample_count: group.len(),
            ..DbEntry::default()
        };
        let column = |key: &str| -> Result<Vec<f64>, CliError> {
            group
                .iter()
                .map(|s| feature(&s.features, key).map(|f| f.values()[0].re))
                .collect()
        };
        for key in sc.rssi_keys() {
            e.insert(key.clone(), LearnedModel::Gamma(fit_gamma(&column(&key)?)?));
        }
        for key in sc.rspd_keys() {
            e.insert(
                key.clone(),
                LearnedModel::VonMises(fit_vonmises(&column(&key)?)?),
            );
        }
        entries.push(e);
    }
    let meta = DbMeta {
        train_freqs: vec![sc.center_freq],
        train_bandwidths: vec![sc.bandwidth],
        derived: false,
    };
    Ok(FingerprintDatabase::new(meas.grid.clone(), meta, entries)?)
}

fn target(obs: &Observation, keys: &[String]) -> Result<Vec<(String, f64)>, CliError> {
    keys.iter()
        .map(|k| feature(&obs.features, k).map(|f| (k.clone(), f.values()[0].re)))
        .collect()
}

/// Likelihood maps of one observation: RSSI only, RSPD only, both.
fn maps(
    sc: &WifiScenario,
    obs: &Observation,
    db: &FingerprintDatabase,
) -> Result<[(usize, LikelihoodMap); 3], CliError> {
    let r = target(obs, &sc.rssi_keys())?;
    let p = target(obs, &sc.rspd_keys())?;
    let both: Vec<(String, f64)> = r.iter().chain(&p).cloned().collect();
    Ok([
        mle_rssi_rspd(&r, db)?,
        mle_rssi_rspd(&p, db)?,
        mle_rssi_rspd(&both, db)?,
    ])
}

/// Per-snapshot maximum-likelihood estimates of every test step.
pub fn localize(
    sc: &WifiScenario,
    meas: &Measurements,
    db: &FingerprintDatabase,
) -> Result<TrialTable, CliError> {
    meas.check(Pipeline::WifiRssiRspd)?;
    let mut table = TrialTable::new("t", &SNAPSHOT_METHODS, None);
    for obs in &meas.test {
        let m = maps(sc, obs, db)?;
        table.rows.push(TrialRow {
            id: obs.step,
            truth: obs.position,
            estimates: m.iter().map(|(i, _)| db.grid().point(*i)).collect(),
            note: None,
        });
    }
    Ok(table)
}

/// Snapshot estimates plus the particle filter fusing RSSI, RSPD and
/// dead reckoning.
pub fn track(
    sc: &WifiScenario,
    meas: &Measurements,
    db: &FingerprintDatabase,
    params: &Params,
    seed: u64,
) -> Result<TrialTable, CliError> {
    meas.check(Pipeline::WifiRssiRspd)?;
    let grid = db.grid();
    let pf_seed = SeedMixer::new(seed).word(tag::PARTICLES);
    let mut ps = ParticleSet::uniform_over(grid, params.particles, pf_seed.finish())?;
    let mut table = TrialTable::new("t", &TRACK_METHODS, None);
    for obs in &meas.test {
        let step_seed = pf_seed.word(obs.step as u64);
        if let Some(d) = obs.pdr {
            ps = particle_predict(&ps, d, params.pf_sigma, step_seed.word(0).finish());
        }
        let m = maps(sc, obs, db)?;
        let (next, est) = match particle_update(
            &ps,
            &m[2].1,
            params.point_estimate,
            step_seed.word(1).finish(),
        ) {
            Ok(v) => v,
            Err(Error::DegenerateUpdate { .. }) => {
                log::warn!(
                    "step {}: particle weights collapsed, re-spreading",
                    obs.step
                );
                let fresh =
                    ParticleSet::uniform_over(grid, params.particles, step_seed.word(2).finish())?;
                particle_update(
                    &fresh,
                    &m[2].1,
                    params.point_estimate,
                    step_seed.word(3).finish(),
                )?
            }
            Err(e) => return Err(e.into()),
        };
        ps = next;
        let mut estimates: Vec<Position> = m.iter().map(|(i, _)| grid.point(*i)).collect();
        estimates.push(est);
        table.rows.push(TrialRow {
            id: obs.step,
            truth: obs.position,
            estimates,
            note: None,
        });
    }
    Ok(table)
}
