//! Classroom study: a known training sequence is sounded from every seat,
//! each receive antenna estimates its CIR, and pairwise CIR
//! cross-correlations are matched against per-seat complex Gaussian models.
//! Mean-RSSI nearest-neighbour matching is the baseline.

use fingerloc::database::{DbEntry, DbMeta, FingerprintDatabase, LearnedModel};
use fingerloc::fingerprint::{FingerprintKind, FingerprintMeta, FingerprintVector};
use fingerloc::fingerprints::{all_pairs, cir_xcorr_fingerprint, estimate_cir, rssi};
use fingerloc::geom::Position;
use fingerloc::matching::GaussianBank;
use fingerloc::simkit::{
    gen_cir_snapshot, required_taps, ChannelModel, SequenceKind, TxSignalSpec,
};
use fingerloc::statfit::fit_gaussian;
use fingerloc::{euclidean_match, Complex64};
use serde::{Deserialize, Serialize};

use crate::common::{
    db_to_linear, group_by_location, noise_seed, seeded_channel, snapshot_ids, tx_rotation,
};
use crate::config::{GridSpec, Pipeline};
use crate::data::{feature, Features, Measurements, Sample, TrialRow, TrialTable};
use crate::defaults::Params;
use crate::error::CliError;

pub const RSSI_KEY: &str = "rssi";
pub const METHODS: [&str; 2] = ["cir_mle", "rssi_euclidean"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassroomScenario {
    pub grid: GridSpec,
    /// Antenna positions of each sensor.
    pub sensors: Vec<Vec<Position>>,
    pub center_freq: f64,
    pub bandwidth: f64,
    /// CIR length; derived from the geometry when absent.
    pub taps: Option<usize>,
    pub snapshots: usize,
    /// Per-antenna signal-to-noise ratio of each snapshot.
    pub snr_db: f64,
    pub channel: ChannelModel,
    pub zc_length: usize,
    pub zc_root: u64,
}

impl Default for ClassroomScenario {
    fn default() -> Self {
        let spacing = 0.78;
        let far = 11.0 * spacing + 0.6;
        let c = 5.5 * spacing;
        let r = 0.2;
        let centre = (0..3)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                Position::new(c + r * a.cos(), c + r * a.sin())
            })
            .collect();
        Self {
            grid: GridSpec {
                origin: Position::new(0.0, 0.0),
                nx: 12,
                ny: 12,
                spacing,
            },
            sensors: vec![
                vec![Position::new(-0.6, -0.6)],
                vec![Position::new(far, -0.6)],
                vec![Position::new(-0.6, far)],
                vec![Position::new(far, far)],
                centre,
            ],
            center_freq: 1.9575e9,
            bandwidth: 3.6e6,
            taps: None,
            snapshots: 20,
            snr_db: 20.0,
            channel: ChannelModel {
                path_count: 8,
                delay_spread: 40e-9,
                rician_k_db: 3.0,
                snapshot_phase_jitter: 1.0,
                ..ChannelModel::default()
            },
            zc_length: 139,
            zc_root: 25,
        }
    }
}

impl ClassroomScenario {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(format!("scenario: {m}")));
        self.grid.build()?;
        if self.antennas().len() < 2 {
            return bad("at least two receive antennas are needed");
        }
        if !(self.center_freq > 0.0 && self.bandwidth > 0.0) {
            return bad("center_freq and bandwidth must be positive");
        }
        if self.snapshots == 0 {
            return bad("snapshots must be at least 1");
        }
        if self.taps == Some(0) {
            return bad("taps must be at least 1");
        }
        self.channel.validate()?;
        self.tx_spec().validate()?;
        Ok(())
    }

    pub fn antennas(&self) -> Vec<Position> {
        self.sensors.iter().flatten().copied().collect()
    }

    pub fn pair_keys(&self) -> Vec<String> {
        all_pairs(self.antennas().len())
            .iter()
            .map(|(a, b)| format!("cir:{a}-{b}"))
            .collect()
    }

    fn tx_spec(&self) -> TxSignalSpec {
        TxSignalSpec {
            sequence_kind: SequenceKind::ZadoffChu,
            length: self.zc_length,
            root: self.zc_root,
            pulse: vec![1.0],
            sample_rate: self.bandwidth,
            bits_seed: 0,
            amplitude: 1.0,
        }
    }
}

/// Sounds every seat `snapshots` times.
pub fn simulate(sc: &ClassroomScenario, seed: u64) -> Result<Measurements, CliError> {
    let grid = sc.grid.build()?;
    let ants = sc.antennas();
    let model = seeded_channel(&sc.channel, seed);
    let taps = sc.taps.unwrap_or_else(|| {
        grid.points()
            .iter()
            .flat_map(|p| ants.iter().map(move |a| p.distance(a)))
            .map(|d| required_taps(d, sc.bandwidth, &model))
            .max()
            .unwrap_or(1)
    });
    let spec = sc.tx_spec();
    let replica = spec.sequence()?;
    let pairs = all_pairs(ants.len());
    let snr = db_to_linear(sc.snr_db);
    let meta = FingerprintMeta {
        center_freq: sc.center_freq,
        bandwidth: sc.bandwidth,
        ..FingerprintMeta::default()
    };

    let mut train = Vec::with_capacity(grid.len() * sc.snapshots);
    for (i, seat) in grid.points().iter().enumerate() {
        for s in 0..sc.snapshots as u64 {
            let rot = tx_rotation(seed, i, s);
            let mut est = Vec::with_capacity(ants.len());
            let mut levels = Vec::with_capacity(ants.len());
            for (a, ant) in ants.iter().enumerate() {
                let mut cir =
                    gen_cir_snapshot(seat, ant, sc.center_freq, sc.bandwidth, &model, taps, s)?;
                cir.taps.iter_mut().for_each(|t| *t *= rot);
                let buf = fingerloc::simkit::synthesize_rx(
                    &cir,
                    &spec,
                    cir.power() / snr,
                    noise_seed(seed, i, s, a),
                )?;
                levels.push(10.0 * rssi(&buf).log10());
                est.push(estimate_cir(&buf, &replica, taps)?);
            }
            let mut features = Features::new();
            for (&(a, b), key) in pairs.iter().zip(sc.pair_keys()) {
                let fp = cir_xcorr_fingerprint(&est[a], &est[b])?.with_meta(FingerprintMeta {
                    pair: (a, b),
                    ..meta
                });
                features.insert(key, fp);
            }
            features.insert(
                RSSI_KEY.to_string(),
                FingerprintVector::from_real(FingerprintKind::Rssi, &levels, meta)?,
            );
            train.push(Sample {
                grid_index: i,
                snapshot: s,
                moving: None,
                features,
            });
        }
    }
    Ok(Measurements::new(
        Pipeline::ClassroomCir,
        grid,
        train,
        Vec::new(),
    ))
}

/// Per-seat Gaussian models of every antenna pair plus the mean RSSI
/// vector (dB), optionally leaving out one snapshot.
pub fn learn(
    sc: &ClassroomScenario,
    meas: &Measurements,
    params: &Params,
    exclude: Option<u64>,
) -> Result<FingerprintDatabase, CliError> {
    meas.check(Pipeline::ClassroomCir)?;
    let groups = group_by_location(&meas.train, meas.grid.len(), exclude)?;
    let keys = sc.pair_keys();
    let mut entries = Vec::with_capacity(groups.len());
    for group in &groups {
        let mut e = DbEntry {
            sample_count: group.len(),
            ..DbEntry::default()
        };
        for key in &keys {
            let vals: Vec<Vec<Complex64>> = group
                .iter()
                .map(|s| feature(&s.features, key).map(|f| f.values().to_vec()))
                .collect::<Result<_, _>>()?;
            e.insert(
                key.clone(),
                LearnedModel::Gaussian(fit_gaussian(&vals, params.loading_eps)?),
            );
        }
        let first = feature(&group[0].features, RSSI_KEY)?;
        let mut mean = vec![0.0; first.dim()];
        for s in group {
            for (m, v) in mean
                .iter_mut()
                .zip(feature(&s.features, RSSI_KEY)?.real_values())
            {
                *m += v / group.len() as f64;
            }
        }
        e.insert(
            RSSI_KEY,
            LearnedModel::Raw(FingerprintVector::from_real(
                FingerprintKind::Rssi,
                &mean,
                *first.meta(),
            )?),
        );
        entries.push(e);
    }
    let meta = DbMeta {
        train_freqs: vec![sc.center_freq],
        train_bandwidths: vec![sc.bandwidth],
        derived: false,
    };
    Ok(FingerprintDatabase::new(meas.grid.clone(), meta, entries)?)
}

/// Leave-one-snapshot-out evaluation: fold `k` trains on every snapshot
/// but `k` and localizes every seat's snapshot `k`.
pub fn localize(
    sc: &ClassroomScenario,
    meas: &Measurements,
    params: &Params,
) -> Result<TrialTable, CliError> {
    meas.check(Pipeline::ClassroomCir)?;
    let folds = snapshot_ids(&meas.train);
    if folds.len() < 2 {
        return Err(CliError::Config(
            "leave-one-out needs at least two snapshots per seat".into(),
        ));
    }
    let keys = sc.pair_keys();
    let mut table = TrialTable::new("trial", &METHODS, None);
    for &fold in &folds {
        let db = learn(sc, meas, params, Some(fold))?;
        let bank = GaussianBank::from_db(&db, &keys)?;
        for s in meas.train.iter().filter(|s| s.snapshot == fold) {
            let target: Vec<(String, FingerprintVector)> = keys
                .iter()
                .map(|k| feature(&s.features, k).map(|f| (k.clone(), f.clone())))
                .collect::<Result<_, _>>()?;
            let (cir_idx, _) = bank.evaluate(&target)?;
            let rssi_idx = euclidean_match(feature(&s.features, RSSI_KEY)?, &db)?;
            table.rows.push(TrialRow {
                id: table.rows.len(),
                truth: meas.grid.point(s.grid_index),
                estimates: vec![meas.grid.point(cir_idx), meas.grid.point(rssi_idx)],
                note: None,
            });
        }
    }
    Ok(table)
}
