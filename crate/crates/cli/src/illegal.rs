//! Illegal-radio study: sensors with small circular arrays capture an
//! unknown emitter. Raw cross-correlations between sensors and
//! inter-element phase differences are matched against a radio map learned
//! at other frequencies and bandwidths, then interpolated to the emitter's
//! band and densified in space.

use fingerloc::database::{DbEntry, DbMeta, FingerprintDatabase, LearnedModel};
use fingerloc::fingerprint::{FingerprintMeta, FingerprintVector};
use fingerloc::fingerprints::{
    all_pairs, phasediff_fingerprint, rx_xcorr_fingerprint, SignalBuffer,
};
use fingerloc::geom::{Grid, Position};
use fingerloc::interp::{
    bandwidth_interp, freq_interp_xcorr, normalize_power, phasediff_freq_interp, spatial_densify,
    windowed_sinc_lowpass, EmitterSpec, UcaGeometry, LOWPASS_TAPS,
};
use fingerloc::matching::{
    argmin, hybrid_match, sqerr_map, HybridConfig, LikelihoodMap, XcorrResidual,
};
use fingerloc::rng::SeedMixer;
use fingerloc::simkit::{
    gen_array_cirs, required_taps, synthesize_rx, ChannelModel, SequenceKind, TxSignalSpec,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::common::{db_to_linear, noise_seed, seeded_channel, tag};
use crate::config::{GridSpec, Pipeline};
use crate::data::{feature, Features, Measurements, Observation, Sample, TrialRow, TrialTable};
use crate::defaults::Params;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IllegalScenario {
    /// Training grid.
    pub grid: GridSpec,
    /// Spacing of the densified radio map.
    pub dense_spacing: f64,
    /// Array centres.
    pub sensors: Vec<Position>,
    pub array: UcaGeometry,
    pub train_freqs: Vec<f64>,
    pub train_bandwidth: f64,
    /// Receiver sample rate, shared by training and target captures.
    pub sample_rate: f64,
    pub emitter: EmitterSpec,
    /// Emitter amplitude relative to the training transmitter.
    pub tx_amplitude: f64,
    pub channel: ChannelModel,
    pub bits: usize,
    pub max_lag: usize,
    pub trials: usize,
    /// Per-element SNR; noise-free when absent.
    pub snr_db: Option<f64>,
}

impl Default for IllegalScenario {
    fn default() -> Self {
        Self {
            grid: GridSpec {
                origin: Position::new(0.0, 0.0),
                nx: 11,
                ny: 11,
                spacing: 10.0,
            },
            dense_spacing: 5.0,
            sensors: vec![
                Position::new(-20.0, -20.0),
                Position::new(120.0, -10.0),
                Position::new(50.0, 125.0),
            ],
            array: UcaGeometry {
                element_count: 3,
                radius: 0.03,
            },
            train_freqs: vec![0.8e9, 1.5e9, 2.5e9],
            train_bandwidth: 10e6,
            sample_rate: 10e6,
            emitter: EmitterSpec {
                center_freq: 1.2e9,
                bandwidth: 5e6,
            },
            tx_amplitude: 1.0,
            channel: ChannelModel {
                path_count: 6,
                delay_spread: 100e-9,
                pathloss_exponent: 2.5,
                rician_k_db: 9.0,
                freq_exponent: 2.0,
                snapshot_phase_jitter: 0.0,
                ..ChannelModel::default()
            },
            bits: 256,
            max_lag: 10,
            trials: 200,
            snr_db: None,
        }
    }
}

impl IllegalScenario {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(format!("scenario: {m}")));
        self.grid.build()?;
        self.dense_grid()?;
        if self.sensors.is_empty() {
            return bad("at least one sensor is needed");
        }
        UcaGeometry::new(self.array.element_count, self.array.radius)?;
        if self.train_freqs.len() < 2 || self.train_freqs.iter().any(|f| !(*f > 0.0)) {
            return bad("at least two positive training frequencies are needed");
        }
        if !(self.train_bandwidth > 0.0 && self.sample_rate > 0.0) {
            return bad("train_bandwidth and sample_rate must be positive");
        }
        if !(self.emitter.center_freq > 0.0 && self.emitter.bandwidth > 0.0) {
            return bad("emitter frequency and bandwidth must be positive");
        }
        if self.emitter.bandwidth > self.train_bandwidth || self.train_bandwidth > self.sample_rate
        {
            return bad("need emitter bandwidth <= train_bandwidth <= sample_rate");
        }
        if !(self.tx_amplitude > 0.0) {
            return bad("tx_amplitude must be positive");
        }
        if self.bits == 0 {
            return bad("bits must be at least 1");
        }
        self.channel.validate()?;
        Ok(())
    }

    pub fn dense_grid(&self) -> Result<Grid, CliError> {
        let span_x = (self.grid.nx - 1) as f64 * self.grid.spacing;
        let span_y = (self.grid.ny - 1) as f64 * self.grid.spacing;
        if !(self.dense_spacing > 0.0) {
            return Err(CliError::Config(
                "scenario: dense_spacing must be positive".into(),
            ));
        }
        let nx = (span_x / self.dense_spacing).round() as usize + 1;
        let ny = (span_y / self.dense_spacing).round() as usize + 1;
        GridSpec {
            origin: self.grid.origin,
            nx,
            ny,
            spacing: self.dense_spacing,
        }
        .build()
    }

    /// Sensor pairs `(m, n)` with `m <= n`; diagonal pairs are
    /// autocorrelations.
    pub fn sensor_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.sensors.len();
        (0..n).flat_map(|m| (m..n).map(move |k| (m, k))).collect()
    }

    pub fn xcorr_keys(&self) -> Vec<String> {
        self.sensor_pairs()
            .iter()
            .map(|(m, n)| format!("xc:{m}-{n}"))
            .collect()
    }

    pub fn phase_keys(&self) -> Vec<String> {
        (0..self.sensors.len()).map(|m| format!("pd:{m}")).collect()
    }

    pub fn element_pairs(&self) -> Vec<(usize, usize)> {
        all_pairs(self.array.element_count)
    }

    /// Method names in result-table order.
    pub fn methods(&self, params: &Params) -> Vec<String> {
        let mut m = vec!["xcorr".to_string(), "phasediff".to_string()];
        m.extend(params.gamma_sweep.iter().map(|g| format!("hybrid_{g}")));
        m
    }

    fn taps(&self) -> usize {
        let b = self.grid.build().map(|g| g.bounds());
        let corners = match b {
            Ok(b) => vec![
                b.min,
                b.max,
                Position::new(b.min.x, b.max.y),
                Position::new(b.max.x, b.min.y),
            ],
            Err(_) => Vec::new(),
        };
        corners
            .iter()
            .flat_map(|c| {
                self.sensors
                    .iter()
                    .map(move |s| c.distance(s) + self.array.radius)
            })
            .map(|d| required_taps(d, self.sample_rate, &self.channel))
            .max()
            .unwrap_or(1)
    }
}

/// Carrier, band and waveform of one capture.
struct Capture {
    freq: f64,
    bandwidth: f64,
    spec: TxSignalSpec,
}

fn capture(
    sc: &IllegalScenario,
    model: &ChannelModel,
    tx: &Position,
    cap: &Capture,
    noise: SeedMixer,
) -> Result<Features, CliError> {
    let taps = sc.taps();
    let snr = sc.snr_db.map(db_to_linear);
    let mut bufs: Vec<Vec<SignalBuffer>> = Vec::with_capacity(sc.sensors.len());
    for (m, centre) in sc.sensors.iter().enumerate() {
        let cirs = gen_array_cirs(
            tx,
            centre,
            cap.freq,
            sc.sample_rate,
            model,
            taps,
            &sc.array,
            None,
        )?;
        let mut elems = Vec::with_capacity(cirs.len());
        for (k, cir) in cirs.iter().enumerate() {
            let p = match snr {
                Some(s) => cir.power() * cap.spec.amplitude.powi(2) / s,
                None => 0.0,
            };
            elems.push(synthesize_rx(
                cir,
                &cap.spec,
                p,
                noise.word(m as u64).word(k as u64).finish(),
            )?);
        }
        bufs.push(elems);
    }
    let meta = |sensor: usize, pair: (usize, usize)| FingerprintMeta {
        sensor,
        pair,
        center_freq: cap.freq,
        bandwidth: cap.bandwidth,
    };
    let mut out = Features::new();
    for ((m, n), key) in sc.sensor_pairs().into_iter().zip(sc.xcorr_keys()) {
        let fp =
            rx_xcorr_fingerprint(&bufs[m][0], &bufs[n][0], sc.max_lag)?.with_meta(meta(m, (m, n)));
        out.insert(key, fp);
    }
    let pairs = sc.element_pairs();
    for (m, key) in sc.phase_keys().into_iter().enumerate() {
        out.insert(
            key,
            phasediff_fingerprint(&bufs[m], &pairs)?.with_meta(meta(m, (m, m))),
        );
    }
    Ok(out)
}

fn bits_spec(
    sc: &IllegalScenario,
    pulse: Vec<f64>,
    amplitude: f64,
    bits_seed: u64,
) -> TxSignalSpec {
    TxSignalSpec {
        sequence_kind: SequenceKind::RandomBits,
        length: sc.bits,
        root: 0,
        pulse,
        sample_rate: sc.sample_rate,
        bits_seed,
        amplitude,
    }
}

/// The target pulse: a low-pass at the emitter bandwidth, or a single tap
/// when it fills the sampled band.
pub fn emitter_pulse(sc: &IllegalScenario) -> Vec<f64> {
    if sc.emitter.bandwidth >= sc.sample_rate {
        vec![1.0]
    } else {
        windowed_sinc_lowpass(sc.emitter.bandwidth / sc.sample_rate, LOWPASS_TAPS)
    }
}

fn train_pulse(sc: &IllegalScenario) -> Vec<f64> {
    if sc.train_bandwidth >= sc.sample_rate {
        vec![1.0]
    } else {
        windowed_sinc_lowpass(sc.train_bandwidth / sc.sample_rate, LOWPASS_TAPS)
    }
}

/// Captures of the target emitter from `positions`.
pub fn observe(
    sc: &IllegalScenario,
    seed: u64,
    positions: &[Position],
) -> Result<Vec<Observation>, CliError> {
    let model = seeded_channel(&sc.channel, seed);
    positions
        .iter()
        .enumerate()
        .map(|(t, p)| {
            let bits_seed = SeedMixer::new(seed)
                .word(tag::BITS)
                .word(1)
                .word(t as u64)
                .finish();
            let cap = Capture {
                freq: sc.emitter.center_freq,
                bandwidth: sc.emitter.bandwidth,
                spec: bits_spec(sc, emitter_pulse(sc), sc.tx_amplitude, bits_seed),
            };
            let noise = SeedMixer::new(seed).word(tag::NOISE).word(1).word(t as u64);
            Ok(Observation {
                step: t,
                position: *p,
                grid_index: None,
                moving: None,
                pdr: None,
                features: capture(sc, &model, p, &cap, noise)?,
            })
        })
        .collect()
}

/// Emitter positions drawn uniformly over the training area.
pub fn trial_positions(sc: &IllegalScenario, seed: u64) -> Result<Vec<Position>, CliError> {
    let b = sc.grid.build()?.bounds();
    let mut rng = SeedMixer::new(seed).word(tag::TRIALS).rng();
    Ok((0..sc.trials)
        .map(|_| {
            let x = b.min.x + rng.random::<f64>() * (b.max.x - b.min.x);
            let y = b.min.y + rng.random::<f64>() * (b.max.y - b.min.y);
            Position::new(x, y)
        })
        .collect())
}

/// Training captures at every grid point and training frequency (the
/// snapshot id is the frequency index) plus `trials` target captures.
pub fn simulate(sc: &IllegalScenario, seed: u64) -> Result<Measurements, CliError> {
    let grid = sc.grid.build()?;
    let model = seeded_channel(&sc.channel, seed);
    let mut train = Vec::with_capacity(grid.len() * sc.train_freqs.len());
    for (i, p) in grid.points().iter().enumerate() {
        for (fi, &freq) in sc.train_freqs.iter().enumerate() {
            let bits_seed = SeedMixer::new(seed)
                .word(tag::BITS)
                .word(0)
                .word(i as u64)
                .word(fi as u64)
                .finish();
            let cap = Capture {
                freq,
                bandwidth: sc.train_bandwidth,
                spec: bits_spec(sc, train_pulse(sc), 1.0, bits_seed),
            };
            let noise = SeedMixer::new(noise_seed(seed, i, fi as u64, 0));
            train.push(Sample {
                grid_index: i,
                snapshot: fi as u64,
                moving: None,
                features: capture(sc, &model, p, &cap, noise)?,
            });
        }
    }
    let test = observe(sc, seed, &trial_positions(sc, seed)?)?;
    Ok(Measurements::new(
        Pipeline::IllegalHybrid,
        grid,
        train,
        test,
    ))
}

/// Xcorr fingerprints of one capture, power-normalized across sensors.
fn normalized_xcorr(
    sc: &IllegalScenario,
    f: &Features,
) -> Result<Vec<FingerprintVector>, CliError> {
    let raw: Vec<FingerprintVector> = sc
        .xcorr_keys()
        .iter()
        .map(|k| feature(f, k).cloned())
        .collect::<Result<_, _>>()?;
    Ok(normalize_power(&raw)?)
}

/// Radio map at the emitter's band: training cross-correlations are
/// narrowed to the emitter bandwidth, power-normalized, regressed to the
/// emitter frequency; phase differences are re-projected from the nearest
/// training frequency. The result is densified to `dense_spacing`.
pub fn learn(sc: &IllegalScenario, meas: &Measurements) -> Result<FingerprintDatabase, CliError> {
    meas.check(Pipeline::IllegalHybrid)?;
    let n = meas.grid.len();
    let mut by_point: Vec<Vec<&Sample>> = vec![Vec::new(); n];
    for s in &meas.train {
        by_point[s.grid_index].push(s);
    }
    let xkeys = sc.xcorr_keys();
    let pkeys = sc.phase_keys();
    let pairs = sc.element_pairs();
    let target = sc.emitter;
    let mut entries = Vec::with_capacity(n);
    for (i, samples) in by_point.iter_mut().enumerate() {
        samples.sort_by_key(|s| s.snapshot);
        if samples.len() < 2 {
            return Err(CliError::Config(format!(
                "grid index {i} needs captures at two or more training frequencies"
            )));
        }
        let mut per_freq: Vec<Vec<FingerprintVector>> = Vec::with_capacity(samples.len());
        for s in samples.iter() {
            let narrowed: Vec<FingerprintVector> = xkeys
                .iter()
                .map(|k| {
                    let f = feature(&s.features, k)?;
                    Ok(bandwidth_interp(f, f.meta().bandwidth, target.bandwidth)?)
                })
                .collect::<Result<_, CliError>>()?;
            per_freq.push(normalize_power(&narrowed)?);
        }
        let mut e = DbEntry {
            sample_count: samples.len(),
            ..DbEntry::default()
        };
        for (j, key) in xkeys.iter().enumerate() {
            let column: Vec<FingerprintVector> = per_freq.iter().map(|v| v[j].clone()).collect();
            e.insert(
                key.clone(),
                LearnedModel::Raw(freq_interp_xcorr(&column, target.center_freq)?),
            );
        }
        let nearest = samples
            .iter()
            .min_by(|a, b| {
                let d = |s: &Sample| {
                    let f = s
                        .features
                        .values()
                        .next()
                        .map_or(0.0, |f| f.meta().center_freq);
                    (f.ln() - target.center_freq.ln()).abs()
                };
                d(a).total_cmp(&d(b))
            })
            .expect("at least two samples");
        for key in &pkeys {
            let f = feature(&nearest.features, key)?;
            let proj = phasediff_freq_interp(
                f,
                &sc.array,
                &pairs,
                f.meta().center_freq,
                target.center_freq,
            )?;
            e.insert(key.clone(), LearnedModel::Raw(proj.fingerprint));
            e.confidence.insert(key.clone(), proj.confidence);
        }
        entries.push(e);
    }
    let meta = DbMeta {
        train_freqs: sc.train_freqs.clone(),
        train_bandwidths: vec![sc.train_bandwidth],
        derived: false,
    };
    let db = FingerprintDatabase::new(meas.grid.clone(), meta, entries)?;
    let dense = spatial_densify(&db, &sc.dense_grid()?)?;
    if !dense.extrapolated.is_empty() {
        log::warn!("{} radio-map points extrapolated", dense.extrapolated.len());
    }
    Ok(dense.db)
}

/// Error maps of one capture against the radio map.
pub struct ErrorMaps {
    pub xcorr: LikelihoodMap,
    pub phase: LikelihoodMap,
}

pub fn error_maps(
    sc: &IllegalScenario,
    db: &FingerprintDatabase,
    f: &Features,
    residual: XcorrResidual,
) -> Result<ErrorMaps, CliError> {
    let xc: Vec<(String, FingerprintVector)> = sc
        .xcorr_keys()
        .into_iter()
        .zip(normalized_xcorr(sc, f)?)
        .collect();
    let pd: Vec<(String, FingerprintVector)> = sc
        .phase_keys()
        .into_iter()
        .map(|k| feature(f, &k).map(|v| (k.clone(), v.clone())))
        .collect::<Result<_, _>>()?;
    Ok(ErrorMaps {
        xcorr: sqerr_map(&xc, db, residual, true)?,
        phase: sqerr_map(&pd, db, XcorrResidual::Complex, true)?,
    })
}

/// Estimated grid index of every method, in [`IllegalScenario::methods`]
/// order.
pub fn estimate(
    sc: &IllegalScenario,
    db: &FingerprintDatabase,
    f: &Features,
    params: &Params,
) -> Result<Vec<usize>, CliError> {
    let maps = error_maps(sc, db, f, params.xcorr_residual)?;
    let mut out = vec![argmin(maps.xcorr.values()), argmin(maps.phase.values())];
    for &gamma in &params.gamma_sweep {
        let cfg = HybridConfig {
            gamma,
            include_zero_lag: true,
            residual: params.xcorr_residual,
        };
        out.push(hybrid_match(&maps.xcorr, &maps.phase, &cfg)?.0);
    }
    Ok(out)
}

pub fn localize(
    sc: &IllegalScenario,
    meas: &Measurements,
    db: &FingerprintDatabase,
    params: &Params,
) -> Result<TrialTable, CliError> {
    meas.check(Pipeline::IllegalHybrid)?;
    let names = sc.methods(params);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut table = TrialTable::new("trial", &refs, None);
    for obs in &meas.test {
        let idx = estimate(sc, db, &obs.features, params)?;
        table.rows.push(TrialRow {
            id: obs.step,
            truth: obs.position,
            estimates: idx.iter().map(|&i| db.grid().point(i)).collect(),
            note: None,
        });
    }
    Ok(table)
}
