//! Synthetic measurement generation: multipath channels, received
//! signals, binary presence sensors and pedestrian dead-reckoning streams.
//!
//! The channel is a Rician line-of-sight path plus `path_count - 1`
//! diffuse paths with an exponential power-delay profile. Path delays,
//! arrival angles and powers depend only on the link geometry; path phases
//! additionally depend on the carrier frequency. Snapshots perturb the
//! diffuse-path phases with a per-snapshot sub-seed, mimicking the small
//! position changes of a transmitter that is nominally at one location.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fingerprints::{Cir, SignalBuffer};
use crate::geom::{Grid, Position};
use crate::interp::{uca_steering, UcaGeometry};
use crate::rng::{complex_normal, normal, SeedMixer};
use crate::SPEED_OF_LIGHT;

/// Diffuse-path excess delays are truncated at this many delay spreads.
pub const DELAY_TRUNCATION: f64 = 5.0;
/// Distances below this are treated as this (avoids the pathloss pole).
pub const MIN_DISTANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelModel {
    /// Total number of paths including line-of-sight.
    pub path_count: usize,
    /// Mean excess delay of the diffuse paths, seconds.
    pub delay_spread: f64,
    pub pathloss_exponent: f64,
    /// Loss at 1 m and `reference_freq`, dB.
    pub reference_loss_db: f64,
    /// Line-of-sight to diffuse power ratio, dB. `+inf` (JSON `null`) is
    /// pure line-of-sight.
    #[serde(
        serialize_with = "ser_inf_as_null",
        deserialize_with = "de_null_as_inf"
    )]
    pub rician_k_db: f64,
    pub seed: u64,
    /// Power falls as `(f / reference_freq)^-freq_exponent`.
    #[serde(default)]
    pub freq_exponent: f64,
    #[serde(default = "default_reference_freq")]
    pub reference_freq: f64,
    /// Standard deviation of the per-snapshot diffuse-phase perturbation,
    /// radians.
    #[serde(default)]
    pub snapshot_phase_jitter: f64,
}

fn default_reference_freq() -> f64 {
    1e9
}

fn ser_inf_as_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_none()
    } else {
        s.serialize_some(v)
    }
}

fn de_null_as_inf<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            path_count: 6,
            delay_spread: 50e-9,
            pathloss_exponent: 2.0,
            reference_loss_db: 40.0,
            rician_k_db: 6.0,
            seed: 1,
            freq_exponent: 0.0,
            reference_freq: default_reference_freq(),
            snapshot_phase_jitter: 0.5,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        if self.path_count == 0 {
            return Err(Error::arg("channel needs at least one path"));
        }
        if !(self.delay_spread >= 0.0) {
            return Err(Error::arg("delay spread must be non-negative"));
        }
        if !(self.pathloss_exponent >= 0.0) {
            return Err(Error::arg("pathloss exponent must be non-negative"));
        }
        if self.rician_k_db.is_nan() || !(self.reference_freq > 0.0) {
            return Err(Error::arg("invalid Rician K or reference frequency"));
        }
        Ok(())
    }

    /// Closed-form mean received power (linear) at `distance` and `freq`.
    pub fn path_gain(&self, distance: f64, freq: f64) -> f64 {
        let d = distance.max(MIN_DISTANCE);
        10f64.powf(-self.reference_loss_db / 10.0)
            * d.powf(-self.pathloss_exponent)
            * (freq / self.reference_freq).powf(-self.freq_exponent)
    }
}

/// One propagation path as seen at the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    /// Absolute delay, seconds.
    pub delay: f64,
    pub gain: Complex64,
    /// Arrival angle at the receiver, radians.
    pub aoa: f64,
}

fn link_mixer(model: &ChannelModel, tx: &Position, rx: &Position) -> SeedMixer {
    SeedMixer::new(model.seed)
        .float(tx.x)
        .float(tx.y)
        .float(rx.x)
        .float(rx.y)
}

/// Propagation paths for one snapshot. `snapshot = None` is the
/// unperturbed channel.
pub fn multipath(
    tx: &Position,
    rx: &Position,
    freq: f64,
    model: &ChannelModel,
    snapshot: Option<u64>,
) -> Result<Vec<Path>> {
    model.validate()?;
    if !(freq > 0.0) {
        return Err(Error::arg("carrier frequency must be positive"));
    }
    let dist = tx.distance(rx).max(MIN_DISTANCE);
    let power = model.path_gain(dist, freq);
    let (los_power, nlos_power) = if model.rician_k_db.is_infinite() && model.rician_k_db > 0.0 {
        (power, 0.0)
    } else {
        let k = 10f64.powf(model.rician_k_db / 10.0);
        (power * k / (k + 1.0), power / (k + 1.0))
    };
    let tof = dist / SPEED_OF_LIGHT;
    let mut paths = vec![Path {
        delay: tof,
        gain: Complex64::from_polar(los_power.sqrt(), -2.0 * PI * freq * tof),
        aoa: rx.bearing_to(tx),
    }];
    let diffuse = model.path_count - 1;
    if diffuse == 0 || nlos_power == 0.0 {
        return Ok(paths);
    }

    let link = link_mixer(model, tx, rx);
    let mut geo = link.word(0x6e6f_6e6c_6f73).rng();
    let mut phases = link.word(0x70_6861_7365).float(freq).rng();
    let mut jitter = snapshot.map(|s| link.word(0x736e_6170).float(freq).word(s).rng());

    let mut raw = Vec::with_capacity(diffuse);
    for _ in 0..diffuse {
        let excess = if model.delay_spread > 0.0 {
            // truncated exponential by inversion
            let cap = 1.0 - (-DELAY_TRUNCATION).exp();
            let u: f64 = geo.random::<f64>() * cap;
            -model.delay_spread * (1.0 - u).ln()
        } else {
            0.0
        };
        let aoa = geo.random::<f64>() * 2.0 * PI - PI;
        let weight = if model.delay_spread > 0.0 {
            (-excess / model.delay_spread).exp()
        } else {
            1.0
        };
        let mut phase = phases.random::<f64>() * 2.0 * PI;
        if let Some(j) = jitter.as_mut() {
            phase += normal(j, model.snapshot_phase_jitter);
        }
        raw.push((excess, aoa, weight, phase));
    }
    let total_weight: f64 = raw.iter().map(|r| r.2).sum();
    for (excess, aoa, weight, phase) in raw {
        let p = nlos_power * weight / total_weight;
        paths.push(Path {
            delay: tof + excess,
            gain: Complex64::from_polar(p.sqrt(), phase),
            aoa,
        });
    }
    Ok(paths)
}

/// Taps needed to hold every path of a link at `bandwidth`.
pub fn required_taps(distance: f64, bandwidth: f64, model: &ChannelModel) -> usize {
    let max_delay = distance.max(MIN_DISTANCE) / SPEED_OF_LIGHT
        + if model.path_count > 1 {
            DELAY_TRUNCATION * model.delay_spread
        } else {
            0.0
        };
    (max_delay * bandwidth).round() as usize + 1
}

/// Sums path gains into taps; `steer(i)` weights path `i`.
fn bin_paths(
    paths: &[Path],
    bandwidth: f64,
    taps: usize,
    steer: impl Fn(usize) -> Complex64,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); taps];
    for (i, p) in paths.iter().enumerate() {
        let k = (p.delay * bandwidth).round() as usize;
        out[k] += p.gain * steer(i);
    }
    out
}

fn check_taps(
    tx: &Position,
    rx: &Position,
    bandwidth: f64,
    model: &ChannelModel,
    taps: usize,
) -> Result<()> {
    if !(bandwidth > 0.0) {
        return Err(Error::arg("bandwidth must be positive"));
    }
    let need = required_taps(tx.distance(rx), bandwidth, model);
    if taps < need {
        return Err(Error::arg(format!(
            "{taps} taps cannot hold the delay spread at {bandwidth} Hz, need {need}"
        )));
    }
    Ok(())
}

/// Power scale of a link, taken from its unperturbed taps.
#[allow(clippy::too_many_arguments)]
fn location_scale(
    tx: &Position,
    rx: &Position,
    freq: f64,
    bandwidth: f64,
    model: &ChannelModel,
    taps: usize,
    perturbed: bool,
    binned: &[Complex64],
) -> Result<f64> {
    let target = model.path_gain(tx.distance(rx), freq);
    if !perturbed {
        return Ok(power_scale(binned, target));
    }
    let base = bin_paths(
        &multipath(tx, rx, freq, model, None)?,
        bandwidth,
        taps,
        |_| Complex64::new(1.0, 0.0),
    );
    Ok(power_scale(&base, target))
}

/// Scale making the binned tap powers sum to the closed-form path gain.
fn power_scale(taps: &[Complex64], target: f64) -> f64 {
    let p: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
    if p > 0.0 {
        (target / p).sqrt()
    } else {
        1.0
    }
}

/// Unperturbed channel impulse response with `taps` taps at spacing
/// `1 / bandwidth`. Path delays are rounded to the nearest tap and the tap
/// powers are rescaled to sum to [`ChannelModel::path_gain`].
pub fn gen_cir(
    tx: &Position,
    rx: &Position,
    freq: f64,
    bandwidth: f64,
    model: &ChannelModel,
    taps: usize,
) -> Result<Cir> {
    gen_cir_inner(tx, rx, freq, bandwidth, model, taps, None)
}

/// [`gen_cir`] with the diffuse phases perturbed for `snapshot`, scaled
/// like the unperturbed channel (tap powers fluctuate around the path
/// gain).
pub fn gen_cir_snapshot(
    tx: &Position,
    rx: &Position,
    freq: f64,
    bandwidth: f64,
    model: &ChannelModel,
    taps: usize,
    snapshot: u64,
) -> Result<Cir> {
    gen_cir_inner(tx, rx, freq, bandwidth, model, taps, Some(snapshot))
}

fn gen_cir_inner(
    tx: &Position,
    rx: &Position,
    freq: f64,
    bandwidth: f64,
    model: &ChannelModel,
    taps: usize,
    snapshot: Option<u64>,
) -> Result<Cir> {
    check_taps(tx, rx, bandwidth, model, taps)?;
    let paths = multipath(tx, rx, freq, model, snapshot)?;
    let mut h = bin_paths(&paths, bandwidth, taps, |_| Complex64::new(1.0, 0.0));
    let s = location_scale(tx, rx, freq, bandwidth, model, taps, snapshot.is_some(), &h)?;
    h.iter_mut().for_each(|t| *t *= s);
    Cir::new(h, 1.0 / bandwidth)
}

/// Per-element CIRs of a uniform circular array centred at `rx`. Each path
/// picks up the array response for its arrival angle; the power scale of
/// the array-centre response is applied to all elements.
#[allow(clippy::too_many_arguments)]
pub fn gen_array_cirs(
    tx: &Position,
    rx: &Position,
    freq: f64,
    bandwidth: f64,
    model: &ChannelModel,
    taps: usize,
    array: &UcaGeometry,
    snapshot: Option<u64>,
) -> Result<Vec<Cir>> {
    check_taps(tx, rx, bandwidth, model, taps)?;
    let paths = multipath(tx, rx, freq, model, snapshot)?;
    let centre = bin_paths(&paths, bandwidth, taps, |_| Complex64::new(1.0, 0.0));
    let s = location_scale(
        tx,
        rx,
        freq,
        bandwidth,
        model,
        taps,
        snapshot.is_some(),
        &centre,
    )?;
    let steering: Vec<Vec<Complex64>> = paths
        .iter()
        .map(|p| uca_steering(array, freq, p.aoa))
        .collect();
    (0..array.element_count)
        .map(|k| {
            let mut h = bin_paths(&paths, bandwidth, taps, |i| steering[i][k]);
            h.iter_mut().for_each(|t| *t *= s);
            Cir::new(h, 1.0 / bandwidth)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    ZadoffChu,
    RandomBits,
}

/// Transmit waveform: a training sequence and a pulse-shaping filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxSignalSpec {
    pub sequence_kind: SequenceKind,
    pub length: usize,
    /// Zadoff-Chu root, coprime with `length`.
    #[serde(default)]
    pub root: u64,
    pub pulse: Vec<f64>,
    pub sample_rate: f64,
    /// Seed of the random bit sequence.
    #[serde(default)]
    pub bits_seed: u64,
    /// Transmit amplitude scale (power scales with its square).
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl TxSignalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::arg("transmit sequence must be nonempty"));
        }
        if self.pulse.is_empty() {
            return Err(Error::arg("pulse-shaping filter must be nonempty"));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::arg("sample rate must be positive"));
        }
        if self.sequence_kind == SequenceKind::ZadoffChu
            && (self.root == 0 || gcd(self.root, self.length as u64) != 1)
        {
            return Err(Error::arg(format!(
                "Zadoff-Chu root {} is not coprime with length {}",
                self.root, self.length
            )));
        }
        Ok(())
    }

    /// The transmitted symbol sequence `x`.
    pub fn sequence(&self) -> Result<Vec<Complex64>> {
        self.validate()?;
        let n = self.length as u64;
        let x = match self.sequence_kind {
            SequenceKind::ZadoffChu => (0..n)
                .map(|k| {
                    let arg = if n % 2 == 1 { k * (k + 1) } else { k * k };
                    // reduce before converting so long sequences stay exact
                    let arg = (self.root * (arg % (2 * n))) % (2 * n);
                    Complex64::from_polar(self.amplitude, -PI * arg as f64 / n as f64)
                })
                .collect(),
            SequenceKind::RandomBits => {
                let mut rng = SeedMixer::new(self.bits_seed).word(0x6269_7473).rng();
                (0..n)
                    .map(|_| {
                        let bit: bool = rng.random();
                        Complex64::new(if bit { self.amplitude } else { -self.amplitude }, 0.0)
                    })
                    .collect()
            }
        };
        Ok(x)
    }
}

/// Full linear convolution.
pub fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `y = h * x * g + n` with complex white Gaussian noise of power
/// `noise_power`; length `len(x) + len(g) + L - 2`.
pub fn synthesize_rx(
    cir: &Cir,
    tx: &TxSignalSpec,
    noise_power: f64,
    seed: u64,
) -> Result<SignalBuffer> {
    let x = tx.sequence()?;
    let g: Vec<Complex64> = tx.pulse.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    let mut y = convolve(&convolve(&cir.taps, &x), &g);
    if noise_power > 0.0 {
        let mut rng = SeedMixer::new(seed).word(0x6e_6f69_7365).rng();
        for v in y.iter_mut() {
            *v += complex_normal(&mut rng, noise_power);
        }
    } else if noise_power < 0.0 {
        return Err(Error::arg("noise power must be non-negative"));
    }
    SignalBuffer::new(y, tx.sample_rate)
}

/// Radially symmetric coverage of a binary presence sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorCoverage {
    pub sensor_pos: Position,
    /// `(max_range_m, probability)` rows with increasing range; a moving
    /// user at range `r` is detected with the probability of the first row
    /// whose range is `>= r`, and never beyond the last row.
    pub p_detect_moving: Vec<(f64, f64)>,
    /// Detection probability of a static user at any range.
    pub p_detect_static: f64,
}

impl SensorCoverage {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !in_unit(self.p_detect_static) || self.p_detect_moving.iter().any(|r| !in_unit(r.1)) {
            return Err(Error::arg("detection probabilities must lie in [0, 1]"));
        }
        for w in self.p_detect_moving.windows(2) {
            if !(w[1].0 > w[0].0) || w[1].1 > w[0].1 {
                return Err(Error::arg(
                    "coverage table must have increasing range and non-increasing probability",
                ));
            }
        }
        Ok(())
    }

    pub fn probability(&self, user: &Position, moving: bool) -> f64 {
        if !moving {
            return self.p_detect_static;
        }
        let r = self.sensor_pos.distance(user);
        self.p_detect_moving
            .iter()
            .find(|row| r <= row.0)
            .map_or(0.0, |row| row.1)
    }
}

/// One Bernoulli draw of a presence sensor.
pub fn simulate_binary_sensor(
    user: &Position,
    user_moving: bool,
    cov: &SensorCoverage,
    seed: u64,
) -> bool {
    let p = cov.probability(user, user_moving);
    let mut rng = SeedMixer::new(seed).word(0x70_6972).rng();
    rng.random::<f64>() < p
}

/// Dead-reckoning displacement stream: true per-step displacement plus
/// i.i.d. Gaussian noise of `noise_sigma` per axis. Paths shorter than two
/// points yield no displacements.
pub fn simulate_pdr(true_path: &[Position], noise_sigma: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = SeedMixer::new(seed).word(0x70_6472).rng();
    true_path
        .windows(2)
        .map(|w| {
            let dx = w[1].x - w[0].x + normal(&mut rng, noise_sigma);
            let dy = w[1].y - w[0].y + normal(&mut rng, noise_sigma);
            (dx, dy)
        })
        .collect()
}

/// Illuminance gain table of a ceiling light at `light` mounted `height`
/// meters above the work plane: `peak_lux * cos³θ` (inverse-square law
/// with a cosine-weighted incidence), in lux at full power per grid point.
pub fn inverse_square_gains(light: &Position, height: f64, peak_lux: f64, grid: &Grid) -> Vec<f64> {
    grid.points()
        .iter()
        .map(|p| {
            let r2 = light.distance_sq(p) + height * height;
            peak_lux * height.powi(3) / r2.powf(1.5)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::build_uniform_grid;

    fn los_model() -> ChannelModel {
        ChannelModel {
            path_count: 1,
            delay_spread: 0.0,
            pathloss_exponent: 2.0,
            reference_loss_db: 0.0,
            rician_k_db: f64::INFINITY,
            seed: 3,
            ..ChannelModel::default()
        }
    }

    #[test]
    fn unit_los_reference() {
        let h = gen_cir(
            &Position::new(0.0, 0.0),
            &Position::new(1.0, 0.0),
            1e9,
            10e6,
            &los_model(),
            4,
        )
        .unwrap();
        let nonzero: Vec<_> = h.taps.iter().filter(|t| t.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((nonzero[0].norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = ChannelModel::default();
        let tx = Position::new(1.0, 2.0);
        let rx = Position::new(5.0, -1.0);
        let a = gen_cir_snapshot(&tx, &rx, 2e9, 20e6, &m, 16, 4).unwrap();
        let b = gen_cir_snapshot(&tx, &rx, 2e9, 20e6, &m, 16, 4).unwrap();
        assert_eq!(a, b);
        let c = gen_cir_snapshot(&tx, &rx, 2e9, 20e6, &m, 16, 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn doubling_distance_loses_six_db() {
        let m = ChannelModel::default();
        let rx = Position::default();
        let p1 = gen_cir(&Position::new(3.0, 0.0), &rx, 1e9, 20e6, &m, 32)
            .unwrap()
            .power();
        let p2 = gen_cir(&Position::new(6.0, 0.0), &rx, 1e9, 20e6, &m, 32)
            .unwrap()
            .power();
        assert!((10.0 * (p1 / p2).log10() - 6.0206).abs() < 0.01);
    }

    #[test]
    fn tap_power_matches_closed_form() {
        let m = ChannelModel::default();
        for (i, d) in [0.5, 2.0, 7.5, 30.0].iter().enumerate() {
            let tx = Position::new(*d, 0.3 * i as f64);
            let rx = Position::default();
            let h = gen_cir(&tx, &rx, 2.4e9, 40e6, &m, 64).unwrap();
            let expect = m.path_gain(tx.distance(&rx), 2.4e9);
            assert!((h.power() / expect - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_taps_is_an_error() {
        let m = ChannelModel {
            delay_spread: 1e-6,
            ..ChannelModel::default()
        };
        let r = gen_cir(
            &Position::new(1.0, 0.0),
            &Position::default(),
            1e9,
            20e6,
            &m,
            4,
        );
        assert!(matches!(r, Err(Error::Argument(_))));
    }

    #[test]
    fn first_tap_is_time_of_flight() {
        let m = los_model();
        // 300 m at 10 MHz: 1 us -> tap 10
        let h = gen_cir(
            &Position::new(SPEED_OF_LIGHT * 1e-6, 0.0),
            &Position::default(),
            1e9,
            10e6,
            &m,
            16,
        )
        .unwrap();
        let first = h.taps.iter().position(|t| t.norm() > 0.0).unwrap();
        assert_eq!(first, 10);
    }

    fn tx_spec(x_len: usize, pulse: Vec<f64>) -> TxSignalSpec {
        TxSignalSpec {
            sequence_kind: SequenceKind::RandomBits,
            length: x_len,
            root: 0,
            pulse,
            sample_rate: 1e6,
            bits_seed: 9,
            amplitude: 1.0,
        }
    }

    #[test]
    fn identity_channel_passes_sequence() {
        let spec = tx_spec(20, vec![1.0]);
        let h = Cir::new(vec![Complex64::new(1.0, 0.0)], 1e-6).unwrap();
        let y = synthesize_rx(&h, &spec, 0.0, 1).unwrap();
        assert_eq!(y.samples, spec.sequence().unwrap());
        let h2 = Cir::new(vec![Complex64::new(2.0, 0.0)], 1e-6).unwrap();
        let y2 = synthesize_rx(&h2, &spec, 0.0, 1).unwrap();
        assert!(y2
            .samples
            .iter()
            .zip(&y.samples)
            .all(|(a, b)| *a == 2.0 * b));
    }

    #[test]
    fn hand_convolution() {
        let h = Cir::new(
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)],
            1e-6,
        )
        .unwrap();
        let x = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        let y = convolve(&convolve(&h.taps, &x), &[Complex64::new(1.0, 0.0)]);
        assert_eq!(
            y,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(-0.5, 0.0),
                Complex64::new(-0.5, 0.0)
            ]
        );
    }

    #[test]
    fn output_length() {
        let spec = tx_spec(10, vec![0.2, 0.5, 0.2]);
        let h = Cir::new(vec![Complex64::new(1.0, 0.0); 4], 1e-6).unwrap();
        assert_eq!(
            synthesize_rx(&h, &spec, 0.1, 2).unwrap().len(),
            10 + 3 + 4 - 2
        );
    }

    #[test]
    fn zadoff_chu_is_constant_amplitude_and_validated() {
        let spec = TxSignalSpec {
            sequence_kind: SequenceKind::ZadoffChu,
            length: 63,
            root: 25,
            pulse: vec![1.0],
            sample_rate: 1e6,
            bits_seed: 0,
            amplitude: 1.0,
        };
        let x = spec.sequence().unwrap();
        assert!(x.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        // zero periodic autocorrelation at nonzero shifts
        let shifted: Complex64 = (0..63).map(|k| x[k] * x[(k + 5) % 63].conj()).sum();
        assert!(shifted.norm() < 1e-9);
        let bad = TxSignalSpec { root: 21, ..spec };
        assert!(bad.sequence().is_err());
    }

    #[test]
    fn binary_sensor_extremes() {
        let cov = |p: f64| SensorCoverage {
            sensor_pos: Position::default(),
            p_detect_moving: vec![(100.0, p)],
            p_detect_static: p,
        };
        for s in 0..50 {
            assert!(simulate_binary_sensor(
                &Position::new(1.0, 1.0),
                s % 2 == 0,
                &cov(1.0),
                s
            ));
            assert!(!simulate_binary_sensor(
                &Position::new(1.0, 1.0),
                s % 2 == 0,
                &cov(0.0),
                s
            ));
        }
    }

    #[test]
    fn coverage_validation() {
        let bad = SensorCoverage {
            sensor_pos: Position::default(),
            p_detect_moving: vec![(1.0, 0.5), (2.0, 0.9)],
            p_detect_static: 0.1,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn pdr_without_noise_is_exact() {
        let path = [
            Position::new(0.0, 0.0),
            Position::new(1.0, 0.5),
            Position::new(1.0, 2.0),
        ];
        let d = simulate_pdr(&path, 0.0, 4);
        assert_eq!(d, vec![(1.0, 0.5), (0.0, 1.5)]);
        assert!(simulate_pdr(&path[..1], 0.1, 4).is_empty());
    }

    #[test]
    fn channel_model_json_encodes_infinite_k_as_null() {
        let m = los_model();
        let v = serde_json::to_value(&m).unwrap();
        assert!(v["rician_k_db"].is_null());
        let back: ChannelModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn gain_table_peaks_under_light() {
        let g = build_uniform_grid(Position::default(), 3, 1, 1.0).unwrap();
        let t = inverse_square_gains(&Position::new(0.0, 0.0), 2.0, 500.0, &g);
        assert!((t[0] - 500.0).abs() < 1e-9);
        assert!(t[1] < t[0] && t[2] < t[1]);
    }
}
