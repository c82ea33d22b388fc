//! Radio-map re-projection for emitters whose bandwidth, carrier frequency
//! and transmit power are only known at estimation time.
//!
//! Cross-correlation fingerprints are low-pass filtered to the target
//! bandwidth, regressed across frequency per delay bin, and Kriged onto a
//! denser grid. Phase-difference fingerprints are re-projected through the
//! array response at the dominant arrival angle and interpolated on unit
//! phasors. [`normalize_power`] removes the unknown transmit power.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::database::{DbEntry, DbMeta, FingerprintDatabase, LearnedModel};
use crate::error::{Error, Result};
use crate::fingerprint::{wrap_angle, FingerprintKind, FingerprintVector};
use crate::geom::{Grid, Position};
use crate::statfit::{fit_loglinear, kriging_fit, kriging_predict, KrigingHyper};
use crate::SPEED_OF_LIGHT;

/// Length of the bandwidth-narrowing filter.
pub const LOWPASS_TAPS: usize = 63;
/// Arrival-angle search step, radians (0.5 degrees).
pub const AOA_STEP: f64 = 0.5 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcaGeometry {
    pub element_count: usize,
    /// Array radius, meters.
    pub radius: f64,
}

impl UcaGeometry {
    pub fn new(element_count: usize, radius: f64) -> Result<Self> {
        if element_count < 2 {
            return Err(Error::arg("a circular array needs at least two elements"));
        }
        if !(radius > 0.0) {
            return Err(Error::arg("array radius must be positive"));
        }
        Ok(Self {
            element_count,
            radius,
        })
    }
}

/// Carrier and bandwidth of an emitter as estimated online.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterSpec {
    pub center_freq: f64,
    pub bandwidth: f64,
}

/// Hamming-windowed sinc low-pass with cutoff `cutoff` relative to
/// Nyquist (0 < cutoff <= 1), normalized to unit DC gain.
pub fn windowed_sinc_lowpass(cutoff: f64, taps: usize) -> Vec<f64> {
    let mid = (taps as f64 - 1.0) / 2.0;
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            let t = n as f64 - mid;
            let sinc = if t == 0.0 {
                cutoff
            } else {
                (PI * cutoff * t).sin() / (PI * t)
            };
            let window = if taps > 1 {
                0.54 - 0.46 * (2.0 * PI * n as f64 / (taps as f64 - 1.0)).cos()
            } else {
                1.0
            };
            sinc * window
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= dc);
    h
}

/// Narrows a cross-correlation fingerprint from `train_bw` to `target_bw`.
///
/// Equal bandwidths return the input unchanged. Otherwise the lag sequence
/// is convolved with a 63-tap Hamming windowed-sinc of cutoff
/// `target_bw / train_bw`, centred so the lag axis is preserved.
pub fn bandwidth_interp(
    fp: &FingerprintVector,
    train_bw: f64,
    target_bw: f64,
) -> Result<FingerprintVector> {
    if !(train_bw > 0.0 && target_bw > 0.0) {
        return Err(Error::arg("bandwidths must be positive"));
    }
    if target_bw > train_bw {
        return Err(Error::arg(format!(
            "cannot widen bandwidth from {train_bw} Hz to {target_bw} Hz"
        )));
    }
    if target_bw == train_bw {
        return Ok(fp.clone());
    }
    let h = windowed_sinc_lowpass(target_bw / train_bw, LOWPASS_TAPS);
    let half = (LOWPASS_TAPS / 2) as isize;
    let x = fp.values();
    let out: Vec<Complex64> = (0..x.len() as isize)
        .map(|n| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, hk) in h.iter().enumerate() {
                let src = n - (k as isize - half);
                if src >= 0 && (src as usize) < x.len() {
                    acc += x[src as usize] * hk;
                }
            }
            acc
        })
        .collect();
    let mut meta = *fp.meta();
    meta.bandwidth = target_bw;
    Ok(fp.with_values(out)?.with_meta(meta))
}

/// Per-delay-bin log-linear regression of magnitude across the training
/// frequencies (taken from each fingerprint's `meta.center_freq`).
///
/// Predicted magnitudes carry the phase of the training fingerprint whose
/// frequency is closest to `target_freq`. Bins with a non-positive
/// magnitude at any training frequency are filled with the geometric mean
/// of the nearest valid neighbours on either side.
pub fn freq_interp_xcorr(
    train: &[FingerprintVector],
    target_freq: f64,
) -> Result<FingerprintVector> {
    if train.len() < 2 {
        return Err(Error::arg(
            "frequency regression needs at least two training frequencies",
        ));
    }
    if !(target_freq > 0.0) {
        return Err(Error::arg("target frequency must be positive"));
    }
    let dim = train[0].dim();
    let kind = train[0].kind();
    if train.iter().any(|f| f.dim() != dim || f.kind() != kind) {
        return Err(Error::arg(
            "training fingerprints differ in kind or dimension",
        ));
    }
    let freqs: Vec<f64> = train.iter().map(|f| f.meta().center_freq).collect();
    let nearest = freqs
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1.ln() - target_freq.ln())
                .abs()
                .total_cmp(&(b.1.ln() - target_freq.ln()).abs())
        })
        .map(|(i, _)| i)
        .unwrap_or(0);

    let mut mags: Vec<Option<f64>> = Vec::with_capacity(dim);
    for k in 0..dim {
        let vals: Vec<f64> = train.iter().map(|f| f.values()[k].norm()).collect();
        if vals.iter().any(|v| !(*v > 0.0)) {
            mags.push(None);
            continue;
        }
        let db: Vec<f64> = vals.iter().map(|v| 10.0 * v.log10()).collect();
        let model = fit_loglinear(&freqs, &db)?;
        mags.push(Some(10f64.powf(model.predict_db(target_freq) / 10.0)));
    }
    let filled: Vec<f64> = (0..dim)
        .map(|k| {
            mags[k].unwrap_or_else(|| {
                let left = mags[..k].iter().rev().flatten().next();
                let right = mags[k + 1..].iter().flatten().next();
                match (left, right) {
                    (Some(a), Some(b)) => (a * b).sqrt(),
                    (Some(a), None) | (None, Some(a)) => *a,
                    (None, None) => 0.0,
                }
            })
        })
        .collect();
    let phase_src = &train[nearest];
    let values = filled
        .iter()
        .zip(phase_src.values())
        .map(|(m, v)| Complex64::from_polar(*m, if v.norm() > 0.0 { v.arg() } else { 0.0 }))
        .collect();
    let mut meta = *phase_src.meta();
    meta.center_freq = target_freq;
    FingerprintVector::new(kind, values, meta)
}

/// Unit-magnitude array response; element `k` has phase
/// `(2π f r / c) cos(aoa - 2πk/K)`.
pub fn uca_steering(geom: &UcaGeometry, freq: f64, aoa: f64) -> Vec<Complex64> {
    let scale = 2.0 * PI * freq * geom.radius / SPEED_OF_LIGHT;
    (0..geom.element_count)
        .map(|k| {
            let elem = 2.0 * PI * k as f64 / geom.element_count as f64;
            Complex64::from_polar(1.0, scale * (aoa - elem).cos())
        })
        .collect()
}

/// Phase differences `arg(a_j conj(a_k))` of the array response for each
/// pair.
pub fn steering_pair_phases(
    geom: &UcaGeometry,
    freq: f64,
    aoa: f64,
    pairs: &[(usize, usize)],
) -> Vec<f64> {
    let a = uca_steering(geom, freq, aoa);
    pairs
        .iter()
        .map(|&(j, k)| wrap_angle((a[j] * a[k].conj()).arg()))
        .collect()
}

/// Result of re-projecting a phase-difference fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiffProjection {
    pub fingerprint: FingerprintVector,
    /// Estimated dominant arrival angle, radians.
    pub aoa: f64,
    /// Resultant length of the residual phasors at the estimated angle,
    /// in [0, 1]; near 1 when a single path dominates.
    pub confidence: f64,
    /// Set when the angle search found no preferred direction.
    pub low_confidence: bool,
}

fn aoa_score(
    meas: &[f64],
    geom: &UcaGeometry,
    freq: f64,
    aoa: f64,
    pairs: &[(usize, usize)],
) -> f64 {
    steering_pair_phases(geom, freq, aoa, pairs)
        .iter()
        .zip(meas)
        .map(|(m, x)| (x - m).cos())
        .sum()
}

/// Re-projects a phase-difference fingerprint from `train_freq` to
/// `target_freq` through the dominant arrival angle.
///
/// The angle maximizes the circular correlation between measured and
/// modelled pair phases over a 0.5° grid, then is refined by golden-section
/// search within one grid step.
pub fn phasediff_freq_interp(
    fp: &FingerprintVector,
    geom: &UcaGeometry,
    pairs: &[(usize, usize)],
    train_freq: f64,
    target_freq: f64,
) -> Result<PhaseDiffProjection> {
    if fp.kind() != FingerprintKind::PhaseDiff {
        return Err(Error::arg(
            "phase re-projection needs a PhaseDiff fingerprint",
        ));
    }
    if fp.dim() != pairs.len() {
        return Err(Error::arg(format!(
            "fingerprint has {} phases for {} pairs",
            fp.dim(),
            pairs.len()
        )));
    }
    if pairs
        .iter()
        .any(|&(j, k)| j >= geom.element_count || k >= geom.element_count)
    {
        return Err(Error::arg(
            "pair list references elements outside the array",
        ));
    }
    let meas = fp.real_values();
    let steps = (2.0 * PI / AOA_STEP).round() as usize;
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut worst = f64::INFINITY;
    for i in 0..steps {
        let s = aoa_score(&meas, geom, train_freq, -PI + i as f64 * AOA_STEP, pairs);
        worst = worst.min(s);
        if s > best.1 {
            best = (i, s);
        }
    }
    let flat = best.1 - worst < 1e-12;
    let mut aoa = -PI + best.0 as f64 * AOA_STEP;
    if !flat {
        aoa = golden_max(
            |t| aoa_score(&meas, geom, train_freq, t, pairs),
            aoa - AOA_STEP,
            aoa + AOA_STEP,
        );
    }
    let model = steering_pair_phases(geom, train_freq, aoa, pairs);
    let resultant: Complex64 = meas
        .iter()
        .zip(&model)
        .map(|(x, m)| Complex64::from_polar(1.0, x - m))
        .sum();
    let confidence = if pairs.is_empty() {
        0.0
    } else {
        resultant.norm() / pairs.len() as f64
    };
    let out = steering_pair_phases(geom, target_freq, aoa, pairs);
    let mut meta = *fp.meta();
    meta.center_freq = target_freq;
    Ok(PhaseDiffProjection {
        fingerprint: FingerprintVector::from_phases(FingerprintKind::PhaseDiff, &out, meta)?,
        aoa: wrap_angle(aoa),
        confidence,
        low_confidence: flat,
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > 1e-12 {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Output of [`spatial_densify`].
#[derive(Debug, Clone)]
pub struct Densified {
    pub db: FingerprintDatabase,
    /// Target grid indices outside the training hull, filled from the
    /// nearest training point.
    pub extrapolated: Vec<usize>,
}

/// Interpolates a database of raw fingerprints onto `target`.
///
/// Cross-correlation and RSSI vectors are Kriged per component on dB
/// magnitude (constant mean removed, default hyper-parameters from the
/// training spacing) and take the nearest training point's phase. Phase
/// fingerprints are averaged as unit phasors over the four nearest
/// training points with inverse-distance weights, each scaled by the
/// training point's stored confidence for that key. Other models are copied
/// from the nearest training point. Targets outside the training bounding
/// box use nearest-neighbour values and are reported.
pub fn spatial_densify(db: &FingerprintDatabase, target: &Grid) -> Result<Densified> {
    let train = db.grid();
    let bounds = train.bounds();
    let tol = 1e-9 * (1.0 + bounds.max.x.abs().max(bounds.max.y.abs()));
    let inside = |p: &Position| {
        p.x >= bounds.min.x - tol
            && p.x <= bounds.max.x + tol
            && p.y >= bounds.min.y - tol
            && p.y <= bounds.max.y + tol
    };
    let extrapolated: Vec<usize> = (0..target.len())
        .filter(|&i| !inside(&target.point(i)))
        .collect();
    let nearest: Vec<usize> = target.points().iter().map(|p| train.nearest(p)).collect();
    let spacing = effective_spacing(train);

    let mut entries: Vec<DbEntry> = (0..target.len())
        .map(|i| DbEntry {
            sample_count: db.entry(nearest[i]).sample_count,
            ..DbEntry::default()
        })
        .collect();

    for key in db.keys() {
        let first = db.entry(0).get(&key);
        match first {
            Some(LearnedModel::Raw(fp)) if kriged_kind(fp.kind()) => {
                let column = raw_column(db, &key)?;
                let dim = fp.dim();
                let mut mags = vec![vec![0.0; dim]; target.len()];
                for k in 0..dim {
                    let floor = column
                        .iter()
                        .map(|f| f.values()[k].norm())
                        .filter(|v| *v > 0.0)
                        .fold(f64::INFINITY, f64::min);
                    let floor = if floor.is_finite() {
                        floor * 1e-3
                    } else {
                        1e-300
                    };
                    let vals: Vec<f64> = column
                        .iter()
                        .map(|f| 10.0 * f.values()[k].norm().max(floor).log10())
                        .collect();
                    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                    let centred: Vec<f64> = vals.iter().map(|v| v - mean).collect();
                    let model = kriging_fit(
                        train.points(),
                        &centred,
                        KrigingHyper::default_for(&centred, spacing),
                    )?;
                    for (i, p) in target.points().iter().enumerate() {
                        let db_val = if extrapolated.contains(&i) {
                            vals[nearest[i]]
                        } else {
                            kriging_predict(&model, p).0 + mean
                        };
                        mags[i][k] = 10f64.powf(db_val / 10.0);
                    }
                }
                for (i, e) in entries.iter_mut().enumerate() {
                    let src = column[nearest[i]];
                    let values = src
                        .values()
                        .iter()
                        .zip(&mags[i])
                        .map(|(v, m)| {
                            let phase = if v.norm() > 0.0 { v.arg() } else { 0.0 };
                            Complex64::from_polar(*m, phase)
                        })
                        .collect();
                    let fp = if src.kind() == FingerprintKind::Rssi {
                        FingerprintVector::new(
                            src.kind(),
                            mags[i].iter().map(|m| Complex64::new(*m, 0.0)).collect(),
                            *src.meta(),
                        )?
                    } else {
                        src.with_values(values)?
                    };
                    e.insert(key.clone(), LearnedModel::Raw(fp));
                }
            }
            Some(LearnedModel::Raw(fp)) if fp.kind().is_angular() => {
                let column = raw_column(db, &key)?;
                for (i, e) in entries.iter_mut().enumerate() {
                    let p = target.point(i);
                    let fp_out = if extrapolated.contains(&i) {
                        column[nearest[i]].clone()
                    } else {
                        interpolate_phasors(db, &column, &key, &p)?
                    };
                    e.insert(key.clone(), LearnedModel::Raw(fp_out));
                }
            }
            _ => {
                for (i, e) in entries.iter_mut().enumerate() {
                    if let Some(m) = db.entry(nearest[i]).get(&key) {
                        e.insert(key.clone(), m.clone());
                    }
                }
            }
        }
    }
    let meta = DbMeta {
        derived: true,
        ..db.meta().clone()
    };
    Ok(Densified {
        db: FingerprintDatabase::new(target.clone(), meta, entries)?,
        extrapolated,
    })
}

fn kriged_kind(kind: FingerprintKind) -> bool {
    matches!(
        kind,
        FingerprintKind::RxXcorr | FingerprintKind::CirXcorr | FingerprintKind::Rssi
    )
}

fn raw_column<'a>(db: &'a FingerprintDatabase, key: &str) -> Result<Vec<&'a FingerprintVector>> {
    db.entries()
        .iter()
        .enumerate()
        .map(|(i, e)| match e.get(key) {
            Some(LearnedModel::Raw(f)) => Ok(f),
            _ => Err(Error::arg(format!(
                "grid index {i} lacks raw fingerprint {key:?}"
            ))),
        })
        .collect()
}

/// Spacing used for default Kriging length-scales: the uniform spacing,
/// or the mean nearest-neighbour distance of an irregular grid.
fn effective_spacing(grid: &Grid) -> f64 {
    if grid.spacing() > 0.0 {
        return grid.spacing();
    }
    if grid.len() < 2 {
        return 1.0;
    }
    let total: f64 = grid
        .points()
        .iter()
        .map(|p| grid.k_nearest(p, 2)[1].1)
        .sum();
    total / grid.len() as f64
}

fn interpolate_phasors(
    db: &FingerprintDatabase,
    column: &[&FingerprintVector],
    key: &str,
    p: &Position,
) -> Result<FingerprintVector> {
    let near = db.grid().k_nearest(p, 4);
    if let Some(&(i, _)) = near.iter().find(|n| n.1 == 0.0) {
        return Ok(column[i].clone());
    }
    let idw: Vec<(usize, f64)> = near.iter().map(|&(i, d)| (i, 1.0 / d)).collect();
    let confident: Vec<(usize, f64)> = idw
        .iter()
        .map(|&(i, w)| (i, w * db.entry(i).confidence(key)))
        .collect();
    let weights = if confident.iter().map(|c| c.1).sum::<f64>() > 0.0 {
        confident
    } else {
        idw
    };
    let dim = column[0].dim();
    let phases: Vec<f64> = (0..dim)
        .map(|k| {
            let s: Complex64 = weights
                .iter()
                .map(|&(i, w)| Complex64::from_polar(w, column[i].values()[k].re))
                .sum();
            if s.norm() > 0.0 {
                s.arg()
            } else {
                0.0
            }
        })
        .collect();
    FingerprintVector::from_phases(column[0].kind(), &phases, *column[weights[0].0].meta())
}

/// Divides every fingerprint by the largest per-sensor power.
///
/// Sensor power is the magnitude at the centre (zero-lag) entry of each
/// autocorrelation fingerprint (`meta.pair.0 == meta.pair.1`); when the
/// list holds no autocorrelations, every fingerprint's centre magnitude is
/// used.
pub fn normalize_power(fps: &[FingerprintVector]) -> Result<Vec<FingerprintVector>> {
    if fps.is_empty() {
        return Err(Error::arg("nothing to normalize"));
    }
    let centre = |f: &FingerprintVector| f.values().get(f.dim() / 2).map_or(0.0, |v| v.norm());
    let autos: Vec<&FingerprintVector> = fps
        .iter()
        .filter(|f| f.meta().pair.0 == f.meta().pair.1)
        .collect();
    let pool: Vec<&FingerprintVector> = if autos.is_empty() {
        fps.iter().collect()
    } else {
        autos
    };
    let max = pool.iter().map(|f| centre(f)).fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::arg("all fingerprints have zero power"));
    }
    fps.iter()
        .map(|f| f.with_values(f.values().iter().map(|v| v / max).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::FingerprintMeta;
    use crate::fingerprints::all_pairs;
    use crate::geom::build_uniform_grid;

    fn xc(values: Vec<Complex64>) -> FingerprintVector {
        FingerprintVector::new(FingerprintKind::RxXcorr, values, FingerprintMeta::default())
            .unwrap()
    }

    #[test]
    fn equal_bandwidth_is_bitwise_identity() {
        let f = xc(vec![Complex64::new(0.1, 0.2), Complex64::new(-0.3, 1e-17)]);
        assert_eq!(bandwidth_interp(&f, 10e6, 10e6).unwrap(), f);
        assert!(bandwidth_interp(&f, 5e6, 10e6).is_err());
    }

    #[test]
    fn impulse_gives_filter_response() {
        let n = 81;
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[40] = Complex64::new(1.0, 0.0);
        let out = bandwidth_interp(&xc(v), 10e6, 5e6).unwrap();
        let h = windowed_sinc_lowpass(0.5, LOWPASS_TAPS);
        for (k, hk) in h.iter().enumerate() {
            let idx = 40 + k - LOWPASS_TAPS / 2;
            assert!((out.values()[idx].re - hk).abs() < 1e-15);
        }
        assert_eq!(out.values()[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn filter_is_symmetric_with_unit_dc() {
        let h = windowed_sinc_lowpass(0.3, LOWPASS_TAPS);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 0..LOWPASS_TAPS {
            assert!((h[k] - h[LOWPASS_TAPS - 1 - k]).abs() < 1e-15);
        }
    }

    #[test]
    fn steering_point_array_and_antipodes() {
        let tiny = UcaGeometry {
            element_count: 4,
            radius: 1e-30,
        };
        assert!(uca_steering(&tiny, 1e9, 0.7)
            .iter()
            .all(|a| a.arg().abs() < 1e-12));
        let g = UcaGeometry::new(2, 0.05).unwrap();
        let f = 1e9;
        let a = uca_steering(&g, f, 0.0);
        let expect = 2.0 * PI * f * 0.05 / SPEED_OF_LIGHT;
        assert!((a[0].arg() - expect).abs() < 1e-12);
        assert!((a[1].arg() + expect).abs() < 1e-12);
    }

    #[test]
    fn steering_phase_is_linear_in_frequency() {
        let g = UcaGeometry::new(3, 0.04).unwrap();
        let a1 = uca_steering(&g, 0.5e9, 0.4);
        let a2 = uca_steering(&g, 1.0e9, 0.4);
        for (x, y) in a1.iter().zip(&a2) {
            if x.arg().abs() > 1e-6 {
                assert!((y.arg() / x.arg() - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn phasediff_projection_recovers_plane_wave() {
        let g = UcaGeometry::new(3, 0.04).unwrap();
        let pairs = all_pairs(3);
        let theta = 0.8123;
        let meas = steering_pair_phases(&g, 1e9, theta, &pairs);
        let fp = FingerprintVector::from_phases(
            FingerprintKind::PhaseDiff,
            &meas,
            FingerprintMeta::default(),
        )
        .unwrap();
        let same = phasediff_freq_interp(&fp, &g, &pairs, 1e9, 1e9).unwrap();
        for (a, b) in same.fingerprint.real_values().iter().zip(fp.real_values()) {
            assert!((a - b).abs() < 1e-6);
        }
        let up = phasediff_freq_interp(&fp, &g, &pairs, 1e9, 2e9).unwrap();
        let truth = steering_pair_phases(&g, 2e9, theta, &pairs);
        for (a, b) in up.fingerprint.real_values().iter().zip(&truth) {
            assert!(wrap_angle(a - b).abs() < 1e-3);
        }
        assert!(up.confidence > 0.999);
        assert!(!up.low_confidence);
    }

    #[test]
    fn flat_correlation_sets_low_confidence() {
        let g = UcaGeometry::new(3, 0.04).unwrap();
        let fp = FingerprintVector::from_phases(
            FingerprintKind::PhaseDiff,
            &[],
            FingerprintMeta::default(),
        )
        .unwrap();
        let r = phasediff_freq_interp(&fp, &g, &[], 1e9, 2e9).unwrap();
        assert!(r.low_confidence);
    }

    #[test]
    fn loglinear_frequency_reproduces_training_point() {
        let mk = |f: f64, m: f64| {
            let meta = FingerprintMeta {
                center_freq: f,
                ..FingerprintMeta::default()
            };
            FingerprintVector::new(
                FingerprintKind::RxXcorr,
                vec![Complex64::from_polar(m, 0.3)],
                meta,
            )
            .unwrap()
        };
        let train = [mk(1e9, 0.2), mk(2e9, 0.05)];
        let out = freq_interp_xcorr(&train, 2e9).unwrap();
        assert!((out.values()[0].norm() - 0.05).abs() < 1e-9);
        assert!((out.values()[0].arg() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_bins_take_geometric_mean_of_neighbours() {
        let mk = |f: f64, v: [f64; 3]| {
            let meta = FingerprintMeta {
                center_freq: f,
                ..FingerprintMeta::default()
            };
            FingerprintVector::from_real(FingerprintKind::RxXcorr, &v, meta).unwrap()
        };
        let train = [mk(1e9, [4.0, 0.0, 1.0]), mk(2e9, [4.0, 2.0, 1.0])];
        let out = freq_interp_xcorr(&train, 1.5e9).unwrap();
        assert!((out.values()[1].norm() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn normalize_by_largest_sensor() {
        let mk = |p: f64, s: usize| {
            let meta = FingerprintMeta {
                sensor: s,
                pair: (s, s),
                ..FingerprintMeta::default()
            };
            FingerprintVector::from_real(FingerprintKind::RxXcorr, &[0.1, p, 0.1], meta).unwrap()
        };
        let out = normalize_power(&[mk(4.0, 0), mk(1.0, 1)]).unwrap();
        assert_eq!(out[0].values()[1].re, 1.0);
        assert_eq!(out[1].values()[1].re, 0.25);
        let single = normalize_power(&[mk(9.0, 0)]).unwrap();
        assert_eq!(single[0].values()[1].re, 1.0);
        assert!(normalize_power(&[mk(0.0, 0)]).is_err());
    }

    #[test]
    fn densify_onto_training_grid_reproduces_values() {
        let g = build_uniform_grid(Position::default(), 3, 3, 10.0).unwrap();
        let entries = g
            .points()
            .iter()
            .map(|p| {
                let mut e = DbEntry::default();
                let mag = 1.0 + 0.1 * p.x + 0.05 * p.y;
                e.insert(
                    "x",
                    LearnedModel::Raw(xc(vec![
                        Complex64::from_polar(mag, 0.2),
                        Complex64::from_polar(0.5 * mag, -1.0),
                    ])),
                );
                let ph = FingerprintVector::from_phases(
                    FingerprintKind::PhaseDiff,
                    &[0.1 * p.x, -0.2],
                    FingerprintMeta::default(),
                )
                .unwrap();
                e.insert("p", LearnedModel::Raw(ph));
                e
            })
            .collect();
        let db = FingerprintDatabase::new(g.clone(), DbMeta::default(), entries).unwrap();
        let out = spatial_densify(&db, &g).unwrap();
        assert!(out.extrapolated.is_empty());
        assert!(out.db.meta().derived);
        for i in 0..g.len() {
            let (Some(LearnedModel::Raw(a)), Some(LearnedModel::Raw(b))) =
                (db.entry(i).get("x"), out.db.entry(i).get("x"))
            else {
                panic!("missing xcorr")
            };
            for (u, v) in a.values().iter().zip(b.values()) {
                assert!((u - v).norm() < 1e-6);
            }
            assert_eq!(db.entry(i).get("p"), out.db.entry(i).get("p"));
        }
    }
}
