//! Fingerprint extraction from channel responses and received samples.
//!
//! Cross-correlation convention used throughout: the entry at lag `τ` is
//! `Σ_t a(t) · conj(b(t - τ))`, with samples outside either sequence taken
//! as zero. A copy of `a` delayed by `k` samples therefore peaks at lag
//! `-k` when passed as `b`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::{wrap_angle, FingerprintKind, FingerprintMeta, FingerprintVector};

/// Complex delay-tap channel impulse response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cir {
    pub taps: Vec<Complex64>,
    /// Tap spacing, seconds.
    pub tap_period: f64,
}

impl Cir {
    pub fn new(taps: Vec<Complex64>, tap_period: f64) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::arg("CIR needs at least one tap"));
        }
        if taps.iter().any(|t| !(t.re.is_finite() && t.im.is_finite())) {
            return Err(Error::arg("CIR taps must be finite"));
        }
        if !(tap_period > 0.0) {
            return Err(Error::arg("CIR tap period must be positive"));
        }
        Ok(Self { taps, tap_period })
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn power(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }
}

/// A stream of complex received samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalBuffer {
    pub samples: Vec<Complex64>,
    /// Samples per second.
    pub sample_rate: f64,
}

impl SignalBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::arg("signal buffer must be nonempty"));
        }
        if !(sample_rate > 0.0) {
            return Err(Error::arg("sample rate must be positive"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Linear cross-correlation over lags `-max_lag..=max_lag`; index
/// `max_lag + τ` holds lag `τ`.
pub fn xcorr(a: &[Complex64], b: &[Complex64], max_lag: usize) -> Result<Vec<Complex64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg("cross-correlation of an empty sequence"));
    }
    let longest = a.len().max(b.len());
    if max_lag > longest - 1 {
        return Err(Error::arg(format!(
            "max_lag {max_lag} exceeds longest input length {longest} - 1"
        )));
    }
    let m = max_lag as isize;
    let mut out = Vec::with_capacity(2 * max_lag + 1);
    for lag in -m..=m {
        // t ranges where both a(t) and b(t - lag) exist
        let t_lo = lag.max(0) as usize;
        let t_hi = (a.len() as isize).min(b.len() as isize + lag);
        let mut acc = Complex64::new(0.0, 0.0);
        if (t_lo as isize) < t_hi {
            for t in t_lo..t_hi as usize {
                acc += a[t] * b[(t as isize - lag) as usize].conj();
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Cross-correlation of two CIRs over the full `2L - 1` lag support.
pub fn cir_xcorr_fingerprint(cir_i: &Cir, cir_j: &Cir) -> Result<FingerprintVector> {
    if cir_i.len() != cir_j.len() {
        return Err(Error::arg(format!(
            "CIR lengths differ: {} vs {}",
            cir_i.len(),
            cir_j.len()
        )));
    }
    if cir_i.tap_period != cir_j.tap_period {
        return Err(Error::arg("CIR tap periods differ"));
    }
    let values = xcorr(&cir_i.taps, &cir_j.taps, cir_i.len() - 1)?;
    FingerprintVector::new(
        FingerprintKind::CirXcorr,
        values,
        FingerprintMeta::default(),
    )
}

/// Mean received power `(1/N) Σ |y|²`.
pub fn rssi(buf: &SignalBuffer) -> f64 {
    buf.samples.iter().map(|y| y.norm_sqr()).sum::<f64>() / buf.len() as f64
}

/// Phase of `(1/N) Σ y_i · conj(y_j)` in (-π, π]; 0 when the average is 0.
pub fn rspd(buf_i: &SignalBuffer, buf_j: &SignalBuffer) -> Result<f64> {
    if buf_i.len() != buf_j.len() {
        return Err(Error::arg(format!(
            "buffer lengths differ: {} vs {}",
            buf_i.len(),
            buf_j.len()
        )));
    }
    let acc: Complex64 = buf_i
        .samples
        .iter()
        .zip(&buf_j.samples)
        .map(|(a, b)| a * b.conj())
        .sum();
    if acc.norm_sqr() == 0.0 {
        return Ok(0.0);
    }
    Ok(wrap_angle(acc.arg()))
}

/// RSSI of `buf_i` and the phase difference between `buf_i` and `buf_j`.
pub fn rssi_rspd(buf_i: &SignalBuffer, buf_j: &SignalBuffer) -> Result<(f64, f64)> {
    let phase = rspd(buf_i, buf_j)?;
    Ok((rssi(buf_i), phase))
}

/// Cross-correlation of raw received samples of two sensors, divided by
/// the longer buffer length so captures of different length compare.
pub fn rx_xcorr_fingerprint(
    buf_m: &SignalBuffer,
    buf_n: &SignalBuffer,
    max_lag: usize,
) -> Result<FingerprintVector> {
    if buf_m.sample_rate != buf_n.sample_rate {
        return Err(Error::arg("sample rates differ"));
    }
    let norm = buf_m.len().max(buf_n.len()) as f64;
    let values = xcorr(&buf_m.samples, &buf_n.samples, max_lag)?
        .into_iter()
        .map(|v| v / norm)
        .collect();
    FingerprintVector::new(FingerprintKind::RxXcorr, values, FingerprintMeta::default())
}

/// One phase per element pair `(j, j')` of a sensor's array, in pair order.
pub fn phasediff_fingerprint(
    bufs: &[SignalBuffer],
    pairs: &[(usize, usize)],
) -> Result<FingerprintVector> {
    if let Some(b) = bufs.iter().find(|b| b.len() != bufs[0].len()) {
        return Err(Error::arg(format!(
            "element buffers differ in length ({} vs {})",
            b.len(),
            bufs[0].len()
        )));
    }
    let mut phases = Vec::with_capacity(pairs.len());
    for &(j, k) in pairs {
        if j >= bufs.len() || k >= bufs.len() {
            return Err(Error::arg(format!(
                "pair ({j}, {k}) references an element outside 0..{}",
                bufs.len()
            )));
        }
        phases.push(rspd(&bufs[j], &bufs[k])?);
    }
    FingerprintVector::from_real(
        FingerprintKind::PhaseDiff,
        &phases,
        FingerprintMeta::default(),
    )
}

/// All element pairs `(j, k)` with `j < k`, lexicographic.
pub fn all_pairs(elements: usize) -> Vec<(usize, usize)> {
    (0..elements)
        .flat_map(|j| (j + 1..elements).map(move |k| (j, k)))
        .collect()
}

/// Sliding correlation of `rx` against a known `replica`, keeping lags
/// `0..taps` and normalizing by the replica energy.
pub fn estimate_cir(rx: &SignalBuffer, replica: &[Complex64], taps: usize) -> Result<Cir> {
    if taps == 0 || replica.is_empty() {
        return Err(Error::arg(
            "CIR estimation needs a replica and at least one tap",
        ));
    }
    let energy: f64 = replica.iter().map(|r| r.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::arg("replica has zero energy"));
    }
    let max_lag = taps - 1;
    let full = xcorr(
        &rx.samples,
        replica,
        max_lag.min(rx.len().max(replica.len()) - 1),
    )?;
    let center = (full.len() - 1) / 2;
    let mut est: Vec<Complex64> = full[center..].iter().map(|v| v / energy).collect();
    est.resize(taps, Complex64::new(0.0, 0.0));
    Cir::new(est, 1.0 / rx.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn delta(n: usize, at: usize) -> Vec<Complex64> {
        let mut v = vec![c(0.0, 0.0); n];
        v[at] = c(1.0, 0.0);
        v
    }

    #[test]
    fn impulse_autocorrelation() {
        assert_eq!(
            xcorr(&[c(1.0, 0.0)], &[c(1.0, 0.0)], 0).unwrap(),
            vec![c(1.0, 0.0)]
        );
        let d = delta(2, 0);
        assert_eq!(
            xcorr(&d, &d, 1).unwrap(),
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]
        );
    }

    #[test]
    fn pure_shift_peaks_at_positive_lag() {
        let r = xcorr(&delta(4, 2), &delta(4, 0), 3).unwrap();
        let peak = r
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(peak as isize - 3, 2);
        assert_eq!(r[5], c(1.0, 0.0));
    }

    #[test]
    fn two_tap_by_hand() {
        // a = [1, i], b = [1, 1]
        // lag -1: a(0) conj(b(1)) = 1
        // lag  0: a(0) conj(b(0)) + a(1) conj(b(1)) = 1 + i
        // lag +1: a(1) conj(b(0)) = i
        let r = xcorr(&[c(1.0, 0.0), c(0.0, 1.0)], &[c(1.0, 0.0), c(1.0, 0.0)], 1).unwrap();
        assert_eq!(r, vec![c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)]);
    }

    #[test]
    fn xcorr_errors() {
        assert!(xcorr(&[], &[c(1.0, 0.0)], 0).is_err());
        assert!(xcorr(&[c(1.0, 0.0)], &[c(1.0, 0.0)], 1).is_err());
    }

    #[test]
    fn cir_xcorr_single_tap() {
        let h = Cir::new(vec![c(0.6, -0.8), c(0.0, 0.0), c(0.0, 0.0)], 1e-7).unwrap();
        let f = cir_xcorr_fingerprint(&h, &h).unwrap();
        assert_eq!(f.dim(), 5);
        assert!((f.values()[2] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(f
            .values()
            .iter()
            .enumerate()
            .all(|(i, v)| i == 2 || v.norm() == 0.0));
    }

    #[test]
    fn cir_xcorr_delay_peaks_at_negative_lag() {
        let hi = Cir::new(
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            1.0,
        )
        .unwrap();
        let hj = Cir::new(
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            1.0,
        )
        .unwrap();
        let f = cir_xcorr_fingerprint(&hi, &hj).unwrap();
        // index L - 1 + lag with L = 4, k = 2 -> lag -2
        assert_eq!(f.values()[1], c(1.0, 0.0));
        let short = Cir::new(vec![c(1.0, 0.0)], 1.0).unwrap();
        assert!(cir_xcorr_fingerprint(&hi, &short).is_err());
    }

    #[test]
    fn rssi_and_rspd_by_hand() {
        let b = SignalBuffer::new(vec![c(1.0, 0.0), c(0.0, 1.0)], 1.0).unwrap();
        let (p, ph) = rssi_rspd(&b, &b).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(ph, 0.0);
        let i = SignalBuffer::new(vec![c(1.0, 0.0); 2], 1.0).unwrap();
        let j = SignalBuffer::new(vec![c(0.0, 1.0); 2], 1.0).unwrap();
        assert!((rspd(&i, &j).unwrap() + PI / 2.0).abs() < 1e-15);
        let short = SignalBuffer::new(vec![c(1.0, 0.0)], 1.0).unwrap();
        assert!(rspd(&i, &short).is_err());
    }

    #[test]
    fn rspd_never_returns_minus_pi() {
        let a = SignalBuffer::new(vec![c(-1.0, 0.0)], 1.0).unwrap();
        let b = SignalBuffer::new(vec![c(1.0, 0.0)], 1.0).unwrap();
        assert_eq!(rspd(&a, &b).unwrap(), PI);
        let a = SignalBuffer::new(vec![c(-1.0, -0.0)], 1.0).unwrap();
        assert_eq!(rspd(&a, &b).unwrap(), PI);
    }

    #[test]
    fn rx_xcorr_peaks_at_zero_for_self() {
        let s: Vec<Complex64> = (0..32)
            .map(|k| c(((k * 7) % 5) as f64 - 2.0, (k % 3) as f64))
            .collect();
        let b = SignalBuffer::new(s.clone(), 1e6).unwrap();
        let f = rx_xcorr_fingerprint(&b, &b, 4).unwrap();
        let peak = f
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(peak, 4);
        let mut shifted = vec![c(0.0, 0.0); 3];
        shifted.extend_from_slice(&s[..29]);
        let bs = SignalBuffer::new(shifted, 1e6).unwrap();
        let g = rx_xcorr_fingerprint(&b, &bs, 4).unwrap();
        let peak = g
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(peak as isize - 4, -3);
        let other_rate = SignalBuffer::new(s, 2e6).unwrap();
        assert!(rx_xcorr_fingerprint(&b, &other_rate, 4).is_err());
    }

    #[test]
    fn phasediff_identical_buffers() {
        let b = SignalBuffer::new(vec![c(0.3, 0.4), c(-1.0, 0.2)], 1.0).unwrap();
        let f = phasediff_fingerprint(&[b.clone(), b.clone()], &[(0, 1)]).unwrap();
        assert_eq!(f.real_values(), vec![0.0]);
        assert!(phasediff_fingerprint(&[b.clone(), b], &[(0, 2)]).is_err());
    }

    #[test]
    fn estimate_cir_identity_channel() {
        let replica: Vec<Complex64> = (0..16)
            .map(|k| Complex64::from_polar(1.0, 0.7 * (k * k) as f64))
            .collect();
        let rx = SignalBuffer::new(replica.clone(), 1e6).unwrap();
        let h = estimate_cir(&rx, &replica, 4).unwrap();
        assert!((h.taps[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn all_pairs_order() {
        assert_eq!(all_pairs(3), vec![(0, 1), (0, 2), (1, 2)]);
    }
}
