//! Learning-phase statistics: the per-location distributions and
//! regression models that make up a radio map.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Grid, Position};
use crate::linalg::{Cholesky, HermitianCholesky};
use crate::special::{bessel_ratio_a1, ln_bessel_i0, ln_gamma};

/// Default relative diagonal loading for [`fit_gaussian`].
pub const DEFAULT_LOADING_EPS: f64 = 1e-3;
/// Concentration assigned to zero-dispersion phase samples.
pub const KAPPA_MAX: f64 = 1000.0;
/// Resultant length above which the concentration saturates at [`KAPPA_MAX`].
pub const RESULTANT_CAP: f64 = 1.0 - 1e-6;

/// Complex Gaussian model of one fingerprint at one location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianStats {
    pub mean: Vec<Complex64>,
    /// Row-major `dim x dim` Hermitian covariance, loading included.
    pub covariance: Vec<Complex64>,
    /// Diagonal regularizer that was added to the sample covariance.
    pub loading: f64,
}

impl GaussianStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Factorizes the covariance once for repeated likelihood evaluation.
    pub fn factorize(&self) -> Result<GaussianModel> {
        let chol = HermitianCholesky::factor(&self.covariance, self.dim())?;
        let log_norm = -(self.dim() as f64) * PI.ln() - chol.ln_det();
        Ok(GaussianModel {
            mean: self.mean.clone(),
            chol,
            log_norm,
        })
    }
}

/// A [`GaussianStats`] with its covariance factorized.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    mean: Vec<Complex64>,
    chol: HermitianCholesky,
    log_norm: f64,
}

impl GaussianModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Circularly-symmetric complex Gaussian log-density
    /// `-d ln π - ln det R - (f - m)^H R^{-1} (f - m)`.
    pub fn loglik(&self, f: &[Complex64]) -> Result<f64> {
        if f.len() != self.dim() {
            return Err(Error::arg(format!(
                "fingerprint dim {} does not match model dim {}",
                f.len(),
                self.dim()
            )));
        }
        let diff: Vec<Complex64> = f.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        Ok(self.log_norm - self.chol.quad_form(&diff))
    }
}

/// Sample mean and (divide-by-n) sample covariance with diagonal loading
/// `loading_eps * trace(cov) / dim`, or `loading_eps` if the trace is 0.
pub fn fit_gaussian(samples: &[Vec<Complex64>], loading_eps: f64) -> Result<GaussianStats> {
    let first = samples
        .first()
        .ok_or_else(|| Error::arg("cannot fit a Gaussian to an empty sample set"))?;
    let d = first.len();
    if d == 0 {
        return Err(Error::arg("samples must have positive dimension"));
    }
    if samples.iter().any(|s| s.len() != d) {
        return Err(Error::arg("samples must have equal dimension"));
    }
    if !(loading_eps >= 0.0) {
        return Err(Error::arg("loading_eps must be non-negative"));
    }
    let n = samples.len() as f64;
    let mut mean = vec![Complex64::new(0.0, 0.0); d];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = vec![Complex64::new(0.0, 0.0); d * d];
    for s in samples {
        let c: Vec<Complex64> = s.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] += c[i] * c[j].conj();
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= n);
    // enforce exact Hermitian symmetry
    for i in 0..d {
        cov[i * d + i].im = 0.0;
        for j in i + 1..d {
            let avg = (cov[i * d + j] + cov[j * d + i].conj()) * 0.5;
            cov[i * d + j] = avg;
            cov[j * d + i] = avg.conj();
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i * d + i].re).sum();
    let loading = if trace > 0.0 {
        loading_eps * trace / d as f64
    } else {
        loading_eps
    };
    for i in 0..d {
        cov[i * d + i].re += loading;
    }
    Ok(GaussianStats {
        mean,
        covariance: cov,
        loading,
    })
}

/// Log-density of `f` under `stats`. Factorizes on every call; use
/// [`GaussianStats::factorize`] for repeated evaluation.
pub fn gaussian_loglik(f: &[Complex64], stats: &GaussianStats) -> Result<f64> {
    if f.len() != stats.dim() {
        return Err(Error::arg(format!(
            "fingerprint dim {} does not match model dim {}",
            f.len(),
            stats.dim()
        )));
    }
    stats.factorize()?.loglik(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub scale: f64,
}

/// Method-of-moments Gamma fit: `θ = var / mean`, `β = mean / θ`, with the
/// unbiased sample variance.
pub fn fit_gamma(samples: &[f64]) -> Result<GammaParams> {
    if samples.len() < 2 {
        return Err(Error::arg("Gamma fit needs at least two samples"));
    }
    if let Some(x) = samples.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::arg(format!(
            "Gamma samples must be positive, got {x}"
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) {
        return Err(Error::arg("Gamma samples have zero variance"));
    }
    let scale = var / mean;
    Ok(GammaParams {
        shape: mean / scale,
        scale,
    })
}

/// `(β-1) ln x - x/θ - ln Γ(β) - β ln θ`.
pub fn gamma_logpdf(x: f64, p: &GammaParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::arg(format!("Gamma density needs x > 0, got {x}")));
    }
    Ok((p.shape - 1.0) * x.ln() - x / p.scale - ln_gamma(p.shape) - p.shape * p.scale.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VonMisesParams {
    /// Mean direction, radians in (-π, π].
    pub mean: f64,
    /// Concentration κ ≥ 0.
    pub concentration: f64,
}

/// Circular mean and concentration of a set of angles.
///
/// κ starts from the rational approximation `R̄(2 - R̄²)/(1 - R̄²)` and is
/// polished by Newton steps on `I₁(κ)/I₀(κ) = R̄`, which removes the
/// approximation's bias at moderate κ. `R̄ ≥ 1 - 1e-6` saturates at
/// [`KAPPA_MAX`]; `R̄ = 0` gives κ = 0 and μ = 0.
pub fn fit_vonmises(angles: &[f64]) -> Result<VonMisesParams> {
    if angles.is_empty() {
        return Err(Error::arg("von-Mises fit needs at least one angle"));
    }
    let n = angles.len() as f64;
    let (s, c) = angles
        .iter()
        .fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    let rbar = s.hypot(c) / n;
    if rbar < 1e-12 {
        return Ok(VonMisesParams {
            mean: 0.0,
            concentration: 0.0,
        });
    }
    let mean = crate::fingerprint::wrap_angle(s.atan2(c));
    Ok(VonMisesParams {
        mean,
        concentration: concentration_from_resultant(rbar),
    })
}

fn concentration_from_resultant(rbar: f64) -> f64 {
    if rbar >= RESULTANT_CAP {
        return KAPPA_MAX;
    }
    let r2 = rbar * rbar;
    let mut kappa = (rbar * (2.0 - r2) / (1.0 - r2)).min(KAPPA_MAX);
    for _ in 0..50 {
        let a = bessel_ratio_a1(kappa);
        let slope = 1.0 - a / kappa - a * a;
        if !(slope > 0.0) {
            break;
        }
        let next = (kappa - (a - rbar) / slope).clamp(0.5 * kappa, KAPPA_MAX);
        let done = (next - kappa).abs() <= 1e-12 * kappa;
        kappa = next;
        if done {
            break;
        }
    }
    kappa
}

/// `κ cos(x - μ) - ln 2π - ln I₀(κ)`.
pub fn vonmises_logpdf(x: f64, p: &VonMisesParams) -> f64 {
    p.concentration * (x - p.mean).cos() - (2.0 * PI).ln() - ln_bessel_i0(p.concentration)
}

/// Detection probability of one binary sensor at every grid location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionMap {
    pub p_detect: Vec<f64>,
}

impl DetectionMap {
    pub fn len(&self) -> usize {
        self.p_detect.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_detect.is_empty()
    }
}

/// One training observation of a binary sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionObservation {
    pub grid_index: usize,
    pub moving: bool,
    pub bit: bool,
}

/// Laplace-smoothed detection frequency `(k + 1) / (n + 2)` per cell,
/// pooling moving and static observations.
pub fn learn_detection_map(
    observations: &[DetectionObservation],
    grid: &Grid,
) -> Result<DetectionMap> {
    let mut hits = vec![0usize; grid.len()];
    let mut total = vec![0usize; grid.len()];
    for o in observations {
        if o.grid_index >= grid.len() {
            return Err(Error::arg(format!(
                "observation grid index {} out of range for {} points",
                o.grid_index,
                grid.len()
            )));
        }
        total[o.grid_index] += 1;
        hits[o.grid_index] += o.bit as usize;
    }
    let p_detect = hits
        .iter()
        .zip(&total)
        .map(|(&k, &n)| (k as f64 + 1.0) / (n as f64 + 2.0))
        .collect();
    Ok(DetectionMap { p_detect })
}

/// `10 log10(F) = beta1 * log10(f) + beta2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLinearModel {
    pub beta1: f64,
    pub beta2: f64,
}

impl LogLinearModel {
    pub fn predict_db(&self, freq: f64) -> f64 {
        self.beta1 * freq.log10() + self.beta2
    }
}

/// Ordinary least squares of `values_db` on `log10(freqs)`.
pub fn fit_loglinear(freqs: &[f64], values_db: &[f64]) -> Result<LogLinearModel> {
    if freqs.len() != values_db.len() {
        return Err(Error::arg("frequency and value lists differ in length"));
    }
    if freqs.iter().any(|f| !(*f > 0.0)) {
        return Err(Error::arg("frequencies must be positive"));
    }
    let xs: Vec<f64> = freqs.iter().map(|f| f.log10()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = values_db.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let distinct = xs.iter().any(|x| (x - xs[0]).abs() > 0.0);
    if xs.len() < 2 || !distinct || !(sxx > 0.0) {
        return Err(Error::arg(
            "log-linear fit needs at least two distinct frequencies",
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(values_db)
        .map(|(x, y)| (x - xm) * (y - ym))
        .sum();
    let beta1 = sxy / sxx;
    Ok(LogLinearModel {
        beta1,
        beta2: ym - beta1 * xm,
    })
}

/// Gaussian-kernel hyper-parameters:
/// `k(r) = signal_var * exp(-r² / (2 length_scale²)) + nugget * 1{r = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrigingHyper {
    pub length_scale: f64,
    pub signal_var: f64,
    pub nugget: f64,
}

impl KrigingHyper {
    /// `ℓ = 2 * spacing`, `σ_f² = var(values)` (1 if the values are
    /// constant), `σ_n² = 1e-6 σ_f²`.
    pub fn default_for(values: &[f64], spacing: f64) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let signal_var = if var > 0.0 { var } else { 1.0 };
        Self {
            length_scale: 2.0 * spacing,
            signal_var,
            nugget: 1e-6 * signal_var,
        }
    }

    fn kernel(&self, a: &Position, b: &Position) -> f64 {
        let r2 = a.distance_sq(b);
        let mut k = self.signal_var * (-r2 / (2.0 * self.length_scale * self.length_scale)).exp();
        if r2 == 0.0 {
            k += self.nugget;
        }
        k
    }
}

/// Zero-prior-mean Gaussian-process regression model.
#[derive(Debug, Clone)]
pub struct KrigingModel {
    locations: Vec<Position>,
    values: Vec<f64>,
    hyper: KrigingHyper,
    weights: Vec<f64>,
    chol: Cholesky,
}

impl KrigingModel {
    pub fn hyper(&self) -> &KrigingHyper {
        &self.hyper
    }

    pub fn locations(&self) -> &[Position] {
        &self.locations
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Log marginal likelihood of the training values.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let fit: f64 = self
            .values
            .iter()
            .zip(&self.weights)
            .map(|(y, a)| y * a)
            .sum();
        let n = self.values.len() as f64;
        -0.5 * fit - 0.5 * self.chol.ln_det() - 0.5 * n * (2.0 * PI).ln()
    }
}

pub fn kriging_fit(
    locations: &[Position],
    values: &[f64],
    hyper: KrigingHyper,
) -> Result<KrigingModel> {
    if locations.is_empty() {
        return Err(Error::arg("Kriging needs at least one training point"));
    }
    if locations.len() != values.len() {
        return Err(Error::arg("Kriging locations and values differ in length"));
    }
    if !(hyper.length_scale > 0.0) || !(hyper.signal_var > 0.0) || !(hyper.nugget >= 0.0) {
        return Err(Error::arg(format!(
            "invalid Kriging hyper-parameters {hyper:?}"
        )));
    }
    let n = locations.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            k[i * n + j] = hyper.kernel(&locations[i], &locations[j]);
        }
    }
    let chol = Cholesky::factor(&k, n).map_err(|e| {
        Error::Numeric(format!(
            "Kriging kernel matrix is singular, raise the nugget ({e})"
        ))
    })?;
    let weights = chol.solve(values);
    Ok(KrigingModel {
        locations: locations.to_vec(),
        values: values.to_vec(),
        hyper,
        weights,
        chol,
    })
}

/// Posterior mean and variance at `query`.
pub fn kriging_predict(model: &KrigingModel, query: &Position) -> (f64, f64) {
    let ks: Vec<f64> = model
        .locations
        .iter()
        .map(|p| model.hyper.kernel(p, query))
        .collect();
    let mean = ks.iter().zip(&model.weights).map(|(k, w)| k * w).sum();
    let v = model.chol.forward(&ks);
    let prior = model.hyper.kernel(query, query);
    let var = (prior - v.iter().map(|x| x * x).sum::<f64>()).max(0.0);
    (mean, var)
}

/// Picks the length-scale maximizing the log marginal likelihood over a
/// log-spaced candidate set with three candidates per decade in
/// `[min_scale, max_scale]`.
pub fn select_length_scale(
    locations: &[Position],
    values: &[f64],
    base: KrigingHyper,
    min_scale: f64,
    max_scale: f64,
) -> Result<KrigingHyper> {
    if !(min_scale > 0.0 && max_scale >= min_scale) {
        return Err(Error::arg("invalid length-scale search range"));
    }
    let steps = ((max_scale / min_scale).log10() * 3.0).ceil() as usize;
    let mut best: Option<(f64, KrigingHyper)> = None;
    for s in 0..=steps {
        let scale = (min_scale * 10f64.powf(s as f64 / 3.0)).min(max_scale);
        let hyper = KrigingHyper {
            length_scale: scale,
            ..base
        };
        let Ok(model) = kriging_fit(locations, values, hyper) else {
            continue;
        };
        let lml = model.log_marginal_likelihood();
        if best.as_ref().is_none_or(|(b, _)| lml > *b) {
            best = Some((lml, hyper));
        }
    }
    best.map(|b| b.1).ok_or_else(|| {
        Error::Numeric("no length-scale candidate gave a positive-definite kernel".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::build_uniform_grid;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identical_samples_give_loading_only() {
        let s = vec![c(1.0), Complex64::new(0.0, 2.0)];
        let stats = fit_gaussian(&vec![s.clone(); 5], 1e-3).unwrap();
        assert_eq!(stats.mean, s);
        assert_eq!(stats.loading, 1e-3);
        assert_eq!(stats.covariance[0], c(1e-3));
        assert_eq!(stats.covariance[1], c(0.0));
    }

    #[test]
    fn scalar_pair_covariance() {
        let stats = fit_gaussian(&[vec![c(1.0)], vec![c(-1.0)]], 1e-3).unwrap();
        assert_eq!(stats.mean, vec![c(0.0)]);
        assert!((stats.loading - 1e-3).abs() < 1e-15);
        assert!((stats.covariance[0].re - (1.0 + stats.loading)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_fit_rejects_empty() {
        assert!(fit_gaussian(&[], 1e-3).is_err());
    }

    #[test]
    fn loglik_scalar_cases() {
        let unit = GaussianStats {
            mean: vec![c(0.0)],
            covariance: vec![c(1.0)],
            loading: 0.0,
        };
        assert!((gaussian_loglik(&[c(0.0)], &unit).unwrap() + PI.ln()).abs() < 1e-15);
        let two = GaussianStats {
            mean: vec![c(0.0)],
            covariance: vec![c(2.0)],
            loading: 0.0,
        };
        let expected = -PI.ln() - 2f64.ln() - 0.5;
        assert!((gaussian_loglik(&[c(1.0)], &two).unwrap() - expected).abs() < 1e-15);
        assert!(gaussian_loglik(&[c(1.0), c(0.0)], &two).is_err());
    }

    #[test]
    fn loglik_non_pd_is_numeric_error() {
        let bad = GaussianStats {
            mean: vec![c(0.0)],
            covariance: vec![c(-1.0)],
            loading: 0.0,
        };
        assert!(matches!(
            gaussian_loglik(&[c(0.0)], &bad),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn gamma_moments_by_hand() {
        let p = fit_gamma(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((p.scale - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.shape - 3.75).abs() < 1e-14);
    }

    #[test]
    fn gamma_fit_errors() {
        assert!(fit_gamma(&[2.0, 2.0]).is_err());
        assert!(fit_gamma(&[1.0]).is_err());
        assert!(fit_gamma(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn gamma_logpdf_closed_forms() {
        let exp1 = GammaParams {
            shape: 1.0,
            scale: 1.0,
        };
        assert!((gamma_logpdf(1.0, &exp1).unwrap() + 1.0).abs() < 1e-14);
        let g2 = GammaParams {
            shape: 2.0,
            scale: 1.0,
        };
        assert!((gamma_logpdf(2.0, &g2).unwrap() - (2f64.ln() - 2.0)).abs() < 1e-14);
        assert!(gamma_logpdf(0.0, &g2).is_err());
    }

    #[test]
    fn vonmises_degenerate_fits() {
        let p = fit_vonmises(&[0.3; 7]).unwrap();
        assert!((p.mean - 0.3).abs() < 1e-12);
        assert_eq!(p.concentration, KAPPA_MAX);
        let q = fit_vonmises(&[0.0, PI / 2.0, PI, 3.0 * PI / 2.0]).unwrap();
        assert_eq!(q.concentration, 0.0);
        assert_eq!(q.mean, 0.0);
        assert!(fit_vonmises(&[]).is_err());
    }

    #[test]
    fn vonmises_logpdf_uniform_and_peak() {
        let uni = VonMisesParams {
            mean: 0.4,
            concentration: 0.0,
        };
        for x in [-3.0, 0.0, 1.0, 3.1] {
            assert!((vonmises_logpdf(x, &uni) + (2.0 * PI).ln()).abs() < 1e-15);
        }
        let p = VonMisesParams {
            mean: 0.4,
            concentration: 1.0,
        };
        let i0: f64 = (0..30)
            .map(|m| 0.25f64.powi(m) / (1..=m).map(|k| k as f64).product::<f64>().powi(2))
            .sum();
        let expected = 1.0 - (2.0 * PI).ln() - i0.ln();
        assert!((vonmises_logpdf(0.4, &p) - expected).abs() < 1e-14);
    }

    #[test]
    fn detection_map_smoothing() {
        let g = build_uniform_grid(Position::default(), 2, 1, 1.0).unwrap();
        let empty = learn_detection_map(&[], &g).unwrap();
        assert_eq!(empty.p_detect, vec![0.5, 0.5]);
        let all: Vec<_> = (0..10)
            .map(|_| DetectionObservation {
                grid_index: 0,
                moving: true,
                bit: true,
            })
            .collect();
        assert_eq!(
            learn_detection_map(&all, &g).unwrap().p_detect[0],
            11.0 / 12.0
        );
        let half: Vec<_> = (0..10)
            .map(|i| DetectionObservation {
                grid_index: 1,
                moving: i % 3 == 0,
                bit: i < 5,
            })
            .collect();
        assert_eq!(learn_detection_map(&half, &g).unwrap().p_detect[1], 0.5);
        let oob = [DetectionObservation {
            grid_index: 2,
            moving: true,
            bit: true,
        }];
        assert!(learn_detection_map(&oob, &g).is_err());
    }

    #[test]
    fn loglinear_cases() {
        let flat = fit_loglinear(&[1e9, 2e9, 3e9], &[-7.0; 3]).unwrap();
        assert!(flat.beta1.abs() < 1e-12);
        assert!((flat.beta2 + 7.0).abs() < 1e-12);
        let two = fit_loglinear(&[1e9, 1e10], &[-60.0, -80.0]).unwrap();
        assert!((two.beta1 + 20.0).abs() < 1e-9);
        assert!((two.beta2 - 120.0).abs() < 1e-9);
        assert!(fit_loglinear(&[1e9, 1e9], &[1.0, 2.0]).is_err());
        assert!(fit_loglinear(&[1e9], &[1.0]).is_err());
    }

    #[test]
    fn kriging_interpolates_training_point() {
        let locs = [
            Position::new(0.0, 0.0),
            Position::new(1.0, 0.5),
            Position::new(3.0, 1.0),
        ];
        let vals = [1.0, -2.0, 0.5];
        let hyper = KrigingHyper {
            length_scale: 1.0,
            signal_var: 2.0,
            nugget: 0.0,
        };
        let m = kriging_fit(&locs, &vals, hyper).unwrap();
        for (p, v) in locs.iter().zip(vals) {
            let (mean, var) = kriging_predict(&m, p);
            assert!((mean - v).abs() < 1e-6);
            assert!(var <= 1e-6 * hyper.signal_var);
        }
    }

    #[test]
    fn kriging_reverts_to_prior_far_away() {
        let hyper = KrigingHyper {
            length_scale: 1.0,
            signal_var: 3.0,
            nugget: 0.0,
        };
        let m = kriging_fit(&[Position::default()], &[5.0], hyper).unwrap();
        let (mean, var) = kriging_predict(&m, &Position::new(100.0, 0.0));
        assert!(mean.abs() < 1e-12);
        assert!((var - 3.0).abs() < 1e-12);
    }

    #[test]
    fn kriging_rejects_singular_kernel() {
        let hyper = KrigingHyper {
            length_scale: 1.0,
            signal_var: 1.0,
            nugget: 0.0,
        };
        let p = Position::default();
        assert!(matches!(
            kriging_fit(&[p, p], &[1.0, 1.0], hyper),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn length_scale_search_returns_candidate() {
        let g = build_uniform_grid(Position::default(), 5, 5, 1.0).unwrap();
        let vals: Vec<f64> = g
            .points()
            .iter()
            .map(|p| (p.x * 0.7).sin() + 0.3 * p.y)
            .collect();
        let base = KrigingHyper::default_for(&vals, 1.0);
        let h = select_length_scale(g.points(), &vals, base, 0.5, 10.0).unwrap();
        assert!(h.length_scale >= 0.5 && h.length_scale <= 10.0);
    }
}
