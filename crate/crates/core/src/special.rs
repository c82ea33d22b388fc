//! Special functions needed by the Gamma and von-Mises densities.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Crossover between the power series and the asymptotic expansion.
const ASYMPTOTIC_FROM: f64 = 15.0;

/// `ln I₀(κ)`, the log of the modified Bessel function of the first kind
/// of order zero, for `κ ≥ 0`.
///
/// Power series below κ = 15, large-argument asymptotic expansion above
/// with the leading `e^κ` kept in log form.
pub fn ln_bessel_i0(kappa: f64) -> f64 {
    ln_bessel_i(0, kappa.abs())
}

/// `ln I₁(κ)` for `κ > 0`.
pub fn ln_bessel_i1(kappa: f64) -> f64 {
    ln_bessel_i(1, kappa)
}

/// `I₁(κ) / I₀(κ)`: the mean resultant length of a von-Mises(κ) law.
pub fn bessel_ratio_a1(kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    (ln_bessel_i1(kappa) - ln_bessel_i0(kappa)).exp()
}

fn ln_bessel_i(order: u32, x: f64) -> f64 {
    if x < ASYMPTOTIC_FROM {
        return bessel_i_series(order, x).ln();
    }
    // I_v(x) ~ e^x / sqrt(2 pi x) * sum_n (-1)^n prod_k (4v^2 - (2k-1)^2) / (n! (8x)^n)
    let mu = 4.0 * (order * order) as f64;
    let inv8x = 1.0 / (8.0 * x);
    let mut term = 1.0f64;
    let mut sum = 1.0;
    for n in 1..80 {
        let odd = (2 * n - 1) as f64;
        let next = -term * (mu - odd * odd) * inv8x / n as f64;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    x - 0.5 * (2.0 * PI * x).ln() + sum.ln()
}

/// `I_v(x) = Σ (x/2)^(2m+v) / (m! (m+v)!)`.
fn bessel_i_series(order: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = half.powi(order as i32);
    for k in 1..=order {
        term /= k as f64;
    }
    let q = half * half;
    let mut sum = term;
    let mut m = 1.0;
    loop {
        term *= q / (m * (m + order as f64));
        sum += term;
        if term <= 1e-17 * sum {
            return sum;
        }
        m += 1.0;
    }
}

/// `I₀(κ)` by direct power-series summation.
pub fn bessel_i0_series(kappa: f64) -> f64 {
    bessel_i_series(0, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12, "n = {n}");
            fact *= n as f64;
        }
    }

    #[test]
    fn ln_gamma_half() {
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-13);
        assert!((ln_gamma(1.5) - (0.5 * PI.sqrt()).ln()).abs() < 1e-13);
        // Γ(0.1) = 9.513507698668732
        assert!((ln_gamma(0.1) - 9.513_507_698_668_732f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bessel_reference_values() {
        // Abramowitz & Stegun table 9.8
        assert!((bessel_i0_series(1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((bessel_i0_series(5.0) - 27.239_871_823_604_45).abs() < 1e-11);
        assert!((ln_bessel_i1(1.0).exp() - 0.565_159_103_992_485).abs() < 1e-14);
        assert_eq!(ln_bessel_i0(0.0), 0.0);
    }

    #[test]
    fn branches_agree_at_crossover() {
        for k in [15.0, 20.0, 30.0] {
            for order in [0, 1] {
                let series = bessel_i_series(order, k).ln();
                let asym = ln_bessel_i(order, k);
                assert!(
                    (series - asym).abs() < 1e-12,
                    "order {order} kappa {k}: {series} vs {asym}"
                );
            }
        }
    }

    #[test]
    fn large_argument_is_finite() {
        let v = ln_bessel_i0(1000.0);
        assert!(v.is_finite());
        assert!((v - (1000.0 - 0.5 * (2.0 * PI * 1000.0).ln())).abs() < 1e-3);
        assert!(bessel_ratio_a1(1000.0) < 1.0);
    }
}
