use std::f64::consts::PI;

use fingerloc::geom::build_uniform_grid;
use fingerloc::rng::{normal, SeedMixer};
use fingerloc::simkit::{simulate_binary_sensor, simulate_pdr, SensorCoverage};
use fingerloc::statfit::{fit_gamma, fit_vonmises, learn_detection_map, DetectionObservation};
use fingerloc::Position;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

fn coverage() -> SensorCoverage {
    SensorCoverage {
        sensor_pos: Position::new(0.0, 0.0),
        p_detect_moving: vec![(1.0, 0.95), (2.0, 0.7), (3.0, 0.3)],
        p_detect_static: 0.1,
    }
}

/// `true` when `hits` of `n` Bernoulli(p) draws lie within 4 standard deviations.
fn binomial_ok(hits: usize, n: usize, p: f64) -> bool {
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (hits as f64 - n as f64 * p).abs() <= 4.0 * sd
}

#[test]
fn sensor_detection_rates_match_coverage() {
    let cov = coverage();
    let n = 20_000;
    for (user, moving, p) in [
        (Position::new(1.5, 0.0), true, 0.7),
        (Position::new(0.5, 0.5), true, 0.95),
        (Position::new(2.5, 0.0), true, 0.3),
        (Position::new(1.5, 0.0), false, 0.1),
    ] {
        let hits = (0..n as u64)
            .filter(|s| simulate_binary_sensor(&user, moving, &cov, *s))
            .count();
        assert!(binomial_ok(hits, n, p), "p={p}: {hits}/{n}");
    }
    let far = (0..1000u64)
        .filter(|s| simulate_binary_sensor(&Position::new(5.0, 0.0), true, &cov, *s))
        .count();
    assert_eq!(far, 0);
}

#[test]
fn learned_detection_map_recovers_rates() {
    let cov = coverage();
    let grid = build_uniform_grid(Position::new(0.0, 0.0), 4, 1, 1.0).unwrap();
    let mut obs = Vec::new();
    for (g, p) in grid.points().iter().enumerate() {
        for s in 0..4000u64 {
            let seed = SeedMixer::new(s).word(g as u64).finish();
            obs.push(DetectionObservation {
                grid_index: g,
                moving: true,
                bit: simulate_binary_sensor(p, true, &cov, seed),
            });
        }
    }
    let map = learn_detection_map(&obs, &grid).unwrap();
    for (g, p) in grid.points().iter().enumerate() {
        let truth = cov.probability(p, true);
        let sd = (truth * (1.0 - truth) / 4000.0).sqrt().max(1e-3);
        assert!(
            (map.p_detect[g] - truth).abs() < 4.0 * sd,
            "cell {g}: {} vs {truth}",
            map.p_detect[g]
        );
    }
}

#[test]
fn pdr_noise_has_the_requested_spread() {
    let path: Vec<Position> = (0..20_001)
        .map(|i| Position::new(0.5 * i as f64, (i % 3) as f64))
        .collect();
    let sigma = 0.2;
    let steps = simulate_pdr(&path, sigma, 3);
    assert_eq!(steps.len(), 20_000);
    let resid: Vec<f64> = steps
        .iter()
        .zip(path.windows(2))
        .flat_map(|((dx, dy), w)| [dx - (w[1].x - w[0].x), dy - (w[1].y - w[0].y)])
        .collect();
    let n = resid.len() as f64;
    let mean = resid.iter().sum::<f64>() / n;
    let sd = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 4.0 * sigma / n.sqrt());
    // sample standard deviation has standard error sigma / sqrt(2n)
    assert!((sd - sigma).abs() < 4.0 * sigma / (2.0 * n).sqrt());
    assert!(simulate_pdr(&path[..1], sigma, 3).is_empty());
}

#[test]
fn gamma_fit_recovers_parameters() {
    let mut rng = SeedMixer::new(21).rng();
    for (shape, scale) in [(2.0, 3.0), (9.0, 0.5), (0.8, 10.0)] {
        let dist = Gamma::new(shape, scale).unwrap();
        let xs: Vec<f64> = (0..20_000).map(|_| dist.sample(&mut rng)).collect();
        let fit = fit_gamma(&xs).unwrap();
        assert!(
            (fit.shape / shape - 1.0).abs() < 0.05,
            "shape {} vs {shape}",
            fit.shape
        );
        assert!((fit.shape * fit.scale / (shape * scale) - 1.0).abs() < 0.03);
    }
}

#[test]
fn vonmises_fit_recovers_parameters() {
    let mut rng = SeedMixer::new(22).rng();
    for (mu, kappa) in [(0.5, 4.0), (-2.9, 12.0), (PI - 0.05, 1.5)] {
        // inverse-CDF sampling on a fine grid
        let n_grid = 20_000;
        let dens: Vec<f64> = (0..n_grid)
            .map(|k| {
                (kappa * ((-PI + (k as f64 + 0.5) * 2.0 * PI / n_grid as f64) - mu).cos()).exp()
            })
            .collect();
        let total: f64 = dens.iter().sum();
        let mut cdf = Vec::with_capacity(n_grid);
        let mut acc = 0.0;
        for d in &dens {
            acc += d / total;
            cdf.push(acc);
        }
        let xs: Vec<f64> = (0..20_000)
            .map(|_| {
                let u: f64 = rng.random();
                let k = cdf.partition_point(|c| *c < u).min(n_grid - 1);
                -PI + (k as f64 + 0.5) * 2.0 * PI / n_grid as f64
            })
            .collect();
        let fit = fit_vonmises(&xs).unwrap();
        let dmu = (fit.mean - mu + PI).rem_euclid(2.0 * PI) - PI;
        assert!(dmu.abs() < 0.05, "mean {} vs {mu}", fit.mean);
        assert!(
            (fit.concentration / kappa - 1.0).abs() < 0.06,
            "kappa {} vs {kappa}",
            fit.concentration
        );
    }
}

#[test]
fn normal_draws_have_unit_moments() {
    let mut rng = SeedMixer::new(5).rng();
    let xs: Vec<f64> = (0..50_000).map(|_| normal(&mut rng, 2.0)).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 4.0 * 2.0 / n.sqrt());
    assert!((var / 4.0 - 1.0).abs() < 4.0 * (2.0 / n).sqrt());
}
