//! Dynamic estimation: recursive Bayes over the grid with a static/moving
//! mobility model, and a particle filter driven by dead-reckoning steps.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Grid, Position};
use crate::matching::{argmax, threshold_set, LikelihoodMap, MapMode};
use crate::rng::{normal, SeedMixer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityModel {
    /// Probability of staying put during one step.
    pub p_static: f64,
    /// Per-axis acceleration standard deviation, m/s².
    pub accel_sigma: f64,
    /// Step duration, seconds.
    pub dt: f64,
    /// Displacements longer than this (meters) are dropped from the kernel.
    pub max_step: f64,
}

impl Default for MobilityModel {
    fn default() -> Self {
        Self {
            p_static: 0.3,
            accel_sigma: 0.5,
            dt: 1.0,
            max_step: 1.5,
        }
    }
}

impl MobilityModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_static) {
            return Err(Error::arg(format!(
                "p_static must be in [0, 1], got {}",
                self.p_static
            )));
        }
        if !(self.accel_sigma >= 0.0 && self.accel_sigma.is_finite()) {
            return Err(Error::arg("accel_sigma must be finite and non-negative"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::arg("dt must be positive"));
        }
        if !(self.max_step >= 0.0) {
            return Err(Error::arg("max_step must be non-negative"));
        }
        Ok(())
    }

    /// Per-axis displacement standard deviation, `accel_sigma * dt²`.
    pub fn step_sigma(&self) -> f64 {
        self.accel_sigma * self.dt * self.dt
    }
}

/// Dense row-stochastic matrix; `get(from, to)` is `p(u_t = to | u_{t-1} = from)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::arg("transition data is not square"));
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.data[from * self.n..(from + 1) * self.n]
    }
}

/// Mass of N(0, sigma²) on [a, b].
fn normal_mass(a: f64, b: f64, sigma: f64) -> f64 {
    let s = sigma * std::f64::consts::SQRT_2;
    0.5 * (libm::erf(b / s) - libm::erf(a / s))
}

/// Grid transition probabilities for the two-mode mobility model.
///
/// Row `r` is `p_static·δ_r + (1 - p_static)·K_r`, where `K_r` is the
/// Gaussian displacement mass of each destination cell, restricted to
/// cells within `max_step` of `r` and renormalized.
pub fn transition_matrix(grid: &Grid, model: &MobilityModel) -> Result<TransitionMatrix> {
    model.validate()?;
    if !grid.is_uniform() {
        return Err(Error::arg("transition matrix needs a uniform grid"));
    }
    let n = grid.len();
    let h = grid.spacing() / 2.0;
    let sigma = model.step_sigma();
    let mut data = vec![0.0; n * n];
    for r in 0..n {
        let from = grid.point(r);
        let row = &mut data[r * n..(r + 1) * n];
        if sigma > 0.0 {
            for (c, to) in grid.points().iter().enumerate() {
                if from.distance(to) > model.max_step + 1e-9 {
                    continue;
                }
                let dx = to.x - from.x;
                let dy = to.y - from.y;
                row[c] = normal_mass(dx - h, dx + h, sigma) * normal_mass(dy - h, dy + h, sigma);
            }
        }
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut()
                .for_each(|v| *v *= (1.0 - model.p_static) / total);
        } else {
            row[r] = 1.0 - model.p_static;
        }
        row[r] += model.p_static;
    }
    Ok(TransitionMatrix { n, data })
}

/// One step of grid recursive Bayes in the log domain, normalized so the
/// maximum is 0.
pub fn grid_bayes_step(
    prev: &LikelihoodMap,
    trans: &TransitionMatrix,
    obs: &LikelihoodMap,
) -> Result<LikelihoodMap> {
    let n = prev.len();
    if trans.len() != n || obs.len() != n {
        return Err(Error::arg(format!(
            "sizes differ: prior {n}, transition {}, observation {}",
            trans.len(),
            obs.len()
        )));
    }
    let peak = prev
        .values()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = prev.values().iter().map(|v| (v - peak).exp()).collect();
    let mut predicted = vec![0.0; n];
    for (from, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for (to, p) in trans.row(from).iter().enumerate() {
            predicted[to] += w * p;
        }
    }
    let mut values: Vec<f64> = obs
        .values()
        .iter()
        .zip(&predicted)
        .map(|(o, p)| o + p.ln() + peak)
        .collect();
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Numeric(
            "recursive update left no reachable cell".into(),
        ));
    }
    for v in values.iter_mut() {
        *v = if v.is_finite() { *v - top } else { LOG_FLOOR };
    }
    LikelihoodMap::new(obs.grid().clone(), values, MapMode::LogLik)
}

/// Stand-in for ln 0 so unreachable cells keep the map finite.
const LOG_FLOOR: f64 = -1e300;

/// Point estimate and threshold set of a tracking posterior.
pub fn track_estimate(map: &LikelihoodMap, eta: f64) -> (usize, Vec<usize>) {
    (argmax(map.values()), threshold_set(map, eta))
}

/// How a particle cloud is reduced to a single position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointEstimate {
    #[default]
    WeightedMean,
    /// Position of the heaviest particle.
    Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    positions: Vec<Position>,
    weights: Vec<f64>,
}

impl ParticleSet {
    /// Equally weighted particles.
    pub fn new(positions: Vec<Position>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::arg("a particle set needs at least one particle"));
        }
        let w = 1.0 / positions.len() as f64;
        Ok(Self {
            weights: vec![w; positions.len()],
            positions,
        })
    }

    /// Particles with explicit weights, renormalized to sum to one.
    pub fn with_weights(positions: Vec<Position>, weights: Vec<f64>) -> Result<Self> {
        if positions.is_empty() || positions.len() != weights.len() {
            return Err(Error::arg(
                "positions and weights must be nonempty and equally long",
            ));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::arg("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::arg("weights sum to zero"));
        }
        Ok(Self {
            positions,
            weights: weights.iter().map(|w| w / total).collect(),
        })
    }

    /// `count` particles spread uniformly over the grid's bounding box.
    pub fn uniform_over(grid: &Grid, count: usize, seed: u64) -> Result<Self> {
        let b = grid.bounds();
        let mut rng = SeedMixer::new(seed).word(0x5EED).rng();
        let positions = (0..count)
            .map(|_| {
                Position::new(
                    b.min.x + rng.random::<f64>() * (b.max.x - b.min.x),
                    b.min.y + rng.random::<f64>() * (b.max.y - b.min.y),
                )
            })
            .collect();
        Self::new(positions)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn effective_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn estimate(&self, how: PointEstimate) -> Position {
        match how {
            PointEstimate::WeightedMean => {
                let (x, y) = self
                    .positions
                    .iter()
                    .zip(&self.weights)
                    .fold((0.0, 0.0), |(x, y), (p, w)| (x + w * p.x, y + w * p.y));
                Position::new(x, y)
            }
            PointEstimate::Mode => self.positions[argmax(&self.weights)],
        }
    }
}

/// Moves every particle by `step` plus independent Gaussian noise of
/// standard deviation `sigma` per axis. Particle `p` draws from its own
/// stream derived from `(seed, p)`.
pub fn particle_predict(ps: &ParticleSet, step: (f64, f64), sigma: f64, seed: u64) -> ParticleSet {
    let positions = ps
        .positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if sigma > 0.0 {
                let mut rng = SeedMixer::new(seed).word(i as u64).rng();
                p.offset(
                    step.0 + normal(&mut rng, sigma),
                    step.1 + normal(&mut rng, sigma),
                )
            } else {
                p.offset(step.0, step.1)
            }
        })
        .collect();
    ParticleSet {
        positions,
        weights: ps.weights.clone(),
    }
}

/// Likelihood of a position interpolated from the four nearest grid
/// points with normalized inverse-distance weights; a position on a grid
/// point takes that point's likelihood. `lik` is linear-scale.
pub fn interpolated_likelihood(grid: &Grid, lik: &[f64], p: &Position) -> f64 {
    let near = grid.k_nearest(p, 4);
    if let Some(&(i, _)) = near.iter().find(|n| n.1 == 0.0) {
        return lik[i];
    }
    let total: f64 = near.iter().map(|n| 1.0 / n.1).sum();
    near.iter().map(|&(i, d)| lik[i] / d).sum::<f64>() / total
}

/// Reweights particles by the grid likelihood map, resampling when the
/// effective sample size drops below half the particle count.
///
/// Particles are first clamped to the grid's bounding box. Returns the
/// updated set and its point estimate.
pub fn particle_update(
    ps: &ParticleSet,
    loglik: &LikelihoodMap,
    how: PointEstimate,
    seed: u64,
) -> Result<(ParticleSet, Position)> {
    if loglik.mode() != MapMode::LogLik {
        return Err(Error::arg("particle update needs a log-likelihood map"));
    }
    let grid = loglik.grid();
    let peak = loglik
        .values()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let lik: Vec<f64> = loglik.values().iter().map(|v| (v - peak).exp()).collect();
    let bounds = grid.bounds();
    let positions: Vec<Position> = ps.positions.iter().map(|p| bounds.clamp(*p)).collect();
    let weights: Vec<f64> = positions
        .iter()
        .zip(&ps.weights)
        .map(|(p, w)| w * interpolated_likelihood(grid, &lik, p))
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateUpdate {
            log_likelihood: loglik.values().to_vec(),
        });
    }
    let mut next = ParticleSet {
        positions,
        weights: weights.iter().map(|w| w / total).collect(),
    };
    if next.effective_size() < next.len() as f64 / 2.0 {
        next = resample_systematic(&next, seed);
    }
    let est = next.estimate(how);
    Ok((next, est))
}

/// Systematic resampling: one uniform offset, `P` evenly spaced pointers.
pub fn resample_systematic(ps: &ParticleSet, seed: u64) -> ParticleSet {
    let n = ps.len();
    let mut rng = SeedMixer::new(seed).word(0x5A3D).rng();
    let u0: f64 = rng.random::<f64>() / n as f64;
    let mut positions = Vec::with_capacity(n);
    let mut cum = ps.weights[0];
    let mut j = 0;
    for i in 0..n {
        let u = u0 + i as f64 / n as f64;
        while u > cum && j + 1 < n {
            j += 1;
            cum += ps.weights[j];
        }
        positions.push(ps.positions[j]);
    }
    ParticleSet {
        positions,
        weights: vec![1.0 / n as f64; n],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::build_uniform_grid;

    fn flat(grid: &Grid, v: f64) -> LikelihoodMap {
        LikelihoodMap::new(grid.clone(), vec![v; grid.len()], MapMode::LogLik).unwrap()
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn static_model_gives_identity() {
        let g = build_uniform_grid(Position::default(), 3, 3, 1.0).unwrap();
        let m = MobilityModel {
            p_static: 1.0,
            ..MobilityModel::default()
        };
        assert_eq!(
            transition_matrix(&g, &m).unwrap(),
            TransitionMatrix::identity(9)
        );
    }

    #[test]
    fn rows_match_quadrature_and_are_symmetric() {
        let g = build_uniform_grid(Position::default(), 3, 3, 1.0).unwrap();
        let m = MobilityModel {
            p_static: 0.2,
            accel_sigma: 0.7,
            dt: 1.0,
            max_step: 10.0,
        };
        let t = transition_matrix(&g, &m).unwrap();
        let pdf =
            |x: f64| (-(x * x) / (2.0 * 0.49)).exp() / (0.7 * (2.0 * std::f64::consts::PI).sqrt());
        for r in 0..9 {
            assert!((t.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let from = g.point(r);
            let masses: Vec<f64> = g
                .points()
                .iter()
                .map(|to| {
                    let dx = to.x - from.x;
                    let dy = to.y - from.y;
                    simpson(pdf, dx - 0.5, dx + 0.5, 200) * simpson(pdf, dy - 0.5, dy + 0.5, 200)
                })
                .collect();
            let total: f64 = masses.iter().sum();
            for c in 0..9 {
                let expect = 0.8 * masses[c] / total + if c == r { 0.2 } else { 0.0 };
                assert!((t.get(r, c) - expect).abs() < 1e-9, "row {r} col {c}");
            }
        }
        // centre cell 4: reflections in x (3 <-> 5) and y (1 <-> 7)
        assert!((t.get(4, 3) - t.get(4, 5)).abs() < 1e-15);
        assert!((t.get(4, 1) - t.get(4, 7)).abs() < 1e-15);
    }

    #[test]
    fn bayes_step_cases() {
        let g = build_uniform_grid(Position::default(), 2, 2, 1.0).unwrap();
        let m = MobilityModel {
            p_static: 0.5,
            accel_sigma: 1.0,
            dt: 1.0,
            max_step: 10.0,
        };
        let t = transition_matrix(&g, &m).unwrap();
        let out = grid_bayes_step(&flat(&g, -3.0), &t, &flat(&g, -1.0)).unwrap();
        assert!(out.values().iter().all(|v| v.abs() < 1e-12));

        let prev =
            LikelihoodMap::new(g.clone(), vec![-1.0, -2.0, 0.0, -4.0], MapMode::LogLik).unwrap();
        let obs =
            LikelihoodMap::new(g.clone(), vec![-0.5, -0.1, -3.0, -1.0], MapMode::LogLik).unwrap();
        let id = grid_bayes_step(&prev, &TransitionMatrix::identity(4), &obs).unwrap();
        let sums: Vec<f64> = prev
            .values()
            .iter()
            .zip(obs.values())
            .map(|(a, b)| a + b)
            .collect();
        let top = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (a, b) in id.values().iter().zip(&sums) {
            assert!((a - (b - top)).abs() < 1e-12);
        }

        let rows = vec![
            0.7, 0.1, 0.1, 0.1, //
            0.2, 0.6, 0.0, 0.2, //
            0.25, 0.25, 0.25, 0.25, //
            0.0, 0.0, 0.5, 0.5,
        ];
        let t = TransitionMatrix::from_rows(4, rows.clone()).unwrap();
        let out = grid_bayes_step(&prev, &t, &obs).unwrap();
        let mut direct = vec![0.0; 4];
        for u in 0..4 {
            let s: f64 = (0..4)
                .map(|v| rows[v * 4 + u] * prev.values()[v].exp())
                .sum();
            direct[u] = obs.values()[u] + s.ln();
        }
        let top = direct.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (a, b) in out.values().iter().zip(&direct) {
            assert!((a - (b - top)).abs() < 1e-9);
        }
        assert!(grid_bayes_step(&prev, &TransitionMatrix::identity(3), &obs).is_err());
    }

    #[test]
    fn track_estimate_cases() {
        let g = build_uniform_grid(Position::default(), 3, 1, 1.0).unwrap();
        let m = LikelihoodMap::new(g.clone(), vec![-3.0, -1.0, -2.0], MapMode::LogLik).unwrap();
        assert_eq!(track_estimate(&m, -1.5), (1, vec![1]));
        assert_eq!(track_estimate(&flat(&g, 0.0), 1.0).0, 0);
    }

    #[test]
    fn predict_without_noise_is_rigid() {
        let ps = ParticleSet::new(vec![Position::new(0.0, 0.0), Position::new(1.0, 2.0)]).unwrap();
        let out = particle_predict(&ps, (0.5, -1.0), 0.0, 7);
        assert_eq!(
            out.positions(),
            &[Position::new(0.5, -1.0), Position::new(1.5, 1.0)]
        );
        assert_eq!(out.weights(), ps.weights());
    }

    #[test]
    fn predict_mean_displacement() {
        let n = 100_000;
        let ps = ParticleSet::new(vec![Position::default(); n]).unwrap();
        let out = particle_predict(&ps, (1.0, 0.0), 0.1, 11);
        let (sx, sy) = out
            .positions()
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
        assert!((sx / n as f64 - 1.0).abs() < 0.01);
        assert!((sy / n as f64).abs() < 0.01);
    }

    #[test]
    fn inverse_distance_interpolation() {
        let g = build_uniform_grid(Position::default(), 2, 1, 1.0).unwrap();
        let lik = [1.0, 0.0];
        assert_eq!(
            interpolated_likelihood(&g, &lik, &Position::new(0.0, 0.0)),
            1.0
        );
        // at 1/4 of the way: weights (1/0.25, 1/0.75) normalize to (3/4, 1/4)
        let v = interpolated_likelihood(&g, &lik, &Position::new(0.25, 0.0));
        assert!((v - 0.75).abs() < 1e-12);
    }

    #[test]
    fn uniform_likelihood_keeps_weights() {
        let g = build_uniform_grid(Position::default(), 3, 3, 1.0).unwrap();
        let ps = ParticleSet::with_weights(
            vec![
                Position::new(0.2, 0.3),
                Position::new(1.5, 1.5),
                Position::new(2.0, 0.1),
            ],
            vec![0.5, 0.3, 0.2],
        )
        .unwrap();
        let (out, _) =
            particle_update(&ps, &flat(&g, -7.0), PointEstimate::WeightedMean, 1).unwrap();
        for (a, b) in out.weights().iter().zip(ps.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_update_reports_map() {
        let g = build_uniform_grid(Position::default(), 2, 1, 1.0).unwrap();
        let ps = ParticleSet::new(vec![Position::new(0.0, 0.0)]).unwrap();
        let m = LikelihoodMap::new(g, vec![0.0, -1e6], MapMode::LogLik).unwrap();
        let moved = ParticleSet::new(vec![Position::new(1.0, 0.0)]).unwrap();
        assert!(particle_update(&ps, &m, PointEstimate::WeightedMean, 0).is_ok());
        assert!(matches!(
            particle_update(&moved, &m, PointEstimate::WeightedMean, 0),
            Err(Error::DegenerateUpdate { .. })
        ));
    }

    #[test]
    fn systematic_resampling_cases() {
        let pts: Vec<Position> = (0..4).map(|i| Position::new(i as f64, 0.0)).collect();
        let eq = ParticleSet::new(pts.clone()).unwrap();
        assert_eq!(resample_systematic(&eq, 3).positions(), pts.as_slice());
        let one = ParticleSet::with_weights(pts.clone(), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(resample_systematic(&one, 3)
            .positions()
            .iter()
            .all(|p| *p == pts[0]));

        let n = 10_000;
        let two: Vec<Position> = (0..n).map(|i| Position::new((i % 2) as f64, 0.0)).collect();
        let mut w = vec![0.0; n];
        w[0] = 0.5;
        w[1] = 0.5;
        let ps = ParticleSet::with_weights(two, w).unwrap();
        let out = resample_systematic(&ps, 9);
        let zeros = out.positions().iter().filter(|p| p.x == 0.0).count();
        assert!((zeros as i64 - 5000).abs() <= 1);
        assert_eq!(out, resample_systematic(&ps, 9));
    }
}
