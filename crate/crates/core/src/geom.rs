//! Planar geometry: positions and candidate-location grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Bearing of `other` as seen from `self`, radians in (-pi, pi].
    pub fn bearing_to(&self, other: &Position) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Position {
        Position::new(self.x + dx, self.y + dy)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Position,
    pub max: Position,
}

impl Bounds {
    pub fn contains(&self, p: &Position) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Position) -> Position {
        Position::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
        )
    }
}

/// The discrete set of candidate locations.
///
/// Uniform grids are stored row-major with `shape = [nx, ny]`; irregular
/// grids have `spacing == 0` and no shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<Position>,
    spacing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<[usize; 2]>,
}

impl Grid {
    /// Irregular grid from an explicit point list.
    pub fn from_points(points: Vec<Position>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::arg("grid must contain at least one point"));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::arg(format!("non-finite grid point {p:?}")));
        }
        for (i, a) in points.iter().enumerate() {
            if let Some(j) = points[i + 1..].iter().position(|b| b == a) {
                return Err(Error::arg(format!(
                    "grid points {i} and {} coincide",
                    i + 1 + j
                )));
            }
        }
        Ok(Self {
            points,
            spacing: 0.0,
            shape: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Position] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Position {
        self.points[index]
    }

    /// Uniform spacing in meters, 0 for irregular grids.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `[nx, ny]` for uniform grids.
    pub fn shape(&self) -> Option<[usize; 2]> {
        self.shape
    }

    pub fn is_uniform(&self) -> bool {
        self.shape.is_some()
    }

    pub fn bounds(&self) -> Bounds {
        let mut min = self.points[0];
        let mut max = self.points[0];
        for p in &self.points[1..] {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Bounds { min, max }
    }

    /// Index of the closest grid point; ties go to the lowest index.
    pub fn nearest(&self, p: &Position) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.points.iter().enumerate() {
            let d = p.distance_sq(q);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// The `k` closest grid points as `(index, distance)`, nearest first,
    /// ties broken by index.
    pub fn k_nearest(&self, p: &Position, k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, q)| (i, p.distance_sq(q)))
            .collect();
        let k = k.min(all.len());
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all.into_iter().map(|(i, d2)| (i, d2.sqrt())).collect()
    }
}

/// Row-major `nx` x `ny` grid: point `k` sits at
/// `origin + ((k mod nx) * spacing, (k div nx) * spacing)`.
pub fn build_uniform_grid(origin: Position, nx: usize, ny: usize, spacing: f64) -> Result<Grid> {
    if nx == 0 || ny == 0 {
        return Err(Error::arg(format!(
            "grid dimensions must be positive, got {nx}x{ny}"
        )));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::arg(format!(
            "grid spacing must be positive, got {spacing}"
        )));
    }
    if !origin.is_finite() {
        return Err(Error::arg("grid origin must be finite"));
    }
    let points = (0..nx * ny)
        .map(|k| origin.offset((k % nx) as f64 * spacing, (k / nx) as f64 * spacing))
        .collect();
    Ok(Grid {
        points,
        spacing,
        shape: Some([nx, ny]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_grid() {
        let g = build_uniform_grid(Position::new(0.0, 0.0), 1, 1, 1.0).unwrap();
        assert_eq!(g.points(), &[Position::new(0.0, 0.0)]);
    }

    #[test]
    fn classroom_grid_has_144_seats() {
        let g = build_uniform_grid(Position::default(), 12, 12, 0.78).unwrap();
        assert_eq!(g.len(), 144);
        assert_eq!(g.shape(), Some([12, 12]));
    }

    #[test]
    fn row_major_layout() {
        let g = build_uniform_grid(Position::default(), 3, 2, 2.0).unwrap();
        assert_eq!(g.point(4), Position::new(2.0, 2.0));
        assert_eq!(g.point(2), Position::new(4.0, 0.0));
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(build_uniform_grid(Position::default(), 0, 3, 1.0).is_err());
        assert!(build_uniform_grid(Position::default(), 3, 0, 1.0).is_err());
        assert!(build_uniform_grid(Position::default(), 3, 3, 0.0).is_err());
        assert!(build_uniform_grid(Position::default(), 3, 3, -1.0).is_err());
    }

    #[test]
    fn irregular_grid_rejects_duplicates() {
        let p = Position::new(1.0, 1.0);
        assert!(Grid::from_points(vec![p, Position::new(0.0, 0.0), p]).is_err());
        assert!(Grid::from_points(vec![]).is_err());
    }

    #[test]
    fn uniform_spacing_is_minimum_distance() {
        let g = build_uniform_grid(Position::new(-1.0, 3.0), 4, 3, 0.5).unwrap();
        for (i, a) in g.points().iter().enumerate() {
            for b in &g.points()[i + 1..] {
                assert!(a.distance(b) >= 0.5 - 1e-12);
            }
        }
    }

    #[test]
    fn k_nearest_orders_by_distance_then_index() {
        let g = build_uniform_grid(Position::default(), 2, 2, 1.0).unwrap();
        let near = g.k_nearest(&Position::new(0.5, 0.5), 4);
        let idx: Vec<usize> = near.iter().map(|n| n.0).collect();
        assert_eq!(idx, vec![0, 1, 2, 3]);
        assert!(near.iter().all(|n| (n.1 - 0.5f64.hypot(0.5)).abs() < 1e-12));
    }
}
