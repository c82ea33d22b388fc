//! Localized illuminance control: dim lights to the least total power that
//! still lights every occupied cell to the satisfaction level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Position;
use crate::simplex::{LinearProgram, Relation};

/// Constraint slack tolerated before a cell counts as unlit.
pub const COVERAGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Light {
    pub position: Position,
    /// Power at full switch-on, watts.
    pub max_power: f64,
    /// Lamp contribution at full power, lux, per grid index.
    pub gains: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightingScenario {
    pub lights: Vec<Light>,
    /// Ambient illuminance per grid index, lux.
    pub env_illuminance: Vec<f64>,
    /// Required illuminance at occupied cells, lux.
    pub satisfaction: f64,
}

impl LightingScenario {
    pub fn validate(&self) -> Result<()> {
        let cells = self.env_illuminance.len();
        for (l, light) in self.lights.iter().enumerate() {
            if !(light.max_power > 0.0) {
                return Err(Error::arg(format!("light {l}: max_power must be positive")));
            }
            if light.gains.len() != cells {
                return Err(Error::arg(format!(
                    "light {l}: {} gains for {cells} cells",
                    light.gains.len()
                )));
            }
            if light.gains.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
                return Err(Error::arg(format!(
                    "light {l}: gains must be finite and non-negative"
                )));
            }
        }
        if self.env_illuminance.iter().any(|e| !e.is_finite()) {
            return Err(Error::arg("ambient illuminance must be finite"));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.env_illuminance.len()
    }

    /// Illuminance still needed from the lamps at cell `u`.
    pub fn deficit(&self, u: usize) -> f64 {
        self.satisfaction - self.env_illuminance[u]
    }
}

/// Dimming level of each light, each in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchState {
    pub sw: Vec<f64>,
}

impl SwitchState {
    pub fn off(lights: usize) -> Self {
        Self {
            sw: vec![0.0; lights],
        }
    }

    pub fn total_power(&self, scene: &LightingScenario) -> f64 {
        self.sw
            .iter()
            .zip(&scene.lights)
            .map(|(s, l)| s * l.max_power)
            .sum()
    }
}

/// Total illuminance at cell `u`: lamps plus ambient.
pub fn illuminance(scene: &LightingScenario, sw: &SwitchState, u: usize) -> f64 {
    let lamps: f64 = sw
        .sw
        .iter()
        .zip(&scene.lights)
        .map(|(s, l)| s * l.gains[u])
        .sum();
    lamps + scene.env_illuminance[u]
}

/// Minimum-power switch state lighting every triggered cell to the
/// satisfaction level.
///
/// Cells whose ambient light already suffices add no constraint. Fails
/// with [`Error::Infeasible`] listing the cells that stay dark even with
/// every light fully on.
pub fn solve_lighting(scene: &LightingScenario, triggered: &[usize]) -> Result<SwitchState> {
    scene.validate()?;
    let n = scene.lights.len();
    if let Some(u) = triggered.iter().find(|&&u| u >= scene.cells()) {
        return Err(Error::arg(format!("triggered cell {u} out of range")));
    }
    let mut cells: Vec<usize> = triggered
        .iter()
        .copied()
        .filter(|&u| scene.deficit(u) > 0.0)
        .collect();
    cells.sort_unstable();
    cells.dedup();
    if cells.is_empty() {
        return Ok(SwitchState::off(n));
    }
    let violated: Vec<usize> = cells
        .iter()
        .copied()
        .filter(|&u| {
            scene.lights.iter().map(|l| l.gains[u]).sum::<f64>() < scene.deficit(u) - COVERAGE_TOL
        })
        .collect();
    if !violated.is_empty() {
        return Err(Error::Infeasible { violated });
    }

    let mut rows: Vec<(Vec<f64>, Relation, f64)> = cells
        .iter()
        .map(|&u| {
            (
                scene.lights.iter().map(|l| l.gains[u]).collect(),
                Relation::Ge,
                scene.deficit(u),
            )
        })
        .collect();
    for l in 0..n {
        let mut a = vec![0.0; n];
        a[l] = 1.0;
        rows.push((a, Relation::Le, 1.0));
    }
    let lp = LinearProgram {
        objective: scene.lights.iter().map(|l| l.max_power).collect(),
        rows,
    };
    let solution = lp.solve()?;
    Ok(SwitchState {
        sw: solution.x.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    })
}
