//! Every tuning parameter the source method leaves open, with its default.
//!
//! | parameter          | default                 | meaning                                          |
//! |--------------------|-------------------------|--------------------------------------------------|
//! | `loading_eps`      | 1e-3                    | Gaussian covariance diagonal loading (x trace/d) |
//! | `gamma`            | 1.0                     | hybrid phase-error weight                        |
//! | `gamma_sweep`      | 0, 0.01 .. 100, 1e9     | weights evaluated by the illegal-radio study     |
//! | `eta`              | ln 0.2                  | threshold-set level on the max-normalized map    |
//! | `particles`        | 1000                    | particle-filter size                             |
//! | `pf_sigma`         | 0.3 m                   | particle diffusion per step                      |
//! | `point_estimate`   | weighted mean           | particle cloud to point                          |
//! | `xcorr_residual`   | magnitude               | cross-correlation error on interpolated maps     |
//! | `mobility`         | 0.3 / 0.5 m / 1 s / 1.5 m | static probability, step sigma, dt, max step   |

use fingerloc::matching::XcorrResidual;
use fingerloc::statfit::DEFAULT_LOADING_EPS;
use fingerloc::tracking::{MobilityModel, PointEstimate};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub loading_eps: f64,
    pub gamma: f64,
    pub gamma_sweep: Vec<f64>,
    pub eta: f64,
    pub particles: usize,
    pub pf_sigma: f64,
    pub point_estimate: PointEstimate,
    pub xcorr_residual: XcorrResidual,
    pub mobility: MobilityModel,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            loading_eps: DEFAULT_LOADING_EPS,
            gamma: 1.0,
            gamma_sweep: vec![0.0, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 1e9],
            eta: 0.2f64.ln(),
            particles: 1000,
            pf_sigma: 0.3,
            point_estimate: PointEstimate::WeightedMean,
            xcorr_residual: XcorrResidual::Magnitude,
            mobility: MobilityModel::default(),
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(format!("params: {m}")));
        if !(self.loading_eps > 0.0) {
            return bad("loading_eps must be positive");
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad("gamma must be finite and non-negative");
        }
        if self
            .gamma_sweep
            .iter()
            .any(|g| !(g.is_finite() && *g >= 0.0))
        {
            return bad("gamma_sweep entries must be finite and non-negative");
        }
        if self.eta.is_nan() {
            return bad("eta must be a number");
        }
        if self.particles == 0 {
            return bad("particles must be at least 1");
        }
        if !(self.pf_sigma >= 0.0) {
            return bad("pf_sigma must be non-negative");
        }
        self.mobility
            .validate()
            .map_err(|e| CliError::Config(format!("params.mobility: {e}")))
    }
}
