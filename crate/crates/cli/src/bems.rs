//! Building-energy study: binary presence sensors, learned detection maps,
//! grid recursive Bayes tracking of one occupant, and localized lighting
//! control on the tracked threshold sets.

use fingerloc::database::{DbEntry, DbMeta, FingerprintDatabase, LearnedModel};
use fingerloc::fingerprint::{FingerprintKind, FingerprintMeta, FingerprintVector};
use fingerloc::geom::{Grid, Position};
use fingerloc::lighting::{illuminance, solve_lighting, Light, LightingScenario, COVERAGE_TOL};
use fingerloc::matching::{argmax, binary_likelihood, LikelihoodMap, MapMode};
use fingerloc::rng::SeedMixer;
use fingerloc::simkit::{inverse_square_gains, simulate_binary_sensor, SensorCoverage};
use fingerloc::statfit::{learn_detection_map, DetectionMap, DetectionObservation};
use fingerloc::tracking::{grid_bayes_step, track_estimate, transition_matrix, MobilityModel};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::common::tag;
use crate::config::{GridSpec, Pipeline};
use crate::data::{
    feature, join_indices, parse_indices, Features, Measurements, Observation, Sample, TrialRow,
    TrialTable,
};
use crate::defaults::Params;
use crate::error::CliError;

pub const BITS_KEY: &str = "bits";
pub const TRACK_METHODS: [&str; 2] = ["tracked", "snapshot"];
pub const TRIGGERED_COLUMN: &str = "triggered";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightSpec {
    pub position: Position,
    /// Watts at full power.
    pub max_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BemsScenario {
    pub grid: GridSpec,
    pub sensors: Vec<Position>,
    /// `(max_range_m, probability)` rows for a moving occupant.
    pub p_detect_moving: Vec<(f64, f64)>,
    pub p_detect_static: f64,
    /// Training observations per cell.
    pub train_per_cell: usize,
    pub steps: usize,
    /// Motion of the simulated occupant.
    pub walk: MobilityModel,
    pub lights: Vec<LightSpec>,
    /// Mounting height above the work plane, meters.
    pub light_height: f64,
    /// Illuminance directly below a light at full power, lux.
    pub peak_lux: f64,
    pub env_lux: f64,
    pub satisfaction_lux: f64,
}

impl Default for BemsScenario {
    fn default() -> Self {
        let sensors = [1.0, 4.0]
            .iter()
            .flat_map(|&y| (0..4).map(move |i| Position::new(0.5 + 2.0 * i as f64, y)))
            .collect();
        let lights = [1.0, 4.0]
            .iter()
            .flat_map(|&y| {
                [1.0, 3.5, 6.0].into_iter().map(move |x| LightSpec {
                    position: Position::new(x, y),
                    max_power: 40.0,
                })
            })
            .collect();
        Self {
            grid: GridSpec {
                origin: Position::new(0.0, 0.0),
                nx: 8,
                ny: 6,
                spacing: 1.0,
            },
            sensors,
            p_detect_moving: vec![(1.0, 0.95), (2.0, 0.75), (3.0, 0.35)],
            p_detect_static: 0.1,
            train_per_cell: 40,
            steps: 200,
            walk: MobilityModel {
                p_static: 0.2,
                accel_sigma: 0.7,
                dt: 1.0,
                max_step: 1.5,
            },
            lights,
            light_height: 2.2,
            peak_lux: 700.0,
            env_lux: 100.0,
            satisfaction_lux: 500.0,
        }
    }
}

impl BemsScenario {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(format!("scenario: {m}")));
        self.grid.build()?;
        if self.sensors.is_empty() {
            return bad("at least one sensor is needed");
        }
        for c in self.coverages() {
            c.validate()?;
        }
        if self.train_per_cell == 0 {
            return bad("train_per_cell must be positive");
        }
        self.walk.validate()?;
        if !(self.light_height > 0.0 && self.peak_lux >= 0.0) {
            return bad("light_height must be positive and peak_lux non-negative");
        }
        self.lighting(&self.grid.build()?).validate()?;
        Ok(())
    }

    pub fn coverages(&self) -> Vec<SensorCoverage> {
        self.sensors
            .iter()
            .map(|p| SensorCoverage {
                sensor_pos: *p,
                p_detect_moving: self.p_detect_moving.clone(),
                p_detect_static: self.p_detect_static,
            })
            .collect()
    }

    pub fn lighting(&self, grid: &Grid) -> LightingScenario {
        LightingScenario {
            lights: self
                .lights
                .iter()
                .map(|l| Light {
                    position: l.position,
                    max_power: l.max_power,
                    gains: inverse_square_gains(
                        &l.position,
                        self.light_height,
                        self.peak_lux,
                        grid,
                    ),
                })
                .collect(),
            env_illuminance: vec![self.env_lux; grid.len()],
            satisfaction: self.satisfaction_lux,
        }
    }
}

fn read_bits(
    cov: &[SensorCoverage],
    pos: &Position,
    moving: bool,
    seed: SeedMixer,
) -> Result<FingerprintVector, CliError> {
    let bits: Vec<f64> = cov
        .iter()
        .enumerate()
        .map(|(m, c)| {
            simulate_binary_sensor(pos, moving, c, seed.word(m as u64).finish()) as u8 as f64
        })
        .collect();
    Ok(FingerprintVector::from_real(
        FingerprintKind::BinaryVector,
        &bits,
        FingerprintMeta::default(),
    )?)
}

/// Samples a walk from the mobility model: static steps stay put, moving
/// steps draw the next cell from the displacement kernel.
pub fn sample_walk(
    grid: &Grid,
    walk: &MobilityModel,
    steps: usize,
    seed: u64,
) -> Result<Vec<(usize, bool)>, CliError> {
    if steps == 0 {
        return Ok(Vec::new());
    }
    let kernel = transition_matrix(
        grid,
        &MobilityModel {
            p_static: 0.0,
            ..*walk
        },
    )?;
    let mut rng = SeedMixer::new(seed).word(tag::WALK).rng();
    let mut cell = rng.random_range(0..grid.len());
    let mut out = vec![(cell, true)];
    for _ in 1..steps {
        let moving = rng.random::<f64>() >= walk.p_static;
        if moving {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let row = kernel.row(cell);
            let mut next = row.len() - 1;
            for (j, p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    next = j;
                    break;
                }
            }
            cell = next;
        }
        out.push((cell, moving));
    }
    Ok(out)
}

pub fn simulate(sc: &BemsScenario, seed: u64) -> Result<Measurements, CliError> {
    let grid = sc.grid.build()?;
    let cov = sc.coverages();
    let mut rng = SeedMixer::new(seed).word(tag::SENSOR).rng();
    let mut train = Vec::with_capacity(grid.len() * sc.train_per_cell);
    for (i, p) in grid.points().iter().enumerate() {
        for k in 0..sc.train_per_cell as u64 {
            let moving = rng.random::<f64>() >= sc.walk.p_static;
            let bits = read_bits(
                &cov,
                p,
                moving,
                SeedMixer::new(seed)
                    .word(tag::SENSOR)
                    .word(i as u64)
                    .word(k),
            )?;
            train.push(Sample {
                grid_index: i,
                snapshot: k,
                moving: Some(moving),
                features: Features::from([(BITS_KEY.to_string(), bits)]),
            });
        }
    }
    let walk = sample_walk(&grid, &sc.walk, sc.steps, seed)?;
    let mut test = Vec::with_capacity(walk.len());
    for (t, &(cell, moving)) in walk.iter().enumerate() {
        let pos = grid.point(cell);
        let bits = read_bits(
            &cov,
            &pos,
            moving,
            SeedMixer::new(seed).word(tag::TRIALS).word(t as u64),
        )?;
        test.push(Observation {
            step: t,
            position: pos,
            grid_index: Some(cell),
            moving: Some(moving),
            pdr: None,
            features: Features::from([(BITS_KEY.to_string(), bits)]),
        });
    }
    Ok(Measurements::new(Pipeline::BemsBinary, grid, train, test))
}

fn detect_key(m: usize) -> String {
    format!("detect:{m}")
}

/// Laplace-smoothed detection map of every sensor, stored per cell.
pub fn learn(sc: &BemsScenario, meas: &Measurements) -> Result<FingerprintDatabase, CliError> {
    meas.check(Pipeline::BemsBinary)?;
    let n = meas.grid.len();
    let mut entries: Vec<DbEntry> = vec![DbEntry::default(); n];
    for s in &meas.train {
        entries[s.grid_index].sample_count += 1;
    }
    for m in 0..sc.sensors.len() {
        let obs: Vec<DetectionObservation> =
            meas.train
                .iter()
                .map(|s| {
                    let bits = feature(&s.features, BITS_KEY)?;
                    let bit =
                        bits.real_values().get(m).copied().ok_or_else(|| {
                            CliError::Config(format!("bit vector lacks sensor {m}"))
                        })?;
                    Ok(DetectionObservation {
                        grid_index: s.grid_index,
                        moving: s.moving.unwrap_or(true),
                        bit: bit == 1.0,
                    })
                })
                .collect::<Result<_, CliError>>()?;
        let map = learn_detection_map(&obs, &meas.grid)?;
        for (e, p) in entries.iter_mut().zip(map.p_detect) {
            e.insert(detect_key(m), LearnedModel::Detection { p_detect: p });
        }
    }
    Ok(FingerprintDatabase::new(
        meas.grid.clone(),
        DbMeta::default(),
        entries,
    )?)
}

pub fn detection_maps(
    db: &FingerprintDatabase,
    sensors: usize,
) -> Result<Vec<DetectionMap>, CliError> {
    (0..sensors)
        .map(|m| {
            let key = detect_key(m);
            let p_detect = db
                .entries()
                .iter()
                .map(|e| match e.get(&key) {
                    Some(LearnedModel::Detection { p_detect }) => Ok(*p_detect),
                    _ => Err(CliError::Config(format!(
                        "database lacks detection model {key:?}"
                    ))),
                })
                .collect::<Result<_, _>>()?;
            Ok(DetectionMap { p_detect })
        })
        .collect()
}

/// Per-step snapshot maximum-likelihood estimates.
pub fn localize(
    sc: &BemsScenario,
    meas: &Measurements,
    db: &FingerprintDatabase,
) -> Result<TrialTable, CliError> {
    meas.check(Pipeline::BemsBinary)?;
    let maps = detection_maps(db, sc.sensors.len())?;
    let mut table = TrialTable::new("t", &["snapshot"], None);
    for obs in &meas.test {
        let l = binary_likelihood(feature(&obs.features, BITS_KEY)?, &maps, db.grid())?;
        table.rows.push(TrialRow {
            id: obs.step,
            truth: obs.position,
            estimates: vec![db.grid().point(argmax(l.values()))],
            note: None,
        });
    }
    Ok(table)
}

/// Recursive Bayes tracking; each row also carries the snapshot estimate
/// and the threshold set used for lighting.
pub fn track(
    sc: &BemsScenario,
    meas: &Measurements,
    db: &FingerprintDatabase,
    params: &Params,
) -> Result<TrialTable, CliError> {
    meas.check(Pipeline::BemsBinary)?;
    let grid = db.grid();
    let maps = detection_maps(db, sc.sensors.len())?;
    let trans = transition_matrix(grid, &params.mobility)?;
    let mut post = LikelihoodMap::new(grid.clone(), vec![0.0; grid.len()], MapMode::LogLik)?;
    let mut table = TrialTable::new("t", &TRACK_METHODS, Some(TRIGGERED_COLUMN));
    for obs in &meas.test {
        let l = binary_likelihood(feature(&obs.features, BITS_KEY)?, &maps, grid)?;
        post = grid_bayes_step(&post, &trans, &l)?;
        let (est, set) = track_estimate(&post, params.eta);
        table.rows.push(TrialRow {
            id: obs.step,
            truth: obs.position,
            estimates: vec![grid.point(est), grid.point(argmax(l.values()))],
            note: Some(join_indices(&set)),
        });
    }
    Ok(table)
}

/// One control step of the lighting log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlStep {
    pub t: usize,
    pub sw: Vec<f64>,
    pub power_w: f64,
    /// Illuminance at the occupant's true cell.
    pub user_lux: f64,
    /// Whether the true cell is in the threshold set.
    pub covered: bool,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub steps: usize,
    /// Sum of per-step power, watt-steps.
    pub energy: f64,
    /// The same with every light fully on.
    pub all_on_energy: f64,
    /// `1 - energy / all_on_energy`; absent for an empty run.
    pub saving: Option<f64>,
    pub covered_steps: usize,
    pub satisfied_covered_steps: usize,
}

/// Solves the lighting program on every step's threshold set.
pub fn run_lighting(
    sc: &BemsScenario,
    grid: &Grid,
    trajectory: &TrialTable,
) -> Result<(Vec<ControlStep>, EnergySummary), CliError> {
    let scene = sc.lighting(grid);
    let all_on: f64 = scene.lights.iter().map(|l| l.max_power).sum();
    let mut log = Vec::with_capacity(trajectory.rows.len());
    for row in &trajectory.rows {
        let set = parse_indices(row.note.as_deref().unwrap_or(""))?;
        let sw = solve_lighting(&scene, &set)?;
        let cell = grid.nearest(&row.truth);
        let lux = illuminance(&scene, &sw, cell);
        let covered = set.contains(&cell);
        log.push(ControlStep {
            t: row.id,
            power_w: sw.total_power(&scene),
            user_lux: lux,
            covered,
            satisfied: lux >= scene.satisfaction - COVERAGE_TOL,
            sw: sw.sw,
        });
    }
    let energy = log.iter().fold(0.0, |acc, s| acc + s.power_w);
    let all_on_energy = all_on * log.len() as f64;
    let summary = EnergySummary {
        steps: log.len(),
        energy,
        all_on_energy,
        saving: (all_on_energy > 0.0).then(|| 1.0 - energy / all_on_energy),
        covered_steps: log.iter().filter(|s| s.covered).count(),
        satisfied_covered_steps: log.iter().filter(|s| s.covered && s.satisfied).count(),
    };
    Ok((log, summary))
}

pub fn control_log_csv(log: &[ControlStep]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "sw", "power_w", "user_lux", "covered", "satisfied"])?;
    for s in log {
        let sw =
            s.sw.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";");
        w.write_record([
            s.t.to_string(),
            sw,
            s.power_w.to_string(),
            s.user_lux.to_string(),
            s.covered.to_string(),
            s.satisfied.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
