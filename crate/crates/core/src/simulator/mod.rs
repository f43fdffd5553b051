//! Labeled ICS telemetry generator: a two-tank plant driven through a
//! schedule of false-data-injection and denial-of-service episodes.
//!
//! Feature rows are the (possibly attacked) measurement vector stacked over
//! the DoS window, so every row has width `SENSOR_COUNT * (hold_depth + 1)`
//! regardless of whether an attack was active. A row is labeled attack iff
//! its time step falls inside an episode; the label marks adversary
//! activity, not the observed effect.

mod attack;
mod plant;

pub use attack::{
    apply_fdi, dos_stack, sample_alpha, DosChannel, DosKind, DosMode, DosProcess, SensorSelection,
};
pub use plant::{
    step_plant, AttackKind, Measurement, PlantConfig, PlantState, LEVEL_SPAN, SENSOR_COUNT,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::matrix::Matrix;
use crate::rng::{derive, rng_from, Stream};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("selection vector entries must be 0 or 1")]
    InvalidSelection,
    #[error("cannot select f={f} of m={m} sensors")]
    InvalidF { f: usize, m: usize },
    #[error("vector length mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("episodes {first} and {second} overlap")]
    OverlappingEpisodes { first: usize, second: usize },
    #[error("episode ends at {end} but the horizon is {horizon}")]
    EpisodeOutOfRange { end: usize, horizon: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenario file is not valid TOML: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeKind {
    Fdi,
    Dos,
}

/// Half-open attack window `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub start: usize,
    pub end: usize,
    pub kind: EpisodeKind,
}

/// FDI parameters: which sensors are compromised and how large the injected
/// bias may be, as a fraction of each sensor's nominal range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdiConfig {
    /// Explicit selection vector; when absent, `f` sensors are drawn
    /// uniformly at scenario setup.
    pub selection: Option<Vec<u8>>,
    pub f: usize,
    /// Draw a fresh selection per episode instead of once per scenario,
    /// giving episodes heterogeneous sensor signatures.
    pub per_episode_selection: bool,
    pub bias_min_frac: f64,
    pub bias_max_frac: f64,
}

impl Default for FdiConfig {
    fn default() -> Self {
        Self {
            selection: None,
            f: 2,
            per_episode_selection: false,
            bias_min_frac: 0.1,
            bias_max_frac: 0.5,
        }
    }
}

/// Complete simulation description; serializable as a TOML scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    pub name: String,
    pub seed: u64,
    pub horizon: usize,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub fdi: FdiConfig,
    #[serde(default)]
    pub dos: DosProcess,
    #[serde(default)]
    pub episodes: Vec<Episode>,
}

impl AttackScenario {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let scenario: AttackScenario =
            toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        scenario.validate(scenario.horizon)?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self, horizon: usize) -> Result<(), SimError> {
        self.dos.validate()?;
        if !(0.0 <= self.fdi.bias_min_frac && self.fdi.bias_min_frac <= self.fdi.bias_max_frac) {
            return Err(SimError::InvalidScenario(
                "bias fractions must satisfy 0 <= min <= max".into(),
            ));
        }
        if let Some(sel) = &self.fdi.selection {
            if sel.len() != SENSOR_COUNT {
                return Err(SimError::DimensionMismatch {
                    expected: SENSOR_COUNT,
                    got: sel.len(),
                });
            }
            SensorSelection::new(sel.clone())?;
        } else if self.fdi.f == 0 || self.fdi.f > SENSOR_COUNT {
            return Err(SimError::InvalidF { f: self.fdi.f, m: SENSOR_COUNT });
        }
        let mut sorted: Vec<(usize, &Episode)> = self.episodes.iter().enumerate().collect();
        sorted.sort_by_key(|(_, e)| e.start);
        for w in sorted.windows(2) {
            if w[0].1.end > w[1].1.start {
                return Err(SimError::OverlappingEpisodes { first: w[0].0, second: w[1].0 });
            }
        }
        for e in &self.episodes {
            if e.start >= e.end {
                return Err(SimError::InvalidScenario(format!(
                    "episode [{}, {}) is empty or reversed",
                    e.start, e.end
                )));
            }
            if e.end >= horizon {
                return Err(SimError::EpisodeOutOfRange { end: e.end, horizon });
            }
        }
        Ok(())
    }

    fn kind_at(&self, k: usize) -> AttackKind {
        for e in &self.episodes {
            if k >= e.start && k < e.end {
                return match e.kind {
                    EpisodeKind::Fdi => AttackKind::Fdi,
                    EpisodeKind::Dos => AttackKind::Dos,
                };
            }
        }
        AttackKind::None
    }
}

/// Runs the scenario for `horizon` steps and packs one row per step.
/// Deterministic in `(scenario, horizon, seed)`.
pub fn generate_dataset(
    scenario: &AttackScenario,
    horizon: usize,
    seed: u64,
) -> Result<Dataset, SimError> {
    scenario.validate(horizon)?;
    let mut setup_rng = rng_from(derive(seed, Stream::Scenario, 0));
    let scenario_selection = match &scenario.fdi.selection {
        Some(alpha) => Some(SensorSelection::new(alpha.clone())?),
        None if scenario.fdi.per_episode_selection => None,
        None => Some(sample_alpha(SENSOR_COUNT, scenario.fdi.f, &mut setup_rng)?),
    };
    // Per-episode constant biases (and selections, when configured), drawn
    // up front in episode order.
    let ranges = scenario.plant.sensor_ranges();
    let mut biases: Vec<[f64; SENSOR_COUNT]> = Vec::with_capacity(scenario.episodes.len());
    let mut selections: Vec<SensorSelection> = Vec::with_capacity(scenario.episodes.len());
    for _ in &scenario.episodes {
        let mut bias = [0.0; SENSOR_COUNT];
        for (b, range) in bias.iter_mut().zip(ranges) {
            let magnitude = setup_rng
                .gen_range(scenario.fdi.bias_min_frac..=scenario.fdi.bias_max_frac)
                * range;
            *b = if setup_rng.gen::<bool>() { magnitude } else { -magnitude };
        }
        biases.push(bias);
        selections.push(match &scenario_selection {
            Some(sel) => sel.clone(),
            None => sample_alpha(SENSOR_COUNT, scenario.fdi.f, &mut setup_rng)?,
        });
    }
    let episode_at = |k: usize| scenario.episodes.iter().position(|e| k >= e.start && k < e.end);

    let mut plant_rng = rng_from(derive(seed, Stream::Scenario, 1));
    let mut dos_rng = rng_from(derive(seed, Stream::Scenario, 2));
    let mut state = PlantState::initial(&scenario.plant);
    let mut channel = DosChannel::new(scenario.dos, SENSOR_COUNT);

    let width = SENSOR_COUNT * (scenario.dos.hold_depth + 1);
    let mut data = Vec::with_capacity(horizon * width);
    let mut labels = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let u = scenario.plant.inflow(k as u64);
        let (next, measurement) = step_plant(&state, u, &scenario.plant, &mut plant_rng);
        state = next;
        let kind = scenario.kind_at(k);
        let observed: Vec<f64> = match kind {
            AttackKind::Fdi => {
                let e = episode_at(k).expect("kind_at found an episode");
                apply_fdi(&measurement.y, &selections[e], &biases[e])?
            }
            _ => measurement.y.to_vec(),
        };
        let (_, stack) = channel.step(&observed, kind == AttackKind::Dos, &mut dos_rng);
        debug_assert_eq!(stack.len(), width);
        data.extend_from_slice(&stack);
        labels.push(u8::from(kind != AttackKind::None));
    }

    let mut names = Vec::with_capacity(width);
    for lag in 0..=scenario.dos.hold_depth {
        for sensor in 1..=SENSOR_COUNT {
            names.push(format!("y{}_lag{}", sensor, lag));
        }
    }
    Dataset::new(Matrix::from_vec(horizon, width, data), labels, names)
        .map_err(|e| SimError::InvalidScenario(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_scenario() -> AttackScenario {
        AttackScenario {
            name: "tiny".into(),
            seed: 7,
            horizon: 1000,
            plant: PlantConfig::default(),
            fdi: FdiConfig { selection: Some(vec![1, 0, 1]), ..Default::default() },
            dos: DosProcess::default(),
            episodes: vec![
                Episode { start: 100, end: 200, kind: EpisodeKind::Fdi },
                Episode { start: 400, end: 450, kind: EpisodeKind::Dos },
            ],
        }
    }

    #[test]
    fn empty_schedule_is_all_normal() {
        let mut s = tiny_scenario();
        s.episodes.clear();
        let ds = generate_dataset(&s, 200, 7).unwrap();
        assert_eq!(ds.n_samples(), 200);
        assert_eq!(ds.attack_count(), 0);
    }

    #[test]
    fn labels_match_schedule_exactly() {
        let s = tiny_scenario();
        let ds = generate_dataset(&s, 1000, 7).unwrap();
        assert_eq!(ds.attack_count(), 150);
        for (k, &label) in ds.labels().iter().enumerate() {
            let expected = (100..200).contains(&k) || (400..450).contains(&k);
            assert_eq!(label == 1, expected, "row {k}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let s = tiny_scenario();
        let a = generate_dataset(&s, 1000, 7).unwrap();
        let b = generate_dataset(&s, 1000, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_dataset(&s, 1000, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn feature_width_and_names() {
        let mut s = tiny_scenario();
        s.episodes.clear();
        let ds = generate_dataset(&s, 50, 7).unwrap();
        assert_eq!(ds.n_features(), 9);
        assert_eq!(ds.feature_names()[0], "y1_lag0");
        assert_eq!(ds.feature_names()[8], "y3_lag2");
    }

    #[test]
    fn overlap_and_range_validation() {
        let mut s = tiny_scenario();
        s.episodes = vec![
            Episode { start: 10, end: 30, kind: EpisodeKind::Fdi },
            Episode { start: 20, end: 40, kind: EpisodeKind::Dos },
        ];
        assert_eq!(
            generate_dataset(&s, 1000, 7),
            Err(SimError::OverlappingEpisodes { first: 0, second: 1 })
        );

        let mut s = tiny_scenario();
        s.episodes = vec![Episode { start: 10, end: 1000, kind: EpisodeKind::Fdi }];
        assert_eq!(
            generate_dataset(&s, 1000, 7),
            Err(SimError::EpisodeOutOfRange { end: 1000, horizon: 1000 })
        );
    }

    #[test]
    fn toml_round_trip() {
        let s = tiny_scenario();
        let text = s.to_toml();
        let back = AttackScenario::from_toml(&text).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn fdi_rows_bias_only_selected_sensors() {
        // With zero noise and a huge positive bias the attacked sensors are
        // far above the clean range while the untouched sensor stays put.
        let mut s = tiny_scenario();
        s.plant.process_noise_std = 0.0;
        s.plant.sensor_noise_scale = 0.0;
        s.fdi.bias_min_frac = 0.9;
        s.fdi.bias_max_frac = 0.9;
        s.episodes = vec![Episode { start: 50, end: 60, kind: EpisodeKind::Fdi }];
        let ds = generate_dataset(&s, 100, 7).unwrap();
        // Columns 0..3 are the current measurement (lag 0).
        let clean_y2: Vec<f64> = (40..50).map(|r| ds.features().get(r, 1)).collect();
        let attacked_y2: Vec<f64> = (50..60).map(|r| ds.features().get(r, 1)).collect();
        for (c, a) in clean_y2.iter().zip(&attacked_y2) {
            assert!((c - a).abs() < 1.0, "unselected sensor must be untouched");
        }
        let clean_y1 = ds.features().get(49, 0);
        let attacked_y1 = ds.features().get(50, 0);
        assert!((clean_y1 - attacked_y1).abs() > 5.0, "selected sensor must be biased");
    }
}
