//! Two-tank cascade with square-root outflow, truncated-Gaussian process
//! noise and Laplace sensor noise. Nonlinear dynamics plus heavy-tailed
//! measurement noise give the non-Gaussian telemetry the detector trains on.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Tank levels are expressed in normalized units on `[0, LEVEL_SPAN]`.
pub const LEVEL_SPAN: f64 = 10.0;
/// Number of sensors: upper level, lower level, outflow.
pub const SENSOR_COUNT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    /// Outflow coefficient of the upper tank.
    pub a1: f64,
    /// Outflow coefficient of the lower tank.
    pub a2: f64,
    /// Integration step.
    pub dt: f64,
    /// Initial levels.
    pub initial: [f64; 2],
    /// Std of the truncated (±3σ) Gaussian process noise.
    pub process_noise_std: f64,
    /// Scale of the Laplace sensor noise.
    pub sensor_noise_scale: f64,
    /// Inflow profile `u(k) = base + amplitude * sin(2π k / period)`.
    pub inflow_base: f64,
    pub inflow_amplitude: f64,
    pub inflow_period: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            a1: 0.5,
            a2: 0.5,
            dt: 0.1,
            initial: [4.0, 4.0],
            process_noise_std: 0.02,
            sensor_noise_scale: 0.08,
            inflow_base: 1.0,
            inflow_amplitude: 0.3,
            inflow_period: 2000.0,
        }
    }
}

impl PlantConfig {
    pub fn inflow(&self, k: u64) -> f64 {
        if self.inflow_period <= 0.0 {
            return self.inflow_base;
        }
        self.inflow_base
            + self.inflow_amplitude
                * (2.0 * std::f64::consts::PI * k as f64 / self.inflow_period).sin()
    }

    /// Nominal full-scale range per sensor, used to scale injected biases.
    pub fn sensor_ranges(&self) -> [f64; SENSOR_COUNT] {
        [LEVEL_SPAN, LEVEL_SPAN, self.a2 * LEVEL_SPAN.sqrt()]
    }

    /// Noise-free measurement map.
    pub fn measure_clean(&self, levels: &[f64; 2]) -> [f64; SENSOR_COUNT] {
        [levels[0], levels[1], self.a2 * levels[1].sqrt()]
    }
}

/// Tank levels at time `k`. Levels never go negative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantState {
    pub levels: [f64; 2],
    pub k: u64,
}

impl PlantState {
    pub fn initial(config: &PlantConfig) -> Self {
        Self { levels: [config.initial[0].max(0.0), config.initial[1].max(0.0)], k: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackKind {
    None,
    Fdi,
    Dos,
}

/// One sensor reading with its ground-truth label.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub y: [f64; SENSOR_COUNT],
    pub k: u64,
    pub attack_kind: AttackKind,
}

impl Measurement {
    /// Label 1 iff an adversary was active at this step.
    pub fn is_attack(&self) -> bool {
        self.attack_kind != AttackKind::None
    }
}

fn truncated_gaussian(std: f64, rng: &mut ChaCha8Rng) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    let normal = Normal::new(0.0, std).expect("std is non-negative");
    loop {
        let v = normal.sample(rng);
        if v.abs() <= 3.0 * std {
            return v;
        }
    }
}

fn laplace(scale: f64, rng: &mut ChaCha8Rng) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let u: f64 = rng.gen_range(-0.5..0.5);
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Advances the cascade one step under inflow `u` and measures the new
/// state. Both noise sources are drawn from `rng`; levels clamp at zero.
pub fn step_plant(
    state: &PlantState,
    u: f64,
    config: &PlantConfig,
    rng: &mut ChaCha8Rng,
) -> (PlantState, Measurement) {
    let [x1, x2] = state.levels;
    let out1 = config.a1 * x1.sqrt();
    let out2 = config.a2 * x2.sqrt();
    let w1 = truncated_gaussian(config.process_noise_std, rng);
    let w2 = truncated_gaussian(config.process_noise_std, rng);
    let next = PlantState {
        levels: [
            (x1 + config.dt * (u - out1) + w1).max(0.0),
            (x2 + config.dt * (out1 - out2) + w2).max(0.0),
        ],
        k: state.k + 1,
    };
    let clean = config.measure_clean(&next.levels);
    let mut y = [0.0; SENSOR_COUNT];
    for (yi, c) in y.iter_mut().zip(clean) {
        *yi = c + laplace(config.sensor_noise_scale, rng);
    }
    (next, Measurement { y, k: next.k, attack_kind: AttackKind::None })
}
