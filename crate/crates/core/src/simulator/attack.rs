//! Adversary primitives: sensor-selection vectors, false-data injection,
//! and the lossy-delivery process behind denial-of-service episodes.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;

/// Binary vector choosing which of the `m` sensors an FDI attack touches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSelection {
    pub alpha: Vec<u8>,
}

impl SensorSelection {
    pub fn new(alpha: Vec<u8>) -> Result<Self, SimError> {
        if alpha.iter().any(|&a| a > 1) {
            return Err(SimError::InvalidSelection);
        }
        Ok(Self { alpha })
    }

    /// Number of compromised sensors.
    pub fn f(&self) -> usize {
        self.alpha.iter().filter(|&&a| a == 1).count()
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }
}

/// Uniformly random selection with exactly `f` of `m` ones.
pub fn sample_alpha(m: usize, f: usize, rng: &mut ChaCha8Rng) -> Result<SensorSelection, SimError> {
    if f == 0 || f > m {
        return Err(SimError::InvalidF { f, m });
    }
    let mut pool: Vec<usize> = (0..m).collect();
    for i in 0..f {
        let j = rng.gen_range(i..m);
        pool.swap(i, j);
    }
    let mut alpha = vec![0u8; m];
    for &i in &pool[..f] {
        alpha[i] = 1;
    }
    Ok(SensorSelection { alpha })
}

/// Element-wise bias injection on the selected sensors:
/// `y_hat = y + alpha ∘ bias`.
pub fn apply_fdi(y: &[f64], sel: &SensorSelection, bias: &[f64]) -> Result<Vec<f64>, SimError> {
    if y.len() != sel.alpha.len() || y.len() != bias.len() {
        return Err(SimError::DimensionMismatch {
            expected: sel.alpha.len(),
            got: y.len().min(bias.len()),
        });
    }
    Ok(y.iter()
        .zip(&sel.alpha)
        .zip(bias)
        .map(|((&v, &a), &b)| v + f64::from(a) * b)
        .collect())
}

/// Generator of per-step delivery outcomes during DoS episodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DosKind {
    Bernoulli { p_loss: f64 },
    Markov { p_good_to_bad: f64, p_bad_to_good: f64 },
}

/// What a lost slot contributes to the stacked measurement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DosMode {
    #[default]
    Zeroing,
    HoldLast,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DosProcess {
    #[serde(flatten)]
    pub kind: DosKind,
    /// Stack depth `d`: each output carries the current measurement plus
    /// the `d` previous ones.
    pub hold_depth: usize,
    #[serde(default)]
    pub mode: DosMode,
}

impl Default for DosProcess {
    fn default() -> Self {
        Self { kind: DosKind::Bernoulli { p_loss: 0.5 }, hold_depth: 2, mode: DosMode::Zeroing }
    }
}

impl DosProcess {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = match self.kind {
            DosKind::Bernoulli { p_loss } => (0.0..=1.0).contains(&p_loss),
            DosKind::Markov { p_good_to_bad, p_bad_to_good } => {
                (0.0..=1.0).contains(&p_good_to_bad) && (0.0..=1.0).contains(&p_bad_to_good)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidScenario("DoS probabilities must lie in [0, 1]".into()))
        }
    }
}

/// Builds the stacked measurement from the delivery vector `mu` (most
/// recent slot first) and the raw history `z_k, z_{k-1}, ..., z_{k-d}`.
/// Zeroing blanks lost slots; hold-last substitutes the nearest older
/// delivered value within the window (zeros when none exists).
pub fn dos_stack(mu: &[u8], history: &[Vec<f64>], mode: DosMode) -> Vec<f64> {
    assert_eq!(mu.len(), history.len(), "one delivery flag per history slot");
    let m = history.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(mu.len() * m);
    for i in 0..mu.len() {
        if mu[i] == 1 {
            out.extend_from_slice(&history[i]);
            continue;
        }
        match mode {
            DosMode::Zeroing => out.extend(std::iter::repeat(0.0).take(m)),
            DosMode::HoldLast => {
                match (i + 1..mu.len()).find(|&j| mu[j] == 1) {
                    Some(j) => out.extend_from_slice(&history[j]),
                    None => out.extend(std::iter::repeat(0.0).take(m)),
                }
            }
        }
    }
    out
}

/// Stateful delivery channel: tracks the two-state Markov chain (when
/// configured), the last `d + 1` delivery flags and raw measurements.
/// Outside attack episodes every packet is delivered.
#[derive(Clone, Debug)]
pub struct DosChannel {
    proc: DosProcess,
    /// Most recent first; length `d + 1`, zero-padded at start.
    flags: Vec<u8>,
    history: Vec<Vec<f64>>,
    markov_bad: bool,
}

impl DosChannel {
    pub fn new(proc: DosProcess, m: usize) -> Self {
        let slots = proc.hold_depth + 1;
        Self {
            proc,
            // Warm-up slots count as delivered zeros.
            flags: vec![1; slots],
            history: vec![vec![0.0; m]; slots],
            markov_bad: false,
        }
    }

    /// Advances one step: samples delivery for the incoming measurement
    /// (always delivered when `active` is false), pushes it into the
    /// window and returns `(mu, stacked features)`.
    pub fn step(&mut self, z: &[f64], active: bool, rng: &mut ChaCha8Rng) -> (Vec<u8>, Vec<f64>) {
        let delivered = if active { self.sample_delivery(rng) } else { 1 };
        self.flags.rotate_right(1);
        self.flags[0] = delivered;
        self.history.rotate_right(1);
        self.history[0] = z.to_vec();
        let stack = dos_stack(&self.flags, &self.history, self.proc.mode);
        (self.flags.clone(), stack)
    }

    fn sample_delivery(&mut self, rng: &mut ChaCha8Rng) -> u8 {
        match self.proc.kind {
            DosKind::Bernoulli { p_loss } => u8::from(rng.gen::<f64>() >= p_loss),
            DosKind::Markov { p_good_to_bad, p_bad_to_good } => {
                let p = if self.markov_bad { p_bad_to_good } else { p_good_to_bad };
                if rng.gen::<f64>() < p {
                    self.markov_bad = !self.markov_bad;
                }
                u8::from(!self.markov_bad)
            }
        }
    }
}
