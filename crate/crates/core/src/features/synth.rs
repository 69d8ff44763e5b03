use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ActivationDataset, FeatureError, Label};

/// Planted effect sizes for a synthetic dataset. Features are laid out as
/// the planted list followed by `null_features` features with d = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(default = "default_layer")]
    pub layer: u32,
    pub n_bankrupt: usize,
    pub n_safe: usize,
    /// True Cohen's d per planted feature.
    #[serde(default)]
    pub features: Vec<f64>,
    #[serde(default)]
    pub null_features: usize,
}

fn default_layer() -> u32 {
    30
}

impl SynthSpec {
    pub fn true_d(&self) -> Vec<f64> {
        let mut d = self.features.clone();
        d.resize(self.features.len() + self.null_features, 0.0);
        d
    }
}

/// Safe trials draw N(0, 1) and bankrupt trials N(d, 1) independently per
/// feature, so the population pooled SD is 1 and the mean gap is d.
/// Bankrupt trials come first.
pub fn synth_activations(spec: &SynthSpec, seed: u64) -> Result<ActivationDataset, FeatureError> {
    if spec.n_bankrupt == 0 || spec.n_safe == 0 {
        return Err(FeatureError::BadSpec("both classes need at least one trial".into()));
    }
    let d = spec.true_d();
    if d.is_empty() {
        return Err(FeatureError::BadSpec("no features".into()));
    }
    if let Some(bad) = d.iter().find(|v| !v.is_finite()) {
        return Err(FeatureError::BadSpec(format!("non-finite d {bad}")));
    }
    let n_trials = spec.n_bankrupt + spec.n_safe;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_trials * d.len());
    let mut labels = Vec::with_capacity(n_trials);
    for t in 0..n_trials {
        let label = if t < spec.n_bankrupt { Label::Bankrupt } else { Label::Safe };
        labels.push(label);
        for &gap in &d {
            let z: f64 = StandardNormal.sample(&mut rng);
            let shift = if label == Label::Bankrupt { gap } else { 0.0 };
            values.push((z + shift) as f32);
        }
    }
    let trial_ids = (0..n_trials).map(|i| format!("synth-{i}")).collect();
    ActivationDataset::new(spec.layer, d.len(), values, labels, trial_ids)
}
