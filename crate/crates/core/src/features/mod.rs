//! Downstream analysis of recorded per-trial feature activations:
//! differential features, separation ranking, layer distributions,
//! population means and patching-effect statistics.
//!
//! Activations arrive through the interchange format in [`format`]; no
//! model or autoencoder code lives here.

mod analysis;
pub mod format;
mod patch;
mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analysis::{
    differential_features, differential_features_multi, layer_distribution, max_separation, mean_vectors_dataset,
    population_mean_vectors, DiffConfig, DiffReport,
    ExcludedFeature, ExclusionReason, FeatureStat, LayerCounts, LayerDistribution, ReferenceFeature,
    SignificanceMode, REFERENCE_FEATURES,
};
pub use patch::{patch_effect, OutcomeCounts, PatchClass, PatchContext, PatchEffect, RateDelta};
pub use synth::{synth_activations, SynthSpec};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("dataset needs at least {0} trials in each class")]
    SingleClassDataset(usize),
    #[error("malformed dataset: {0}")]
    Malformed(String),
    #[error("bad synthetic spec: {0}")]
    BadSpec(String),
    #[error("patch arm has no trials")]
    EmptyArm,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bankrupt,
    Safe,
}

impl Label {
    pub fn flip(self) -> Self {
        match self {
            Label::Bankrupt => Label::Safe,
            Label::Safe => Label::Bankrupt,
        }
    }
}

/// Row-major `n_trials × n_features` activations at the final decision.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationDataset {
    pub layer: u32,
    pub n_features: usize,
    pub n_trials: usize,
    pub values: Vec<f32>,
    pub labels: Vec<Label>,
    pub trial_ids: Vec<String>,
}

impl ActivationDataset {
    pub fn new(
        layer: u32,
        n_features: usize,
        values: Vec<f32>,
        labels: Vec<Label>,
        trial_ids: Vec<String>,
    ) -> Result<Self, FeatureError> {
        let ds = Self {
            layer,
            n_features,
            n_trials: labels.len(),
            values,
            labels,
            trial_ids,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.labels.len() != self.n_trials || self.trial_ids.len() != self.n_trials {
            return Err(FeatureError::Malformed("labels/trial_ids length must equal n_trials".into()));
        }
        if self.values.len() != self.n_trials * self.n_features {
            return Err(FeatureError::Malformed(format!(
                "payload has {} values, expected {} x {}",
                self.values.len(),
                self.n_trials,
                self.n_features
            )));
        }
        Ok(())
    }

    pub fn row(&self, trial: usize) -> &[f32] {
        &self.values[trial * self.n_features..(trial + 1) * self.n_features]
    }

    pub fn value(&self, trial: usize, feature: usize) -> f32 {
        self.values[trial * self.n_features + feature]
    }

    pub fn class_sizes(&self) -> (usize, usize) {
        let b = self.labels.iter().filter(|l| **l == Label::Bankrupt).count();
        (b, self.n_trials - b)
    }

    /// Same data with every label swapped.
    pub fn with_flipped_labels(&self) -> Self {
        Self {
            labels: self.labels.iter().map(|l| l.flip()).collect(),
            ..self.clone()
        }
    }

    /// Same data with labels permuted by `perm` (a permutation of trial indices).
    pub fn with_permuted_labels(&self, perm: &[usize]) -> Self {
        Self {
            labels: perm.iter().map(|&i| self.labels[i]).collect(),
            ..self.clone()
        }
    }

    /// Column `feature` split into (bankrupt, safe) values as f64.
    pub fn split_column(&self, feature: usize) -> (Vec<f64>, Vec<f64>) {
        let mut bankrupt = Vec::new();
        let mut safe = Vec::new();
        for (t, label) in self.labels.iter().enumerate() {
            let v = self.value(t, feature) as f64;
            match label {
                Label::Bankrupt => bankrupt.push(v),
                Label::Safe => safe.push(v),
            }
        }
        (bankrupt, safe)
    }
}
