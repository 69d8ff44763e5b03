use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ActivationDataset, FeatureError, Label};
use crate::stats::{bh_fdr, cohens_d, mean, welch_t};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SignificanceMode {
    /// `p_adj < alpha` where `p_adj` is BH-adjusted.
    AdjustedP,
    /// `p_raw < alpha` and rejected by BH at level `q`.
    RawAndFdr { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffConfig {
    pub alpha: f64,
    pub d_min: f64,
    pub mode: SignificanceMode,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            alpha: 0.001,
            d_min: 0.3,
            mode: SignificanceMode::AdjustedP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStat {
    pub layer: u32,
    pub feature_index: usize,
    pub mean_bankrupt: f64,
    pub mean_safe: f64,
    /// Positive leans bankrupt (risky), negative leans safe.
    pub d: f64,
    pub p_raw: f64,
    pub p_adj: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// Zero in every trial.
    Inactive,
    /// Same nonzero value in every trial.
    Constant,
    /// Zero within-group variance in both groups.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedFeature {
    pub layer: u32,
    pub feature_index: usize,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub config: DiffConfig,
    pub stats: Vec<FeatureStat>,
    pub excluded: Vec<ExcludedFeature>,
}

impl DiffReport {
    pub fn passing(&self) -> impl Iterator<Item = &FeatureStat> {
        self.stats.iter().filter(|s| s.passes)
    }
}

enum Tested {
    Stat(FeatureStat),
    Excluded(ExcludedFeature),
}

fn test_feature(ds: &ActivationDataset, feature: usize) -> Tested {
    let (bankrupt, safe) = ds.split_column(feature);
    let excluded = |reason| {
        Tested::Excluded(ExcludedFeature {
            layer: ds.layer,
            feature_index: feature,
            reason,
        })
    };
    let first = ds.value(0, feature);
    if (0..ds.n_trials).all(|t| ds.value(t, feature) == 0.0) {
        return excluded(ExclusionReason::Inactive);
    }
    if (0..ds.n_trials).all(|t| ds.value(t, feature) == first) {
        return excluded(ExclusionReason::Constant);
    }
    match (cohens_d(&bankrupt, &safe), welch_t(&bankrupt, &safe)) {
        (Ok(d), Ok(w)) => Tested::Stat(FeatureStat {
            layer: ds.layer,
            feature_index: feature,
            mean_bankrupt: mean(&bankrupt),
            mean_safe: mean(&safe),
            d,
            p_raw: w.p,
            p_adj: w.p,
            passes: false,
        }),
        _ => excluded(ExclusionReason::Degenerate),
    }
}

/// Per-feature Welch p-values and Cohen's d, BH-adjusted across every
/// tested feature of the dataset.
pub fn differential_features(ds: &ActivationDataset, config: &DiffConfig) -> Result<DiffReport, FeatureError> {
    differential_features_multi(std::slice::from_ref(ds), config, false)
}

/// Several layers at once. With `pool_layers` the BH family spans all
/// datasets; otherwise each dataset is its own family.
pub fn differential_features_multi(
    datasets: &[ActivationDataset],
    config: &DiffConfig,
    pool_layers: bool,
) -> Result<DiffReport, FeatureError> {
    let mut families: Vec<Vec<FeatureStat>> = Vec::new();
    let mut excluded = Vec::new();
    for ds in datasets {
        ds.validate()?;
        let (nb, ns) = ds.class_sizes();
        if nb < 2 || ns < 2 {
            return Err(FeatureError::SingleClassDataset(2));
        }
        let tested: Vec<Tested> = (0..ds.n_features).into_par_iter().map(|f| test_feature(ds, f)).collect();
        let mut stats = Vec::new();
        for t in tested {
            match t {
                Tested::Stat(s) => stats.push(s),
                Tested::Excluded(e) => excluded.push(e),
            }
        }
        families.push(stats);
    }
    if pool_layers {
        let all = families.concat();
        families = vec![all];
    }
    let mut stats = Vec::new();
    for mut family in families {
        adjust_family(&mut family, config)?;
        stats.extend(family);
    }
    Ok(DiffReport {
        config: *config,
        stats,
        excluded,
    })
}

fn adjust_family(family: &mut [FeatureStat], config: &DiffConfig) -> Result<(), FeatureError> {
    let raw: Vec<f64> = family.iter().map(|s| s.p_raw).collect();
    let q = match config.mode {
        SignificanceMode::AdjustedP => config.alpha,
        SignificanceMode::RawAndFdr { q } => q,
    };
    let bh = bh_fdr(&raw, q)?;
    for (i, s) in family.iter_mut().enumerate() {
        s.p_adj = bh.adjusted[i];
        let significant = match config.mode {
            SignificanceMode::AdjustedP => s.p_adj < config.alpha,
            SignificanceMode::RawAndFdr { .. } => s.p_raw < config.alpha && bh.reject[i],
        };
        s.passes = significant && s.d.abs() > config.d_min;
    }
    Ok(())
}

/// Top `k` by |d|, ties broken by (layer, feature_index).
pub fn max_separation(stats: &[FeatureStat], k: usize) -> Vec<FeatureStat> {
    let mut sorted = stats.to_vec();
    sorted.sort_by(|a, b| {
        b.d.abs()
            .total_cmp(&a.d.abs())
            .then(a.layer.cmp(&b.layer))
            .then(a.feature_index.cmp(&b.feature_index))
    });
    sorted.truncate(k);
    sorted
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LayerCounts {
    pub layer: u32,
    /// d < 0.
    pub safe: usize,
    /// d > 0.
    pub risky: usize,
}

impl LayerCounts {
    pub fn total(&self) -> usize {
        self.safe + self.risky
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerDistribution {
    pub layers: Vec<LayerCounts>,
    pub total_safe: usize,
    pub total_risky: usize,
}

/// Stacked safe/risky counts per layer. Every layer in `layers` gets a row;
/// layers outside the range that occur in `stats` are added.
pub fn layer_distribution(stats: &[FeatureStat], only_passing: bool, layers: RangeInclusive<u32>) -> LayerDistribution {
    let mut by_layer: BTreeMap<u32, LayerCounts> = layers.map(|l| (l, LayerCounts { layer: l, ..Default::default() })).collect();
    for s in stats.iter().filter(|s| !only_passing || s.passes) {
        let c = by_layer.entry(s.layer).or_insert(LayerCounts {
            layer: s.layer,
            ..Default::default()
        });
        if s.d > 0.0 {
            c.risky += 1;
        } else if s.d < 0.0 {
            c.safe += 1;
        }
    }
    let layers: Vec<LayerCounts> = by_layer.into_values().collect();
    LayerDistribution {
        total_safe: layers.iter().map(|c| c.safe).sum(),
        total_risky: layers.iter().map(|c| c.risky).sum(),
        layers,
    }
}

/// Per-feature class means `(bankrupt, safe)`.
pub fn population_mean_vectors(ds: &ActivationDataset) -> Result<(Vec<f64>, Vec<f64>), FeatureError> {
    ds.validate()?;
    let (nb, ns) = ds.class_sizes();
    if nb == 0 || ns == 0 {
        return Err(FeatureError::SingleClassDataset(1));
    }
    let mut bankrupt = vec![0.0f64; ds.n_features];
    let mut safe = vec![0.0f64; ds.n_features];
    for t in 0..ds.n_trials {
        let acc = match ds.labels[t] {
            Label::Bankrupt => &mut bankrupt,
            Label::Safe => &mut safe,
        };
        for (a, v) in acc.iter_mut().zip(ds.row(t)) {
            *a += *v as f64;
        }
    }
    bankrupt.iter_mut().for_each(|v| *v /= nb as f64);
    safe.iter_mut().for_each(|v| *v /= ns as f64);
    Ok((bankrupt, safe))
}

/// The two mean vectors as a two-row dataset (`mean_bankrupt`, `mean_safe`)
/// for an external patching executor.
pub fn mean_vectors_dataset(ds: &ActivationDataset) -> Result<ActivationDataset, FeatureError> {
    let (b, s) = population_mean_vectors(ds)?;
    let values = b.iter().chain(&s).map(|v| *v as f32).collect();
    ActivationDataset::new(
        ds.layer,
        ds.n_features,
        values,
        vec![Label::Bankrupt, Label::Safe],
        vec!["mean_bankrupt".into(), "mean_safe".into()],
    )
}

/// Published separation magnitudes, carried as comparison annotations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceFeature {
    pub layer: u32,
    pub feature_index: usize,
    pub d: f64,
}

pub const REFERENCE_FEATURES: [ReferenceFeature; 4] = [
    ReferenceFeature { layer: 28, feature_index: 25651, d: 1.482 },
    ReferenceFeature { layer: 28, feature_index: 18936, d: -1.282 },
    ReferenceFeature { layer: 30, feature_index: 16827, d: 1.669 },
    ReferenceFeature { layer: 30, feature_index: 18141, d: -1.272 },
];

#[cfg(test)]
mod tests {
    use super::*;

    fn stat(layer: u32, idx: usize, d: f64, passes: bool) -> FeatureStat {
        FeatureStat {
            layer,
            feature_index: idx,
            mean_bankrupt: d,
            mean_safe: 0.0,
            d,
            p_raw: 0.0,
            p_adj: 0.0,
            passes,
        }
    }

    fn ds(values: Vec<f32>, n_features: usize, labels: Vec<Label>) -> ActivationDataset {
        let ids = (0..labels.len()).map(|i| format!("t{i}")).collect();
        ActivationDataset::new(27, n_features, values, labels, ids).unwrap()
    }

    use Label::{Bankrupt as B, Safe as S};

    #[test]
    fn ranking_order_and_ties() {
        let stats = vec![stat(25, 0, -1.3, true), stat(25, 1, 1.6, true), stat(26, 2, 1.4, true), stat(24, 9, 1.4, true)];
        let top = max_separation(&stats, 10);
        let order: Vec<_> = top.iter().map(|s| (s.layer, s.feature_index)).collect();
        assert_eq!(order, vec![(25, 1), (24, 9), (26, 2), (25, 0)]);
        assert_eq!(max_separation(&stats, 2).len(), 2);
    }

    #[test]
    fn layer_counts() {
        let d = layer_distribution(&[], true, 25..=31);
        assert_eq!(d.layers.len(), 7);
        assert_eq!(d.total_safe + d.total_risky, 0);

        let stats = vec![stat(30, 0, 1.0, true), stat(30, 1, -1.0, true), stat(30, 2, -0.5, true), stat(29, 3, 2.0, false)];
        let d = layer_distribution(&stats, true, 25..=31);
        let l30 = d.layers.iter().find(|c| c.layer == 30).unwrap();
        assert_eq!((l30.safe, l30.risky), (2, 1));
        assert_eq!(d.layers.iter().find(|c| c.layer == 29).unwrap().total(), 0);
        let all = layer_distribution(&stats, false, 25..=31);
        assert_eq!(all.total_risky, 2);
    }

    #[test]
    fn means_two_per_class() {
        let d = ds(vec![1.0, 2.0, 3.0, 4.0, 10.0, 0.0, 20.0, 0.0], 2, vec![B, B, S, S]);
        let (b, s) = population_mean_vectors(&d).unwrap();
        assert_eq!(b, vec![2.0, 3.0]);
        assert_eq!(s, vec![15.0, 0.0]);
        assert!(population_mean_vectors(&ds(vec![1.0], 1, vec![B])).is_err());
        let export = mean_vectors_dataset(&d).unwrap();
        assert_eq!(export.values, vec![2.0, 3.0, 15.0, 0.0]);
    }

    #[test]
    fn exclusions_and_identical_means() {
        // feature 0 inactive, 1 constant, 2 varies with identical class means
        let values = vec![
            0.0, 5.0, 1.0, //
            0.0, 5.0, 3.0, //
            0.0, 5.0, 1.0, //
            0.0, 5.0, 3.0,
        ];
        let d = ds(values, 3, vec![B, B, S, S]);
        let rep = differential_features(&d, &DiffConfig::default()).unwrap();
        assert_eq!(rep.excluded.len(), 2);
        assert_eq!(rep.excluded[0].reason, ExclusionReason::Inactive);
        assert_eq!(rep.excluded[1].reason, ExclusionReason::Constant);
        assert_eq!(rep.stats.len(), 1);
        assert_eq!(rep.stats[0].d, 0.0);
        assert!(!rep.stats[0].passes);
    }

    #[test]
    fn single_class_rejected() {
        let d = ds(vec![1.0, 2.0, 3.0], 1, vec![B, B, S]);
        assert!(matches!(
            differential_features(&d, &DiffConfig::default()),
            Err(FeatureError::SingleClassDataset(_))
        ));
    }
}
