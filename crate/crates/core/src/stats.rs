//! Statistical kernels: correlation, effect sizes, Welch's t-test,
//! Benjamini–Hochberg, and factorial-design decompositions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::game::Style;
use crate::prompt::{Component, ConditionCode};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("incomplete design: {0}")]
    IncompleteDesign(String),
    #[error("p-value {0} outside [0, 1]")]
    BadPValue(f64),
    #[error("FDR level {0} outside (0, 1]")]
    BadLevel(f64),
}

pub fn mean<T: Real>(x: &[T]) -> T {
    x.iter().copied().sum::<T>() / T::of(x.len())
}

/// Unbiased (n − 1) sample variance.
pub fn sample_variance<T: Real>(x: &[T]) -> T {
    let m = mean(x);
    x.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / T::of(x.len() - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe<T> {
    pub mean: T,
    pub se: T,
}

impl<T: Real> MeanSe<T> {
    /// Sample mean with SE = sd / √n (SE is 0 for fewer than two values).
    pub fn of(x: &[T]) -> Option<Self> {
        match x.len() {
            0 => None,
            1 => Some(Self { mean: x[0], se: T::zero() }),
            n => Some(Self {
                mean: mean(x),
                se: (sample_variance(x) / T::of(n)).sqrt(),
            }),
        }
    }

    /// Proportion with binomial SE √(p(1 − p)/n).
    pub fn proportion(successes: u64, n: u64) -> Option<Self> {
        (n > 0).then(|| {
            let p = T::of(successes) / T::of(n);
            Self {
                mean: p,
                se: (p * (T::one() - p) / T::of(n)).sqrt(),
            }
        })
    }
}

/// Sample Pearson correlation, clamped to [−1, 1].
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Result<T, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::DegenerateInput("length mismatch"));
    }
    if x.len() < 2 {
        return Err(StatsError::DegenerateInput("need at least two points"));
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(StatsError::DegenerateInput("zero variance"));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// Pooled standard deviation of two samples.
pub fn pooled_sd<T: Real>(a: &[T], b: &[T]) -> Result<T, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::DegenerateInput("each group needs at least two observations"));
    }
    let (n1, n2) = (T::of(a.len()), T::of(b.len()));
    let one = T::one();
    let pooled = ((n1 - one) * sample_variance(a) + (n2 - one) * sample_variance(b)) / (n1 + n2 - T::of(2));
    Ok(pooled.sqrt())
}

/// Standardized mean difference `(mean(a) − mean(b)) / S_p`.
pub fn cohens_d<T: Real>(a: &[T], b: &[T]) -> Result<T, StatsError> {
    let sp = pooled_sd(a, b)?;
    if sp == T::zero() {
        return Err(StatsError::DegenerateInput("pooled standard deviation is zero"));
    }
    Ok((mean(a) - mean(b)) / sp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest<T> {
    pub t: T,
    pub df: T,
    /// Two-sided.
    pub p: T,
}

/// Unequal-variance two-sample t-test with Welch–Satterthwaite degrees of
/// freedom.
pub fn welch_t<T: Real>(a: &[T], b: &[T]) -> Result<WelchTest<T>, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::DegenerateInput("each group needs at least two observations"));
    }
    let (n1, n2) = (T::of(a.len()), T::of(b.len()));
    let v1 = sample_variance(a) / n1;
    let v2 = sample_variance(b) / n2;
    let se2 = v1 + v2;
    if se2 == T::zero() {
        return Err(StatsError::DegenerateInput("both groups have zero variance"));
    }
    let t = (mean(a) - mean(b)) / se2.sqrt();
    let one = T::one();
    let df = se2 * se2 / (v1 * v1 / (n1 - one) + v2 * v2 / (n2 - one));
    Ok(WelchTest {
        t,
        df,
        p: T::of(student_t_two_sided(t.to_f64_lossy(), df.to_f64_lossy())),
    })
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom, via the
/// regularized incomplete beta function (accurate far into the tail).
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhResult<T> {
    pub reject: Vec<bool>,
    /// BH-adjusted p-values in input order.
    pub adjusted: Vec<T>,
}

/// Benjamini–Hochberg step-up procedure at level `q`.
pub fn bh_fdr<T: Real>(pvals: &[T], q: T) -> Result<BhResult<T>, StatsError> {
    if !(q > T::zero() && q <= T::one()) {
        return Err(StatsError::BadLevel(q.to_f64_lossy()));
    }
    if let Some(bad) = pvals.iter().find(|p| !(**p >= T::zero() && **p <= T::one())) {
        return Err(StatsError::BadPValue(bad.to_f64_lossy()));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| pvals[i].partial_cmp(&pvals[j]).expect("finite").then(i.cmp(&j)));

    let mut adjusted = vec![T::zero(); m];
    let mut running = T::one();
    for (rank0, &i) in order.iter().enumerate().rev() {
        let scaled = pvals[i] * T::of(m) / T::of(rank0 + 1);
        running = running.min(scaled).min(T::one());
        adjusted[i] = running;
    }
    let reject = adjusted.iter().map(|&a| a <= q).collect();
    Ok(BhResult { reject, adjusted })
}

/// Per-condition summary in the shape of the model-comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionAggregate<T> {
    pub condition: ConditionCode,
    pub n_games: usize,
    pub bankruptcy_rate: MeanSe<T>,
    pub mean_index: MeanSe<T>,
    pub mean_rounds: MeanSe<T>,
    pub mean_total_bet: MeanSe<T>,
    pub mean_net_pl: MeanSe<T>,
    /// Component means over games with at least one bet.
    pub mean_i_ba: Option<MeanSe<T>>,
    pub mean_i_lc: Option<MeanSe<T>>,
    pub mean_i_eb: Option<MeanSe<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    BankruptcyRate,
    Index,
    Rounds,
    TotalBet,
    NetPl,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::BankruptcyRate, Metric::Index, Metric::Rounds, Metric::TotalBet, Metric::NetPl];

    pub fn name(self) -> &'static str {
        match self {
            Metric::BankruptcyRate => "bankruptcy_rate",
            Metric::Index => "index",
            Metric::Rounds => "rounds",
            Metric::TotalBet => "total_bet",
            Metric::NetPl => "net_pl",
        }
    }
}

impl<T: Real> ConditionAggregate<T> {
    pub fn metric(&self, m: Metric) -> T {
        match m {
            Metric::BankruptcyRate => self.bankruptcy_rate.mean,
            Metric::Index => self.mean_index.mean,
            Metric::Rounds => self.mean_rounds.mean,
            Metric::TotalBet => self.mean_total_bet.mean,
            Metric::NetPl => self.mean_net_pl.mean,
        }
    }
}

/// `(condition, value)` rows for one metric.
pub fn metric_table<T: Real>(aggregates: &[ConditionAggregate<T>], metric: Metric) -> Vec<(ConditionCode, T)> {
    aggregates.iter().map(|a| (a.condition, a.metric(metric))).collect()
}

fn full_design<T: Real>(table: &[(ConditionCode, T)], style: Style) -> Result<HashMap<ConditionCode, T>, StatsError> {
    let mut cells = HashMap::new();
    for &(c, v) in table.iter().filter(|(c, _)| c.style == style) {
        if cells.insert(c, v).is_some() {
            return Err(StatsError::IncompleteDesign(format!("duplicate condition {c}")));
        }
    }
    if cells.len() != 32 {
        return Err(StatsError::IncompleteDesign(format!(
            "{} of 32 {} conditions present",
            cells.len(),
            style.as_str()
        )));
    }
    Ok(cells)
}

/// Mean over the 16 conditions containing `component` minus the mean over
/// the 16 without it.
pub fn component_effect<T: Real>(table: &[(ConditionCode, T)], component: Component, style: Style) -> Result<T, StatsError> {
    let cells = full_design(table, style)?;
    let (with, without): (Vec<_>, Vec<_>) = cells.iter().partition(|(c, _)| c.contains(component));
    let avg = |xs: &[(&ConditionCode, &T)]| xs.iter().map(|(_, v)| **v).sum::<T>() / T::of(xs.len());
    Ok(avg(&with) - avg(&without))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityTrend<T> {
    /// Mean metric for 0..=5 components.
    pub means: [T; 6],
    /// Pearson r of (component count, group mean); `None` when undefined.
    pub r: Option<T>,
}

pub fn complexity_trend<T: Real>(table: &[(ConditionCode, T)], style: Style) -> Result<ComplexityTrend<T>, StatsError> {
    let cells = full_design(table, style)?;
    let mut sums = [T::zero(); 6];
    let mut counts = [0usize; 6];
    for (c, v) in &cells {
        sums[c.len()] = sums[c.len()] + *v;
        counts[c.len()] += 1;
    }
    let mut means = [T::zero(); 6];
    for k in 0..6 {
        means[k] = sums[k] / T::of(counts[k]);
    }
    let xs: Vec<T> = (0..6).map(T::of).collect();
    let r = pearson(&xs, &means).ok();
    Ok(ComplexityTrend { means, r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y2: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y2).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        // sxy = 5.5, sxx = 5, syy = 8.75 -> 5.5 / sqrt(43.75)
        let r = pearson(&x, &[1.0, 3.0, 2.0, 5.0]).unwrap();
        assert!((r - 5.5 / 43.75f64.sqrt()).abs() < 1e-14);
        assert!((r - 0.8315).abs() < 1e-4);
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn cohens_d_examples() {
        assert_eq!(cohens_d(&[1.0, 2.0, 3.0], &[3.0, 4.0, 5.0]).unwrap(), -2.0);
        assert_eq!(cohens_d(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!(cohens_d(&[2.0, 2.0], &[2.0, 2.0]).is_err());
        assert!(cohens_d(&[2.0], &[2.0, 1.0]).is_err());
    }

    #[test]
    fn welch_equal_groups() {
        let w = welch_t(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(w.t, 0.0);
        assert_eq!(w.p, 1.0);
        assert!(welch_t(&[1.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn bh_examples() {
        let r = bh_fdr(&[0.0f64; 4], 0.05).unwrap();
        assert!(r.reject.iter().all(|x| *x));
        assert_eq!(bh_fdr(&[0.04], 0.05).unwrap().reject, vec![true]);
        assert_eq!(bh_fdr(&[0.06], 0.05).unwrap().reject, vec![false]);
        assert_eq!(bh_fdr(&[1.2], 0.05), Err(StatsError::BadPValue(1.2)));
        assert!(bh_fdr(&[f64::NAN], 0.05).is_err());
        assert!(bh_fdr(&[0.1], 0.0).is_err());
        assert!(bh_fdr::<f64>(&[], 0.05).unwrap().reject.is_empty());
    }

    #[test]
    fn proportion_se() {
        let p = MeanSe::<f64>::proportion(1, 4).unwrap();
        assert_eq!(p.mean, 0.25);
        assert!((p.se - (0.25f64 * 0.75 / 4.0).sqrt()).abs() < 1e-15);
        assert!(MeanSe::<f64>::proportion(0, 0).is_none());
    }

    #[test]
    fn incomplete_design_rejected() {
        let table: Vec<_> = ConditionCode::all_for_style(Style::Fixed)
            .into_iter()
            .take(31)
            .map(|c| (c, 1.0))
            .collect();
        assert!(matches!(
            component_effect(&table, Component::G, Style::Fixed),
            Err(StatsError::IncompleteDesign(_))
        ));
        assert!(complexity_trend(&table, Style::Variable).is_err());
    }
}
