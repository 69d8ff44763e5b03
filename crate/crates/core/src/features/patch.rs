use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::FeatureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchContext {
    Safe,
    Risky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchClass {
    SafeFeatures,
    RiskyFeatures,
}

/// Trial outcomes for one arm of a patching experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub stopped: u64,
    pub bankrupt: u64,
    pub continued: u64,
}

impl OutcomeCounts {
    pub fn total(&self) -> u64 {
        self.stopped + self.bankrupt + self.continued
    }
}

impl FromStr for OutcomeCounts {
    type Err = String;

    /// `stopped,bankrupt,continued`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<u64> = s
            .split(',')
            .map(|p| p.trim().parse::<u64>().map_err(|e| format!("bad count '{p}': {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [stopped, bankrupt, continued] => Ok(Self { stopped, bankrupt, continued }),
            _ => Err(format!("expected stopped,bankrupt,continued; got '{s}'")),
        }
    }
}

impl fmt::Display for OutcomeCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.stopped, self.bankrupt, self.continued)
    }
}

/// Absolute rate difference `patched − baseline`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateDelta {
    pub baseline: f64,
    pub patched: f64,
    pub delta: f64,
    /// Unpooled SE √(p₁(1−p₁)/n₁ + p₂(1−p₂)/n₂).
    pub se: f64,
    /// Two-proportion z statistic (pooled variance).
    pub z: f64,
    /// Two-sided.
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchEffect {
    pub context: PatchContext,
    pub patch_class: PatchClass,
    pub delta_stopping_rate: RateDelta,
    pub delta_bankruptcy_rate: RateDelta,
    pub n_baseline: u64,
    pub n_patched: u64,
}

fn rate_delta(k1: u64, n1: u64, k2: u64, n2: u64) -> RateDelta {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let p1 = k1 as f64 / n1f;
    let p2 = k2 as f64 / n2f;
    let se = (p1 * (1.0 - p1) / n1f + p2 * (1.0 - p2) / n2f).sqrt();
    let pooled = (k1 + k2) as f64 / (n1f + n2f);
    let se0 = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    let (z, p) = if se0 > 0.0 {
        let z = (p2 - p1) / se0;
        (z, erfc(z.abs() / std::f64::consts::SQRT_2))
    } else {
        (0.0, 1.0)
    };
    RateDelta {
        baseline: p1,
        patched: p2,
        delta: p2 - p1,
        se,
        z,
        p,
    }
}

pub fn patch_effect(
    baseline: &OutcomeCounts,
    patched: &OutcomeCounts,
    context: PatchContext,
    patch_class: PatchClass,
) -> Result<PatchEffect, FeatureError> {
    let (n1, n2) = (baseline.total(), patched.total());
    if n1 == 0 || n2 == 0 {
        return Err(FeatureError::EmptyArm);
    }
    Ok(PatchEffect {
        context,
        patch_class,
        delta_stopping_rate: rate_delta(baseline.stopped, n1, patched.stopped, n2),
        delta_bankruptcy_rate: rate_delta(baseline.bankrupt, n1, patched.bankrupt, n2),
        n_baseline: n1,
        n_patched: n2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(stopped: u64, bankrupt: u64, continued: u64) -> OutcomeCounts {
        OutcomeCounts { stopped, bankrupt, continued }
    }

    #[test]
    fn stop_rate_delta() {
        let e = patch_effect(&counts(10, 5, 15), &counts(19, 2, 9), PatchContext::Risky, PatchClass::SafeFeatures).unwrap();
        assert!((e.delta_stopping_rate.delta - 0.3).abs() < 1e-12);
        assert!((e.delta_bankruptcy_rate.delta + 0.1).abs() < 1e-12);
        assert_eq!(e.n_baseline, 30);
        assert!(e.delta_stopping_rate.z > 0.0);
        assert!(e.delta_stopping_rate.p < 0.05);
    }

    #[test]
    fn identical_arms() {
        let c = counts(12, 3, 15);
        let e = patch_effect(&c, &c, PatchContext::Safe, PatchClass::RiskyFeatures).unwrap();
        assert_eq!(e.delta_stopping_rate.delta, 0.0);
        assert_eq!(e.delta_stopping_rate.z, 0.0);
        assert!((e.delta_stopping_rate.p - 1.0).abs() < 1e-12);
        let zero = counts(0, 0, 30);
        let e = patch_effect(&zero, &zero, PatchContext::Safe, PatchClass::RiskyFeatures).unwrap();
        assert_eq!(e.delta_bankruptcy_rate.p, 1.0);
    }

    #[test]
    fn empty_arm() {
        assert!(matches!(
            patch_effect(&counts(0, 0, 0), &counts(1, 0, 0), PatchContext::Safe, PatchClass::SafeFeatures),
            Err(FeatureError::EmptyArm)
        ));
    }

    #[test]
    fn parse_counts() {
        assert_eq!("10, 2,18".parse::<OutcomeCounts>(), Ok(counts(10, 2, 18)));
        assert!("10,2".parse::<OutcomeCounts>().is_err());
        assert_eq!(counts(1, 2, 3).to_string(), "1,2,3");
    }
}
