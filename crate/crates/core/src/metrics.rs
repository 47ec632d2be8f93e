//! Per-dataset means, macro accuracy and relative gain.
//!
//! All values are fractions in `[0, 1]`; percentages belong to presentation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("dataset has no rewards")]
    EmptyDataset,
    #[error("report has no datasets")]
    EmptyReport,
    #[error("dataset keys differ: only in report {only_report:?}, only in base {only_base:?}")]
    KeyMismatch {
        only_report: Vec<String>,
        only_base: Vec<String>,
    },
    #[error("every dataset has a zero base mean")]
    AllExcluded,
}

pub fn dataset_mean(rewards: &[f64]) -> Result<f64, MetricsError> {
    if rewards.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    Ok(rewards.iter().sum::<f64>() / rewards.len() as f64)
}

/// Population standard deviation; zero for fewer than two values.
pub fn population_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Unweighted mean of per-dataset means. Dataset sizes never enter.
pub fn macro_accuracy(per_dataset: &BTreeMap<String, f64>) -> Result<f64, MetricsError> {
    if per_dataset.is_empty() {
        return Err(MetricsError::EmptyReport);
    }
    Ok(per_dataset.values().sum::<f64>() / per_dataset.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeGain {
    pub value: f64,
    /// Datasets left out because their base mean is zero.
    pub excluded: Vec<String>,
}

fn ratios(
    per_dataset: &BTreeMap<String, f64>,
    base: &BTreeMap<String, f64>,
) -> Result<(Vec<f64>, Vec<String>), MetricsError> {
    if per_dataset.is_empty() {
        return Err(MetricsError::EmptyReport);
    }
    let only_report: Vec<String> = per_dataset.keys().filter(|k| !base.contains_key(*k)).cloned().collect();
    let only_base: Vec<String> = base.keys().filter(|k| !per_dataset.contains_key(*k)).cloned().collect();
    if !only_report.is_empty() || !only_base.is_empty() {
        return Err(MetricsError::KeyMismatch { only_report, only_base });
    }
    let mut out = Vec::with_capacity(per_dataset.len());
    let mut excluded = Vec::new();
    for (k, j) in per_dataset {
        let b = base[k];
        if b > 0.0 {
            out.push(j / b);
        } else {
            excluded.push(k.clone());
        }
    }
    if out.is_empty() {
        return Err(MetricsError::AllExcluded);
    }
    Ok((out, excluded))
}

/// Geometric mean of per-dataset ratios minus one, computed in log space.
///
/// Datasets with a zero base mean are excluded and listed. A zero numerator
/// against a positive base yields a gain of `-1`.
pub fn relative_gain(
    per_dataset: &BTreeMap<String, f64>,
    base: &BTreeMap<String, f64>,
) -> Result<RelativeGain, MetricsError> {
    let (rs, excluded) = ratios(per_dataset, base)?;
    let value = if rs.iter().any(|&r| r == 0.0) {
        -1.0
    } else {
        (rs.iter().map(|r| r.ln()).sum::<f64>() / rs.len() as f64).exp() - 1.0
    };
    Ok(RelativeGain { value, excluded })
}

/// Same quantity as [`relative_gain`] via the direct product; for cross-checks.
pub fn relative_gain_direct(
    per_dataset: &BTreeMap<String, f64>,
    base: &BTreeMap<String, f64>,
) -> Result<RelativeGain, MetricsError> {
    let (rs, excluded) = ratios(per_dataset, base)?;
    let product: f64 = rs.iter().product();
    Ok(RelativeGain {
        value: product.powf(1.0 / rs.len() as f64) - 1.0,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn means() {
        assert_eq!(dataset_mean(&[1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(dataset_mean(&[0.7]).unwrap(), 0.7);
        assert_eq!(dataset_mean(&[]), Err(MetricsError::EmptyDataset));
        assert_eq!(population_std(&[1.0, 0.0]), 0.5);
        assert_eq!(population_std(&[0.3]), 0.0);
    }

    #[test]
    fn macro_acc() {
        assert_eq!(macro_accuracy(&map(&[("A", 0.5), ("B", 0.7)])).unwrap(), 0.6);
        assert_eq!(macro_accuracy(&map(&[("A", 0.25)])).unwrap(), 0.25);
        assert_eq!(macro_accuracy(&BTreeMap::new()), Err(MetricsError::EmptyReport));
    }

    #[test]
    fn gain_hand_case() {
        // ratios 0.55/0.5 = 1.1 and 0.44/0.4 = 1.1; sqrt(1.1 * 1.1) - 1 = 0.1
        let rg = relative_gain(&map(&[("A", 0.55), ("B", 0.44)]), &map(&[("A", 0.5), ("B", 0.4)])).unwrap();
        assert!((rg.value - 0.1).abs() < 1e-12, "{}", rg.value);
        assert!(rg.excluded.is_empty());
    }

    #[test]
    fn gain_identity_and_exclusion() {
        let m = map(&[("A", 0.3), ("B", 0.9)]);
        assert_eq!(relative_gain(&m, &m).unwrap().value, 0.0);
        let rg = relative_gain(&map(&[("A", 0.4), ("B", 0.6)]), &map(&[("A", 0.0), ("B", 0.3)])).unwrap();
        assert_eq!(rg.excluded, vec!["A".to_string()]);
        assert!((rg.value - 1.0).abs() < 1e-12);
        assert_eq!(
            relative_gain(&map(&[("A", 0.4)]), &map(&[("A", 0.0)])),
            Err(MetricsError::AllExcluded)
        );
        assert!(matches!(
            relative_gain(&map(&[("A", 0.4)]), &map(&[("B", 0.4)])),
            Err(MetricsError::KeyMismatch { .. })
        ));
        assert_eq!(relative_gain(&map(&[("A", 0.0)]), &map(&[("A", 0.5)])).unwrap().value, -1.0);
    }

    fn ratio_maps() -> impl Strategy<Value = (BTreeMap<String, f64>, BTreeMap<String, f64>)> {
        prop::collection::vec((0.01f64..1.0, 0.01f64..1.0), 1..20).prop_map(|pairs| {
            let a = pairs.iter().enumerate().map(|(i, (x, _))| (format!("d{i}"), *x)).collect();
            let b = pairs.iter().enumerate().map(|(i, (_, y))| (format!("d{i}"), *y)).collect();
            (a, b)
        })
    }

    proptest! {
        #[test]
        fn log_space_matches_direct((a, b) in ratio_maps()) {
            let l = relative_gain(&a, &b).unwrap().value;
            let d = relative_gain_direct(&a, &b).unwrap().value;
            prop_assert!((l - d).abs() < 1e-12);
        }

        #[test]
        fn sign_follows_ratios((a, b) in ratio_maps()) {
            let rg = relative_gain(&a, &b).unwrap().value;
            if a.iter().all(|(k, v)| *v > b[k]) { prop_assert!(rg > 0.0); }
            if a.iter().all(|(k, v)| *v < b[k]) { prop_assert!(rg < 0.0); }
        }

        #[test]
        fn squaring_one_ratio_scales_by_nth_root(r in 0.5f64..2.0, n in 1usize..10) {
            let base: BTreeMap<String, f64> = (0..n).map(|i| (format!("d{i}"), 0.25)).collect();
            let mut a = base.clone();
            a.insert("d0".into(), 0.25 * r);
            let mut sq = base.clone();
            sq.insert("d0".into(), 0.25 * r * r);
            let g1 = 1.0 + relative_gain(&a, &base).unwrap().value;
            let g2 = 1.0 + relative_gain(&sq, &base).unwrap().value;
            prop_assert!((g2 / g1 - r.powf(1.0 / n as f64)).abs() < 1e-9);
        }

        #[test]
        fn duplication_leaves_macro_unchanged(groups in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 1..10), 1..6), which in 0usize..6) {
            let which = which % groups.len();
            let means = |gs: &Vec<Vec<f64>>| -> BTreeMap<String, f64> {
                gs.iter().enumerate().map(|(i, g)| (format!("d{i}"), dataset_mean(g).unwrap())).collect()
            };
            let mut doubled = groups.clone();
            let copy = doubled[which].clone();
            doubled[which].extend(copy);
            let a = macro_accuracy(&means(&groups)).unwrap();
            let b = macro_accuracy(&means(&doubled)).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
