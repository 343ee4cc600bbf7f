//! Entropy triage of dataset columns.
//!
//! Each column is binned into an equal-width histogram over its own range and
//! scored by Shannon entropy. Near-zero normalized entropy marks a redundant
//! column, near-one a random column; anything in between is kept as
//! meaningful.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("column is empty")]
    EmptyColumn,
    #[error("at least 2 bins are required, got {0}")]
    TooFewBins(usize),
    #[error("non-finite value at row {0}")]
    NonFinite(usize),
    #[error("thresholds must satisfy 0 <= low < high <= 1 (got low={low}, high={high})")]
    BadThresholds { low: f64, high: f64 },
    #[error("column `{name}` has {got} rows, expected {expected}")]
    RaggedColumn {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("column `{name}`: {source}")]
    Column {
        name: String,
        #[source]
        source: Box<FeatureError>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column<T> {
    pub name: String,
    pub values: Vec<T>,
}

impl<T> Column<T> {
    pub fn new(name: impl Into<String>, values: Vec<T>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

/// Named columns of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    columns: Vec<Column<T>>,
    /// Rows removed during ingestion because a cell was missing or unparsable.
    pub dropped_rows: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(columns: Vec<Column<T>>) -> Result<Self, FeatureError> {
        if let Some(first) = columns.first() {
            let expected = first.values.len();
            if expected == 0 {
                return Err(FeatureError::EmptyColumn);
            }
            for c in &columns {
                if c.values.len() != expected {
                    return Err(FeatureError::RaggedColumn {
                        name: c.name.clone(),
                        got: c.values.len(),
                        expected,
                    });
                }
                if let Some(row) = c.values.iter().position(|v| !v.is_finite()) {
                    return Err(FeatureError::Column {
                        name: c.name.clone(),
                        source: Box::new(FeatureError::NonFinite(row)),
                    });
                }
            }
        }
        Ok(Self {
            columns,
            dropped_rows: 0,
        })
    }

    pub fn columns(&self) -> &[Column<T>] {
        &self.columns
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureLabel {
    Redundant,
    Meaningful,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore<T> {
    pub name: String,
    pub entropy_bits: T,
    /// Entropy divided by `log2(bins)`.
    pub normalized: T,
    pub label: FeatureLabel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriageThresholds<T> {
    pub low: T,
    pub high: T,
}

impl<T: Scalar> Default for TriageThresholds<T> {
    fn default() -> Self {
        Self {
            low: T::lit(0.05),
            high: T::lit(0.95),
        }
    }
}

impl<T: Scalar> TriageThresholds<T> {
    pub fn new(low: T, high: T) -> Result<Self, FeatureError> {
        if !(T::zero() <= low && low < high && high <= T::one()) {
            return Err(FeatureError::BadThresholds {
                low: low.to_f64_lossy(),
                high: high.to_f64_lossy(),
            });
        }
        Ok(Self { low, high })
    }

    pub fn label(&self, normalized: T) -> FeatureLabel {
        if normalized <= self.low {
            FeatureLabel::Redundant
        } else if normalized >= self.high {
            FeatureLabel::Random
        } else {
            FeatureLabel::Meaningful
        }
    }
}

/// Counts of an equal-width histogram spanning `[min, max]` of `values`.
///
/// A column with zero range puts everything in the first bin.
pub fn histogram<T: Scalar>(values: &[T], bins: usize) -> Result<Vec<usize>, FeatureError> {
    if bins < 2 {
        return Err(FeatureError::TooFewBins(bins));
    }
    if values.is_empty() {
        return Err(FeatureError::EmptyColumn);
    }
    if let Some(row) = values.iter().position(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite(row));
    }
    let (lo, hi) = values
        .iter()
        .fold((values[0], values[0]), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mut counts = vec![0usize; bins];
    let range = hi - lo;
    if !(range > T::zero()) || !range.is_finite() {
        counts[0] = values.len();
        return Ok(counts);
    }
    let scale = T::from_usize_lossy(bins) / range;
    for &v in values {
        let idx = ((v - lo) * scale).floor().to_usize().unwrap_or(0).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(counts)
}

/// Shannon entropy in bits of the equal-width histogram of `values`.
pub fn column_entropy<T: Scalar>(values: &[T], bins: usize) -> Result<T, FeatureError> {
    let counts = histogram(values, bins)?;
    let n = T::from_usize_lossy(values.len());
    let mut h = T::zero();
    for &c in counts.iter().filter(|&&c| c > 0) {
        let p = T::from_usize_lossy(c) / n;
        h -= p * p.log2();
    }
    // Rounding can leave -0.0 or a hair above log2(bins).
    let cap = T::from_usize_lossy(bins).log2();
    Ok(h.max(T::zero()).min(cap))
}

/// Scores every column independently; output order follows input order.
pub fn triage<T: Scalar>(
    data: &Dataset<T>,
    bins: usize,
    thresholds: TriageThresholds<T>,
) -> Result<Vec<FeatureScore<T>>, FeatureError> {
    TriageThresholds::new(thresholds.low, thresholds.high)?;
    let max_bits = T::from_usize_lossy(bins.max(2)).log2();
    data.columns()
        .iter()
        .map(|col| {
            let entropy_bits =
                column_entropy(&col.values, bins).map_err(|e| FeatureError::Column {
                    name: col.name.clone(),
                    source: Box::new(e),
                })?;
            let normalized = (entropy_bits / max_bits).min(T::one());
            Ok(FeatureScore {
                name: col.name.clone(),
                entropy_bits,
                normalized,
                label: thresholds.label(normalized),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_column_is_zero() {
        assert_eq!(column_entropy(&[5.0, 5.0, 5.0, 5.0], 8).unwrap(), 0.0);
    }

    #[test]
    fn even_split_is_one_bit() {
        assert_eq!(column_entropy(&[0.0, 0.0, 1.0, 1.0], 2).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(column_entropy::<f64>(&[], 4), Err(FeatureError::EmptyColumn));
        assert_eq!(column_entropy(&[1.0], 1), Err(FeatureError::TooFewBins(1)));
        assert_eq!(column_entropy(&[1.0, f64::NAN], 4), Err(FeatureError::NonFinite(1)));
    }

    #[test]
    fn single_value_column() {
        assert_eq!(column_entropy(&[3.0f32], 16).unwrap(), 0.0);
    }

    #[test]
    fn maximum_lands_in_last_bin() {
        assert_eq!(histogram(&[0.0, 0.5, 1.0], 2).unwrap(), vec![1, 2]);
    }

    #[test]
    fn thresholds_validated() {
        assert!(TriageThresholds::new(0.5, 0.5).is_err());
        assert!(TriageThresholds::new(-0.1, 0.5).is_err());
        assert!(TriageThresholds::new(0.1, 1.1).is_err());
        assert!(TriageThresholds::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn triage_labels_and_order() {
        let n = 1000;
        let sine: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin())
            .collect();
        let ramp: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let data = Dataset::new(vec![
            Column { name: "flat".into(), values: vec![1.0; n] },
            Column { name: "sine".into(), values: sine },
            Column { name: "ramp".into(), values: ramp },
        ])
        .unwrap();
        let scores = triage(&data, 16, TriageThresholds::new(0.1, 0.97).unwrap()).unwrap();
        let labels: Vec<_> = scores.iter().map(|s| (s.name.as_str(), s.label)).collect();
        assert_eq!(
            labels,
            vec![
                ("flat", FeatureLabel::Redundant),
                ("sine", FeatureLabel::Meaningful),
                ("ramp", FeatureLabel::Random),
            ]
        );
    }

    #[test]
    fn ragged_dataset_rejected() {
        let r = Dataset::new(vec![
            Column { name: "a".into(), values: vec![1.0, 2.0] },
            Column { name: "b".into(), values: vec![1.0] },
        ]);
        assert!(matches!(r, Err(FeatureError::RaggedColumn { .. })));
    }
}
