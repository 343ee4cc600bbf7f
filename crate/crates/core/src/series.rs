use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("times must be strictly increasing (sample {0})")]
    NotIncreasing(usize),
    #[error("non-finite value at sample {0}")]
    NonFinite(usize),
    #[error("times and values differ in length ({times} vs {values})")]
    LengthMismatch { times: usize, values: usize },
}

/// Ordered `(t, y)` samples with strictly increasing, finite `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<T> {
    t: Vec<T>,
    y: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(t: Vec<T>, y: Vec<T>) -> Result<Self, SeriesError> {
        if t.len() != y.len() {
            return Err(SeriesError::LengthMismatch {
                times: t.len(),
                values: y.len(),
            });
        }
        for i in 0..t.len() {
            if !t[i].is_finite() || !y[i].is_finite() {
                return Err(SeriesError::NonFinite(i));
            }
            if i > 0 && t[i] <= t[i - 1] {
                return Err(SeriesError::NotIncreasing(i));
            }
        }
        Ok(Self { t, y })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (T, T)>) -> Result<Self, SeriesError> {
        let (t, y) = pairs.into_iter().unzip();
        Self::new(t, y)
    }

    /// Samples `f` on `t_i = t0 + i * (t1 - t0) / (n - 1)`.
    pub fn sample(t0: T, t1: T, n: usize, f: impl Fn(T) -> T) -> Result<Self, SeriesError> {
        let t: Vec<T> = match n {
            0 => Vec::new(),
            1 => vec![t0],
            _ => {
                let dt = (t1 - t0) / T::from_usize_lossy(n - 1);
                (0..n)
                    .map(|i| if i == n - 1 { t1 } else { t0 + dt * T::from_usize_lossy(i) })
                    .collect()
            }
        };
        let y = t.iter().map(|&ti| f(ti)).collect();
        Self::new(t, y)
    }

    pub(crate) fn from_parts_unchecked(t: Vec<T>, y: Vec<T>) -> Self {
        debug_assert_eq!(t.len(), y.len());
        Self { t, y }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.t
    }

    pub fn values(&self) -> &[T] {
        &self.y
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.t.iter().copied().zip(self.y.iter().copied())
    }

    pub fn last(&self) -> Option<(T, T)> {
        Some((*self.t.last()?, *self.y.last()?))
    }

    /// Same times, values replaced by `f(t, y)`.
    pub fn map_values(&self, f: impl Fn(T, T) -> T) -> Result<Self, SeriesError> {
        let y = self.iter().map(|(t, y)| f(t, y)).collect();
        Self::new(self.t.clone(), y)
    }

    /// Samples `start..end` as a new series.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            t: self.t[start..end].to_vec(),
            y: self.y[start..end].to_vec(),
        }
    }

    /// Appends samples; every new time must exceed the current last time.
    pub fn extend(&mut self, other: &Self) -> Result<(), SeriesError> {
        let offset = self.len();
        for (i, (t, y)) in other.iter().enumerate() {
            if let Some((last, _)) = self.last() {
                if t <= last {
                    return Err(SeriesError::NotIncreasing(offset + i));
                }
            }
            self.t.push(t);
            self.y.push(y);
        }
        Ok(())
    }

    /// Linear interpolation of `y` at `t`, clamped to the sampled range.
    pub fn interpolate(&self, t: T) -> Option<T> {
        let n = self.len();
        if n == 0 {
            return None;
        }
        if t <= self.t[0] {
            return Some(self.y[0]);
        }
        if t >= self.t[n - 1] {
            return Some(self.y[n - 1]);
        }
        let hi = self.t.partition_point(|&x| x < t);
        let lo = hi - 1;
        let w = (t - self.t[lo]) / (self.t[hi] - self.t[lo]);
        Some(self.y[lo] + w * (self.y[hi] - self.y[lo]))
    }

    pub fn max_value(&self) -> Option<T> {
        self.y.iter().copied().reduce(T::max)
    }
}
