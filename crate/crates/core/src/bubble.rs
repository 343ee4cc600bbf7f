//! Stable growth versus bubbles.
//!
//! Two independent lines of evidence are combined:
//!
//! * whether the observed curve bends over, i.e. whether the discrete second
//!   difference changes sign (a bounded transition must pass an inflection at
//!   half its amplitude), and
//! * how well a logistic calibrated on the early part of the series forecasts
//!   the rest, next to an AIC comparison of logistic and exponential fits.
//!
//! The forecast is made under the stability hypothesis: the calibrated curve
//! must already have passed its midpoint, so its amplitude is capped at twice
//! the largest calibration value. Sustained exponential growth breaks through
//! that ceiling and shows up as a large forecast error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitting::{
    fit_exponential, fit_logistic, fit_logistic_with, line_fit, FitError, FitReport,
    LogisticFitOptions, ModelKind,
};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

pub const MIN_SAMPLES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BubbleError {
    #[error("need at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("stability check needs a converged logistic fit")]
    NotConvergedLogistic,
    #[error("no samples after the fitted inflection time {0}")]
    NoPostInflection(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inflection<T> {
    pub t: T,
    pub y: T,
}

/// How the second-difference scan treats its input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InflectionOptions<T> {
    /// Leading fraction of the samples that is inspected.
    pub window_fraction: T,
    /// Consecutive samples averaged together before differencing; 1 disables it.
    pub block: usize,
    /// Non-zero second differences that must agree before a sign change counts.
    pub confirm: usize,
}

impl<T: Scalar> Default for InflectionOptions<T> {
    fn default() -> Self {
        Self {
            window_fraction: T::one(),
            block: 1,
            confirm: 1,
        }
    }
}

/// First sign change of the centred second difference, on the raw samples.
pub fn detect_inflection<T: Scalar>(
    series: &TimeSeries<T>,
) -> Result<Option<Inflection<T>>, BubbleError> {
    detect_inflection_with(series, &InflectionOptions::default())
}

pub fn detect_inflection_with<T: Scalar>(
    series: &TimeSeries<T>,
    opts: &InflectionOptions<T>,
) -> Result<Option<Inflection<T>>, BubbleError> {
    let n = series.len();
    if n < MIN_SAMPLES {
        return Err(BubbleError::TooFewSamples(n));
    }
    if !(opts.window_fraction > T::zero() && opts.window_fraction <= T::one()) {
        return Err(BubbleError::InvalidConfig(format!(
            "window fraction must lie in (0, 1], got {}",
            opts.window_fraction
        )));
    }
    let window = (opts.window_fraction * T::from_usize_lossy(n))
        .ceil()
        .to_usize()
        .unwrap_or(n)
        .clamp(1, n);
    let block = opts.block.max(1);
    let (t, y): (Vec<T>, Vec<T>) = series.times()[..window]
        .chunks(block)
        .zip(series.values()[..window].chunks(block))
        .map(|(tc, yc)| {
            let k = T::from_usize_lossy(tc.len());
            (tc.iter().copied().sum::<T>() / k, yc.iter().copied().sum::<T>() / k)
        })
        .unzip();
    if t.len() < 3 {
        return Ok(None);
    }

    let h_min = t.windows(2).map(|w| w[1] - w[0]).fold(T::infinity(), T::min);
    let y_scale = y.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    let tol = T::lit(1e4) * T::epsilon() * y_scale / (h_min * h_min);

    // (time, second difference) for every interior point with a clear sign.
    let curvature: Vec<(T, T)> = (1..t.len() - 1)
        .map(|i| {
            let left = (y[i] - y[i - 1]) / (t[i] - t[i - 1]);
            let right = (y[i + 1] - y[i]) / (t[i + 1] - t[i]);
            (t[i], T::two() * (right - left) / (t[i + 1] - t[i - 1]))
        })
        .filter(|(_, d)| d.abs() > tol)
        .collect();

    let confirm = opts.confirm.max(1);
    for i in 1..curvature.len() {
        let (ta, da) = curvature[i - 1];
        let (tb, db) = curvature[i];
        if da.signum() == db.signum() {
            continue;
        }
        let held = curvature[i..]
            .iter()
            .take(confirm)
            .filter(|(_, d)| d.signum() == db.signum())
            .count();
        if held < confirm {
            continue;
        }
        let t_star = ta + (tb - ta) * da / (da - db);
        let y_star = series.interpolate(t_star).expect("non-empty");
        return Ok(Some(Inflection { t: t_star, y: y_star }));
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleConfig<T> {
    /// Relative forecast error above which growth is suspect.
    pub disparity_threshold: T,
    /// AIC lead the exponential model needs to call a bubble on its own.
    pub aic_margin: T,
    /// Leading fraction of the series scanned for an inflection.
    pub inflection_window_fraction: T,
    /// Target number of averaged blocks for the inflection scan; 0 scans raw samples.
    pub inflection_blocks: usize,
    /// Agreeing second differences needed to accept a sign change.
    pub inflection_confirm: usize,
}

impl<T: Scalar> Default for BubbleConfig<T> {
    fn default() -> Self {
        Self {
            disparity_threshold: T::lit(0.15),
            aic_margin: T::lit(2.0),
            inflection_window_fraction: T::one(),
            inflection_blocks: 10,
            inflection_confirm: 2,
        }
    }
}

impl<T: Scalar> BubbleConfig<T> {
    pub fn validate(&self) -> Result<(), BubbleError> {
        if !(self.disparity_threshold > T::zero()) || !(self.aic_margin > T::zero()) {
            return Err(BubbleError::InvalidConfig(
                "disparity threshold and AIC margin must be positive".into(),
            ));
        }
        let w = self.inflection_window_fraction;
        if !(w > T::zero() && w <= T::one()) {
            return Err(BubbleError::InvalidConfig(format!(
                "inflection window fraction must lie in (0, 1], got {w}"
            )));
        }
        Ok(())
    }

    fn inflection_options(&self, n: usize) -> InflectionOptions<T> {
        let block = match self.inflection_blocks {
            0 => 1,
            b => (n / b).max(1),
        };
        InflectionOptions {
            window_fraction: self.inflection_window_fraction,
            block,
            confirm: self.inflection_confirm.max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BubbleLabel {
    Stable,
    Bubble,
    Indeterminate,
}

impl BubbleLabel {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(self) -> i32 {
        match self {
            BubbleLabel::Stable => 0,
            BubbleLabel::Bubble => 2,
            BubbleLabel::Indeterminate => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleVerdict<T> {
    pub label: BubbleLabel,
    pub inflection: Option<Inflection<T>>,
    pub logistic_fit: Option<FitReport<T>>,
    pub exponential_fit: Option<FitReport<T>>,
    pub disparity: T,
    pub rationale: String,
}

impl<T: Scalar> BubbleVerdict<T> {
    fn indeterminate(rationale: String) -> Self {
        Self {
            label: BubbleLabel::Indeterminate,
            inflection: None,
            logistic_fit: None,
            exponential_fit: None,
            disparity: T::zero(),
            rationale,
        }
    }
}

/// Largest relative miss, over the final quartile, of a logistic calibrated
/// on the samples before it.
pub fn forecast_disparity<T: Scalar>(series: &TimeSeries<T>) -> Result<T, FitError> {
    let n = series.len();
    let tail = (n / 4).max(1);
    let cut = n - tail;
    let calibration = series.slice(0, cut);
    let forecast = match calibration.max_value() {
        Some(peak) if cut >= MIN_SAMPLES => {
            let opts = LogisticFitOptions {
                max_delta_e: Some(T::two() * peak),
                ..LogisticFitOptions::default()
            };
            fit_logistic_with(&calibration, &opts)
        }
        _ => Err(FitError::TooFewSamples {
            needed: MIN_SAMPLES,
            got: cut,
        }),
    };
    let forecast = match forecast {
        Ok(r) => r,
        Err(_) => fit_logistic(series)?,
    };
    Ok(series
        .iter()
        .skip(cut)
        .map(|(t, y)| ((y - forecast.predict(t)) / y).abs())
        .fold(T::zero(), T::max))
}

/// Labels a trajectory Stable, Bubble or Indeterminate.
///
/// * Stable: an inflection is present and the logistic AIC does not exceed
///   the exponential AIC.
/// * Bubble: the exponential AIC beats the logistic one by more than the
///   margin, or the forecast disparity exceeds the threshold and there is no
///   inflection.
/// * Indeterminate otherwise, and whenever a fit fails.
pub fn classify<T: Scalar>(series: &TimeSeries<T>, cfg: &BubbleConfig<T>) -> BubbleVerdict<T> {
    if let Err(e) = cfg.validate() {
        return BubbleVerdict::indeterminate(e.to_string());
    }
    let inflection = match detect_inflection_with(series, &cfg.inflection_options(series.len())) {
        Ok(i) => i,
        Err(e) => return BubbleVerdict::indeterminate(e.to_string()),
    };
    let (logistic, exponential) = match (fit_logistic(series), fit_exponential(series)) {
        (Ok(l), Ok(e)) => (l, e),
        (Err(e), _) => return BubbleVerdict::indeterminate(format!("logistic fit failed: {e}")),
        (_, Err(e)) => {
            return BubbleVerdict::indeterminate(format!("exponential fit failed: {e}"))
        }
    };
    let disparity = match forecast_disparity(series) {
        Ok(d) => d,
        Err(e) => return BubbleVerdict::indeterminate(format!("forecast failed: {e}")),
    };

    let exp_dominates = exponential.aic + cfg.aic_margin < logistic.aic;
    let forecast_broken = disparity > cfg.disparity_threshold;
    let (label, rationale) = if inflection.is_some() && logistic.aic <= exponential.aic {
        (
            BubbleLabel::Stable,
            format!(
                "inflection present; logistic AIC {} <= exponential AIC {}",
                logistic.aic, exponential.aic
            ),
        )
    } else if exp_dominates {
        (
            BubbleLabel::Bubble,
            format!(
                "exponential AIC {} beats logistic AIC {} by more than {}",
                exponential.aic, logistic.aic, cfg.aic_margin
            ),
        )
    } else if forecast_broken && inflection.is_none() {
        (
            BubbleLabel::Bubble,
            format!(
                "no inflection; forecast disparity {} exceeds {}",
                disparity, cfg.disparity_threshold
            ),
        )
    } else {
        (
            BubbleLabel::Indeterminate,
            format!(
                "inflection {}; logistic AIC {}, exponential AIC {}, disparity {}",
                if inflection.is_some() { "present" } else { "absent" },
                logistic.aic,
                exponential.aic,
                disparity
            ),
        )
    };
    BubbleVerdict {
        label,
        inflection,
        logistic_fit: Some(logistic),
        exponential_fit: Some(exponential),
        disparity,
        rationale,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityStatus {
    Sustained,
    Watch,
    Collapsing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport<T> {
    pub status: StabilityStatus,
    pub inflection_time: T,
    pub post_inflection_samples: usize,
    /// Largest `|observed - fitted|` after the inflection.
    pub max_deviation: T,
    /// Least-squares slope over the last quarter of the post-inflection samples.
    pub tail_slope: T,
}

/// Checks whether the level reached after the inflection is being held.
///
/// Collapsing when the tail slope is below `-sustain_band * dE` per unit
/// time; Sustained when every post-inflection sample stays within
/// `sustain_band * dE` of the fit; Watch otherwise.
pub fn stability_check<T: Scalar>(
    series: &TimeSeries<T>,
    fitted: &FitReport<T>,
    sustain_band: T,
) -> Result<StabilityReport<T>, BubbleError> {
    if !(sustain_band > T::zero()) {
        return Err(BubbleError::InvalidConfig(format!(
            "sustain band must be positive, got {sustain_band}"
        )));
    }
    let p = match (fitted.model, fitted.logistic_params()) {
        (ModelKind::Logistic, Some(p)) if fitted.converged => *p,
        _ => return Err(BubbleError::NotConvergedLogistic),
    };
    let t_star = p.inflection_time();
    let start = series.times().partition_point(|&t| t < t_star);
    let post = series.slice(start, series.len());
    if post.is_empty() {
        return Err(BubbleError::NoPostInflection(t_star.to_f64_lossy()));
    }
    let band = sustain_band * p.delta_e;
    let max_deviation = post
        .iter()
        .map(|(t, y)| (y - fitted.predict(t)).abs())
        .fold(T::zero(), T::max);
    let tail_len = (post.len() / 4).max(2).min(post.len());
    let tail_start = post.len() - tail_len;
    let tail_slope = if tail_len >= 2 {
        line_fit(&post.times()[tail_start..], &post.values()[tail_start..]).0
    } else {
        T::zero()
    };
    let status = if tail_slope < -band {
        StabilityStatus::Collapsing
    } else if max_deviation <= band {
        StabilityStatus::Sustained
    } else {
        StabilityStatus::Watch
    };
    Ok(StabilityReport {
        status,
        inflection_time: t_star,
        post_inflection_samples: post.len(),
        max_deviation,
        tail_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{logistic_closed_form, LogisticParams};

    fn logistic(n: usize) -> TimeSeries<f64> {
        let p = LogisticParams::new(1.0, 1.0, 0.01).unwrap();
        TimeSeries::sample(0.0, 20.0, n, |t| logistic_closed_form(t, &p)).unwrap()
    }

    #[test]
    fn logistic_inflection_at_half_amplitude() {
        let inf = detect_inflection(&logistic(201)).unwrap().unwrap();
        assert!((inf.y - 0.5).abs() < 0.01, "{inf:?}");
        assert!((inf.t - 99f64.ln()).abs() < 0.1, "{inf:?}");
    }

    #[test]
    fn exponential_and_linear_have_none() {
        let e = TimeSeries::sample(0.0, 10.0, 50, |t: f64| 0.1 * (0.5 * t).exp()).unwrap();
        assert_eq!(detect_inflection(&e).unwrap(), None);
        let l = TimeSeries::sample(0.0, 10.0, 50, |t: f64| t).unwrap();
        assert_eq!(detect_inflection(&l).unwrap(), None);
    }

    #[test]
    fn too_few_samples() {
        let s = logistic(4);
        assert_eq!(detect_inflection(&s), Err(BubbleError::TooFewSamples(4)));
        let v = classify(&s, &BubbleConfig::default());
        assert_eq!(v.label, BubbleLabel::Indeterminate);
        assert!(v.rationale.contains("at least 5"));
    }

    #[test]
    fn window_excludes_late_inflection() {
        let opts = InflectionOptions { window_fraction: 0.15, ..Default::default() };
        assert_eq!(detect_inflection_with(&logistic(201), &opts).unwrap(), None);
    }

    #[test]
    fn classify_pure_families() {
        let cfg = BubbleConfig::default();
        let v = classify(&logistic(200), &cfg);
        assert_eq!(v.label, BubbleLabel::Stable, "{}", v.rationale);
        assert!(v.inflection.is_some());

        let e = TimeSeries::sample(0.0, 10.0, 100, |t: f64| 0.1 * (0.5 * t).exp()).unwrap();
        let v = classify(&e, &cfg);
        assert_eq!(v.label, BubbleLabel::Bubble, "{}", v.rationale);
        assert!(v.inflection.is_none());
    }

    #[test]
    fn bad_config_is_indeterminate() {
        let cfg = BubbleConfig { aic_margin: -1.0, ..Default::default() };
        assert_eq!(classify(&logistic(50), &cfg).label, BubbleLabel::Indeterminate);
    }

    #[test]
    fn stability_of_clean_tail() {
        let s = logistic(201);
        let fit = fit_logistic(&s).unwrap();
        let r = stability_check(&s, &fit, 0.05).unwrap();
        assert_eq!(r.status, StabilityStatus::Sustained);
    }

    #[test]
    fn stability_requires_logistic_and_post_samples() {
        let s = logistic(201);
        let exp = fit_exponential(&s).unwrap();
        assert_eq!(stability_check(&s, &exp, 0.05), Err(BubbleError::NotConvergedLogistic));
        let fit = fit_logistic(&s).unwrap();
        let early = s.slice(0, 30);
        assert!(matches!(
            stability_check(&early, &fit, 0.05),
            Err(BubbleError::NoPostInflection(_))
        ));
    }
}
