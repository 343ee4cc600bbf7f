//! Parameter estimation for the logistic and exponential growth models.
//!
//! The logistic fit is damped Gauss-Newton (Levenberg-Marquardt) on
//!
//! ```text
//! y(t) = dE / (1 + exp(m - A (t - t_first)))
//! ```
//!
//! with values scaled by their maximum and time measured from the first
//! sample. The phase `m` is converted back to `y0 = y(0)` at the end, so the
//! starting offset always lies in `(0, dE)`. The exponential fit is ordinary
//! least squares of `ln y` against `t`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{exponential_solution, logistic_closed_form, LogisticParams};
use crate::linalg::{solve, Matrix};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("non-positive value {value} at sample {index}")]
    NonPositiveData { index: usize, value: f64 },
    #[error("degenerate series: y is constant, so the amplitude is unidentifiable")]
    DegenerateSeries,
    #[error("residuals are exactly zero; AIC is unbounded below")]
    PerfectFit,
    #[error("fitted parameters are not representable: {0}")]
    Unrepresentable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Exponential,
}

impl ModelKind {
    /// Free parameters, as counted by AIC.
    pub fn parameter_count(self) -> usize {
        match self {
            ModelKind::Logistic => 3,
            ModelKind::Exponential => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitParams<T> {
    Logistic(LogisticParams<T>),
    Exponential { affinity: T, y0: T },
}

impl<T: Scalar> FitParams<T> {
    pub fn predict(&self, t: T) -> T {
        match self {
            FitParams::Logistic(p) => logistic_closed_form(t, p),
            FitParams::Exponential { affinity, y0 } => exponential_solution(t, *affinity, *y0),
        }
    }

    pub fn affinity(&self) -> T {
        match self {
            FitParams::Logistic(p) => p.affinity,
            FitParams::Exponential { affinity, .. } => *affinity,
        }
    }

    pub fn y0(&self) -> T {
        match self {
            FitParams::Logistic(p) => p.y0,
            FitParams::Exponential { y0, .. } => *y0,
        }
    }

    pub fn delta_e(&self) -> Option<T> {
        match self {
            FitParams::Logistic(p) => Some(p.delta_e),
            FitParams::Exponential { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<T> {
    pub model: ModelKind,
    pub params: FitParams<T>,
    pub sse: T,
    /// `-inf` when the residuals vanish; see `perfect_fit`.
    pub aic: T,
    pub perfect_fit: bool,
    /// Observed minus fitted, one per sample.
    pub residuals: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Scalar> FitReport<T> {
    fn assemble(
        series: &TimeSeries<T>,
        model: ModelKind,
        params: FitParams<T>,
        converged: bool,
        iterations: usize,
    ) -> Self {
        let residuals: Vec<T> = series.iter().map(|(t, y)| y - params.predict(t)).collect();
        let sse = residuals.iter().map(|&r| r * r).sum();
        let (aic, perfect_fit) = match aic(series.len(), sse, model.parameter_count()) {
            Ok(a) => (a, false),
            Err(_) => (T::neg_infinity(), true),
        };
        Self {
            model,
            params,
            sse,
            aic,
            perfect_fit,
            residuals,
            converged,
            iterations,
        }
    }

    pub fn predict(&self, t: T) -> T {
        self.params.predict(t)
    }

    pub fn logistic_params(&self) -> Option<&LogisticParams<T>> {
        match &self.params {
            FitParams::Logistic(p) => Some(p),
            FitParams::Exponential { .. } => None,
        }
    }
}

/// Akaike information criterion `n ln(sse / n) + 2k`.
pub fn aic<T: Scalar>(n: usize, sse: T, k: usize) -> Result<T, FitError> {
    if sse == T::zero() {
        return Err(FitError::PerfectFit);
    }
    let nf = T::from_usize_lossy(n);
    Ok(nf * (sse / nf).ln() + T::two() * T::from_usize_lossy(k))
}

/// Recomputes `(sse, aic)` of `report` against `series`.
pub fn goodness<T: Scalar>(series: &TimeSeries<T>, report: &FitReport<T>) -> Result<(T, T), FitError> {
    let sse: T = series
        .iter()
        .map(|(t, y)| {
            let r = y - report.predict(t);
            r * r
        })
        .sum();
    let a = aic(series.len(), sse, report.model.parameter_count())?;
    Ok((sse, a))
}

fn check_positive<T: Scalar>(series: &TimeSeries<T>, needed: usize) -> Result<(), FitError> {
    if series.len() < needed {
        return Err(FitError::TooFewSamples {
            needed,
            got: series.len(),
        });
    }
    if let Some((index, &value)) = series.values().iter().enumerate().find(|(_, &v)| !(v > T::zero())) {
        return Err(FitError::NonPositiveData {
            index,
            value: value.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Slope and intercept of the least-squares line through `(x, y)`.
///
/// Both coordinates are shifted by their first entry before accumulating so
/// a constant `y` yields an exactly zero slope.
pub(crate) fn line_fit<T: Scalar>(x: &[T], y: &[T]) -> (T, T) {
    let (x0, y0) = (x[0], y[0]);
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().map(|&v| v - x0).sum::<T>() / n;
    let my = y.iter().map(|&v| v - y0).sum::<T>() / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - x0 - mx;
        sxy += dx * (yi - y0 - my);
        sxx += dx * dx;
    }
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    let intercept = y0 + my - slope * (x0 + mx);
    (slope, intercept)
}

/// Least squares of `ln y` on `t`; exact on noiseless exponential data.
pub fn fit_exponential<T: Scalar>(series: &TimeSeries<T>) -> Result<FitReport<T>, FitError> {
    check_positive(series, 3)?;
    let logs: Vec<T> = series.values().iter().map(|v| v.ln()).collect();
    let (affinity, intercept) = line_fit(series.times(), &logs);
    let params = FitParams::Exponential {
        affinity,
        y0: intercept.exp(),
    };
    Ok(FitReport::assemble(series, ModelKind::Exponential, params, true, 1))
}

/// Stopping rules and bounds for [`fit_logistic_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticFitOptions<T> {
    pub max_iterations: usize,
    /// Stop once an accepted step improves the SSE by less than this fraction.
    pub sse_rtol: T,
    /// Stop once the parameter step is this small relative to the parameters.
    pub step_tol: T,
    /// Upper bound on the fitted amplitude, in data units.
    pub max_delta_e: Option<T>,
}

impl<T: Scalar> Default for LogisticFitOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            sse_rtol: T::lit(1e-10),
            step_tol: T::lit(1e-8),
            max_delta_e: None,
        }
    }
}

/// Parameters of the scaled problem: affinity, amplitude, phase.
#[derive(Debug, Clone, Copy)]
struct Theta<T> {
    a: T,
    d: T,
    m: T,
}

/// `1 / (1 + e^z)` and its product with its complement, without overflow.
#[inline]
fn sigmoid_parts<T: Scalar>(z: T) -> (T, T) {
    if z > T::zero() {
        let e = (-z).exp();
        let s = e / (T::one() + e);
        (s, s / (T::one() + e))
    } else {
        let e = z.exp();
        let s = T::one() / (T::one() + e);
        (s, s * e / (T::one() + e))
    }
}

struct Problem<'a, T> {
    tau: &'a [T],
    u: &'a [T],
    d_min: T,
    d_max: T,
}

impl<T: Scalar> Problem<'_, T> {
    fn model(&self, th: &Theta<T>, tau: T) -> T {
        th.d * sigmoid_parts(th.m - th.a * tau).0
    }

    fn sse(&self, th: &Theta<T>) -> T {
        self.tau
            .iter()
            .zip(self.u)
            .map(|(&t, &u)| {
                let r = u - self.model(th, t);
                r * r
            })
            .sum()
    }

    fn project(&self, th: Theta<T>) -> Theta<T> {
        Theta {
            d: th.d.max(self.d_min).min(self.d_max),
            ..th
        }
    }

    /// Normal equations `J^T J` and `J^T r` with `r = u - model`.
    fn normal_equations(&self, th: &Theta<T>) -> (Matrix<T>, [T; 3]) {
        let mut jtj = Matrix::zeros(3);
        let mut jtr = [T::zero(); 3];
        for (&t, &u) in self.tau.iter().zip(self.u) {
            let (s, ss) = sigmoid_parts(th.m - th.a * t);
            let mut row = [th.d * ss * t, s, -th.d * ss];
            if row.iter().any(|v| !v.is_finite()) {
                row = self.fd_row(th, t);
            }
            let r = u - th.d * s;
            for i in 0..3 {
                jtr[i] += row[i] * r;
                for j in 0..3 {
                    jtj[(i, j)] += row[i] * row[j];
                }
            }
        }
        (jtj, jtr)
    }

    fn fd_row(&self, th: &Theta<T>, t: T) -> [T; 3] {
        let h = T::epsilon().cbrt();
        let bump = |k: usize, sign: T| {
            let mut p = *th;
            match k {
                0 => p.a += sign * h * (T::one() + th.a.abs()),
                1 => p.d += sign * h * (T::one() + th.d.abs()),
                _ => p.m += sign * h * (T::one() + th.m.abs()),
            }
            self.model(&p, t)
        };
        let scale = [th.a, th.d, th.m].map(|v| T::two() * h * (T::one() + v.abs()));
        let mut row = [T::zero(); 3];
        for k in 0..3 {
            let v = (bump(k, T::one()) - bump(k, -T::one())) / scale[k];
            row[k] = if v.is_finite() { v } else { T::zero() };
        }
        row
    }
}

struct LmOutcome<T> {
    theta: Theta<T>,
    converged: bool,
    iterations: usize,
}

fn levenberg_marquardt<T: Scalar>(
    prob: &Problem<'_, T>,
    start: Theta<T>,
    opts: &LogisticFitOptions<T>,
) -> LmOutcome<T> {
    let mut th = prob.project(start);
    let mut sse = prob.sse(&th);
    let mut lambda = T::lit(1e-3);
    let lambda_max = T::lit(1e16);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        iterations += 1;
        if sse == T::zero() {
            converged = true;
            break;
        }
        let (jtj, jtr) = prob.normal_equations(&th);
        let diag_floor = (0..3).map(|i| jtj[(i, i)]).fold(T::zero(), T::max) * T::lit(1e-12);
        let mut accepted = None;
        while lambda <= lambda_max {
            let mut damped = jtj.clone();
            for i in 0..3 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(diag_floor).max(T::min_positive_value());
            }
            if let Ok(delta) = solve(&damped, &jtr, T::infinity()) {
                let cand = prob.project(Theta {
                    a: th.a + delta[0],
                    d: th.d + delta[1],
                    m: th.m + delta[2],
                });
                let cand_sse = prob.sse(&cand);
                if cand_sse.is_finite() && cand_sse <= sse {
                    accepted = Some((cand, cand_sse));
                    break;
                }
            }
            lambda *= T::lit(10.0);
        }
        let Some((cand, cand_sse)) = accepted else {
            // No damping level improves the fit: numerically stationary.
            converged = true;
            break;
        };
        let step = (cand.a - th.a)
            .abs()
            .max((cand.d - th.d).abs())
            .max((cand.m - th.m).abs());
        let size = th.a.abs().max(th.d.abs()).max(th.m.abs());
        let improvement = (sse - cand_sse) / sse;
        th = cand;
        sse = cand_sse;
        lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
        if improvement < opts.sse_rtol || step <= opts.step_tol * (size + opts.step_tol) {
            converged = true;
            break;
        }
    }
    LmOutcome {
        theta: th,
        converged,
        iterations,
    }
}

fn seeds<T: Scalar>(tau: &[T], u: &[T], d_max: T) -> Vec<Theta<T>> {
    let n = tau.len();
    let span = tau[n - 1] - tau[0];
    let d0 = T::lit(1.05).min(d_max);
    // Early log-slope approximates A (1 - y / dE).
    let k = (n / 4).max(3).min(n);
    let logs: Vec<T> = u[..k].iter().map(|v| v.ln()).collect();
    let (slope, _) = line_fit(&tau[..k], &logs);
    let early_mean = u[..k].iter().copied().sum::<T>() / T::from_usize_lossy(k);
    let mut a0 = slope / (T::one() - early_mean / d0).max(T::lit(0.05));
    if !(a0.abs() > T::zero()) || !a0.is_finite() {
        a0 = T::one() / span;
    }
    let mut out = Vec::new();
    for a_mult in [1.0, 0.5, 2.0, 0.25, 4.0] {
        for d_mult in [1.0, 1.5, 3.0] {
            let d = (d0 * T::lit(d_mult)).min(d_max);
            if !(d > u[0]) {
                continue;
            }
            let m = ((d - u[0]) / u[0]).ln();
            out.push(Theta {
                a: a0 * T::lit(a_mult),
                d,
                m,
            });
        }
    }
    if out.is_empty() {
        out.push(Theta {
            a: a0,
            d: d_max,
            m: T::zero(),
        });
    }
    out
}

/// Least-squares logistic fit with the default stopping rules.
pub fn fit_logistic<T: Scalar>(series: &TimeSeries<T>) -> Result<FitReport<T>, FitError> {
    fit_logistic_with(series, &LogisticFitOptions::default())
}

pub fn fit_logistic_with<T: Scalar>(
    series: &TimeSeries<T>,
    opts: &LogisticFitOptions<T>,
) -> Result<FitReport<T>, FitError> {
    check_positive(series, 5)?;
    let ys = series.values();
    let y_max = series.max_value().expect("non-empty");
    if ys.iter().all(|&v| v == ys[0]) {
        return Err(FitError::DegenerateSeries);
    }
    let t_first = series.times()[0];
    let tau: Vec<T> = series.times().iter().map(|&t| t - t_first).collect();
    let u: Vec<T> = ys.iter().map(|&v| v / y_max).collect();
    let d_max = opts.max_delta_e.map_or(T::infinity(), |c| c / y_max);
    let prob = Problem {
        tau: &tau,
        u: &u,
        d_min: T::epsilon(),
        d_max,
    };

    let start = seeds(&tau, &u, d_max)
        .into_iter()
        .map(|th| (prob.sse(&th), th))
        .filter(|(s, _)| s.is_finite())
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"))
        .map(|(_, th)| th)
        .ok_or_else(|| FitError::Unrepresentable("no finite starting point".into()))?;
    let out = levenberg_marquardt(&prob, start, opts);

    let th = out.theta;
    let delta_e = th.d * y_max;
    // Shift the phase from the first sample back to t = 0.
    let m0 = th.m + th.a * t_first;
    let y0 = delta_e * sigmoid_parts(m0).0;
    let params = LogisticParams::new(th.a, delta_e, y0)
        .map_err(|e| FitError::Unrepresentable(e.to_string()))?;
    Ok(FitReport::assemble(
        series,
        ModelKind::Logistic,
        FitParams::Logistic(params),
        out.converged,
        out.iterations,
    ))
}
