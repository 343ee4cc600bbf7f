//! Logistic meme-amplitude dynamics.
//!
//! The amplitude `y` grows as `y' = (A / dE) * y * (dE - y)`: proportional to
//! itself at first and bounded above by the transition amplitude `dE`. The
//! curvature changes sign once, at `y = dE / 2`. Dropping the bound leaves
//! `y' = A * y` with exponential solutions.
//!
//! `y = 0` is a fixed point, so trajectories start from a small offset
//! `y0 = eps * dE` rather than from zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::{grid_steps, rk4_step, uniform_grid};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// Default starting offset as a fraction of the amplitude.
pub const DEFAULT_EPSILON: f64 = 0.01;

const MAX_STAGE_STEPS: usize = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid logistic parameters: {0}")]
    InvalidParams(String),
    #[error("invalid integration setup: {0}")]
    InvalidSetup(String),
    #[error("step {step} too large: |A| * dE * step = {product} must be < 1")]
    Unstable { step: f64, product: f64 },
    #[error("stage {stage} cannot reach its completion fraction: {reason}")]
    StageStalled { stage: usize, reason: String },
    #[error("invalid energy context: lo {lo} > hi {hi}")]
    InvalidContext { lo: f64, hi: f64 },
}

/// Affinity `A`, amplitude `dE` and starting offset `y0` of one transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams<T> {
    pub affinity: T,
    pub delta_e: T,
    pub y0: T,
}

impl<T: Scalar> LogisticParams<T> {
    pub fn new(affinity: T, delta_e: T, y0: T) -> Result<Self, DynamicsError> {
        if !affinity.is_finite() {
            return Err(DynamicsError::InvalidParams(format!(
                "affinity must be finite, got {affinity}"
            )));
        }
        if !(delta_e > T::zero()) || !delta_e.is_finite() {
            return Err(DynamicsError::InvalidParams(format!(
                "delta_e must be positive, got {delta_e}"
            )));
        }
        if !(y0 > T::zero() && y0 < delta_e) {
            return Err(DynamicsError::InvalidParams(format!(
                "y0 must lie in (0, {delta_e}), got {y0}"
            )));
        }
        Ok(Self {
            affinity,
            delta_e,
            y0,
        })
    }

    /// Starts the trajectory at `epsilon * delta_e`.
    pub fn with_offset(affinity: T, delta_e: T, epsilon: T) -> Result<Self, DynamicsError> {
        Self::new(affinity, delta_e, epsilon * delta_e)
    }

    /// Time at which the closed form crosses `dE / 2`.
    pub fn inflection_time(&self) -> T {
        ((self.delta_e - self.y0) / self.y0).ln() / self.affinity
    }

    /// Time for the closed form to rise from `y0` to `target`.
    pub fn time_to_reach(&self, target: T) -> Option<T> {
        time_between(self.y0, target, self.affinity, self.delta_e)
    }
}

fn time_between<T: Scalar>(from: T, to: T, affinity: T, delta_e: T) -> Option<T> {
    if !(to > T::zero() && to < delta_e) || affinity == T::zero() {
        return None;
    }
    let tau = ((to * (delta_e - from)) / (from * (delta_e - to))).ln() / affinity;
    (tau >= T::zero()).then_some(tau)
}

/// Right-hand side of the logistic equation.
#[inline]
pub fn logistic_rhs<T: Scalar>(y: T, p: &LogisticParams<T>) -> T {
    p.affinity / p.delta_e * y * (p.delta_e - y)
}

/// Sigmoid solution through `(0, y0)`.
pub fn logistic_closed_form<T: Scalar>(t: T, p: &LogisticParams<T>) -> T {
    if t == T::zero() || p.affinity == T::zero() {
        return p.y0;
    }
    let ratio = (p.delta_e - p.y0) / p.y0;
    p.delta_e / (T::one() + ratio * (-p.affinity * t).exp())
}

/// Second time derivative along a solution, as a function of `y`.
#[inline]
pub fn logistic_curvature<T: Scalar>(y: T, p: &LogisticParams<T>) -> T {
    let k = p.affinity / p.delta_e;
    k * k * y * (p.delta_e - T::two() * y) * (p.delta_e - y)
}

/// Solution of the unbounded equation `y' = A * y`.
#[inline]
pub fn exponential_solution<T: Scalar>(t: T, affinity: T, y0: T) -> T {
    y0 * (affinity * t).exp()
}

fn check_step<T: Scalar>(p: &LogisticParams<T>, step: T) -> Result<(), DynamicsError> {
    let product = p.affinity.abs() * p.delta_e * step;
    if !(product < T::one()) {
        return Err(DynamicsError::Unstable {
            step: step.to_f64_lossy(),
            product: product.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Integrates the logistic equation with RK4 on `0, step, ..., t_end`.
pub fn integrate<T: Scalar>(
    p: &LogisticParams<T>,
    t_end: T,
    step: T,
) -> Result<TimeSeries<T>, DynamicsError> {
    if !(step > T::zero()) || !(t_end > T::zero()) || !t_end.is_finite() {
        return Err(DynamicsError::InvalidSetup(format!(
            "need t_end > 0 and step > 0 (t_end={t_end}, step={step})"
        )));
    }
    if step > t_end {
        return Err(DynamicsError::InvalidSetup(format!(
            "step {step} exceeds t_end {t_end}"
        )));
    }
    check_step(p, step)?;
    let grid = uniform_grid(t_end, step);
    let mut values = Vec::with_capacity(grid.len());
    let mut y = p.y0;
    values.push(y);
    for h in grid_steps(&grid, step) {
        y = rk4_step(y, h, |v| logistic_rhs(v, p));
        values.push(y);
    }
    Ok(TimeSeries::from_parts_unchecked(grid, values))
}

/// One link of a hierarchical chain of transitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSpec<T> {
    pub params: LogisticParams<T>,
    /// Fraction of `delta_e` at which the stage hands over to the next.
    pub completion_fraction: T,
}

impl<T: Scalar> StageSpec<T> {
    pub fn new(params: LogisticParams<T>, completion_fraction: T) -> Result<Self, DynamicsError> {
        if !(completion_fraction > T::zero() && completion_fraction < T::one()) {
            return Err(DynamicsError::InvalidParams(format!(
                "completion fraction must lie in (0, 1), got {completion_fraction}"
            )));
        }
        Ok(Self {
            params,
            completion_fraction,
        })
    }

    pub fn target(&self) -> T {
        self.completion_fraction * self.params.delta_e
    }
}

/// Where one stage of a chained run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageBoundary<T> {
    pub index: usize,
    pub t: T,
    pub value: T,
    /// Time spent inside the stage.
    pub elapsed: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagedTrajectory<T> {
    pub series: TimeSeries<T>,
    pub boundaries: Vec<StageBoundary<T>>,
}

/// Runs the stages back to back.
///
/// Each stage integrates its own amplitude `y_k` from its `y0` until
/// `y_k = completion_fraction * dE_k`; the final step is shortened so the
/// stage ends on that level. The plotted value is `base_k + y_k`, where
/// `base_k` is chosen so the curve is continuous at each hand-over. Samples
/// shared by two stages appear once.
pub fn run_stages<T: Scalar>(
    stages: &[StageSpec<T>],
    step: T,
) -> Result<StagedTrajectory<T>, DynamicsError> {
    if stages.is_empty() {
        return Err(DynamicsError::InvalidSetup("at least one stage is required".into()));
    }
    if !(step > T::zero()) || !step.is_finite() {
        return Err(DynamicsError::InvalidSetup(format!("step must be positive, got {step}")));
    }
    let mut times = vec![T::zero()];
    let mut values = vec![stages[0].params.y0];
    let mut boundaries = Vec::with_capacity(stages.len());

    for (k, stage) in stages.iter().enumerate() {
        let p = &stage.params;
        check_step(p, step)?;
        let target = stage.target();
        if p.y0 < target && !(p.affinity > T::zero()) {
            return Err(DynamicsError::StageStalled {
                stage: k,
                reason: format!("affinity {} is not positive", p.affinity),
            });
        }
        let start_t = *times.last().expect("non-empty");
        let base = *values.last().expect("non-empty") - p.y0;
        let mut t = start_t;
        let mut y = p.y0;
        let mut steps = 0usize;
        while y < target {
            let full = rk4_step(y, step, |v| logistic_rhs(v, p));
            let (h, next) = if full >= target {
                let tau = time_between(y, target, p.affinity, p.delta_e)
                    .unwrap_or(step)
                    .min(step);
                (tau, rk4_step(y, tau, |v| logistic_rhs(v, p)))
            } else {
                (step, full)
            };
            if h > T::zero() && t + h > t {
                t += h;
                y = next;
                times.push(t);
                values.push(base + y);
            } else {
                break;
            }
            steps += 1;
            if steps > MAX_STAGE_STEPS || !y.is_finite() {
                return Err(DynamicsError::StageStalled {
                    stage: k,
                    reason: format!("no completion after {steps} steps"),
                });
            }
        }
        boundaries.push(StageBoundary {
            index: times.len() - 1,
            t,
            value: *values.last().expect("non-empty"),
            elapsed: t - start_t,
        });
    }
    Ok(StagedTrajectory {
        series: TimeSeries::from_parts_unchecked(times, values),
        boundaries,
    })
}

/// Applied energy and the closed interval where the affinity model holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyContext<T> {
    pub applied_energy: T,
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> EnergyContext<T> {
    pub fn new(applied_energy: T, lo: T, hi: T) -> Result<Self, DynamicsError> {
        if !(lo <= hi) {
            return Err(DynamicsError::InvalidContext {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
        Ok(Self {
            applied_energy,
            lo,
            hi,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContextValidity {
    InRange,
    OutOfRange,
}

pub fn check_context<T: Scalar>(_p: &LogisticParams<T>, ctx: &EnergyContext<T>) -> ContextValidity {
    if ctx.applied_energy >= ctx.lo && ctx.applied_energy <= ctx.hi {
        ContextValidity::InRange
    } else {
        ContextValidity::OutOfRange
    }
}

/// A trajectory plus any caveats about the regime it was computed in.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation<T> {
    pub series: TimeSeries<T>,
    pub warnings: Vec<String>,
}

/// [`integrate`], flagging applied energies outside the validity interval.
pub fn integrate_in_context<T: Scalar>(
    p: &LogisticParams<T>,
    ctx: &EnergyContext<T>,
    t_end: T,
    step: T,
) -> Result<Simulation<T>, DynamicsError> {
    let series = integrate(p, t_end, step)?;
    let mut warnings = Vec::new();
    if check_context(p, ctx) == ContextValidity::OutOfRange {
        warnings.push(format!(
            "applied energy {} lies outside [{}, {}]; constant-affinity dynamics may not hold",
            ctx.applied_energy, ctx.lo, ctx.hi
        ));
    }
    Ok(Simulation { series, warnings })
}
