//! Several memes competing for the same resources.
//!
//! Meme `i` follows
//!
//! ```text
//! y_i' = (A_i / dE_i) y_i (dE_i - sum_j alpha_ij y_j)
//! ```
//!
//! where row `i` of `alpha` holds the effects of every meme on meme `i`.
//! Dividing row `i` by `dE_i` gives the equivalent Lotka-Volterra competition
//! form `y_i' = A_i y_i (1 - sum_j alpha'_ij y_j)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{solve, LinalgError, Matrix};
use crate::ode::{grid_steps, uniform_grid, Rk4System};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// Condition estimate above which the interaction matrix counts as singular.
pub const MAX_CONDITION: f64 = 1e12;
/// Negative undershoot that is silently clamped back to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompetitionError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("delta_e[{index}] = {value} must be positive")]
    NonPositiveDeltaE { index: usize, value: f64 },
    #[error("system is already normalized")]
    AlreadyNormalized,
    #[error("operation needs a normalized system")]
    NotNormalized,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid integration setup: {0}")]
    InvalidSetup(String),
    #[error("integration unstable at t = {t}: component {index} reached {value}")]
    StepUnstable { t: f64, index: usize, value: f64 },
    #[error("interaction matrix is singular (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },
}

impl From<LinalgError> for CompetitionError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular { condition } => CompetitionError::SingularMatrix { condition },
            LinalgError::Dimension(m) => CompetitionError::Dimension(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitionSystem<T> {
    pub affinities: Vec<T>,
    pub delta_es: Vec<T>,
    pub alpha: Matrix<T>,
    pub normalized: bool,
}

impl<T: Scalar> CompetitionSystem<T> {
    /// A system in the form with `dE_i` inside the bracket.
    pub fn new(affinities: Vec<T>, delta_es: Vec<T>, alpha: Matrix<T>) -> Result<Self, CompetitionError> {
        let n = affinities.len();
        if delta_es.len() != n || alpha.dim() != n {
            return Err(CompetitionError::Dimension(format!(
                "{n} affinities, {} delta_es, {}x{} alpha",
                delta_es.len(),
                alpha.dim(),
                alpha.dim()
            )));
        }
        for (index, &v) in delta_es.iter().enumerate() {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(CompetitionError::NonPositiveDeltaE {
                    index,
                    value: v.to_f64_lossy(),
                });
            }
        }
        Ok(Self {
            affinities,
            delta_es,
            alpha,
            normalized: false,
        })
    }

    /// A system already written as `A_i y_i (1 - sum_j alpha_ij y_j)`.
    pub fn from_normalized(affinities: Vec<T>, alpha: Matrix<T>) -> Result<Self, CompetitionError> {
        let n = affinities.len();
        let mut sys = Self::new(affinities, vec![T::one(); n], alpha)?;
        sys.normalized = true;
        Ok(sys)
    }

    pub fn len(&self) -> usize {
        self.affinities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.affinities.is_empty()
    }

    /// Single-meme equilibria: `dE_i / alpha_ii`, or `1 / alpha_ii` once normalized.
    pub fn carrying_capacities(&self) -> Vec<T> {
        (0..self.len())
            .map(|i| {
                let scale = if self.normalized { T::one() } else { self.delta_es[i] };
                scale / self.alpha[(i, i)]
            })
            .collect()
    }

    fn check_state(&self, y: &[T]) -> Result<(), CompetitionError> {
        if y.len() != self.len() {
            return Err(CompetitionError::Dimension(format!(
                "state has {} components, system has {}",
                y.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Right-hand side for either form of the system.
    fn rhs_into(&self, y: &[T], out: &mut [T]) {
        for i in 0..self.len() {
            let crowd: T = self.alpha.row(i).iter().zip(y).map(|(&a, &v)| a * v).sum();
            out[i] = if self.normalized {
                self.affinities[i] * y[i] * (T::one() - crowd)
            } else {
                self.affinities[i] / self.delta_es[i] * y[i] * (self.delta_es[i] - crowd)
            };
        }
    }
}

/// Non-negative, finite meme amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector<T>(Vec<T>);

impl<T: Scalar> StateVector<T> {
    pub fn new(y: Vec<T>) -> Result<Self, CompetitionError> {
        if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(CompetitionError::InvalidState(format!("component {i} = {v}")));
        }
        Ok(Self(y))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

/// Absorbs each `dE_i` into row `i` of the interaction matrix.
pub fn normalize<T: Scalar>(sys: &CompetitionSystem<T>) -> Result<CompetitionSystem<T>, CompetitionError> {
    if sys.normalized {
        return Err(CompetitionError::AlreadyNormalized);
    }
    let n = sys.len();
    let mut alpha = sys.alpha.clone();
    for i in 0..n {
        let de = sys.delta_es[i];
        if !(de > T::zero()) {
            return Err(CompetitionError::NonPositiveDeltaE {
                index: i,
                value: de.to_f64_lossy(),
            });
        }
        for j in 0..n {
            alpha[(i, j)] = sys.alpha[(i, j)] / de;
        }
    }
    Ok(CompetitionSystem {
        affinities: sys.affinities.clone(),
        delta_es: sys.delta_es.clone(),
        alpha,
        normalized: true,
    })
}

/// `A_i y_i (1 - sum_j alpha_ij y_j)` for every meme.
pub fn competition_rhs<T: Scalar>(
    y: &StateVector<T>,
    sys: &CompetitionSystem<T>,
) -> Result<Vec<T>, CompetitionError> {
    if !sys.normalized {
        return Err(CompetitionError::NotNormalized);
    }
    sys.check_state(y.as_slice())?;
    let mut out = vec![T::zero(); sys.len()];
    sys.rhs_into(y.as_slice(), &mut out);
    Ok(out)
}

/// RK4 trajectories, one series per meme, on `0, step, ..., t_end`.
///
/// Either form of the system is accepted; both describe the same dynamics.
pub fn integrate_competition<T: Scalar>(
    sys: &CompetitionSystem<T>,
    y0: &StateVector<T>,
    t_end: T,
    step: T,
) -> Result<Vec<TimeSeries<T>>, CompetitionError> {
    sys.check_state(y0.as_slice())?;
    if !(step > T::zero()) || !(t_end > T::zero()) || !t_end.is_finite() || step > t_end {
        return Err(CompetitionError::InvalidSetup(format!(
            "need 0 < step <= t_end (t_end={t_end}, step={step})"
        )));
    }
    let n = sys.len();
    let grid = uniform_grid(t_end, step);
    let mut paths: Vec<Vec<T>> = (0..n).map(|_| Vec::with_capacity(grid.len())).collect();
    let mut y = y0.as_slice().to_vec();
    for (i, p) in paths.iter_mut().enumerate() {
        p.push(y[i]);
    }
    let mut rk = Rk4System::new(n);
    let clamp = T::lit(CLAMP_TOLERANCE);
    for (k, h) in grid_steps(&grid, step).enumerate() {
        rk.step(&mut y, h, |v, out| sys.rhs_into(v, out));
        for (i, v) in y.iter_mut().enumerate() {
            if !v.is_finite() || *v < -clamp {
                return Err(CompetitionError::StepUnstable {
                    t: grid[k + 1].to_f64_lossy(),
                    index: i,
                    value: v.to_f64_lossy(),
                });
            }
            if *v < T::zero() {
                *v = T::zero();
            }
            paths[i].push(*v);
        }
    }
    Ok(paths
        .into_iter()
        .map(|p| TimeSeries::from_parts_unchecked(grid.clone(), p))
        .collect())
}

/// Strictly positive solution of `alpha y = 1`, if there is one.
///
/// Existence only; see [`equilibrium_eigenvalues`] for stability.
pub fn interior_equilibrium<T: Scalar>(
    sys: &CompetitionSystem<T>,
) -> Result<Option<StateVector<T>>, CompetitionError> {
    if !sys.normalized {
        return Err(CompetitionError::NotNormalized);
    }
    let ones = vec![T::one(); sys.len()];
    let y = solve(&sys.alpha, &ones, T::lit(MAX_CONDITION))?;
    if y.iter().all(|&v| v > T::zero() && v.is_finite()) {
        Ok(Some(StateVector(y)))
    } else {
        Ok(None)
    }
}

/// Jacobian of the right-hand side at `y`.
pub fn jacobian<T: Scalar>(sys: &CompetitionSystem<T>, y: &StateVector<T>) -> Result<Matrix<T>, CompetitionError> {
    if !sys.normalized {
        return Err(CompetitionError::NotNormalized);
    }
    let y = y.as_slice();
    sys.check_state(y)?;
    let n = sys.len();
    let mut jac = Matrix::zeros(n);
    for i in 0..n {
        let crowd: T = sys.alpha.row(i).iter().zip(y).map(|(&a, &v)| a * v).sum();
        for j in 0..n {
            let mut v = -sys.affinities[i] * y[i] * sys.alpha[(i, j)];
            if i == j {
                v += sys.affinities[i] * (T::one() - crowd);
            }
            jac[(i, j)] = v;
        }
    }
    Ok(jac)
}

/// Eigenvalues `(re, im)` of the Jacobian at `y`, computed in `f64`.
pub fn equilibrium_eigenvalues<T: Scalar>(
    sys: &CompetitionSystem<T>,
    y: &StateVector<T>,
) -> Result<Vec<(f64, f64)>, CompetitionError> {
    let jac = jacobian(sys, y)?;
    let n = jac.dim();
    let m = DMatrix::from_fn(n, n, |i, j| jac[(i, j)].to_f64_lossy());
    Ok(m.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect())
}

/// Whether every eigenvalue of the Jacobian at `y` has negative real part.
pub fn is_locally_stable<T: Scalar>(
    sys: &CompetitionSystem<T>,
    y: &StateVector<T>,
) -> Result<bool, CompetitionError> {
    Ok(equilibrium_eigenvalues(sys, y)?.iter().all(|&(re, _)| re < 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn sv(v: &[f64]) -> StateVector<f64> {
        StateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn unit_amplitudes_leave_alpha_alone() {
        let alpha = m(&[&[1.0, 0.3], &[0.7, 1.0]]);
        let sys = CompetitionSystem::new(vec![1.0, 2.0], vec![1.0, 1.0], alpha.clone()).unwrap();
        assert_eq!(normalize(&sys).unwrap().alpha, alpha);
    }

    #[test]
    fn single_meme_normalization() {
        let sys = CompetitionSystem::new(vec![1.0], vec![4.0], m(&[&[1.0]])).unwrap();
        let n = normalize(&sys).unwrap();
        assert_eq!(n.alpha[(0, 0)], 0.25);
        assert_eq!(n.carrying_capacities(), vec![4.0]);
        assert_eq!(normalize(&n), Err(CompetitionError::AlreadyNormalized));
    }

    #[test]
    fn bad_amplitudes_and_dimensions() {
        assert!(matches!(
            CompetitionSystem::new(vec![1.0], vec![0.0], m(&[&[1.0]])),
            Err(CompetitionError::NonPositiveDeltaE { index: 0, .. })
        ));
        assert!(matches!(
            CompetitionSystem::new(vec![1.0, 1.0], vec![1.0], m(&[&[1.0]])),
            Err(CompetitionError::Dimension(_))
        ));
        let sys = CompetitionSystem::from_normalized(vec![1.0], m(&[&[1.0]])).unwrap();
        assert!(matches!(competition_rhs(&sv(&[1.0, 2.0]), &sys), Err(CompetitionError::Dimension(_))));
        assert!(StateVector::new(vec![-1.0]).is_err());
    }

    #[test]
    fn rhs_examples() {
        let one = CompetitionSystem::from_normalized(vec![1.0], m(&[&[1.0]])).unwrap();
        assert_eq!(competition_rhs(&sv(&[0.0]), &one).unwrap(), vec![0.0]);
        assert_eq!(competition_rhs(&sv(&[0.5]), &one).unwrap(), vec![0.25]);
        let two = CompetitionSystem::from_normalized(vec![1.0, 1.0], Matrix::identity(2)).unwrap();
        assert_eq!(competition_rhs(&sv(&[0.5, 0.25]), &two).unwrap(), vec![0.25, 0.1875]);
        let raw = CompetitionSystem::new(vec![1.0], vec![2.0], m(&[&[1.0]])).unwrap();
        assert_eq!(competition_rhs(&sv(&[0.5]), &raw), Err(CompetitionError::NotNormalized));
    }

    #[test]
    fn equilibria() {
        let id = CompetitionSystem::from_normalized(vec![1.0; 3], Matrix::identity(3)).unwrap();
        assert_eq!(interior_equilibrium(&id).unwrap().unwrap().as_slice(), &[1.0, 1.0, 1.0]);

        let weak = CompetitionSystem::from_normalized(vec![1.0, 1.0], m(&[&[1.0, 0.5], &[0.5, 1.0]])).unwrap();
        let y = interior_equilibrium(&weak).unwrap().unwrap();
        for &v in y.as_slice() {
            assert!((v - 2.0 / 3.0).abs() < 1e-15);
        }
        assert!(is_locally_stable(&weak, &y).unwrap());

        let strong = CompetitionSystem::from_normalized(vec![1.0, 1.0], m(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap();
        let y = interior_equilibrium(&strong).unwrap().unwrap();
        for &v in y.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        // Saddle: eigenvalues -1 and 1/3.
        assert!(!is_locally_stable(&strong, &y).unwrap());

        let singular = CompetitionSystem::from_normalized(vec![1.0, 1.0], m(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!(matches!(interior_equilibrium(&singular), Err(CompetitionError::SingularMatrix { .. })));

        let no_interior = CompetitionSystem::from_normalized(vec![1.0, 1.0], m(&[&[1.0, 2.0], &[0.5, 1.0 + 1e-3]])).unwrap();
        // Solution has a negative component.
        assert_eq!(interior_equilibrium(&no_interior).unwrap(), None);
    }

    #[test]
    fn extinct_component_stays_extinct() {
        let sys = CompetitionSystem::from_normalized(vec![1.0, 1.5], m(&[&[1.0, 0.4], &[0.6, 1.0]])).unwrap();
        let paths = integrate_competition(&sys, &sv(&[0.0, 0.2]), 30.0, 0.05).unwrap();
        assert!(paths[0].values().iter().all(|&v| v == 0.0));
        assert!((paths[1].last().unwrap().1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unstable_step_detected() {
        let sys = CompetitionSystem::from_normalized(vec![50.0], m(&[&[1.0]])).unwrap();
        assert!(matches!(
            integrate_competition(&sys, &sv(&[0.9]), 10.0, 1.0),
            Err(CompetitionError::StepUnstable { .. })
        ));
    }
}
