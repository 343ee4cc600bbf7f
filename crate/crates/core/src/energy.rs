//! Activation and relative energies of a set of constituents.
//!
//! Every constituent carries one energy cost per degree of freedom. All
//! degrees of freedom participate, so the activation energy of a set is the
//! plain double sum of those costs.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("constituent `{id}`: degree of freedom {dof} has invalid energy {value}")]
    InvalidDofEnergy { id: String, dof: usize, value: f64 },
    #[error("duplicate constituent id `{0}`")]
    DuplicateId(String),
    #[error("activation energy {activation} is below resting energy {resting}")]
    DownwardTransition { resting: f64, activation: f64 },
    #[error("invalid energy level {0}")]
    InvalidLevel(f64),
}

/// An element with a (possibly empty) list of per-degree-of-freedom costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constituent<T> {
    pub id: String,
    pub dof_energies: Vec<T>,
}

impl<T: Scalar> Constituent<T> {
    pub fn new(id: impl Into<String>, dof_energies: Vec<T>) -> Self {
        Self {
            id: id.into(),
            dof_energies,
        }
    }

    fn validate(&self) -> Result<(), EnergyError> {
        for (dof, &e) in self.dof_energies.iter().enumerate() {
            if !e.is_finite() || e < T::zero() {
                return Err(EnergyError::InvalidDofEnergy {
                    id: self.id.clone(),
                    dof,
                    value: e.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }

    pub fn energy(&self) -> Result<T, EnergyError> {
        self.validate()?;
        Ok(self.dof_energies.iter().copied().sum())
    }
}

/// Constituents with unique ids. Degree-of-freedom counts may differ.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstituentSet<T> {
    constituents: Vec<Constituent<T>>,
}

impl<T: Scalar> ConstituentSet<T> {
    pub fn new(constituents: Vec<Constituent<T>>) -> Result<Self, EnergyError> {
        let mut seen = HashSet::new();
        for c in &constituents {
            if !seen.insert(c.id.as_str()) {
                return Err(EnergyError::DuplicateId(c.id.clone()));
            }
        }
        Ok(Self { constituents })
    }

    pub fn empty() -> Self {
        Self {
            constituents: Vec::new(),
        }
    }

    pub fn constituents(&self) -> &[Constituent<T>] {
        &self.constituents
    }

    pub fn len(&self) -> usize {
        self.constituents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constituents.is_empty()
    }

    /// Joins two sets with disjoint ids.
    pub fn union(&self, other: &Self) -> Result<Self, EnergyError> {
        let mut all = self.constituents.clone();
        all.extend(other.constituents.iter().cloned());
        Self::new(all)
    }
}

/// Resting (E1) and activation (E2) energies of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevels<T> {
    pub resting: T,
    pub activation: T,
}

impl<T: Scalar> EnergyLevels<T> {
    pub fn new(resting: T, activation: T) -> Result<Self, EnergyError> {
        for v in [resting, activation] {
            if !v.is_finite() || v < T::zero() {
                return Err(EnergyError::InvalidLevel(v.to_f64_lossy()));
            }
        }
        if activation < resting {
            return Err(EnergyError::DownwardTransition {
                resting: resting.to_f64_lossy(),
                activation: activation.to_f64_lossy(),
            });
        }
        Ok(Self {
            resting,
            activation,
        })
    }
}

/// Total energy required to bind every degree of freedom of every constituent.
pub fn activation_energy<T: Scalar>(set: &ConstituentSet<T>) -> Result<T, EnergyError> {
    let mut total = T::zero();
    for c in set.constituents() {
        total += c.energy()?;
    }
    Ok(total)
}

/// `activation - resting`; the amplitude of the transition.
pub fn delta_energy<T: Scalar>(levels: &EnergyLevels<T>) -> Result<T, EnergyError> {
    if levels.activation < levels.resting {
        return Err(EnergyError::DownwardTransition {
            resting: levels.resting.to_f64_lossy(),
            activation: levels.activation.to_f64_lossy(),
        });
    }
    Ok(levels.activation - levels.resting)
}
