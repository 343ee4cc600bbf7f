//! Meme-aggregation dynamics.
//!
//! Constituent energies, bounded logistic growth of a meme's amplitude, fits of
//! that growth to observations, bubble detection, competition between several
//! memes, and entropy triage of dataset columns. Numerical code is generic over
//! [`Scalar`] (`f32` or `f64`); the `*64` aliases below fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bubble;
pub mod competition;
pub mod dynamics;
pub mod energy;
pub mod features;
pub mod fitting;
pub mod io;
pub mod linalg;
pub mod noise;
pub mod ode;
pub mod scalar;
pub mod series;
pub mod synthetic;

pub use bubble::{
    classify, detect_inflection, detect_inflection_with, stability_check, BubbleConfig,
    BubbleError, BubbleLabel, BubbleVerdict, Inflection, InflectionOptions, StabilityReport,
    StabilityStatus,
};
pub use competition::{
    competition_rhs, integrate_competition, interior_equilibrium, normalize, CompetitionError,
    CompetitionSystem, StateVector,
};
pub use dynamics::{
    check_context, exponential_solution, integrate, logistic_closed_form, logistic_curvature,
    logistic_rhs, run_stages, ContextValidity, DynamicsError, EnergyContext, LogisticParams,
    StageSpec,
};
pub use energy::{activation_energy, delta_energy, Constituent, ConstituentSet, EnergyLevels};
pub use features::{column_entropy, triage, Dataset, FeatureLabel, FeatureScore, TriageThresholds};
pub use fitting::{fit_exponential, fit_logistic, goodness, FitError, FitParams, FitReport, ModelKind};
pub use linalg::Matrix;
pub use scalar::Scalar;
pub use series::TimeSeries;

pub type LogisticParams64 = LogisticParams<f64>;
pub type TimeSeries64 = TimeSeries<f64>;
pub type FitReport64 = FitReport<f64>;
pub type BubbleVerdict64 = BubbleVerdict<f64>;
pub type CompetitionSystem64 = CompetitionSystem<f64>;
pub type ConstituentSet64 = ConstituentSet<f64>;
pub type Dataset64 = Dataset<f64>;
pub type FeatureScore64 = FeatureScore<f64>;

pub type LogisticParams32 = LogisticParams<f32>;
pub type TimeSeries32 = TimeSeries<f32>;
