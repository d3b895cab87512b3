//! Entropy-regularized optimal execution: closed forms, Riccati solver,
//! Monte Carlo evaluation, and structural checks for two linear-quadratic
//! models of liquidation against an uncertain market trading rate.

pub mod closed_form;
pub mod entropy;
pub mod error;
pub mod game;
pub mod model;
pub mod riccati;
pub mod scalar;
pub mod sim;

pub mod cli;

pub use error::{Error, Result};
pub use scalar::Scalar;

// Concrete double-precision aliases; the underlying types are generic over
// the scalar via `Scalar`.
pub type ModelParams = model::ModelParams<f64>;
pub type Schedule = model::Schedule<f64>;
pub type GaussianDist = model::GaussianDist<f64>;
pub type PriorSchedule = model::PriorSchedule<f64>;
pub type RiskSpecModel1 = model::RiskSpecModel1<f64>;
pub type RiskSpecModel2 = model::RiskSpecModel2<f64>;
pub type Model1Coeffs = model::Model1Coeffs<f64>;
pub type Model2Coeffs = model::Model2Coeffs<f64>;
pub type ValueCoefficients = riccati::ValueCoefficients<f64>;
pub type StrategyModel1 = closed_form::StrategyModel1<f64>;
pub type StrategyModel2 = closed_form::StrategyModel2<f64>;
pub type QuadraticCost = entropy::QuadraticCost<f64>;
pub type DiscretizedDensity = entropy::DiscretizedDensity<f64>;
