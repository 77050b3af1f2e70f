//! Generation expansion planning with multi-state wind farms.
//!
//! The crate evaluates multi-stage expansion plans against a discounted cost
//! objective (investment, salvage, O&M, unserved energy), reliability limits
//! computed from capacity outage probability tables, and policy constraints,
//! and searches the plan space with an integer-coded genetic algorithm.

pub mod config;
pub mod constraints;
pub mod cost;
pub mod error;
pub mod evaluate;
pub mod ga;
pub mod load;
pub mod model;
pub mod reliability;
pub mod scenarios;
pub mod wind;

pub use config::{load_problem, load_problem_file, to_document, ConfigDocument};
pub use constraints::{ConstraintKind, FeasibilityReport, Violation};
pub use cost::CostBreakdown;
pub use error::{GepError, Result};
pub use evaluate::{Evaluation, Evaluator};
pub use ga::{GaConfig, GaRunResult, MultiRunResult};
pub use load::LoadDurationCurve;
pub use model::{ExpansionPlan, Problem, UnitKind, UnitType};
pub use reliability::{Adequacy, OutageTable, TablePolicy};
pub use wind::{FarmOutputModel, OutputLevels, PowerCurve, TurbineOutputModel, WindSeries};
