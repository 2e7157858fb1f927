//! Process states of multitime quantum experiments and Leggett-Garg
//! functionals built on them.
//!
//! Operators are dense `nalgebra` matrices of `Complex64`. Multipartite
//! operators carry slot labels (`S1`, `A1`, `S2`, ...) so that contractions
//! and partial traces can be named rather than indexed.

pub mod error;
pub mod lg;
pub mod linalg;
pub mod opstate;
pub mod process;
pub mod random;
pub mod scenarios;
pub mod schema;
pub mod slots;
pub mod structure;

pub use error::{Error, Result};
pub use linalg::{Basis, Matrix, C64, DEFAULT_TOL};
pub use process::{Evolution, Instrument, MeasurementPlan, ProcessState, Scenario};
pub use slots::{LabeledOperator, SlotLabel};
pub use lg::{LGReport, PairwisePlans, ProbabilityTable};
pub use schema::{load_scenario_file, LoadedScenario, ScenarioFile};
pub use structure::{Condition, ConditionBases, QCClassification, QcPair};
