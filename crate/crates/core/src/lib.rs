//! Simulation and theory for smooth linear statistics of independently
//! perturbed integer lattices.

pub mod cumulants;
pub mod error;
pub mod gof;
pub mod harness;
pub mod lattice;
pub mod perturbations;
pub mod quadrature;
pub mod rng;
pub mod suites;
pub mod test_functions;
pub mod theory;

pub use cumulants::{CumulantEstimate, SetPartition};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentResult, GofConfig, Normalization};
pub use lattice::{LatticeSampler, SampleConfig, TruncationPolicy};
pub use perturbations::{AbsMoment, ExpansionInfo, Family, LFamily, PerturbationSpec};
pub use rng::Stream;
pub use test_functions::{Shape, Tabulated, TestFunction};
pub use theory::{Class2Method, Normalizer, Prediction, PredictionKind, Regime};
