//! Critical points of the strain energy: Lagrange system assembly, the two
//! solver backends, and classification into stable and unstable
//! realizations.

pub mod catalog;
pub mod homotopy;
pub mod lagrange;
pub mod multistart;
pub mod polynomial;

use thiserror::Error;

pub use catalog::{
    build_catalog, classify, filter_realizations, polish_critical_point, Backend, CatalogConfig, Classification,
    CriticalPoint, RealizationCatalog, SolverStats, Tolerances,
};
pub use homotopy::{
    path_count, solve_total_degree, HomotopyConfig, HomotopyRun, HomotopyStats, SolutionPoint, StartStructure,
    TrackerSettings,
};
pub use lagrange::{assemble_lagrange_system, LagrangeLayout, LagrangeSystem};
pub use multistart::{solve_multistart, MultistartConfig};
pub use polynomial::{Polynomial, PolynomialSystem, Term};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("start system has {required} paths, budget is {budget}")]
    PathBudgetExceeded { required: u128, budget: usize },
    #[error("system has {equations} equations in {variables} unknowns")]
    NonSquareSystem { equations: usize, variables: usize },
    #[error("solver backend failed: {0}")]
    Backend(String),
    #[error(transparent)]
    Framework(#[from] crate::framework::FrameworkError),
}
