//! Monte Carlo ensembles of the prelimit reflected diffusions and the
//! estimators used to check the convergence conditions on them.
//!
//! Paths run in parallel over a rayon pool but each draws from its own
//! substream, and every reduction runs over paths in index order, so results
//! do not depend on the worker count.

mod checks;
mod ensemble;
mod model;

pub use checks::*;
pub use ensemble::{
    simulate_ensemble, simulate_ensemble_with_workers, EnsembleSpec, HittingProbe, LaplaceProbe, PathEnsemble,
    PathFailure, PathRecord,
};
pub use model::*;
