//! Solvers for the optimal bucket order problem and its generalization to
//! weighted sets of bucket orders.
//!
//! A bucket order is a ranking with ties. Given a pair order matrix `C`
//! (entry `C(u,v)` is the strength with which `u` precedes `v`), the single
//! order problem looks for the bucket order whose `{0, 0.5, 1}` matrix is
//! closest to `C` in entrywise L1 distance. The set version looks for `b`
//! bucket orders and weights on the simplex whose weighted matrix is
//! closest to `C`.
//!
//! * [`model`]: bucket orders, matrices, weighted ensembles.
//! * [`objective`]: distance, fitness, utopian lower bounds.
//! * [`exact`]: enumeration, solution-space sizes, exhaustive solvers.
//! * [`sls`]: the stochastic local search.
//! * [`ingest`]: PrefLib files and matrix CSV.

pub mod exact;
pub mod ingest;
pub mod model;
pub mod objective;
pub mod samples;
pub mod sls;

pub use exact::{
    enumerate_bucket_orders, exact_obop, exact_osbop_equal, fubini, space_size, ExactError, ExactResult,
    ExactSearch, SpaceSize,
};
pub use ingest::{build_matrix, parse_preflib, read_matrix, write_matrix, IngestError, Profile, Vote};
pub use model::{
    aggregate, format_bucket_order, from_matrix, parse_bucket_order, to_matrix, BucketMatrix, BucketOrder,
    ModelError, PairOrderMatrix, SquareMatrix, WeightedEnsemble,
};
pub use objective::{distance, fitness, round_to_grid, utopia, ObjectiveError, UtopiaReport};
pub use sls::{
    initial_solution, mutate_order, mutate_solution, sls_osbop, solver_rng, tune_weights, MutationKind,
    SlsConfig, SlsError, SlsOutcome, SlsTrace,
};
