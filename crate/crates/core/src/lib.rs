//! Pareto-front generation for multi-objective weighted max-cut by
//! scalarization and Ising sampling.
//!
//! The workflow: draw weight vectors on the simplex, collapse the objectives
//! into one Ising problem per vector, fit couplings into a programmable range,
//! sample with a pluggable backend, and keep every non-dominated objective
//! vector in an archive whose hypervolume is tracked against modeled sampler
//! time.

pub mod instance;
pub mod objectives;
pub mod pareto;
pub mod pipeline;
pub mod rng;
pub mod samplers;

pub use instance::{generate_gaussian_weights, generate_heavy_hex, validate_instance, Graph, MultiObjectiveInstance};
pub use objectives::{
    autoscale, evaluate_all, evaluate_objective, sample_weight_vector, scalarize, ObjectiveVector, ScalarIsing,
    SpinState, WeightVector,
};
pub use pareto::{dominates, figure_of_merit, hypervolume, nondominated_filter, reference_point, FrontArchive, FrontPoint};
pub use samplers::{BackendSpec, CostModel, SampleSet, Sampler, TilingPlan};
