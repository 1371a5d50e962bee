//! Structural controllability of pattern matrices through zero forcing.
//!
//! A pattern graph is colored from an input set by the color change rule on
//! both the graph and its modified copy; sets that blacken both are zero
//! forcing sets, and every such set makes the sampled `(A, B)` pairs
//! controllable. Minimum sets are found exactly, greedily, or by a learned
//! graph policy.

pub mod cli;
pub mod gnn;
pub mod numeric_verify;
pub mod pattern_graph;
pub mod rl_env;
pub mod solvers;
pub mod trainer;
pub mod zero_forcing;

pub use pattern_graph::{EdgeClass, EdgeClassPolicy, GraphError, InputSet, PatternEntry, PatternGraph};
pub use solvers::{exact_minimum, greedy_degree, validate, ExactBudget, Method, SolveError, SolveResult};
pub use trainer::{solve_rl, train, TrainConfig, TrainError, TrainReport};
pub use zero_forcing::{derived_set, is_zfs, ColorState, ZfsChecker};
