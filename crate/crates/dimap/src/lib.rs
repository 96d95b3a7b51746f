//! Solver toolkit for the minimum d-dimensional arrangement problem with
//! pinned terminals: place the vertices of a weighted graph injectively on
//! lattice points, keeping each terminal on its pin, while minimizing the
//! weighted sum of Euclidean edge lengths.
//!
//! The pieces, roughly bottom-up:
//!
//! * [`model`] — instances, grids, placements, cost evaluation.
//! * [`simplex`] — a dense two-phase LP solver.
//! * [`lp`] — the spreading-metric relaxation solved by cutting planes.
//! * [`metric`] — random tree embeddings and terminal clusterings.
//! * [`order`] — anchored one-dimensional orderings of clusters.
//! * [`curve`] — space-filling curve orders of squares and point subsets.
//! * [`unbounded`] — the free-lattice placement pipeline (plus the
//!   inflated-grid variant).
//! * [`bounded`] — the exact-grid placement pipeline.
//! * [`exact`] — brute-force optimum for tiny instances.
//! * [`generators`] — integrality-gap and hardness-reduction families.
//! * [`synth`] — seeded random instances for tests and experiments.

pub mod bounded;
pub mod curve;
pub mod exact;
pub mod generators;
pub mod lp;
pub mod metric;
pub mod model;
pub mod order;
pub mod simplex;
pub mod synth;
pub mod unbounded;

pub use model::{
    cost_of, evaluate_cost, eps_box_side, grid_cells, Edge, GridMode, Instance, ModelError,
    Placement, PlacementError, Point, VertexId,
};
