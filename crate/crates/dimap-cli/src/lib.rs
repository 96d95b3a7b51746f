//! Command-line front end for the arrangement solver: text formats for
//! instances, placements, and distance tables; solve/lp/exact/gen/eval
//! subcommands; a benchmark sweep; and static SVG renders.

pub mod app;
pub mod fmt;
pub mod svg;

pub use app::run;
