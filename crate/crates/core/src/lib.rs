//! Community detection with modularity-based agglomeration, optionally
//! constrained so that communities stay diverse with respect to a protected
//! attribute.

pub mod agglomerate;
pub mod error;
pub mod formats;
pub mod generate;
pub mod graph;
pub mod groups;
pub mod ingest;
pub mod metrics;
pub mod modularity;
pub mod par;
mod sum;

pub use agglomerate::{run, run_observed, Detection, MergeRecord, MergeState, MergeTrace, Mode};
pub use error::{Error, Result};
pub use graph::{load_edge_list, DirectedGraph, Graph};
pub use groups::{build_groups, GroupAssignment, Partition};
pub use metrics::Report;
pub use modularity::{fairness_modularity_qp, modularity_q};
