//! Covers relative to a subspace, their nerves, and the extension
//! machinery built on them.

pub mod cover;
pub mod exploded;
pub mod metric;
pub mod nerve;
pub mod pipeline;
pub mod whitney;

pub use cover::{
    an_cover_grid, an_cover_product, an_cover_tree, audit_cover, ls_cover, s_multiplicity, AnCover, CoverAudit, Kind,
    LsCover,
};
pub use exploded::{exploded_simplex, ExplodedSimplex};
pub use metric::GraphMetric;
pub use nerve::{audit_g, audit_h0, map_g, map_h0, nerve, GAudit, H0Audit, Nerve};
pub use pipeline::{Pipeline, Trace};
pub use whitney::{audit_whitney, whitney, Cube, Whitney, WhitneyAudit};
