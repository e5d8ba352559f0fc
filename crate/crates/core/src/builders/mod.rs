pub mod cycles;
pub mod grid;
pub mod horosphere;
pub mod product;
pub mod tree;

pub use grid::{build_grid, Grid};
pub use horosphere::{build_horosphere, HorosphereComplex, HorosphereOptions};
pub use product::{build_tree_product, FactorCell, TreeProductSpace};
pub use tree::{build_tree, TruncatedTree};
pub use cycles::{flat_region_loop, hard_sphere, random_cycle, HardSphere};
