//! Exact cellular chain algebra on tree products and their horospheres,
//! with filling-volume experiments and Lipschitz-extension tooling.

pub mod chain;
pub mod builders;
pub mod building;
pub mod complex;
pub mod deform;
pub mod error;
pub mod filling;
pub mod linalg;
pub mod lip;
pub mod rational;
pub mod refine;

pub use chain::Chain;
pub use complex::{Cell, CellComplex};
pub use error::{Error, Result};
pub use rational::Q;
