pub mod advection;
pub mod cases;
pub mod config;
pub mod elements;
pub mod error;
pub mod linsolve;
pub mod mesh;
pub mod operators;
pub mod space;
pub mod sparse;
pub mod swe;

pub use error::{Error, Result};
pub use mesh::{MeshFamily, PolyMesh};
pub use space::{Field, Space};
pub use sparse::SparseOp;
