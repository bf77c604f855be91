pub mod error;
pub mod lattice;
pub mod linalg;
pub mod mask;
pub mod ortho;
pub mod refine;
pub mod regularity;
pub mod subdivision;
pub mod tile;
pub mod wavelet;

pub use error::{Error, Result};
