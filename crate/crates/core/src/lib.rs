pub mod error;
pub mod graded;
pub mod io;
mod linalg;
pub mod matrix;
pub mod models;
pub mod calculus;
pub mod cli;
pub mod diagnostics;
pub mod spectral;
pub mod subalgebra;

pub use error::{Error, Result};
