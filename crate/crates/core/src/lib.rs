pub mod edges;
pub mod error;
pub mod jet;
pub mod lab;
pub mod linalg;
pub mod quad;
pub mod quantize;
pub mod spectra;
pub mod stability;
pub mod symbols;

pub use error::{Error, Result};
