pub mod bergman;
pub mod cli;
pub mod config;
pub mod error;
pub mod extension;
pub mod family;
pub mod fiberwise;
pub mod functional;
pub mod ideal;
pub mod linalg;
pub mod multi_index;
pub mod poly;
pub mod psh;
pub mod quadrature;
pub mod weights;

pub use error::{Error, Result};
