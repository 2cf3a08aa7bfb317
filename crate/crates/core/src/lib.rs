//! Photoacoustic inversion on the unit sphere and circle from time-domain
//! boundary observations.

pub mod config;
pub mod error;
pub mod field;
pub mod files;
pub mod forward;
pub mod harmonics;
pub mod phantom;
pub mod quadrature;
pub mod recon2d;
pub mod recon3d;
pub mod specfun;
pub mod volterra;
pub mod xcheck;

pub use error::{Error, Result};
