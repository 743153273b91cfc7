//! Mass of graphical hypersurfaces in static warped product spacetimes.

pub mod error;
pub mod fieldexpr;
pub mod geometry;
pub mod ambient;
pub mod hypersurface;
pub mod massint;
pub mod models;
pub mod suite;

pub use error::{Error, Result};
