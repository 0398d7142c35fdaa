//! Möbius-invariant Trudinger-Moser experiments on the Poincaré disk.
//!
//! Metric convention throughout: `g = δ/(1 − |x|²)²` (no factor 4). Hence
//! `d(0, r) = artanh r`, `μ(V_ρ) = π sinh²ρ` and the Hardy constant is `1/4`.

pub mod checks;
pub mod covering;
pub mod error;
pub mod families;
pub mod field;
pub mod functionals;
pub mod geom;
pub mod grid;
pub mod io;
pub mod poisson;
mod spectral;
pub mod tolerances;
pub mod transform;
pub mod variational;

pub use error::{Error, Result};
pub use field::{hardy_ratio, Field, GridFunction, Measure, Quadrature, RadialField};
pub use geom::{geodesic_distance, DiskPoint, GeodesicDistance, MobiusMap};
pub use grid::{PolarGrid, RadialGrid};
pub use tolerances::Tolerances;
