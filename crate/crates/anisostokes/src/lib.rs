//! Equal-order stabilised finite elements for the Stokes equations on
//! arbitrarily anisotropic meshes.
//!
//! The crate builds locally modified meshes over a fixed coarse patch grid
//! (cut patches resolve an implicit boundary with eight triangles), assembles
//! the equal-order `Q1/Q1`--`P1/P1` Stokes saddle-point system, stabilises the
//! pressure with an average-based anisotropic edge penalty (plus two
//! comparison variants), solves the sparse system directly and measures
//! errors against manufactured solutions.
//!
//! The high-level experiment drivers live in [`driver`]; everything else is
//! composable: mesh -> space -> assembly -> stabilisation -> solve -> norms.

pub mod driver;
pub mod error;
pub mod io;
pub mod mesh;
pub mod solver;
pub mod space;
pub mod stab;
pub mod stokes;
pub mod verify;

pub use error::Error;
