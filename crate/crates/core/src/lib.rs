//! Exact homological algebra over the graded zigzag algebras `A_m^n`.
//!
//! Layers, bottom to top:
//! - [`exact`]: rationals, sparse elimination, finite complexes.
//! - [`zigzag`]: the algebras and their weight action.
//! - [`multimap`], [`module`], [`minimal`]: A∞-modules, morphism complexes,
//!   cones, minimal models.
//! - [`bar`], [`bigraded`]: bar tensors, bigraded modules, collapse and
//!   scale transfer.
//! - [`twisted`]: twisted complexes over the projectives, twists, braids.
//! - [`hochschild`]: Hochschild chains, classes, Euler pairings.
//! - [`equivariance`]: group cohomology, Killing cocycles, weak and homotopy
//!   actions, strictification.
//! - [`io`]: on-disk formats.
//! - [`suite`], [`par`]: seeded corpora and named checks, run sequentially
//!   or on the rayon pool.

pub mod bar;
pub mod bigraded;
pub mod equivariance;
pub mod error;
pub mod exact;
pub mod hochschild;
pub mod io;
pub mod minimal;
pub mod module;
pub mod multimap;
pub mod par;
pub mod suite;
pub mod twisted;
pub mod zigzag;

pub use error::{Error, Result};
pub use exact::Q;
pub use zigzag::ZigzagAlgebra;
