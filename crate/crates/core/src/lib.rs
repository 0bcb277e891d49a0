//! Shape-supervised design-space reduction for parametric propeller blades.
//!
//! The crate is organised around the study pipeline:
//!
//! * [`geometry`] builds blade surface grids from a baseline station table and a
//!   40-parameter B-spline design space.
//! * [`moments`] integrates volumetric geometric moments of closed meshes and
//!   derives the third-order invariants used in the shape signature.
//! * [`sampling`] draws reproducible Monte-Carlo and Latin-hypercube designs.
//! * [`kle`] assembles shape-signature snapshots and solves the weighted
//!   Karhunen–Loève eigenproblem (with or without the moment block).
//! * [`quality`] measures subspaces: retained variance, reconstruction error and
//!   invalid-design rates.
//! * [`hydro`] defines the evaluator interface and a blade-element surrogate.
//! * [`moo`] runs constrained NSGA-II in the full space or in a latent subspace.
//! * [`pipeline`] persists run directories, manifests and stage artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod geometry;
pub mod hydro;
pub mod io;
pub mod kle;
pub mod moments;
pub mod moo;
pub mod pipeline;
pub mod quality;
pub mod sampling;

mod interp;

pub use error::{Error, Result};

/// Size the global worker pool shared by every parallel stage.
pub fn set_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("thread count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::InvalidInput(e.to_string()))?;
    faer::set_global_parallelism(if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
    Ok(())
}
