//! Automatic 3D box labels for LiDAR scenes from 2D camera annotations.
//!
//! The pipeline extracts the points of each annotated object, separates
//! static from moving objects, aggregates static objects over all frames,
//! cleans the aggregate with DBSCAN, fits a PCA box, checks its shape
//! against the point hull and refines it against the 2D boxes of every
//! view. A synthetic scene generator with ground truth drives the tests and
//! the evaluation report.

pub mod cli;
pub mod cluster;
pub mod coarse;
pub mod config;
pub mod error;
pub mod eval;
pub mod extract;
pub mod geom;
pub mod refine;
pub mod scene;

pub use error::{Error, Result};
