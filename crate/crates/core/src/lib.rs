//! Fast direct boundary element solver for time-harmonic in-plane elastic
//! scattering by a traction-free cavity.
//!
//! The boundary integral equation is the Burton–Miller combination
//! `(D + I/2 + αN) u = u_inc + α T u_inc`, discretised by Galerkin with
//! piecewise-linear elements on a polygonal boundary. Two solvers are provided:
//!
//! * [`dense`]: assembles the full `2N × 2N` matrix and factors it with
//!   partial-pivoted LU. This is the reference ("Conv") path.
//! * [`fds`]: hierarchical skeletonization with proxy-surface interpolative
//!   decompositions. Build cost and memory are `O(N)`; each additional
//!   right-hand side is a cheap upward/downward sweep.
//!
//! [`postprocess`] evaluates the field off the boundary, checks the null-field
//! identity inside the cavity and sweeps the boundary intensity over
//! frequency; [`harness`] drives the accuracy, complexity and frequency
//! studies behind the `elastic-fds` command.
//!
//! A typical end-to-end use:
//!
//! ```no_run
//! use elastic_fds::prelude::*;
//!
//! let medium = ElasticMedium::from_speeds(3f64.sqrt(), 1.0, 1.0, 2.0)?;
//! let mesh = BoundaryMesh::star(&StarCurve::default(), 400)?;
//! let tree = ClusterTree::new(400, 2)?;
//! let problem = Problem::new(&mesh, &medium, medium.default_alpha());
//! let wave = IncidentWave::along_angle(0.0);
//!
//! let fds = FdsFactorization::build(&problem, &tree, &FdsConfig::default())?;
//! let rhs = assemble_rhs_leaf_order(&problem, &tree, &wave);
//! let x = fds.solve(&rhs)?;
//! # Ok::<(), elastic_fds::Error>(())
//! ```

pub mod assembly;
pub mod compression;
pub mod dense;
pub mod error;
pub mod fds;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod medium;
pub mod postprocess;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use faer::c64;

pub mod prelude {
    pub use crate::assembly::{assemble_block, assemble_dense, assemble_rhs, assemble_rhs_leaf_order, leaf_order_to_nodal, Problem};
    pub use crate::compression::ProxyConfig;
    pub use crate::dense::{conv_solve, conv_solve_non_bm, DenseFactorization};
    pub use crate::fds::{FdsConfig, FdsFactorization};
    pub use crate::geometry::{BoundaryMesh, ClusterTree, StarCurve};
    pub use crate::medium::{ElasticMedium, IncidentWave};
    pub use crate::postprocess::{evaluate_field, intensity_sweep, null_field_residual, FieldSample, SolverChoice};
    pub use crate::{c64, Error, Result};
}
