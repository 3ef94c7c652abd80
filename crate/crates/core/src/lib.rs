//! Coarse (Ollivier) Ricci curvature on finite metric measure spaces.
//!
//! The crate computes `κ(x,y) = 1 - W1(m_x, m_y) / d(x,y)` with exact L1
//! optimal transport and checks it against the comparison bounds that hold
//! for spaces satisfying a Bishop–Gromov volume inequality:
//!
//! - [`space`]: finite metric measure spaces, open balls, random-walk kernels
//!   (r-step, Gaussian, delta, nearest-neighbour).
//! - [`transport`]: network-simplex W1 with optimal coupling and a
//!   1-Lipschitz Kantorovich potential.
//! - [`curvature`]: per-pair curvature and infima over all or sampled pairs.
//! - [`model`]: `s_{K,N}`, the model volume profile `F`, the curvature lower
//!   bound and the Bishop–Gromov / ball-difference checks.
//! - [`spectral`]: Laplacian `I - M`, its spectrum, the `κ <= λ <= 2 - κ`
//!   bracket and the Liouville check.
//! - [`samplers`]: grids, sphere and hyperbolic samples, the Heisenberg group
//!   with its Carnot–Carathéodory distance, canonical graphs.
//! - [`experiments`]: named end-to-end verification runs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod error;
pub mod experiments;
pub mod io;
pub mod model;
pub mod samplers;
pub mod space;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
pub use space::{FiniteMetricMeasureSpace, KernelKind, RandomWalkKernel};
