//! Numerical laboratory for the reduced Willmore energy of large coordinate
//! spheres in asymptotically Schwarzschild initial data.
//!
//! The crate is organised bottom-up:
//!
//! * [`legendre`]: Legendre polynomials and the spherical-harmonic series for
//!   the graph profile, the Willmore operator of spheres and the Lagrange
//!   multiplier.
//! * [`metric`]: conformally flat models `g = u^4 ḡ` with
//!   `u = 1 + m/(2|x|) + ψ`, the perturbation catalog and pointwise geometry.
//! * [`quadrature`]: Gauss–Legendre × uniform-azimuth sphere rules,
//!   hemispheres and exterior-domain integration.
//! * [`flux`]: ADM mass, Hamiltonian center of mass, Hawking mass, Willmore
//!   energy of coordinate spheres and Richardson extrapolation.
//! * [`reduced`]: the reduced energy `G = G₁ + G₂,λ` and its gradient.
//! * [`solver`]: critical points, branch traces, the center-of-mass
//!   comparator, stationary scans and the convexity machinery.
//! * [`experiment`], [`config`] and [`report`]: the experiment registry and
//!   its JSON/CSV output.

// `!(x > a)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod flux;
pub mod legendre;
pub mod metric;
pub mod quadrature;
pub mod reduced;
pub mod report;
pub mod solver;
pub mod summation;

pub use error::{Error, Result};

/// Points and vectors of the asymptotically flat chart.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Symmetric 3×3 tensors (metric components, Hessians).
pub type Mat3 = nalgebra::Matrix3<f64>;
