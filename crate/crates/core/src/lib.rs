//! # barylab
//!
//! A laboratory for discrete optimal transport on finite metric-measure
//! spaces that model compact curved domains (intervals, circles, spheres,
//! cones, triangle meshes).
//!
//! Cost convention: `c(x, y) = d(x, y)^2 / 2`, so the transport value
//! reported by [`transport::solve_w2`] is half the usual squared
//! 2-Wasserstein distance, and `w2 = sqrt(value)`.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`spaces`] | discrete spaces, measures, second-order laws |
//! | [`transport`] | c-transforms, exact W2 with dual potentials, W1 between laws |
//! | [`heatreg`] | heat kernels, soft c-transform, Gibbs families, derivatives |
//! | [`barycenter`] | variance, joint-LP barycenters, potential balancing, deficit |
//! | [`lab`] | scans, probes, covering nets, empirical-rate experiments |
//! | [`lp`] | the exact LP engines behind the above |

pub mod barycenter;
pub mod error;
pub mod heatreg;
pub mod lab;
pub mod lp;
pub mod spaces;
pub mod transport;

pub use barycenter::{BarycenterResult, ModulusParams};
pub use error::{Error, Result};
pub use heatreg::{GibbsFamily, HeatKernel};
pub use spaces::{DiscreteSpace, GoodMeasureParams, Measure, SecondOrderLaw};
pub use transport::{CostMatrix, PotentialPair, TransportPlan};
