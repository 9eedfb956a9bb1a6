//! Discrete isothermic and asymptotic minimal nets built from discrete
//! holomorphic data, Schwarz reflection across planar curvature lines and
//! straight asymptotic lines, and symmetric examples from a discrete
//! boundary-value problem.

pub mod bvp;
pub mod error;
pub mod holomorphic;
pub mod io;
pub mod minimal;
pub mod mobius;
pub mod net;
pub mod reflection;
pub mod report;

pub use error::{Error, Result};
