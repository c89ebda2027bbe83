//! Thermodynamic formalism and multifractal analysis for full-branch
//! interval maps: pressure, equilibrium states, inducing schemes,
//! Lyapunov and dimension spectra, and orbit-based estimators.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod cli;
pub mod config;
pub mod empirical;
pub mod equilibria;
pub mod error;
pub mod inducing;
pub mod maps;
pub mod numeric;
pub mod output;
pub mod pressure;
pub mod spectra;
pub mod symbolic;
pub mod verify;

pub use error::{Error, Result};
pub use maps::{Interval, MapSpec, Potential, PotentialKind};
