//! Radially symmetric laboratory for the isotropic Landau equation
//! `∂tρ = ∇·(Lρ∇ρ − ρ∇Lρ)`, `Lρ = (−Δ)^{-1}ρ`, and its gradient-flow geometry.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod grid;
pub mod init;
pub mod io;
pub mod landau;
pub mod potential;
pub mod report;
pub mod verify;

pub use config::{parse_config, SimConfig};
pub use error::{Error, Result};
pub use exec::Exec;
pub use grid::{Density, Parity, RadialField, RadialGrid};
