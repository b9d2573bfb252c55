#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod experiment;
pub mod error;
pub mod hankel;
pub mod heatkernel;
pub mod operator;
pub mod quadrature;
pub mod scattering;
pub mod snapshot;
pub mod solver;
pub mod specfun;
