#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detector;
pub mod error;
pub mod field_kernel;
pub mod harvest;
pub mod cli;
pub mod phase_space;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
