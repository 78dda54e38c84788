//! Graph Neural Lasso: a recurrent graph model for dynamic network
//! regression with attention-inferred links and lasso-regularized training.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attention;
pub mod autodiff;
pub mod config;
pub mod error;
pub mod gdu;
pub mod harness;
pub mod model;
pub mod optim;

pub use error::{GnlError, Result};
