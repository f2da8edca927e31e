// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bdg;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod groundstate;
pub mod model;
pub mod observables;
pub mod output;
pub mod pipeline;
pub mod presets;
pub mod sde;

pub use error::{Error, Result};
pub use grid::{integrate, laplacian, make_grid, normalize, ComplexField, Grid, GridSpec};
