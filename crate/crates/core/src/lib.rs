#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barriers;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod minimal_graph;
pub mod ode;
pub mod pde_solver;
pub mod perron;
pub mod profiles;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
