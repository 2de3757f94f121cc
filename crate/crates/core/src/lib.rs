//! q-deformed Bargmann-Fock representations and time-sliced path integrals
//! for q-oscillators at roots of unity.
//!
//! * [`qnum`]: the root `q = exp(iπ/(k+1))` and both q-number conventions.
//! * [`fock`]: `(k+1)`-dimensional ladder matrices, Hamiltonians, exact evolution.
//! * [`nilalg`]: nilpotent multi-slice algebra with Berezin-type integration.
//! * [`bfrep`]: measure, identity kernel, operator kernels and their convolution.
//! * [`pathint`]: discrete evolution by convolving infinitesimal kernels.
//! * [`cli`]: the `qpath` command-line front end.

pub mod bfrep;
pub mod cli;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod nilalg;
pub mod pathint;
pub mod qnum;

pub use error::{Error, Result};
pub use nilalg::{NilPoly, SliceAlgebra, Variant};
pub use qnum::{q_root, RootData};
