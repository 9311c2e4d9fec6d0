#![no_std]
extern crate alloc;

pub mod angular;
pub mod basis;
pub mod correlations;
pub mod error;
pub mod hamiltonian;
pub mod master;
pub mod observables;
pub mod ode;
pub mod operator;
pub mod spectral;
pub mod trajectory;

pub use error::{Error, Result};
