#![no_std]

extern crate alloc;

pub mod ansatz;
pub mod embedding;
pub mod error;
pub mod linalg;
pub mod optimize;
pub mod pauli;
pub mod risb;
pub mod rng;
pub mod simulator;
pub mod surrogate;
pub mod vqe;

pub use error::{Error, Result};
