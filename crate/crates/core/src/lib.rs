pub mod ansatz;
pub mod error;
pub mod fermion;
pub mod pauli;
pub mod sim;
pub mod vqe;

pub use error::{Error, Result};
