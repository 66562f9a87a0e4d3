//! Dense numeric substrate: matrices, seeded random streams, the DFT and
//! analytic signal, and the Adam update.

mod adam;
mod dft;
mod matrix;
mod rng;

pub use adam::{adam_step, AdamState};
pub use dft::{analytic_signal, dft, idft, real_dft, ComplexVector};
pub use matrix::Matrix;
pub use rng::{derive_seed, RngStream};
