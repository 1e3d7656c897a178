//! Exact-diagonalization toolkit for a PT-symmetric transverse-field Ising
//! chain with a staggered, purely imaginary longitudinal field.
//!
//! The Hamiltonian is non-Hermitian but PT-symmetric, so its spectrum is
//! either entirely real (PT-preserved) or organised into complex-conjugate
//! pairs (PT-broken), with exceptional points separating the two regimes.
//! The crate covers the full workflow around that structure:
//!
//! - [`hamiltonian`]: chain definition, dense matrices, matrix-free apply;
//! - [`spectra`]: dense and iterative eigensolvers, ground-state selection,
//!   PT classification, exceptional-point location;
//! - [`observables`]: spin-spin correlations, structure factor, correlation
//!   length and order parameter;
//! - [`fss`]: finite-size scaling curves and crossing analysis;
//! - [`bethe_peierls`]: small-cluster mean-field boundaries;
//! - [`sweep`]: checkpointed parameter-plane sweeps;
//! - [`io`]: run configuration, datasets and plot scripts.
//!
//! Every runnable capability has a worked example under `examples/`; start
//! with `cargo run --release -p ptising --example spectrum_bands`.

pub mod bethe_peierls;
pub mod error;
pub mod fss;
pub mod hamiltonian;
pub mod io;
pub mod observables;
pub mod spectra;
pub mod sweep;

pub use error::{Error, Result};
