//! Run configuration, dataset emission and plot-script generation.
//!
//! Three concerns, three submodules. [`config`] turns a TOML file plus
//! command-line overrides into one validated, echoable [`config::RunConfig`].
//! [`dataset`] writes results as CSV with a JSON mirror, formatted so that a
//! re-run reproduces the files byte for byte. [`plot`] renders standalone
//! gnuplot scripts against those datasets, so the crate never links a
//! plotting library and the figures stay reproducible from the artifacts
//! alone.

pub mod config;
pub mod dataset;
pub mod plot;
