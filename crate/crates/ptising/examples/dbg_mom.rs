//! Scratch: probe the ferromagnetic re-entrance line at gamma/delta = 1.2.

use std::time::Instant;

use ptising::fss::{critical_line_with, CriticalLineOptions, SweepAxis};
use ptising::hamiltonian::{Boundary, ChainParams};

fn main() {
    let base = ChainParams::new(8, 1.0, 0.0, 0.0, Boundary::Periodic).unwrap();
    let opts = CriticalLineOptions {
        swept_range: Some((0.02, 1.5)),
        coarse_step: 0.02,
        ..CriticalLineOptions::default()
    };
    let t0 = Instant::now();
    let lines = critical_line_with(&[1.2], SweepAxis::SweepJ, &[8, 10, 12], &base, &opts).unwrap();
    println!("elapsed {:?}", t0.elapsed());
    for c in &lines {
        println!(
            "crossing at J/delta = {:.4} +- {:.4}  (pairs: {:?})",
            c.critical_value, c.uncertainty, c.pair_estimates
        );
    }
}
