//! Scratch probe: ground-pair reality on the two coupling signs.

use ptising::hamiltonian::{build_hamiltonian, Boundary, ChainParams};
use ptising::spectra::{full_spectrum, SweepParam, PT_TOL_RELATIVE};

fn main() {
    let base = ChainParams::new(4, 1.0, 0.0, 0.0, Boundary::Open).unwrap();
    let sweep = SweepParam::CouplingTilde { gamma_tilde: 0.21 };
    for t in [0.1, 0.3, 0.5, 0.7, 0.9, 0.95, -0.5, -0.7, -0.9, -0.95_f64] {
        let p = sweep.chain_at(&base, t).unwrap();
        let s = full_spectrum(&build_hamiltonian(&p).unwrap()).unwrap();
        let tol = PT_TOL_RELATIVE * p.energy_scale();
        let g = s.ground_energy();
        let count = s.eigenvalues.iter().filter(|e| e.im.abs() > tol).count();
        println!(
            "t={t:+.2}: ground Im/scale = {:+.3e}  complex count {count}",
            g.im / p.energy_scale()
        );
    }
}
