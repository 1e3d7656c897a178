//! Scratch probe: EP finder oracle values, round 4.

use ndarray_linalg::EigVals;
use num_complex::Complex64 as C64;
use ptising::hamiltonian::{build_hamiltonian, Boundary, ChainParams};
use ptising::spectra::{
    extremal_eigenpairs, find_exception_point, DavidsonOptions, ExceptionPointOptions,
    SweepParam, PT_TOL_RELATIVE,
};

fn eigvals_at(p: &ChainParams) -> Vec<C64> {
    build_hamiltonian(p)
        .unwrap()
        .as_array()
        .eigvals()
        .unwrap()
        .to_vec()
}

fn complex_count(p: &ChainParams) -> usize {
    let tol = PT_TOL_RELATIVE * p.energy_scale();
    eigvals_at(p).iter().filter(|e| e.im.abs() > tol).count()
}

fn chain(j: f64) -> ChainParams {
    ChainParams::new(8, 1.0, j, 0.5, Boundary::Periodic).unwrap()
}

fn main() {
    let c_lo = complex_count(&chain(-0.2));
    let c_hi = complex_count(&chain(-1.2));
    println!("counts: J=-0.2 -> {c_lo}, J=-1.2 -> {c_hi}");
    let threshold = c_lo.max(c_hi);

    // Coarse 0.02 scan for the cell where the count first reaches threshold.
    let mut prev = -0.2_f64;
    let mut cell = None;
    let mut j = -0.2;
    while j >= -1.2 {
        if complex_count(&chain(j)) >= threshold {
            cell = Some((prev, j));
            break;
        }
        prev = j;
        j -= 0.02;
    }
    let (lo, hi) = cell.expect("no transition");
    println!("coarse cell: ({lo:.4}, {hi:.4})");
    let mut j = lo;
    let mut scan_cr = hi;
    while j >= hi {
        if complex_count(&chain(j)) >= threshold {
            scan_cr = j;
            break;
        }
        j -= 1e-4;
    }
    println!("dense 1e-4 scan J_cr = {scan_cr:.6}");

    let base = chain(-0.2);
    let ep = find_exception_point(
        &base,
        SweepParam::Coupling,
        (-0.2, -1.2),
        &ExceptionPointOptions::default(),
    )
    .unwrap();
    println!(
        "finder J_cr = {:.6}  |diff| = {:.2e}",
        ep.critical_value,
        (ep.critical_value - scan_cr).abs()
    );

    // Trivial Davidson check: isolated spins.
    let p = ChainParams::new(4, 1.0, 0.0, 0.0, Boundary::Open).unwrap();
    let s = extremal_eigenpairs(&p, 2, &DavidsonOptions::default()).unwrap();
    println!(
        "N=4 isolated: ground {}  first {}",
        s.eigenvalues[s.ground_index], s.eigenvalues[s.first_excited_index]
    );
}
