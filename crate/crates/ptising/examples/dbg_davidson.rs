use ptising::hamiltonian::{build_hamiltonian, Boundary, ChainParams};
use ptising::spectra::{extremal_eigenpairs, full_spectrum, DavidsonOptions};
use std::time::Instant;

fn main() {
    let deep = DavidsonOptions {
        max_basis: 192,
        max_iter: 2000,
        ..DavidsonOptions::default()
    };
    for n in [10usize, 12] {
        for j in [0.02, 0.05, 0.08, 0.12] {
            let p = ChainParams::new(n, 1.0, j, 1.2, Boundary::Periodic).unwrap();
            let truth = if n == 10 {
                let dense = full_spectrum(&build_hamiltonian(&p).unwrap()).unwrap();
                Some(dense.ground_energy())
            } else {
                None
            };
            let t = Instant::now();
            match extremal_eigenpairs(&p, 2, &deep) {
                Ok(dav) => {
                    let d = dav.eigenvalues[0];
                    let ok = truth
                        .map(|g| format!("match={}", (d - g).norm() < 1e-6))
                        .unwrap_or_default();
                    println!(
                        "N={n} J={j:.2}: deep ok ({:+.6},{:+.6}) {ok} [{:?}]",
                        d.re,
                        d.im,
                        t.elapsed()
                    );
                }
                Err(e) => println!("N={n} J={j:.2}: deep err: {e} [{:?}]", t.elapsed()),
            }
        }
    }
}
