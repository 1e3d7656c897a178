use num_complex::Complex64;
use ptising::hamiltonian::{build_hamiltonian, Boundary, ChainParams};
use ptising::spectra::{full_spectrum, SweepParam};

/// Print the local spectrum just past an exception point, with distances
/// from the fresh-pair coalescence center in both metrics.
fn local(base: &ChainParams, gt: f64, x: f64) {
    let sweep = SweepParam::CouplingTilde { gamma_tilde: gt };
    let p = sweep.chain_at(base, x).unwrap();
    let spec = full_spectrum(&build_hamiltonian(&p).unwrap()).unwrap();
    let scale = p.energy_scale();
    let fresh = spec
        .eigenvalues
        .iter()
        .filter(|e| e.im > 1e-8 * scale)
        .min_by(|a, b| a.im.abs().total_cmp(&b.im.abs()))
        .copied()
        .unwrap();
    let center = Complex64::new(fresh.re, 0.0);
    println!("gt={gt:.5} x={x:+.6} center Re={:.6}", fresh.re / scale);
    let mut rows: Vec<(f64, f64, Complex64)> = spec
        .eigenvalues
        .iter()
        .map(|e| {
            (
                (e - center).norm() / scale,
                (e.re - center.re).abs() / scale,
                *e / scale,
            )
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (dc, dr, e) in rows.iter().take(6) {
        println!("   d_cplx={dc:.5}  d_re={dr:.5}  e=({:+.5},{:+.5})", e.re, e.im);
    }
}

fn main() {
    let open = ChainParams::new(4, 1.0, 0.0, 0.0, Boundary::Open).unwrap();
    println!("=== gt=0.21, all transitions (just past each) ===");
    for x in [-0.90725, -0.71649, -0.54693, -0.43245] {
        local(&open, 0.21, x - 1.0e-5);
    }
    println!("=== gt=0.40125 ===");
    for x in [-0.333524, -0.313524] {
        local(&open, 0.40125, x - 1.0e-5);
    }
    println!("=== gt=0.48375 ===");
    for x in [-0.268424, -0.241643] {
        local(&open, 0.48375, x - 1.0e-5);
    }
}
