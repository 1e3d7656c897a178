use num_complex::Complex64;
use ptising::hamiltonian::{build_hamiltonian, Boundary, ChainParams};
use ptising::spectra::{
    find_exception_point, full_spectrum, ExceptionPointOptions, SweepParam,
};

fn ncomplex(p: &ChainParams) -> usize {
    let spec = full_spectrum(&build_hamiltonian(p).unwrap()).unwrap();
    let scale = p.energy_scale();
    spec.eigenvalues
        .iter()
        .filter(|e| e.im.abs() > 1e-8 * scale)
        .count()
}

/// Fresh-pair center and bystander distance just past an exception point.
fn ep_info(base: &ChainParams, sweep: SweepParam, x: f64) -> (f64, f64) {
    let p = sweep.chain_at(base, x).unwrap();
    let spec = full_spectrum(&build_hamiltonian(&p).unwrap()).unwrap();
    let scale = p.energy_scale();
    let fresh = spec
        .eigenvalues
        .iter()
        .filter(|e| e.im > 1e-8 * scale)
        .min_by(|a, b| a.im.abs().total_cmp(&b.im.abs()))
        .copied()
        .unwrap_or(Complex64::new(f64::NAN, 0.0));
    let center = Complex64::new(fresh.re, 0.0);
    let mut dists: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|e| (e - center).norm() / scale)
        .collect();
    dists.sort_by(f64::total_cmp);
    (fresh.re / scale, dists[2])
}

fn main() {
    let open = ChainParams::new(4, 1.0, 0.0, 0.0, Boundary::Open).unwrap();
    println!("gt      x_g        x_n        gap_x     reG/s    reN/s    byG      byN");
    let mut gt = 0.36f64;
    while gt <= 0.505 {
        let sweep = SweepParam::CouplingTilde { gamma_tilde: gt };
        // scan x in [-0.45, -0.15], find the two transitions with smallest |x|
        let steps = 2400;
        let (lo, hi) = (-0.45, -0.15);
        let mut prev: Option<(f64, usize)> = None;
        let mut trans: Vec<f64> = Vec::new();
        for i in 0..=steps {
            let x = lo + (hi - lo) * i as f64 / steps as f64;
            let p = sweep.chain_at(&open, x).unwrap();
            let nc = ncomplex(&p);
            if let Some((px, pn)) = prev {
                if pn != nc {
                    if let Ok(ep) = find_exception_point(
                        &open,
                        sweep,
                        (px, x),
                        &ExceptionPointOptions::default(),
                    ) {
                        trans.push(ep.critical_value);
                    }
                }
            }
            prev = Some((x, nc));
        }
        trans.sort_by(|a, b| b.total_cmp(a)); // closest to zero first
        if trans.len() >= 2 {
            let (xg, xn) = (trans[0], trans[1]);
            let (rg, byg) = ep_info(&open, sweep, xg - 1e-6);
            let (rn, byn) = ep_info(&open, sweep, xn - 1e-6);
            println!(
                "{gt:.4}  {xg:+.6}  {xn:+.6}  {:.6}  {rg:+.4}  {rn:+.4}  {byg:.4}  {byn:.4}",
                xg - xn
            );
        } else {
            println!("{gt:.4}  transitions: {trans:?}");
        }
        gt += 0.005;
    }
}
