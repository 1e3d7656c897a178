//! Dense diagonalization in two-site-translation momentum sectors.
//!
//! The staggered gain pattern breaks single-site translation symmetry but
//! keeps the two-site shift `t = T^2`, so a periodic ring of `N` sites
//! splits into `M = N/2` momentum sectors of dimension roughly `2^N / M`.
//! Diagonalizing the sectors separately turns one `O(dim^3)` solve into `M`
//! solves of `O((dim/M)^3)` — two orders of magnitude at `N = 12` — and,
//! more importantly, it stays *exact* in the strongly non-normal corner
//! (small `J`, `gamma > delta`) where residual-driven iteration stagnates on
//! phantom Ritz values from the bulging numerical range.
//!
//! Basis construction is the standard orbit/representative scheme: each
//! basis state belongs to an orbit of `t`, the orbit's minimal element is
//! its representative, and the symmetrized sector state is
//! `|r; k> = d^{-1/2} sum_m omega^{k m} t^m |r>` with `omega = exp(2 pi i / M)`
//! and `d` the orbit size. Momentum `k` is admitted by an orbit iff
//! `k d = 0 mod M`; a spin flip whose target orbit does not admit `k`
//! cancels identically in the symmetrized sum and is dropped.

use ndarray::Array2;
use ndarray_linalg::{Eig, EigVals};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::{
    apply_hamiltonian, hamiltonian_diagonal, translate_state, BasisState, Boundary,
    ChainParams,
};
use crate::spectra::{
    select_ground_state, value_order, SpectrumResult, PT_TOL_RELATIVE,
};

/// Largest ring the sector path accepts; one sector of an 18-site ring would
/// already be a 29k-dimensional dense solve.
pub const TRANSLATIONAL_SITE_LIMIT: usize = 16;

/// Orbit bookkeeping for every basis state of the ring.
struct OrbitTable {
    /// Representative (minimal orbit element) of each basis state.
    rep: Vec<usize>,
    /// Shift `m` with `state = t^m(rep)`.
    shift: Vec<u16>,
    /// Orbit size, stored on every member.
    size: Vec<u16>,
    /// Representatives in increasing order.
    reps: Vec<usize>,
}

/// Apply the two-site shift.
fn shift2(params: &ChainParams, b: usize) -> usize {
    translate_state(params, translate_state(params, BasisState(b))).0
}

fn orbit_table(params: &ChainParams) -> OrbitTable {
    let dim = params.dim();
    let mut rep = vec![usize::MAX; dim];
    let mut shift = vec![0u16; dim];
    let mut size = vec![0u16; dim];
    let mut reps = Vec::new();
    for b in 0..dim {
        if rep[b] != usize::MAX {
            continue;
        }
        // Walk the orbit once; `b` is minimal because smaller states were
        // already claimed.
        let mut members = vec![b];
        let mut cur = shift2(params, b);
        while cur != b {
            members.push(cur);
            cur = shift2(params, cur);
        }
        let d = members.len() as u16;
        for (m, &s) in members.iter().enumerate() {
            rep[s] = b;
            shift[s] = m as u16;
            size[s] = d;
        }
        reps.push(b);
    }
    OrbitTable {
        rep,
        shift,
        size,
        reps,
    }
}

fn check_translational(params: &ChainParams) -> Result<()> {
    params.validate()?;
    if params.boundary != Boundary::Periodic {
        return Err(Error::Unsupported(
            "momentum sectors need a periodic ring; the open chain has no translation symmetry"
                .into(),
        ));
    }
    if params.n_sites > TRANSLATIONAL_SITE_LIMIT {
        return Err(Error::DenseTooLarge {
            n_sites: params.n_sites,
            dim: params.dim(),
            limit: TRANSLATIONAL_SITE_LIMIT,
        });
    }
    Ok(())
}

/// Same scale the other solver paths report: `||H||_F` from the closed form
/// `sqrt(dim * N * delta^2 + sum |diag|^2)`.
fn frobenius_norm(params: &ChainParams, diag: &[C64]) -> f64 {
    let off = diag.len() as f64 * params.n_sites as f64 * params.delta * params.delta;
    let on: f64 = diag.iter().map(|z| z.norm_sqr()).sum();
    (off + on).sqrt()
}

/// One momentum sector of the ring.
struct Sector {
    /// Momentum index `k` in `0..M`.
    k: usize,
    /// Representatives whose orbits admit this momentum.
    reps: Vec<usize>,
    /// Sector Hamiltonian over those representatives.
    matrix: Array2<C64>,
}

/// Build every momentum sector of the ring.
fn build_sectors(params: &ChainParams, table: &OrbitTable, diag: &[C64]) -> Vec<Sector> {
    let m_total = params.n_sites / 2;
    let delta = params.delta;
    let admits = |state: usize, k: usize| (k * table.size[state] as usize) % m_total == 0;
    let mut sectors = Vec::with_capacity(m_total);
    for k in 0..m_total {
        let reps: Vec<usize> = table
            .reps
            .iter()
            .copied()
            .filter(|&r| admits(r, k))
            .collect();
        let mut matrix = Array2::<C64>::zeros((reps.len(), reps.len()));
        for (col, &r) in reps.iter().enumerate() {
            let d_col = table.size[r] as f64;
            // H|r> decomposes into the diagonal entry plus one spin flip per
            // site; route each contribution to its target's representative
            // with the momentum phase of the shift that reaches the target.
            // Targets whose orbit rejects `k` cancel in the symmetrized sum.
            let push = |target: usize, amp: C64, matrix: &mut Array2<C64>| {
                if !admits(target, k) {
                    return;
                }
                let row = reps
                    .binary_search(&table.rep[target])
                    .expect("admitted representative is indexed");
                let d_row = table.size[target] as f64;
                let phase = -2.0 * std::f64::consts::PI
                    * ((k * table.shift[target] as usize) % m_total) as f64
                    / m_total as f64;
                let omega = C64::new(phase.cos(), phase.sin());
                matrix[(row, col)] += amp * omega * (d_col / d_row).sqrt();
            };
            push(r, diag[r], &mut matrix);
            for site in 1..=params.n_sites {
                let flipped = BasisState(r).flip(site).0;
                push(flipped, C64::new(delta, 0.0), &mut matrix);
            }
        }
        sectors.push(Sector { k, reps, matrix });
    }
    sectors
}

/// Keep conjugate pairs adjacent with the `Im < 0` member first, mirroring
/// the dense path's normalization.
fn normalize_pairs<T>(vals: &mut [T], ptol: f64, value: impl Fn(&T) -> C64) {
    for i in 0..vals.len().saturating_sub(1) {
        let a = value(&vals[i]);
        let b = value(&vals[i + 1]);
        if (a.re - b.re).abs() <= ptol && (a.im + b.im).abs() <= ptol && a.im > b.im {
            vals.swap(i, i + 1);
        }
    }
}

/// All ring eigenvalues via the sector decomposition, sorted the same way
/// [`full_spectrum`](crate::spectra::full_spectrum) sorts them.
///
/// Exact for every coupling, including the near-degenerate `J -> 0`,
/// `gamma > delta` corner; costs `M` dense solves of the sector dimensions.
pub fn translational_eigenvalues(params: &ChainParams) -> Result<Vec<C64>> {
    check_translational(params)?;
    let table = orbit_table(params);
    let diag = hamiltonian_diagonal(params)?;
    let norm_scale = frobenius_norm(params, &diag);
    let mut vals = Vec::with_capacity(params.dim());
    for sector in build_sectors(params, &table, &diag) {
        let sector_vals = sector
            .matrix
            .eigvals()
            .map_err(|e| Error::Eigensolver(format!("sector k={}: {e}", sector.k)))?;
        vals.extend(sector_vals.iter().copied());
    }
    vals.sort_by(|a, b| value_order(*a, *b));
    normalize_pairs(&mut vals, 1e-10 * norm_scale.max(1.0), |v| *v);
    Ok(vals)
}

/// Ground state and its partner from the sector decomposition, with the
/// eigenvectors expanded back onto the full `2^N` basis.
///
/// Two passes: an eigenvalues-only sweep over all sectors locates the
/// designated ground and first-excited states, then only the sectors hosting
/// them are re-solved with eigenvectors. The returned [`SpectrumResult`]
/// carries exactly those two states (like the iterative path's `k = 2`
/// result), with residuals re-verified against fresh matrix applications.
pub fn translational_ground_pair(params: &ChainParams) -> Result<SpectrumResult> {
    check_translational(params)?;
    let table = orbit_table(params);
    let diag = hamiltonian_diagonal(params)?;
    let norm_scale = frobenius_norm(params, &diag);
    let sectors = build_sectors(params, &table, &diag);
    let m_total = params.n_sites / 2;

    // Pass 1: eigenvalues only, tagged with their sector.
    let mut tagged: Vec<(C64, usize)> = Vec::with_capacity(params.dim());
    for sector in &sectors {
        let vals = sector
            .matrix
            .eigvals()
            .map_err(|e| Error::Eigensolver(format!("sector k={}: {e}", sector.k)))?;
        tagged.extend(vals.iter().map(|&v| (v, sector.k)));
    }
    tagged.sort_by(|a, b| value_order(a.0, b.0));
    normalize_pairs(&mut tagged, 1e-10 * norm_scale.max(1.0), |t| t.0);
    let vals: Vec<C64> = tagged.iter().map(|t| t.0).collect();
    let energy_scale = params.energy_scale();
    let im_tol = PT_TOL_RELATIVE * energy_scale;
    let sel = select_ground_state(&vals, im_tol)?;
    let picks = [sel.ground_index, sel.first_excited_index];

    // Pass 2: eigenvectors for the sectors hosting the picked states, each
    // solved once even when both picks share a sector.
    let dim = params.dim();
    let mut columns = Array2::<C64>::zeros((dim, 2));
    let mut residual_norms = vec![0.0; 2];
    let mut cache: Vec<Option<(Vec<C64>, Array2<C64>)>> = vec![None; m_total];
    for (slot, &pick) in picks.iter().enumerate() {
        let (value, k) = tagged[pick];
        if cache[k].is_none() {
            let (svals, svecs) = sectors[k]
                .matrix
                .eig()
                .map_err(|e| Error::Eigensolver(format!("sector k={k}: {e}")))?;
            cache[k] = Some((svals.to_vec(), svecs));
        }
        let (svals, svecs) = cache[k].as_ref().expect("just inserted");
        // Match by closest eigenvalue within the sector.
        let local = (0..svals.len())
            .min_by(|&a, &b| (svals[a] - value).norm().total_cmp(&(svals[b] - value).norm()))
            .ok_or_else(|| Error::Eigensolver("empty sector".into()))?;
        // Expand the |r; k> components onto the full basis.
        let mut full = vec![C64::new(0.0, 0.0); dim];
        for (idx, &r) in sectors[k].reps.iter().enumerate() {
            let coeff = svecs[(idx, local)];
            if coeff.norm_sqr() == 0.0 {
                continue;
            }
            let d = table.size[r] as usize;
            let root = (d as f64).sqrt();
            let mut state = r;
            for m in 0..d {
                let phase =
                    2.0 * std::f64::consts::PI * ((k * m) % m_total) as f64 / m_total as f64;
                full[state] += coeff * C64::new(phase.cos(), phase.sin()) / root;
                state = shift2(params, state);
            }
        }
        let norm: f64 = full.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut full {
            *z /= norm;
        }
        let image = apply_hamiltonian(params, &full)?;
        residual_norms[slot] = image
            .iter()
            .zip(full.iter())
            .map(|(hi, vi)| (hi - vi * value).norm_sqr())
            .sum::<f64>()
            .sqrt();
        for (i, z) in full.into_iter().enumerate() {
            columns[(i, slot)] = z;
        }
    }

    let pair = vec![vals[picks[0]], vals[picks[1]]];
    let ordering_ambiguous = (pair[0].re - pair[1].re).abs() <= im_tol
        && (pair[0].im - pair[1].im).abs() <= im_tol;
    Ok(SpectrumResult {
        eigenvalues: pair,
        right_vectors: columns,
        left_vectors: None,
        ground_index: 0,
        first_excited_index: 1,
        pt_class: sel.pt_class,
        residual_norms,
        norm_scale,
        energy_scale,
        ordering_ambiguous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_hamiltonian;
    use crate::observables::correlation_profile;
    use crate::spectra::{full_spectrum, PtClass};

    fn ring(n: usize, j: f64, g: f64) -> ChainParams {
        ChainParams::new(n, 1.0, j, g, Boundary::Periodic).unwrap()
    }

    #[test]
    fn sector_dimensions_partition_the_space() {
        for n in [4usize, 6, 8, 10] {
            let p = ring(n, 0.3, 0.2);
            let table = orbit_table(&p);
            let diag = hamiltonian_diagonal(&p).unwrap();
            let sectors = build_sectors(&p, &table, &diag);
            assert_eq!(sectors.len(), n / 2);
            let total: usize = sectors.iter().map(|s| s.reps.len()).sum();
            assert_eq!(total, p.dim(), "N = {n}");
        }
    }

    #[test]
    fn eigenvalue_multiset_matches_dense() {
        // The whole construction against the unsymmetrized dense solver,
        // including the near-degenerate corner that motivates this path.
        // Degenerate conjugate quartets (sectors k and M-k each hold one
        // pair) have no canonical internal arrangement, so values are
        // matched within a small window instead of slot by slot.
        let cases = [
            (6, 0.7, 0.0),
            (6, -0.9, 0.45),
            (6, 0.05, 1.2),
            (8, 0.4, 0.8),
            (8, -0.3, 1.5),
            (8, 0.05, 1.2),
        ];
        for (n, j, g) in cases {
            let p = ring(n, j, g);
            let dense = full_spectrum(&build_hamiltonian(&p).unwrap()).unwrap();
            let sect = translational_eigenvalues(&p).unwrap();
            assert_eq!(sect.len(), dense.eigenvalues.len());
            let tol = 1e-9 * p.energy_scale() * p.dim() as f64;
            let mut used = vec![false; sect.len()];
            for (i, s) in sect.iter().enumerate() {
                let lo = i.saturating_sub(8);
                let hi = (i + 9).min(sect.len());
                let best = (lo..hi)
                    .filter(|&jj| !used[jj])
                    .min_by(|&a, &b| {
                        (dense.eigenvalues[a] - s)
                            .norm()
                            .total_cmp(&(dense.eigenvalues[b] - s).norm())
                    })
                    .expect("window holds an unused slot");
                assert!(
                    (dense.eigenvalues[best] - s).norm() < tol,
                    "N={n} J={j} g={g} slot {i}: {s} unmatched"
                );
                used[best] = true;
            }
        }
    }

    #[test]
    fn ground_pair_matches_dense_selection() {
        for (n, j, g) in [(8, 0.4, 0.8), (8, -0.6, 0.9), (8, 0.05, 1.2), (10, 0.05, 1.2)] {
            let p = ring(n, j, g);
            let dense = full_spectrum(&build_hamiltonian(&p).unwrap()).unwrap();
            let pair = translational_ground_pair(&p).unwrap();
            let tol = 1e-8 * p.energy_scale();
            assert!(
                (pair.ground_energy() - dense.ground_energy()).norm() < tol,
                "N={n} J={j} g={g}: {} vs {}",
                pair.ground_energy(),
                dense.ground_energy()
            );
            assert_eq!(pair.pt_class, dense.pt_class);
            // The expanded eigenvector reproduces the dense correlation
            // profile (phase-free comparison).
            let c_sect = correlation_profile(&pair, &p, 1).unwrap();
            let c_dense = correlation_profile(&dense, &p, 1).unwrap();
            for (a, b) in c_sect.values.iter().zip(c_dense.values.iter()) {
                assert!((a - b).abs() < 1e-7, "N={n} J={j} g={g}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn residuals_verified_with_fresh_applications() {
        let p = ring(10, 0.08, 1.2);
        let pair = translational_ground_pair(&p).unwrap();
        for r in &pair.residual_norms {
            assert!(*r < 1e-9 * pair.norm_scale, "residual {r}");
        }
    }

    #[test]
    fn open_chain_is_rejected() {
        let p = ChainParams::new(6, 1.0, 0.4, 0.2, Boundary::Open).unwrap();
        assert!(matches!(
            translational_eigenvalues(&p),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn hard_corner_ground_is_real_and_negative() {
        // J = 0.05, gamma = 1.2 at N = 12: the regime where the iterative
        // solver stagnates; the sector path must deliver a clean real
        // ground state.
        let p = ring(12, 0.05, 1.2);
        let pair = translational_ground_pair(&p).unwrap();
        let g = pair.ground_energy();
        assert!(g.im.abs() < 1e-8 * p.energy_scale(), "Im = {}", g.im);
        assert!(g.re < -1.0, "Re = {}", g.re);
        assert_eq!(pair.pt_class, PtClass::Broken);
    }
}
