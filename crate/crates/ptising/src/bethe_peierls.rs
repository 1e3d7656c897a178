//! Bethe-Peierls cluster mean field: effective Hamiltonians, the
//! self-consistency condition, and mean-field phase boundaries.
//!
//! A central spin `0` interacts exactly with its two neighbours, which are
//! lumped into a single spin `1` (hence the doubled couplings on spin `1`);
//! the rest of the chain acts on spin `1` through an effective field
//! proportional to the mean magnetization `M`. Diagonalizing the 4x4
//! cluster and demanding `<sz_0> = <sz_1>` closes the loop: the nontrivial
//! roots `M != 0` of that condition mark the ordered phase.
//!
//! Two-spin clusters come in an antiferromagnetic flavour (the chain is
//! mapped by a pi rotation of the even sublattice onto a ferromagnet with a
//! uniform imaginary field, so the coupling enters as `|J|`) and a
//! ferromagnetic flavour (staggered imaginary field survives; the
//! even-central-spin cluster is the elementwise complex conjugate of the
//! odd-central one and yields identical `sz` averages, so one matrix
//! suffices). A six-spin cluster refines the approximation: an open
//! six-site segment treated exactly, mean-field terms on the two edge
//! spins, and self-consistency between the central and next-to-central
//! pair magnetizations.
//!
//! All expectation values are Euclidean averages over the unit-norm right
//! ground vector, `<v|sz|v>` with the conjugate-transpose bra. For a
//! diagonal real operator that number is real whatever the vector, so the
//! self-consistency residual is a real-valued function and its roots are
//! sought on the real `M` axis; the complex field type is kept in the
//! signatures for the caller's convenience.
//!
//! The `M = 0` residual is a PT diagnostic: while the cluster ground is
//! real the global spin-flip antisymmetry forces both `<sz>` averages to
//! zero and `M = 0` is an exact root, but once the ground turns complex
//! the designated state spontaneously magnetizes and the trivial root
//! disappears — breaking the cluster's PT symmetry and ordering are the
//! same event. At strong gain this pushes the ordered phase down to
//! arbitrarily weak coupling.

use ndarray::Array2;
use ndarray_linalg::Eig;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::value_order;

/// Which cluster a Bethe-Peierls evaluation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BpClusterKind {
    /// Two-spin cluster for antiferromagnetic coupling; uses `|J|` after
    /// the sublattice rotation, uniform-sign imaginary field.
    TwoSpinAf,
    /// Two-spin cluster for ferromagnetic coupling; staggered imaginary
    /// field (odd central spin).
    TwoSpinF,
    /// Six-spin refinement: open six-site segment with edge mean fields.
    SixSpin,
}

impl BpClusterKind {
    /// Dimension of the effective matrix.
    pub fn dim(self) -> usize {
        match self {
            BpClusterKind::TwoSpinAf | BpClusterKind::TwoSpinF => 4,
            BpClusterKind::SixSpin => 64,
        }
    }
}

impl std::fmt::Display for BpClusterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BpClusterKind::TwoSpinAf => write!(f, "two_spin_af"),
            BpClusterKind::TwoSpinF => write!(f, "two_spin_f"),
            BpClusterKind::SixSpin => write!(f, "six_spin"),
        }
    }
}

/// Mean-field phase read off the magnetization root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BpPhase {
    /// Only the trivial root `M = 0` within threshold.
    Paramagnetic,
    /// A nontrivial root `|Re M| > m_threshold`.
    Ordered,
}

impl std::fmt::Display for BpPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BpPhase::Paramagnetic => write!(f, "paramagnetic"),
            BpPhase::Ordered => write!(f, "ordered"),
        }
    }
}

/// One cluster evaluation point: geometry, couplings, and the mean field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BpCluster {
    /// Cluster geometry.
    pub kind: BpClusterKind,
    /// Transverse field, must be positive (it sets the scale).
    pub delta: f64,
    /// Ising coupling `J`; the antiferromagnetic cluster uses `|J|`.
    pub coupling: f64,
    /// Gain amplitude `gamma >= 0`.
    pub gain: f64,
    /// Mean-field magnetization the effective matrix is built with.
    pub magnetization: C64,
}

impl BpCluster {
    /// Validated cluster with `M = 0`.
    pub fn new(kind: BpClusterKind, delta: f64, coupling: f64, gain: f64) -> Result<Self> {
        for (name, value) in [("delta", delta), ("coupling", coupling), ("gain", gain)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { name, value });
            }
        }
        if delta <= 0.0 {
            return Err(Error::BadDelta(delta));
        }
        if gain < 0.0 {
            return Err(Error::BadGain(gain));
        }
        Ok(BpCluster {
            kind,
            delta,
            coupling,
            gain,
            magnetization: C64::new(0.0, 0.0),
        })
    }

    /// Same cluster with the mean field replaced.
    pub fn with_magnetization(mut self, m: C64) -> Self {
        self.magnetization = m;
        self
    }

    /// The effective matrix at this cluster's magnetization.
    pub fn effective_matrix(&self) -> Array2<C64> {
        match self.kind {
            BpClusterKind::TwoSpinAf => {
                build_effective_af(self.magnetization, self.delta, self.coupling, self.gain)
            }
            BpClusterKind::TwoSpinF => {
                build_effective_f(self.magnetization, self.delta, self.coupling, self.gain)
            }
            BpClusterKind::SixSpin => {
                build_effective_six(self.magnetization, self.delta, self.coupling, self.gain)
            }
        }
    }
}

/// Shared two-spin assembly in the product basis `index = bit0 + 2*bit1`
/// (bit `n` is spin `n`, set bit means `sz = +1`):
/// `delta (sx_0 + 2 sx_1) - 2 j sz_0 sz_1 - 2 j M sz_1 + i (g0 sz_0 + g1 sz_1)`.
fn two_spin_matrix(m: C64, delta: f64, j: f64, g0: f64, g1: f64) -> Array2<C64> {
    let mut h = Array2::<C64>::zeros((4, 4));
    for b in 0..4usize {
        let s0 = if b & 1 == 1 { 1.0 } else { -1.0 };
        let s1 = if b & 2 == 2 { 1.0 } else { -1.0 };
        h[(b, b)] = C64::new(-2.0 * j * s0 * s1, g0 * s0 + g1 * s1) - 2.0 * j * m * s1;
        h[(b ^ 1, b)] += C64::new(delta, 0.0);
        h[(b ^ 2, b)] += C64::new(2.0 * delta, 0.0);
    }
    h
}

/// Antiferromagnetic two-spin cluster:
/// `delta (sx_0 + 2 sx_1) - 2|J| sz_0 sz_1 - 2|J| M sz_1 + i gamma (sz_0 + 2 sz_1)`.
///
/// The pi rotation of the even sublattice has already been applied, which is
/// why the coupling enters through `|J|` and the imaginary field carries one
/// uniform sign.
pub fn build_effective_af(m: C64, delta: f64, coupling: f64, gain: f64) -> Array2<C64> {
    two_spin_matrix(m, delta, coupling.abs(), gain, 2.0 * gain)
}

/// Ferromagnetic two-spin cluster, odd central spin:
/// `delta (sx_0 + 2 sx_1) - 2J sz_0 sz_1 - 2J M sz_1 + i gamma (sz_0 - 2 sz_1)`.
pub fn build_effective_f(m: C64, delta: f64, coupling: f64, gain: f64) -> Array2<C64> {
    two_spin_matrix(m, delta, coupling, gain, -2.0 * gain)
}

/// Ferromagnetic two-spin cluster, even central spin: the central spin is a
/// loss site, so the imaginary field flips sign on both spins relative to
/// the odd cluster. For real `M` this matrix is the elementwise complex
/// conjugate of [`build_effective_f`].
pub fn build_effective_f_even(m: C64, delta: f64, coupling: f64, gain: f64) -> Array2<C64> {
    two_spin_matrix(m, delta, coupling, -gain, 2.0 * gain)
}

/// Six-spin cluster: an open six-site segment with nearest-neighbour
/// bonds on all five links, an imaginary field on all six sites, and
/// mean-field terms `-2|J| M sz` on the two edge spins (the doubling
/// mirrors the two-spin construction's lumped couplings).
///
/// The sign of `coupling` selects the side of the phase diagram. For
/// `J > 0` the cluster is literally a segment of the physical chain:
/// ferromagnetic bonds and the staggered field `i gamma (-1)^(n-1) sz_n`.
/// For `J < 0` the same pi rotation of the even sublattice used by
/// [`build_effective_af`] is applied, giving ferromagnetic bonds `|J|`, a
/// uniform field `i gamma sz_n`, and uniform-sign edge terms; this is
/// unitarily equivalent to the raw antiferromagnetic segment with
/// staggered edge mean fields, with `M` playing the staggered order
/// parameter.
pub fn build_effective_six(m: C64, delta: f64, coupling: f64, gain: f64) -> Array2<C64> {
    let j = coupling.abs();
    let staggered = coupling >= 0.0;
    let mut h = Array2::<C64>::zeros((64, 64));
    let spin = |b: usize, site: usize| if b >> (site - 1) & 1 == 1 { 1.0 } else { -1.0 };
    for b in 0..64usize {
        let mut bonds = 0.0;
        for n in 1..6 {
            bonds += spin(b, n) * spin(b, n + 1);
        }
        let mut field = 0.0;
        for n in 1..=6 {
            let sign = if staggered && n % 2 == 0 { -1.0 } else { 1.0 };
            field += sign * spin(b, n);
        }
        let edges = spin(b, 1) + spin(b, 6);
        h[(b, b)] = C64::new(-j * bonds, gain * field) - 2.0 * j * m * edges;
        for n in 1..=6usize {
            h[(b ^ (1 << (n - 1)), b)] += C64::new(delta, 0.0);
        }
    }
    h
}

/// Options shared by the solver and the boundary tracer.
#[derive(Debug, Clone, Copy)]
pub struct BpOptions {
    /// Residual magnitude below which a root counts as converged.
    pub tol_bp: f64,
    /// `|Re M|` above which a solution is classified ordered.
    pub m_threshold: f64,
    /// Secant iteration budget per seed.
    pub max_iter: usize,
    /// Upper end of the `J/delta` scan in [`bp_phase_boundary`].
    pub scan_j_max: f64,
    /// Step of that scan; also its starting point.
    pub scan_step: f64,
    /// Bisection resolution of boundary points, in `J/delta`.
    pub bisect_tol: f64,
}

impl Default for BpOptions {
    fn default() -> Self {
        BpOptions {
            tol_bp: 1e-10,
            m_threshold: 1e-3,
            max_iter: 128,
            scan_j_max: 1.5,
            scan_step: 0.02,
            bisect_tol: 1e-3,
        }
    }
}

/// One self-consistency solve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BpSolution {
    /// Reported magnetization root (largest-magnitude root found).
    pub magnetization: C64,
    /// Self-consistency defect at the reported magnetization.
    pub residual: C64,
    /// Whether `|residual| < tol_bp`.
    pub converged: bool,
    /// Ordered iff `|Re magnetization| > m_threshold`.
    pub phase: BpPhase,
    /// Residual of the trivial candidate `M = 0`, always reported
    /// alongside whatever root was found. Zero exactly when the `M = 0`
    /// cluster ground is real (PT-preserved); a nonzero value certifies
    /// that no trivial root exists and the phase is ordered by breaking.
    pub residual_at_zero: C64,
}

/// Ground state of a small dense cluster matrix: smallest real part,
/// negative-imaginary tie-break, unit-norm right vector.
fn cluster_ground(h: &Array2<C64>) -> Result<(C64, Vec<C64>)> {
    let (vals, vecs) = h
        .eig()
        .map_err(|e| Error::Eigensolver(format!("cluster solve: {e}")))?;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| value_order(vals[a], vals[b]));
    let g = order[0];
    // A defective ground pair (exception point of the cluster) makes the
    // Euclidean average ill-defined; flag it instead of returning noise.
    if order.len() > 1 {
        let p = order[1];
        let scale = vals.iter().map(|v| v.norm()).fold(1.0, f64::max);
        if (vals[g] - vals[p]).norm() <= 1e-10 * scale {
            let dot: C64 = (0..vals.len())
                .map(|r| vecs[(r, g)].conj() * vecs[(r, p)])
                .sum();
            let n0: f64 = (0..vals.len()).map(|r| vecs[(r, g)].norm_sqr()).sum();
            let n1: f64 = (0..vals.len()).map(|r| vecs[(r, p)].norm_sqr()).sum();
            if dot.norm() / (n0 * n1).sqrt() > 1.0 - 1e-8 {
                return Err(Error::Eigensolver(
                    "cluster ground state is defective (exception point)".into(),
                ));
            }
        }
    }
    let norm: f64 = (0..vals.len())
        .map(|r| vecs[(r, g)].norm_sqr())
        .sum::<f64>()
        .sqrt();
    let v: Vec<C64> = (0..vals.len()).map(|r| vecs[(r, g)] / norm).collect();
    Ok((vals[g], v))
}

/// Euclidean `<sz>` of 1-based `site` over a unit-norm vector in the
/// little-endian product basis.
fn sz_average(v: &[C64], site: usize) -> f64 {
    v.iter()
        .enumerate()
        .map(|(b, z)| {
            let s = if b >> (site - 1) & 1 == 1 { 1.0 } else { -1.0 };
            s * z.norm_sqr()
        })
        .sum()
}

/// Self-consistency defect of the cluster at its own magnetization.
///
/// Two-spin clusters: `<sz_0> - <sz_1>`. Six-spin: mean `<sz>` of the two
/// central sites minus the mean of the two next-to-central ones. Euclidean
/// averages of a real diagonal operator are real, so the imaginary part of
/// the returned value is identically zero.
pub fn bp_residual(cluster: &BpCluster) -> Result<C64> {
    if !cluster.magnetization.re.is_finite() || !cluster.magnetization.im.is_finite() {
        return Err(Error::NonFinite {
            name: "magnetization",
            value: cluster.magnetization.re,
        });
    }
    let (_, v) = cluster_ground(&cluster.effective_matrix())?;
    let r = match cluster.kind {
        // Spin 0 is bit 0 (site 1 of the little-endian basis), spin 1 is
        // bit 1.
        BpClusterKind::TwoSpinAf | BpClusterKind::TwoSpinF => {
            sz_average(&v, 1) - sz_average(&v, 2)
        }
        BpClusterKind::SixSpin => {
            0.5 * (sz_average(&v, 3) + sz_average(&v, 4))
                - 0.5 * (sz_average(&v, 2) + sz_average(&v, 5))
        }
    };
    Ok(C64::new(r, 0.0))
}

/// Secant iteration on the real-`M` residual from one seed. Returns the
/// converged root, or the last iterate tagged `false`.
fn secant_root(
    cluster: &BpCluster,
    seed: f64,
    opts: &BpOptions,
) -> Result<(f64, f64, bool)> {
    let f = |x: f64| -> Result<f64> {
        Ok(bp_residual(&cluster.with_magnetization(C64::new(x, 0.0)))?.re)
    };
    let mut x0 = seed;
    let mut x1 = seed + 0.05 * if seed >= 0.0 { -1.0 } else { 1.0 };
    let mut f0 = f(x0)?;
    let mut f1 = f(x1)?;
    for _ in 0..opts.max_iter {
        if f1.abs() < opts.tol_bp {
            return Ok((x1, f1, true));
        }
        let denom = f1 - f0;
        let step = if denom.abs() < 1e-300 {
            // Flat stretch: nudge instead of dividing by zero.
            0.5 * (x0 - x1)
        } else {
            -f1 * (x1 - x0) / denom
        };
        let x2 = (x1 + step).clamp(-2.0, 2.0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x1)?;
    }
    Ok((x1, f1, f1.abs() < opts.tol_bp))
}

/// Solve the self-consistency condition for the cluster's couplings.
///
/// The residual is searched along real `M` (see [`bp_residual`]) from
/// `Re m_init` plus a fixed ladder of cold seeds; among the converged roots
/// the one of largest magnitude is reported, which keeps the ordered branch
/// in view whenever it exists. No root at all returns the last iterate with
/// `converged = false` (paramagnetic: the trivial candidate is all that is
/// left). With `J = 0` the cluster decouples from the environment and the
/// residual does not depend on `M` at all, so the degenerate condition is
/// resolved by convention to the trivial `M = 0`, paramagnetic.
pub fn solve_bp(cluster: &BpCluster, m_init: C64, opts: &BpOptions) -> Result<BpSolution> {
    let residual_at_zero = bp_residual(&cluster.with_magnetization(C64::new(0.0, 0.0)))?;
    if cluster.coupling == 0.0 {
        return Ok(BpSolution {
            magnetization: C64::new(0.0, 0.0),
            residual: residual_at_zero,
            converged: true,
            phase: BpPhase::Paramagnetic,
            residual_at_zero,
        });
    }

    let mut seeds = vec![m_init.re, 0.9, 0.5, 0.2];
    seeds.retain(|s| s.is_finite());
    seeds.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut best: Option<(f64, f64)> = None;
    let mut last = (m_init.re, f64::NAN);
    for seed in seeds {
        let (x, r, ok) = secant_root(cluster, seed, opts)?;
        last = (x, r);
        if !ok {
            continue;
        }
        let better = match best {
            None => true,
            Some((bx, _)) => x.abs() > bx.abs() + 1e-9,
        };
        if better {
            best = Some((x, r));
        }
    }

    let (m, r, converged) = match best {
        Some((x, r)) => (x, r, true),
        None => (last.0, last.1, false),
    };
    // Symmetry partner roots -M carry the same physics; canonicalize the
    // report to the non-negative representative.
    let m = if converged && m < 0.0 { -m } else { m };
    let phase = if m.abs() > opts.m_threshold && converged {
        BpPhase::Ordered
    } else {
        BpPhase::Paramagnetic
    };
    Ok(BpSolution {
        magnetization: C64::new(m, 0.0),
        residual: C64::new(r, 0.0),
        converged,
        phase,
        residual_at_zero,
    })
}

/// Classify one scan point, threading the previous magnetization as the
/// warm seed. `j_signed` is in units of `delta` and carries the side of
/// the phase diagram (negative for the antiferromagnetic half).
fn classify(
    kind: BpClusterKind,
    delta: f64,
    j_signed: f64,
    g_norm: f64,
    seed: f64,
    opts: &BpOptions,
) -> Result<BpSolution> {
    let cluster = BpCluster::new(kind, delta, j_signed * delta, g_norm * delta)?;
    solve_bp(&cluster, C64::new(seed, 0.0), opts)
}

/// Trace the mean-field phase boundary over a grid of `gamma/delta` values.
///
/// For each gain the scan marches `|J|/delta` from `scan_step` to
/// `scan_j_max`, warm-starting each solve from the previous magnetization;
/// every change of phase between neighbouring scan points is refined by
/// bisection to `bisect_tol`. Returned points are `(J/delta, gamma/delta)`
/// on the cluster's side of the phase diagram: negative `J/delta` for the
/// antiferromagnetic cluster, positive for the ferromagnetic one, and both
/// sides for the six-spin cluster (whose side is carried by the sign of
/// its coupling). A gain value whose whole scan stays in one phase
/// contributes no points; per-point solver failures are bridged by
/// carrying the last classification forward.
pub fn bp_phase_boundary(
    kind: BpClusterKind,
    gamma_grid: &[f64],
    delta: f64,
    opts: &BpOptions,
) -> Result<Vec<(f64, f64)>> {
    if gamma_grid.is_empty() {
        return Err(Error::Unsupported(
            "bp_phase_boundary needs at least one gain value".into(),
        ));
    }
    if !(opts.scan_step > 0.0) || !(opts.scan_j_max > opts.scan_step) {
        return Err(Error::Unsupported(format!(
            "bad scan range: step {} max {}",
            opts.scan_step, opts.scan_j_max
        )));
    }
    let sides: &[f64] = match kind {
        BpClusterKind::TwoSpinAf => &[-1.0],
        BpClusterKind::TwoSpinF => &[1.0],
        BpClusterKind::SixSpin => &[-1.0, 1.0],
    };
    let mut boundary = Vec::new();
    for &side in sides {
        for &g_norm in gamma_grid {
            // Forward scan with warm starts.
            let steps =
                ((opts.scan_j_max - opts.scan_step) / opts.scan_step).round() as usize + 1;
            let mut seed = 0.5;
            let mut previous: Option<(f64, bool, f64)> = None;
            for i in 0..steps {
                let j_norm = opts.scan_step * (i + 1) as f64;
                if j_norm > opts.scan_j_max + 1e-12 {
                    break;
                }
                let sol = match classify(kind, delta, side * j_norm, g_norm, seed, opts) {
                    Ok(sol) => sol,
                    // Bridge the gap: keep the previous classification alive.
                    Err(_) => continue,
                };
                let ordered = sol.phase == BpPhase::Ordered;
                if ordered {
                    seed = sol.magnetization.re.max(0.05);
                }
                if let Some((j_prev, prev_ordered, seed_prev)) = previous {
                    if prev_ordered != ordered {
                        let j_star = bisect_boundary(
                            kind, delta, g_norm, side, j_prev, j_norm, seed_prev, opts,
                        );
                        boundary.push((side * j_star, g_norm));
                    }
                }
                previous = Some((j_norm, ordered, if ordered { seed } else { 0.5 }));
            }
        }
    }
    Ok(boundary)
}

/// Shrink a phase-flip bracket to `bisect_tol`; classification errors stop
/// the refinement at the current midpoint. `lo` and `hi` are unsigned scan
/// positions; `side` carries the sign of the coupling.
fn bisect_boundary(
    kind: BpClusterKind,
    delta: f64,
    g_norm: f64,
    side: f64,
    mut lo: f64,
    mut hi: f64,
    seed: f64,
    opts: &BpOptions,
) -> f64 {
    let lo_ordered = match classify(kind, delta, side * lo, g_norm, seed, opts) {
        Ok(sol) => sol.phase == BpPhase::Ordered,
        Err(_) => return 0.5 * (lo + hi),
    };
    while hi - lo > opts.bisect_tol {
        let mid = 0.5 * (lo + hi);
        match classify(kind, delta, side * mid, g_norm, seed, opts) {
            Ok(sol) => {
                if (sol.phase == BpPhase::Ordered) == lo_ordered {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Err(_) => break,
        }
    }
    0.5 * (lo + hi)
}
