//! Eigensolvers and spectral classification.
//!
//! Two solver paths share one result type: [`full_spectrum`] runs dense
//! LAPACK (`zgeev` through `ndarray-linalg`) and returns every eigenpair,
//! while [`extremal_eigenpairs`] runs a matrix-free Davidson iteration that
//! targets the `k` eigenvalues of smallest real part and stays cheap up to
//! `N = 18`. Eigenvalues are always reported sorted by `(Re, Im)`, so a
//! complex-conjugate pair occupies adjacent slots with the `Im < 0` member
//! first.
//!
//! Ground-state selection follows the convention used throughout the crate:
//! the ground state is the eigenvalue of smallest real part, and when that
//! value is one member of a conjugate pair the `Im < 0` member is designated
//! ground and its partner first-excited. A spectrum is PT-broken as soon as
//! any eigenvalue carries an imaginary part above tolerance.

mod davidson;
mod exception;
mod momentum;

pub use davidson::{extremal_eigenpairs, DavidsonOptions};
pub use exception::{
    find_exception_point, ExceptionPoint, ExceptionPointOptions, SolverChoice, SweepParam,
};
pub use momentum::{
    translational_eigenvalues, translational_ground_pair, TRANSLATIONAL_SITE_LIMIT,
};

use ndarray::{Array1, Array2};
use ndarray_linalg::Eig;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::OperatorMatrix;

/// Relative imaginary-part tolerance: an eigenvalue is treated as complex
/// when `|Im| > PT_TOL_RELATIVE * energy_scale`.
pub const PT_TOL_RELATIVE: f64 = 1e-8;

/// Relative residual bound the solvers must meet: `||H v - e v|| <=
/// RESIDUAL_TOL_RELATIVE * ||H||_F` for every reported pair.
pub const RESIDUAL_TOL_RELATIVE: f64 = 1e-9;

/// Whether the spectrum is entirely real or carries conjugate pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PtClass {
    /// All eigenvalues real within tolerance.
    Preserved,
    /// At least one complex-conjugate pair.
    Broken,
}

impl std::fmt::Display for PtClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PtClass::Preserved => write!(f, "preserved"),
            PtClass::Broken => write!(f, "broken"),
        }
    }
}

/// Output of either solver path.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Eigenvalues sorted by `(Re, Im)`. For the iterative path this holds
    /// only the `k` requested extremal values.
    pub eigenvalues: Vec<C64>,
    /// Right eigenvectors as unit-norm columns, same order as `eigenvalues`.
    pub right_vectors: Array2<C64>,
    /// Left eigenvectors (columns), if requested; `w_i^H H = e_i w_i^H`.
    pub left_vectors: Option<Array2<C64>>,
    /// Index of the designated ground state in `eigenvalues`.
    pub ground_index: usize,
    /// Index of the designated first excited state.
    pub first_excited_index: usize,
    /// PT classification of the reported eigenvalues.
    pub pt_class: PtClass,
    /// Per-pair residual norms `||H v - e v||`.
    pub residual_norms: Vec<f64>,
    /// Frobenius norm of `H`, the scale for the residual bound.
    pub norm_scale: f64,
    /// Energy scale `sqrt(J^2 + delta^2)` used for the imaginary-part
    /// tolerance.
    pub energy_scale: f64,
    /// Set when the ground state and its neighbour are so close that the
    /// real-part ordering is ambiguous (the chain sits at or next to an
    /// exceptional point). Informational, never fatal.
    pub ordering_ambiguous: bool,
}

impl SpectrumResult {
    /// Energy of the designated ground state.
    pub fn ground_energy(&self) -> C64 {
        self.eigenvalues[self.ground_index]
    }

    /// Right eigenvector of the ground state.
    pub fn ground_vector(&self) -> Array1<C64> {
        self.right_vectors.column(self.ground_index).to_owned()
    }

    /// Energy of the designated first excited state.
    pub fn first_excited_energy(&self) -> C64 {
        self.eigenvalues[self.first_excited_index]
    }
}

/// How the ground and first-excited states were designated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundSelection {
    /// Index of the ground state in the sorted eigenvalue list.
    pub ground_index: usize,
    /// Index of the first excited state.
    pub first_excited_index: usize,
    /// PT classification of the full list.
    pub pt_class: PtClass,
    /// True when the ground value sits in a complex-conjugate pair.
    pub ground_is_paired: bool,
}

/// Options for [`full_spectrum_with`].
#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    /// Also compute left eigenvectors (one extra dense solve).
    pub compute_left: bool,
    /// Override for the absolute imaginary-part tolerance; defaults to
    /// `PT_TOL_RELATIVE * energy_scale`.
    pub im_tol: Option<f64>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            compute_left: false,
            im_tol: None,
        }
    }
}

/// Dense diagonalization of the full spectrum with default options.
pub fn full_spectrum(h: &OperatorMatrix) -> Result<SpectrumResult> {
    full_spectrum_with(h, &SpectrumOptions::default())
}

/// Dense diagonalization with explicit options.
pub fn full_spectrum_with(
    h: &OperatorMatrix,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    let (vals, vecs) = h
        .as_array()
        .eig()
        .map_err(|e| Error::Eigensolver(e.to_string()))?;
    let norm_scale = h.frobenius_norm();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| value_order(vals[a], vals[b]));
    // zgeev computes the two members of a conjugate pair independently, so
    // their real parts differ at rounding level and the lexicographic sort
    // can land the Im > 0 member first; normalize to Im < 0 first.
    let ptol = 1e-10 * norm_scale.max(1.0);
    for i in 0..order.len().saturating_sub(1) {
        let a = vals[order[i]];
        let b = vals[order[i + 1]];
        if (a.re - b.re).abs() <= ptol && (a.im + b.im).abs() <= ptol && a.im > b.im {
            order.swap(i, i + 1);
        }
    }

    let dim = h.dim();
    let mut eigenvalues = Vec::with_capacity(dim);
    let mut right = Array2::<C64>::zeros((dim, dim));
    for (slot, &src) in order.iter().enumerate() {
        eigenvalues.push(vals[src]);
        let col = vecs.column(src);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for (r, v) in col.iter().enumerate() {
            right[(r, slot)] = v / norm;
        }
    }

    let residual_norms: Vec<f64> = (0..dim)
        .map(|i| {
            let v: Vec<C64> = right.column(i).to_vec();
            let hv = h.apply(&v).expect("vector length fixed by construction");
            hv.iter()
                .zip(v.iter())
                .map(|(a, b)| (a - b * eigenvalues[i]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    let left_vectors = if opts.compute_left {
        Some(left_vectors_for(h, &eigenvalues)?)
    } else {
        None
    };

    let energy_scale = h.params().energy_scale();
    let im_tol = opts.im_tol.unwrap_or(PT_TOL_RELATIVE * energy_scale);
    let sel = classify(&eigenvalues, im_tol)?;
    let ordering_ambiguous = ambiguous_ordering(&eigenvalues, im_tol);

    Ok(SpectrumResult {
        eigenvalues,
        right_vectors: right,
        left_vectors,
        ground_index: sel.ground_index,
        first_excited_index: sel.first_excited_index,
        pt_class: sel.pt_class,
        residual_norms,
        norm_scale,
        energy_scale,
        ordering_ambiguous,
    })
}

/// Sort key used everywhere: real part first, then imaginary part, so a
/// conjugate pair lands in adjacent slots with the `Im < 0` member first.
pub(crate) fn value_order(a: C64, b: C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Designate ground / first-excited states in a `(Re, Im)`-sorted list.
///
/// The rules, applied to the sorted list:
/// - slot 0 (smallest real part, most negative imaginary part on a tie) is
///   the ground state;
/// - if slot 0 and slot 1 form a conjugate pair — equal real parts and
///   opposite imaginary parts within `im_tol`, with `|Im|` above tolerance —
///   slot 1 (the `Im > 0` partner) is the first excited state;
/// - the spectrum is `Broken` as soon as any eigenvalue has `|Im| > im_tol`.
pub fn select_ground_state(
    eigenvalues: &[C64],
    im_tol: f64,
) -> Result<GroundSelection> {
    classify(eigenvalues, im_tol)
}

fn classify(eigenvalues: &[C64], im_tol: f64) -> Result<GroundSelection> {
    if eigenvalues.is_empty() {
        return Err(Error::Eigensolver("empty eigenvalue list".into()));
    }
    let broken = eigenvalues.iter().any(|e| e.im.abs() > im_tol);
    let pt_class = if broken { PtClass::Broken } else { PtClass::Preserved };

    let ground_index = 0usize;
    let mut ground_is_paired = false;
    let mut first_excited_index = usize::min(1, eigenvalues.len() - 1);
    if eigenvalues.len() >= 2 {
        let g = eigenvalues[0];
        let p = eigenvalues[1];
        if g.im.abs() > im_tol
            && (g.re - p.re).abs() <= im_tol.max(1e-12 * g.re.abs())
            && (g.im + p.im).abs() <= im_tol
        {
            // Conjugate pair: g carries Im < 0 because of the sort order, and
            // its partner is the first excited state.
            ground_is_paired = true;
            first_excited_index = 1;
        }
    }
    Ok(GroundSelection {
        ground_index,
        first_excited_index,
        pt_class,
        ground_is_paired,
    })
}

fn ambiguous_ordering(eigenvalues: &[C64], im_tol: f64) -> bool {
    if eigenvalues.len() < 2 {
        return false;
    }
    let g = eigenvalues[0];
    let p = eigenvalues[1];
    // Near an exceptional point the would-be pair collapses: real parts and
    // imaginary parts both agree within tolerance, so "which is ground" is
    // a coin flip.
    (g.re - p.re).abs() <= im_tol && (g.im - p.im).abs() <= im_tol
}

/// Gap between the designated first-excited and ground energies.
pub fn energy_gap(spec: &SpectrumResult) -> C64 {
    spec.first_excited_energy() - spec.ground_energy()
}

/// Left eigenvectors as columns matched to `eigenvalues` (which must be the
/// `(Re, Im)`-sorted right-eigenvalue list). Uses `H^T u = e u` and
/// `w = conj(u)`.
fn left_vectors_for(
    h: &OperatorMatrix,
    eigenvalues: &[C64],
) -> Result<Array2<C64>> {
    let ht = h.as_array().t().to_owned();
    let (vals, vecs) = ht
        .eig()
        .map_err(|e| Error::Eigensolver(e.to_string()))?;
    let dim = eigenvalues.len();
    let mut used = vec![false; dim];
    let mut left = Array2::<C64>::zeros((dim, dim));
    for (slot, &target) in eigenvalues.iter().enumerate() {
        // Greedy nearest-eigenvalue matching; fine away from degeneracies,
        // and at an exceptional point left vectors are ill-conditioned
        // anyway.
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (j, &v) in vals.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (v - target).norm();
            if d < best_d {
                best_d = d;
                best = Some(j);
            }
        }
        let j = best.ok_or_else(|| {
            Error::Eigensolver("left/right eigenvalue matching failed".into())
        })?;
        used[j] = true;
        let col = vecs.column(j);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for (r, v) in col.iter().enumerate() {
            left[(r, slot)] = v.conj() / norm;
        }
    }
    Ok(left)
}
