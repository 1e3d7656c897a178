//! Chain definition and Hamiltonian construction.
//!
//! The model is a transverse-field Ising chain of `N` spins with a staggered,
//! purely imaginary longitudinal field:
//!
//! ```text
//! H = sum_n [ delta * sx_n + (-1)^(n-1) * i * gain * sz_n ]
//!     - coupling * sum_<n,n+1> sz_n sz_{n+1}
//! ```
//!
//! Site 1 carries `+i*gain`, site 2 carries `-i*gain` and so on; `coupling > 0`
//! is ferromagnetic, `coupling < 0` antiferromagnetic. The chain is either
//! open (bonds `1..N-1`) or periodic (extra bond `N-1`), and a periodic ring
//! must have even `N` so the stagger pattern closes on itself.
//!
//! Basis states are encoded little-endian: bit `n-1` of the index holds the
//! `sz` eigenvalue of site `n`, with a set bit meaning `sz = +1`. The
//! diagonal part of `H` is accumulated in integers (bond sums and stagger
//! sums) and only multiplied by the couplings at the very end, so symmetry
//! identities that hold for the exact model — such as invariance under a
//! one-site translation combined with complex conjugation on a periodic ring —
//! hold bitwise for the floating-point matrix as well.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain for which [`build_hamiltonian`] will materialize the dense
/// matrix by default (`2^14 = 16384`, about 4 GiB of complex entries).
pub const DENSE_SITE_LIMIT: usize = 14;

/// Hard cap on chain length; beyond this the bit-twiddled basis indices would
/// stop fitting comfortably in a `usize` workload.
pub const MAX_SITES: usize = 30;

/// Boundary condition of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Bonds `1..N-1` plus the wrap-around bond `N..1`.
    Periodic,
    /// Bonds `1..N-1` only.
    Open,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Periodic => write!(f, "periodic"),
            Boundary::Open => write!(f, "open"),
        }
    }
}

/// Physical parameters of one chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Number of spins `N`.
    pub n_sites: usize,
    /// Transverse field `delta` (strictly positive; the natural energy unit).
    pub delta: f64,
    /// Ising coupling `J`; positive is ferromagnetic.
    pub coupling: f64,
    /// Gain/loss amplitude `gamma >= 0` of the staggered imaginary field.
    pub gain: f64,
    /// Boundary condition.
    pub boundary: Boundary,
}

impl ChainParams {
    /// Build and validate a parameter set.
    pub fn new(
        n_sites: usize,
        delta: f64,
        coupling: f64,
        gain: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        let p = ChainParams {
            n_sites,
            delta,
            coupling,
            gain,
            boundary,
        };
        p.validate()?;
        Ok(p)
    }

    /// Check all invariants; every constructor and solver entry point calls
    /// this so invalid chains are rejected before any numerics run.
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 1 || self.n_sites > MAX_SITES {
            return Err(Error::BadLength(self.n_sites));
        }
        if self.boundary == Boundary::Periodic && self.n_sites % 2 != 0 {
            return Err(Error::OddPeriodic(self.n_sites));
        }
        for (name, value) in [
            ("delta", self.delta),
            ("coupling", self.coupling),
            ("gain", self.gain),
        ] {
            if !value.is_finite() {
                return Err(Error::NonFinite { name, value });
            }
        }
        if self.delta <= 0.0 {
            return Err(Error::BadDelta(self.delta));
        }
        if self.gain < 0.0 {
            return Err(Error::BadGain(self.gain));
        }
        Ok(())
    }

    /// Hilbert-space dimension `2^N`.
    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    /// Natural energy scale `sqrt(coupling^2 + delta^2)` used for
    /// dimensionless ratios and for relative tolerances.
    pub fn energy_scale(&self) -> f64 {
        self.coupling.hypot(self.delta)
    }

    /// Iterator over the Ising bonds as 1-based site pairs `(n, n+1)`, with
    /// the wrap-around pair `(N, 1)` included for periodic chains.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut bonds: Vec<(usize, usize)> =
            (1..self.n_sites).map(|n| (n, n + 1)).collect();
        if self.boundary == Boundary::Periodic && self.n_sites > 1 {
            bonds.push((self.n_sites, 1));
        }
        bonds
    }
}

/// One classical `sz` product state, wrapped so site access reads naturally.
///
/// Bit `n-1` of the code is the spin of site `n`; a set bit is `sz = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState(pub usize);

impl BasisState {
    /// `sz` eigenvalue (`+1` or `-1`) of 1-based `site`.
    pub fn spin(self, site: usize) -> i64 {
        if self.0 >> (site - 1) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// The state with `site` flipped (action of `sx_site`).
    pub fn flip(self, site: usize) -> BasisState {
        BasisState(self.0 ^ (1usize << (site - 1)))
    }

    /// Sum of `s_n * s_{n+1}` over the bonds of `params`, as an exact
    /// integer.
    pub fn bond_sum(self, params: &ChainParams) -> i64 {
        params
            .bonds()
            .iter()
            .map(|&(a, b)| self.spin(a) * self.spin(b))
            .sum()
    }

    /// Sum of `(-1)^(n-1) * s_n` over all sites, as an exact integer.
    pub fn stagger_sum(self, params: &ChainParams) -> i64 {
        (1..=params.n_sites)
            .map(|n| if n % 2 == 1 { self.spin(n) } else { -self.spin(n) })
            .sum()
    }
}

/// Diagonal entry of `H` for one basis state. The two integer sums carry the
/// whole combinatorial content; the couplings enter through a single
/// multiplication each, so no rounding accumulates.
fn diagonal_entry(params: &ChainParams, state: BasisState) -> C64 {
    C64::new(
        -params.coupling * state.bond_sum(params) as f64,
        params.gain * state.stagger_sum(params) as f64,
    )
}

/// The Hamiltonian of one chain, stored as its dense matrix plus enough
/// structure (diagonal vector, flip amplitude) to apply it without touching
/// the matrix.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    params: ChainParams,
    diagonal: Vec<C64>,
    dense: Array2<C64>,
}

impl OperatorMatrix {
    /// Parameters this matrix was built from.
    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// Dense matrix view (row, column) ready for LAPACK.
    pub fn as_array(&self) -> &Array2<C64> {
        &self.dense
    }

    /// Diagonal of `H` in the `sz` product basis.
    pub fn diagonal(&self) -> &[C64] {
        &self.diagonal
    }

    /// Trace of `H`, summed so the structural cancellation is float-exact.
    ///
    /// Every term of `H` is traceless, and the diagonal entries come in
    /// exactly negating partners: complementing all spins negates the
    /// stagger sum (imaginary parts), flipping every second site negates
    /// every bond product (real parts). Summing along those pairings avoids
    /// the spurious `~1e-16` leftovers a plain left-to-right sum produces,
    /// so the result is exactly zero for valid chains.
    pub fn trace(&self) -> C64 {
        let dim = self.dim();
        let full = dim - 1;
        // Mask of the even sites 2, 4, ... (bits 1, 3, ...).
        let mut alt = 0usize;
        let mut site = 2;
        while site <= self.params.n_sites {
            alt |= 1usize << (site - 1);
            site += 2;
        }
        let mut re = 0.0;
        let mut im = 0.0;
        for b in 0..dim {
            let a = b ^ alt;
            if alt != 0 && b < a {
                re += self.diagonal[b].re + self.diagonal[a].re;
            }
            let c = b ^ full;
            if b < c {
                im += self.diagonal[b].im + self.diagonal[c].im;
            }
        }
        if alt == 0 {
            // Single site: no bonds, the real parts are all zero anyway.
            re = self.diagonal.iter().map(|z| z.re).sum();
        }
        C64::new(re, im)
    }

    /// Frobenius norm, computed from structure: every row has `N` off-diagonal
    /// entries equal to `delta` plus its diagonal element.
    pub fn frobenius_norm(&self) -> f64 {
        let off = self.dim() as f64 * self.params.n_sites as f64
            * self.params.delta * self.params.delta;
        let diag: f64 = self.diagonal.iter().map(|z| z.norm_sqr()).sum();
        (off + diag).sqrt()
    }

    /// Apply `H` to a state vector using the bitwise structure; never touches
    /// the dense matrix.
    pub fn apply(&self, state: &[C64]) -> Result<Vec<C64>> {
        apply_structured(&self.params, &self.diagonal, state)
    }
}

/// Build the dense Hamiltonian matrix for `params`.
///
/// Rejects chains longer than [`DENSE_SITE_LIMIT`]; use
/// [`apply_hamiltonian`] (or the iterative solver built on it) above that.
pub fn build_hamiltonian(params: &ChainParams) -> Result<OperatorMatrix> {
    build_hamiltonian_with_limit(params, DENSE_SITE_LIMIT)
}

/// Like [`build_hamiltonian`] but with an explicit dense-size cap, for
/// callers that know their memory budget.
pub fn build_hamiltonian_with_limit(
    params: &ChainParams,
    site_limit: usize,
) -> Result<OperatorMatrix> {
    params.validate()?;
    if params.n_sites > site_limit {
        return Err(Error::DenseTooLarge {
            n_sites: params.n_sites,
            dim: params.dim(),
            limit: site_limit,
        });
    }
    let dim = params.dim();
    let diagonal: Vec<C64> = (0..dim)
        .map(|b| diagonal_entry(params, BasisState(b)))
        .collect();
    let mut dense = Array2::<C64>::zeros((dim, dim));
    let flip = C64::new(params.delta, 0.0);
    for b in 0..dim {
        dense[(b, b)] = diagonal[b];
        // sx_n couples `b` to `b` with site n flipped; H is symmetric in this
        // basis, so filling column-by-column covers every entry once.
        for site in 1..=params.n_sites {
            let a = BasisState(b).flip(site).0;
            dense[(a, b)] = flip;
        }
    }
    Ok(OperatorMatrix {
        params: *params,
        diagonal,
        dense,
    })
}

/// Precompute the diagonal of `H` for matrix-free application.
pub fn hamiltonian_diagonal(params: &ChainParams) -> Result<Vec<C64>> {
    params.validate()?;
    Ok((0..params.dim())
        .map(|b| diagonal_entry(params, BasisState(b)))
        .collect())
}

/// Apply `H` to `state` without building the matrix: `O(N * 2^N)` time,
/// `O(2^N)` memory.
pub fn apply_hamiltonian(params: &ChainParams, state: &[C64]) -> Result<Vec<C64>> {
    params.validate()?;
    let diagonal = hamiltonian_diagonal(params)?;
    apply_structured(params, &diagonal, state)
}

fn apply_structured(
    params: &ChainParams,
    diagonal: &[C64],
    state: &[C64],
) -> Result<Vec<C64>> {
    let dim = diagonal.len();
    if state.len() != dim {
        return Err(Error::DimensionMismatch {
            got: state.len(),
            expect: dim,
        });
    }
    let delta = params.delta;
    let n = params.n_sites;
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for b in 0..dim {
        // Gather form: out[b] collects the diagonal term plus delta times the
        // amplitudes of all single-flip neighbours of b.
        let mut acc = diagonal[b] * state[b];
        let mut flips = C64::new(0.0, 0.0);
        for k in 0..n {
            flips += state[b ^ (1usize << k)];
        }
        acc += flips * delta;
        out[b] = acc;
    }
    Ok(out)
}

/// Translate a periodic basis state by one site (site `n` maps to `n+1`,
/// site `N` to site `1`). Exposed for the symmetry tests.
pub fn translate_state(params: &ChainParams, state: BasisState) -> BasisState {
    let n = params.n_sites;
    let mask = (1usize << n) - 1;
    let b = state.0;
    BasisState(((b << 1) | (b >> (n - 1))) & mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use num_complex::Complex64 as C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Independent dense construction through explicit Kronecker products,
    /// used as the oracle for the bit-twiddled builder.
    mod kron_oracle {
        use super::*;

        pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
            let (ra, ca) = a.dim();
            let (rb, cb) = b.dim();
            let mut out = Array2::<C64>::zeros((ra * rb, ca * cb));
            for ia in 0..ra {
                for ja in 0..ca {
                    for ib in 0..rb {
                        for jb in 0..cb {
                            out[(ia * rb + ib, ja * cb + jb)] = a[(ia, ja)] * b[(ib, jb)];
                        }
                    }
                }
            }
            out
        }

        pub fn eye(dim: usize) -> Array2<C64> {
            Array2::from_diag_elem(dim, C64::new(1.0, 0.0))
        }

        pub fn sigma_x() -> Array2<C64> {
            let mut m = Array2::zeros((2, 2));
            m[(0, 1)] = C64::new(1.0, 0.0);
            m[(1, 0)] = C64::new(1.0, 0.0);
            m
        }

        pub fn sigma_z() -> Array2<C64> {
            let mut m = Array2::zeros((2, 2));
            // Row/column 0 is the bit-0 state, i.e. sz = -1 in our encoding.
            m[(0, 0)] = C64::new(-1.0, 0.0);
            m[(1, 1)] = C64::new(1.0, 0.0);
            m
        }

        /// Single-site operator embedded on 1-based `site` of an `n`-chain.
        /// Bit 0 varies fastest in the basis index, so site 1 is the
        /// innermost Kronecker factor.
        pub fn on_site(op: &Array2<C64>, site: usize, n: usize) -> Array2<C64> {
            let inner = kron(op, &eye(1 << (site - 1)));
            kron(&eye(1 << (n - site)), &inner)
        }

        pub fn dense(params: &ChainParams) -> Array2<C64> {
            let n = params.n_sites;
            let dim = 1usize << n;
            let mut h = Array2::<C64>::zeros((dim, dim));
            for site in 1..=n {
                let sign = if site % 2 == 1 { 1.0 } else { -1.0 };
                h = h + on_site(&sigma_x(), site, n).mapv(|v| v * params.delta)
                    + on_site(&sigma_z(), site, n)
                        .mapv(|v| v * C64::new(0.0, sign * params.gain));
            }
            for (a, b) in params.bonds() {
                let zz = on_site(&sigma_z(), a, n).dot(&on_site(&sigma_z(), b, n));
                h = h + zz.mapv(|v| v * (-params.coupling));
            }
            h
        }
    }

    #[test]
    fn two_site_open_matches_hand_computation() {
        // N = 2, delta = 1, J = 0.5, gamma = 0.3, open: the diagonal is
        // (-J*s1*s2 + i*gamma*(s1 - s2)) over states (--, +-, -+, ++), and
        // the stagger difference contributes 2*gamma = 0.6 on the mixed
        // states.
        let p = ChainParams::new(2, 1.0, 0.5, 0.3, Boundary::Open).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let d = h.diagonal();
        assert_eq!(d[0], c(-0.5, 0.0));
        assert_eq!(d[1], c(0.5, 0.6));
        assert_eq!(d[2], c(0.5, -0.6));
        assert_eq!(d[3], c(-0.5, 0.0));
        // Off-diagonal: every single-flip pair connected by delta.
        let m = h.as_array();
        for (a, b) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
            assert_eq!(m[(a, b)], c(1.0, 0.0));
            assert_eq!(m[(b, a)], c(1.0, 0.0));
        }
        assert_eq!(m[(0, 3)], c(0.0, 0.0));
        assert_eq!(m[(3, 0)], c(0.0, 0.0));
    }

    #[test]
    fn single_site_matrix() {
        let p = ChainParams::new(1, 0.5, 2.0, 0.7, Boundary::Open).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let m = h.as_array();
        // No bonds on a single site; only the field terms survive.
        assert_eq!(m[(0, 0)], c(0.0, -0.7));
        assert_eq!(m[(1, 1)], c(0.0, 0.7));
        assert_eq!(m[(0, 1)], c(0.5, 0.0));
        assert_eq!(m[(1, 0)], c(0.5, 0.0));
    }

    #[test]
    fn matches_kronecker_oracle_for_all_small_chains() {
        // 5x5 grid of couplings/gains, both boundaries, N = 1..=6 (periodic
        // only where even). Exact elementwise agreement is required up to
        // 1e-14: both paths do one multiplication per entry.
        let couplings = [-1.5, -0.3, 0.0, 0.7, 1.5];
        let gains = [0.0, 0.25, 0.8, 1.3, 2.0];
        for n in 1..=6usize {
            for &boundary in &[Boundary::Open, Boundary::Periodic] {
                if boundary == Boundary::Periodic && n % 2 != 0 {
                    continue;
                }
                for &coupling in &couplings {
                    for &gain in &gains {
                        let p = ChainParams::new(n, 0.9, coupling, gain, boundary)
                            .unwrap();
                        let h = build_hamiltonian(&p).unwrap();
                        let oracle = kron_oracle::dense(&p);
                        let worst = h
                            .as_array()
                            .iter()
                            .zip(oracle.iter())
                            .map(|(a, b)| (a - b).norm())
                            .fold(0.0f64, f64::max);
                        assert!(
                            worst <= 1e-14,
                            "N={n} {boundary:?} J={coupling} gamma={gain}: worst |diff| = {worst:e}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn apply_matches_dense_matrix_vector_product() {
        use crate::testutil::splitmix_vector;
        for n in [2usize, 4, 6, 8] {
            for &boundary in &[Boundary::Open, Boundary::Periodic] {
                let p = ChainParams::new(n, 1.0, -0.8, 0.45, boundary).unwrap();
                let h = build_hamiltonian(&p).unwrap();
                let v = splitmix_vector(p.dim(), 0x5eed + n as u64);
                let fast = h.apply(&v).unwrap();
                let slow = h.as_array().dot(&ndarray::Array1::from_vec(v.clone()));
                let scale = slow.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
                for (a, b) in fast.iter().zip(slow.iter()) {
                    assert!((a - b).norm() <= 1e-13 * scale.max(1.0));
                }
            }
        }
    }

    #[test]
    fn apply_flips_a_product_state() {
        // With delta = 1, J = gamma = 0: H is pure sx, so the all-down state
        // maps to the equal superposition of single-flip states.
        let p = ChainParams::new(2, 1.0, 0.0, 0.0, Boundary::Open).unwrap();
        let mut v = vec![c(0.0, 0.0); 4];
        v[0] = c(1.0, 0.0);
        let out = apply_hamiltonian(&p, &v).unwrap();
        assert_eq!(out, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn trace_vanishes_identically() {
        // Every term in H is traceless, and the symmetry-paired summation
        // keeps the cancellation exact.
        for n in [1usize, 2, 3, 4, 5, 6, 8] {
            for &boundary in &[Boundary::Open, Boundary::Periodic] {
                if boundary == Boundary::Periodic && n % 2 != 0 {
                    continue;
                }
                let p = ChainParams::new(n, 1.3, -0.77, 0.91, boundary).unwrap();
                let h = build_hamiltonian(&p).unwrap();
                assert_eq!(h.trace(), c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn translation_conjugation_symmetry_is_exact() {
        // On a periodic even ring, shifting every site by one negates the
        // stagger pattern, so T H T^-1 = conj(H) entry for entry — exactly,
        // because the diagonal is assembled from integers.
        for n in [2usize, 4, 6, 8] {
            let p = ChainParams::new(n, 1.1, 0.6, 0.85, Boundary::Periodic).unwrap();
            let h = build_hamiltonian(&p).unwrap();
            let m = h.as_array();
            let dim = p.dim();
            for a in 0..dim {
                let ta = translate_state(&p, BasisState(a)).0;
                for b in 0..dim {
                    let tb = translate_state(&p, BasisState(b)).0;
                    assert_eq!(m[(ta, tb)], m[(a, b)].conj(), "N={n} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn hermitian_when_gain_is_zero() {
        let p = ChainParams::new(5, 0.8, -1.2, 0.0, Boundary::Open).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let m = h.as_array();
        for a in 0..p.dim() {
            for b in 0..p.dim() {
                assert_eq!(m[(a, b)].im, 0.0);
                assert_eq!(m[(a, b)], m[(b, a)]);
            }
        }
    }

    #[test]
    fn frobenius_norm_matches_dense() {
        let p = ChainParams::new(6, 1.0, 0.4, 0.9, Boundary::Periodic).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let direct: f64 = h.as_array().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((h.frobenius_norm() - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            ChainParams::new(11, 1.0, 0.5, 0.1, Boundary::Periodic),
            Err(Error::OddPeriodic(11))
        ));
        assert!(matches!(
            ChainParams::new(4, 0.0, 0.5, 0.1, Boundary::Open),
            Err(Error::BadDelta(_))
        ));
        assert!(matches!(
            ChainParams::new(4, -1.0, 0.5, 0.1, Boundary::Open),
            Err(Error::BadDelta(_))
        ));
        assert!(matches!(
            ChainParams::new(4, 1.0, 0.5, -0.1, Boundary::Open),
            Err(Error::BadGain(_))
        ));
        assert!(matches!(
            ChainParams::new(0, 1.0, 0.5, 0.1, Boundary::Open),
            Err(Error::BadLength(0))
        ));
        let p = ChainParams::new(16, 1.0, 0.5, 0.1, Boundary::Periodic).unwrap();
        assert!(matches!(
            build_hamiltonian(&p),
            Err(Error::DenseTooLarge { .. })
        ));
        let small = ChainParams::new(2, 1.0, 0.5, 0.1, Boundary::Open).unwrap();
        let v = vec![c(1.0, 0.0); 3];
        assert!(matches!(
            apply_hamiltonian(&small, &v),
            Err(Error::DimensionMismatch { got: 3, expect: 4 })
        ));
    }

    #[test]
    fn odd_open_chains_are_fine() {
        let p = ChainParams::new(7, 1.0, 0.5, 0.3, Boundary::Open).unwrap();
        assert_eq!(p.dim(), 128);
        assert_eq!(p.bonds().len(), 6);
        build_hamiltonian(&p).unwrap();
    }
}
