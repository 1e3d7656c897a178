//! Ground-state observables: spin-spin correlations, structure factor,
//! correlation length, order parameter.
//!
//! The correlation profile is `C(j) = <G| sz_ref sz_(ref+j) |G>` evaluated
//! with the ordinary conjugate-transpose bra of the right ground vector; in
//! the `sz` product basis that is a sum of `|psi_b|^2` terms times integer
//! spins, so the result is real by construction. The biorthogonal
//! expectation `<L| .. |R> / <L|R>` is available separately for callers that
//! want the non-Hermitian inner product; it is genuinely complex.
//!
//! On the antiferromagnetic side the profile alternates sign with `j`, which
//! would make the small-`q` structure factor nearly cancel; following the
//! staggered convention, `af_mode` feeds `|C(j)|` into the structure factor
//! instead.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{BasisState, Boundary, ChainParams};
use crate::spectra::SpectrumResult;

/// Spin-spin correlations `C(j)` against distance `j` from a reference site.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationProfile {
    /// `C(j)` for `j = 0..=N` on periodic chains (the last entry wraps back
    /// to the reference site), `j = 0..=N-ref` on open chains.
    pub values: Vec<f64>,
    /// True when the chain is antiferromagnetic (`coupling < 0`); the
    /// structure factor then uses `|C(j)|`.
    pub af_mode: bool,
    /// 1-based reference site the distances count from.
    pub reference_site: usize,
    /// Chain length the profile belongs to.
    pub n_sites: usize,
    /// Whether the profile covers the full ring (periodic chains only);
    /// required by the correlation length.
    pub complete_ring: bool,
}

/// Dimensionless couplings shared by every phase-diagram axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedParams {
    /// `J / sqrt(J^2 + delta^2)`, in `(-1, 1)`.
    pub coupling_tilde: f64,
    /// `gamma / sqrt(J^2 + delta^2)`, non-negative.
    pub gain_tilde: f64,
    /// The common denominator `sqrt(J^2 + delta^2)`.
    pub energy_scale: f64,
}

/// Map bare chain parameters onto the dimensionless plane.
pub fn normalize_params(params: &ChainParams) -> Result<NormalizedParams> {
    params.validate()?;
    let scale = params.energy_scale();
    Ok(NormalizedParams {
        coupling_tilde: params.coupling / scale,
        gain_tilde: params.gain / scale,
        energy_scale: scale,
    })
}

/// 1-based site reached from `reference` after `j` steps, wrapping on
/// periodic chains.
fn site_at(params: &ChainParams, reference: usize, j: usize) -> usize {
    match params.boundary {
        Boundary::Periodic => (reference - 1 + j) % params.n_sites + 1,
        Boundary::Open => reference + j,
    }
}

/// Correlation profile of the designated ground state in `spec`.
///
/// `reference_site` is 1-based. Periodic chains produce `N + 1` values
/// (`j = 0..=N`, the last one closing the ring); open chains stop at the
/// far end of the chain.
pub fn correlation_profile(
    spec: &SpectrumResult,
    params: &ChainParams,
    reference_site: usize,
) -> Result<CorrelationProfile> {
    params.validate()?;
    if reference_site < 1 || reference_site > params.n_sites {
        return Err(Error::SiteOutOfRange {
            site: reference_site,
            n_sites: params.n_sites,
        });
    }
    let psi = spec.ground_vector();
    if psi.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            got: psi.len(),
            expect: params.dim(),
        });
    }
    let weights: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = weights.iter().sum();
    let max_j = match params.boundary {
        Boundary::Periodic => params.n_sites,
        Boundary::Open => params.n_sites - reference_site,
    };
    let values: Vec<f64> = (0..=max_j)
        .map(|j| {
            let other = site_at(params, reference_site, j);
            let sum: f64 = weights
                .iter()
                .enumerate()
                .map(|(b, w)| {
                    let s = BasisState(b);
                    w * (s.spin(reference_site) * s.spin(other)) as f64
                })
                .sum();
            sum / total
        })
        .collect();
    Ok(CorrelationProfile {
        values,
        af_mode: params.coupling < 0.0,
        reference_site,
        n_sites: params.n_sites,
        complete_ring: params.boundary == Boundary::Periodic,
    })
}

/// Biorthogonal correlation profile `<L| sz_ref sz_(ref+j) |R> / <L|R>`.
///
/// Requires `spec` to carry left vectors; the values are complex in general.
pub fn correlation_profile_biorthogonal(
    spec: &SpectrumResult,
    params: &ChainParams,
    reference_site: usize,
) -> Result<Vec<C64>> {
    params.validate()?;
    if reference_site < 1 || reference_site > params.n_sites {
        return Err(Error::SiteOutOfRange {
            site: reference_site,
            n_sites: params.n_sites,
        });
    }
    let left = spec.left_vectors.as_ref().ok_or_else(|| {
        Error::Unsupported(
            "biorthogonal correlations need left vectors; diagonalize with compute_left"
                .into(),
        )
    })?;
    let psi = spec.ground_vector();
    let w = left.column(spec.ground_index);
    let overlap: C64 = w.iter().zip(psi.iter()).map(|(l, r)| l.conj() * r).sum();
    if overlap.norm() < 1e-14 {
        return Err(Error::Eigensolver(
            "left/right ground overlap vanished (defective point)".into(),
        ));
    }
    let max_j = match params.boundary {
        Boundary::Periodic => params.n_sites,
        Boundary::Open => params.n_sites - reference_site,
    };
    Ok((0..=max_j)
        .map(|j| {
            let other = site_at(params, reference_site, j);
            let sum: C64 = w
                .iter()
                .zip(psi.iter())
                .enumerate()
                .map(|(b, (l, r))| {
                    let s = BasisState(b);
                    l.conj() * r * (s.spin(reference_site) * s.spin(other)) as f64
                })
                .sum();
            sum / overlap
        })
        .collect())
}

/// Structure factor `S(q) = sum_j cos(q j) * Ct(j)`, with `Ct = |C|` in
/// antiferromagnetic mode and `Ct = C` otherwise.
///
/// On a complete ring each of the `N` distinct separations enters once: the
/// profile's final wrap-around entry duplicates `C(0)` and is excluded.
/// Open-chain profiles sum every recorded distance.
pub fn structure_factor(profile: &CorrelationProfile, q: f64) -> f64 {
    let values = if profile.complete_ring {
        &profile.values[..profile.n_sites.min(profile.values.len())]
    } else {
        &profile.values[..]
    };
    values
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let ct = if profile.af_mode { c.abs() } else { c };
            (q * j as f64).cos() * ct
        })
        .sum()
}

/// Correlation length from the two smallest momenta:
/// `xi = (1/q1) * sqrt(S(0)/S(q1) - 1)` with `q1 = 2 pi / N`.
///
/// Clamped to `0` when `S(0) <= S(q1)` (no correlation buildup at small
/// `q`); a non-positive `S(q1)` is reported as an error since the square
/// root would be meaningless. Only defined on a complete periodic profile.
pub fn correlation_length(profile: &CorrelationProfile) -> Result<f64> {
    if !profile.complete_ring {
        return Err(Error::Unsupported(
            "correlation length needs the full ring profile of a periodic chain".into(),
        ));
    }
    let q1 = 2.0 * std::f64::consts::PI / profile.n_sites as f64;
    let s0 = structure_factor(profile, 0.0);
    let s1 = structure_factor(profile, q1);
    if s1 <= 0.0 {
        return Err(Error::BadStructureFactor(s1));
    }
    if s0 <= s1 {
        return Ok(0.0);
    }
    Ok((s0 / s1 - 1.0).sqrt() / q1)
}

/// Order parameter `sqrt(|C(N/2)|)`: the long-distance correlation at the
/// antipodal separation. Defined for even chains whose profile reaches
/// `j = N/2`.
pub fn order_parameter(profile: &CorrelationProfile) -> Result<f64> {
    if profile.n_sites % 2 != 0 {
        return Err(Error::Unsupported(format!(
            "order parameter needs an even chain, got n_sites = {}",
            profile.n_sites
        )));
    }
    let half = profile.n_sites / 2;
    let c = profile.values.get(half).ok_or_else(|| {
        Error::Unsupported(format!(
            "profile too short for the antipodal distance j = {half}"
        ))
    })?;
    Ok(c.abs().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_hamiltonian;
    use crate::spectra::{full_spectrum, full_spectrum_with, SpectrumOptions};

    fn profile_for(params: &ChainParams) -> CorrelationProfile {
        let spec = full_spectrum(&build_hamiltonian(params).unwrap()).unwrap();
        correlation_profile(&spec, params, 1).unwrap()
    }

    #[test]
    fn two_site_ferro_correlation_is_inverse_sqrt_five() {
        // N = 2 open, delta = J = 1, gamma = 0: restricting to the symmetric
        // sector gives ground energy -sqrt(5) and C(1) = 1/sqrt(5).
        let p = ChainParams::new(2, 1.0, 1.0, 0.0, Boundary::Open).unwrap();
        let prof = profile_for(&p);
        assert!((prof.values[0] - 1.0).abs() < 1e-12);
        assert!((prof.values[1] - 1.0 / 5.0f64.sqrt()).abs() < 1e-10);
        assert!(!prof.af_mode);
    }

    #[test]
    fn deep_ferro_saturates() {
        let p = ChainParams::new(6, 0.05, 1.0, 0.0, Boundary::Periodic).unwrap();
        let prof = profile_for(&p);
        for (j, c) in prof.values.iter().enumerate() {
            assert!(*c > 0.99, "j={j}: C={c}");
        }
        assert!((order_parameter(&prof).unwrap() - 1.0).abs() < 0.01);
    }

    #[test]
    fn deep_antiferro_alternates_and_af_mode_rectifies() {
        let p = ChainParams::new(6, 0.05, -1.0, 0.0, Boundary::Periodic).unwrap();
        let prof = profile_for(&p);
        assert!(prof.af_mode);
        for (j, c) in prof.values.iter().enumerate() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            assert!(c * sign > 0.99, "j={j}: C={c}");
        }
        // Rectified structure factor treats the staggered state as ordered:
        // six ring separations, each contributing close to 1.
        let s0 = structure_factor(&prof, 0.0);
        assert!(s0 > 5.9 && s0 <= 6.0, "S(0) = {s0}");
        assert!((order_parameter(&prof).unwrap() - 1.0).abs() < 0.01);
    }

    #[test]
    fn paramagnet_has_no_z_correlations() {
        // J = 0, gamma = 0: the ground state is x-polarized, so C(j) = 0
        // for every j > 0 and the correlation length clamps to zero.
        let p = ChainParams::new(6, 1.0, 0.0, 0.0, Boundary::Periodic).unwrap();
        let prof = profile_for(&p);
        assert!((prof.values[0] - 1.0).abs() < 1e-12);
        for c in &prof.values[1..prof.n_sites] {
            assert!(c.abs() < 1e-10, "C = {c}");
        }
        assert_eq!(correlation_length(&prof).unwrap(), 0.0);
    }

    #[test]
    fn structure_factor_and_length_on_synthetic_profile() {
        // Hand-built ring profile over the four distinct separations
        // (the trailing 1.0 is the wrap duplicate and must not count):
        // S(0) = 1 + 0.6 + 0.4 + 0.6 = 2.6, S(pi/2) = 1 - 0.4 = 0.6, so
        // xi = (2/pi) * sqrt(2.6/0.6 - 1) = (2/pi) * sqrt(10/3).
        let prof = CorrelationProfile {
            values: vec![1.0, 0.6, 0.4, 0.6, 1.0],
            af_mode: false,
            reference_site: 1,
            n_sites: 4,
            complete_ring: true,
        };
        assert!((structure_factor(&prof, 0.0) - 2.6).abs() < 1e-12);
        let q1 = std::f64::consts::FRAC_PI_2;
        assert!((structure_factor(&prof, q1) - 0.6).abs() < 1e-12);
        let xi = correlation_length(&prof).unwrap();
        let expect = (2.0 / std::f64::consts::PI) * (10.0f64 / 3.0).sqrt();
        assert!((xi - expect).abs() < 1e-12);
    }

    #[test]
    fn negative_structure_factor_is_an_error() {
        // S(pi/2) = 0.1 - 1.0 < 0: no meaningful length scale.
        let prof = CorrelationProfile {
            values: vec![0.1, 0.0, 1.0, 0.0, 0.1],
            af_mode: false,
            reference_site: 1,
            n_sites: 4,
            complete_ring: true,
        };
        assert!(matches!(
            correlation_length(&prof),
            Err(Error::BadStructureFactor(_))
        ));
    }

    #[test]
    fn open_profile_is_truncated_and_rejects_length() {
        let p = ChainParams::new(5, 1.0, 1.0, 0.0, Boundary::Open).unwrap();
        let spec = full_spectrum(&build_hamiltonian(&p).unwrap()).unwrap();
        let prof = correlation_profile(&spec, &p, 2).unwrap();
        // Reference site 2 on a 5-chain: j = 0..=3.
        assert_eq!(prof.values.len(), 4);
        assert!(!prof.complete_ring);
        assert!(matches!(
            correlation_length(&prof),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn periodic_profile_wraps_shut() {
        let p = ChainParams::new(6, 1.0, 0.8, 0.3, Boundary::Periodic).unwrap();
        let prof = profile_for(&p);
        assert_eq!(prof.values.len(), 7);
        assert!((prof.values[0] - 1.0).abs() < 1e-12);
        assert!((prof.values[6] - 1.0).abs() < 1e-12);
        // Ring symmetry: C(j) = C(N - j).
        for j in 1..3 {
            assert!((prof.values[j] - prof.values[6 - j]).abs() < 1e-9);
        }
    }

    #[test]
    fn euclidean_profile_is_real_even_when_pt_is_broken() {
        // Broken phase: the ground vector is complex, but |psi|^2 weighting
        // keeps C(j) real; nothing to assert beyond the API (values are f64)
        // and sanity of the magnitudes.
        let p = ChainParams::new(6, 1.0, -1.2, 1.6, Boundary::Periodic).unwrap();
        let prof = profile_for(&p);
        for c in &prof.values {
            assert!(c.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn biorthogonal_profile_matches_euclidean_at_gamma_zero() {
        // Hermitian case: left = right, so the two conventions coincide.
        let p = ChainParams::new(4, 1.0, 0.7, 0.0, Boundary::Periodic).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let spec = full_spectrum_with(
            &h,
            &SpectrumOptions {
                compute_left: true,
                ..Default::default()
            },
        )
        .unwrap();
        let euclid = correlation_profile(&spec, &p, 1).unwrap();
        let bi = correlation_profile_biorthogonal(&spec, &p, 1).unwrap();
        for (a, b) in euclid.values.iter().zip(bi.iter()) {
            assert!((a - b.re).abs() < 1e-8);
            assert!(b.im.abs() < 1e-8);
        }
    }

    #[test]
    fn normalization_example() {
        let p = ChainParams::new(4, 4.0, 3.0, 1.0, Boundary::Periodic).unwrap();
        let n = normalize_params(&p).unwrap();
        assert!((n.energy_scale - 5.0).abs() < 1e-14);
        assert!((n.coupling_tilde - 0.6).abs() < 1e-14);
        assert!((n.gain_tilde - 0.2).abs() < 1e-14);
    }

    #[test]
    fn odd_chain_rejects_order_parameter() {
        let p = ChainParams::new(5, 1.0, 1.0, 0.0, Boundary::Open).unwrap();
        let prof = profile_for(&p);
        assert!(matches!(order_parameter(&prof), Err(Error::Unsupported(_))));
    }
}
