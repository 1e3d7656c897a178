//! Bisection search for exceptional points along one-parameter sweeps.
//!
//! A sweep fixes all chain parameters but one and asks where the spectrum
//! first develops an imaginary part. The swept coordinate can be the gain,
//! the bare coupling, or the dimensionless coupling `J / sqrt(J^2 + delta^2)`
//! at fixed dimensionless gain (useful for tracing the band diagrams, where
//! both axes are normalized by the same scale).
//!
//! The order estimate distinguishes square-root (order 2) from cube-root
//! (order 3) branch points by counting how many eigenvalues crowd around the
//! freshly broken conjugate pair at the end of the bisection: an order-3
//! point pulls a third level into the cluster, an order-2 point leaves the
//! rest of the spectrum at finite distance.

use ndarray_linalg::EigVals;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian_with_limit, ChainParams};
use crate::spectra::{extremal_eigenpairs, DavidsonOptions, PT_TOL_RELATIVE};

/// Which coordinate a one-parameter sweep moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Sweep the gain `gamma` at fixed coupling.
    Gain,
    /// Sweep the coupling `J` at fixed gain.
    Coupling,
    /// Sweep the dimensionless coupling `Jt = J / sqrt(J^2 + delta^2)` at
    /// fixed dimensionless gain `gt = gamma / sqrt(J^2 + delta^2)`.
    CouplingTilde {
        /// The fixed dimensionless gain.
        gamma_tilde: f64,
    },
}

impl SweepParam {
    /// Chain at swept coordinate `x`, starting from `base`.
    pub fn chain_at(&self, base: &ChainParams, x: f64) -> Result<ChainParams> {
        let mut p = *base;
        match *self {
            SweepParam::Gain => p.gain = x,
            SweepParam::Coupling => p.coupling = x,
            SweepParam::CouplingTilde { gamma_tilde } => {
                if !(-1.0..1.0).contains(&x) {
                    return Err(Error::Config(format!(
                        "dimensionless coupling must lie in (-1, 1), got {x}"
                    )));
                }
                // Invert Jt = J / sqrt(J^2 + delta^2) at fixed delta:
                // J = delta * Jt / sqrt(1 - Jt^2), and the shared scale is
                // then delta / sqrt(1 - Jt^2).
                let denom = (1.0 - x * x).sqrt();
                p.coupling = base.delta * x / denom;
                p.gain = gamma_tilde * base.delta / denom;
            }
        }
        p.validate()?;
        Ok(p)
    }

    /// Name of the swept coordinate, for reports.
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Gain => "gain",
            SweepParam::Coupling => "coupling",
            SweepParam::CouplingTilde { .. } => "coupling_tilde",
        }
    }

    /// Name/value of the parameter held fixed, for reports.
    pub fn fixed_of(&self, base: &ChainParams) -> (String, f64) {
        match self {
            SweepParam::Gain => ("coupling".into(), base.coupling),
            SweepParam::Coupling => ("gain".into(), base.gain),
            SweepParam::CouplingTilde { gamma_tilde } => {
                ("gamma_tilde".into(), *gamma_tilde)
            }
        }
    }
}

/// Which eigensolver backs the sweep evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Dense for `N <= 10`, iterative above.
    Auto,
    /// Always dense (full spectrum; exact cluster counting).
    Dense,
    /// Always Davidson with this many extremal pairs. The order estimate and
    /// the breaking test then only see the low-real-part window.
    Iterative {
        /// Number of extremal eigenpairs to resolve.
        k: usize,
    },
}

/// Options for [`find_exception_point`].
#[derive(Debug, Clone, Copy)]
pub struct ExceptionPointOptions {
    /// Absolute bisection tolerance on the swept coordinate.
    pub tol: f64,
    /// Absolute override for the imaginary-part detection threshold;
    /// defaults to `PT_TOL_RELATIVE * energy_scale` at each evaluation.
    pub im_detect: Option<f64>,
    /// Cluster radius for the order estimate, relative to the energy scale.
    pub cluster_tol: f64,
    /// Backing solver.
    pub solver: SolverChoice,
    /// Hard cap on bisection steps.
    pub max_bisections: usize,
}

impl Default for ExceptionPointOptions {
    fn default() -> Self {
        ExceptionPointOptions {
            tol: 1e-8,
            im_detect: None,
            // Calibrated on the N = 4 band diagrams: the cube-root splitting
            // left by a 1e-8 bracket is ~1e-3 in scale units, while the
            // nearest bystander level at an order-2 point sits ~0.1 away.
            cluster_tol: 0.02,
            solver: SolverChoice::Auto,
            max_bisections: 200,
        }
    }
}

/// A located exceptional point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExceptionPoint {
    /// Name of the swept coordinate.
    pub swept: String,
    /// Name and value of the parameter held fixed during the sweep.
    pub fixed_param: (String, f64),
    /// Swept-coordinate value of the exceptional point (bracket midpoint).
    pub critical_value: f64,
    /// Estimated order: 2 for a plain pair coalescence, 3 when a third
    /// level joins.
    pub order_estimate: u8,
    /// Final bracket `(preserved side, broken side)` — not necessarily
    /// ascending.
    pub bracket: (f64, f64),
}

/// Eigenvalues only, `(Re, Im)`-sorted, via the solver choice.
fn spectrum_values(
    params: &ChainParams,
    solver: SolverChoice,
) -> Result<Vec<C64>> {
    let dense = match solver {
        SolverChoice::Auto => params.n_sites <= 10,
        SolverChoice::Dense => true,
        SolverChoice::Iterative { .. } => false,
    };
    let mut vals: Vec<C64> = if dense {
        let h = build_hamiltonian_with_limit(params, params.n_sites)?;
        h.as_array()
            .eigvals()
            .map_err(|e| Error::Eigensolver(e.to_string()))?
            .to_vec()
    } else {
        let k = match solver {
            SolverChoice::Iterative { k } => k,
            _ => 6,
        };
        extremal_eigenpairs(params, k.max(2), &DavidsonOptions::default())?
            .eigenvalues
    };
    vals.sort_by(|a, b| super::value_order(*a, *b));
    Ok(vals)
}

fn complex_count(
    vals: &[C64],
    params: &ChainParams,
    opts: &ExceptionPointOptions,
) -> usize {
    let tol = opts
        .im_detect
        .unwrap_or(PT_TOL_RELATIVE * params.energy_scale());
    vals.iter().filter(|e| e.im.abs() > tol).count()
}

/// Locate the exceptional point inside `bracket` along `swept`, starting
/// from `base`.
///
/// The number of complex eigenvalues must differ between the two bracket
/// endpoints; the search bisects on "complex count >= count at the richer
/// endpoint" until the bracket width drops below `opts.tol`, then estimates
/// the order from the eigenvalue cluster around the freshly broken pair.
/// For a bracket straddling the first PT breaking this is the plain
/// preserved/broken bisection; it also resolves interior transitions where
/// an additional pair breaks inside an already-broken region.
pub fn find_exception_point(
    base: &ChainParams,
    swept: SweepParam,
    bracket: (f64, f64),
    opts: &ExceptionPointOptions,
) -> Result<ExceptionPoint> {
    base.validate()?;
    let (mut a, mut b) = bracket;
    let pa = swept.chain_at(base, a)?;
    let pb = swept.chain_at(base, b)?;
    let va = spectrum_values(&pa, opts.solver)?;
    let vb = spectrum_values(&pb, opts.solver)?;
    let count_a = complex_count(&va, &pa, opts);
    let count_b = complex_count(&vb, &pb, opts);
    if count_a == count_b {
        return Err(Error::BadBracket {
            lo: a,
            hi: b,
            what: "PT transition (both endpoints have the same complex count)",
        });
    }
    // Keep `a` on the poorer side throughout ("preserved" relative to this
    // transition), and bisect on reaching the richer side's count.
    if count_a > count_b {
        std::mem::swap(&mut a, &mut b);
    }
    let threshold = count_a.max(count_b);

    let mut steps = 0usize;
    while (b - a).abs() > opts.tol {
        if steps >= opts.max_bisections {
            return Err(Error::NoConvergence {
                iterations: steps,
                residual: (b - a).abs(),
            });
        }
        steps += 1;
        let mid = 0.5 * (a + b);
        let pm = swept.chain_at(base, mid)?;
        let vm = spectrum_values(&pm, opts.solver)?;
        if complex_count(&vm, &pm, opts) >= threshold {
            b = mid;
        } else {
            a = mid;
        }
    }

    // Order estimate at the broken edge of the final bracket: find the
    // conjugate pair of smallest |Im| (the one that just broke) and count
    // eigenvalues within the cluster radius of its centre.
    let pb = swept.chain_at(base, b)?;
    let vals = spectrum_values(&pb, opts.solver)?;
    let order_estimate = estimate_order(&vals, &pb, opts);

    Ok(ExceptionPoint {
        swept: swept.name().into(),
        fixed_param: swept.fixed_of(base),
        critical_value: 0.5 * (a + b),
        order_estimate,
        bracket: (a, b),
    })
}

fn estimate_order(
    vals: &[C64],
    params: &ChainParams,
    opts: &ExceptionPointOptions,
) -> u8 {
    let scale = params.energy_scale();
    let im_tol = opts.im_detect.unwrap_or(PT_TOL_RELATIVE * scale);
    // Freshly broken pair: the complex eigenvalue of smallest |Im| above the
    // detection threshold. Pre-existing pairs broke earlier in the sweep and
    // carry larger imaginary parts.
    let fresh = vals
        .iter()
        .filter(|e| e.im > im_tol)
        .min_by(|x, y| x.im.abs().total_cmp(&y.im.abs()));
    let Some(&fresh) = fresh else {
        return 2;
    };
    let center = C64::new(fresh.re, 0.0);
    let radius = opts.cluster_tol * scale;
    let count = vals.iter().filter(|e| (*e - center).norm() <= radius).count();
    if count >= 3 {
        3
    } else {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Boundary;

    #[test]
    fn single_site_gain_sweep_breaks_at_delta() {
        // Decoupled spins break exactly at gamma = delta.
        let base = ChainParams::new(2, 0.8, 0.0, 0.0, Boundary::Open).unwrap();
        let ep = find_exception_point(
            &base,
            SweepParam::Gain,
            (0.1, 2.0),
            &ExceptionPointOptions::default(),
        )
        .unwrap();
        assert!((ep.critical_value - 0.8).abs() < 1e-6, "{}", ep.critical_value);
        assert_eq!(ep.fixed_param, ("coupling".into(), 0.0));
        assert_eq!(ep.swept, "gain");
    }

    #[test]
    fn rejects_unbroken_bracket() {
        let base = ChainParams::new(2, 1.0, 0.0, 0.0, Boundary::Open).unwrap();
        let err = find_exception_point(
            &base,
            SweepParam::Gain,
            (0.1, 0.5),
            &ExceptionPointOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::BadBracket { .. }));
    }

    #[test]
    fn reversed_bracket_is_accepted() {
        // Broken end first: the search normalizes orientation itself.
        let base = ChainParams::new(2, 0.8, 0.0, 0.0, Boundary::Open).unwrap();
        let ep = find_exception_point(
            &base,
            SweepParam::Gain,
            (2.0, 0.1),
            &ExceptionPointOptions::default(),
        )
        .unwrap();
        assert!((ep.critical_value - 0.8).abs() < 1e-6);
        // Bracket is reported (preserved, broken).
        assert!(ep.bracket.0 < ep.critical_value);
        assert!(ep.bracket.1 > ep.critical_value);
    }

    #[test]
    fn coupling_tilde_parametrization_round_trips() {
        let base = ChainParams::new(4, 1.0, 0.0, 0.0, Boundary::Open).unwrap();
        let sweep = SweepParam::CouplingTilde { gamma_tilde: 0.3 };
        let p = sweep.chain_at(&base, -0.6).unwrap();
        let scale = p.energy_scale();
        assert!((p.coupling / scale - (-0.6)).abs() < 1e-12);
        assert!((p.gain / scale - 0.3).abs() < 1e-12);
        assert!(sweep.chain_at(&base, 1.0).is_err());
    }
}
