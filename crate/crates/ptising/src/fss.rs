//! Finite-size scaling: `xi/N` curve families and critical-point extraction.
//!
//! The correlation length on a ring of `N` sites saturates at `xi ~ N` inside
//! an ordered phase and stays finite outside it, so the dimensionless ratio
//! `xi/N` plotted against a swept coupling produces one curve per system size
//! and the curves intersect at the infinite-size critical point. This module
//! builds those curve families ([`build_scaling_curves`]), locates a single
//! intersection ([`find_crossing`]) and walks a grid of fixed couplings to
//! trace out whole critical lines with uncertainties ([`critical_line`]),
//! including the re-entrant case where one sweep crosses two boundaries.
//!
//! Crossings are located on linear interpolants of the sampled curves; the
//! uncertainty attached to a crossing is the half-spread of the pairwise
//! estimates, not a fit-derived confidence interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, Boundary, ChainParams, MAX_SITES};
use crate::observables::{correlation_length, correlation_profile};
use crate::spectra::{
    extremal_eigenpairs, full_spectrum, translational_ground_pair, DavidsonOptions,
};

/// System sizes used when the caller does not specify any: large enough for
/// the curves to separate cleanly, small enough that every point solves in
/// well under a second.
pub const DEFAULT_SIZES: [usize; 4] = [8, 10, 12, 14];

/// Largest chain diagonalized densely inside curve builds; beyond this the
/// matrix-free solver extracts just the ground pair, which is all the
/// correlation profile needs.
const DENSE_CROSSOVER_SITES: usize = 8;

/// Largest ring retried through the momentum-sector dense path when the
/// matrix-free solver fails to converge. Sector solves cost seconds at 12
/// sites and minutes beyond, so larger rings report the point as missing.
const MOMENTUM_FALLBACK_SITES: usize = 12;

/// Which normalized coupling a scaling run sweeps; the other one is held
/// fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Sweep `gamma/delta` at fixed `J/delta`.
    SweepGamma,
    /// Sweep `J/delta` at fixed `gamma/delta`.
    SweepJ,
}

impl SweepAxis {
    /// Column label of the swept coordinate.
    pub fn swept_label(self) -> &'static str {
        match self {
            SweepAxis::SweepGamma => "gamma_over_delta",
            SweepAxis::SweepJ => "j_over_delta",
        }
    }

    /// Column label of the fixed coordinate.
    pub fn fixed_label(self) -> &'static str {
        match self {
            SweepAxis::SweepGamma => "j_over_delta",
            SweepAxis::SweepJ => "gamma_over_delta",
        }
    }

    /// Chain at one curve point: `fixed` and `swept` are normalized by the
    /// transverse field, whose magnitude (and the boundary) come from `base`.
    pub fn chain(
        self,
        base: &ChainParams,
        n_sites: usize,
        fixed: f64,
        swept: f64,
    ) -> Result<ChainParams> {
        let (j_norm, g_norm) = match self {
            SweepAxis::SweepGamma => (fixed, swept),
            SweepAxis::SweepJ => (swept, fixed),
        };
        ChainParams::new(
            n_sites,
            base.delta,
            j_norm * base.delta,
            g_norm * base.delta,
            base.boundary,
        )
    }

    /// Map (fixed, critical) onto phase-diagram coordinates
    /// `(J/delta, gamma/delta)`.
    pub fn phase_point(self, fixed: f64, critical: f64) -> (f64, f64) {
        match self {
            SweepAxis::SweepGamma => (fixed, critical),
            SweepAxis::SweepJ => (critical, fixed),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepAxis::SweepGamma => write!(f, "sweep_gamma"),
            SweepAxis::SweepJ => write!(f, "sweep_j"),
        }
    }
}

/// One `xi/N` curve: a single system size swept along one axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingCurve {
    /// Swept axis; the complementary coupling is `fixed_value`.
    pub axis: SweepAxis,
    /// Value of the non-swept normalized coupling.
    pub fixed_value: f64,
    /// Ring size the curve belongs to.
    pub n_sites: usize,
    /// `(swept value, xi/N)` samples, strictly increasing in the swept value.
    pub points: Vec<(f64, f64)>,
    /// Swept values where the solve failed; recorded rather than fatal.
    pub missing: Vec<f64>,
}

impl ScalingCurve {
    /// Linear interpolation of `xi/N` at `x`; `None` outside the sampled
    /// range or when the curve has fewer than two points.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let pts = &self.points;
        if pts.len() < 2 || x < pts[0].0 || x > pts[pts.len() - 1].0 {
            return None;
        }
        let seg = pts.partition_point(|p| p.0 <= x);
        if seg == 0 {
            return Some(pts[0].1);
        }
        if seg == pts.len() {
            return Some(pts[pts.len() - 1].1);
        }
        let (x0, y0) = pts[seg - 1];
        let (x1, y1) = pts[seg];
        let t = (x - x0) / (x1 - x0);
        Some(y0 + t * (y1 - y0))
    }

    /// Insert additional samples, keeping the strict ordering invariant.
    /// Existing swept values are left untouched.
    fn merge_points(&mut self, extra: Vec<(f64, f64)>, extra_missing: Vec<f64>) {
        self.points.extend(extra);
        self.points
            .sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        self.points.dedup_by(|a, b| a.0 == b.0);
        self.missing.extend(extra_missing);
        self.missing.sort_by(f64::total_cmp);
        self.missing.dedup();
    }
}

/// A located intersection of the `xi/N` curves, with pairwise detail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingCrossing {
    /// Swept axis the estimate lives on.
    pub axis: SweepAxis,
    /// Value of the non-swept coupling during the sweep.
    pub fixed_value: f64,
    /// Mean of the pairwise crossing estimates.
    pub critical_value: f64,
    /// Half-spread `(max - min) / 2` of the pairwise estimates.
    pub uncertainty: f64,
    /// `(N_a, N_b, crossing value)` for every size pair that produced one.
    pub pair_estimates: Vec<(usize, usize, f64)>,
}

impl ScalingCrossing {
    /// Position in phase-diagram coordinates `(J/delta, gamma/delta)`.
    pub fn phase_point(&self) -> (f64, f64) {
        self.axis.phase_point(self.fixed_value, self.critical_value)
    }
}

/// Knobs for [`critical_line_with`].
#[derive(Debug, Clone, Copy)]
pub struct CriticalLineOptions {
    /// Swept window; `None` picks `[0, 2]` for gamma sweeps and
    /// `[-1.5, 1.5]` for coupling sweeps.
    pub swept_range: Option<(f64, f64)>,
    /// Step of the first scan over the whole window.
    pub coarse_step: f64,
    /// Step of the refinement pass around candidate crossings; kept well
    /// under the 0.02 resolution the interpolation error budget assumes.
    pub refine_step: f64,
    /// Pairwise estimates closer than this are treated as one physical
    /// crossing; distinct transitions in the re-entrant regime sit much
    /// further apart than the finite-size spread this absorbs.
    pub cluster_gap: f64,
    /// Minimum number of size pairs that must agree before a cluster is
    /// reported as a crossing.
    pub min_pairs: usize,
}

impl Default for CriticalLineOptions {
    fn default() -> Self {
        CriticalLineOptions {
            swept_range: None,
            coarse_step: 0.05,
            refine_step: 0.005,
            cluster_gap: 0.15,
            min_pairs: 2,
        }
    }
}

/// Validate a size list for curve building.
fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::Unsupported(format!(
            "scaling needs at least two system sizes, got {}",
            sizes.len()
        )));
    }
    for &n in sizes {
        if n % 2 != 0 {
            return Err(Error::OddPeriodic(n));
        }
        if n < 4 || n > MAX_SITES {
            return Err(Error::BadLength(n));
        }
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != sizes.len() {
        return Err(Error::Unsupported(
            "scaling size list contains duplicates".into(),
        ));
    }
    Ok(())
}

/// Ground state -> correlation profile -> `xi/N` for a single chain.
fn xi_over_n(params: &ChainParams) -> Result<f64> {
    let spec = if params.n_sites <= DENSE_CROSSOVER_SITES {
        full_spectrum(&build_hamiltonian(params)?)?
    } else {
        match extremal_eigenpairs(params, 2, &DavidsonOptions::default()) {
            Ok(spec) => spec,
            // Strong non-normality (gamma > delta at small J) stalls the
            // residual iteration on phantom Ritz directions; the momentum
            // sector path is slower but exact, so rings it can afford get a
            // second chance before the point is declared missing.
            Err(_) if params.n_sites <= MOMENTUM_FALLBACK_SITES => {
                translational_ground_pair(params)?
            }
            Err(e) => return Err(e),
        }
    };
    let profile = correlation_profile(&spec, params, 1)?;
    Ok(correlation_length(&profile)? / params.n_sites as f64)
}

/// Build one `xi/N` curve per system size over `swept_grid`.
///
/// `base` supplies the transverse field and the boundary (periodic is
/// required: the correlation length probes the ring structure factor); its
/// own `n_sites` is ignored. A point whose solve fails is recorded in
/// `missing` and skipped, so one defective corner of a sweep cannot poison a
/// whole curve family.
pub fn build_scaling_curves(
    axis: SweepAxis,
    fixed_value: f64,
    swept_grid: &[f64],
    sizes: &[usize],
    base: &ChainParams,
) -> Result<Vec<ScalingCurve>> {
    check_sizes(sizes)?;
    if swept_grid.is_empty() {
        return Err(Error::Unsupported(
            "scaling sweep grid must not be empty".into(),
        ));
    }
    if base.boundary != Boundary::Periodic {
        return Err(Error::Unsupported(
            "scaling curves require a periodic chain: xi is defined through the ring structure factor".into(),
        ));
    }
    if !fixed_value.is_finite() {
        return Err(Error::NonFinite {
            name: "fixed_value",
            value: fixed_value,
        });
    }
    let mut grid = swept_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut sorted_sizes = sizes.to_vec();
    sorted_sizes.sort_unstable();

    let mut curves = Vec::with_capacity(sorted_sizes.len());
    for &n in &sorted_sizes {
        let mut points = Vec::with_capacity(grid.len());
        let mut missing = Vec::new();
        for &x in &grid {
            match axis
                .chain(base, n, fixed_value, x)
                .and_then(|p| xi_over_n(&p))
            {
                Ok(ratio) => points.push((x, ratio)),
                Err(_) => missing.push(x),
            }
        }
        curves.push(ScalingCurve {
            axis,
            fixed_value,
            n_sites: n,
            points,
            missing,
        });
    }
    Ok(curves)
}

/// One sign change of the difference of two interpolated curves.
#[derive(Debug, Clone, Copy)]
struct PairCrossing {
    /// Swept value of the intersection.
    x: f64,
    /// True when the larger-`N` curve rises above the smaller-`N` one here
    /// (entering the ordered side); false when it drops below.
    upward: bool,
}

/// All intersections of the interpolants of `a` (smaller `N`) and `b`
/// (larger `N`) over their common range, in sweep order.
fn pair_crossings(a: &ScalingCurve, b: &ScalingCurve) -> Vec<PairCrossing> {
    let (Some(af), Some(bf)) = (a.points.first(), b.points.first()) else {
        return Vec::new();
    };
    let (al, bl) = (a.points.last().unwrap(), b.points.last().unwrap());
    let lo = af.0.max(bf.0);
    let hi = al.0.min(bl.0);
    if hi <= lo {
        return Vec::new();
    }
    // Breakpoints of the piecewise-linear difference: union of both sample
    // sets restricted to the overlap.
    let mut xs: Vec<f64> = a
        .points
        .iter()
        .chain(b.points.iter())
        .map(|p| p.0)
        .filter(|&x| x >= lo && x <= hi)
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut out = Vec::new();
    // Walk breakpoints keeping the last point where the difference was
    // nonzero; an exactly-zero sample counts as a crossing only if the sign
    // actually flips across it (a tangency does not).
    let mut prev: Option<(f64, f64)> = None;
    let mut pending_zero: Option<f64> = None;
    for &x in &xs {
        let (Some(ya), Some(yb)) = (a.value_at(x), b.value_at(x)) else {
            continue;
        };
        let d = yb - ya;
        if d == 0.0 {
            pending_zero = Some(x);
            continue;
        }
        if let Some((xp, dp)) = prev {
            if dp * d < 0.0 {
                let x_cross = pending_zero.unwrap_or_else(|| {
                    // Interior root of the linear segment.
                    xp + dp / (dp - d) * (x - xp)
                });
                out.push(PairCrossing {
                    x: x_cross,
                    upward: d > 0.0,
                });
            }
        }
        prev = Some((x, d));
        pending_zero = None;
    }
    out
}

/// Check that curves form one coherent family and return them sorted by
/// system size.
fn coherent_family<'c>(curves: &'c [ScalingCurve]) -> Result<Vec<&'c ScalingCurve>> {
    if curves.len() < 2 {
        return Err(Error::Unsupported(format!(
            "crossing extraction needs at least two curves, got {}",
            curves.len()
        )));
    }
    let axis = curves[0].axis;
    let fixed = curves[0].fixed_value;
    for c in curves {
        if c.axis != axis || c.fixed_value != fixed {
            return Err(Error::Unsupported(
                "curves mix sweep axes or fixed values; build them in one call".into(),
            ));
        }
    }
    let mut by_size: Vec<&ScalingCurve> = curves.iter().collect();
    by_size.sort_by_key(|c| c.n_sites);
    if by_size.windows(2).any(|w| w[0].n_sites == w[1].n_sites) {
        return Err(Error::Unsupported(
            "two curves share the same system size".into(),
        ));
    }
    Ok(by_size)
}

/// Locate the single crossing of a curve family.
///
/// Each size pair contributes the *largest* swept value where its two
/// interpolants intersect — the boundary of the region in which the
/// larger-`N` curve lies above the smaller-`N` one, which is the ordered
/// side. Pairs without any intersection are omitted; if every pair is empty
/// the family has no crossing and an error is returned.
pub fn find_crossing(curves: &[ScalingCurve]) -> Result<ScalingCrossing> {
    let family = coherent_family(curves)?;
    let mut pair_estimates = Vec::new();
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            if let Some(c) = pair_crossings(family[i], family[j]).last() {
                pair_estimates.push((family[i].n_sites, family[j].n_sites, c.x));
            }
        }
    }
    if pair_estimates.is_empty() {
        return Err(Error::NoCrossing(format!(
            "no size pair out of {} curves intersects in the sampled window",
            family.len()
        )));
    }
    Ok(aggregate(
        family[0].axis,
        family[0].fixed_value,
        pair_estimates,
    ))
}

/// Mean and half-spread over pairwise estimates.
fn aggregate(
    axis: SweepAxis,
    fixed_value: f64,
    pair_estimates: Vec<(usize, usize, f64)>,
) -> ScalingCrossing {
    let xs: Vec<f64> = pair_estimates.iter().map(|p| p.2).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    ScalingCrossing {
        axis,
        fixed_value,
        critical_value: mean,
        uncertainty: (max - min) / 2.0,
        pair_estimates,
    }
}

/// Group pairwise crossings (possibly several per pair) into physical
/// crossings. Estimates are first split by orientation, then clustered by
/// proximity, so a narrow re-entrant bubble cannot be fused into one point.
fn cluster_crossings(
    family: &[&ScalingCurve],
    opts: &CriticalLineOptions,
) -> Vec<ScalingCrossing> {
    let mut tagged: Vec<(usize, usize, PairCrossing)> = Vec::new();
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            for c in pair_crossings(family[i], family[j]) {
                tagged.push((family[i].n_sites, family[j].n_sites, c));
            }
        }
    }
    let mut crossings = Vec::new();
    for upward in [false, true] {
        let mut group: Vec<&(usize, usize, PairCrossing)> = tagged
            .iter()
            .filter(|(_, _, c)| c.upward == upward)
            .collect();
        group.sort_by(|a, b| a.2.x.total_cmp(&b.2.x));
        let mut start = 0;
        while start < group.len() {
            let mut end = start + 1;
            while end < group.len() && group[end].2.x - group[end - 1].2.x <= opts.cluster_gap {
                end += 1;
            }
            // One estimate per size pair: the member nearest the cluster mean
            // (a pair rarely contributes twice to one cluster, but a grazing
            // intersection can).
            let cluster = &group[start..end];
            let center =
                cluster.iter().map(|e| e.2.x).sum::<f64>() / cluster.len() as f64;
            let mut per_pair: Vec<(usize, usize, f64)> = Vec::new();
            for &&(na, nb, c) in cluster {
                match per_pair.iter_mut().find(|p| p.0 == na && p.1 == nb) {
                    Some(slot) => {
                        if (c.x - center).abs() < (slot.2 - center).abs() {
                            slot.2 = c.x;
                        }
                    }
                    None => per_pair.push((na, nb, c.x)),
                }
            }
            if per_pair.len() >= opts.min_pairs {
                per_pair.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
                crossings.push(aggregate(
                    family[0].axis,
                    family[0].fixed_value,
                    per_pair,
                ));
            }
            start = end;
        }
    }
    crossings.sort_by(|a, b| a.critical_value.total_cmp(&b.critical_value));
    crossings
}

/// Evenly spaced grid over `[lo, hi]` including both ends.
fn arange(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round().max(1.0) as usize;
    let mut xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    if let Some(last) = xs.last_mut() {
        *last = hi;
    }
    xs
}

/// Trace the critical line over a grid of fixed couplings with default
/// options.
pub fn critical_line(
    fixed_grid: &[f64],
    axis: SweepAxis,
    sizes: &[usize],
    base: &ChainParams,
) -> Result<Vec<ScalingCrossing>> {
    critical_line_with(fixed_grid, axis, sizes, base, &CriticalLineOptions::default())
}

/// Trace the critical line over a grid of fixed couplings.
///
/// Per fixed value: a coarse sweep locates candidate intersections, the
/// windows around them are re-sampled at `refine_step`, and every crossing
/// that at least `min_pairs` size pairs agree on is emitted. Fixed values
/// without any crossing contribute nothing (a per-point miss, not an
/// error); re-entrant sweeps contribute several crossings in sweep order.
pub fn critical_line_with(
    fixed_grid: &[f64],
    axis: SweepAxis,
    sizes: &[usize],
    base: &ChainParams,
    opts: &CriticalLineOptions,
) -> Result<Vec<ScalingCrossing>> {
    if fixed_grid.is_empty() {
        return Err(Error::Unsupported(
            "critical_line needs at least one fixed value".into(),
        ));
    }
    if !(opts.coarse_step > 0.0) || !(opts.refine_step > 0.0) {
        return Err(Error::Config(format!(
            "grid steps must be positive, got coarse {} / refine {}",
            opts.coarse_step, opts.refine_step
        )));
    }
    let (lo, hi) = opts.swept_range.unwrap_or(match axis {
        SweepAxis::SweepGamma => (0.0, 2.0),
        SweepAxis::SweepJ => (-1.5, 1.5),
    });
    if !(hi > lo) {
        return Err(Error::Config(format!(
            "swept range [{lo}, {hi}] is empty"
        )));
    }

    let mut line = Vec::new();
    for &fixed in fixed_grid {
        let coarse = arange(lo, hi, opts.coarse_step);
        let mut curves = build_scaling_curves(axis, fixed, &coarse, sizes, base)?;
        let family = coherent_family(&curves)?;

        // Candidate windows from the coarse pass, padded by one coarse step
        // on each side.
        let mut windows: Vec<(f64, f64)> = Vec::new();
        for i in 0..family.len() {
            for j in i + 1..family.len() {
                for c in pair_crossings(family[i], family[j]) {
                    windows.push((
                        (c.x - 2.0 * opts.coarse_step).max(lo),
                        (c.x + 2.0 * opts.coarse_step).min(hi),
                    ));
                }
            }
        }
        windows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for w in windows {
            match merged.last_mut() {
                Some(m) if w.0 <= m.1 => m.1 = m.1.max(w.1),
                _ => merged.push(w),
            }
        }

        // Refinement pass: re-sample each window densely and fold the new
        // points into the coarse curves.
        for (wlo, whi) in merged {
            let fine = arange(wlo, whi, opts.refine_step);
            let refined = build_scaling_curves(axis, fixed, &fine, sizes, base)?;
            for (curve, extra) in curves.iter_mut().zip(refined) {
                let existing: Vec<f64> = curve.points.iter().map(|p| p.0).collect();
                let fresh: Vec<(f64, f64)> = extra
                    .points
                    .into_iter()
                    .filter(|p| !existing.contains(&p.0))
                    .collect();
                curve.merge_points(fresh, extra.missing);
            }
        }

        let family = coherent_family(&curves)?;
        line.extend(cluster_crossings(&family, opts));
    }
    Ok(line)
}
