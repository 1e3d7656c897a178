//! Deterministic parameter sweeps over the `(J/delta, gamma/delta)` plane.
//!
//! A sweep is described by a [`SweepSpec`]: a rectangular grid of coupling
//! and gain ratios, a list of system sizes, and the set of observables to
//! record at every grid point. [`run_sweep`] evaluates the grid with a
//! worker pool and returns a [`GridResult`] whose records are indexed so
//! that iteration order equals the sorted `(J/delta, gamma/delta, N)` order
//! used by every dataset emitter.
//!
//! Two properties are load-bearing and tested rather than assumed:
//!
//! * **Determinism.** The result is a pure function of the spec. Worker
//!   count, scheduling order and checkpoint interruptions change neither the
//!   values nor their order, so emitted datasets are byte-identical across
//!   runs. Each point is solved by a fixed single-threaded recipe; the pool
//!   only decides *when* a point is computed, never *how*.
//! * **Isolation.** A grid point whose solve fails records the failure in
//!   its own `error` field and leaves the rest of the sweep alone. Only
//!   storage problems (an unwritable checkpoint) abort the run, because at
//!   that moment every further result would be lost on interruption anyway.
//!
//! Checkpointing is directory-based: `spec.json` freezes the exact spec
//! with its SHA-256 hash, and `points.jsonl` accumulates one line per
//! finished point. Resuming recomputes nothing that is already on disk and
//! refuses to continue when the stored hash disagrees with the requested
//! spec — silently mixing two different sweeps in one file is the kind of
//! mistake that produces plausible-looking wrong figures. Bit-exactness of
//! resumed values relies on the `float_roundtrip` feature of `serde_json`:
//! its default float parser is fast but off by an ulp on some inputs, which
//! is enough to break byte-identical re-emission.
//!
//! [`assemble_phase_diagram`] merges three independent boundary estimators
//! (finite-size crossings, the gap threshold contour, and the cluster
//! mean-field lines) with per-point region labels into one dataset shaped
//! like the phase-diagram figure.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, Boundary, ChainParams};
use crate::observables::{correlation_length, correlation_profile, order_parameter};
use crate::spectra::{
    extremal_eigenpairs, full_spectrum, translational_ground_pair, DavidsonOptions, PtClass,
    SpectrumResult,
};

/// Below this size the dense solver is cheaper than building a Davidson
/// subspace, and it never stalls.
const DENSE_CROSSOVER_SITES: usize = 8;

/// Periodic rings up to this size fall back to the momentum-sector solver
/// when Davidson stalls on a strongly non-normal point.
const MOMENTUM_FALLBACK_SITES: usize = 12;

/// Open chains (no momentum sectors available) fall back to the dense
/// solver up to this size; beyond it a stalled point is reported as failed.
const OPEN_DENSE_FALLBACK_SITES: usize = 10;

/// Relative level of the gap threshold contour: a point counts as gapless
/// in the PT sense when `|Im(e1 - e0)| > GAP_IM_THRESHOLD_RELATIVE *
/// energy_scale`.
pub const GAP_IM_THRESHOLD_RELATIVE: f64 = 1e-6;

/// Order-parameter level separating the ferromagnetically ordered region
/// from the paramagnet when labeling phase-diagram points. The label is a
/// coarse per-point classification; the actual boundary curves come from
/// the finite-size and cluster estimators drawn on top.
pub const ORDER_REGION_THRESHOLD: f64 = 0.5;

/// How many finished points are buffered before the checkpoint file is
/// flushed. Small enough that an interrupted run loses little work, large
/// enough that the writer does not serialize the pool.
const CHECKPOINT_BATCH: usize = 64;

/// Observables that can be recorded at a grid point.
///
/// `Gap` and `Spectrum` come straight from the eigensolution; the other
/// three need the ground-state correlation profile. Requesting only what a
/// figure needs keeps large maps cheap.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Complex gap `e1 - e0` between the designated ground and first
    /// excited state.
    Gap,
    /// Long-distance order parameter `sqrt(|C(N/2)|)`.
    OrderParameter,
    /// Correlation length from the ring structure factor.
    Xi,
    /// PT classification of the low-lying pair.
    PtClass,
    /// Designated ground-state energy itself.
    Spectrum,
}

impl Observable {
    /// Every observable, in the canonical order used by the CSV schema.
    pub fn all() -> [Observable; 5] {
        [
            Observable::Gap,
            Observable::OrderParameter,
            Observable::Xi,
            Observable::PtClass,
            Observable::Spectrum,
        ]
    }
}

/// Full description of a sweep: the grid, the sizes and the observables.
///
/// The spec is the unit of reproducibility: its canonical JSON form is
/// hashed into checkpoints, and every emitted dataset is a pure function of
/// it. Ranges are in dimensionless units (`J/delta`, `gamma/delta`); the
/// actual couplings handed to the solver are scaled by `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    /// Swept coupling ratio `J/delta` as `(min, max, points)`.
    pub j_range: (f64, f64, usize),
    /// Swept gain ratio `gamma/delta` as `(min, max, points)`.
    pub gamma_range: (f64, f64, usize),
    /// System sizes to evaluate at every grid node.
    pub sizes: Vec<usize>,
    /// Transverse field setting the unit of energy.
    pub delta: f64,
    /// Boundary condition of every chain in the sweep.
    pub boundary: Boundary,
    /// Which observables to record.
    pub observables: Vec<Observable>,
}

impl Default for SweepSpec {
    /// The documented default window: `J/delta` over `[-1.5, 1.5]` with 121
    /// columns and `gamma/delta` over `[0, 2]` with 81 rows, one size, all
    /// map observables. This resolves every feature of the phase diagram at
    /// a step of 0.025 in both directions.
    fn default() -> Self {
        SweepSpec {
            j_range: (-1.5, 1.5, 121),
            gamma_range: (0.0, 2.0, 81),
            sizes: vec![10],
            delta: 1.0,
            boundary: Boundary::Periodic,
            observables: vec![
                Observable::Gap,
                Observable::OrderParameter,
                Observable::Xi,
                Observable::PtClass,
            ],
        }
    }
}

impl SweepSpec {
    /// Check the grid geometry.
    ///
    /// Only the shape of the sweep is validated here: finite ranges,
    /// ordered endpoints, at least one point, size and observable lists
    /// non-empty. Whether an individual `(J, gamma, N)` combination is a
    /// valid chain is decided per point by [`ChainParams::new`], so one
    /// unsupported combination marks its own records as failed instead of
    /// rejecting the entire sweep.
    pub fn validate(&self) -> Result<()> {
        for (name, range) in [("j_range", self.j_range), ("gamma_range", self.gamma_range)] {
            let (lo, hi, steps) = range;
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!(
                    "{name} endpoints must be finite, got ({lo}, {hi})"
                )));
            }
            if steps == 0 {
                return Err(Error::Config(format!("{name} needs at least one point")));
            }
            if steps > 1 && lo >= hi {
                return Err(Error::Config(format!(
                    "{name} with {steps} points needs min < max, got ({lo}, {hi})"
                )));
            }
        }
        if self.sizes.is_empty() {
            return Err(Error::Config("size list must not be empty".into()));
        }
        let unique: BTreeSet<usize> = self.sizes.iter().copied().collect();
        if unique.len() != self.sizes.len() {
            return Err(Error::Config("size list contains duplicates".into()));
        }
        if self.observables.is_empty() {
            return Err(Error::Config("observable set must not be empty".into()));
        }
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(Error::Config(format!(
                "delta must be positive and finite, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Grid values of `J/delta`, ascending, endpoints exact for `points > 1`.
    pub fn j_values(&self) -> Vec<f64> {
        linspace(self.j_range)
    }

    /// Grid values of `gamma/delta`, ascending.
    pub fn gamma_values(&self) -> Vec<f64> {
        linspace(self.gamma_range)
    }

    /// Sorted copy of the size list; index order within one grid node.
    pub fn sorted_sizes(&self) -> Vec<usize> {
        let mut sizes = self.sizes.clone();
        sizes.sort_unstable();
        sizes
    }

    /// Total number of `(J, gamma, N)` evaluations in the sweep.
    pub fn total_points(&self) -> usize {
        self.j_range.2 * self.gamma_range.2 * self.sizes.len()
    }

    /// Decode a flat index into `(J/delta, gamma/delta, n_sites)`.
    ///
    /// The flat order is `J` outermost, then `gamma`, then size — exactly
    /// the sorted order of the emitted rows, so a fully populated record
    /// vector needs no further sorting.
    pub fn point_at(&self, index: usize) -> (f64, f64, usize) {
        let sizes = self.sorted_sizes();
        let ng = self.gamma_range.2;
        let ns = sizes.len();
        let j_idx = index / (ng * ns);
        let g_idx = (index / ns) % ng;
        let s_idx = index % ns;
        (
            linspace_at(self.j_range, j_idx),
            linspace_at(self.gamma_range, g_idx),
            sizes[s_idx],
        )
    }

    /// Canonical serialized form; the basis of the checkpoint hash.
    pub fn canonical_json(&self) -> String {
        // Struct field order is fixed at compile time, so this serialization
        // is stable across runs and platforms.
        serde_json::to_string_pretty(self).expect("spec serialization cannot fail")
    }

    /// SHA-256 of the canonical JSON, hex-encoded.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_json().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Values of a `(min, max, points)` range.
fn linspace(range: (f64, f64, usize)) -> Vec<f64> {
    (0..range.2).map(|i| linspace_at(range, i)).collect()
}

/// Single value of a `(min, max, points)` range.
fn linspace_at(range: (f64, f64, usize), i: usize) -> f64 {
    let (lo, hi, steps) = range;
    if steps <= 1 {
        lo
    } else {
        lo + (hi - lo) * i as f64 / (steps - 1) as f64
    }
}

/// One evaluated grid point.
///
/// Observables that were not requested, or whose computation failed, are
/// `None`; a failure additionally records its reason in `error`. Keeping
/// the partial observables instead of discarding the whole point means a
/// map with one undefined column still plots everywhere else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Coupling ratio of this point.
    pub j_over_delta: f64,
    /// Gain ratio of this point.
    pub gamma_over_delta: f64,
    /// Chain length of this point.
    pub n_sites: usize,
    /// Real part of the gap `e1 - e0`.
    pub re_gap: Option<f64>,
    /// Imaginary part of the gap.
    pub im_gap: Option<f64>,
    /// Order parameter `sqrt(|C(N/2)|)`.
    pub order_param: Option<f64>,
    /// Correlation length in units of the lattice spacing.
    pub xi: Option<f64>,
    /// PT classification of the low-lying pair.
    pub pt_class: Option<PtClass>,
    /// Real part of the designated ground energy.
    pub re_ground: Option<f64>,
    /// Imaginary part of the designated ground energy.
    pub im_ground: Option<f64>,
    /// Why parts of this point are missing, when they are.
    pub error: Option<String>,
}

/// A sweep in progress or finished: the spec plus one slot per grid index.
///
/// The slot vector doubles as the completion bitmap — `None` marks a point
/// that has not been computed yet (as opposed to one that was computed and
/// failed, which holds a record with its `error` field set).
#[derive(Debug, Clone)]
pub struct GridResult {
    /// The spec that produced (or is producing) this grid.
    pub spec: SweepSpec,
    /// One slot per flat grid index, in `(J, gamma, N)` sorted order.
    pub points: Vec<Option<GridPoint>>,
}

impl GridResult {
    /// Empty result with every slot pending.
    pub fn empty(spec: SweepSpec) -> Self {
        let total = spec.total_points();
        GridResult {
            spec,
            points: vec![None; total],
        }
    }

    /// Number of computed points.
    pub fn completed(&self) -> usize {
        self.points.iter().filter(|p| p.is_some()).count()
    }

    /// True when every slot is filled.
    pub fn is_complete(&self) -> bool {
        self.points.iter().all(|p| p.is_some())
    }

    /// Completion bitmap, one flag per flat index.
    pub fn completion_bitmap(&self) -> Vec<bool> {
        self.points.iter().map(|p| p.is_some()).collect()
    }

    /// Computed records in `(J/delta, gamma/delta, N)` sorted order.
    pub fn records(&self) -> impl Iterator<Item = &GridPoint> {
        self.points.iter().filter_map(|p| p.as_ref())
    }

    /// The record for an exact grid coordinate, if computed.
    pub fn find(&self, j: f64, gamma: f64, n_sites: usize) -> Option<&GridPoint> {
        self.records()
            .find(|p| p.j_over_delta == j && p.gamma_over_delta == gamma && p.n_sites == n_sites)
    }
}

/// Execution knobs for [`run_sweep`], all orthogonal to the result.
#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses the process-global pool.
    pub workers: Option<usize>,
    /// Checkpoint directory; `None` disables checkpointing.
    pub checkpoint: Option<PathBuf>,
    /// Stop after computing this many new points (staged runs and
    /// interruption tests); `None` runs to completion.
    pub max_new_points: Option<usize>,
}

/// Evaluate a sweep, resuming from `opts.checkpoint` when it already holds
/// partial results for the same spec.
///
/// Per-point numerical failures are recorded in the point itself; the only
/// fatal errors are an invalid spec, a checkpoint that belongs to a
/// different spec, and storage problems.
pub fn run_sweep(spec: &SweepSpec, opts: &SweepOptions) -> Result<GridResult> {
    spec.validate()?;
    let mut result = GridResult::empty(spec.clone());

    let mut writer = match &opts.checkpoint {
        Some(dir) => Some(open_checkpoint(spec, dir, &mut result)?),
        None => None,
    };

    let mut pending: Vec<usize> = (0..result.points.len())
        .filter(|&i| result.points[i].is_none())
        .collect();
    if let Some(limit) = opts.max_new_points {
        pending.truncate(limit);
    }

    let pool = match opts.workers {
        Some(workers) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?,
        ),
        None => None,
    };

    // Batches keep the checkpoint fresh without a long-lived writer thread:
    // workers fill a batch in parallel, then a single sequential pass
    // appends it in index order. The file contents end up deterministic for
    // the same reason the records do.
    for batch in pending.chunks(CHECKPOINT_BATCH) {
        let evaluate = || {
            use rayon::prelude::*;
            batch
                .par_iter()
                .map(|&idx| (idx, evaluate_point(spec, idx)))
                .collect::<Vec<_>>()
        };
        let mut computed = match &pool {
            Some(pool) => pool.install(evaluate),
            None => evaluate(),
        };
        computed.sort_by_key(|(idx, _)| *idx);
        for (idx, point) in computed {
            if let Some(writer) = writer.as_mut() {
                writer.append(idx, &point)?;
            }
            result.points[idx] = Some(point);
        }
        if let Some(writer) = writer.as_mut() {
            writer.flush()?;
        }
    }
    Ok(result)
}

/// Solve the low pair of one chain with the standard fallback ladder.
fn solve_low_pair(params: &ChainParams) -> Result<SpectrumResult> {
    if params.n_sites <= DENSE_CROSSOVER_SITES {
        return full_spectrum(&build_hamiltonian(params)?);
    }
    match extremal_eigenpairs(params, 2, &DavidsonOptions::default()) {
        Ok(spec) => Ok(spec),
        // Davidson stalls on phantom Ritz directions deep in the broken
        // phase; rings small enough for the momentum solver and chains small
        // enough for the dense one get an exact second chance.
        Err(_)
            if params.boundary == Boundary::Periodic
                && params.n_sites <= MOMENTUM_FALLBACK_SITES =>
        {
            translational_ground_pair(params)
        }
        Err(_) if params.n_sites <= OPEN_DENSE_FALLBACK_SITES => {
            full_spectrum(&build_hamiltonian(params)?)
        }
        Err(e) => Err(e),
    }
}

/// Compute one grid point. Failures are folded into the record.
fn evaluate_point(spec: &SweepSpec, index: usize) -> GridPoint {
    let (j, gamma, n_sites) = spec.point_at(index);
    let mut point = GridPoint {
        j_over_delta: j,
        gamma_over_delta: gamma,
        n_sites,
        re_gap: None,
        im_gap: None,
        order_param: None,
        xi: None,
        pt_class: None,
        re_ground: None,
        im_ground: None,
        error: None,
    };
    let mut problems: Vec<String> = Vec::new();

    let params = match ChainParams::new(
        n_sites,
        spec.delta,
        j * spec.delta,
        gamma * spec.delta,
        spec.boundary,
    ) {
        Ok(params) => params,
        Err(e) => {
            point.error = Some(e.to_string());
            return point;
        }
    };
    let solved = match solve_low_pair(&params) {
        Ok(solved) => solved,
        Err(e) => {
            point.error = Some(e.to_string());
            return point;
        }
    };

    let wants = |o: Observable| spec.observables.contains(&o);
    if wants(Observable::Gap) {
        let gap = solved.first_excited_energy() - solved.ground_energy();
        point.re_gap = Some(gap.re);
        point.im_gap = Some(gap.im);
    }
    if wants(Observable::Spectrum) {
        let ground = solved.ground_energy();
        point.re_ground = Some(ground.re);
        point.im_ground = Some(ground.im);
    }
    if wants(Observable::PtClass) {
        point.pt_class = Some(solved.pt_class);
    }
    if wants(Observable::OrderParameter) || wants(Observable::Xi) {
        match correlation_profile(&solved, &params, 1) {
            Ok(profile) => {
                if wants(Observable::OrderParameter) {
                    match order_parameter(&profile) {
                        Ok(value) => point.order_param = Some(value),
                        Err(e) => problems.push(format!("order_param: {e}")),
                    }
                }
                if wants(Observable::Xi) {
                    match correlation_length(&profile) {
                        Ok(value) => point.xi = Some(value),
                        Err(e) => problems.push(format!("xi: {e}")),
                    }
                }
            }
            Err(e) => problems.push(format!("correlation profile: {e}")),
        }
    }
    if !problems.is_empty() {
        point.error = Some(problems.join("; "));
    }
    point
}

/// One line of `points.jsonl`.
#[derive(Serialize, Deserialize)]
struct CheckpointLine {
    index: usize,
    point: GridPoint,
}

/// Appending side of an open checkpoint directory.
struct CheckpointWriter {
    path: PathBuf,
    file: File,
}

impl CheckpointWriter {
    fn append(&mut self, index: usize, point: &GridPoint) -> Result<()> {
        let line = serde_json::to_string(&CheckpointLine {
            index,
            point: point.clone(),
        })
        .map_err(|e| Error::Serde(e.to_string()))?;
        writeln!(self.file, "{line}").map_err(|e| Error::io(self.path.display().to_string(), e))
    }

    fn flush(&mut self) -> Result<()> {
        self.file
            .flush()
            .map_err(|e| Error::io(self.path.display().to_string(), e))
    }
}

/// Open (or create) a checkpoint directory for `spec`, loading any finished
/// points into `result`.
fn open_checkpoint(
    spec: &SweepSpec,
    dir: &Path,
    result: &mut GridResult,
) -> Result<CheckpointWriter> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let spec_path = dir.join("spec.json");
    let hash_path = dir.join("spec.sha256");
    let points_path = dir.join("points.jsonl");

    if hash_path.exists() {
        let stored = std::fs::read_to_string(&hash_path)
            .map_err(|e| Error::io(hash_path.display().to_string(), e))?;
        let stored = stored.trim();
        if stored != spec.hash() {
            return Err(Error::CheckpointMismatch(format!(
                "checkpoint at {} was produced by a different spec (stored hash {}, requested {}); \
                 point at a fresh directory instead of mixing sweeps",
                dir.display(),
                stored,
                spec.hash()
            )));
        }
    } else {
        std::fs::write(&spec_path, spec.canonical_json())
            .map_err(|e| Error::io(spec_path.display().to_string(), e))?;
        std::fs::write(&hash_path, format!("{}\n", spec.hash()))
            .map_err(|e| Error::io(hash_path.display().to_string(), e))?;
    }

    if points_path.exists() {
        let file = File::open(&points_path)
            .map_err(|e| Error::io(points_path.display().to_string(), e))?;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(points_path.display().to_string(), e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: CheckpointLine = serde_json::from_str(&line).map_err(|e| {
                Error::Serde(format!(
                    "corrupt checkpoint line {} in {}: {e}",
                    lineno + 1,
                    points_path.display()
                ))
            })?;
            if entry.index >= result.points.len() {
                return Err(Error::CheckpointMismatch(format!(
                    "checkpoint index {} out of range for a sweep of {} points",
                    entry.index,
                    result.points.len()
                )));
            }
            result.points[entry.index] = Some(entry.point);
        }
    }

    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&points_path)
        .map_err(|e| Error::io(points_path.display().to_string(), e))?;
    Ok(CheckpointWriter {
        path: points_path,
        file,
    })
}

/// Phase-diagram region labels, numbered as in the usual four-quadrant
/// reading of the diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// PT-symmetric paramagnet on the ferromagnetic side.
    I,
    /// Ferromagnetically ordered, PT symmetry intact.
    II,
    /// PT-symmetric paramagnet on the antiferromagnetic side.
    III,
    /// PT-broken antiferromagnet: complex gap and staggered order together.
    IV,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let label = match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::IV => "IV",
        };
        write!(f, "{label}")
    }
}

/// One labeled node of the phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSample {
    /// Coupling ratio of the node.
    pub j_over_delta: f64,
    /// Gain ratio of the node.
    pub gamma_over_delta: f64,
    /// Region label assigned to the node.
    pub region: Region,
}

/// A critical-line estimate drawn on top of the region map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    /// Coupling ratio of the boundary point.
    pub j_over_delta: f64,
    /// Gain ratio of the boundary point.
    pub gamma_over_delta: f64,
    /// Half-spread of the estimate when the estimator reports one.
    pub uncertainty: f64,
}

/// The merged phase diagram: per-node labels plus every boundary estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseDiagram {
    /// Size whose grid records were labeled.
    pub n_sites: usize,
    /// Region label per computed grid node.
    pub regions: Vec<RegionSample>,
    /// Level curve `|Im(e1 - e0)| = GAP_IM_THRESHOLD_RELATIVE * scale`,
    /// one point per sign change along each constant-`gamma` row.
    pub gap_contour: Vec<(f64, f64)>,
    /// Finite-size crossing estimates in phase-plane coordinates.
    pub fss_points: Vec<BoundaryPoint>,
    /// Two-site cluster boundary `(J/delta, gamma/delta)` polyline.
    pub bp_two_spin: Vec<(f64, f64)>,
    /// Six-site cluster boundary polyline.
    pub bp_six_spin: Vec<(f64, f64)>,
    /// Inputs that were missing or incomplete, stated instead of guessed.
    pub gaps: Vec<String>,
}

/// Merge grid records and boundary estimators into a labeled diagram.
///
/// Labels are assigned per node of the largest size in the grid: a broken
/// low pair lands in region IV, an intact pair on the antiferromagnetic
/// side in III, and the ferromagnetic side splits into II and I at
/// [`ORDER_REGION_THRESHOLD`]. Missing inputs (an empty estimator, nodes
/// that failed to solve) shrink the output and are declared in `gaps`
/// rather than silently interpolated over.
pub fn assemble_phase_diagram(
    grid: &GridResult,
    fss_crossings: &[crate::fss::ScalingCrossing],
    bp_two_spin: &[(f64, f64)],
    bp_six_spin: &[(f64, f64)],
) -> PhaseDiagram {
    let n_star = grid.spec.sorted_sizes().last().copied().unwrap_or(0);
    let mut regions = Vec::new();
    let mut gaps = Vec::new();

    for point in grid.records().filter(|p| p.n_sites == n_star) {
        if let Some(region) = label_region(&grid.spec, point) {
            regions.push(RegionSample {
                j_over_delta: point.j_over_delta,
                gamma_over_delta: point.gamma_over_delta,
                region,
            });
        }
    }
    // Uncomputed slots and unlabelable records both count as holes.
    let expected = grid.spec.j_range.2 * grid.spec.gamma_range.2;
    let missing_nodes = expected - regions.len().min(expected);
    if missing_nodes > 0 {
        gaps.push(format!(
            "{missing_nodes} of {expected} grid nodes at N = {n_star} have no usable record"
        ));
    }

    let gap_contour = gap_threshold_contour(grid, n_star);
    if fss_crossings.is_empty() {
        gaps.push("no finite-size crossing estimates supplied".into());
    }
    if bp_two_spin.is_empty() {
        gaps.push("no two-site cluster boundary supplied".into());
    }
    if bp_six_spin.is_empty() {
        gaps.push("no six-site cluster boundary supplied".into());
    }

    PhaseDiagram {
        n_sites: n_star,
        regions,
        gap_contour,
        fss_points: fss_crossings
            .iter()
            .map(|c| {
                let (j, gamma) = c.phase_point();
                BoundaryPoint {
                    j_over_delta: j,
                    gamma_over_delta: gamma,
                    uncertainty: c.uncertainty,
                }
            })
            .collect(),
        bp_two_spin: bp_two_spin.to_vec(),
        bp_six_spin: bp_six_spin.to_vec(),
        gaps,
    }
}

/// Label one record, or `None` when it lacks the needed observables.
fn label_region(spec: &SweepSpec, point: &GridPoint) -> Option<Region> {
    let broken = match (point.pt_class, point.im_gap) {
        (Some(class), _) => class == PtClass::Broken,
        (None, Some(im)) => im.abs() > gap_threshold(spec.delta, point.j_over_delta),
        (None, None) => return None,
    };
    if point.j_over_delta < 0.0 {
        return Some(if broken { Region::IV } else { Region::III });
    }
    // The ferromagnetic side keeps its low pair real; ordering is read off
    // the order parameter instead of the gap.
    let order = point.order_param?;
    Some(if order >= ORDER_REGION_THRESHOLD {
        Region::II
    } else {
        Region::I
    })
}

/// Absolute imaginary-gap threshold at one grid column.
fn gap_threshold(delta: f64, j_over_delta: f64) -> f64 {
    GAP_IM_THRESHOLD_RELATIVE * delta * j_over_delta.hypot(1.0)
}

/// Extract the `|Im gap| = threshold` level curve row by row.
///
/// Along each constant-`gamma` row the signed excess `|Im gap| - threshold`
/// is scanned in `J` order; every sign change contributes one linearly
/// interpolated point. Row-wise extraction is exact on the grid lines,
/// deterministic, and free of the ambiguity a marching-squares saddle would
/// introduce at this resolution.
fn gap_threshold_contour(grid: &GridResult, n_sites: usize) -> Vec<(f64, f64)> {
    let mut contour = Vec::new();
    for gamma in grid.spec.gamma_values() {
        let row: Vec<(f64, f64)> = grid
            .records()
            .filter(|p| p.n_sites == n_sites && p.gamma_over_delta == gamma)
            .filter_map(|p| {
                let im = p.im_gap?;
                let excess = im.abs() - gap_threshold(grid.spec.delta, p.j_over_delta);
                Some((p.j_over_delta, excess))
            })
            .collect();
        for pair in row.windows(2) {
            let (j0, f0) = pair[0];
            let (j1, f1) = pair[1];
            if f0 == 0.0 {
                contour.push((j0, gamma));
            } else if f0.signum() != f1.signum() && f1 != 0.0 {
                let t = f0 / (f0 - f1);
                contour.push((j0 + t * (j1 - j0), gamma));
            }
        }
    }
    contour
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    /// Small spec used by most tests: a 3 x 3 window straddling both signs
    /// of the coupling and the gamma = 1 decoupled threshold, one dense
    /// size.
    fn tiny_spec() -> SweepSpec {
        SweepSpec {
            j_range: (-0.9, 0.9, 3),
            gamma_range: (0.0, 1.2, 3),
            sizes: vec![4],
            delta: 1.0,
            boundary: Boundary::Periodic,
            observables: Observable::all().to_vec(),
        }
    }

    #[test]
    fn default_grid_matches_the_documented_window() {
        let spec = SweepSpec::default();
        spec.validate().unwrap();
        assert_eq!(spec.j_range.2, 121);
        assert_eq!(spec.gamma_range.2, 81);
        let j = spec.j_values();
        let g = spec.gamma_values();
        assert_eq!((j[0], *j.last().unwrap()), (-1.5, 1.5));
        assert_eq!((g[0], *g.last().unwrap()), (0.0, 2.0));
        // 0.025 steps in both directions.
        assert!((j[1] - j[0] - 0.025).abs() < 1e-12);
        assert!((g[1] - g[0] - 0.025).abs() < 1e-12);
        assert_eq!(spec.total_points(), 121 * 81);
    }

    #[test]
    fn flat_index_order_is_the_sorted_row_order() {
        let spec = SweepSpec {
            sizes: vec![6, 4],
            ..tiny_spec()
        };
        let mut previous: Option<(f64, f64, usize)> = None;
        for idx in 0..spec.total_points() {
            let point = spec.point_at(idx);
            if let Some(prev) = previous {
                let ahead = (point.0, point.1, point.2);
                let behind = (prev.0, prev.1, prev.2);
                assert!(
                    behind < ahead,
                    "index order broke at {idx}: {behind:?} !< {ahead:?}"
                );
            }
            previous = Some(point);
        }
    }

    #[test]
    fn spec_geometry_validation_rejects_malformed_grids() {
        let mut spec = tiny_spec();
        spec.j_range = (0.5, -0.5, 3);
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
        let mut spec = tiny_spec();
        spec.gamma_range.2 = 0;
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
        let mut spec = tiny_spec();
        spec.sizes.clear();
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
        let mut spec = tiny_spec();
        spec.observables.clear();
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
        let mut spec = tiny_spec();
        spec.delta = 0.0;
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_fills_every_observable_on_a_dense_grid() {
        let spec = tiny_spec();
        let result = run_sweep(&spec, &SweepOptions::default()).unwrap();
        assert!(result.is_complete());
        assert_eq!(result.completed(), 9);
        for point in result.records() {
            assert!(point.error.is_none(), "unexpected failure: {point:?}");
            assert!(point.re_gap.unwrap().is_finite());
            assert!(point.im_gap.unwrap().is_finite());
            assert!(point.re_ground.unwrap().is_finite());
            let order = point.order_param.unwrap();
            assert!((0.0..=1.0).contains(&order), "order = {order}");
            assert!(point.xi.unwrap() >= 0.0);
            assert!(point.pt_class.is_some());
        }
        // The decoupled column J = 0 crosses its exceptional point at
        // gamma = 1: below it the pair is real, above it conjugate.
        let low = result.find(0.0, 0.0, 4).unwrap();
        assert_eq!(low.pt_class, Some(PtClass::Preserved));
        let high = result.find(0.0, 1.2, 4).unwrap();
        assert_eq!(high.pt_class, Some(PtClass::Broken));
        assert!(high.im_gap.unwrap().abs() > 0.1);
    }

    #[test]
    fn worker_count_does_not_change_the_records() {
        let spec = tiny_spec();
        let serial = run_sweep(
            &spec,
            &SweepOptions {
                workers: Some(1),
                ..SweepOptions::default()
            },
        )
        .unwrap();
        let parallel = run_sweep(
            &spec,
            &SweepOptions {
                workers: Some(8),
                ..SweepOptions::default()
            },
        )
        .unwrap();
        // Bit-exact equality, not approximate: scheduling must not leak
        // into the arithmetic.
        let a = serde_json::to_string(&serial.points.iter().collect::<Vec<_>>()).unwrap();
        let b = serde_json::to_string(&parallel.points.iter().collect::<Vec<_>>()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn interrupted_sweep_resumes_without_recomputation() {
        let spec = tiny_spec();
        let reference = run_sweep(&spec, &SweepOptions::default()).unwrap();

        let dir = tempdir().unwrap();
        let checkpoint = dir.path().join("ckpt");
        let partial = run_sweep(
            &spec,
            &SweepOptions {
                checkpoint: Some(checkpoint.clone()),
                max_new_points: Some(5),
                ..SweepOptions::default()
            },
        )
        .unwrap();
        assert!(!partial.is_complete());
        assert_eq!(partial.completed(), 5);

        let resumed = run_sweep(
            &spec,
            &SweepOptions {
                checkpoint: Some(checkpoint.clone()),
                ..SweepOptions::default()
            },
        )
        .unwrap();
        assert!(resumed.is_complete());

        // Byte-identical to the uninterrupted run once serialized.
        let a = serde_json::to_string(&reference.points.iter().collect::<Vec<_>>()).unwrap();
        let b = serde_json::to_string(&resumed.points.iter().collect::<Vec<_>>()).unwrap();
        assert_eq!(a, b);

        // The checkpoint holds each point exactly once: 5 from the first
        // run, 4 from the second, none recomputed.
        let lines = std::fs::read_to_string(checkpoint.join("points.jsonl")).unwrap();
        assert_eq!(lines.lines().count(), 9);
    }

    #[test]
    fn resuming_with_a_different_spec_is_refused() {
        let dir = tempdir().unwrap();
        let checkpoint = dir.path().join("ckpt");
        let spec = tiny_spec();
        run_sweep(
            &spec,
            &SweepOptions {
                checkpoint: Some(checkpoint.clone()),
                max_new_points: Some(2),
                ..SweepOptions::default()
            },
        )
        .unwrap();

        let mut other = tiny_spec();
        other.j_range = (-1.0, 1.0, 3);
        let err = run_sweep(
            &other,
            &SweepOptions {
                checkpoint: Some(checkpoint),
                ..SweepOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::CheckpointMismatch(_)), "got {err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn per_point_failures_stay_isolated() {
        // An odd periodic ring is rejected chain by chain: every N = 5
        // record carries the error, every N = 4 record is healthy, and the
        // sweep as a whole still completes.
        let spec = SweepSpec {
            sizes: vec![4, 5],
            ..tiny_spec()
        };
        let result = run_sweep(&spec, &SweepOptions::default()).unwrap();
        assert!(result.is_complete());
        for point in result.records() {
            if point.n_sites == 5 {
                let message = point.error.as_deref().unwrap();
                assert!(message.contains("even number of sites"), "got: {message}");
                assert!(point.re_gap.is_none());
            } else {
                assert!(point.error.is_none());
                assert!(point.re_gap.is_some());
            }
        }
    }

    #[test]
    fn open_chains_keep_the_gap_when_xi_is_undefined() {
        // xi needs the ring structure factor, so an open sweep records the
        // reason per point while the spectral observables stay intact.
        let spec = SweepSpec {
            boundary: Boundary::Open,
            ..tiny_spec()
        };
        let result = run_sweep(&spec, &SweepOptions::default()).unwrap();
        for point in result.records() {
            assert!(point.re_gap.is_some());
            assert!(point.xi.is_none());
            assert!(point.error.as_deref().unwrap().contains("xi:"));
        }
    }

    /// Hand-built grid exercising the labeling rules without a solver.
    fn synthetic_grid() -> GridResult {
        let spec = SweepSpec {
            j_range: (-1.0, 1.0, 4),
            gamma_range: (0.2, 0.8, 2),
            sizes: vec![10],
            delta: 1.0,
            boundary: Boundary::Periodic,
            observables: Observable::all().to_vec(),
        };
        let mut grid = GridResult::empty(spec.clone());
        for idx in 0..spec.total_points() {
            let (j, gamma, n) = spec.point_at(idx);
            // Crafted map: the antiferromagnetic corner at high gamma is
            // broken, the rest preserved; order grows with j on the
            // ferromagnetic side.
            let broken = j < -0.5 && gamma > 0.5;
            grid.points[idx] = Some(GridPoint {
                j_over_delta: j,
                gamma_over_delta: gamma,
                n_sites: n,
                re_gap: Some(0.5),
                im_gap: Some(if broken { 0.3 } else { 0.0 }),
                order_param: Some(if j > 0.5 { 0.9 } else { 0.1 }),
                xi: Some(1.0),
                pt_class: Some(if broken { PtClass::Broken } else { PtClass::Preserved }),
                re_ground: Some(-2.0),
                im_ground: Some(0.0),
                error: None,
            });
        }
        grid
    }

    #[test]
    fn phase_diagram_labels_all_four_regions() {
        let grid = synthetic_grid();
        let diagram = assemble_phase_diagram(&grid, &[], &[(-0.8, 0.5)], &[(0.9, 0.5)]);
        assert_eq!(diagram.n_sites, 10);
        assert_eq!(diagram.regions.len(), 8);
        let count = |r: Region| diagram.regions.iter().filter(|s| s.region == r).count();
        assert_eq!(count(Region::IV), 1); // j = -1, gamma = 0.8
        assert_eq!(count(Region::III), 3); // the remaining j < 0 nodes
        assert_eq!(count(Region::II), 2); // j = 1 column
        assert_eq!(count(Region::I), 2); // j = 1/3 column
        // The broken corner produces exactly one contour crossing, on the
        // gamma = 0.8 row between j = -1 and j = -1/3.
        assert_eq!(diagram.gap_contour.len(), 1);
        let (jc, gc) = diagram.gap_contour[0];
        assert_eq!(gc, 0.8);
        assert!(jc > -1.0 && jc < -1.0 / 3.0, "contour at {jc}");
        // Missing estimator inputs are declared, supplied ones are kept.
        assert!(diagram.gaps.iter().any(|g| g.contains("finite-size")));
        assert_eq!(diagram.bp_two_spin.len(), 1);
        assert_eq!(diagram.bp_six_spin.len(), 1);
    }

    #[test]
    fn checkpoint_hash_tracks_every_spec_field() {
        let base = tiny_spec();
        let mut changed = tiny_spec();
        changed.observables = vec![Observable::Gap];
        assert_ne!(base.hash(), changed.hash());
        let mut changed = tiny_spec();
        changed.boundary = Boundary::Open;
        assert_ne!(base.hash(), changed.hash());
        assert_eq!(base.hash(), tiny_spec().hash());
        assert_eq!(base.hash().len(), 64);
    }
}
