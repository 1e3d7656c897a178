//! Command-line front end.
//!
//! A thin assembly layer: flags and the optional TOML config become one
//! validated `RunConfig` (defaults < file < flags), the effective
//! configuration is echoed into the output directory, and each subcommand
//! calls the library and the dataset/plot emitters. Process exit codes are
//! stable: 0 success, 1 configuration, 2 numerical, 3 storage.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ptising::error::{Error, Result};
use ptising::fss::{build_scaling_curves, critical_line_with, CriticalLineOptions, SweepAxis};
use ptising::hamiltonian::{build_hamiltonian, Boundary};
use ptising::io::config::{
    apply_overrides, load_config, parse_range_flag, parse_sizes_flag, CliOverrides, CommandKind,
    RunConfig,
};
use ptising::io::dataset::{
    boundary_csv, crossings_csv, scaling_csv, spectrum_csv, write_grid, write_phase_diagram,
    SpectrumRow,
};
use ptising::io::plot::{write_plot_script, FigureKind};
use ptising::bethe_peierls::{bp_phase_boundary, BpClusterKind, BpOptions};
use ptising::spectra::{full_spectrum_with, SpectrumOptions};
use ptising::sweep::{
    assemble_phase_diagram, run_sweep, GridResult, Observable, SweepOptions, SweepSpec,
};

/// PT-symmetric Ising chain: spectra, maps, scaling and phase boundaries.
#[derive(Debug, Parser)]
#[command(name = "ptising", version, about)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for datasets, scripts and the config echo.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (also settable via PTISING_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Number of sites for point commands (and single-size sweeps).
    #[arg(long, global = true)]
    n_sites: Option<usize>,

    /// Transverse field, the unit of energy.
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Coupling ratio J/delta for point commands.
    #[arg(long, global = true, allow_hyphen_values = true)]
    j: Option<f64>,

    /// Gain ratio gamma/delta for point commands.
    #[arg(long, global = true)]
    gamma: Option<f64>,

    /// Boundary condition.
    #[arg(long, global = true, value_enum)]
    boundary: Option<BoundaryFlag>,

    /// Sweep window for J/delta as min:max:steps.
    #[arg(long, global = true, allow_hyphen_values = true)]
    j_range: Option<String>,

    /// Sweep window for gamma/delta as min:max:steps.
    #[arg(long, global = true)]
    gamma_range: Option<String>,

    /// Comma-separated system sizes for sweeps and scaling.
    #[arg(long, global = true)]
    sizes: Option<String>,

    #[command(subcommand)]
    command: Command,
}

/// Boundary flag mirror of the library enum.
#[derive(Debug, Clone, Copy, ValueEnum)]
enum BoundaryFlag {
    Open,
    Periodic,
}

impl From<BoundaryFlag> for Boundary {
    fn from(flag: BoundaryFlag) -> Boundary {
        match flag {
            BoundaryFlag::Open => Boundary::Open,
            BoundaryFlag::Periodic => Boundary::Periodic,
        }
    }
}

/// Which axis a scaling or crossing run sweeps.
#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisFlag {
    J,
    Gamma,
}

impl From<AxisFlag> for SweepAxis {
    fn from(flag: AxisFlag) -> SweepAxis {
        match flag {
            AxisFlag::J => SweepAxis::SweepJ,
            AxisFlag::Gamma => SweepAxis::SweepGamma,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full dense spectrum at one point, or bands over a coupling sweep.
    Spectrum {
        /// Sweep J/delta over min:max:steps instead of a single point.
        #[arg(long, allow_hyphen_values = true)]
        sweep_j: Option<String>,
    },
    /// Complex-gap map over the sweep grid.
    GapMap,
    /// Order-parameter and correlation-length map over the sweep grid.
    CorrMap,
    /// xi/N curves per system size over one swept axis.
    Scaling {
        /// Swept axis; the other range supplies the fixed value.
        #[arg(long, value_enum, default_value = "gamma")]
        axis: AxisFlag,
    },
    /// Critical line from scaling-curve crossings.
    Crossing {
        /// Swept axis; the other range supplies the fixed grid.
        #[arg(long, value_enum, default_value = "gamma")]
        axis: AxisFlag,
    },
    /// Cluster mean-field phase boundaries for all three cluster kinds.
    BethePeierls,
    /// Merged phase diagram: sweep map, crossings and cluster boundaries.
    PhaseDiagram {
        /// Omit the finite-size crossing estimates (declared as a gap).
        #[arg(long)]
        skip_fss: bool,
        /// Omit the cluster boundaries (declared as a gap).
        #[arg(long)]
        skip_bp: bool,
    },
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::Spectrum { .. } => CommandKind::Spectrum,
            Command::GapMap => CommandKind::GapMap,
            Command::CorrMap => CommandKind::CorrMap,
            Command::Scaling { .. } => CommandKind::Scaling,
            Command::Crossing { .. } => CommandKind::Crossing,
            Command::BethePeierls => CommandKind::BethePeierls,
            Command::PhaseDiagram { .. } => CommandKind::PhaseDiagram,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Assemble the effective configuration and dispatch.
fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    let overrides = CliOverrides {
        command: Some(cli.command.kind()),
        n_sites: cli.n_sites,
        delta: cli.delta,
        j_over_delta: cli.j,
        gamma_over_delta: cli.gamma,
        boundary: cli.boundary.map(Boundary::from),
        j_range: cli.j_range.as_deref().map(parse_range_flag).transpose()?,
        gamma_range: cli
            .gamma_range
            .as_deref()
            .map(parse_range_flag)
            .transpose()?,
        sizes: cli.sizes.as_deref().map(parse_sizes_flag).transpose()?,
        output_dir: cli.out.clone(),
        workers: cli.workers,
    };
    apply_overrides(&mut config, &overrides);
    config.validate()?;

    let out = config.output_dir.clone();
    let echo = config.echo_into(&out)?;
    println!("effective configuration -> {}", echo.display());
    print!("{}", config.to_toml()?);

    match &cli.command {
        Command::Spectrum { sweep_j } => {
            let window = sweep_j.as_deref().map(parse_range_flag).transpose()?;
            cmd_spectrum(&config, window)
        }
        Command::GapMap => cmd_map(
            &config,
            "gap_map",
            &[Observable::Gap, Observable::PtClass],
            FigureKind::GapColormap,
        ),
        Command::CorrMap => cmd_map(
            &config,
            "corr_map",
            &[
                Observable::OrderParameter,
                Observable::Xi,
                Observable::PtClass,
            ],
            FigureKind::OpColormap,
        ),
        Command::Scaling { axis } => cmd_scaling(&config, (*axis).into()),
        Command::Crossing { axis } => cmd_crossing(&config, (*axis).into()),
        Command::BethePeierls => cmd_bethe_peierls(&config),
        Command::PhaseDiagram { skip_fss, skip_bp } => {
            cmd_phase_diagram(&config, *skip_fss, *skip_bp)
        }
    }
}

/// Dense spectrum at the chain point, optionally swept over `J/delta`.
fn cmd_spectrum(config: &RunConfig, window: Option<(f64, f64, usize)>) -> Result<()> {
    let base = config.chain.params()?;
    let couplings: Vec<f64> = match window {
        Some((lo, hi, steps)) => {
            if steps == 0 {
                return Err(Error::Config("sweep-j needs at least one step".into()));
            }
            (0..steps)
                .map(|i| {
                    if steps == 1 {
                        lo
                    } else {
                        lo + (hi - lo) * i as f64 / (steps - 1) as f64
                    }
                })
                .collect()
        }
        None => vec![config.chain.j_over_delta],
    };
    let opts = SpectrumOptions {
        compute_left: false,
        im_tol: config.tolerances.pt_im_tol,
    };
    let mut rows = Vec::new();
    for &j in &couplings {
        let mut params = base.clone();
        params.coupling = j * params.delta;
        let spec = full_spectrum_with(&build_hamiltonian(&params)?, &opts)?;
        let scale = params.energy_scale();
        for (band, &e) in spec.eigenvalues.iter().enumerate() {
            rows.push(SpectrumRow {
                j_over_delta: j,
                gamma_over_delta: config.chain.gamma_over_delta,
                n_sites: params.n_sites,
                band_index: band,
                re_energy: e.re,
                im_energy: e.im,
                re_scaled: e.re / scale,
                im_scaled: e.im / scale,
            });
        }
    }
    let path = config.output_dir.join("spectrum_bands.csv");
    std::fs::write(&path, spectrum_csv(&rows))
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let script = write_plot_script(FigureKind::SpectrumVsJ, &path)?;
    println!(
        "wrote {} ({} eigenvalues at {} couplings) and {}",
        path.display(),
        rows.len(),
        couplings.len(),
        script.display()
    );
    Ok(())
}

/// Shared body of the two map commands.
fn cmd_map(
    config: &RunConfig,
    stem: &str,
    observables: &[Observable],
    figure: FigureKind,
) -> Result<()> {
    let mut spec = config.sweep.clone();
    spec.observables = observables.to_vec();
    let result = sweep_with_checkpoint(config, &spec)?;
    let (csv, json) = write_grid(&result, &config.output_dir, stem)?;
    let script = write_plot_script(figure, &csv)?;
    println!(
        "wrote {}, {} and {} ({} of {} points computed)",
        csv.display(),
        json.display(),
        script.display(),
        result.completed(),
        result.spec.total_points()
    );
    report_failures(&result);
    Ok(())
}

/// Run a sweep with the run's checkpoint directory and worker count.
fn sweep_with_checkpoint(config: &RunConfig, spec: &SweepSpec) -> Result<GridResult> {
    let opts = SweepOptions {
        workers: config.effective_workers()?,
        checkpoint: Some(config.output_dir.join("checkpoint")),
        max_new_points: None,
    };
    run_sweep(spec, &opts)
}

/// Point failures are isolated but never silent.
fn report_failures(result: &GridResult) {
    let failed = result.records().filter(|p| p.error.is_some()).count();
    if failed > 0 {
        eprintln!(
            "note: {failed} grid points recorded failures; see the error column of the dataset"
        );
    }
}

/// `xi/N` curves over one swept axis.
fn cmd_scaling(config: &RunConfig, axis: SweepAxis) -> Result<()> {
    let (swept_range, fixed_range) = match axis {
        SweepAxis::SweepJ => (config.sweep.j_range, config.sweep.gamma_range),
        SweepAxis::SweepGamma => (config.sweep.gamma_range, config.sweep.j_range),
    };
    let swept_grid: Vec<f64> = linspace(swept_range);
    let fixed_value = fixed_range.0;
    let base = config.chain.params()?;
    let curves = build_scaling_curves(
        axis,
        fixed_value,
        &swept_grid,
        &config.sweep.sizes,
        &base,
    )?;
    let path = config.output_dir.join("scaling_curves.csv");
    std::fs::write(&path, scaling_csv(&curves))
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let script = write_plot_script(FigureKind::ScalingCurves, &path)?;
    let missing: usize = curves.iter().map(|c| c.missing.len()).sum();
    println!(
        "wrote {} and {} ({} sizes, {} swept points, {} missing)",
        path.display(),
        script.display(),
        curves.len(),
        swept_grid.len(),
        missing
    );
    Ok(())
}

/// Crossing estimates over a fixed grid.
fn cmd_crossing(config: &RunConfig, axis: SweepAxis) -> Result<()> {
    let (swept_range, fixed_range) = match axis {
        SweepAxis::SweepJ => (config.sweep.j_range, config.sweep.gamma_range),
        SweepAxis::SweepGamma => (config.sweep.gamma_range, config.sweep.j_range),
    };
    let fixed_grid = linspace(fixed_range);
    let base = config.chain.params()?;
    let opts = CriticalLineOptions {
        swept_range: Some((swept_range.0, swept_range.1)),
        ..CriticalLineOptions::default()
    };
    let crossings =
        critical_line_with(&fixed_grid, axis, &config.sweep.sizes, &base, &opts)?;
    let path = config.output_dir.join("crossings.csv");
    std::fs::write(&path, crossings_csv(&crossings))
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    println!(
        "wrote {} ({} crossings over {} fixed values)",
        path.display(),
        crossings.len(),
        fixed_grid.len()
    );
    Ok(())
}

/// Mean-field options with the configured overrides applied.
fn bp_options(config: &RunConfig) -> BpOptions {
    let mut opts = BpOptions::default();
    if let Some(tol) = config.tolerances.bp_tol {
        opts.tol_bp = tol;
    }
    if let Some(tol) = config.tolerances.bp_bisect_tol {
        opts.bisect_tol = tol;
    }
    if let Some(threshold) = config.tolerances.bp_m_threshold {
        opts.m_threshold = threshold;
    }
    let ceiling = config.sweep.j_range.0.abs().max(config.sweep.j_range.1.abs());
    if ceiling > opts.scan_step {
        opts.scan_j_max = ceiling;
    }
    opts
}

/// Cluster boundaries for all three kinds over the gamma grid.
fn cmd_bethe_peierls(config: &RunConfig) -> Result<()> {
    let gamma_grid = linspace(config.sweep.gamma_range);
    let opts = bp_options(config);
    for (kind, name) in [
        (BpClusterKind::TwoSpinAf, "bp_two_spin_af.csv"),
        (BpClusterKind::TwoSpinF, "bp_two_spin_f.csv"),
        (BpClusterKind::SixSpin, "bp_six_spin.csv"),
    ] {
        let boundary = bp_phase_boundary(kind, &gamma_grid, config.sweep.delta, &opts)?;
        let path = config.output_dir.join(name);
        std::fs::write(&path, boundary_csv(&boundary))
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        println!("wrote {} ({} boundary points)", path.display(), boundary.len());
    }
    Ok(())
}

/// Gamma values at which the phase-diagram command runs the estimators:
/// the sweep's gamma values thinned to at most this many, to keep the
/// finite-size part of the assembly at desk scale.
const DIAGRAM_ESTIMATOR_GAMMAS: usize = 5;

/// The long command: sweep map plus both boundary estimators, merged.
fn cmd_phase_diagram(config: &RunConfig, skip_fss: bool, skip_bp: bool) -> Result<()> {
    let result = sweep_with_checkpoint(config, &config.sweep)?;
    report_failures(&result);

    let gamma_grid = thin(linspace(config.sweep.gamma_range), DIAGRAM_ESTIMATOR_GAMMAS);
    let mut crossings = Vec::new();
    if !skip_fss {
        let sizes: Vec<usize> = if config.sweep.sizes.len() >= 2 {
            config.sweep.sizes.clone()
        } else {
            vec![8, 10, 12]
        };
        let base = config.chain.params()?;
        let (j_lo, j_hi, _) = config.sweep.j_range;
        // Separate windows per side: the swept window must not straddle
        // J = 0, where the decoupled chain pins an exceptional point.
        for window in [(j_lo.min(-0.02), -0.02), (0.02, j_hi.max(0.02))] {
            if window.0 >= window.1 {
                continue;
            }
            let opts = CriticalLineOptions {
                swept_range: Some(window),
                coarse_step: 0.02,
                ..CriticalLineOptions::default()
            };
            crossings.extend(critical_line_with(
                &gamma_grid,
                SweepAxis::SweepJ,
                &sizes,
                &base,
                &opts,
            )?);
        }
    }

    let mut bp_two = Vec::new();
    let mut bp_six = Vec::new();
    if !skip_bp {
        let opts = bp_options(config);
        bp_two = bp_phase_boundary(
            BpClusterKind::TwoSpinAf,
            &gamma_grid,
            config.sweep.delta,
            &opts,
        )?;
        bp_two.extend(bp_phase_boundary(
            BpClusterKind::TwoSpinF,
            &gamma_grid,
            config.sweep.delta,
            &opts,
        )?);
        bp_six = bp_phase_boundary(
            BpClusterKind::SixSpin,
            &gamma_grid,
            config.sweep.delta,
            &opts,
        )?;
    }

    let diagram = assemble_phase_diagram(&result, &crossings, &bp_two, &bp_six);
    let paths = write_phase_diagram(&diagram, &config.output_dir)?;
    let regions_csv = config.output_dir.join("regions.csv");
    let script = write_plot_script(FigureKind::PhaseDiagram, &regions_csv)?;
    let (grid_csv_path, grid_json_path) = write_grid(&result, &config.output_dir, "phase_grid")?;
    println!(
        "wrote {} diagram files, {}, {} and {}",
        paths.len(),
        grid_csv_path.display(),
        grid_json_path.display(),
        script.display()
    );
    for gap in &diagram.gaps {
        println!("declared gap: {gap}");
    }
    Ok(())
}

/// Values of a `(min, max, points)` range.
fn linspace(range: (f64, f64, usize)) -> Vec<f64> {
    let (lo, hi, steps) = range;
    (0..steps)
        .map(|i| {
            if steps <= 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

/// At most `max` values, evenly thinned, endpoints kept.
fn thin(values: Vec<f64>, max: usize) -> Vec<f64> {
    if values.len() <= max || max < 2 {
        return values;
    }
    (0..max)
        .map(|i| values[i * (values.len() - 1) / (max - 1)])
        .collect()
}
