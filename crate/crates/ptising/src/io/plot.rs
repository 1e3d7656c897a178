//! Standalone gnuplot scripts for the five figure families.
//!
//! Each script is a complete, self-contained program: it names its input
//! CSV, its output PNG and every style it needs, so `gnuplot <file>.gp`
//! regenerates the figure from the emitted dataset with nothing else
//! installed. The crate never links a plotting library; figures are a
//! product of the artifacts, not of the process that happened to produce
//! them.
//!
//! Conventions shared by the scripts: comma-separated input with one header
//! line (consumed via `columnhead`), spectra drawn as a real-part curve
//! wrapped in a ribbon of half-width `|Im|` in scaled units, maps drawn as
//! palette-colored points on the sweep grid, and the phase diagram as the
//! overlay of region samples, the gap threshold contour, the finite-size
//! estimates with error bars and both cluster boundaries.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// The figure families the front end can render.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// Low bands versus coupling with an imaginary-part ribbon.
    SpectrumVsJ,
    /// Imaginary-gap magnitude over the sweep grid.
    GapColormap,
    /// Order parameter over the sweep grid.
    OpColormap,
    /// `xi/N` curves per size over the swept axis.
    ScalingCurves,
    /// Region samples plus every boundary estimator.
    PhaseDiagram,
}

impl FigureKind {
    /// File stem used for the script and its output image.
    pub fn stem(self) -> &'static str {
        match self {
            FigureKind::SpectrumVsJ => "spectrum_vs_j",
            FigureKind::GapColormap => "gap_colormap",
            FigureKind::OpColormap => "op_colormap",
            FigureKind::ScalingCurves => "scaling_curves",
            FigureKind::PhaseDiagram => "phase_diagram",
        }
    }
}

/// Shared prologue: terminal, output, CSV dialect.
fn prologue(output: &str) -> String {
    format!(
        "set terminal pngcairo size 900,650 enhanced\n\
         set output '{output}'\n\
         set datafile separator ','\n\
         set datafile missing 'nan'\n\
         set key noautotitle\n"
    )
}

/// Render the gnuplot script for one figure against one dataset file.
///
/// `dataset` is the path the script will read at plot time, written into
/// the script verbatim — pass a path relative to where the script lives so
/// the artifact directory stays relocatable. The phase diagram reads its
/// sibling datasets (`regions.csv`, `gap_contour.csv`, `fss_points.csv`,
/// `bp_two_spin.csv`, `bp_six_spin.csv`) from the directory of `dataset`.
pub fn emit_plot_script(kind: FigureKind, dataset: &str) -> String {
    let output = format!("{}.png", kind.stem());
    let mut script = prologue(&output);
    match kind {
        FigureKind::SpectrumVsJ => {
            script.push_str(&format!(
                "set xlabel 'J / {{/Symbol D}}'\n\
                 set ylabel 'Re {{/Symbol e}} (scaled)'\n\
                 set style fill transparent solid 0.35 noborder\n\
                 # One blank-line block per band: the ribbon half-width is the\n\
                 # scaled |Im| of the band, zero wherever the pair is real.\n\
                 stats '{dataset}' skip 1 using 4 nooutput\n\
                 nbands = STATS_max + 1\n\
                 plot for [b=0:nbands-1] '{dataset}' index b skip 1 \\\n\
                      using 1:($7 - abs($8)):($7 + abs($8)) with filledcurves lc palette frac (b+0.5)/nbands, \\\n\
                      for [b=0:nbands-1] '{dataset}' index b skip 1 \\\n\
                      using 1:7 with lines lw 1.4 lc palette frac (b+0.5)/nbands\n"
            ));
        }
        FigureKind::GapColormap => {
            script.push_str(&format!(
                "set xlabel 'J / {{/Symbol D}}'\n\
                 set ylabel '{{/Symbol g}} / {{/Symbol D}}'\n\
                 set cblabel '|Im {{/Symbol D}}{{/Symbol e}}|'\n\
                 set view map\n\
                 set palette defined (0 '#10104a', 0.5 '#b01060', 1 '#ffd030')\n\
                 splot '{dataset}' skip 1 using 1:2:(abs($5)) with points pt 5 ps 1.1 palette\n"
            ));
        }
        FigureKind::OpColormap => {
            script.push_str(&format!(
                "set xlabel 'J / {{/Symbol D}}'\n\
                 set ylabel '{{/Symbol g}} / {{/Symbol D}}'\n\
                 set cblabel 'order parameter'\n\
                 set view map\n\
                 set palette defined (0 '#0b2d4a', 0.5 '#2d8f8f', 1 '#f2f2c0')\n\
                 splot '{dataset}' skip 1 using 1:2:6 with points pt 5 ps 1.1 palette\n"
            ));
        }
        FigureKind::ScalingCurves => {
            script.push_str(&format!(
                "set xlabel 'swept coupling'\n\
                 set ylabel '{{/Symbol x}} / N'\n\
                 set key top right autotitle\n\
                 # One curve per system size; the common crossing marks the\n\
                 # critical coupling.\n\
                 plot for [n in system(\"awk -F, 'NR>1 {{print $3}}' {dataset} | sort -nu\")] \\\n\
                      '{dataset}' skip 1 using (column(1)):($3 == n ? column(4) : NaN) \\\n\
                      with linespoints pt 7 ps 0.6 title 'N = '.n\n"
            ));
        }
        FigureKind::PhaseDiagram => {
            script.push_str(&format!(
                "dir = system(\"dirname '{dataset}'\")\n\
                 set xlabel 'J / {{/Symbol D}}'\n\
                 set ylabel '{{/Symbol g}} / {{/Symbol D}}'\n\
                 set key outside right\n\
                 # Region samples as a colored background, then the three\n\
                 # independent boundary estimators on top.\n\
                 region(s) = (s eq 'I') ? 1 : (s eq 'II') ? 2 : (s eq 'III') ? 3 : 4\n\
                 set palette defined (1 '#d8e8f8', 2 '#f8e0c8', 3 '#d8f0d0', 4 '#e8c8e8')\n\
                 unset colorbox\n\
                 plot dir.'/regions.csv' skip 1 using 1:2:(region(strcol(3))) with points pt 5 ps 1.4 palette, \\\n\
                      dir.'/gap_contour.csv' skip 1 using 1:2 with lines lw 2 lc rgb '#2040c0' title 'gap threshold', \\\n\
                      dir.'/fss_points.csv' skip 1 using 1:2:3 with xerrorbars pt 7 ps 1.1 lc rgb '#101010' title 'finite-size', \\\n\
                      dir.'/bp_two_spin.csv' skip 1 using 1:2 with linespoints pt 4 ps 0.8 lc rgb '#c03020' title 'two-site cluster', \\\n\
                      dir.'/bp_six_spin.csv' skip 1 using 1:2 with linespoints pt 6 ps 0.8 lc rgb '#208040' title 'six-site cluster'\n"
            ));
        }
    }
    script
}

/// Write the script for `kind` next to its dataset and return its path.
pub fn write_plot_script(kind: FigureKind, dataset_path: &Path) -> Result<PathBuf> {
    let dir = dataset_path.parent().unwrap_or_else(|| Path::new("."));
    let dataset_name = dataset_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| {
            Error::Config(format!(
                "dataset path {} has no usable file name",
                dataset_path.display()
            ))
        })?;
    let script = emit_plot_script(kind, dataset_name);
    let path = dir.join(format!("{}.gp", kind.stem()));
    std::fs::write(&path, script).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(path)
}
