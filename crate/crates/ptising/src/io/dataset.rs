//! Dataset emission: CSV with a JSON mirror, byte-reproducible.
//!
//! Every emitter follows the same contract. Floats are printed with 17
//! significant digits, enough to reconstruct the exact bit pattern, so a
//! resumed or re-run sweep reproduces its files byte for byte. Rows are
//! sorted by `(J/delta, gamma/delta, n_sites)`; emission order never
//! depends on scheduling. Missing values are written as `nan` and a
//! record's failure note rides along in a final `error` column, sanitized
//! so the file stays one-record-per-line with a fixed column count.
//!
//! The grid schema starts with the pinned columns
//! `j_over_delta, gamma_over_delta, n_sites, re_gap, im_gap, order_param,
//! xi, pt_class` and appends the ground-state energy and the error marker.
//! The JSON mirror carries the same rows as an array of objects keyed by
//! the column names, plus the spec that produced them.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::{Error, Result};
use crate::fss::{ScalingCrossing, ScalingCurve};
use crate::sweep::{GridPoint, GridResult, PhaseDiagram};

/// Header of the grid dataset, fixed by the external contract.
pub const GRID_HEADER: &str =
    "j_over_delta,gamma_over_delta,n_sites,re_gap,im_gap,order_param,xi,pt_class,re_ground,im_ground,error";

/// Format one float with 17 significant digits (round-trip exact).
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Format an optional float, `None` becoming `nan`.
fn format_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => format_float(v),
        None => "nan".to_string(),
    }
}

/// Keep a diagnostic message on one line and out of the column structure.
fn sanitize_note(note: &str) -> String {
    note.chars()
        .map(|c| match c {
            ',' => ';',
            '\n' | '\r' => ' ',
            c => c,
        })
        .collect()
}

/// Records of a grid in emission order.
fn sorted_records(result: &GridResult) -> Vec<&GridPoint> {
    let mut rows: Vec<&GridPoint> = result.records().collect();
    rows.sort_by(|a, b| {
        a.j_over_delta
            .total_cmp(&b.j_over_delta)
            .then(a.gamma_over_delta.total_cmp(&b.gamma_over_delta))
            .then(a.n_sites.cmp(&b.n_sites))
    });
    rows
}

/// CSV form of a sweep result.
pub fn grid_csv(result: &GridResult) -> String {
    let mut out = String::from(GRID_HEADER);
    out.push('\n');
    for p in sorted_records(result) {
        let class = match p.pt_class {
            Some(class) => class.to_string(),
            None => "nan".to_string(),
        };
        let note = match &p.error {
            Some(note) => sanitize_note(note),
            None => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            format_float(p.j_over_delta),
            format_float(p.gamma_over_delta),
            p.n_sites,
            format_opt(p.re_gap),
            format_opt(p.im_gap),
            format_opt(p.order_param),
            format_opt(p.xi),
            class,
            format_opt(p.re_ground),
            format_opt(p.im_ground),
            note,
        ));
    }
    out
}

/// JSON mirror of [`grid_csv`]: same rows, same order, plus the spec.
pub fn grid_json(result: &GridResult) -> Result<String> {
    let rows: Vec<&GridPoint> = sorted_records(result);
    let value = json!({
        "spec": result.spec,
        "rows": rows,
    });
    serde_json::to_string_pretty(&value).map_err(|e| Error::Serde(e.to_string()))
}

/// Write `stem.csv` and `stem.json` for a sweep result.
pub fn write_grid(result: &GridResult, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    write_text(&csv_path, &grid_csv(result))?;
    write_text(&json_path, &grid_json(result)?)?;
    Ok((csv_path, json_path))
}

/// CSV of scaling curves: one row per `(size, swept value)` sample.
pub fn scaling_csv(curves: &[ScalingCurve]) -> String {
    let mut out = String::from("swept_value,fixed_value,n_sites,xi_over_n\n");
    let mut rows: Vec<(f64, f64, usize, f64)> = curves
        .iter()
        .flat_map(|curve| {
            curve
                .points
                .iter()
                .map(move |&(x, y)| (x, curve.fixed_value, curve.n_sites, y))
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    for (x, fixed, n, y) in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_float(x),
            format_float(fixed),
            n,
            format_float(y)
        ));
    }
    out
}

/// CSV of located crossings, one row per estimate.
pub fn crossings_csv(crossings: &[ScalingCrossing]) -> String {
    let mut out =
        String::from("j_over_delta,gamma_over_delta,swept_axis,critical_value,uncertainty,pairs\n");
    let mut rows: Vec<&ScalingCrossing> = crossings.iter().collect();
    rows.sort_by(|a, b| {
        let (ja, ga) = a.phase_point();
        let (jb, gb) = b.phase_point();
        ja.total_cmp(&jb).then(ga.total_cmp(&gb))
    });
    for c in rows {
        let (j, gamma) = c.phase_point();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_float(j),
            format_float(gamma),
            c.axis.swept_label(),
            format_float(c.critical_value),
            format_float(c.uncertainty),
            c.pair_estimates.len(),
        ));
    }
    out
}

/// CSV of a cluster phase boundary polyline.
pub fn boundary_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("j_over_delta,gamma_over_delta\n");
    let mut rows = points.to_vec();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    for (j, gamma) in rows {
        out.push_str(&format!("{},{}\n", format_float(j), format_float(gamma)));
    }
    out
}

/// One spectrum row: a single eigenvalue at a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SpectrumRow {
    /// Coupling ratio of the point.
    pub j_over_delta: f64,
    /// Gain ratio of the point.
    pub gamma_over_delta: f64,
    /// Chain length.
    pub n_sites: usize,
    /// Index of the eigenvalue in `(Re, Im)` order at this point.
    pub band_index: usize,
    /// Real part of the eigenvalue.
    pub re_energy: f64,
    /// Imaginary part of the eigenvalue.
    pub im_energy: f64,
    /// Real part over the energy scale `sqrt(J^2 + delta^2)`.
    pub re_scaled: f64,
    /// Imaginary part over the energy scale.
    pub im_scaled: f64,
}

/// CSV of spectrum bands.
///
/// Rows are grouped into blank-line-separated blocks, one per band index,
/// each block sorted by the swept coupling. The blocks map directly onto
/// gnuplot's `index`/discontinuity handling so the band ribbons of the
/// spectrum figure can be drawn as continuous curves.
pub fn spectrum_csv(rows: &[SpectrumRow]) -> String {
    let mut out = String::from(
        "j_over_delta,gamma_over_delta,n_sites,band_index,re_energy,im_energy,re_scaled,im_scaled\n",
    );
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| {
        a.band_index
            .cmp(&b.band_index)
            .then(a.j_over_delta.total_cmp(&b.j_over_delta))
            .then(a.gamma_over_delta.total_cmp(&b.gamma_over_delta))
    });
    let mut current_band: Option<usize> = None;
    for row in sorted {
        if let Some(band) = current_band {
            if band != row.band_index {
                out.push('\n');
            }
        }
        current_band = Some(row.band_index);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            format_float(row.j_over_delta),
            format_float(row.gamma_over_delta),
            row.n_sites,
            row.band_index,
            format_float(row.re_energy),
            format_float(row.im_energy),
            format_float(row.re_scaled),
            format_float(row.im_scaled),
        ));
    }
    out
}

/// Write every face of a phase diagram into `dir`.
///
/// Emits `regions.csv`, `gap_contour.csv`, `fss_points.csv`,
/// `bp_two_spin.csv`, `bp_six_spin.csv` and the whole structure as
/// `phase_diagram.json`; returns the paths in that order.
pub fn write_phase_diagram(diagram: &PhaseDiagram, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();

    let mut regions = String::from("j_over_delta,gamma_over_delta,region\n");
    let mut rows = diagram.regions.clone();
    rows.sort_by(|a, b| {
        a.j_over_delta
            .total_cmp(&b.j_over_delta)
            .then(a.gamma_over_delta.total_cmp(&b.gamma_over_delta))
    });
    for sample in rows {
        regions.push_str(&format!(
            "{},{},{}\n",
            format_float(sample.j_over_delta),
            format_float(sample.gamma_over_delta),
            sample.region
        ));
    }
    paths.push(write_named(dir, "regions.csv", &regions)?);

    paths.push(write_named(
        dir,
        "gap_contour.csv",
        &boundary_csv(&diagram.gap_contour),
    )?);

    let mut fss = String::from("j_over_delta,gamma_over_delta,uncertainty\n");
    let mut points = diagram.fss_points.clone();
    points.sort_by(|a, b| {
        a.j_over_delta
            .total_cmp(&b.j_over_delta)
            .then(a.gamma_over_delta.total_cmp(&b.gamma_over_delta))
    });
    for p in points {
        fss.push_str(&format!(
            "{},{},{}\n",
            format_float(p.j_over_delta),
            format_float(p.gamma_over_delta),
            format_float(p.uncertainty)
        ));
    }
    paths.push(write_named(dir, "fss_points.csv", &fss)?);

    paths.push(write_named(
        dir,
        "bp_two_spin.csv",
        &boundary_csv(&diagram.bp_two_spin),
    )?);
    paths.push(write_named(
        dir,
        "bp_six_spin.csv",
        &boundary_csv(&diagram.bp_six_spin),
    )?);

    let json =
        serde_json::to_string_pretty(diagram).map_err(|e| Error::Serde(e.to_string()))?;
    paths.push(write_named(dir, "phase_diagram.json", &json)?);
    Ok(paths)
}

/// Write text to a named file inside `dir`, creating the directory.
fn write_named(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let path = dir.join(name);
    write_text(&path, text)?;
    Ok(path)
}

/// Write text to an exact path.
fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Boundary;
    use crate::sweep::{run_sweep, Observable, SweepOptions, SweepSpec};

    /// Minimal hand-rolled CSV reader used to check the emitters from the
    /// consumer side; deliberately not the writer's own code.
    fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .expect("csv has a header")
            .split(',')
            .map(str::to_string)
            .collect();
        let rows = lines
            .map(|line| line.split(',').map(str::to_string).collect::<Vec<_>>())
            .collect();
        (header, rows)
    }

    fn small_grid() -> GridResult {
        let spec = SweepSpec {
            j_range: (-0.8, 0.8, 3),
            gamma_range: (0.0, 1.1, 2),
            sizes: vec![4],
            delta: 1.0,
            boundary: Boundary::Periodic,
            observables: Observable::all().to_vec(),
        };
        run_sweep(&spec, &SweepOptions::default()).unwrap()
    }

    #[test]
    fn grid_csv_has_the_pinned_header_and_full_rows() {
        let result = small_grid();
        let text = grid_csv(&result);
        let (header, rows) = parse_csv(&text);
        assert_eq!(header.join(","), GRID_HEADER);
        assert_eq!(rows.len(), 6);
        for row in &rows {
            assert_eq!(row.len(), header.len());
        }
    }

    #[test]
    fn floats_survive_the_csv_round_trip_bit_for_bit() {
        let result = small_grid();
        let (header, rows) = parse_csv(&grid_csv(&result));
        let col = |name: &str| header.iter().position(|h| h == name).unwrap();
        let records: Vec<_> = result.records().collect();
        // Emission order equals record order here because the grid indexing
        // is already sorted.
        for (row, rec) in rows.iter().zip(&records) {
            let parsed: f64 = row[col("re_gap")].parse().unwrap();
            assert_eq!(parsed.to_bits(), rec.re_gap.unwrap().to_bits());
            let parsed: f64 = row[col("xi")].parse().unwrap();
            assert_eq!(parsed.to_bits(), rec.xi.unwrap().to_bits());
            let n: usize = row[col("n_sites")].parse().unwrap();
            assert_eq!(n, rec.n_sites);
        }
    }

    #[test]
    fn rows_are_sorted_by_coupling_then_gain_then_size() {
        let result = small_grid();
        let (header, rows) = parse_csv(&grid_csv(&result));
        let col = |name: &str| header.iter().position(|h| h == name).unwrap();
        let keys: Vec<(f64, f64, usize)> = rows
            .iter()
            .map(|row| {
                (
                    row[col("j_over_delta")].parse().unwrap(),
                    row[col("gamma_over_delta")].parse().unwrap(),
                    row[col("n_sites")].parse().unwrap(),
                )
            })
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
        assert_eq!(keys, sorted);
    }

    #[test]
    fn emission_is_deterministic_across_runs() {
        let a = grid_csv(&small_grid());
        let b = grid_csv(&small_grid());
        assert_eq!(a, b);
    }

    #[test]
    fn json_mirror_carries_the_same_rows_in_the_same_order() {
        let result = small_grid();
        let text = grid_json(&result).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let rows = value["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 6);
        let (header, csv_rows) = parse_csv(&grid_csv(&result));
        let col = |name: &str| header.iter().position(|h| h == name).unwrap();
        for (json_row, csv_row) in rows.iter().zip(&csv_rows) {
            let j_json = json_row["j_over_delta"].as_f64().unwrap();
            let j_csv: f64 = csv_row[col("j_over_delta")].parse().unwrap();
            assert_eq!(j_json.to_bits(), j_csv.to_bits());
            let gap_json = json_row["re_gap"].as_f64().unwrap();
            let gap_csv: f64 = csv_row[col("re_gap")].parse().unwrap();
            assert_eq!(gap_json.to_bits(), gap_csv.to_bits());
        }
        // The spec rides along for provenance.
        assert_eq!(value["spec"]["sizes"][0].as_u64(), Some(4));
    }

    #[test]
    fn failure_notes_stay_on_one_line_with_fixed_columns() {
        let spec = SweepSpec {
            j_range: (-0.5, 0.5, 2),
            gamma_range: (0.0, 0.5, 2),
            sizes: vec![5],
            delta: 1.0,
            boundary: Boundary::Periodic,
            observables: vec![Observable::Gap],
        };
        let result = run_sweep(&spec, &SweepOptions::default()).unwrap();
        let text = grid_csv(&result);
        let (header, rows) = parse_csv(&text);
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert_eq!(row.len(), header.len(), "row: {row:?}");
            let note = &row[header.len() - 1];
            assert!(note.contains("even number of sites"));
            assert!(!note.contains(','));
        }
    }

    #[test]
    fn nan_cells_parse_back_as_nan() {
        let spec = SweepSpec {
            j_range: (0.3, 0.3, 1),
            gamma_range: (0.2, 0.2, 1),
            sizes: vec![4],
            delta: 1.0,
            boundary: Boundary::Periodic,
            observables: vec![Observable::Gap],
        };
        let result = run_sweep(&spec, &SweepOptions::default()).unwrap();
        let (header, rows) = parse_csv(&grid_csv(&result));
        let col = |name: &str| header.iter().position(|h| h == name).unwrap();
        let xi: f64 = rows[0][col("xi")].parse().unwrap();
        assert!(xi.is_nan());
        assert_eq!(rows[0][col("pt_class")], "nan");
    }

    #[test]
    fn boundary_and_crossing_emitters_sort_and_format() {
        let text = boundary_csv(&[(0.5, 0.2), (-0.3, 0.1), (0.5, 0.0)]);
        let (header, rows) = parse_csv(&text);
        assert_eq!(header, vec!["j_over_delta", "gamma_over_delta"]);
        let first: f64 = rows[0][0].parse().unwrap();
        assert_eq!(first, -0.3);
        let mid: f64 = rows[1][1].parse().unwrap();
        assert_eq!(mid, 0.0, "ties on J are broken by gamma");
    }

    #[test]
    fn spectrum_blocks_are_separated_per_band() {
        let rows: Vec<SpectrumRow> = (0..2)
            .flat_map(|band| {
                [-0.5, 0.0, 0.5].map(move |j| SpectrumRow {
                    j_over_delta: j,
                    gamma_over_delta: 0.3,
                    n_sites: 4,
                    band_index: band,
                    re_energy: band as f64 + j,
                    im_energy: 0.0,
                    re_scaled: band as f64,
                    im_scaled: 0.0,
                })
            })
            .collect();
        let text = spectrum_csv(&rows);
        let blocks: Vec<&str> = text.trim_end().split("\n\n").collect();
        assert_eq!(blocks.len(), 2, "one block per band:\n{text}");
        // Block 0 contains band 0 only, in ascending J order.
        let (_, first) = parse_csv(blocks[0]);
        assert!(first.iter().all(|row| row[3] == "0"));
    }
}
