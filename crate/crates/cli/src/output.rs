//! Trace, summary and plot-data writers.

use std::path::Path;

use qoca_core::vqe::TraceRecord;

use crate::runner::SummaryRow;
use crate::{fmt_f64, CliError};

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Run(format!("{}: {other:?}", path.display())),
    }
}

/// `iter,energy,fidelity,occupancy`; fidelity is empty when no target was
/// available.
pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["iter", "energy", "fidelity", "occupancy"])
        .map_err(|e| csv_err(path, e))?;
    for r in records {
        w.write_record([
            r.iter.to_string(),
            fmt_f64(r.energy),
            r.fidelity.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.occupancy),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let bad = |m: &str| CliError::Run(format!("{}: {m}", path.display()));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| bad("short row"));
        let num = |i: usize| -> Result<f64, CliError> { field(i)?.parse().map_err(|_| bad("bad number")) };
        let fid = field(2)?;
        out.push(TraceRecord {
            iter: field(0)?.parse().map_err(|_| bad("bad iteration"))?,
            energy: num(1)?,
            fidelity: if fid.is_empty() { None } else { Some(num(2)?) },
            occupancy: num(3)?,
            params: None,
        });
    }
    Ok(out)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(rows).expect("summary rows serialize");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// Long-format `series,iter,value` files: infidelity and occupancy per
/// trace, plus one final-infidelity row per (ansatz, depth) from the summary.
pub fn write_plot_data(dir: &Path, series: &[(String, Vec<TraceRecord>)], rows: &[SummaryRow]) -> Result<(), CliError> {
    let infidelity: Vec<(String, usize, f64)> = series
        .iter()
        .flat_map(|(name, recs)| {
            recs.iter()
                .filter_map(move |r| r.fidelity.map(|f| (name.clone(), r.iter, 1.0 - f)))
        })
        .collect();
    let occupancy: Vec<(String, usize, f64)> = series
        .iter()
        .flat_map(|(name, recs)| recs.iter().map(move |r| (name.clone(), r.iter, r.occupancy)))
        .collect();
    let sweep: Vec<(String, usize, f64)> = rows
        .iter()
        .filter_map(|r| {
            r.max_fidelity
                .map(|f| (format!("{}_{}", r.ansatz, r.initial_state), r.depth, 1.0 - f))
        })
        .collect();
    write_long(&dir.join("plot_infidelity.csv"), &infidelity)?;
    write_long(&dir.join("plot_occupancy.csv"), &occupancy)?;
    write_long(&dir.join("plot_depth_sweep.csv"), &sweep)
}

pub fn write_long(path: &Path, rows: &[(String, usize, f64)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["series", "iter", "value"])
        .map_err(|e| csv_err(path, e))?;
    for (s, i, v) in rows {
        w.write_record([s.as_str(), &i.to_string(), &fmt_f64(*v)])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
