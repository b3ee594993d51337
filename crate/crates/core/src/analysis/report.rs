//! CSV emitters. Numbers are written with a fixed format so reruns give
//! byte-identical numeric columns; timings are the only varying fields.

use std::io::Write;

use super::{AnalysisError, AuditRow, EocRow, ScalingRow};

const MISSING: &str = "---";

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

fn opt_sci(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), sci)
}

fn opt_eoc(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |e| format!("{e:.5}"))
}

fn status(r: &EocRow) -> String {
    r.failure.as_ref().map_or_else(|| "ok".to_string(), |f| format!("failed: {f}"))
}

/// Long layout: one row per (order, level).
pub fn write_eoc_csv<W: Write>(w: W, tables: &[(usize, Vec<EocRow>)]) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["order", "level", "grid_size", "time", "cpu_time", "l2_error", "eoc", "status"])?;
    for (k, rows) in tables {
        for r in rows {
            out.write_record([
                k.to_string(),
                r.level.to_string(),
                r.elements.to_string(),
                sci(r.wall),
                sci(r.cpu),
                opt_sci(r.error),
                opt_eoc(r.eoc),
                status(r),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Wide layout: one row per level, `time, l2_error, eoc` per order.
pub fn write_table1_csv<W: Write>(w: W, tables: &[(usize, Vec<EocRow>)]) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["level".to_string(), "grid_size".to_string()];
    for (k, _) in tables {
        header.extend([format!("time_k{k}"), format!("l2_error_k{k}"), format!("eoc_k{k}")]);
    }
    out.write_record(&header)?;
    let nlev = tables.iter().map(|t| t.1.len()).max().unwrap_or(0);
    for l in 0..nlev {
        let size = tables.iter().find_map(|t| t.1.get(l)).map(|r| r.elements);
        let mut rec = vec![l.to_string(), size.map_or_else(|| MISSING.to_string(), |s| s.to_string())];
        for (_, rows) in tables {
            match rows.get(l) {
                Some(r) => rec.extend([sci(r.cpu), opt_sci(r.error), opt_eoc(r.eoc)]),
                None => rec.extend([MISSING.to_string(), MISSING.to_string(), MISSING.to_string()]),
            }
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_scaling_csv<W: Write>(w: W, rows: &[ScalingRow], steps: usize) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["threads", "time", "cpu_time", "speedup", "steps"])?;
    for r in rows {
        out.write_record([
            r.threads.to_string(),
            sci(r.wall),
            sci(r.wall * r.threads as f64),
            format!("{:.2}", r.speedup),
            steps.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One level of one flux in a flux comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxRow {
    pub flux: String,
    pub row: EocRow,
}

pub fn write_flux_csv<W: Write>(w: W, rows: &[FluxRow]) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["flux", "level", "grid_size", "time", "cpu_time", "l2_error", "eoc", "status"])?;
    for FluxRow { flux, row: r } in rows {
        out.write_record([
            flux.clone(),
            r.level.to_string(),
            r.elements.to_string(),
            sci(r.wall),
            sci(r.cpu),
            opt_sci(r.error),
            opt_eoc(r.eoc),
            status(r),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_audit_csv<W: Write>(w: W, species: &[String], rows: &[AuditRow]) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["step".to_string(), "t".to_string()];
    for prefix in ["total", "source_rate", "boundary_rate", "boundary_inflow", "balance"] {
        header.extend(species.iter().map(|s| format!("{prefix}_{s}")));
    }
    out.write_record(&header)?;
    for r in rows {
        let s = &r.sample;
        let mut rec = vec![s.step.to_string(), sci(s.t)];
        for col in [&s.totals, &s.source_rate, &s.boundary_rate, &r.boundary_inflow, &r.balance] {
            rec.extend(col.iter().map(|v| sci(*v)));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
