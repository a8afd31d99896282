//! File formats: delay-sample input, trace and summary CSVs, metadata sidecar.
//!
//! All outputs are written to a temporary file in the destination directory
//! and renamed into place, so a failed write never leaves a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use delayed_bandit_core::DelayDistribution;
use serde::Deserialize;

use crate::error::{HarnessError, Result};
use crate::runner::{RegretTrace, SummaryStats};

pub const TRACE_FILE: &str = "traces.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const METADATA_FILE: &str = "metadata.txt";

/// Reads a delay-sample file: one non-negative number per line, blank lines
/// and lines starting with `#` ignored. Samples become `floor(scale · x)`.
pub fn load_empirical(path: &Path, scale: f64) -> Result<DelayDistribution> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let samples = parse_delay_samples(&text).map_err(|(line, message)| HarnessError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })?;
    if samples.is_empty() {
        return Err(HarnessError::EmptyDelayFile { path: path.to_path_buf() });
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(HarnessError::Config(format!("delay_scale must be > 0, got {scale}")));
    }
    Ok(DelayDistribution::empirical(&samples, scale)?)
}

fn parse_delay_samples(text: &str) -> std::result::Result<Vec<f64>, (usize, String)> {
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let x: f64 = line
            .parse()
            .map_err(|_| (i + 1, format!("not a number: `{line}`")))?;
        if !(x.is_finite() && x >= 0.0) {
            return Err((i + 1, format!("delay must be a finite non-negative number, got `{line}`")));
        }
        samples.push(x);
    }
    Ok(samples)
}

/// Shortest representation would drop below ten significant digits for
/// round numbers; scientific notation with 17 digits is lossless.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| HarnessError::io(path, e))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        body(&mut w).map_err(|e| HarnessError::io(path, e))?;
        w.flush().map_err(|e| HarnessError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

/// Writes `run_id,t,cum_regret` rows, rounds numbered from 1.
pub fn write_traces(path: &Path, traces: &[RegretTrace]) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "run_id,t,cum_regret")?;
        for trace in traces {
            for (t, r) in trace.cumulative.iter().enumerate() {
                writeln!(w, "{},{},{}", trace.run_id, t + 1, fmt_f64(*r))?;
            }
        }
        Ok(())
    })
}

/// Writes `t,mean_regret,std_regret` rows.
pub fn write_summary(path: &Path, stats: &SummaryStats) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "t,mean_regret,std_regret")?;
        for (t, (m, s)) in stats.mean.iter().zip(&stats.std).enumerate() {
            writeln!(w, "{},{},{}", t + 1, fmt_f64(*m), fmt_f64(*s))?;
        }
        Ok(())
    })
}

/// Writes `key = value` lines.
pub fn write_metadata(path: &Path, entries: &[(String, String)]) -> Result<()> {
    write_atomic(path, |w| {
        for (k, v) in entries {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    })
}

/// Writes `traces.csv` and `summary.csv` into `dir`, creating it if needed.
pub fn emit_csv(traces: &[RegretTrace], stats: &SummaryStats, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_traces(&dir.join(TRACE_FILE), traces)?;
    write_summary(&dir.join(SUMMARY_FILE), stats)
}

#[derive(Deserialize)]
struct TraceRow {
    run_id: u64,
    t: u64,
    cum_regret: f64,
}

#[derive(Deserialize)]
struct SummaryRow {
    t: u64,
    mean_regret: f64,
    std_regret: f64,
}

fn csv_err(path: &Path, source: csv::Error) -> HarnessError {
    HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a trace CSV back into per-run traces, in file order.
pub fn read_traces(path: &Path) -> Result<Vec<RegretTrace>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut traces: Vec<RegretTrace> = Vec::new();
    for (i, row) in reader.deserialize::<TraceRow>().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        match traces.last_mut() {
            Some(trace) if trace.run_id == row.run_id => {
                if row.t != trace.cumulative.len() as u64 + 1 {
                    return Err(HarnessError::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("expected t = {}, found {}", trace.cumulative.len() + 1, row.t),
                    });
                }
                trace.cumulative.push(row.cum_regret);
            }
            _ => {
                if row.t != 1 {
                    return Err(HarnessError::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("run {} does not start at t = 1", row.run_id),
                    });
                }
                traces.push(RegretTrace {
                    run_id: row.run_id,
                    cumulative: vec![row.cum_regret],
                });
            }
        }
    }
    Ok(traces)
}

/// Reads a summary CSV as `(mean, std)` columns.
pub fn read_summary(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let (mut mean, mut std) = (Vec::new(), Vec::new());
    for (i, row) in reader.deserialize::<SummaryRow>().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        if row.t != i as u64 + 1 {
            return Err(HarnessError::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: format!("expected t = {}, found {}", i + 1, row.t),
            });
        }
        mean.push(row.mean_regret);
        std.push(row.std_regret);
    }
    Ok((mean, std))
}
