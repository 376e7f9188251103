//! CSV logs: predictions `t,sta_id,method,predicted_dbm,measured_dbm` and
//! training jobs `wall_time,sta_id,n_samples,rounds_run,best_round,val_rmse`.

use std::io::{self, BufRead, Write};

use super::{MethodKind, PredictionRecord, TrainingOutcome, TrainingRecord};

pub const PREDICTION_HEADER: &str = "t,sta_id,method,predicted_dbm,measured_dbm";
pub const TRAINING_HEADER: &str = "wall_time,sta_id,n_samples,rounds_run,best_round,val_rmse";

/// Writes predictions; an unjoined measurement is an empty field. Values use
/// shortest round-trip formatting so re-reading is exact.
pub fn write_predictions_csv<W: Write>(mut out: W, records: &[PredictionRecord]) -> io::Result<()> {
    writeln!(out, "{PREDICTION_HEADER}")?;
    for r in records {
        let measured = r.measured_dbm.map(|m| m.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", r.t, r.sta, r.method, r.predicted_dbm, measured)?;
    }
    out.flush()
}

pub fn read_predictions_csv<R: BufRead>(input: R) -> io::Result<Vec<PredictionRecord>> {
    let bad = |line: usize, msg: &str| io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"));
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != PREDICTION_HEADER {
        return Err(bad(1, &format!("expected header `{PREDICTION_HEADER}`")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 5 {
            return Err(bad(lineno, "expected 5 fields"));
        }
        let num = |s: &str, name: &str| s.parse::<f64>().map_err(|_| bad(lineno, &format!("bad {name} `{s}`")));
        out.push(PredictionRecord {
            t: num(f[0], "t")?,
            sta: f[1].parse().map_err(|_| bad(lineno, "bad sta_id"))?,
            method: f[2].parse::<MethodKind>().map_err(|e| bad(lineno, &e))?,
            predicted_dbm: num(f[3], "predicted_dbm")?,
            measured_dbm: if f[4].is_empty() { None } else { Some(num(f[4], "measured_dbm")?) },
            model_version: 0,
        });
    }
    Ok(out)
}

pub fn write_training_csv<W: Write>(mut out: W, records: &[TrainingRecord]) -> io::Result<()> {
    writeln!(out, "{TRAINING_HEADER}")?;
    for r in records {
        match &r.outcome {
            TrainingOutcome::Trained {
                rounds_run,
                best_round,
                val_rmse,
            } => writeln!(
                out,
                "{},{},{},{},{},{}",
                r.clock, r.sta, r.n_samples, rounds_run, best_round, val_rmse
            )?,
            TrainingOutcome::Skipped(_) => writeln!(out, "{},{},{},0,0,", r.clock, r.sta, r.n_samples)?,
        }
    }
    out.flush()
}
