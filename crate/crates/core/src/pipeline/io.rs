//! Labeled samples as CSV: `t,label,v0,...,v{d-1}`.

use std::io::{self, BufRead, Write};

use crate::Scalar;

use super::{FeatureKind, FeatureVector, LabeledSample};

pub fn write_samples_csv<T: Scalar, W: Write>(mut out: W, samples: &[LabeledSample<T>]) -> io::Result<()> {
    let dim = samples.first().map_or(0, |s| s.feature.len());
    write!(out, "t,label")?;
    for j in 0..dim {
        write!(out, ",v{j}")?;
    }
    writeln!(out)?;
    for s in samples {
        if s.feature.len() != dim {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "mixed feature dimensions"));
        }
        write!(out, "{},{}", s.feature.t, s.label)?;
        for v in s.feature.iter() {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Loads samples written by [`write_samples_csv`]. The label timestamp is
/// not stored and is set to `t + t_f`.
pub fn read_samples_csv<T: Scalar, R: BufRead>(
    input: R,
    kind: FeatureKind,
    t_f: f64,
) -> io::Result<Vec<LabeledSample<T>>> {
    let bad = |line: usize, msg: String| io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"));
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty file".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "t" || cols[1] != "label" {
        return Err(bad(1, "expected header t,label,v0,...".into()));
    }
    let dim = cols.len() - 2;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(bad(i + 2, format!("expected {} fields, got {}", dim + 2, fields.len())));
        }
        let t: f64 = fields[0].parse().map_err(|_| bad(i + 2, "bad t".into()))?;
        let label: T = fields[1].parse().map_err(|_| bad(i + 2, "bad label".into()))?;
        let values = fields[2..]
            .iter()
            .enumerate()
            .map(|(j, f)| f.parse::<T>().map_err(|_| bad(i + 2, format!("bad v{j}"))))
            .collect::<Result<Vec<T>, _>>()?;
        out.push(LabeledSample {
            feature: FeatureVector::from_values(t, kind, values),
            label,
            label_t: t + t_f,
        });
    }
    Ok(out)
}
