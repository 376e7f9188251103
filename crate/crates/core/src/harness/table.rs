use std::fmt::Write as _;
use std::io::{self, Write};

use crate::engine::{MethodKind, PredictionRecord};

pub const DEFAULT_WINDOW_S: f64 = 100.0;
/// Scoring skips warm-up: the first window opens here.
pub const SCORE_START_S: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub start: f64,
    pub end: f64,
    /// One entry per column; `None` when the column has no scored
    /// prediction in this window.
    pub values: Vec<Option<f64>>,
}

/// Per-window RMSE in dB, one column per method (or per queue length).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub window_length: f64,
    pub columns: Vec<String>,
    pub rows: Vec<ErrorRow>,
}

pub fn rmse(pairs: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for (a, b) in pairs {
        sum += (a - b) * (a - b);
        n += 1;
    }
    (n > 0).then(|| (sum / n as f64).sqrt())
}

/// RMSE between predicted and measured power per `window_length` window
/// over `[from, to)`, keyed on each prediction's feature time `t`. Only
/// joined predictions count. Columns follow the canonical method order and
/// list every method present in `log`.
pub fn windowed_rmse(log: &[PredictionRecord], window_length: f64, from: f64, to: f64) -> ErrorTable {
    let methods: Vec<MethodKind> = MethodKind::ALL
        .into_iter()
        .filter(|m| log.iter().any(|p| p.method == *m))
        .collect();
    let columns = methods.iter().map(|m| m.label().to_string()).collect();
    let n_windows = if to > from {
        ((to - from) / window_length - 1e-9).ceil().max(0.0) as usize
    } else {
        0
    };
    let mut acc = vec![vec![(0.0f64, 0usize); methods.len()]; n_windows];
    for p in log {
        let Some(measured) = p.measured_dbm else { continue };
        if p.t < from || p.t >= to {
            continue;
        }
        let Some(col) = methods.iter().position(|m| *m == p.method) else { continue };
        let w = (((p.t - from) / window_length).floor() as usize).min(n_windows - 1);
        let d = p.predicted_dbm - measured;
        acc[w][col].0 += d * d;
        acc[w][col].1 += 1;
    }
    let rows = acc
        .into_iter()
        .enumerate()
        .map(|(i, cells)| ErrorRow {
            start: from + i as f64 * window_length,
            end: (from + (i + 1) as f64 * window_length).min(to),
            values: cells
                .into_iter()
                .map(|(s, n)| (n > 0).then(|| (s / n as f64).sqrt()))
                .collect(),
        })
        .collect();
    ErrorTable {
        window_length,
        columns,
        rows,
    }
}

impl ErrorTable {
    pub fn empty(window_length: f64, columns: Vec<String>) -> Self {
        ErrorTable {
            window_length,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn value(&self, row: &ErrorRow, column: &str) -> Option<f64> {
        self.column(column).and_then(|c| row.values.get(c).copied().flatten())
    }

    /// Value for the window starting at `start`.
    pub fn get(&self, start: f64, column: &str) -> Option<f64> {
        let row = self.rows.iter().find(|r| (r.start - start).abs() < 1e-9)?;
        self.value(row, column)
    }

    /// Cell-wise mean over tables with the same layout; absent cells are
    /// skipped and a cell absent everywhere stays absent.
    pub fn mean(tables: &[ErrorTable]) -> Option<ErrorTable> {
        let first = tables.first()?;
        let mut out = first.clone();
        for (i, row) in out.rows.iter_mut().enumerate() {
            for (c, cell) in row.values.iter_mut().enumerate() {
                let vals: Vec<f64> = tables
                    .iter()
                    .filter_map(|t| t.rows.get(i).and_then(|r| r.values.get(c).copied().flatten()))
                    .collect();
                *cell = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            }
        }
        Some(out)
    }

    /// Mean of a column over the windows starting in `[from, to)`.
    pub fn span_mean(&self, column: &str, from: f64, to: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.start >= from - 1e-9 && r.start < to - 1e-9)
            .filter_map(|r| self.value(r, column))
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    /// `window_start,window_end,<columns...>`; absent cells are empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "window_start,window_end")?;
        for c in &self.columns {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
        for r in &self.rows {
            write!(out, "{},{}", r.start, r.end)?;
            for v in &r.values {
                match v {
                    Some(v) => write!(out, ",{v}")?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        out.flush()
    }

    /// Fixed-width text table in dB with three decimals; absent cells show
    /// a dash.
    pub fn to_text(&self) -> String {
        let labels: Vec<String> = self
            .rows
            .iter()
            .map(|r| format!("{} s - {} s", r.start, r.end))
            .collect();
        let first = labels.iter().map(String::len).chain(["window".len()]).max().unwrap_or(6);
        let width = self.columns.iter().map(String::len).chain([8]).max().unwrap_or(8);
        let mut s = String::new();
        let _ = write!(s, "{:<first$}", "window");
        for c in &self.columns {
            let _ = write!(s, "  {c:>width$}");
        }
        s.push('\n');
        for (label, r) in labels.iter().zip(&self.rows) {
            let _ = write!(s, "{label:<first$}");
            for v in &r.values {
                match v {
                    Some(v) => {
                        let _ = write!(s, "  {v:>width$.3}");
                    }
                    None => {
                        let _ = write!(s, "  {:>width$}", "-");
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}
