//! Trace export: power samples as `t,tx_id,power_dbm` CSV and frames as raw
//! RGB with an 8-byte little-endian `(width, height)` header.

use std::io::{self, BufRead, Read, Write};

use super::{Frame, PowerSample};

pub const POWER_CSV_HEADER: &str = "t,tx_id,power_dbm";

pub fn write_power_csv<W: Write>(mut out: W, samples: &[PowerSample]) -> io::Result<()> {
    writeln!(out, "{POWER_CSV_HEADER}")?;
    for s in samples {
        writeln!(out, "{},{},{}", s.t, s.tx, s.power_dbm)?;
    }
    Ok(())
}

pub fn read_power_csv<R: BufRead>(input: R) -> io::Result<Vec<PowerSample>> {
    let bad = |line: usize, msg: &str| io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"));
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != POWER_CSV_HEADER {
                return Err(bad(1, "expected header t,tx_id,power_dbm"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let (Some(t), Some(tx), Some(p), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(bad(i + 1, "expected 3 fields"));
        };
        out.push(PowerSample {
            t: t.trim().parse().map_err(|_| bad(i + 1, "bad t"))?,
            tx: tx.trim().parse().map_err(|_| bad(i + 1, "bad tx_id"))?,
            power_dbm: p.trim().parse().map_err(|_| bad(i + 1, "bad power_dbm"))?,
        });
    }
    Ok(out)
}

pub fn write_frame_raw<W: Write>(mut out: W, frame: &Frame) -> io::Result<()> {
    out.write_all(&frame.width.to_le_bytes())?;
    out.write_all(&frame.height.to_le_bytes())?;
    out.write_all(&frame.pixels)
}

/// Reads one raw frame. The timestamp is not stored; the caller supplies it.
pub fn read_frame_raw<R: Read>(mut input: R, t: f64) -> io::Result<Frame> {
    let mut header = [0u8; 8];
    input.read_exact(&mut header)?;
    let width = u32::from_le_bytes(header[0..4].try_into().unwrap());
    let height = u32::from_le_bytes(header[4..8].try_into().unwrap());
    let mut pixels = vec![0u8; 3 * width as usize * height as usize];
    input.read_exact(&mut pixels)?;
    Ok(Frame {
        t,
        width,
        height,
        pixels,
    })
}
