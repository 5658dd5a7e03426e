//! Plain-text network snapshots.
//!
//! ```text
//! art1 <N> <M> <vigilance> <active_clusters>
//! <N prototype digits, e.g. 0110>
//! <N bottom-up weights, space separated>
//! ...one digit line and one weight line per active cluster
//! ```
//!
//! Reals are written in scientific notation with 17 significant digits so
//! that a load reproduces every `f64` exactly.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::art1::{Art1Config, Art1Error, Art1Network};

const MAGIC: &str = "art1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("snapshot describes an invalid network: {0}")]
    Network(#[from] Art1Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn format_err(line: usize, message: impl Into<String>) -> SnapshotError {
    SnapshotError::Format {
        line,
        message: message.into(),
    }
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders a network in snapshot format.
pub fn to_string(net: &Art1Network) -> String {
    let cfg = net.config();
    let mut out = String::new();
    writeln!(
        out,
        "{MAGIC} {} {} {} {}",
        cfg.input_dim,
        cfg.max_clusters,
        real(cfg.vigilance),
        net.active_clusters()
    )
    .unwrap();
    for (t, b) in net.prototypes().iter().zip(net.bottom_up_rows()) {
        out.extend(t.iter().map(|&bit| if bit == 1 { '1' } else { '0' }));
        out.push('\n');
        let weights: Vec<String> = b.iter().map(|&w| real(w)).collect();
        out.push_str(&weights.join(" "));
        out.push('\n');
    }
    out
}

pub fn write<W: Write>(mut w: W, net: &Art1Network) -> io::Result<()> {
    w.write_all(to_string(net).as_bytes())
}

/// Parses a snapshot. The loaded network uses default epoch and capacity
/// settings, which the format does not record.
pub fn read<R: BufRead>(r: R) -> Result<Art1Network, SnapshotError> {
    let mut lines = r.lines();
    let mut next = |n: usize| -> Result<String, SnapshotError> {
        match lines.next() {
            Some(l) => Ok(l?),
            None => Err(format_err(n, "unexpected end of snapshot")),
        }
    };

    let header = next(1)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != MAGIC {
        return Err(format_err(1, "expected `art1 <N> <M> <vigilance> <active>`"));
    }
    let int = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| format_err(1, format!("bad {what}: {s:?}")))
    };
    let n = int(fields[1], "input dimension")?;
    let m = int(fields[2], "max clusters")?;
    let vigilance: f64 = fields[3]
        .parse()
        .map_err(|_| format_err(1, format!("bad vigilance: {:?}", fields[3])))?;
    let active = int(fields[4], "active cluster count")?;
    // the row count comes from the file; bound it before allocating
    if active > m {
        return Err(format_err(1, format!("{active} active clusters exceed maximum {m}")));
    }

    let mut top_down = Vec::with_capacity(active);
    let mut bottom_up = Vec::with_capacity(active);
    for j in 0..active {
        let digits_line = 2 + 2 * j;
        let digits = next(digits_line)?;
        let t = digits
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                other => Err(format_err(digits_line, format!("non-binary digit {other:?}"))),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        let weights = next(digits_line + 1)?;
        let b = weights
            .split_whitespace()
            .map(|w| w.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| format_err(digits_line + 1, format!("bad weight: {e}")))?;
        top_down.push(t);
        bottom_up.push(b);
    }
    if let Some(extra) = lines.next() {
        if !extra?.trim().is_empty() {
            return Err(format_err(2 + 2 * active, "trailing data after last cluster"));
        }
    }

    let config = Art1Config::new(n, vigilance, m);
    Ok(Art1Network::from_parts(config, top_down, bottom_up)?)
}

pub fn from_str(s: &str) -> Result<Art1Network, SnapshotError> {
    read(s.as_bytes())
}
