//! Text formats: lossless float printing, kernel dumps and CSV lines.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::chains::{Kernel, KernelMeta};
use crate::error::{invalid, Error, Result};

/// Scientific notation with 17 significant digits; parses back to the same `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Joins fields into one CSV line, quoting fields that need it.
pub fn csv_line<S: AsRef<str>>(fields: &[S]) -> String {
    fields
        .iter()
        .map(|f| {
            let f = f.as_ref();
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct DumpHeader {
    #[serde(flatten)]
    meta: KernelMeta,
    states: usize,
}

/// Writes a JSON header line, a `row,col,prob` line, then one line per nonzero entry.
pub fn write_kernel_dump<W: Write>(kernel: &Kernel<f64>, mut out: W) -> Result<()> {
    let header = DumpHeader { meta: kernel.meta().clone(), states: kernel.size() };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    writeln!(out, "row,col,prob")?;
    for (x, y, p) in kernel.entries() {
        writeln!(out, "{x},{y},{}", fmt17(*p))?;
    }
    Ok(())
}

/// Parsed kernel dump.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelDump {
    pub meta: KernelMeta,
    pub states: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl KernelDump {
    /// Rebuilds the kernel; the stationary vector is recomputed by power iteration.
    pub fn into_kernel(self) -> Result<Kernel<f64>> {
        let mut rows = vec![Vec::new(); self.states];
        for (x, y, p) in self.entries {
            if x >= self.states {
                return Err(invalid!("row {x} out of range 0..{}", self.states));
            }
            rows[x].push((y, p));
        }
        let uniform = Kernel::<f64>::uniform_stationary(self.states);
        let kernel = Kernel::from_rows(self.meta, rows, uniform)?;
        let pi = kernel.power_iteration_stationary(1e-15, 1_000_000)?;
        kernel.with_stationary(pi)
    }
}

pub fn read_kernel_dump<R: BufRead>(input: R) -> Result<KernelDump> {
    let mut lines = input.lines();
    let header: DumpHeader = match lines.next() {
        Some(line) => serde_json::from_str(&line?)?,
        None => return Err(invalid!("empty kernel dump")),
    };
    let columns = lines.next().transpose()?;
    if columns.as_deref().map(str::trim) != Some("row,col,prob") {
        return Err(invalid!("missing row,col,prob column header"));
    }
    let mut entries = Vec::new();
    for (no, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::InvalidArgument(format!("malformed dump line {}: {line:?}", no + 3));
        let mut parts = line.split(',');
        let (Some(x), Some(y), Some(p), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        entries.push((
            x.trim().parse().map_err(|_| bad())?,
            y.trim().parse().map_err(|_| bad())?,
            p.trim().parse().map_err(|_| bad())?,
        ));
    }
    Ok(KernelDump { meta: header.meta, states: header.states, entries })
}
