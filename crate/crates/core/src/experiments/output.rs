//! CSV tables and trajectory files.
//!
//! Every CSV starts with a `# manifest <run id>` comment followed by a header
//! row. Floats are written in Rust's shortest round-trip form, so equal values
//! always give equal bytes.
//!
//! Binary trajectories (`traj_<id>.bin`) are little-endian:
//!
//! | offset | size | content                          |
//! |--------|------|----------------------------------|
//! | 0      | 8    | magic `AMSTRAJ\0`                |
//! | 8      | 4    | format version (`u32`, = 1)      |
//! | 12     | 4    | state dimension `N` (`u32`)      |
//! | 16     | 8    | row count (`u64`)                |
//! | 24     | 8    | storage stride (`u64`)           |
//! | 32     | ...  | rows of `N + 1` `f64`: step, x_1..x_N |

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rare_event::StoppedRun;

pub const TRAJ_MAGIC: &[u8; 8] = b"AMSTRAJ\0";
pub const TRAJ_VERSION: u32 = 1;

/// In-memory CSV table.
#[derive(Clone, Debug)]
pub struct CsvTable {
    run_id: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(run_id: &str, header: &[&str]) -> Self {
        CsvTable { run_id: run_id.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# manifest {}", self.run_id).unwrap();
        writeln!(s, "{}", self.header.join(",")).unwrap();
        for r in &self.rows {
            writeln!(s, "{}", r.join(",")).unwrap();
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

/// Formats a cell value.
pub fn cell<T: std::fmt::Display>(v: T) -> String {
    v.to_string()
}

/// Parses a CSV written by [`CsvTable`] into its header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no header", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Ok((header, rows))
}

/// Writes the stored path as CSV with columns `step, time, x_0 .. x_{N-1}`.
pub fn write_trajectory_csv(path: &Path, run_id: &str, run: &StoppedRun, dt: f64) -> Result<()> {
    let mut header = vec!["step".to_string(), "time".to_string()];
    header.extend((0..run.dim).map(|i| format!("x{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = CsvTable::new(run_id, &header_refs);
    for (step, x) in run.path() {
        let mut row = vec![cell(step), cell(step as f64 * dt)];
        row.extend(x.iter().map(cell));
        table.push(row);
    }
    table.write(path)
}

pub fn write_trajectory_bin(path: &Path, run: &StoppedRun) -> Result<()> {
    let mut buf = Vec::with_capacity(32 + run.len_stored() * (run.dim + 1) * 8);
    buf.extend_from_slice(TRAJ_MAGIC);
    buf.extend_from_slice(&TRAJ_VERSION.to_le_bytes());
    buf.extend_from_slice(&(run.dim as u32).to_le_bytes());
    buf.extend_from_slice(&(run.len_stored() as u64).to_le_bytes());
    buf.extend_from_slice(&run.stride.to_le_bytes());
    for (step, x) in run.path() {
        buf.extend_from_slice(&(step as f64).to_le_bytes());
        for v in x {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

/// Contents of a binary trajectory file.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryFile {
    pub dim: usize,
    pub stride: u64,
    pub steps: Vec<u64>,
    /// Row-major states, `steps.len() * dim` values.
    pub states: Vec<f64>,
}

impl TrajectoryFile {
    pub fn state(&self, row: usize) -> &[f64] {
        &self.states[row * self.dim..(row + 1) * self.dim]
    }
}

pub fn read_trajectory_bin(path: &Path) -> Result<TrajectoryFile> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |msg: &str| Error::Io(io::Error::new(io::ErrorKind::InvalidData, format!("{}: {msg}", path.display())));
    if bytes.len() < 32 || &bytes[..8] != TRAJ_MAGIC {
        return Err(bad("not a trajectory file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(8) != TRAJ_VERSION {
        return Err(bad("unsupported version"));
    }
    let dim = u32_at(12) as usize;
    let rows = u64_at(16) as usize;
    let stride = u64_at(24);
    if bytes.len() != 32 + rows * (dim + 1) * 8 {
        return Err(bad("length does not match header"));
    }
    let mut steps = Vec::with_capacity(rows);
    let mut states = Vec::with_capacity(rows * dim);
    for (k, chunk) in bytes[32..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if k % (dim + 1) == 0 {
            steps.push(v as u64);
        } else {
            states.push(v);
        }
    }
    Ok(TrajectoryFile { dim, stride, steps, states })
}
