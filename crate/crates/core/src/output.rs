//! Output files: CSV tables tagged with the producing config, the run
//! manifest, field snapshots and binary checkpoints.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::lattice::TruncatedLattice;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"DCOR1";

/// A CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // Shortest round-trip representation: deterministic and exact.
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    /// Renders the table with a leading `# manifest:` line.
    pub fn to_csv(&self, tag: &str) -> Result<String> {
        let mut out = format!("# manifest: {tag}\n");
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            if row.len() != self.header.len() {
                return Err(Error::InvalidParameter(format!(
                    "row has {} cells, header has {}",
                    row.len(),
                    self.header.len()
                )));
            }
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        out.push_str(&String::from_utf8_lossy(&bytes));
        Ok(out)
    }
}

/// Reads a CSV written by [`Table::to_csv`], returning the manifest tag,
/// header and rows.
pub fn read_csv(text: &str) -> Result<(String, Vec<String>, Vec<Vec<String>>)> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let tag = first
        .strip_prefix("# manifest: ")
        .ok_or_else(|| Error::InvalidParameter("missing manifest line".into()))?
        .to_string();
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    Ok((tag, header, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub config_sha256: String,
    pub outputs: Vec<String>,
    pub summary: BTreeMap<String, serde_json::Value>,
    pub wall_seconds: f64,
}

/// Writes CSV tables and the manifest of one command into a directory.
#[derive(Debug)]
pub struct OutputDir {
    pub dir: PathBuf,
    pub command: String,
    pub config: RunConfig,
    hash: String,
    outputs: Vec<String>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl OutputDir {
    pub fn create(dir: &Path, command: &str, config: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config: config.clone(),
            hash: config.content_hash(),
            outputs: Vec::new(),
            summary: BTreeMap::new(),
        })
    }

    pub fn tag(&self) -> String {
        format!("config_sha256={} command={}", self.hash, self.command)
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, table.to_csv(&self.tag())?)?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    pub fn finish(self, wall_seconds: f64) -> Result<Manifest> {
        let m = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config,
            config_sha256: self.hash,
            outputs: self.outputs,
            summary: self.summary,
            wall_seconds,
        };
        std::fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(m)
    }
}

/// Snapshot of a full displacement field, one row per atom.
pub fn field_table(lat: &TruncatedLattice, u: &[f64]) -> Table {
    let mut t = Table::new(&["cell_i", "cell_j", "sublattice", "layer", "x", "y", "u"]);
    for (at, &v) in lat.atoms().iter().zip(u) {
        let sp = at.index.species;
        t.push(vec![
            at.index.cell.0.into(),
            at.index.cell.1.into(),
            sp.sublattice.label().into(),
            sp.layer.label().into(),
            at.pos.x.into(),
            at.pos.y.into(),
            v.into(),
        ]);
    }
    t
}

/// Lattice parameters stored in a checkpoint header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub a: f64,
    pub layer_gap: f64,
    pub half_width: f64,
    pub cutoff: f64,
    pub n_y: f64,
    pub eps: f64,
}

impl CheckpointHeader {
    pub fn new(lat: &TruncatedLattice, eps: f64) -> Self {
        Self {
            a: lat.spec.a,
            layer_gap: lat.spec.layer_gap,
            half_width: lat.half_width,
            cutoff: lat.cutoff,
            n_y: lat.n_y as f64,
            eps,
        }
    }

    fn fields(&self) -> [f64; 6] {
        [self.a, self.layer_gap, self.half_width, self.cutoff, self.n_y, self.eps]
    }
}

/// `DCOR1`, six little-endian `f64` lattice parameters, the dof count as
/// little-endian `u64`, then the dofs as `f64`.
pub fn write_checkpoint(w: &mut impl Write, header: &CheckpointHeader, dofs: &[f64]) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    for v in header.fields() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(dofs.len() as u64).to_le_bytes())?;
    for v in dofs {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<(CheckpointHeader, Vec<f64>)> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let mut buf = [0u8; 8];
    let mut f = [0.0; 6];
    for v in &mut f {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    r.read_exact(&mut buf)?;
    let n = u64::from_le_bytes(buf);
    if n > (1 << 32) {
        return Err(Error::Checkpoint(format!("implausible dof count {n}")));
    }
    let mut dofs = Vec::with_capacity(n as usize);
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        dofs.push(f64::from_le_bytes(buf));
    }
    let header = CheckpointHeader {
        a: f[0],
        layer_gap: f[1],
        half_width: f[2],
        cutoff: f[3],
        n_y: f[4],
        eps: f[5],
    };
    Ok((header, dofs))
}
