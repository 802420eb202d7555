// SPDX-License-Identifier: Apache-2.0

//! On-disk formats: the binary `.pded` data set, a 1D CSV variant, coefficient
//! text blocks and discovery reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, ensure, Context, Result};
use pded_core::library::{format_coefficients, parse_coefficients};
use pded_core::{Boundary, CoefficientVector, Dataset, Grid, TermLibrary};

pub const MAGIC: &[u8; 4] = b"PDED";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Pded,
    Csv,
}

impl DataFormat {
    /// `.csv` files are CSV, everything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Pded,
        }
    }
}

impl std::str::FromStr for DataFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pded" | "binary" => Ok(DataFormat::Pded),
            "csv" => Ok(DataFormat::Csv),
            _ => bail!("unknown data format `{s}` (expected pded or csv)"),
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| anyhow!("writing {}: {}", path.display(), e.error))?;
    Ok(())
}

pub fn encode_pded(data: &Dataset) -> Vec<u8> {
    let grid = data.grid();
    let n = grid.ndim();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(n as u8);
    out.extend_from_slice(&(data.n_components() as u32).to_le_bytes());
    for &d in grid.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &s in grid.spacing() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    for &o in grid.origin() {
        out.extend_from_slice(&o.to_le_bytes());
    }
    out.push(grid.boundary().to_u8());
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    for &t in data.times() {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for s in data.snapshots() {
        for &v in s.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        ensure!(
            self.pos + n <= self.buf.len(),
            "truncated data file at byte {}",
            self.pos
        );
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn decode_pded(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Reader { buf: bytes, pos: 0 };
    ensure!(r.take(4)? == MAGIC, "not a .pded file (bad magic)");
    let version = r.u16()?;
    ensure!(version == VERSION, "unsupported .pded version {version}");
    let n = r.u8()? as usize;
    let nc = r.u32()? as usize;
    let dims: Vec<usize> = (0..n).map(|_| r.u32().map(|d| d as usize)).collect::<Result<_>>()?;
    let spacing = r.f64s(n)?;
    let origin = r.f64s(n)?;
    let b = r.u8()?;
    let boundary = Boundary::from_u8(b).ok_or_else(|| anyhow!("unknown boundary code {b}"))?;
    let count = r.u32()? as usize;
    let times = r.f64s(count)?;
    let grid = Arc::new(Grid::new(dims, spacing, origin, boundary)?);
    let m = nc
        .checked_mul(grid.len())
        .ok_or_else(|| anyhow!("field size overflows"))?;
    let snaps = (0..count).map(|_| r.f64s(m)).collect::<Result<Vec<_>>>()?;
    ensure!(r.pos == bytes.len(), "{} trailing bytes", bytes.len() - r.pos);
    Ok(Dataset::from_raw_snapshots(grid, nc, times, snaps)?)
}

/// `t,x,f1[,f2…]` rows, preceded by a `#` line carrying the exact grid.
pub fn encode_csv(data: &Dataset) -> Result<String> {
    let grid = data.grid();
    ensure!(grid.ndim() == 1, "CSV export supports 1D data only");
    let nc = data.n_components();
    let mut out = String::new();
    writeln!(
        out,
        "# spacing={:e} origin={:e} boundary={}",
        grid.spacing()[0],
        grid.origin()[0],
        boundary_name(grid.boundary())
    )?;
    out.push_str("t,x");
    for c in 0..nc {
        write!(out, ",f{}", c + 1)?;
    }
    out.push('\n');
    for (t, s) in data.times().iter().zip(data.snapshots()) {
        for k in 0..grid.len() {
            write!(out, "{t:e},{:e}", grid.coord(0, k))?;
            for c in 0..nc {
                write!(out, ",{:e}", s.component(c)[k])?;
            }
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn decode_csv(text: &str) -> Result<Dataset> {
    let mut spacing = None;
    let mut origin = None;
    let mut boundary = Boundary::ZeroPad;
    let mut header_seen = false;
    let mut nc = 0;
    let mut rows: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            for kv in meta.split_whitespace() {
                match kv.split_once('=') {
                    Some(("spacing", v)) => spacing = Some(v.parse::<f64>()?),
                    Some(("origin", v)) => origin = Some(v.parse::<f64>()?),
                    Some(("boundary", v)) => boundary = parse_boundary(v)?,
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            ensure!(
                cols.len() >= 3 && cols[0] == "t" && cols[1] == "x",
                "CSV header must be `t,x,f1[,f2…]`"
            );
            nc = cols.len() - 2;
            header_seen = true;
            continue;
        }
        let vals = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("CSV line {}", lineno + 1))?;
        ensure!(
            vals.len() == nc + 2,
            "CSV line {} has {} columns, expected {}",
            lineno + 1,
            vals.len(),
            nc + 2
        );
        rows.push((vals[0], vals[1], vals[2..].to_vec()));
    }
    ensure!(!rows.is_empty(), "CSV file has no data rows");
    let t0 = rows[0].0;
    let nx = rows.iter().take_while(|r| r.0 == t0).count();
    ensure!(rows.len().is_multiple_of(nx), "rows do not form complete snapshots");
    let x0 = rows[0].1;
    let dx = match spacing {
        Some(d) => d,
        None => {
            ensure!(nx >= 2, "need at least two nodes to infer spacing");
            rows[1].1 - x0
        }
    };
    let grid = Arc::new(Grid::new(vec![nx], vec![dx], vec![origin.unwrap_or(x0)], boundary)?);
    let mut times = Vec::new();
    let mut snaps = Vec::new();
    for chunk in rows.chunks(nx) {
        let t = chunk[0].0;
        ensure!(chunk.iter().all(|r| r.0 == t), "snapshot at t={t} is ragged");
        let mut data = vec![0.0; nc * nx];
        for (k, r) in chunk.iter().enumerate() {
            for c in 0..nc {
                data[c * nx + k] = r.2[c];
            }
        }
        times.push(t);
        snaps.push(data);
    }
    Ok(Dataset::from_raw_snapshots(grid, nc, times, snaps)?)
}

pub fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::ZeroPad => "zeropad",
        Boundary::Periodic => "periodic",
    }
}

pub fn parse_boundary(s: &str) -> Result<Boundary> {
    match s.to_ascii_lowercase().as_str() {
        "zeropad" | "zero" => Ok(Boundary::ZeroPad),
        "periodic" => Ok(Boundary::Periodic),
        _ => bail!("unknown boundary `{s}`"),
    }
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let data = if bytes.starts_with(MAGIC) {
        decode_pded(&bytes)
    } else {
        decode_csv(std::str::from_utf8(&bytes).context("data file is neither .pded nor text")?)
    };
    data.with_context(|| format!("parsing {}", path.display()))
}

pub fn write_dataset(path: &Path, data: &Dataset, format: DataFormat) -> Result<()> {
    let bytes = match format {
        DataFormat::Pded => encode_pded(data),
        DataFormat::Csv => encode_csv(data)?.into_bytes(),
    };
    write_atomic(path, &bytes)
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn format_key_values(kv: &[(String, String)]) -> String {
    kv.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

const COEFF_HEADER: &str = "[coefficients]";

/// A stored discovery or baseline result.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredReport {
    pub meta: BTreeMap<String, String>,
    pub library: TermLibrary,
    pub alpha: CoefficientVector,
}

/// Metadata lines, then the coefficient block.
pub fn encode_report(
    meta: &[(String, String)],
    library: &TermLibrary,
    alpha: &CoefficientVector,
) -> String {
    let mut out = String::from("# pded report\n");
    out.push_str(&format_key_values(meta));
    out.push_str(COEFF_HEADER);
    out.push('\n');
    out.push_str(&format_coefficients(library, alpha));
    out
}

pub fn decode_report(text: &str) -> Result<StoredReport> {
    let (head, coeffs) = text
        .split_once(COEFF_HEADER)
        .ok_or_else(|| anyhow!("report has no {COEFF_HEADER} section"))?;
    let meta = parse_key_values(head)?;
    let (library, alpha) = parse_coefficients(coeffs)?;
    Ok(StoredReport {
        meta,
        library,
        alpha,
    })
}

pub fn read_report(path: &Path) -> Result<StoredReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    decode_report(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Truth files hold a bare coefficient block.
pub fn encode_truth(library: &TermLibrary, alpha: &CoefficientVector) -> String {
    format!("# i d p value\n{}", format_coefficients(library, alpha))
}

pub fn read_truth(path: &Path) -> Result<(TermLibrary, CoefficientVector)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let body = match text.split_once(COEFF_HEADER) {
        Some((_, b)) => b,
        None => text.as_str(),
    };
    parse_coefficients(body).with_context(|| format!("parsing {}", path.display()))
}
