//! libsvm and Matrix Market readers, Matrix Market writer, and the instance
//! sidecar used by `pabcd gen`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pabcd_core::{default_lambda, Instance, SparseMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("no samples")]
    NoSamples,
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] pabcd_core::Error),
}

pub type Result<T> = std::result::Result<T, IoError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses libsvm text: one sample per line, `label idx:val ...`, 1-based
/// strictly increasing indices. Blank lines and `#` comments are ignored.
pub fn parse_libsvm(text: &str) -> Result<(SparseMatrix, Vec<f64>)> {
    let mut b = Vec::new();
    let mut triplets = Vec::new();
    let mut cols = 0usize;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = b.len();
        let mut fields = line.split_whitespace();
        let label = fields.next().expect("nonempty line");
        let label: f64 = label
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad label `{label}`")))?;
        b.push(label);
        let mut last = 0usize;
        for field in fields {
            let (idx, val) = field
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, format!("expected idx:val, got `{field}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad index `{idx}`")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad value `{val}`")))?;
            if idx == 0 {
                return Err(parse_err(line_no, "indices are 1-based"));
            }
            if idx <= last {
                return Err(IoError::Format {
                    line: line_no,
                    msg: format!("index {idx} does not increase on {last}"),
                });
            }
            last = idx;
            cols = cols.max(idx);
            triplets.push((row, idx - 1, val));
        }
    }
    if b.is_empty() {
        return Err(IoError::NoSamples);
    }
    let a = SparseMatrix::from_triplets(b.len(), cols.max(1), triplets)?;
    Ok((a, b))
}

pub fn load_libsvm(path: impl AsRef<Path>) -> Result<(SparseMatrix, Vec<f64>)> {
    parse_libsvm(&read(path.as_ref())?)
}

/// Parses `%%MatrixMarket matrix coordinate real general`; duplicates are summed.
pub fn parse_matrix_market(text: &str) -> Result<SparseMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(parse_err(1, "missing %%MatrixMarket banner"));
    }
    if tokens[1..] != ["matrix", "coordinate", "real", "general"] {
        return Err(IoError::UnsupportedFormat(header.trim().to_string()));
    }

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_no, size) = body.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(size_no + 1, "bad size line"))?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(parse_err(size_no + 1, "size line needs rows cols nnz"));
    };

    let mut triplets = Vec::with_capacity(nnz);
    for (n, line) in body {
        let line_no = n + 1;
        let mut f = line.split_whitespace();
        let (Some(i), Some(j), Some(v), None) = (f.next(), f.next(), f.next(), f.next()) else {
            return Err(parse_err(line_no, "expected `row col value`"));
        };
        let i: usize = i.parse().map_err(|_| parse_err(line_no, "bad row index"))?;
        let j: usize = j.parse().map_err(|_| parse_err(line_no, "bad column index"))?;
        let v: f64 = v.parse().map_err(|_| parse_err(line_no, "bad value"))?;
        if i == 0 || i > rows || j == 0 || j > cols {
            return Err(parse_err(line_no, format!("entry ({i}, {j}) out of range")));
        }
        triplets.push((i - 1, j - 1, v));
    }
    if triplets.len() != nnz {
        return Err(parse_err(
            size_no + 1,
            format!("declared {nnz} entries, found {}", triplets.len()),
        ));
    }
    Ok(SparseMatrix::from_triplets(rows, cols, triplets)?)
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    parse_matrix_market(&read(path.as_ref())?)
}

/// Writes in column order; values use the shortest round-trip form.
pub fn write_matrix_market<W: Write>(a: &SparseMatrix, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(out, "{} {} {}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn save_matrix_market(a: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    write_matrix_market(a, &mut w).map_err(io)?;
    w.flush().map_err(io)
}

/// Metadata written next to a generated `.mtx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub lambda: f64,
    pub f_star: f64,
    pub support: Vec<usize>,
    pub seed: u64,
    pub b: Vec<f64>,
    pub x_star: Vec<f64>,
}

fn sidecar_path(mtx: &Path) -> PathBuf {
    mtx.with_extension("json")
}

/// Writes `PATH.mtx` and `PATH.json`; returns the two paths.
pub fn save_instance(inst: &Instance, seed: u64, path: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let base = path.as_ref();
    let mtx = if base.extension().is_some_and(|e| e == "mtx") {
        base.to_path_buf()
    } else {
        let mut s = base.as_os_str().to_owned();
        s.push(".mtx");
        PathBuf::from(s)
    };
    save_matrix_market(&inst.a, &mtx)?;
    let meta = Sidecar {
        lambda: inst.lambda,
        f_star: inst.f_star,
        support: inst.support.clone(),
        seed,
        b: inst.b.clone(),
        x_star: inst.x_star.clone(),
    };
    let json = sidecar_path(&mtx);
    let text = serde_json::to_string_pretty(&meta).map_err(|source| IoError::Json {
        path: json.clone(),
        source,
    })?;
    fs::write(&json, text).map_err(|source| IoError::Io {
        path: json.clone(),
        source,
    })?;
    Ok((mtx, json))
}

/// A problem read from disk.
#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub lambda: f64,
    /// Known optimal value, when a sidecar provides one.
    pub f_star: Option<f64>,
}

/// Loads `.mtx` (with its `.json` sidecar) or libsvm text.
///
/// libsvm data gets `λ = 0.1‖Aᵀb‖∞` unless `lambda` is given.
pub fn load_instance(path: impl AsRef<Path>, lambda: Option<f64>) -> Result<LoadedInstance> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "mtx") {
        let a = load_matrix_market(path)?;
        let json = sidecar_path(path);
        let text = read(&json)?;
        let meta: Sidecar = serde_json::from_str(&text).map_err(|source| IoError::Json {
            path: json.clone(),
            source,
        })?;
        let f_star = match lambda {
            Some(l) if l != meta.lambda => None,
            _ => Some(meta.f_star),
        };
        return Ok(LoadedInstance {
            a,
            b: meta.b,
            lambda: lambda.unwrap_or(meta.lambda),
            f_star,
        });
    }
    let (a, b) = load_libsvm(path)?;
    let lambda = match lambda {
        Some(l) => l,
        None => default_lambda(&a, &b)?,
    };
    Ok(LoadedInstance {
        a,
        b,
        lambda,
        f_star: None,
    })
}
