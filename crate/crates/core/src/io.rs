//! File formats: hypergraphs as JSON, point sets as text or JSON, reports
//! as JSON or CSV, and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::applications::{Point, PointSet, SimplexSet};
use crate::model::{Edge, Hypergraph, IndexSet, ModelError, SimplicialComplex};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}:{line}:{column}: at `{field}`: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ModelError },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("csv: {0}")]
    Csv(String),
}

fn io_err(path: &Path, e: std::io::Error) -> IoError {
    IoError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// The on-disk hypergraph: index sets are keys such as `"0,2"`, colorings
/// are flat row-major arrays in lexicographic tuple order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypergraphFile {
    pub r: usize,
    pub k: usize,
    pub parts: Vec<usize>,
    pub colors: BTreeMap<String, Vec<String>>,
    pub coloring: BTreeMap<String, Vec<u32>>,
}

impl HypergraphFile {
    /// Default color names are the color ids.
    pub fn from_graph(g: &Hypergraph) -> Self {
        Self::with_names(g, &BTreeMap::new())
    }

    pub fn with_names(g: &Hypergraph, names: &BTreeMap<IndexSet, Vec<String>>) -> Self {
        let mut colors = BTreeMap::new();
        let mut coloring = BTreeMap::new();
        for &idx in g.index_sets() {
            let key = idx.to_string();
            let list = names
                .get(&idx)
                .filter(|n| n.len() == g.palette(idx))
                .cloned()
                .unwrap_or_else(|| (0..g.palette(idx)).map(|c| c.to_string()).collect());
            colors.insert(key.clone(), list);
            coloring.insert(key, g.colors_of(idx).to_vec());
        }
        HypergraphFile {
            r: g.r(),
            k: g.k(),
            parts: g.parts().to_vec(),
            colors,
            coloring,
        }
    }

    /// Validates into a hypergraph plus the color names per index set.
    pub fn into_graph(self) -> Result<(Hypergraph, BTreeMap<IndexSet, Vec<String>>), ModelError> {
        if self.k > self.r {
            return Err(ModelError::KExceedsR { k: self.k, r: self.r });
        }
        let mut names = BTreeMap::new();
        for key in self.colors.keys().chain(self.coloring.keys()) {
            let idx: IndexSet = key.parse()?;
            if idx.len() > self.k {
                return Err(ModelError::IndexTooLarge { index: idx, k: self.k });
            }
            if idx.members().any(|i| i >= self.r) {
                return Err(ModelError::BadIndexKey(key.clone()));
            }
        }
        let index_sets = IndexSet::all_up_to(self.r, self.k);
        let mut palettes = Vec::new();
        let mut tables = Vec::new();
        for idx in index_sets {
            let key = idx.to_string();
            let list = self.colors.get(&key).cloned().unwrap_or_default();
            let table = self.coloring.get(&key).cloned().unwrap_or_default();
            let expected: usize = idx.members().map(|i| self.parts.get(i).copied().unwrap_or(0)).product();
            if table.len() < expected && self.parts.len() == self.r {
                // Name the first uncolored tuple.
                let mut offset = table.len();
                let members = idx.to_vec();
                let mut vertices = vec![0; members.len()];
                for (pos, &i) in members.iter().enumerate().rev() {
                    vertices[pos] = offset % self.parts[i];
                    offset /= self.parts[i];
                }
                return Err(ModelError::MissingColor(Edge { index: idx, vertices }));
            }
            // Without names the palette is inferred from the coloring.
            let inferred = table.iter().map(|&c| c as usize + 1).max().unwrap_or(1);
            palettes.push(if list.is_empty() { inferred } else { list.len() });
            names.insert(idx, list);
            tables.push(table);
        }
        let g = Hypergraph::from_tables(self.r, self.k, self.parts, palettes, tables)?;
        Ok((g, names))
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        IoError::Schema {
            path: path.to_path_buf(),
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })
}

pub fn read_hypergraph_str(path: &Path, text: &str) -> Result<(Hypergraph, BTreeMap<IndexSet, Vec<String>>), IoError> {
    let file: HypergraphFile = parse_json(path, text)?;
    file.into_graph().map_err(|source| IoError::Model {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_hypergraph(path: &Path) -> Result<Hypergraph, IoError> {
    Ok(load_hypergraph_named(path)?.0)
}

pub fn load_hypergraph_named(path: &Path) -> Result<(Hypergraph, BTreeMap<IndexSet, Vec<String>>), IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    read_hypergraph_str(path, &text)
}

pub fn hypergraph_json(g: &Hypergraph) -> String {
    let mut s = serde_json::to_string_pretty(&HypergraphFile::from_graph(g)).expect("serializable");
    s.push('\n');
    s
}

pub fn save_hypergraph(g: &Hypergraph, path: &Path) -> Result<(), IoError> {
    fs::write(path, hypergraph_json(g)).map_err(|e| io_err(path, e))
}

/// A complex given by host colors: keys are index sets, values list the
/// color of each position tuple (row-major over `h^{|I|}` tuples), `null`
/// for invisible. Missing index sets are invisible.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexFile {
    pub s: usize,
    pub h: usize,
    pub colors: BTreeMap<String, Vec<Option<u32>>>,
}

impl ComplexFile {
    pub fn into_complex(self, g: &Hypergraph) -> Result<SimplicialComplex, ModelError> {
        for key in self.colors.keys() {
            let idx: IndexSet = key.parse()?;
            if idx.len() > self.s || idx.members().any(|i| i >= g.r()) {
                return Err(ModelError::BadIndexKey(key.clone()));
            }
        }
        let colors = IndexSet::all_up_to(g.r(), self.s)
            .into_iter()
            .map(|idx| {
                let n = self.h.pow(idx.len() as u32);
                let mut v = self.colors.get(&idx.to_string()).cloned().unwrap_or_default();
                v.resize(n, None);
                v
            })
            .collect();
        SimplicialComplex::from_host_colors(g, self.s, self.h, colors)
    }
}

pub fn load_complex(path: &Path, g: &Hypergraph) -> Result<SimplicialComplex, IoError> {
    let file: ComplexFile = load_json(path)?;
    file.into_complex(g).map_err(|source| IoError::Model {
        path: path.to_path_buf(),
        source,
    })
}

/// Any JSON input.
pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_json(path, &text)
}

/// Integer tuples, one per line (separated by spaces or commas, `#` starts
/// a comment), or a JSON array of tuples or of integers.
pub fn parse_points(path: &Path, text: &str) -> Result<Vec<Point>, IoError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let v: Value = parse_json(path, text)?;
        let arr = v.as_array().expect("starts with [");
        return arr
            .iter()
            .enumerate()
            .map(|(i, item)| match item {
                Value::Number(n) => n.as_i64().map(|x| vec![x]),
                Value::Array(xs) => xs.iter().map(Value::as_i64).collect(),
                _ => None,
            }
            .ok_or_else(|| IoError::Invalid {
                path: path.to_path_buf(),
                message: format!("entry {i} is not an integer tuple"),
            }))
            .collect();
    }
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let p = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<i64>())
            .collect::<Result<Point, _>>()
            .map_err(|e| IoError::Invalid {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", no + 1),
            })?;
        out.push(p);
    }
    Ok(out)
}

fn read_points(path: &Path) -> Result<Vec<Point>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_points(path, &text)
}

/// A subset of `[N]_0^r`; `N` defaults to one more than the largest
/// coordinate.
pub fn load_point_set(path: &Path, n: Option<usize>) -> Result<PointSet, IoError> {
    let points = read_points(path)?;
    let invalid = |message: String| IoError::Invalid {
        path: path.to_path_buf(),
        message,
    };
    let r = points.first().map(|p| p.len()).ok_or_else(|| invalid("empty point set".into()))?;
    let n = n.unwrap_or_else(|| points.iter().flatten().copied().max().unwrap_or(0).max(0) as usize + 1);
    PointSet::new(n, r, points).map_err(|e| invalid(e.to_string()))
}

/// A subset of `T(N, k)`; `N` defaults to one more than the coordinate sum
/// of the first point.
pub fn load_simplex_set(path: &Path, n: Option<usize>) -> Result<SimplexSet, IoError> {
    let points = read_points(path)?;
    let invalid = |message: String| IoError::Invalid {
        path: path.to_path_buf(),
        message,
    };
    let first = points.first().ok_or_else(|| invalid("empty point set".into()))?;
    let k = first.len().checked_sub(1).filter(|&k| k > 0).ok_or_else(|| invalid("points need at least two coordinates".into()))?;
    let n = n.unwrap_or(first.iter().sum::<i64>().max(0) as usize + 1);
    SimplexSet::new(n, k, points).map_err(|e| invalid(e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(_) | Value::Number(_) => v.to_string(),
        _ => serde_json::to_string(v).expect("serializable"),
    }
}

/// Serializes a report. JSON is pretty-printed; CSV has one row per array
/// element (or a single row for an object), columns from the first row's
/// keys, nested values as embedded JSON.
pub fn render_report<T: Serialize>(result: &T, format: ReportFormat) -> Result<Vec<u8>, IoError> {
    let value = serde_json::to_value(result).map_err(|e| IoError::Csv(e.to_string()))?;
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&value).expect("serializable");
            s.push('\n');
            Ok(s.into_bytes())
        }
        ReportFormat::Csv => {
            let rows: Vec<Value> = match value {
                Value::Array(a) => a,
                other => vec![other],
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            let header: Vec<String> = match rows.first() {
                Some(Value::Object(m)) => m.keys().cloned().collect(),
                Some(_) => vec!["value".into()],
                None => Vec::new(),
            };
            if !header.is_empty() {
                w.write_record(&header).map_err(|e| IoError::Csv(e.to_string()))?;
            }
            for row in &rows {
                let record: Vec<String> = match row {
                    Value::Object(m) => header.iter().map(|h| m.get(h).map(cell).unwrap_or_default()).collect(),
                    other => vec![cell(other)],
                };
                w.write_record(&record).map_err(|e| IoError::Csv(e.to_string()))?;
            }
            w.into_inner().map_err(|e| IoError::Csv(e.to_string()))
        }
    }
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report<T: Serialize>(result: &T, format: ReportFormat, path: Option<&Path>) -> Result<Vec<u8>, IoError> {
    let bytes = render_report(result, format)?;
    match path {
        Some(p) => fs::write(p, &bytes).map_err(|e| io_err(p, e))?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| io_err(Path::new("<stdout>"), e))?,
    }
    Ok(bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// What a run consumed and produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector after the program name.
    pub args: Vec<String>,
    pub parameters: BTreeMap<String, Value>,
    pub seeds: Vec<u64>,
    /// `path -> sha256` for every input file.
    pub inputs: BTreeMap<String, String>,
    /// `sha256` of the report bytes.
    pub report_digest: String,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        RunManifest {
            command: command.into(),
            args,
            parameters: BTreeMap::new(),
            seeds: Vec::new(),
            inputs: BTreeMap::new(),
            report_digest: String::new(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), IoError> {
        let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }
}
