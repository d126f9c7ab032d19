//! CSV tables with a commented header block.
//!
//! Every file starts with `#` lines describing the table and its columns.
//! The header ends with the resolved configuration, one `# | ` line per TOML
//! line, whose SHA-256 is also recorded. Numbers are written in Rust's shortest round-trip form (with an
//! exponent for very small or large magnitudes), so equal results give
//! byte-identical files and parsing a value back recovers it exactly.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ResolvedConfig;
use crate::error::CliError;

const CONFIG_PREFIX: &str = "# | ";
/// First line of every CSV this tool writes, followed by the version.
const SIGNATURE: &str = "# nvscope ";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    /// A value that does not exist, e.g. an unresolved splitting.
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    /// Unit string, `1` for dimensionless and `-` for labels.
    pub unit: String,
    pub description: String,
}

pub fn col(name: &str, unit: &str, description: &str) -> Column {
    Column {
        name: name.into(),
        unit: unit.into(),
        description: description.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem.
    pub name: String,
    /// `scan`, `trace`, `direction-map`, `dips` or `summary`.
    pub kind: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Vec<(String, String)>,
}

impl Table {
    pub fn new(name: impl Into<String>, kind: &str, columns: Vec<Column>) -> Self {
        Table {
            name: name.into(),
            kind: kind.into(),
            columns,
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    /// The CSV body: column names and rows, without the header block.
    pub fn body(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&names).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn render(&self, config: &ResolvedConfig) -> Result<String, CliError> {
        let mut s = String::new();
        s.push_str(&format!("{SIGNATURE}{}\n", env!("CARGO_PKG_VERSION")));
        s.push_str(&format!("# kind: {}\n", self.kind));
        s.push_str(&format!("# protocol: {}\n", config.config.protocol.name()));
        s.push_str(&format!("# config_sha256: {}\n", config.sha256));
        let units: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{}={}", c.name, c.unit))
            .collect();
        s.push_str(&format!("# units: {}\n", units.join(", ")));
        for c in &self.columns {
            s.push_str(&format!("# column {}: {}\n", c.name, c.description));
        }
        for (k, v) in &self.meta {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s.push_str("# config:\n");
        for line in config.text.lines() {
            s.push_str(CONFIG_PREFIX);
            s.push_str(line);
            s.push('\n');
        }
        s.push_str(&self.body()?);
        Ok(s)
    }

    pub fn write(&self, dir: &Path, config: &ResolvedConfig) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}.csv", self.name));
        fs::write(&path, self.render(config)?)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

/// File-name-safe form of a label such as `x+y`.
pub fn file_label(label: &str) -> String {
    label.replace('+', "p").replace('-', "m")
}

/// A CSV produced by this tool, read back.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCsv {
    pub meta: Vec<(String, String)>,
    /// Embedded configuration text, if present.
    pub config: Option<String>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedCsv {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Numeric values of column `index`.
    pub fn numbers(&self, index: usize) -> Result<Vec<f64>, CliError> {
        self.rows
            .iter()
            .map(|r| {
                let cell = r.get(index).map(String::as_str).unwrap_or("");
                cell.parse::<f64>()
                    .map_err(|_| CliError::Schema(format!("expected a number, found {cell:?}")))
            })
            .collect()
    }
}

pub fn parse_csv(text: &str) -> Result<ParsedCsv, CliError> {
    let mut meta = Vec::new();
    let mut config: Option<String> = None;
    let mut body_start = text.len();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if let Some(cfg_line) = trimmed
            .strip_prefix(CONFIG_PREFIX)
            .or_else(|| (trimmed == CONFIG_PREFIX.trim_end()).then_some(""))
        {
            let c = config.get_or_insert_with(String::new);
            c.push_str(cfg_line);
            c.push('\n');
        } else if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once(':') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else {
            body_start = offset;
            break;
        }
        offset += line.len();
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(&text.as_bytes()[body_start..]);
    let schema = |e: csv::Error| CliError::Schema(format!("malformed CSV: {e}"));
    let headers = reader
        .headers()
        .map_err(schema)?
        .iter()
        .map(String::from)
        .collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()
        .map_err(schema)?;
    Ok(ParsedCsv {
        meta,
        config,
        headers,
        rows,
    })
}

/// Reads a configuration from a TOML file or from the header of a CSV
/// written by this tool.
pub fn read_config(path: &Path) -> Result<ResolvedConfig, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    if text.starts_with(SIGNATURE) {
        let parsed = parse_csv(&text)?;
        let cfg = parsed.config.ok_or_else(|| {
            CliError::Schema(format!("{} carries no embedded config", path.display()))
        })?;
        ResolvedConfig::from_text(&cfg)
    } else {
        ResolvedConfig::from_text(&text)
    }
}
