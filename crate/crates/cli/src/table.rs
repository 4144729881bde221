use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, ScenarioConfig};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "NaN".into(),
            Cell::Num(x) => format!("{x}"),
            Cell::Int(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(x) => Value::from(*x),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Provenance written ahead of every table.
pub struct Meta(Vec<(&'static str, String)>);

impl Meta {
    pub fn new(command: &str, cfg: &ScenarioConfig) -> Self {
        let canonical = cfg.canonical();
        let digest = Sha256::digest(canonical.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let seed = cfg
            .simulation
            .and_then(|s| s.seed)
            .or(cfg.jitter.and_then(|j| j.seed))
            .map_or_else(|| "default".to_string(), |s| s.to_string());
        Meta(vec![
            ("tool", "skyrelay".to_string()),
            ("version", env!("CARGO_PKG_VERSION").to_string()),
            ("command", command.to_string()),
            ("seed", seed),
            ("config_sha256", hex),
            ("config", canonical),
        ])
    }
}

pub fn render(table: &Table, meta: &Meta, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut out = String::new();
            for (k, v) in &meta.0 {
                out.push_str(&format!("# {k}={v}\n"));
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(&table.columns).map_err(io)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::csv)).map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
            out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
            Ok(out)
        }
        Format::Json => {
            let mut m = Map::new();
            for (k, v) in &meta.0 {
                let value = if *k == "config" {
                    serde_json::from_str(v).expect("canonical config is json")
                } else {
                    Value::from(v.as_str())
                };
                m.insert((*k).to_string(), value);
            }
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> =
                        table.columns.iter().zip(r).map(|(c, v)| (c.clone(), v.json())).collect();
                    Value::Object(obj)
                })
                .collect();
            let doc = serde_json::json!({ "meta": m, "rows": rows });
            Ok(serde_json::to_string_pretty(&doc).expect("json output") + "\n")
        }
    }
}
