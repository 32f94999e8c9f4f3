use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::io::{fmt_f64, write_csv, write_json};
use crate::spectra::SpectralMeasure;
use crate::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub enum Cell {
    Int(usize),
    Num(f64),
    Opt(Option<f64>),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => fmt_f64(*x),
            Cell::Opt(x) => crate::io::fmt_opt(*x),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) | Cell::Opt(Some(x)) => json!(x),
            Cell::Opt(None) => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

/// Rows of cells under named columns, written as CSV or JSON.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn from_measure(mu: &SpectralMeasure) -> Self {
        match mu {
            SpectralMeasure::Atomic(a) => {
                let mut t = Table::new(["x", "weight"]);
                a.atoms().for_each(|(x, w)| t.push(vec![Cell::Num(x), Cell::Num(w)]));
                t
            }
            SpectralMeasure::Gridded(g) => {
                let mut t = Table::new(["x", "density"]);
                g.nodes().zip(g.density()).for_each(|(x, &d)| t.push(vec![Cell::Num(x), Cell::Num(d)]));
                t
            }
        }
    }

    /// Writes `dir/stem.csv` or `dir/stem.json` and returns the path.
    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> Result<PathBuf> {
        match format {
            Format::Csv => {
                let path = dir.join(format!("{stem}.csv"));
                let header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
                write_csv(&path, &header, self.rows.iter().map(|r| r.iter().map(Cell::csv).collect()))?;
                Ok(path)
            }
            Format::Json => {
                let path = dir.join(format!("{stem}.json"));
                let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                write_json(&path, &json!({ "columns": self.columns, "rows": rows }))?;
                Ok(path)
            }
        }
    }
}
