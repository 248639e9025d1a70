//! Delimiter-separated discrete data with declared or inferred levelsets.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::variable::Variable;

/// Complete discrete cases; every value indexes its column's levelset.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDataset {
    columns: Vec<Variable>,
    rows: Vec<Vec<usize>>,
    dropped_rows: usize,
    inferred_levels: bool,
}

#[derive(Debug, Clone)]
pub struct DataOptions {
    pub delimiter: u8,
    /// Field values treated as missing. An empty field is always missing.
    pub missing: Vec<String>,
    /// Declared levelsets. When absent, levels are inferred from the data.
    pub schema: Option<Vec<Variable>>,
}

impl Default for DataOptions {
    fn default() -> Self {
        DataOptions { delimiter: b',', missing: vec!["NA".into()], schema: None }
    }
}

impl DiscreteDataset {
    pub fn new(columns: Vec<Variable>, rows: Vec<Vec<usize>>) -> Result<Self> {
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|d| d.name() == c.name()) {
                return Err(Error::Data(format!("duplicate column `{}`", c.name())));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::Data(format!("row {r} has {} values, expected {}", row.len(), columns.len())));
            }
            for (v, c) in row.iter().zip(&columns) {
                if *v >= c.cardinality() {
                    return Err(Error::Data(format!("row {r}: level index {v} outside `{}`", c.name())));
                }
            }
        }
        Ok(DiscreteDataset { columns, rows, dropped_rows: 0, inferred_levels: false })
    }

    pub fn columns(&self) -> &[Variable] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows dropped at load time because they contained a missing marker.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    /// True when levelsets were inferred from the observed values rather
    /// than declared.
    pub fn inferred_levels(&self) -> bool {
        self.inferred_levels
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name() == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&Variable> {
        Ok(&self.columns[self.column_index(name)?])
    }

    /// Dataset restricted to the given row indices.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        DiscreteDataset {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            dropped_rows: 0,
            inferred_levels: self.inferred_levels,
        }
    }
}

fn sort_levels(levels: BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = levels.into_iter().collect();
    if v.iter().all(|s| s.parse::<f64>().is_ok()) {
        v.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    v
}

/// Parses delimiter-separated text with a header row. Rows holding a missing
/// marker are dropped and counted.
pub fn load_dataset(text: &str, opts: &DataOptions) -> Result<DiscreteDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Data("missing header row".into()));
    }

    let mut raw: Vec<Vec<String>> = Vec::new();
    let mut dropped = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("record {}: {e}", i + 1)))?;
        if rec.len() != header.len() {
            return Err(Error::Data(format!("record {} has {} fields, header has {}", i + 1, rec.len(), header.len())));
        }
        if rec.iter().any(|f| f.is_empty() || opts.missing.iter().any(|m| m == f)) {
            dropped += 1;
            continue;
        }
        raw.push(rec.iter().map(str::to_string).collect());
    }

    let (columns, inferred) = match &opts.schema {
        Some(schema) => {
            let mut cols = Vec::with_capacity(header.len());
            for h in &header {
                let v = schema
                    .iter()
                    .find(|v| v.name() == h)
                    .ok_or_else(|| Error::Data(format!("column `{h}` is not in the schema")))?;
                cols.push(v.clone());
            }
            if let Some(v) = schema.iter().find(|v| !header.contains(&v.name().to_string())) {
                return Err(Error::Data(format!("schema variable `{}` has no column", v.name())));
            }
            (cols, false)
        }
        None => {
            let mut cols = Vec::with_capacity(header.len());
            for (j, h) in header.iter().enumerate() {
                let levels: BTreeSet<String> = raw.iter().map(|r| r[j].clone()).collect();
                if levels.is_empty() {
                    return Err(Error::Data(format!("cannot infer levels of `{h}` from an empty dataset")));
                }
                cols.push(Variable::new(h.clone(), sort_levels(levels))?);
            }
            (cols, true)
        }
    };

    let mut rows = Vec::with_capacity(raw.len());
    for (i, r) in raw.iter().enumerate() {
        let row = r
            .iter()
            .zip(&columns)
            .map(|(f, c)| {
                c.level_index(f).ok_or_else(|| {
                    Error::Data(format!("row {}: value `{f}` is not a level of `{}`", i + 1, c.name()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let mut ds = DiscreteDataset::new(columns, rows)?;
    ds.dropped_rows = dropped;
    ds.inferred_levels = inferred;
    Ok(ds)
}

/// Writes the dataset back out as comma-separated text with a header.
pub fn write_dataset(ds: &DiscreteDataset) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ds.columns.iter().map(Variable::name)).expect("in-memory write");
    for row in &ds.rows {
        w.write_record(row.iter().zip(&ds.columns).map(|(&l, c)| c.levels()[l].as_str()))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
