use std::collections::HashSet;
use std::io::{Read, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::column::{Column, ColumnKind};
use crate::error::{Error, Result};

/// Column-kind declarations keyed by header name.
pub type Schema = IndexMap<String, ColumnKind>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    pub delimiter: u8,
    pub missing_tokens: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            missing_tokens: vec![String::new(), "NA".to_string()],
        }
    }
}

impl LoadOptions {
    pub fn tab() -> Self {
        Self {
            delimiter: b'\t',
            ..Self::default()
        }
    }
}

/// An immutable cohort table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: IndexMap<String, Column>,
    n_rows: usize,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Column::len);
        let mut map = IndexMap::with_capacity(columns.len());
        for col in columns {
            if col.len() != n_rows {
                return Err(Error::Validation(format!(
                    "column '{}' has {} rows, expected {}",
                    col.name(),
                    col.len(),
                    n_rows
                )));
            }
            let name = col.name().to_string();
            if map.insert(name.clone(), col).is_some() {
                return Err(Error::DuplicateHeader(name));
            }
        }
        Ok(Self {
            columns: map,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .get(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn columns(&self) -> impl Iterator<Item = &Column> {
        self.columns.values()
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    /// New dataset with `col` added, or replacing the column of the same name.
    pub fn with_column(&self, col: Column) -> Result<Self> {
        if col.len() != self.n_rows {
            return Err(Error::Validation(format!(
                "column '{}' has {} rows, expected {}",
                col.name(),
                col.len(),
                self.n_rows
            )));
        }
        let mut columns = self.columns.clone();
        columns.insert(col.name().to_string(), col);
        Ok(Self {
            columns,
            n_rows: self.n_rows,
        })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            columns: self
                .columns
                .iter()
                .map(|(k, c)| (k.clone(), c.select_rows(rows)))
                .collect(),
            n_rows: rows.len(),
        }
    }

    pub fn has_missing(&self) -> bool {
        self.columns.values().any(Column::has_missing)
    }

    /// Rows where every one of `names` is observed.
    pub fn complete_rows(&self, names: &[&str]) -> Result<Vec<usize>> {
        let cols = names
            .iter()
            .map(|n| self.column(n))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..self.n_rows)
            .filter(|&r| cols.iter().all(|c| !c.is_missing(r)))
            .collect())
    }
}

/// Reads delimited text with a header row into a typed dataset.
///
/// Only columns named in `schema` are loaded; other header fields are
/// skipped. Cells equal to one of the configured missing tokens (after
/// trimming) become missing.
pub fn load_table<R: Read>(source: R, schema: &Schema, opts: &LoadOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();

    let mut seen = HashSet::new();
    for h in headers.iter() {
        if !seen.insert(h.trim()) {
            return Err(Error::DuplicateHeader(h.trim().to_string()));
        }
    }

    let mut positions = Vec::with_capacity(schema.len());
    for (name, kind) in schema {
        let pos = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?;
        positions.push((name.as_str(), *kind, pos));
    }

    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); positions.len()];
    for record in reader.records() {
        let record = record?;
        for (slot, &(_, _, pos)) in positions.iter().enumerate() {
            let raw = record.get(pos).unwrap_or("").trim();
            let cell = if opts.missing_tokens.iter().any(|t| t == raw) {
                None
            } else {
                Some(raw.to_string())
            };
            cells[slot].push(cell);
        }
    }

    let mut columns = Vec::with_capacity(positions.len());
    for ((name, kind, _), raw) in positions.into_iter().zip(cells) {
        let col = match kind {
            ColumnKind::Categorical => Column::categorical(name, raw),
            ColumnKind::Continuous | ColumnKind::Binary => {
                let parsed = raw
                    .iter()
                    .enumerate()
                    .map(|(row, cell)| match cell {
                        None => Ok(None),
                        Some(s) => s.parse::<f64>().map(Some).map_err(|_| Error::Ingestion {
                            row: row + 1,
                            column: name.to_string(),
                            message: format!("cannot parse '{s}' as {}", kind.as_str()),
                        }),
                    })
                    .collect::<Result<Vec<_>>>()?;
                if kind == ColumnKind::Binary {
                    Column::binary(name, parsed)?
                } else {
                    Column::continuous(name, parsed)?
                }
            }
        };
        columns.push(col);
    }
    if columns.is_empty() {
        return Err(Error::Empty("schema declares no columns".into()));
    }
    Dataset::new(columns)
}

/// Writes a dataset as delimited text. Missing cells are written as `missing_token`.
pub fn write_table<W: Write>(
    dataset: &Dataset,
    sink: W,
    delimiter: u8,
    missing_token: &str,
) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(sink);
    writer.write_record(dataset.column_names())?;
    let cols: Vec<&Column> = dataset.columns().collect();
    let mut record = Vec::with_capacity(cols.len());
    for row in 0..dataset.n_rows() {
        record.clear();
        for col in &cols {
            let cell = match col.get(row) {
                None => missing_token.to_string(),
                Some(v) => match col.kind() {
                    ColumnKind::Categorical => col.levels()[v as usize].clone(),
                    _ => format!("{v}"),
                },
            };
            record.push(cell);
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Schema declaring every column of `dataset` with its current kind.
pub fn schema_of(dataset: &Dataset) -> Schema {
    dataset
        .columns()
        .map(|c| (c.name().to_string(), c.kind()))
        .collect()
}
