use std::collections::BTreeSet;
use std::io::{Read, Write};

use super::StatsError;

/// Named numeric columns with the same number of finite values each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<String>,
    // column-major
    data: Vec<Vec<f64>>,
}

impl Dataset {
    /// Builds a dataset from row vectors.
    pub fn from_rows(columns: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, StatsError> {
        check_unique(&columns)?;
        let mut data = vec![Vec::with_capacity(rows.len()); columns.len()];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(StatsError::RaggedRow {
                    row: r + 1,
                    found: row.len(),
                    expected: columns.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(StatsError::NonFinite {
                        row: r + 1,
                        column: columns[c].clone(),
                        value: v.to_string(),
                    });
                }
                data[c].push(v);
            }
        }
        Ok(Dataset { columns, data })
    }

    /// Builds a dataset from whole columns.
    pub fn from_columns(columns: Vec<(String, Vec<f64>)>) -> Result<Self, StatsError> {
        let names: Vec<String> = columns.iter().map(|(n, _)| n.clone()).collect();
        check_unique(&names)?;
        let len = columns.first().map_or(0, |(_, v)| v.len());
        for (name, values) in &columns {
            if values.len() != len {
                return Err(StatsError::RaggedRow {
                    row: len.min(values.len()) + 1,
                    found: values.len(),
                    expected: len,
                });
            }
            if let Some(r) = values.iter().position(|v| !v.is_finite()) {
                return Err(StatsError::NonFinite {
                    row: r + 1,
                    column: name.clone(),
                    value: values[r].to_string(),
                });
            }
        }
        Ok(Dataset {
            columns: names,
            data: columns.into_iter().map(|(_, v)| v).collect(),
        })
    }

    pub(crate) fn from_columns_unchecked(columns: Vec<String>, data: Vec<Vec<f64>>) -> Self {
        Dataset { columns, data }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Result<&[f64], StatsError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.data[i].as_slice())
            .ok_or_else(|| StatsError::UnknownColumn(name.to_string()))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.iter().map(|c| c[i]).collect()
    }

    /// Reads RFC-4180 CSV with a header row. Every cell must parse as a
    /// finite number.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, StatsError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let columns: Vec<String> = rdr
            .headers()
            .map_err(|e| StatsError::Csv(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        check_unique(&columns)?;
        let mut data = vec![Vec::new(); columns.len()];
        for (r, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| StatsError::Csv(e.to_string()))?;
            if record.len() != columns.len() {
                return Err(StatsError::RaggedRow {
                    row: r + 1,
                    found: record.len(),
                    expected: columns.len(),
                });
            }
            for (c, cell) in record.iter().enumerate() {
                data[c].push(parse_finite(cell).ok_or_else(|| StatsError::NonFinite {
                    row: r + 1,
                    column: columns[c].clone(),
                    value: cell.to_string(),
                })?);
            }
        }
        Ok(Dataset { columns, data })
    }

    /// Writes CSV with a header row; values use the shortest round-trip
    /// decimal representation.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), StatsError> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| StatsError::Csv(e.to_string());
        w.write_record(&self.columns).map_err(csv_err)?;
        for i in 0..self.n_rows() {
            w.write_record(self.data.iter().map(|c| c[i].to_string()))
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| StatsError::Csv(e.to_string()))
    }
}

fn check_unique(columns: &[String]) -> Result<(), StatsError> {
    let mut seen = BTreeSet::new();
    for c in columns {
        if !seen.insert(c.as_str()) {
            return Err(StatsError::DuplicateColumn(c.clone()));
        }
    }
    Ok(())
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a numeric value column and a free-text group column from CSV, for
/// statistics that compare groups.
pub fn read_labeled_column<R: Read>(
    reader: R,
    value_column: &str,
    group_column: &str,
) -> Result<(Vec<f64>, Vec<String>), StatsError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| StatsError::Csv(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| StatsError::UnknownColumn(name.to_string()))
    };
    let (vi, gi) = (find(value_column)?, find(group_column)?);
    let mut values = Vec::new();
    let mut groups = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| StatsError::Csv(e.to_string()))?;
        let cell = record.get(vi).unwrap_or("");
        values.push(parse_finite(cell).ok_or_else(|| StatsError::NonFinite {
            row: r + 1,
            column: value_column.to_string(),
            value: cell.to_string(),
        })?);
        groups.push(record.get(gi).unwrap_or("").trim().to_string());
    }
    Ok((values, groups))
}
