//! Tabular query results, their canonical form and tolerant comparison.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum Value {
    Iri(String),
    Literal(String),
    Number(f64),
    Null,
}

impl Value {
    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Iri(_) => 1,
            Value::Literal(_) => 2,
            Value::Number(_) => 3,
        }
    }

    fn total_cmp(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Iri(a), Value::Iri(b)) | (Value::Literal(a), Value::Literal(b)) => a.cmp(b),
            (Value::Number(a), Value::Number(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Iri(s) | Value::Literal(s) => write!(f, "{s}"),
            Value::Number(n) => write!(f, "{n}"),
            Value::Null => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Member,
    Aggregate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
}

/// First difference found between two tables.
#[derive(Debug, Clone, PartialEq)]
pub enum TableDiff {
    Columns { left: Vec<String>, right: Vec<String> },
    RowCount { left: usize, right: usize },
    Cell { row: usize, column: String, left: Value, right: Value },
}

impl fmt::Display for TableDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableDiff::Columns { left, right } => write!(f, "columns differ: {left:?} vs {right:?}"),
            TableDiff::RowCount { left, right } => write!(f, "row counts differ: {left} vs {right}"),
            TableDiff::Cell { row, column, left, right } => {
                write!(f, "row {row}, column {column}: {left} vs {right}")
            }
        }
    }
}

/// Relative tolerance used for aggregate comparison.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

impl ResultTable {
    pub fn new(columns: Vec<Column>) -> Self {
        ResultTable { columns, rows: Vec::new() }
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Columns sorted by name, rows sorted by member columns first and then
    /// by aggregates.
    pub fn canonical(&self) -> ResultTable {
        let mut order: Vec<usize> = (0..self.columns.len()).collect();
        order.sort_by(|a, b| self.columns[*a].name.cmp(&self.columns[*b].name));
        let columns: Vec<Column> = order.iter().map(|i| self.columns[*i].clone()).collect();
        let mut rows: Vec<Vec<Value>> =
            self.rows.iter().map(|r| order.iter().map(|i| r[*i].clone()).collect()).collect();
        let members: Vec<usize> = (0..columns.len()).filter(|i| columns[*i].kind == ColumnKind::Member).collect();
        let aggs: Vec<usize> = (0..columns.len()).filter(|i| columns[*i].kind == ColumnKind::Aggregate).collect();
        rows.sort_by(|a, b| {
            members
                .iter()
                .chain(aggs.iter())
                .map(|i| a[*i].total_cmp(&b[*i]))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
        ResultTable { columns, rows }
    }

    /// Compares canonical forms; numbers within relative tolerance `tol`.
    pub fn compare(&self, other: &ResultTable, tol: f64) -> Result<(), TableDiff> {
        let (a, b) = (self.canonical(), other.canonical());
        if a.columns != b.columns {
            return Err(TableDiff::Columns {
                left: a.column_names().iter().map(|s| s.to_string()).collect(),
                right: b.column_names().iter().map(|s| s.to_string()).collect(),
            });
        }
        if a.rows.len() != b.rows.len() {
            return Err(TableDiff::RowCount { left: a.rows.len(), right: b.rows.len() });
        }
        for (r, (ra, rb)) in a.rows.iter().zip(&b.rows).enumerate() {
            for (c, (va, vb)) in ra.iter().zip(rb).enumerate() {
                let same = match (va, vb) {
                    (Value::Number(x), Value::Number(y)) => close(*x, *y, tol),
                    _ => va == vb,
                };
                if !same {
                    return Err(TableDiff::Cell {
                        row: r,
                        column: a.columns[c].name.clone(),
                        left: va.clone(),
                        right: vb.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str())).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string())).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: Vec<(&str, f64)>) -> ResultTable {
        ResultTable {
            columns: vec![
                Column { name: "d.l".into(), kind: ColumnKind::Member },
                Column { name: "m".into(), kind: ColumnKind::Aggregate },
            ],
            rows: rows.into_iter().map(|(a, b)| vec![Value::Iri(a.into()), Value::Number(b)]).collect(),
        }
    }

    #[test]
    fn compare_ignores_row_order_and_tiny_errors() {
        let a = t(vec![("x", 1.0), ("y", 1052.5)]);
        let b = t(vec![("y", 1052.5 + 1e-10), ("x", 1.0)]);
        assert!(a.compare(&b, DEFAULT_TOLERANCE).is_ok());
        let c = t(vec![("y", 1052.6), ("x", 1.0)]);
        assert!(matches!(a.compare(&c, DEFAULT_TOLERANCE), Err(TableDiff::Cell { .. })));
    }

    #[test]
    fn compare_ignores_column_order() {
        let a = t(vec![("x", 2.0)]);
        let mut b = a.clone();
        b.columns.reverse();
        b.rows[0].reverse();
        assert!(a.compare(&b, 0.0).is_ok());
    }

    #[test]
    fn csv_has_header() {
        let csv = t(vec![("x", 2.0)]).to_csv();
        assert_eq!(csv, "d.l,m\nx,2\n");
    }
}
