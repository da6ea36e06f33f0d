//! JSON-lines pool files.
//!
//! The first line is `{"task": "multilabel"|"multiclass", "K": .., "d": .., "N": ..}`;
//! each following line is `{"id": .., "x": [d floats], "y": [K ints]}`, in id order.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tailor_core::domain::{Example, LabelVector, Pool, TaskKind};

use crate::error::CliError;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    task: String,
    #[serde(rename = "K")]
    classes: usize,
    d: usize,
    #[serde(rename = "N")]
    size: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    id: usize,
    x: Vec<f64>,
    y: Vec<u8>,
}

/// Parse failure with a 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn at(line: usize, message: impl ToString) -> ParseError {
    ParseError { line, message: message.to_string() }
}

pub fn parse_pool(text: &str) -> Result<Pool, ParseError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| at(1, "empty pool file"))?;
    let header: Header = serde_json::from_str(first).map_err(|e| at(1, e))?;
    let task = TaskKind::from_name(&header.task).ok_or_else(|| at(1, format!("unknown task {:?}", header.task)))?;
    let mut examples = Vec::with_capacity(header.size);
    for (i, line) in lines {
        let n = i + 1;
        let row: Row = serde_json::from_str(line).map_err(|e| at(n, e))?;
        if row.id != examples.len() {
            return Err(at(n, format!("expected id {}, found {}", examples.len(), row.id)));
        }
        if row.x.len() != header.d {
            return Err(at(n, format!("x has {} entries, header says d = {}", row.x.len(), header.d)));
        }
        if row.y.len() != header.classes {
            return Err(at(n, format!("y has {} entries, header says K = {}", row.y.len(), header.classes)));
        }
        let y = LabelVector::new(row.y, task).map_err(|e| at(n, e))?;
        examples.push(Example::new(row.id, row.x, y));
    }
    if examples.len() != header.size {
        return Err(at(1, format!("header says N = {}, file has {} examples", header.size, examples.len())));
    }
    Pool::new(task, header.classes, header.d, examples).map_err(|e| at(1, e))
}

pub fn format_pool(pool: &Pool) -> String {
    let header = Header { task: pool.task().name().into(), classes: pool.classes(), d: pool.dim(), size: pool.len() };
    let mut out = serde_json::to_string(&header).expect("plain struct");
    out.push('\n');
    for (ex, y) in pool.examples().iter().zip(pool.evaluation_labels()) {
        let row = Row { id: ex.id, x: ex.features.clone(), y: y.as_slice().to_vec() };
        let _ = writeln!(out, "{}", serde_json::to_string(&row).expect("finite features"));
    }
    out
}

pub fn read_pool(path: &Path) -> Result<Pool, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_pool(&text).map_err(|e| CliError::Input { path: path.to_path_buf(), line: e.line, message: e.message })
}

pub fn write_pool(pool: &Pool, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, format_pool(pool)).map_err(|e| CliError::io(path, e))
}
