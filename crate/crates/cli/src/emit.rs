//! JSON and CSV emission.
//!
//! JSON objects use `serde_json`'s default map, which keeps keys sorted, and
//! floats are written in shortest round-trip form. Points are strings in the
//! sphere text form (`inf`, `a+bi` with 17 significant digits).

use std::fmt::Display;

use serde_json::{json, Value};

use crate::args::Format;

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub json: Value,
    pub csv_header: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
}

impl Output {
    pub fn new(json: Value, header: &[&str]) -> Self {
        Output { json, csv_header: header.iter().map(|s| s.to_string()).collect(), csv_rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.csv_rows.push(cells);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("values serialize");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.csv_header).expect("in-memory write");
                for r in &self.csv_rows {
                    w.write_record(r).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
            }
        }
    }
}

/// A float as JSON; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    json!(x)
}

/// A float as a CSV cell, formatted like the JSON number.
pub fn cell(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite float")
    } else {
        String::new()
    }
}

pub fn text(x: impl Display) -> String {
    x.to_string()
}
