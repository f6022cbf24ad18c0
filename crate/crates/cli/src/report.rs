use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use pnn_core::lines::fmt_f64;

/// Everything that determines a run: command name, master seed and the
/// resolved parameters. Echoed as `#` comment lines at the top of every CSV.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub command: String,
    pub seed: u64,
    pub params: Vec<(String, String)>,
}

impl ExperimentSpec {
    pub fn new(command: &str, seed: u64) -> ExperimentSpec {
        ExperimentSpec { command: command.to_string(), seed, params: Vec::new() }
    }

    pub fn param(mut self, key: &str, value: impl Display) -> ExperimentSpec {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn list<T: Display>(self, key: &str, values: &[T]) -> ExperimentSpec {
        let joined = values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        self.param(key, joined)
    }
}

/// A CSV cell.
pub enum Cell {
    Num(f64),
    Int(i64),
    UInt(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(x) => x.to_string(),
            Cell::UInt(x) => x.to_string(),
            Cell::Text(s) => quote(s),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Cell {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Cell {
        Cell::UInt(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Cell {
        Cell::UInt(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Cell {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Cell {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Cell {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Cell {
        x.map_or(Cell::Empty, Into::into)
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub struct CsvOut {
    out: Box<dyn Write>,
}

impl CsvOut {
    /// Open `path` (or stdout) and write the spec header and column names.
    pub fn create(path: Option<&Path>, spec: &ExperimentSpec, columns: &[&str]) -> io::Result<CsvOut> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        let mut csv = CsvOut { out };
        csv.comment(&format!("pnn {}", env!("CARGO_PKG_VERSION")))?;
        csv.comment(&format!("command: {}", spec.command))?;
        csv.comment(&format!("seed: {}", spec.seed))?;
        for (k, v) in &spec.params {
            csv.comment(&format!("{k}: {v}"))?;
        }
        writeln!(csv.out, "{}", columns.join(","))?;
        Ok(csv)
    }

    pub fn comment(&mut self, text: &str) -> io::Result<()> {
        writeln!(self.out, "# {text}")
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> io::Result<()> {
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        writeln!(self.out, "{}", line.join(","))
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_render() {
        assert_eq!(Cell::from(0.1).render(), "1.0000000000000001e-1");
        assert_eq!(Cell::from(3usize).render(), "3");
        assert_eq!(Cell::from("a,b").render(), "\"a,b\"");
        assert_eq!(Cell::from(None::<f64>).render(), "");
    }
}
