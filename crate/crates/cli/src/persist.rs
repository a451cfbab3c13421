//! Population CSV files: `t,particle_id,theta_0..theta_{d-1},weight,distance`.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! reading a file and writing it back reproduces it byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use abc_core::Population64;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTable {
    pub t: usize,
    pub thetas: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub distances: Vec<f64>,
}

pub fn population_file_name(t: usize) -> String {
    format!("gen_{t:03}.csv")
}

pub fn population_path(dir: &Path, t: usize) -> PathBuf {
    dir.join(population_file_name(t))
}

impl PopulationTable {
    pub fn from_population(pop: &Population64) -> Self {
        Self {
            t: pop.t,
            thetas: pop.thetas(),
            weights: pop.weights(),
            distances: pop.particles.iter().map(|p| p.distance).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.thetas.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn to_csv_string(&self) -> String {
        let d = self.dim();
        let mut out = String::with_capacity(32 * (d + 4) * (self.len() + 1));
        out.push_str("t,particle_id");
        for k in 0..d {
            let _ = write!(out, ",theta_{k}");
        }
        out.push_str(",weight,distance\n");
        for (i, theta) in self.thetas.iter().enumerate() {
            let _ = write!(out, "{},{}", self.t, i);
            for x in theta {
                let _ = write!(out, ",{x}");
            }
            let _ = writeln!(out, ",{},{}", self.weights[i], self.distances[i]);
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())
            .map_err(|e| CliError::io(format!("writing {}", path.display()), e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        Self::from_csv_str(&text).map_err(|message| CliError::PopulationFile {
            path: path.display().to_string(),
            message,
        })
    }

    pub fn from_csv_str(text: &str) -> std::result::Result<Self, String> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| e.to_string())?.clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < 4
            || cols[0] != "t"
            || cols[1] != "particle_id"
            || cols[cols.len() - 2] != "weight"
            || cols[cols.len() - 1] != "distance"
        {
            return Err(format!("unexpected header {cols:?}"));
        }
        let d = cols.len() - 4;
        for (k, name) in cols[2..2 + d].iter().enumerate() {
            if *name != format!("theta_{k}") {
                return Err(format!("column {} should be theta_{k}, got {name}", k + 2));
            }
        }

        let mut table = PopulationTable {
            t: 0,
            thetas: Vec::new(),
            weights: Vec::new(),
            distances: Vec::new(),
        };
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| e.to_string())?;
            let field = |c: usize| record.get(c).unwrap_or("");
            let num = |c: usize| -> std::result::Result<f64, String> {
                field(c)
                    .parse::<f64>()
                    .map_err(|_| format!("row {row}: bad number {:?} in {}", field(c), cols[c]))
            };
            let t: usize = field(0)
                .parse()
                .map_err(|_| format!("row {row}: bad generation {:?}", field(0)))?;
            if row == 0 {
                table.t = t;
            } else if t != table.t {
                return Err(format!(
                    "row {row}: generation {t} differs from {}",
                    table.t
                ));
            }
            if field(1) != row.to_string() {
                return Err(format!(
                    "row {row}: particle_id {:?} out of order",
                    field(1)
                ));
            }
            table
                .thetas
                .push((2..2 + d).map(num).collect::<std::result::Result<_, _>>()?);
            table.weights.push(num(2 + d)?);
            table.distances.push(num(3 + d)?);
        }
        if table.is_empty() {
            return Err("no particles".into());
        }
        Ok(table)
    }
}
