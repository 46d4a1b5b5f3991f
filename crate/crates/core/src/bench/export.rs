use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::Error;

/// Element densities of a structured `nx x ny` mesh, element `i + j nx`
/// at column `i`, row `j` counted from the bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityFormat {
    Pgm,
    Vtk,
    Csv,
}

impl FromStr for DensityFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "pgm" => Ok(Self::Pgm),
            "vtk" => Ok(Self::Vtk),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidInput(format!("unknown density format '{other}' (pgm, vtk, csv)"))),
        }
    }
}

impl DensityFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Pgm => "pgm",
            Self::Vtk => "vtk",
            Self::Csv => "csv",
        }
    }
}

impl DensityField {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self, Error> {
        if nx == 0 || ny == 0 || values.len() != nx * ny {
            return Err(Error::InvalidInput(format!(
                "{} values do not fill a {nx}x{ny} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("density field contains non-finite values".into()));
        }
        Ok(Self { nx, ny, values })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i + j * self.nx]
    }

    /// Binary 8-bit PGM, `round(255 (1 - rho))`, top row first.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.nx, self.ny).into_bytes();
        for j in (0..self.ny).rev() {
            for i in 0..self.nx {
                let v = (255.0 * (1.0 - self.at(i, j))).round().clamp(0.0, 255.0);
                out.push(v as u8);
            }
        }
        out
    }

    /// Legacy ASCII VTK structured points with one cell scalar `density`.
    pub fn to_vtk(&self) -> String {
        let mut s = String::new();
        s.push_str("# vtk DataFile Version 3.0\ndensity\nASCII\nDATASET STRUCTURED_POINTS\n");
        let _ = writeln!(s, "DIMENSIONS {} {} 1", self.nx + 1, self.ny + 1);
        s.push_str("ORIGIN 0 0 0\nSPACING 1 1 1\n");
        let _ = writeln!(s, "CELL_DATA {}", self.values.len());
        s.push_str("SCALARS density double 1\nLOOKUP_TABLE default\n");
        for v in &self.values {
            let _ = writeln!(s, "{v:e}");
        }
        s
    }

    /// One line per mesh row in element order (bottom row first), values
    /// printed with round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.values.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, Error> {
        let mut values = Vec::new();
        let mut nx = None;
        let mut ny = 0;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let row: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("bad density value: {e}")))?;
            if *nx.get_or_insert(row.len()) != row.len() {
                return Err(Error::InvalidInput("ragged density CSV".into()));
            }
            values.extend(row);
            ny += 1;
        }
        Self::new(nx.unwrap_or(0), ny, values)
    }

    pub fn write(&self, path: &Path, format: DensityFormat) -> Result<(), Error> {
        match format {
            DensityFormat::Pgm => std::fs::write(path, self.to_pgm())?,
            DensityFormat::Vtk => std::fs::write(path, self.to_vtk())?,
            DensityFormat::Csv => std::fs::write(path, self.to_csv())?,
        }
        Ok(())
    }
}

/// Writes `rho` to `path` in the given format.
pub fn export_density(rho: &DensityField, path: &Path, format: DensityFormat) -> Result<(), Error> {
    rho.write(path, format)
}
