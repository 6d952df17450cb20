use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::descent::HilbertElement;
use crate::spectral::Grid;
use crate::{Error, Result};

/// Real periodic grid function sampled at the collocation points.
///
/// Samples are stored row-major: `values[i * n + j] = f(i h, j h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    values: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at every collocation point.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j in 0..n {
                let (x, y) = grid.point(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n() + j]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `‖self − other‖_∞`
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Rectangle-rule quadrature `h² Σ f`.
    pub fn integral(&self) -> f64 {
        let h = self.grid.spacing();
        h * h * self.values.iter().sum::<f64>()
    }

    pub(crate) fn check_grid(&self, grid: Grid) -> Result<()> {
        if self.grid != grid {
            return Err(Error::Shape {
                expected: grid.len(),
                found: self.grid.len(),
            });
        }
        Ok(())
    }

    /// Writes the field as CSV: a `# ppgd-field n=<n> length=<l>` header,
    /// then one grid row per line with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.grid.n();
        writeln!(out, "# ppgd-field n={} length={}", n, self.grid.length())?;
        for row in self.values.chunks(n) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write_csv(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, origin: &str) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_string(),
            message,
        };
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_err("empty file".into()))??;
        let rest = header
            .strip_prefix("# ppgd-field")
            .ok_or_else(|| parse_err(format!("bad header `{header}`")))?;
        let mut n = None;
        let mut length = None;
        for token in rest.split_whitespace() {
            match token.split_once('=') {
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                Some(("length", v)) => length = v.parse::<f64>().ok(),
                _ => return Err(parse_err(format!("unexpected header token `{token}`"))),
            }
        }
        let (n, length) = match (n, length) {
            (Some(n), Some(l)) => (n, l),
            _ => return Err(parse_err("header must carry n and length".into())),
        };
        let grid = Grid::new(n, length)?;
        let mut values = Vec::with_capacity(grid.len());
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            for cell in line.split(',') {
                let v = cell.trim().parse::<f64>().map_err(|e| {
                    parse_err(format!(
                        "row {}: cannot parse `{}`: {e}",
                        row + 1,
                        cell.trim()
                    ))
                })?;
                values.push(v);
            }
        }
        if values.len() != grid.len() {
            return Err(parse_err(format!(
                "expected {} samples, found {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(parse_err("non-finite sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path)?;
        Self::read_csv(BufReader::new(file), &path.display().to_string())
    }
}

/// The ambient pairing is the `L²` inner product evaluated by the
/// rectangle rule, accumulated sequentially in storage order.
impl HilbertElement for SpectralField {
    fn axpy(&mut self, alpha: f64, x: &Self) {
        debug_assert_eq!(self.grid, x.grid);
        for (a, b) in self.values.iter_mut().zip(&x.values) {
            *a += alpha * b;
        }
    }

    fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let h = self.grid.spacing();
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        h * h * s
    }

    fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let grid = Grid::new(8, 1.5).unwrap();
        let f = SpectralField::from_fn(grid, |x, y| (x * 3.1).sin() * (y + 0.1).ln() / 7.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# ppgd-field n=8 length=1.5\n"));
        assert_eq!(text.lines().count(), 9);
        let back = SpectralField::read_csv(&buf[..], "mem").unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_rejects_wrong_sample_count() {
        let text = "# ppgd-field n=4 length=1\n1,2,3,4\n";
        let err = SpectralField::read_csv(text.as_bytes(), "short.csv").unwrap_err();
        assert!(err.to_string().contains("short.csv"));
    }

    #[test]
    fn shape_is_checked() {
        let grid = Grid::new(4, 1.0).unwrap();
        assert!(matches!(
            SpectralField::from_values(grid, vec![0.0; 15]),
            Err(Error::Shape {
                expected: 16,
                found: 15
            })
        ));
    }
}
