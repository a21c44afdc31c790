use std::io::{Read, Write};
use std::path::Path;

use super::LsError;
use crate::io_util::atomic_write;
use crate::potential_model::SpikeConfig;

/// Square box `[-L, L]²` with `n` nodes per side (n odd, so the origin is a node).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub half_width: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self, LsError> {
        if n < 3 || n % 2 == 0 {
            return Err(LsError::InvalidParameters(format!("n = {n} must be odd and ≥ 3")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(LsError::InvalidParameters(format!("half-width {half_width} must be positive")));
        }
        Ok(Grid { half_width, n })
    }

    /// Smallest grid of spacing `kappa·ε` leaving `5ε log(1/ε)` between every
    /// spike and the boundary.
    pub fn for_config(cfg: &SpikeConfig, kappa: f64) -> Result<Self, LsError> {
        let eps = cfg.eps;
        let reach = cfg
            .points
            .iter()
            .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let l = reach + 5.0 * eps * (1.0 / eps).ln();
        let h = kappa * eps;
        let half = (l / h).ceil() as usize;
        Grid::new(half as f64 * h, 2 * half + 1)
    }

    /// Same box, spacing halved.
    pub fn refined(&self) -> Grid {
        Grid { half_width: self.half_width, n: 2 * self.n - 1 }
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        let c = (self.n - 1) / 2;
        (i as f64 - c as f64) * self.h()
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    pub fn is_boundary(&self, ix: usize, iy: usize) -> bool {
        ix == 0 || iy == 0 || ix == self.n - 1 || iy == self.n - 1
    }

    /// Cell area `h²`, the quadrature weight of an interior node.
    pub fn cell(&self) -> f64 {
        self.h() * self.h()
    }
}

/// Row-major nodal values `values[iy·n + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: Grid) -> Self {
        GridField { grid, values: vec![0.0; grid.len()] }
    }

    /// Samples `f(x, y)` at interior nodes; boundary nodes are 0.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let n = grid.n;
        let mut values = vec![0.0; grid.len()];
        for iy in 1..n - 1 {
            let y = grid.coord(iy);
            for ix in 1..n - 1 {
                values[iy * n + ix] = f(grid.coord(ix), y);
            }
        }
        GridField { grid, values }
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `h² Σ u v`, the discrete L² pairing.
    pub fn dot(&self, other: &GridField) -> f64 {
        self.grid.cell() * dot(&self.values, &other.values)
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    /// Values at the nodes of a grid with half the resolution (every other node).
    pub fn coarsened(&self) -> GridField {
        let n = self.grid.n;
        let coarse = Grid { half_width: self.grid.half_width, n: (n + 1) / 2 };
        let mut values = Vec::with_capacity(coarse.len());
        for iy in (0..n).step_by(2) {
            for ix in (0..n).step_by(2) {
                values.push(self.values[iy * n + ix]);
            }
        }
        GridField { grid: coarse, values }
    }

    /// `x,y,value` rows.
    pub fn to_csv(&self) -> String {
        let g = self.grid;
        let mut out = String::from("x,y,value\n");
        for iy in 0..g.n {
            for ix in 0..g.n {
                out.push_str(&format!("{},{},{}\n", g.coord(ix), g.coord(iy), self.at(ix, iy)));
            }
        }
        out
    }

    /// `n` (u64 LE), `L` (f64 LE), then row-major f64 LE values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.values.len());
        out.extend_from_slice(&(self.grid.n as u64).to_le_bytes());
        out.extend_from_slice(&self.grid.half_width.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LsError> {
        let bad = |m: &str| LsError::InvalidParameters(format!("field dump: {m}"));
        if bytes.len() < 16 {
            return Err(bad("truncated header"));
        }
        let n = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        let l = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let grid = Grid::new(l, n)?;
        if bytes.len() != 16 + 8 * grid.len() {
            return Err(bad("length does not match header"));
        }
        let values = bytes[16..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(GridField { grid, values })
    }

    pub fn write_binary(&self, path: &Path) -> Result<(), LsError> {
        Ok(atomic_write(path, &self.to_bytes())?)
    }

    pub fn read_binary(path: &Path) -> Result<Self, LsError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), LsError> {
        let mut buf = Vec::new();
        buf.write_all(self.to_csv().as_bytes())?;
        Ok(atomic_write(path, &buf)?)
    }
}

/// Sequential sum in index order (fixed reduction order keeps runs bit-reproducible).
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
