//! Uniform grids in logarithmic coordinates `y = ln x` and real samples on them.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    /// Log-coordinate of the first node.
    pub y0: f64,
    pub dy: f64,
    pub len: usize,
}

impl GridAxis {
    pub fn new(y0: f64, dy: f64, len: usize) -> Result<Self> {
        if !y0.is_finite() {
            return Err(Error::Structure(format!("axis origin must be finite, got {y0}")));
        }
        if !(dy.is_finite() && dy > 0.0) {
            return Err(Error::Structure(format!("axis spacing must be positive, got {dy}")));
        }
        if len < 8 || !len.is_power_of_two() {
            return Err(Error::Structure(format!(
                "axis length must be a power of two >= 8, got {len}"
            )));
        }
        Ok(Self { y0, dy, len })
    }

    /// `len` nodes from `lo` to `hi` inclusive.
    pub fn spanning(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::Structure(format!("empty range [{lo}, {hi}]")));
        }
        Self::new(lo, (hi - lo) / (len.saturating_sub(1).max(1)) as f64, len)
    }

    #[inline]
    pub fn y(&self, k: usize) -> f64 {
        self.y0 + k as f64 * self.dy
    }

    pub fn y_last(&self) -> f64 {
        self.y(self.len - 1)
    }

    /// Signed FFT frequency index of bin `m`.
    #[inline]
    pub fn signed_index(&self, m: usize) -> i64 {
        if m < self.len / 2 {
            m as i64
        } else {
            m as i64 - self.len as i64
        }
    }

    /// Angular frequency of bin `m` on the dual lattice, spacing `2 pi / (N dy)`.
    #[inline]
    pub fn frequency(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.signed_index(m) as f64 / (self.len as f64 * self.dy)
    }

    /// Axis reflected through the origin: node `k` sits at `-y(N-1-k)`.
    pub fn mirrored(&self) -> Self {
        Self {
            y0: -self.y_last(),
            dy: self.dy,
            len: self.len,
        }
    }
}

/// Tensor grid, row-major with axis 0 varying slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    axes: Vec<GridAxis>,
}

impl LogGrid {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Structure("a grid needs at least one axis".into()));
        }
        for a in &axes {
            GridAxis::new(a.y0, a.dy, a.len)?;
        }
        Ok(Self { axes })
    }

    /// Same axis `[lo, hi]` with `len` nodes in every one of `dim` directions.
    pub fn cube(dim: usize, lo: f64, hi: f64, len: usize) -> Result<Self> {
        Self::new(vec![GridAxis::spanning(lo, hi, len)?; dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &GridAxis {
        &self.axes[i]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Product of spacings: quadrature weight of one node in log-coordinates.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.dy).product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for i in (0..self.dim().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.axes[i + 1].len;
        }
        strides
    }

    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for i in (0..self.dim()).rev() {
            let n = self.axes[i].len;
            out[i] = flat % n;
            flat /= n;
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (k, a)| acc * a.len + k)
    }

    /// Log-coordinates of node `flat`.
    pub fn log_point(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for i in (0..self.dim()).rev() {
            let a = &self.axes[i];
            out[i] = a.y(rem % a.len);
            rem /= a.len;
        }
    }

    pub fn point(&self, flat: usize, out: &mut [f64]) {
        self.log_point(flat, out);
        out.iter_mut().for_each(|v| *v = v.exp());
    }

    pub fn mirrored(&self) -> Self {
        Self {
            axes: self.axes.iter().map(GridAxis::mirrored).collect(),
        }
    }

    /// True when both grids have the same spacing and length on every axis.
    pub fn is_dual_compatible(&self, other: &LogGrid) -> bool {
        self.dim() == other.dim()
            && self
                .axes
                .iter()
                .zip(&other.axes)
                .all(|(a, b)| a.len == b.len && (a.dy - b.dy).abs() <= 1e-12 * a.dy)
    }

    /// Boolean mask of nodes inside the central `fraction` of every axis.
    pub fn interior_mask(&self, fraction: f64) -> Vec<bool> {
        let margin = (1.0 - fraction) / 2.0;
        let mut idx = vec![0; self.dim()];
        (0..self.len())
            .map(|flat| {
                self.unravel(flat, &mut idx);
                idx.iter().zip(&self.axes).all(|(k, a)| {
                    let t = *k as f64 / (a.len - 1) as f64;
                    t >= margin - 1e-12 && t <= 1.0 - margin + 1e-12
                })
            })
            .collect()
    }
}

/// Nodes in the interpolation stencil along each axis.
pub const STENCIL: usize = 6;

/// Lagrange weights for nodes `-2..=3` relative to the cell at fraction `t`.
#[inline]
pub fn lagrange_weights(t: f64) -> [f64; STENCIL] {
    let mut w = [0.0; STENCIL];
    for (i, wi) in w.iter_mut().enumerate() {
        let d = i as f64 - 2.0;
        let mut num = 1.0;
        let mut den = 1.0;
        for j in 0..STENCIL {
            if j != i {
                let e = j as f64 - 2.0;
                num *= t - e;
                den *= d - e;
            }
        }
        *wi = num / den;
    }
    w
}

/// Samples of a real function on a [`LogGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: LogGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: LogGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("sample {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: LogGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples `f` at every node `x = e^y`.
    pub fn from_fn(grid: LogGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|k| {
                grid.point(k, &mut x);
                f(&x)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// `a * self + b * other` on a shared grid.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Shape("grids differ".into()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| a * u + b * v)
                .collect(),
        })
    }

    /// Six-point Lagrange interpolation in log-coordinates; zero outside the box.
    pub fn sample(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        if n > 4 {
            return self.sample_slow(x);
        }
        let mut base = [0usize; 4];
        let mut weights = [[0.0f64; STENCIL]; 4];
        for (i, a) in self.grid.axes().iter().enumerate() {
            if !(x[i] > 0.0) {
                return 0.0;
            }
            let s = (x[i].ln() - a.y0) / a.dy;
            let last = (a.len - 1) as f64;
            if !(s >= -1e-9 && s <= last + 1e-9) {
                return 0.0;
            }
            let start = (s.floor() as i64 - 2).clamp(0, (a.len - STENCIL) as i64) as usize;
            base[i] = start;
            weights[i] = lagrange_weights(s - start as f64 - 2.0);
        }
        let strides = self.grid.strides();
        let mut total = 0.0;
        let mut code = [0usize; 4];
        loop {
            let mut w = 1.0;
            let mut flat = 0;
            for i in 0..n {
                w *= weights[i][code[i]];
                flat += (base[i] + code[i]) * strides[i];
            }
            total += w * self.values[flat];
            let mut i = 0;
            while i < n {
                code[i] += 1;
                if code[i] < STENCIL {
                    break;
                }
                code[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        total
    }

    fn sample_slow(&self, x: &[f64]) -> f64 {
        // Multilinear fallback for very high dimension.
        let n = self.dim();
        let strides = self.grid.strides();
        let mut lo = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for (i, a) in self.grid.axes().iter().enumerate() {
            let s = (x[i].ln() - a.y0) / a.dy;
            if !(s >= 0.0 && s <= (a.len - 1) as f64) {
                return 0.0;
            }
            let k = (s.floor() as usize).min(a.len - 2);
            lo[i] = k;
            frac[i] = s - k as f64;
        }
        (0..1usize << n)
            .map(|code| {
                let mut w = 1.0;
                let mut flat = 0;
                for i in 0..n {
                    let bit = (code >> i) & 1;
                    w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                    flat += (lo[i] + bit) * strides[i];
                }
                w * self.values[flat]
            })
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dim {}", self.dim());
        for (i, a) in self.grid.axes().iter().enumerate() {
            let _ = writeln!(s, "# axis {}: {} {} {}", i + 1, a.y0, a.dy, a.len);
        }
        for v in &self.values {
            let _ = writeln!(s, "{v}");
        }
        s
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut axes: Vec<Option<GridAxis>> = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let bad = |m: &str| Error::parse(lineno + 1, 1, m.to_string());
            if let Some(rest) = t.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(d) = rest.strip_prefix("dim") {
                    let d: usize = d.trim().parse().map_err(|_| bad("bad '# dim' header"))?;
                    dim = Some(d);
                    axes = vec![None; d];
                } else if let Some(a) = rest.strip_prefix("axis") {
                    let (idx, params) = a.split_once(':').ok_or_else(|| bad("bad '# axis' header"))?;
                    let idx: usize = idx.trim().parse().map_err(|_| bad("bad axis index"))?;
                    let nums: Vec<&str> = params.split_whitespace().collect();
                    if nums.len() != 3 || idx == 0 || idx > axes.len() {
                        return Err(bad("expected '# axis i: y0 dy N'"));
                    }
                    let y0: f64 = nums[0].parse().map_err(|_| bad("bad y0"))?;
                    let dy: f64 = nums[1].parse().map_err(|_| bad("bad dy"))?;
                    let len: usize = nums[2].parse().map_err(|_| bad("bad N"))?;
                    axes[idx - 1] = Some(GridAxis::new(y0, dy, len)?);
                }
                continue;
            }
            values.push(t.parse::<f64>().map_err(|_| bad("expected one number per line"))?);
        }
        if dim.is_none() {
            return Err(Error::Format("missing '# dim' header".into()));
        }
        let axes = axes
            .into_iter()
            .enumerate()
            .map(|(i, a)| a.ok_or_else(|| Error::Format(format!("missing header for axis {}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(LogGrid::new(axes)?, values)
    }
}

/// Samples of `(E_c f)(y) = e^{c.y} f(e^y)`.
pub fn ec_transform(f: &GridFunction, c: &[f64]) -> Result<GridFunction> {
    if c.len() != f.dim() {
        return Err(Error::Shape(format!(
            "weight has {} components for a {}-dimensional grid",
            c.len(),
            f.dim()
        )));
    }
    let grid = f.grid();
    let mut y = vec![0.0; grid.dim()];
    let values = f
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| {
            grid.log_point(k, &mut y);
            let w: f64 = c.iter().zip(&y).map(|(a, b)| a * b).sum();
            if *v == 0.0 {
                0.0
            } else {
                v * w.exp()
            }
        })
        .collect();
    GridFunction::new(grid.clone(), values)
}
