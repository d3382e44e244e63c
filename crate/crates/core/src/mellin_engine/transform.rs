//! Discrete Mellin transform on a vertical plane `Re z = c` through the FFT.
//!
//! In log-coordinates `(Mf)(c + i xi) = int e^{i xi.y} (E_c f)(y) dy`, so the
//! trapezoid rule on a uniform grid is one unnormalized inverse DFT per axis.

use std::fmt::Write as _;
use std::io::BufRead;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use super::grid::{ec_transform, GridAxis, GridFunction, LogGrid};
use crate::error::{Error, Result};

/// Dual-lattice description of one axis: spacing and length of the source grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyAxis {
    pub dy: f64,
    pub len: usize,
}

impl FrequencyAxis {
    fn as_grid_axis(&self) -> GridAxis {
        GridAxis {
            y0: 0.0,
            dy: self.dy,
            len: self.len,
        }
    }

    pub fn frequency(&self, m: usize) -> f64 {
        self.as_grid_axis().frequency(m)
    }

    pub fn step(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.len as f64 * self.dy)
    }
}

/// Values of `(Mf)(c + i xi_m)` on the dual lattice, bins in FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct MellinSlice {
    pub c: Vec<f64>,
    pub axes: Vec<FrequencyAxis>,
    pub values: Vec<Complex64>,
    /// A cosine taper was applied to the outer tenth of every axis.
    pub tapered: bool,
}

impl MellinSlice {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn index_grid(&self) -> LogGrid {
        LogGrid::new(self.axes.iter().map(FrequencyAxis::as_grid_axis).collect())
            .expect("slice axes were validated on construction")
    }

    pub fn unravel(&self, flat: usize, out: &mut [usize]) {
        let mut rem = flat;
        for i in (0..self.dim()).rev() {
            out[i] = rem % self.axes[i].len;
            rem /= self.axes[i].len;
        }
    }

    /// Complex point `c + i xi` of bin `flat`.
    pub fn point(&self, flat: usize, out: &mut [Complex64]) {
        let mut rem = flat;
        for i in (0..self.dim()).rev() {
            let a = &self.axes[i];
            out[i] = Complex64::new(self.c[i], a.frequency(rem % a.len));
            rem /= a.len;
        }
    }

    /// All points of the slice in bin order.
    pub fn points(&self) -> Vec<Vec<Complex64>> {
        let mut z = vec![Complex64::default(); self.dim()];
        (0..self.len())
            .map(|k| {
                self.point(k, &mut z);
                z.clone()
            })
            .collect()
    }

    /// Same slice re-expressed on the plane `Re w = 1 - c`, `w = 1 - z`.
    ///
    /// The frequency of bin `m` becomes that of bin `(N - m) mod N`.
    pub fn reflect_index(&self) -> Vec<usize> {
        let g = self.index_grid();
        let mut idx = vec![0; self.dim()];
        (0..self.len())
            .map(|k| {
                g.unravel(k, &mut idx);
                for (i, a) in self.axes.iter().enumerate() {
                    idx[i] = (a.len - idx[i]) % a.len;
                }
                g.ravel(&idx)
            })
            .collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        let c: Vec<String> = self.c.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "# c = {}", c.join(" "));
        let _ = writeln!(s, "# tapered = {}", self.tapered);
        for (i, a) in self.axes.iter().enumerate() {
            let _ = writeln!(s, "# axis {}: {} {}", i + 1, a.dy, a.len);
        }
        let mut z = vec![Complex64::default(); self.dim()];
        for (k, v) in self.values.iter().enumerate() {
            self.point(k, &mut z);
            for zi in &z {
                let _ = write!(s, "{},", zi.im);
            }
            let _ = writeln!(s, "{},{}", v.re, v.im);
        }
        s
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut c = Vec::new();
        let mut tapered = false;
        let mut axes: Vec<Option<FrequencyAxis>> = Vec::new();
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
                if let Some(v) = rest.strip_prefix("c =") {
                    c = v
                        .split_whitespace()
                        .map(|x| x.parse::<f64>().map_err(|_| bad("bad c")))
                        .collect::<Result<_>>()?;
                    axes = vec![None; c.len()];
                } else if let Some(v) = rest.strip_prefix("tapered =") {
                    tapered = v.trim() == "true";
                } else if let Some(a) = rest.strip_prefix("axis") {
                    let (idx, params) = a.split_once(':').ok_or_else(|| bad("bad axis header"))?;
                    let idx: usize = idx.trim().parse().map_err(|_| bad("bad axis index"))?;
                    let nums: Vec<&str> = params.split_whitespace().collect();
                    if nums.len() != 2 || idx == 0 || idx > axes.len() {
                        return Err(bad("expected '# axis i: dy N'"));
                    }
                    let dy: f64 = nums[0].parse().map_err(|_| bad("bad dy"))?;
                    let len: usize = nums[1].parse().map_err(|_| bad("bad N"))?;
                    GridAxis::new(0.0, dy, len)?;
                    axes[idx - 1] = Some(FrequencyAxis { dy, len });
                }
                continue;
            }
            let fields: Vec<&str> = t.split(',').collect();
            if fields.len() != c.len() + 2 {
                return Err(bad("wrong number of columns"));
            }
            let re: f64 = fields[c.len()].trim().parse().map_err(|_| bad("bad real part"))?;
            let im: f64 = fields[c.len() + 1].trim().parse().map_err(|_| bad("bad imaginary part"))?;
            values.push(Complex64::new(re, im));
        }
        if c.is_empty() {
            return Err(Error::Format("missing '# c =' header".into()));
        }
        let axes = axes
            .into_iter()
            .enumerate()
            .map(|(i, a)| a.ok_or_else(|| Error::Format(format!("missing header for axis {}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        let expected: usize = axes.iter().map(|a| a.len).product();
        if values.len() != expected {
            return Err(Error::Shape(format!("{} rows for {} bins", values.len(), expected)));
        }
        Ok(Self { c, axes, values, tapered })
    }
}

/// Cosine taper that is 1 in the interior and falls to 0 over the outer tenth.
pub fn taper_weight(k: usize, len: usize) -> f64 {
    let ramp = ((len as f64) * 0.1).ceil().max(1.0);
    let d = k.min(len - 1 - k) as f64;
    if d >= ramp {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * d / ramp).cos())
    }
}

/// In-place DFT along every axis of a row-major buffer.
pub(crate) fn fft_nd(buf: &mut [Complex64], shape: &[usize], direction: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let total: usize = shape.iter().product();
    let mut stride = total;
    for &n in shape {
        stride /= n;
        let fft = planner.plan_fft(n, direction);
        let mut line = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let block = n * stride;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = buf[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    buf[base + k * stride] = *v;
                }
            }
        }
    }
}

/// Per-axis phase `e^{i s xi_m y0}` tables.
fn phase_tables(grid: &LogGrid, sign: f64) -> Vec<Vec<Complex64>> {
    grid.axes()
        .iter()
        .map(|a| {
            (0..a.len)
                .map(|m| Complex64::from_polar(1.0, sign * a.frequency(m) * a.y0))
                .collect()
        })
        .collect()
}

fn apply_separable(buf: &mut [Complex64], grid: &LogGrid, tables: &[Vec<Complex64>]) {
    let mut idx = vec![0; grid.dim()];
    for (k, v) in buf.iter_mut().enumerate() {
        grid.unravel(k, &mut idx);
        let mut w = Complex64::new(1.0, 0.0);
        for (i, t) in tables.iter().enumerate() {
            w *= t[idx[i]];
        }
        *v *= w;
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ForwardOptions {
    pub taper: bool,
}

/// `(Mf)` on `Re z = c` at every bin of the dual lattice.
pub fn mellin_forward(f: &GridFunction, c: &[f64], opts: ForwardOptions) -> Result<MellinSlice> {
    if let Some((i, v)) = c.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!(
            "plane component c_{} = {v} must be positive",
            i + 1
        )));
    }
    let g = ec_transform(f, c)?;
    let grid = f.grid();
    let mut buf: Vec<Complex64> = g.values().iter().map(|v| Complex64::new(*v, 0.0)).collect();
    if opts.taper {
        let mut idx = vec![0; grid.dim()];
        for (k, v) in buf.iter_mut().enumerate() {
            grid.unravel(k, &mut idx);
            let w: f64 = idx
                .iter()
                .zip(grid.axes())
                .map(|(i, a)| taper_weight(*i, a.len))
                .product();
            *v *= w;
        }
    }
    fft_nd(&mut buf, &grid.shape(), FftDirection::Inverse);
    let vol = grid.cell_volume();
    apply_separable(&mut buf, grid, &phase_tables(grid, 1.0));
    buf.iter_mut().for_each(|v| *v *= vol);
    Ok(MellinSlice {
        c: c.to_vec(),
        axes: grid
            .axes()
            .iter()
            .map(|a| FrequencyAxis { dy: a.dy, len: a.len })
            .collect(),
        values: buf,
        tapered: opts.taper,
    })
}

/// Result of [`mellin_inverse`] with the size of the discarded imaginary part.
#[derive(Clone, Debug)]
pub struct InverseOutput {
    pub function: GridFunction,
    /// `max |Im| / max |Re|` of the reconstructed `E_c f`.
    pub imaginary_residue: f64,
}

/// Inverts a slice onto the grid with the slice's spacing and lengths and
/// first node `y0` (one entry per axis).
pub fn mellin_inverse(slice: &MellinSlice, y0: &[f64]) -> Result<InverseOutput> {
    if y0.len() != slice.dim() {
        return Err(Error::Shape(format!(
            "{} origins for a {}-dimensional slice",
            y0.len(),
            slice.dim()
        )));
    }
    let grid = LogGrid::new(
        slice
            .axes
            .iter()
            .zip(y0)
            .map(|(a, y)| GridAxis::new(*y, a.dy, a.len))
            .collect::<Result<_>>()?,
    )?;
    if slice.values.len() != grid.len() {
        return Err(Error::Shape("slice values do not match its axes".into()));
    }
    let mut buf = slice.values.clone();
    apply_separable(&mut buf, &grid, &phase_tables(&grid, -1.0));
    fft_nd(&mut buf, &grid.shape(), FftDirection::Forward);
    let norm = 1.0 / (grid.cell_volume() * grid.len() as f64);
    let mut y = vec![0.0; grid.dim()];
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    let values = buf
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let v = v * norm;
            max_re = max_re.max(v.re.abs());
            max_im = max_im.max(v.im.abs());
            grid.log_point(k, &mut y);
            let w: f64 = slice.c.iter().zip(&y).map(|(a, b)| a * b).sum();
            v.re * (-w).exp()
        })
        .collect();
    let imaginary_residue = if max_re > 0.0 { max_im / max_re } else { max_im };
    Ok(InverseOutput {
        function: GridFunction::new(grid, values)?,
        imaginary_residue,
    })
}
