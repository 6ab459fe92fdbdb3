//! Uniform grids on `T^m = R^m / 2πZ^m`, the normalised discrete Fourier transform and
//! `ℓ^p` sums of coefficients.
//!
//! Coefficients carry the `n^{-m}` factor, so for band-limited `f`
//! `f̂(k) = n^{-m} Σ_j f(t_j) e^{-i(k,t_j)}` equals `(2π)^{-m} ∫ f(t) e^{-i(k,t)} dt`.
//! Samples are stored row-major with axis 0 slowest; coefficients use the same layout in
//! FFT order, so index `i` on an axis stands for the frequency `i` when `i < n/2` and
//! `i - n` otherwise. The resolved box is therefore `[-n/2, n/2)^m`.

use std::f64::consts::TAU;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::phases::Phase;
use crate::summation::descending_sum;
use crate::{Complex64, Error, Result};

/// Largest supported torus dimension.
pub const MAX_DIMENSION: usize = 4;

/// Upper limit on `n^m` for any grid.
pub const MAX_POINTS: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    m: usize,
    n: usize,
}

impl GridSpec {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || m > MAX_DIMENSION {
            return Err(Error::InvalidGrid(format!("dimension m={m} outside 1..={MAX_DIMENSION}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n={n} must be a power of two >= 4")));
        }
        match n.checked_pow(m as u32) {
            Some(total) if total <= MAX_POINTS => Ok(Self { m, n }),
            _ => Err(Error::InvalidGrid(format!("n^m = {n}^{m} exceeds {MAX_POINTS} points"))),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of nodes, `n^m`.
    pub fn len(&self) -> usize {
        self.n.pow(self.m as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    /// Writes the coordinates of node `index` into `out[..m]`.
    pub fn node(&self, index: usize, out: &mut [f64]) {
        let h = self.spacing();
        let mut rest = index;
        for a in (0..self.m).rev() {
            out[a] = (rest % self.n) as f64 * h;
            rest /= self.n;
        }
    }

    /// Writes the lattice frequency of coefficient `index` into `out[..m]`.
    pub fn frequency(&self, index: usize, out: &mut [i64]) {
        let mut rest = index;
        for a in (0..self.m).rev() {
            out[a] = self.signed_frequency(rest % self.n);
            rest /= self.n;
        }
    }

    /// Storage index of frequency `k`, or `None` outside `[-n/2, n/2)^m`.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.m {
            return None;
        }
        let half = (self.n / 2) as i64;
        let mut index = 0usize;
        for &ka in k {
            if ka < -half || ka >= half {
                return None;
            }
            index = index * self.n + ka.rem_euclid(self.n as i64) as usize;
        }
        Some(index)
    }

    fn signed_frequency(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }
}

/// Complex samples on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("field has {} values, grid needs {}", values.len(), grid.len())));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node, in parallel.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let m = grid.m();
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let mut t = [0.0; MAX_DIMENSION];
                grid.node(i, &mut t);
                f(&t[..m])
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Largest deviation of `|f(t_j)|` from 1.
    pub fn unimodular_defect(&self) -> f64 {
        self.values.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Fourier coefficients on the box `[-n/2, n/2)^m`, stored in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coefficients: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: GridSpec, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "spectrum has {} coefficients, grid needs {}",
                coefficients.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, coefficients })
    }

    /// Spectrum with a single unit coefficient at `k`.
    pub fn delta(grid: GridSpec, k: &[i64]) -> Result<Self> {
        let index = grid.index_of(k).ok_or_else(|| Error::OutsideBox(k.to_vec()))?;
        let mut coefficients = vec![Complex64::new(0.0, 0.0); grid.len()];
        coefficients[index] = Complex64::new(1.0, 0.0);
        Ok(Self { grid, coefficients })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficient(&self, k: &[i64]) -> Option<Complex64> {
        self.grid.index_of(k).map(|i| self.coefficients[i])
    }

    /// `(k, f̂(k))` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = ([i64; MAX_DIMENSION], Complex64)> + '_ {
        self.coefficients.iter().enumerate().map(move |(i, &c)| {
            let mut k = [0i64; MAX_DIMENSION];
            self.grid.frequency(i, &mut k);
            (k, c)
        })
    }

    /// `Σ_{|k|_∞ > n/4} |f̂(k)|^p`, the aliasing diagnostic.
    pub fn annulus_mass(&self, p: f64) -> f64 {
        let quarter = (self.grid.n() / 4) as i64;
        let mut terms: Vec<f64> = self
            .iter()
            .filter(|(k, _)| k[..self.grid.m()].iter().any(|ka| ka.abs() > quarter))
            .map(|(_, c)| c.norm().powf(p))
            .collect();
        descending_sum(&mut terms)
    }
}

/// Samples `e^{iλφ(t_j)}` on the grid.
pub fn sample_phase(phase: &Phase, lambda: f64, grid: GridSpec) -> Result<Field> {
    if phase.m() != grid.m() {
        return Err(Error::DimensionMismatch { phase: phase.m(), grid: grid.m() });
    }
    Ok(Field::from_fn(grid, |t| Complex64::cis(lambda * phase.eval(t))))
}

/// Forward transform with the `n^{-m}` normalisation.
pub fn analyze(field: &Field) -> Spectrum {
    let grid = field.grid;
    let mut data = field.values.clone();
    transform(&mut data, grid, FftDirection::Forward);
    let scale = 1.0 / grid.len() as f64;
    data.par_iter_mut().for_each(|c| *c *= scale);
    Spectrum { grid, coefficients: data }
}

/// Inverse of [`analyze`]: `f(t_j) = Σ_k f̂(k) e^{i(k,t_j)}`.
pub fn synthesize(spectrum: &Spectrum) -> Field {
    let grid = spectrum.grid;
    let mut data = spectrum.coefficients.clone();
    transform(&mut data, grid, FftDirection::Inverse);
    Field { grid, values: data }
}

/// `(Σ_k |f̂(k)|^p)^{1/p}` over the resolved box, summed in descending magnitude order.
pub fn lp_sum(spectrum: &Spectrum, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let mut terms: Vec<f64> = spectrum.coefficients.par_iter().map(|c| c.norm().powf(p)).collect();
    Ok(descending_sum(&mut terms).powf(1.0 / p))
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if (1.0..=2.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::ExponentOutOfRange(p))
    }
}

fn transform(data: &mut [Complex64], grid: GridSpec, direction: FftDirection) {
    let n = grid.n();
    let fft = FftPlanner::new().plan_fft(n, direction);
    for axis in 0..grid.m() {
        let stride = n.pow((grid.m() - 1 - axis) as u32);
        transform_axis(data, n, stride, &fft);
    }
}

/// Transforms every line along the axis whose elements are `stride` apart.
fn transform_axis(data: &mut [Complex64], n: usize, stride: usize, fft: &Arc<dyn Fft<f64>>) {
    const LINES_PER_TASK: usize = 64;
    if stride == 1 {
        data.par_chunks_mut(n * LINES_PER_TASK).for_each(|chunk| fft.process(chunk));
        return;
    }
    let block = n * stride;
    data.par_chunks_mut(block).for_each(|blk| {
        let mut lines = vec![Complex64::new(0.0, 0.0); block];
        for j in 0..n {
            for o in 0..stride {
                lines[o * n + j] = blk[j * stride + o];
            }
        }
        lines.par_chunks_mut(n * LINES_PER_TASK).for_each(|chunk| fft.process(chunk));
        for j in 0..n {
            for o in 0..stride {
                blk[j * stride + o] = lines[o * n + j];
            }
        }
    });
}
