//! Matrix-free CASSI sensing operator `H` and its adjoint.
//!
//! Band `lambda` is dispersed by exactly `lambda` detector columns along the
//! second spatial axis `y`. In standard mode voxel `(x, y, lambda)` lands on
//! FPA pixel `(x, y + lambda)`, giving `N + L - 1` columns per FPA row. In
//! higher-order mode the coded voxel spreads over the three columns
//! `y + lambda + {0, 1, 2}` with weights `(w_-1, w_0, w_+1)`, i.e. the
//! standard column shifted by one guard column on the left, giving `N + L + 1`
//! columns and no clipped energy.
//!
//! Measurements are laid out shot-major, then FPA row `x`, then column `j`.

use rayon::prelude::*;

use crate::cube::{CodedAperture, HyperCube, MeasurementVector};
use crate::error::{Error, Result};

pub const DEFAULT_HIGHER_ORDER_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.25];

/// Largest `m * n` that [`densify`] will materialize.
pub const DENSIFY_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Standard,
    HigherOrder,
}

impl Order {
    /// Tag used by the measurement file format.
    pub fn tag(self) -> u32 {
        match self {
            Order::Standard => 0,
            Order::HigherOrder => 1,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(Order::Standard),
            1 => Some(Order::HigherOrder),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CassiModel {
    m_rows: usize,
    n_cols: usize,
    bands: usize,
    shots: Vec<CodedAperture>,
    order: Order,
    weights: [f64; 3],
}

impl CassiModel {
    pub fn new(bands: usize, shots: Vec<CodedAperture>, order: Order) -> Result<Self> {
        Self::with_weights(bands, shots, order, DEFAULT_HIGHER_ORDER_WEIGHTS)
    }

    /// `weights` are `(w_-1, w_0, w_+1)` and only matter in higher-order mode,
    /// but are validated either way.
    pub fn with_weights(
        bands: usize,
        shots: Vec<CodedAperture>,
        order: Order,
        weights: [f64; 3],
    ) -> Result<Self> {
        let first = shots
            .first()
            .ok_or_else(|| Error::Size("a CASSI model needs at least one shot".into()))?;
        let (m_rows, n_cols) = (first.m_rows(), first.n_cols());
        if bands == 0 {
            return Err(Error::Size("band count must be positive".into()));
        }
        if let Some(k) = shots
            .iter()
            .position(|a| a.m_rows() != m_rows || a.n_cols() != n_cols)
        {
            return Err(Error::Size(format!(
                "aperture {k} is {}x{}, expected {m_rows}x{n_cols}",
                shots[k].m_rows(),
                shots[k].n_cols()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain(format!(
                "higher-order weights must be nonnegative, got {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "higher-order weights must sum to 1, got {sum}"
            )));
        }
        Ok(Self {
            m_rows,
            n_cols,
            bands,
            shots,
            order,
            weights,
        })
    }

    pub fn m_rows(&self) -> usize {
        self.m_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn shots(&self) -> &[CodedAperture] {
        &self.shots
    }

    pub fn shot_count(&self) -> usize {
        self.shots.len()
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn weights(&self) -> [f64; 3] {
        self.weights
    }

    pub fn cube_dims(&self) -> (usize, usize, usize) {
        (self.m_rows, self.n_cols, self.bands)
    }

    /// Signal length `n = M * N * L`.
    pub fn signal_len(&self) -> usize {
        self.m_rows * self.n_cols * self.bands
    }

    /// FPA columns per row for one shot.
    pub fn fpa_width(&self) -> usize {
        match self.order {
            Order::Standard => self.n_cols + self.bands - 1,
            Order::HigherOrder => self.n_cols + self.bands + 1,
        }
    }

    pub fn measurement_count(&self) -> usize {
        self.shots.len() * self.m_rows * self.fpa_width()
    }

    /// Measurement rate `R = m / n`.
    pub fn measurement_rate(&self) -> f64 {
        self.measurement_count() as f64 / self.signal_len() as f64
    }

    #[inline]
    pub fn fpa_index(&self, shot: usize, x: usize, j: usize) -> usize {
        (shot * self.m_rows + x) * self.fpa_width() + j
    }

    /// Nonzero taps `(column offset from y + lambda, weight)` for one voxel.
    fn taps(&self) -> Vec<(usize, f64)> {
        match self.order {
            Order::Standard => vec![(0, 1.0)],
            Order::HigherOrder => self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(d, w)| (d, *w))
                .collect(),
        }
    }

    fn check_cube(&self, cube: &HyperCube) -> Result<()> {
        if cube.dims() != self.cube_dims() {
            return Err(Error::Size(format!(
                "cube is {:?}, model expects {:?}",
                cube.dims(),
                self.cube_dims()
            )));
        }
        Ok(())
    }

    fn check_measurements(&self, g: &MeasurementVector) -> Result<()> {
        if g.len() != self.measurement_count() {
            return Err(Error::Size(format!(
                "measurement vector has {} entries, model expects {}",
                g.len(),
                self.measurement_count()
            )));
        }
        Ok(())
    }

    /// `g = H f`.
    pub fn forward(&self, cube: &HyperCube) -> Result<MeasurementVector> {
        self.check_cube(cube)?;
        let (m, n, l) = self.cube_dims();
        let width = self.fpa_width();
        let taps = self.taps();
        let mut out = vec![0.0; self.measurement_count()];
        out.par_chunks_mut(width)
            .enumerate()
            .for_each(|(row, fpa_row)| {
                let (shot, x) = (row / m, row % m);
                let aperture = &self.shots[shot];
                for y in 0..n {
                    if !aperture.is_open(x, y) {
                        continue;
                    }
                    for band in 0..l {
                        let v = cube.get(x, y, band);
                        for &(d, w) in &taps {
                            fpa_row[y + band + d] += w * v;
                        }
                    }
                }
            });
        Ok(MeasurementVector::new(out))
    }

    /// `f = H^T g`.
    pub fn adjoint(&self, g: &MeasurementVector) -> Result<HyperCube> {
        self.check_measurements(g)?;
        let (m, n, l) = self.cube_dims();
        let taps = self.taps();
        let gv = g.values();
        let mut out = vec![0.0; self.signal_len()];
        out.par_chunks_mut(m * n)
            .enumerate()
            .for_each(|(band, plane)| {
                for (shot, aperture) in self.shots.iter().enumerate() {
                    for y in 0..n {
                        for x in 0..m {
                            if !aperture.is_open(x, y) {
                                continue;
                            }
                            let base = self.fpa_index(shot, x, y + band);
                            let mut acc = 0.0;
                            for &(d, w) in &taps {
                                acc += w * gv[base + d];
                            }
                            plane[y * m + x] += acc;
                        }
                    }
                }
            });
        Ok(HyperCube::from_raw(m, n, l, out))
    }

    /// Squared Euclidean norm of every column of `H`, arranged as a cube.
    pub fn column_norm_squares(&self) -> HyperCube {
        let (m, n, l) = self.cube_dims();
        let tap_energy: f64 = self.taps().iter().map(|(_, w)| w * w).sum();
        let mut plane = vec![0.0; m * n];
        for aperture in &self.shots {
            for y in 0..n {
                for x in 0..m {
                    plane[y * m + x] += aperture.transmittance(x, y) * tap_energy;
                }
            }
        }
        HyperCube::from_raw(m, n, l, plane.repeat(l))
    }
}

pub fn measurement_count(model: &CassiModel) -> usize {
    model.measurement_count()
}

pub fn forward(model: &CassiModel, cube: &HyperCube) -> Result<MeasurementVector> {
    model.forward(cube)
}

pub fn adjoint(model: &CassiModel, g: &MeasurementVector) -> Result<HyperCube> {
    model.adjoint(g)
}

pub fn column_norm_squares(model: &CassiModel) -> HyperCube {
    model.column_norm_squares()
}

/// Row-major dense matrix, only produced by [`densify`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (row, &s) in self.data.chunks(self.cols).zip(v) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * s;
            }
        }
        out
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

/// Materialize `H` by probing [`CassiModel::forward`] with unit impulses.
/// Column `i` corresponds to cube linear index `i`.
pub fn densify(model: &CassiModel) -> Result<DenseMatrix> {
    let rows = model.measurement_count();
    let cols = model.signal_len();
    if rows.saturating_mul(cols) > DENSIFY_LIMIT {
        return Err(Error::Refused(format!(
            "dense H would be {rows}x{cols}, above the {DENSIFY_LIMIT} entry limit"
        )));
    }
    let (m, n, l) = model.cube_dims();
    let mut data = vec![0.0; rows * cols];
    let mut probe = HyperCube::zeros(m, n, l);
    for c in 0..cols {
        probe.values_mut()[c] = 1.0;
        let column = model.forward(&probe)?;
        probe.values_mut()[c] = 0.0;
        for (r, v) in column.values().iter().enumerate() {
            data[r * cols + c] = *v;
        }
    }
    Ok(DenseMatrix { rows, cols, data })
}
