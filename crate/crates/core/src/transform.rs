//! Orthonormal sparsifying transform: a 2D wavelet transform of every
//! spectral band followed by an orthonormal DCT-II along the spectral axis.
//!
//! Coefficients use the cube's band-major layout. Within a plane the
//! wavelet coefficients follow the Mallat arrangement; the plane index is the
//! spectral DCT frequency `l`.
//!
//! Subband naming: at level `j` (1 = finest) with half sizes
//! `mj = M >> j`, `nj = N >> j`, a coefficient at `(x, y)` outside the
//! level-`j` approximation block belongs to
//!
//! * `LH_j` when `x < mj` and `y >= nj` (high-pass along `y`),
//! * `HL_j` when `x >= mj` and `y < nj` (high-pass along `x`),
//! * `HH_j` when both are high-pass.
//!
//! Statistics groups are numbered `l * (3J + 1) + s` with `s = 0` for
//! `LL_J` and `s = 1 + 3 (j - 1) + o` for `o` in `LH, HL, HH` order.

use rayon::prelude::*;

use crate::cube::HyperCube;
use crate::error::{Error, Result};
use crate::wavelet::{dwt2_forward, dwt2_inverse, Filters, WaveletFamily};

pub const DEFAULT_LEVELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransformSpec {
    pub wavelet: WaveletFamily,
    pub levels: usize,
    pub m_rows: usize,
    pub n_cols: usize,
    pub bands: usize,
}

impl TransformSpec {
    pub fn new(
        wavelet: WaveletFamily,
        levels: usize,
        m_rows: usize,
        n_cols: usize,
        bands: usize,
    ) -> Result<Self> {
        let spec = Self {
            wavelet,
            levels,
            m_rows,
            n_cols,
            bands,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Haar with three levels.
    pub fn default_for(m_rows: usize, n_cols: usize, bands: usize) -> Result<Self> {
        Self::new(WaveletFamily::Haar, DEFAULT_LEVELS, m_rows, n_cols, bands)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Domain("wavelet levels must be positive".into()));
        }
        if self.bands == 0 {
            return Err(Error::Domain("band count must be positive".into()));
        }
        let step = 1usize
            .checked_shl(self.levels as u32)
            .filter(|s| *s != 0)
            .ok_or_else(|| Error::Domain(format!("{} wavelet levels is too many", self.levels)))?;
        for (name, dim) in [("rows", self.m_rows), ("cols", self.n_cols)] {
            if dim == 0 || dim % step != 0 {
                return Err(Error::Domain(format!(
                    "{name} = {dim} is not divisible by 2^{} = {step}",
                    self.levels
                )));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.m_rows, self.n_cols, self.bands)
    }

    pub fn len(&self) -> usize {
        self.m_rows * self.n_cols * self.bands
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subbands_per_plane(&self) -> usize {
        3 * self.levels + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientCube {
    spec: TransformSpec,
    values: Vec<f64>,
}

impl CoefficientCube {
    pub fn new(spec: TransformSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::Size(format!(
                "coefficient cube needs {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &TransformSpec {
        &self.spec
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

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Orthonormal DCT-II matrix, row `l` is the `l`-th basis vector.
fn dct_matrix(len: usize) -> Vec<f64> {
    let mut c = vec![0.0; len * len];
    let lf = len as f64;
    for l in 0..len {
        let scale = if l == 0 {
            (1.0 / lf).sqrt()
        } else {
            (2.0 / lf).sqrt()
        };
        for k in 0..len {
            c[l * len + k] =
                scale * (std::f64::consts::PI * (2 * k + 1) as f64 * l as f64 / (2.0 * lf)).cos();
        }
    }
    c
}

/// Mix spectral planes: `out[l] = sum_k mix(l, k) * input[k]`.
fn mix_planes(
    input: &[f64],
    plane: usize,
    bands: usize,
    mix: impl Fn(usize, usize) -> f64 + Sync,
) -> Vec<f64> {
    let mut out = vec![0.0; input.len()];
    out.par_chunks_mut(plane).enumerate().for_each(|(l, dst)| {
        for k in 0..bands {
            let w = mix(l, k);
            let src = &input[k * plane..(k + 1) * plane];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    });
    out
}

pub fn analyze(cube: &HyperCube, spec: &TransformSpec) -> Result<CoefficientCube> {
    spec.validate()?;
    if cube.dims() != spec.dims() {
        return Err(Error::Size(format!(
            "cube is {:?}, transform expects {:?}",
            cube.dims(),
            spec.dims()
        )));
    }
    let (m, n, l) = spec.dims();
    let plane = m * n;
    let filters = Filters::new(spec.wavelet);
    let mut spatial = cube.values().to_vec();
    spatial
        .par_chunks_mut(plane)
        .for_each(|band| dwt2_forward(band, m, n, spec.levels, &filters));
    let dct = dct_matrix(l);
    let values = mix_planes(&spatial, plane, l, |row, k| dct[row * l + k]);
    Ok(CoefficientCube {
        spec: *spec,
        values,
    })
}

pub fn synthesize(coeffs: &CoefficientCube) -> HyperCube {
    let spec = coeffs.spec;
    let (m, n, l) = spec.dims();
    let plane = m * n;
    let dct = dct_matrix(l);
    let mut values = mix_planes(&coeffs.values, plane, l, |k, row| dct[row * l + k]);
    let filters = Filters::new(spec.wavelet);
    values
        .par_chunks_mut(plane)
        .for_each(|band| dwt2_inverse(band, m, n, spec.levels, &filters));
    HyperCube::from_raw(m, n, l, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subband {
    Approximation,
    /// High-pass along `y` at the given level.
    LH(usize),
    /// High-pass along `x` at the given level.
    HL(usize),
    HH(usize),
}

/// Partition of coefficient indices into `(spectral index, subband)` groups.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandLayout {
    spec: TransformSpec,
    group_of: Vec<u32>,
    sizes: Vec<usize>,
}

impl SubbandLayout {
    pub fn group_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn group_of(&self, index: usize) -> usize {
        self.group_of[index] as usize
    }

    pub fn assignments(&self) -> &[u32] {
        &self.group_of
    }

    pub fn group_size(&self, group: usize) -> usize {
        self.sizes[group]
    }

    pub fn spec(&self) -> &TransformSpec {
        &self.spec
    }

    /// Explicit index lists, ascending within each group.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> =
            self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, &g) in self.group_of.iter().enumerate() {
            groups[g as usize].push(i);
        }
        groups
    }

    /// `(spectral index, subband)` label of a group.
    pub fn label(&self, group: usize) -> (usize, Subband) {
        let per_plane = self.spec.subbands_per_plane();
        let (l, s) = (group / per_plane, group % per_plane);
        let subband = if s == 0 {
            Subband::Approximation
        } else {
            let level = (s - 1) / 3 + 1;
            match (s - 1) % 3 {
                0 => Subband::LH(level),
                1 => Subband::HL(level),
                _ => Subband::HH(level),
            }
        };
        (l, subband)
    }
}

fn subband_slot(x: usize, y: usize, m: usize, n: usize, levels: usize) -> usize {
    for j in 1..=levels {
        let (mj, nj) = (m >> j, n >> j);
        match (x >= mj, y >= nj) {
            (false, false) => continue,
            (false, true) => return 1 + 3 * (j - 1),
            (true, false) => return 2 + 3 * (j - 1),
            (true, true) => return 3 + 3 * (j - 1),
        }
    }
    0
}

pub fn subband_layout(spec: &TransformSpec) -> Result<SubbandLayout> {
    spec.validate()?;
    let (m, n, l) = spec.dims();
    let per_plane = spec.subbands_per_plane();
    let mut plane_slots = vec![0u32; m * n];
    for y in 0..n {
        for x in 0..m {
            plane_slots[y * m + x] = subband_slot(x, y, m, n, spec.levels) as u32;
        }
    }
    let mut plane_sizes = vec![0usize; per_plane];
    for &s in &plane_slots {
        plane_sizes[s as usize] += 1;
    }
    let mut group_of = Vec::with_capacity(spec.len());
    for band in 0..l {
        let offset = (band * per_plane) as u32;
        group_of.extend(plane_slots.iter().map(|s| s + offset));
    }
    Ok(SubbandLayout {
        spec: *spec,
        group_of,
        sizes: plane_sizes.repeat(l),
    })
}
