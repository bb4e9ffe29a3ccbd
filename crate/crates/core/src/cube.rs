//! Spectral cubes, coded apertures and measurement vectors.
//!
//! Cube linearization is band-major: the band index `lambda` is outermost,
//! then the column `y`, then the row `x` innermost, i.e.
//!
//! ```text
//! index(x, y, lambda) = lambda * M * N + y * M + x
//! ```
//!
//! so each spectral band is a contiguous column-major `M x N` image.
//! Aperture masks are stored row-major (`index(x, y) = x * N + y`), which is
//! also their on-disk order.

use crate::error::{Error, Result};
use crate::rng::SeededStream;

#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    m_rows: usize,
    n_cols: usize,
    bands: usize,
    values: Vec<f64>,
}

impl HyperCube {
    /// Validated constructor. Rejects zero dimensions, a length that is not
    /// `M * N * L`, and any non-finite value.
    pub fn new(m_rows: usize, n_cols: usize, bands: usize, values: Vec<f64>) -> Result<Self> {
        let expected = voxel_count(m_rows, n_cols, bands)?;
        if values.len() != expected {
            return Err(Error::Size(format!(
                "cube {m_rows}x{n_cols}x{bands} needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite cube value {} at index {i}",
                values[i]
            )));
        }
        Ok(Self {
            m_rows,
            n_cols,
            bands,
            values,
        })
    }

    pub fn zeros(m_rows: usize, n_cols: usize, bands: usize) -> Self {
        Self {
            m_rows,
            n_cols,
            bands,
            values: vec![0.0; m_rows * n_cols * bands],
        }
    }

    /// Build without the finiteness scan. Only for internal callers that
    /// already guarantee the invariants.
    pub(crate) fn from_raw(m_rows: usize, n_cols: usize, bands: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), m_rows * n_cols * bands);
        Self {
            m_rows,
            n_cols,
            bands,
            values,
        }
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

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.m_rows, self.n_cols, self.bands)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, band: usize) -> usize {
        debug_assert!(x < self.m_rows && y < self.n_cols && band < self.bands);
        (band * self.n_cols + y) * self.m_rows + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, band: usize) -> f64 {
        self.values[self.index(x, y, band)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, band: usize, value: f64) {
        let i = self.index(x, y, band);
        self.values[i] = value;
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

    /// One spectral band as a contiguous column-major slice.
    pub fn band(&self, band: usize) -> &[f64] {
        let plane = self.m_rows * self.n_cols;
        &self.values[band * plane..(band + 1) * plane]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &HyperCube) -> bool {
        self.dims() == other.dims()
    }
}

/// Validated cube constructor, see [`HyperCube::new`].
pub fn make_cube(
    m_rows: usize,
    n_cols: usize,
    bands: usize,
    values: Vec<f64>,
) -> Result<HyperCube> {
    HyperCube::new(m_rows, n_cols, bands, values)
}

fn voxel_count(m_rows: usize, n_cols: usize, bands: usize) -> Result<usize> {
    if m_rows == 0 || n_cols == 0 || bands == 0 {
        return Err(Error::Size(format!(
            "cube dimensions must be positive, got {m_rows}x{n_cols}x{bands}"
        )));
    }
    m_rows
        .checked_mul(n_cols)
        .and_then(|p| p.checked_mul(bands))
        .ok_or_else(|| Error::Size("cube dimensions overflow".into()))
}

/// Binary coded aperture; 1 is transmissive, 0 is opaque.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedAperture {
    m_rows: usize,
    n_cols: usize,
    mask: Vec<u8>,
}

impl CodedAperture {
    pub fn new(m_rows: usize, n_cols: usize, mask: Vec<u8>) -> Result<Self> {
        if m_rows == 0 || n_cols == 0 {
            return Err(Error::Size(format!(
                "aperture dimensions must be positive, got {m_rows}x{n_cols}"
            )));
        }
        if mask.len() != m_rows * n_cols {
            return Err(Error::Size(format!(
                "aperture {m_rows}x{n_cols} needs {} entries, got {}",
                m_rows * n_cols,
                mask.len()
            )));
        }
        if let Some(i) = mask.iter().position(|&b| b > 1) {
            return Err(Error::Validation(format!(
                "aperture entry {} at index {i} is not 0 or 1",
                mask[i]
            )));
        }
        Ok(Self {
            m_rows,
            n_cols,
            mask,
        })
    }

    pub fn filled(m_rows: usize, n_cols: usize, value: bool) -> Self {
        Self {
            m_rows,
            n_cols,
            mask: vec![value as u8; m_rows * n_cols],
        }
    }

    pub fn m_rows(&self) -> usize {
        self.m_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn is_open(&self, x: usize, y: usize) -> bool {
        self.mask[x * self.n_cols + y] == 1
    }

    #[inline]
    pub fn transmittance(&self, x: usize, y: usize) -> f64 {
        self.mask[x * self.n_cols + y] as f64
    }

    /// Row-major mask bytes.
    pub fn mask(&self) -> &[u8] {
        &self.mask
    }

    pub fn open_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b == 1).count()
    }
}

/// Draw an i.i.d. Bernoulli(`open_fraction`) mask. Pixels are visited in
/// row-major order, one uniform draw each (see [`crate::rng`]).
pub fn random_aperture(
    m_rows: usize,
    n_cols: usize,
    open_fraction: f64,
    seed: u64,
) -> Result<CodedAperture> {
    if !(0.0..=1.0).contains(&open_fraction) {
        return Err(Error::Domain(format!(
            "open fraction {open_fraction} outside [0, 1]"
        )));
    }
    if m_rows == 0 || n_cols == 0 {
        return Err(Error::Size(format!(
            "aperture dimensions must be positive, got {m_rows}x{n_cols}"
        )));
    }
    let mut stream = SeededStream::new(seed);
    let mask = (0..m_rows * n_cols)
        .map(|_| stream.bernoulli(open_fraction) as u8)
        .collect();
    Ok(CodedAperture {
        m_rows,
        n_cols,
        mask,
    })
}

pub fn complement(aperture: &CodedAperture) -> CodedAperture {
    CodedAperture {
        m_rows: aperture.m_rows,
        n_cols: aperture.n_cols,
        mask: aperture.mask.iter().map(|&b| 1 - b).collect(),
    }
}

/// Top-left spatial crop to power-of-two dimensions.
pub fn crop_dyadic(cube: &HyperCube, target_m: usize, target_n: usize) -> Result<HyperCube> {
    for (name, target, source) in [
        ("rows", target_m, cube.m_rows),
        ("cols", target_n, cube.n_cols),
    ] {
        if !target.is_power_of_two() {
            return Err(Error::Domain(format!(
                "crop {name} {target} is not a power of two"
            )));
        }
        if target > source {
            return Err(Error::Domain(format!(
                "crop {name} {target} exceeds source size {source}"
            )));
        }
    }
    let mut values = Vec::with_capacity(target_m * target_n * cube.bands);
    for band in 0..cube.bands {
        for y in 0..target_n {
            let start = cube.index(0, y, band);
            values.extend_from_slice(&cube.values[start..start + target_m]);
        }
    }
    Ok(HyperCube::from_raw(target_m, target_n, cube.bands, values))
}

/// Measurement vector `g`, laid out shot-major, then FPA row `x`, then FPA
/// column `j` (see [`crate::operator::CassiModel::fpa_index`]).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    values: Vec<f64>,
}

impl MeasurementVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
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

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

impl From<Vec<f64>> for MeasurementVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton_cube() {
        let c = make_cube(1, 1, 1, vec![3.0]).unwrap();
        assert_eq!(c.get(0, 0, 0), 3.0);
    }

    #[test]
    fn band_major_layout() {
        let values: Vec<f64> = (0..8).map(|v| v as f64).collect();
        let c = make_cube(2, 2, 2, values.clone()).unwrap();
        // lambda * 4 + y * 2 + x
        assert_eq!(c.get(1, 0, 1), values[5]);
        assert_eq!(c.get(0, 1, 0), values[2]);
        assert_eq!(c.band(1), &values[4..8]);
    }

    #[test]
    fn cube_size_error() {
        assert!(matches!(
            make_cube(2, 2, 2, vec![0.0; 7]),
            Err(Error::Size(_))
        ));
        assert!(matches!(make_cube(0, 2, 2, vec![]), Err(Error::Size(_))));
    }

    #[test]
    fn cube_rejects_non_finite() {
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(make_cube(2, 2, 2, v), Err(Error::Validation(_))));
        let mut v = vec![0.0; 8];
        v[0] = f64::INFINITY;
        assert!(matches!(make_cube(2, 2, 2, v), Err(Error::Validation(_))));
    }

    #[test]
    fn degenerate_apertures() {
        let closed = random_aperture(8, 8, 0.0, 3).unwrap();
        assert_eq!(closed.open_count(), 0);
        let open = random_aperture(8, 8, 1.0, 3).unwrap();
        assert_eq!(open.open_count(), 64);
    }

    #[test]
    fn aperture_is_deterministic() {
        let a = random_aperture(256, 256, 0.5, 7).unwrap();
        let b = random_aperture(256, 256, 0.5, 7).unwrap();
        assert_eq!(a, b);
        let c = random_aperture(256, 256, 0.5, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn aperture_fraction_domain() {
        assert!(matches!(
            random_aperture(4, 4, -0.1, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            random_aperture(4, 4, 1.5, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            random_aperture(4, 4, f64::NAN, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn open_count_is_near_expectation() {
        for (p, seed) in [(0.5, 1u64), (0.3, 2), (0.9, 3)] {
            let a = random_aperture(128, 128, p, seed).unwrap();
            let total = (128 * 128) as f64;
            let spread = 4.0 * (total * p * (1.0 - p)).sqrt();
            let diff = (a.open_count() as f64 - p * total).abs();
            assert!(diff <= spread, "p={p}: off by {diff}, allowed {spread}");
        }
    }

    #[test]
    fn complement_example() {
        let a = CodedAperture::new(2, 2, vec![1, 0, 1, 0]).unwrap();
        assert_eq!(complement(&a).mask(), &[0, 1, 0, 1]);
    }

    #[test]
    fn aperture_rejects_non_binary() {
        assert!(matches!(
            CodedAperture::new(1, 2, vec![0, 2]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn crop_examples() {
        let values: Vec<f64> = (0..700 * 700 * 3).map(|v| v as f64).collect();
        let big = make_cube(700, 700, 3, values).unwrap();
        let c = crop_dyadic(&big, 512, 512).unwrap();
        assert_eq!(c.dims(), (512, 512, 3));
        for &(x, y, l) in &[(0, 0, 0), (511, 511, 2), (17, 400, 1), (300, 3, 0)] {
            assert_eq!(c.get(x, y, l), big.get(x, y, l));
        }

        let small = make_cube(8, 8, 2, (0..128).map(|v| v as f64).collect()).unwrap();
        assert_eq!(crop_dyadic(&small, 8, 8).unwrap(), small);
        assert!(matches!(crop_dyadic(&small, 6, 8), Err(Error::Domain(_))));
        assert!(matches!(crop_dyadic(&small, 16, 8), Err(Error::Domain(_))));
        assert!(matches!(crop_dyadic(&big, 300, 300), Err(Error::Domain(_))));
    }

    #[test]
    fn crop_31_bands() {
        let big = HyperCube::zeros(700, 700, 31);
        assert_eq!(crop_dyadic(&big, 512, 512).unwrap().dims(), (512, 512, 31));
    }

    proptest! {
        #[test]
        fn complement_involution_and_partition(bits in proptest::collection::vec(0u8..=1, 1..64)) {
            let n = bits.len();
            let a = CodedAperture::new(1, n, bits).unwrap();
            let c = complement(&a);
            prop_assert_eq!(&complement(&c), &a);
            for (x, y) in a.mask().iter().zip(c.mask()) {
                prop_assert_eq!(x + y, 1);
            }
        }

        #[test]
        fn linearization_round_trip(m in 1usize..6, n in 1usize..6, l in 1usize..5) {
            let mut c = HyperCube::zeros(m, n, l);
            for b in 0..l {
                for y in 0..n {
                    for x in 0..m {
                        c.set(x, y, b, (x + 10 * y + 100 * b) as f64);
                    }
                }
            }
            for b in 0..l {
                for y in 0..n {
                    for x in 0..m {
                        prop_assert_eq!(c.values()[c.index(x, y, b)], (x + 10 * y + 100 * b) as f64);
                    }
                }
            }
        }
    }
}
