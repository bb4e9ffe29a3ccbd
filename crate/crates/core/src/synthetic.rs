//! Synthetic cubes that are exactly sparse in the wavelet x DCT basis.

use crate::cube::HyperCube;
use crate::error::{Error, Result};
use crate::rng::SeededStream;
use crate::transform::{synthesize, CoefficientCube, TransformSpec};

/// Parameters for [`sparse_cube`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseCubeParams {
    /// Number of nonzero coefficients besides the DC term.
    pub nonzeros: usize,
    /// Mean voxel value, carried entirely by the DC coefficient.
    pub mean: f64,
    /// Target RMS voxel deviation from the mean.
    pub contrast: f64,
}

impl Default for SparseCubeParams {
    fn default() -> Self {
        Self {
            nonzeros: 200,
            mean: 1.0,
            contrast: 0.3,
        }
    }
}

/// Constant cube of value `mean` plus `nonzeros` Gaussian coefficients at
/// distinct uniformly drawn positions outside the spectral-DC approximation
/// block. Returns the cube and the indices of the placed coefficients.
pub fn sparse_cube(
    spec: &TransformSpec,
    params: SparseCubeParams,
    seed: u64,
) -> Result<(HyperCube, Vec<usize>)> {
    spec.validate()?;
    let n = spec.len();
    if params.nonzeros >= n {
        return Err(Error::Domain(format!(
            "{} nonzeros do not fit in {n} coefficients",
            params.nonzeros
        )));
    }
    let mut rng = SeededStream::new(seed);
    let mut values = vec![0.0; n];
    // A constant cube has equal coefficients on the spectral-DC LL_J block.
    let (lm, ln) = (spec.m_rows >> spec.levels, spec.n_cols >> spec.levels);
    let dc_value = params.mean * (n as f64 / (lm * ln) as f64).sqrt();
    let mut reserved = vec![false; n];
    for y in 0..ln {
        for x in 0..lm {
            values[y * spec.m_rows + x] = dc_value;
            reserved[y * spec.m_rows + x] = true;
        }
    }
    if params.nonzeros + lm * ln > n {
        return Err(Error::Domain(format!(
            "{} nonzeros do not fit in {n} coefficients",
            params.nonzeros
        )));
    }
    let amplitude = if params.nonzeros > 0 {
        params.contrast * (n as f64 / params.nonzeros as f64).sqrt()
    } else {
        0.0
    };
    let mut placed = Vec::with_capacity(params.nonzeros);
    while placed.len() < params.nonzeros {
        let i = rng.below(n as u64) as usize;
        if reserved[i] {
            continue;
        }
        reserved[i] = true;
        let mut v = 0.0;
        while v == 0.0 {
            v = amplitude * rng.standard_normal();
        }
        values[i] = v;
        placed.push(i);
    }
    let coeffs = CoefficientCube::new(*spec, values)?;
    Ok((synthesize(&coeffs), placed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::analyze;

    #[test]
    fn sparse_cube_is_sparse() {
        let spec = TransformSpec::default_for(16, 16, 4).unwrap();
        let (cube, placed) = sparse_cube(
            &spec,
            SparseCubeParams {
                nonzeros: 20,
                ..Default::default()
            },
            3,
        )
        .unwrap();
        assert_eq!(placed.len(), 20);
        let coeffs = analyze(&cube, &spec).unwrap();
        let big = coeffs.values().iter().filter(|v| v.abs() > 1e-9).count();
        assert_eq!(big, 20 + 4);
        let mean = cube.values().iter().sum::<f64>() / cube.len() as f64;
        assert!((mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let spec = TransformSpec::default_for(16, 16, 4).unwrap();
        let a = sparse_cube(&spec, SparseCubeParams::default(), 9).unwrap();
        let b = sparse_cube(&spec, SparseCubeParams::default(), 9).unwrap();
        assert_eq!(a, b);
    }
}
