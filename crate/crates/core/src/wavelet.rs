//! Periodic orthonormal 1D/2D discrete wavelet transforms.

use std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveletFamily {
    Haar,
    Daubechies4,
}

impl WaveletFamily {
    /// Orthonormal low-pass analysis filter.
    pub fn lowpass(self) -> Vec<f64> {
        match self {
            WaveletFamily::Haar => vec![1.0 / SQRT_2, 1.0 / SQRT_2],
            WaveletFamily::Daubechies4 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * SQRT_2;
                vec![
                    (1.0 + s3) / d,
                    (3.0 + s3) / d,
                    (3.0 - s3) / d,
                    (1.0 - s3) / d,
                ]
            }
        }
    }

    /// Quadrature mirror high-pass filter, `g[i] = (-1)^i h[len - 1 - i]`.
    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let len = h.len();
        (0..len)
            .map(|i| {
                if i % 2 == 0 {
                    h[len - 1 - i]
                } else {
                    -h[len - 1 - i]
                }
            })
            .collect()
    }
}

impl std::str::FromStr for WaveletFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(WaveletFamily::Haar),
            "db4" | "d4" | "daubechies4" => Ok(WaveletFamily::Daubechies4),
            other => Err(format!("unknown wavelet {other:?} (expected haar or db4)")),
        }
    }
}

pub(crate) struct Filters {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Filters {
    pub(crate) fn new(family: WaveletFamily) -> Self {
        Self {
            lo: family.lowpass(),
            hi: family.highpass(),
        }
    }

    /// One analysis level on `input` (even length), approximation first.
    fn analyze(&self, input: &[f64], out: &mut [f64]) {
        let n = input.len();
        let half = n / 2;
        for k in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for (i, (lo, hi)) in self.lo.iter().zip(&self.hi).enumerate() {
                let v = input[(2 * k + i) % n];
                a += lo * v;
                d += hi * v;
            }
            out[k] = a;
            out[half + k] = d;
        }
    }

    fn synthesize(&self, input: &[f64], out: &mut [f64]) {
        let n = input.len();
        let half = n / 2;
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..half {
            let (a, d) = (input[k], input[half + k]);
            for (i, (lo, hi)) in self.lo.iter().zip(&self.hi).enumerate() {
                out[(2 * k + i) % n] += lo * a + hi * d;
            }
        }
    }
}

/// In-place multilevel 2D DWT of a column-major `rows x cols` plane.
///
/// After level `j` the approximation occupies the top-left
/// `(rows >> j) x (cols >> j)` block (Mallat layout).
pub(crate) fn dwt2_forward(
    plane: &mut [f64],
    rows: usize,
    cols: usize,
    levels: usize,
    f: &Filters,
) {
    let mut lane = Vec::with_capacity(rows.max(cols));
    let mut out = vec![0.0; rows.max(cols)];
    for j in 0..levels {
        let (mr, nr) = (rows >> j, cols >> j);
        for y in 0..nr {
            let col = &mut plane[y * rows..y * rows + mr];
            f.analyze(col, &mut out[..mr]);
            col.copy_from_slice(&out[..mr]);
        }
        for x in 0..mr {
            lane.clear();
            lane.extend((0..nr).map(|y| plane[y * rows + x]));
            f.analyze(&lane, &mut out[..nr]);
            for y in 0..nr {
                plane[y * rows + x] = out[y];
            }
        }
    }
}

pub(crate) fn dwt2_inverse(
    plane: &mut [f64],
    rows: usize,
    cols: usize,
    levels: usize,
    f: &Filters,
) {
    let mut lane = Vec::with_capacity(rows.max(cols));
    let mut out = vec![0.0; rows.max(cols)];
    for j in (0..levels).rev() {
        let (mr, nr) = (rows >> j, cols >> j);
        for x in 0..mr {
            lane.clear();
            lane.extend((0..nr).map(|y| plane[y * rows + x]));
            f.synthesize(&lane, &mut out[..nr]);
            for y in 0..nr {
                plane[y * rows + x] = out[y];
            }
        }
        for y in 0..nr {
            let col = &mut plane[y * rows..y * rows + mr];
            f.synthesize(col, &mut out[..mr]);
            col.copy_from_slice(&out[..mr]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_are_orthonormal() {
        for family in [WaveletFamily::Haar, WaveletFamily::Daubechies4] {
            let h = family.lowpass();
            let g = family.highpass();
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            assert!((dot(&h, &h) - 1.0).abs() < 1e-15);
            assert!((dot(&g, &g) - 1.0).abs() < 1e-15);
            assert!(dot(&h, &g).abs() < 1e-15);
            assert!((h.iter().sum::<f64>() - SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn haar_single_level() {
        let f = Filters::new(WaveletFamily::Haar);
        let mut out = [0.0; 4];
        f.analyze(&[1.0, 3.0, 2.0, 2.0], &mut out);
        let s = 1.0 / SQRT_2;
        let expected = [4.0 * s, 4.0 * s, -2.0 * s, 0.0];
        for (a, b) in out.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn round_trip_1d() {
        for family in [WaveletFamily::Haar, WaveletFamily::Daubechies4] {
            let f = Filters::new(family);
            for n in [2usize, 4, 8, 16] {
                let x: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 4.5).collect();
                let mut c = vec![0.0; n];
                let mut back = vec![0.0; n];
                f.analyze(&x, &mut c);
                f.synthesize(&c, &mut back);
                for (a, b) in x.iter().zip(&back) {
                    assert!((a - b).abs() < 1e-12, "{family:?} n={n}");
                }
            }
        }
    }

    #[test]
    fn parse_family() {
        assert_eq!(
            "haar".parse::<WaveletFamily>().unwrap(),
            WaveletFamily::Haar
        );
        assert_eq!(
            "DB4".parse::<WaveletFamily>().unwrap(),
            WaveletFamily::Daubechies4
        );
        assert!("sym8".parse::<WaveletFamily>().is_err());
    }
}
