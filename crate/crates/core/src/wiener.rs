//! Adaptive Wiener shrinkage of transform coefficients with statistics pooled
//! per subband group, and the averaged derivative used as the Onsager term.
//!
//! For a coefficient in a group with empirical mean `mu` and variance `nu2`,
//! the estimate is `gain * (theta - mu) + mu` with
//! `gain = max(0, nu2 - sigma2) / nu2`; a group with `nu2 = 0` has gain 0.
//! The derivative with respect to `theta` is taken with `mu`, `nu2` frozen,
//! so it is just `gain`.

use crate::cube::HyperCube;
use crate::error::{Error, Result};
use crate::transform::{
    analyze, subband_layout, synthesize, CoefficientCube, SubbandLayout, TransformSpec,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandStats {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl SubbandStats {
    pub fn group_count(&self) -> usize {
        self.means.len()
    }

    /// Per-group Wiener gains for noise variance `sigma2`.
    pub fn gains(&self, sigma2: f64) -> Vec<f64> {
        self.variances
            .iter()
            .map(|&v| wiener_gain(v, sigma2))
            .collect()
    }
}

#[inline]
pub fn wiener_gain(variance: f64, sigma2: f64) -> f64 {
    if variance > 0.0 {
        (variance - sigma2).max(0.0) / variance
    } else {
        0.0
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2.is_nan() || sigma2 < 0.0 {
        return Err(Error::Domain(format!(
            "noise variance must be nonnegative, got {sigma2}"
        )));
    }
    Ok(())
}

fn check_layout(coeffs: &CoefficientCube, layout: &SubbandLayout) -> Result<()> {
    if coeffs.spec() != layout.spec() {
        return Err(Error::Size(
            "coefficient cube and subband layout come from different transforms".into(),
        ));
    }
    Ok(())
}

/// Per-group sample mean and biased (divide-by-count) variance.
pub fn subband_stats(coeffs: &CoefficientCube, layout: &SubbandLayout) -> Result<SubbandStats> {
    check_layout(coeffs, layout)?;
    let groups = layout.group_count();
    let assignments = layout.assignments();
    let values = coeffs.values();

    let mut sums = vec![0.0; groups];
    for (&g, &v) in assignments.iter().zip(values) {
        sums[g as usize] += v;
    }
    let means: Vec<f64> = sums
        .iter()
        .enumerate()
        .map(|(g, s)| s / layout.group_size(g) as f64)
        .collect();

    let mut squares = vec![0.0; groups];
    for (&g, &v) in assignments.iter().zip(values) {
        let d = v - means[g as usize];
        squares[g as usize] += d * d;
    }
    let variances = squares
        .iter()
        .enumerate()
        .map(|(g, s)| s / layout.group_size(g) as f64)
        .collect();
    Ok(SubbandStats { means, variances })
}

pub fn wiener_shrink(
    coeffs: &CoefficientCube,
    stats: &SubbandStats,
    layout: &SubbandLayout,
    sigma2: f64,
) -> Result<CoefficientCube> {
    check_sigma2(sigma2)?;
    check_layout(coeffs, layout)?;
    if stats.group_count() != layout.group_count() {
        return Err(Error::Size(format!(
            "{} group statistics for a layout with {} groups",
            stats.group_count(),
            layout.group_count()
        )));
    }
    let gains = stats.gains(sigma2);
    let values = coeffs
        .values()
        .iter()
        .zip(layout.assignments())
        .map(|(&theta, &g)| {
            let (gain, mean) = (gains[g as usize], stats.means[g as usize]);
            if gain == 1.0 {
                theta
            } else {
                gain * (theta - mean) + mean
            }
        })
        .collect();
    CoefficientCube::new(*coeffs.spec(), values)
}

/// Average of the per-coefficient gains over all `n` coefficients.
pub fn onsager_average(stats: &SubbandStats, sigma2: f64, layout: &SubbandLayout) -> Result<f64> {
    check_sigma2(sigma2)?;
    if stats.group_count() != layout.group_count() {
        return Err(Error::Size(format!(
            "{} group statistics for a layout with {} groups",
            stats.group_count(),
            layout.group_count()
        )));
    }
    let total: f64 = stats
        .variances
        .iter()
        .enumerate()
        .map(|(g, &v)| wiener_gain(v, sigma2) * layout.group_size(g) as f64)
        .sum();
    Ok(total / layout.spec().len() as f64)
}

/// Denoise `q` in the transform domain; returns the estimate and the
/// matching Onsager average.
pub fn denoise_cube(q: &HyperCube, sigma2: f64, spec: &TransformSpec) -> Result<(HyperCube, f64)> {
    WienerDenoiser::new(*spec)?.apply(q, sigma2)
}

/// A denoiser `eta_t` for the AMP loop. Returns the estimate together with
/// the average derivative `<eta_t'>`.
pub trait Denoiser {
    fn denoise(&mut self, q: &HyperCube, sigma2: f64) -> Result<(HyperCube, f64)>;
}

/// Wiener denoiser with the subband layout computed once.
#[derive(Debug, Clone)]
pub struct WienerDenoiser {
    spec: TransformSpec,
    layout: SubbandLayout,
}

impl WienerDenoiser {
    pub fn new(spec: TransformSpec) -> Result<Self> {
        let layout = subband_layout(&spec)?;
        Ok(Self { spec, layout })
    }

    pub fn spec(&self) -> &TransformSpec {
        &self.spec
    }

    pub fn layout(&self) -> &SubbandLayout {
        &self.layout
    }

    pub fn apply(&self, q: &HyperCube, sigma2: f64) -> Result<(HyperCube, f64)> {
        check_sigma2(sigma2)?;
        let coeffs = analyze(q, &self.spec)?;
        let stats = subband_stats(&coeffs, &self.layout)?;
        let shrunk = wiener_shrink(&coeffs, &stats, &self.layout, sigma2)?;
        let onsager = onsager_average(&stats, sigma2, &self.layout)?;
        Ok((synthesize(&shrunk), onsager))
    }
}

impl Denoiser for WienerDenoiser {
    fn denoise(&mut self, q: &HyperCube, sigma2: f64) -> Result<(HyperCube, f64)> {
        self.apply(q, sigma2)
    }
}

/// Pass-through denoiser with unit derivative.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityDenoiser;

impl Denoiser for IdentityDenoiser {
    fn denoise(&mut self, q: &HyperCube, _sigma2: f64) -> Result<(HyperCube, f64)> {
        Ok((q.clone(), 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededStream;
    use crate::wavelet::WaveletFamily;
    use proptest::prelude::*;

    /// 2x2 planes with one Haar level: every group holds one coefficient.
    /// Linear index 1 is HL (group 2) and index 2 is LH (group 1).
    fn singleton_groups(values: Vec<f64>) -> (CoefficientCube, SubbandLayout) {
        let spec = TransformSpec::new(WaveletFamily::Haar, 1, 2, 2, values.len() / 4).unwrap();
        let layout = subband_layout(&spec).unwrap();
        (CoefficientCube::new(spec, values).unwrap(), layout)
    }

    fn stats_for(means: Vec<f64>, variances: Vec<f64>) -> SubbandStats {
        SubbandStats { means, variances }
    }

    #[test]
    fn stats_hand_cases() {
        // 4x4 one level, one band: LL, LH, HL, HH groups of 4 each.
        let spec = TransformSpec::new(WaveletFamily::Haar, 1, 4, 4, 1).unwrap();
        let layout = subband_layout(&spec).unwrap();
        let mut values = vec![0.0; 16];
        for (i, v) in values.iter_mut().enumerate() {
            *v = match layout.group_of(i) {
                0 => 1.0,
                1 => 0.0,
                _ => 5.0,
            };
        }
        // Group 1 gets [0, 2, 0, 2].
        let g1 = layout.groups()[1].clone();
        values[g1[1]] = 2.0;
        values[g1[3]] = 2.0;
        let coeffs = CoefficientCube::new(spec, values).unwrap();
        let stats = subband_stats(&coeffs, &layout).unwrap();
        assert_eq!(stats.means[0], 1.0);
        assert_eq!(stats.variances[0], 0.0);
        assert_eq!(stats.means[1], 1.0);
        assert_eq!(stats.variances[1], 1.0);
    }

    #[test]
    fn stats_of_normal_draws() {
        let spec = TransformSpec::new(WaveletFamily::Haar, 1, 200, 200, 1).unwrap();
        let layout = subband_layout(&spec).unwrap();
        let mut rng = SeededStream::new(42);
        let values: Vec<f64> = (0..spec.len()).map(|_| rng.standard_normal()).collect();
        let stats = subband_stats(&CoefficientCube::new(spec, values).unwrap(), &layout).unwrap();
        // each of the four groups holds 10^4 draws
        for g in 0..4 {
            assert_eq!(layout.group_size(g), 10_000);
            assert!(
                (0.9..=1.1).contains(&stats.variances[g]),
                "{}",
                stats.variances[g]
            );
        }
    }

    #[test]
    fn shrink_half_gain() {
        let (coeffs, layout) = singleton_groups(vec![4.0, 0.0, 0.0, 0.0]);
        let stats = stats_for(vec![0.0; 4], vec![2.0; 4]);
        let out = wiener_shrink(&coeffs, &stats, &layout, 1.0).unwrap();
        assert_eq!(out.values()[0], 2.0);
    }

    #[test]
    fn shrink_to_mean_when_noise_dominates() {
        let (coeffs, layout) = singleton_groups(vec![4.0, -3.0, 7.0, 1.0]);
        let stats = stats_for(vec![0.5, 1.5, -2.0, 3.0], vec![1.0, 0.5, 2.0, 0.0]);
        let out = wiener_shrink(&coeffs, &stats, &layout, 2.0).unwrap();
        assert_eq!(out.values(), &[0.5, -2.0, 1.5, 3.0]);
    }

    #[test]
    fn shrink_zero_noise_is_identity() {
        let (coeffs, layout) = singleton_groups(vec![4.0, -3.0, 7.0, 1.0, 0.1, 0.2, 0.3, 0.4]);
        let stats = subband_stats(&coeffs, &layout).unwrap();
        let out = wiener_shrink(&coeffs, &stats, &layout, 0.0).unwrap();
        assert_eq!(out.values(), coeffs.values());
    }

    #[test]
    fn negative_sigma_rejected() {
        let (coeffs, layout) = singleton_groups(vec![0.0; 4]);
        let stats = subband_stats(&coeffs, &layout).unwrap();
        assert!(matches!(
            wiener_shrink(&coeffs, &stats, &layout, -1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            onsager_average(&stats, -1.0, &layout),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            denoise_cube(&HyperCube::zeros(2, 2, 1), -0.5, coeffs.spec()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn onsager_examples() {
        let spec = TransformSpec::new(WaveletFamily::Haar, 1, 4, 4, 2).unwrap();
        let layout = subband_layout(&spec).unwrap();
        let all = |v: f64| stats_for(vec![0.0; 8], vec![v; 8]);
        assert_eq!(onsager_average(&all(0.5), 1.0, &layout).unwrap(), 0.0);
        assert_eq!(onsager_average(&all(1.0), 1.0, &layout).unwrap(), 0.0);
        assert_eq!(onsager_average(&all(2.0), 1.0, &layout).unwrap(), 0.5);
        assert_eq!(onsager_average(&all(3.0), 0.0, &layout).unwrap(), 1.0);
        let mixed = stats_for(vec![0.0; 8], vec![0.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0]);
        // group 0 has 4 of 32 coefficients and contributes nothing
        assert_eq!(onsager_average(&mixed, 0.0, &layout).unwrap(), 28.0 / 32.0);
    }

    #[test]
    fn denoise_identity_at_zero_noise() {
        let spec = TransformSpec::new(WaveletFamily::Daubechies4, 2, 8, 8, 3).unwrap();
        let mut rng = SeededStream::new(9);
        let q = HyperCube::new(8, 8, 3, (0..192).map(|_| rng.standard_normal()).collect()).unwrap();
        let (out, onsager) = denoise_cube(&q, 0.0, &spec).unwrap();
        assert_eq!(onsager, 1.0);
        for (a, b) in out.values().iter().zip(q.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn denoise_constant_fixed_point() {
        let spec = TransformSpec::new(WaveletFamily::Haar, 3, 16, 16, 4).unwrap();
        let q = HyperCube::new(16, 16, 4, vec![0.7; 1024]).unwrap();
        let (out, _) = denoise_cube(&q, 0.3, &spec).unwrap();
        for v in out.values() {
            assert!((v - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_denoiser_passes_through() {
        let q = HyperCube::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (out, d) = IdentityDenoiser.denoise(&q, 5.0).unwrap();
        assert_eq!(out, q);
        assert_eq!(d, 1.0);
    }

    proptest! {
        #[test]
        fn gain_in_unit_interval(v in 0.0f64..1e6, s in 0.0f64..1e6) {
            let g = wiener_gain(v, s);
            prop_assert!((0.0..=1.0).contains(&g));
        }

        #[test]
        fn shrink_preserves_group_means(seed in 0u64..1000, sigma2 in 0.0f64..3.0) {
            let spec = TransformSpec::new(WaveletFamily::Haar, 2, 8, 8, 2).unwrap();
            let layout = subband_layout(&spec).unwrap();
            let mut rng = SeededStream::new(seed);
            let values: Vec<f64> = (0..spec.len()).map(|_| 2.0 * rng.standard_normal()).collect();
            let coeffs = CoefficientCube::new(spec, values).unwrap();
            let stats = subband_stats(&coeffs, &layout).unwrap();
            let out = wiener_shrink(&coeffs, &stats, &layout, sigma2).unwrap();
            let out_stats = subband_stats(&out, &layout).unwrap();
            for g in 0..layout.group_count() {
                prop_assert!((out_stats.means[g] - stats.means[g]).abs() < 1e-12);
            }
        }

        #[test]
        fn shrink_monotone_in_sigma(seed in 0u64..1000, s1 in 0.0f64..3.0, ds in 0.0f64..3.0) {
            let spec = TransformSpec::new(WaveletFamily::Haar, 1, 4, 4, 2).unwrap();
            let layout = subband_layout(&spec).unwrap();
            let mut rng = SeededStream::new(seed);
            let values: Vec<f64> = (0..spec.len()).map(|_| 1.5 * rng.standard_normal()).collect();
            let coeffs = CoefficientCube::new(spec, values).unwrap();
            let stats = subband_stats(&coeffs, &layout).unwrap();
            let lo = wiener_shrink(&coeffs, &stats, &layout, s1).unwrap();
            let hi = wiener_shrink(&coeffs, &stats, &layout, s1 + ds).unwrap();
            for (i, &g) in layout.assignments().iter().enumerate() {
                let mu = stats.means[g as usize];
                prop_assert!((hi.values()[i] - mu).abs() <= (lo.values()[i] - mu).abs() + 1e-12);
            }
        }
    }
}
