//! PSNR metrics, spectral signatures and SNR-calibrated measurement noise.
//!
//! PSNR is `10 log10(max(ref^2) / MSE)` with MSE the *mean* squared error
//! over the compared voxels. Per-band PSNR uses the peak of that band.
//! SNR follows the amplitude convention `10 log10(mean(g) / sigma)`.

use std::fmt;

use crate::cube::{HyperCube, MeasurementVector};
use crate::error::{Error, Result};
use crate::rng::SeededStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    /// The estimate matches the reference exactly.
    Infinite,
}

impl Psnr {
    pub fn db(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Psnr::Infinite)
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.4}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

fn psnr_of(reference: &[f64], estimate: &[f64]) -> Result<Psnr> {
    let peak = reference.iter().fold(0.0f64, |acc, v| acc.max(v * v));
    if peak == 0.0 {
        return Err(Error::Domain("PSNR reference is identically zero".into()));
    }
    let mse = mean_squared_error(reference, estimate);
    if mse == 0.0 {
        return Ok(Psnr::Infinite);
    }
    Ok(Psnr::Finite(10.0 * (peak / mse).log10()))
}

fn mean_squared_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

fn check_shapes(reference: &HyperCube, estimate: &HyperCube) -> Result<()> {
    if !reference.same_shape(estimate) {
        return Err(Error::Size(format!(
            "reference is {:?}, estimate is {:?}",
            reference.dims(),
            estimate.dims()
        )));
    }
    Ok(())
}

pub fn mse(reference: &HyperCube, estimate: &HyperCube) -> Result<f64> {
    check_shapes(reference, estimate)?;
    Ok(mean_squared_error(reference.values(), estimate.values()))
}

/// Whole-cube PSNR.
pub fn psnr(reference: &HyperCube, estimate: &HyperCube) -> Result<Psnr> {
    check_shapes(reference, estimate)?;
    psnr_of(reference.values(), estimate.values())
}

/// PSNR of every spectral band, each with its own peak.
pub fn band_psnr(reference: &HyperCube, estimate: &HyperCube) -> Result<Vec<Psnr>> {
    check_shapes(reference, estimate)?;
    (0..reference.bands())
        .map(|b| psnr_of(reference.band(b), estimate.band(b)))
        .collect()
}

pub fn band_mse(reference: &HyperCube, estimate: &HyperCube) -> Result<Vec<f64>> {
    check_shapes(reference, estimate)?;
    Ok((0..reference.bands())
        .map(|b| mean_squared_error(reference.band(b), estimate.band(b)))
        .collect())
}

/// Mean of per-band PSNRs in dB; infinite if any band is exact.
pub fn average_psnr(bands: &[Psnr]) -> f64 {
    bands.iter().map(|p| p.db()).sum::<f64>() / bands.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSignature {
    pub x: usize,
    pub y: usize,
    pub reference: Vec<f64>,
    pub estimate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub band_psnr: Vec<Psnr>,
    pub average_psnr: f64,
    pub signatures: Vec<SpectralSignature>,
}

impl EvaluationReport {
    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = format!(
            "bands={}\naverage_psnr_db={}\n",
            self.band_psnr.len(),
            self.average_psnr
        );
        for (b, p) in self.band_psnr.iter().enumerate() {
            out.push_str(&format!("band_{b}_psnr_db={p}\n"));
        }
        out
    }

    /// Header `band,psnr_db`; exact bands are written as `inf`.
    pub fn band_csv(&self) -> String {
        let mut out = String::from("band,psnr_db\n");
        for (b, p) in self.band_psnr.iter().enumerate() {
            out.push_str(&format!("{b},{p}\n"));
        }
        out
    }

    /// Header `x,y,band,reference,estimate`.
    pub fn signature_csv(&self) -> String {
        let mut out = String::from("x,y,band,reference,estimate\n");
        for s in &self.signatures {
            for (b, (r, e)) in s.reference.iter().zip(&s.estimate).enumerate() {
                out.push_str(&format!("{},{},{b},{r},{e}\n", s.x, s.y));
            }
        }
        out
    }
}

pub fn evaluate(
    reference: &HyperCube,
    estimate: &HyperCube,
    locations: &[(usize, usize)],
) -> Result<EvaluationReport> {
    let bands = band_psnr(reference, estimate)?;
    let mut signatures = Vec::with_capacity(locations.len());
    for &(x, y) in locations {
        if x >= reference.m_rows() || y >= reference.n_cols() {
            return Err(Error::Domain(format!(
                "signature location ({x}, {y}) outside {}x{}",
                reference.m_rows(),
                reference.n_cols()
            )));
        }
        signatures.push(SpectralSignature {
            x,
            y,
            reference: (0..reference.bands())
                .map(|b| reference.get(x, y, b))
                .collect(),
            estimate: (0..estimate.bands())
                .map(|b| estimate.get(x, y, b))
                .collect(),
        });
    }
    Ok(EvaluationReport {
        average_psnr: average_psnr(&bands),
        band_psnr: bands,
        signatures,
    })
}

/// Noise standard deviation giving `snr_db` for these clean measurements.
pub fn noise_sigma_for_snr(clean: &MeasurementVector, snr_db: f64) -> Result<f64> {
    let mean = clean.mean();
    if mean.is_nan() || mean <= 0.0 {
        return Err(Error::Domain(format!(
            "SNR needs a positive mean measurement, got {mean}"
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::Domain(format!("SNR {snr_db} dB is not finite")));
    }
    Ok(mean / 10f64.powf(snr_db / 10.0))
}

/// Realized SNR of `noisy` against `clean` under the same convention.
pub fn empirical_snr_db(clean: &MeasurementVector, noisy: &MeasurementVector) -> f64 {
    let n = clean.len() as f64;
    let diffs: Vec<f64> = noisy
        .values()
        .iter()
        .zip(clean.values())
        .map(|(a, b)| a - b)
        .collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    10.0 * (clean.mean() / var.sqrt()).log10()
}

pub fn add_gaussian_noise(
    g: &MeasurementVector,
    sigma: f64,
    seed: u64,
) -> Result<MeasurementVector> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::Domain(format!(
            "noise standard deviation must be nonnegative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(g.clone());
    }
    let mut rng = SeededStream::new(seed);
    Ok(MeasurementVector::new(
        g.values()
            .iter()
            .map(|v| v + sigma * rng.standard_normal())
            .collect(),
    ))
}
