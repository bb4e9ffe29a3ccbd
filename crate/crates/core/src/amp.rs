//! Damped approximate message passing with a Wiener denoiser.
//!
//! Starting from `f = 0`, `r = 0`, each iteration performs
//!
//! 1. `r <- g - H f + (1/R) r_prev <eta'>_prev` (Onsager-corrected residual)
//! 2. `r <- alpha r + (1 - alpha) r_prev`
//! 3. `q  = H^T r + f`
//! 4. `sigma2 = |r|^2 / m`
//! 5. `eta, <eta'> = denoise(q, sigma2)`
//! 6. `f <- alpha eta + (1 - alpha) f`
//!
//! where `R = m / n`. The estimate after the last iteration is returned.

use crate::cube::{HyperCube, MeasurementVector};
use crate::error::{Error, Result};
use crate::metrics::{average_psnr, band_psnr};
use crate::operator::CassiModel;
use crate::transform::TransformSpec;
use crate::wiener::{Denoiser, WienerDenoiser};

pub const DEFAULT_ALPHA: f64 = 0.2;
pub const DEFAULT_MAX_ITERS: usize = 400;
/// Divergence is declared once `sigma2_t` exceeds this multiple of `sigma2_1`.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

/// Optional early stop: halt when `sigma2` changed by less than
/// `tolerance` (relative) over the last `window` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauRule {
    pub window: usize,
    pub tolerance: f64,
}

impl Default for PlateauRule {
    fn default() -> Self {
        Self {
            window: 10,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    pub max_iters: usize,
    pub transform: TransformSpec,
    pub record_trace: bool,
    pub plateau: Option<PlateauRule>,
}

impl SolverConfig {
    pub fn new(transform: TransformSpec) -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            max_iters: DEFAULT_MAX_ITERS,
            transform,
            record_trace: true,
            plateau: None,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be positive".into()));
        }
        self.transform.validate()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "damping alpha {alpha} outside (0, 1]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Current estimate `f^t`.
    pub estimate: HyperCube,
    /// Damped residual from the previous iteration.
    pub residual: MeasurementVector,
    pub sigma2: f64,
    /// Iterations completed so far.
    pub iteration: usize,
    /// `<eta'>` from the previous denoising step; zero before the first.
    pub onsager: f64,
}

/// Per-iteration diagnostics. `psnr` is only filled when a ground truth
/// cube was supplied and holds the average per-band PSNR in dB.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationReport {
    pub sigma2: Vec<f64>,
    pub onsager: Vec<f64>,
    pub psnr: Vec<f64>,
    pub stopped_early: bool,
}

impl IterationReport {
    pub fn len(&self) -> usize {
        self.sigma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2.is_empty()
    }

    /// CSV with header `iteration,sigma2,onsager[,psnr_db]`, 1-based iterations.
    pub fn to_csv(&self) -> String {
        let with_psnr = !self.psnr.is_empty();
        let mut out = String::from(if with_psnr {
            "iteration,sigma2,onsager,psnr_db\n"
        } else {
            "iteration,sigma2,onsager\n"
        });
        for t in 0..self.sigma2.len() {
            out.push_str(&format!(
                "{},{:e},{}",
                t + 1,
                self.sigma2[t],
                self.onsager[t]
            ));
            if with_psnr {
                out.push_str(&format!(",{}", self.psnr[t]));
            }
            out.push('\n');
        }
        out
    }
}

/// `sigma2 = (1/m) sum r_i^2`.
pub fn estimate_noise_variance(r: &MeasurementVector) -> f64 {
    r.values().iter().map(|v| v * v).sum::<f64>() / r.len() as f64
}

/// `alpha * new + (1 - alpha) * old`, elementwise.
pub fn damp(new_value: &[f64], old_value: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if new_value.len() != old_value.len() {
        return Err(Error::Size(format!(
            "cannot damp vectors of length {} and {}",
            new_value.len(),
            old_value.len()
        )));
    }
    if alpha == 1.0 {
        return Ok(new_value.to_vec());
    }
    Ok(new_value
        .iter()
        .zip(old_value)
        .map(|(n, o)| alpha * n + (1.0 - alpha) * o)
        .collect())
}

/// `g - Hf + (1/R) r_prev * onsager` given a precomputed `Hf`.
pub fn corrected_residual(
    g: &[f64],
    hf: &[f64],
    r_prev: &[f64],
    onsager: f64,
    rate: f64,
) -> Result<Vec<f64>> {
    if g.len() != hf.len() || g.len() != r_prev.len() {
        return Err(Error::Size(format!(
            "residual inputs have lengths {}, {}, {}",
            g.len(),
            hf.len(),
            r_prev.len()
        )));
    }
    if rate.is_nan() || rate <= 0.0 {
        return Err(Error::Domain(format!(
            "measurement rate {rate} must be positive"
        )));
    }
    let scale = onsager / rate;
    Ok(g.iter()
        .zip(hf)
        .zip(r_prev)
        .map(|((g, h), r)| g - h + scale * r)
        .collect())
}

pub fn residual_step(
    model: &CassiModel,
    g: &MeasurementVector,
    f_t: &HyperCube,
    r_prev: &MeasurementVector,
    onsager_prev: f64,
    rate: f64,
) -> Result<MeasurementVector> {
    let hf = model.forward(f_t)?;
    corrected_residual(g.values(), hf.values(), r_prev.values(), onsager_prev, rate)
        .map(MeasurementVector::new)
}

/// Outcome of a single iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub sigma2: f64,
    pub onsager: f64,
}

/// Iteration driver; owns the solver state and the denoiser.
pub struct AmpSolver<'a, D: Denoiser> {
    model: &'a CassiModel,
    g: &'a MeasurementVector,
    alpha: f64,
    rate: f64,
    denoiser: D,
    state: SolverState,
    first_sigma2: Option<f64>,
}

impl<'a, D: Denoiser> AmpSolver<'a, D> {
    pub fn new(
        model: &'a CassiModel,
        g: &'a MeasurementVector,
        alpha: f64,
        denoiser: D,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if g.len() != model.measurement_count() {
            return Err(Error::Size(format!(
                "measurement vector has {} entries, model expects {}",
                g.len(),
                model.measurement_count()
            )));
        }
        let (m, n, l) = model.cube_dims();
        Ok(Self {
            model,
            g,
            alpha,
            rate: model.measurement_rate(),
            denoiser,
            state: SolverState {
                estimate: HyperCube::zeros(m, n, l),
                residual: MeasurementVector::zeros(g.len()),
                sigma2: 0.0,
                iteration: 0,
                onsager: 0.0,
            },
            first_sigma2: None,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn into_estimate(self) -> HyperCube {
        self.state.estimate
    }

    pub fn step(&mut self) -> Result<StepOutcome> {
        let t = self.state.iteration + 1;
        let fresh = residual_step(
            self.model,
            self.g,
            &self.state.estimate,
            &self.state.residual,
            self.state.onsager,
            self.rate,
        )?;
        let residual = MeasurementVector::new(damp(
            fresh.values(),
            self.state.residual.values(),
            self.alpha,
        )?);

        let mut q = self.model.adjoint(&residual)?;
        for (qv, fv) in q.values_mut().iter_mut().zip(self.state.estimate.values()) {
            *qv += fv;
        }

        let sigma2 = estimate_noise_variance(&residual);
        if !sigma2.is_finite() {
            return Err(Error::Divergence {
                iteration: t,
                reason: format!("noise estimate is {sigma2}"),
            });
        }
        let first = *self.first_sigma2.get_or_insert(sigma2);
        if sigma2 > DIVERGENCE_FACTOR * first {
            return Err(Error::Divergence {
                iteration: t,
                reason: format!(
                    "noise estimate {sigma2:e} exceeds {DIVERGENCE_FACTOR:e} x first estimate {first:e}"
                ),
            });
        }
        if !q.is_finite() {
            return Err(Error::Divergence {
                iteration: t,
                reason: "scalar channel has non-finite entries".into(),
            });
        }

        let (denoised, onsager) = self.denoiser.denoise(&q, sigma2)?;
        let damped = damp(denoised.values(), self.state.estimate.values(), self.alpha)?;
        let (m, n, l) = self.model.cube_dims();
        let estimate = HyperCube::from_raw(m, n, l, damped);
        if !estimate.is_finite() {
            return Err(Error::Divergence {
                iteration: t,
                reason: "estimate has non-finite entries".into(),
            });
        }

        self.state = SolverState {
            estimate,
            residual,
            sigma2,
            iteration: t,
            onsager,
        };
        Ok(StepOutcome { sigma2, onsager })
    }
}

/// Run the solver with the Wiener denoiser described by `config.transform`.
pub fn run_amp(
    model: &CassiModel,
    g: &MeasurementVector,
    config: &SolverConfig,
    ground_truth: Option<&HyperCube>,
) -> Result<(HyperCube, IterationReport)> {
    config.validate()?;
    if config.transform.dims() != model.cube_dims() {
        return Err(Error::Size(format!(
            "transform is for {:?}, model cube is {:?}",
            config.transform.dims(),
            model.cube_dims()
        )));
    }
    let denoiser = WienerDenoiser::new(config.transform)?;
    run_amp_with(model, g, config, ground_truth, denoiser)
}

/// [`run_amp`] with a caller-supplied denoiser.
pub fn run_amp_with<D: Denoiser>(
    model: &CassiModel,
    g: &MeasurementVector,
    config: &SolverConfig,
    ground_truth: Option<&HyperCube>,
    denoiser: D,
) -> Result<(HyperCube, IterationReport)> {
    config.validate()?;
    if let Some(truth) = ground_truth {
        if truth.dims() != model.cube_dims() {
            return Err(Error::Size(format!(
                "ground truth is {:?}, model cube is {:?}",
                truth.dims(),
                model.cube_dims()
            )));
        }
    }
    let mut solver = AmpSolver::new(model, g, config.alpha, denoiser)?;
    let mut report = IterationReport::default();
    let mut history = Vec::with_capacity(config.max_iters);
    for _ in 0..config.max_iters {
        let outcome = solver.step()?;
        history.push(outcome.sigma2);
        if config.record_trace {
            report.sigma2.push(outcome.sigma2);
            report.onsager.push(outcome.onsager);
            if let Some(truth) = ground_truth {
                report
                    .psnr
                    .push(average_psnr(&band_psnr(truth, &solver.state().estimate)?));
            }
        }
        if let Some(rule) = config.plateau {
            if history.len() > rule.window {
                let then = history[history.len() - 1 - rule.window];
                let now = outcome.sigma2;
                let change = (now - then).abs();
                if change <= rule.tolerance * then.abs() {
                    report.stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok((solver.into_estimate(), report))
}

/// Column-normalized back-projection `diag(H^T H)^-1 H^T g`; voxels that no
/// open aperture pixel sees are left at zero.
pub fn back_projection(model: &CassiModel, g: &MeasurementVector) -> Result<HyperCube> {
    let mut cube = model.adjoint(g)?;
    let norms = model.column_norm_squares();
    for (v, s) in cube.values_mut().iter_mut().zip(norms.values()) {
        *v = if *s > 0.0 { *v / s } else { 0.0 };
    }
    Ok(cube)
}
