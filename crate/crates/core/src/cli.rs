//! Command-line pipeline: aperture generation, simulation, reconstruction
//! and evaluation. Every source of randomness is an explicit `--seed`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::amp::{run_amp, SolverConfig, DEFAULT_ALPHA, DEFAULT_MAX_ITERS};
use crate::cube::{complement, random_aperture, CodedAperture};
use crate::error::{Error, Result};
use crate::io::{
    read_aperture, read_cube, read_measurements, write_aperture, write_band_png, write_cube,
    write_measurements, MeasurementFile,
};
use crate::metrics::{add_gaussian_noise, evaluate, noise_sigma_for_snr};
use crate::operator::{CassiModel, Order, DEFAULT_HIGHER_ORDER_WEIGHTS};
use crate::synthetic::{sparse_cube, SparseCubeParams};
use crate::transform::{TransformSpec, DEFAULT_LEVELS};
use crate::wavelet::WaveletFamily;

#[derive(Debug, Parser)]
#[command(
    name = "cassi-amp",
    version,
    about = "CASSI simulation and AMP reconstruction"
)]
pub struct Cli {
    /// Worker threads for the numeric kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write K random coded apertures.
    GenerateApertures(GenerateArgs),
    /// Write a synthetic cube that is sparse in the wavelet x DCT basis.
    SynthCube(SynthArgs),
    /// Apply the CASSI forward model (plus optional noise) to a cube.
    Simulate(SimulateArgs),
    /// Reconstruct a cube from measurements.
    Reconstruct(ReconstructArgs),
    /// Compare an estimate against a reference cube.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderArg {
    Standard,
    Higher,
}

impl From<OrderArg> for Order {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Standard => Order::Standard,
            OrderArg::Higher => Order::HigherOrder,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long, default_value_t = 2)]
    pub shots: usize,
    #[arg(long, default_value_t = 0.5)]
    pub open_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Odd-indexed shots are the complement of their predecessor.
    #[arg(long)]
    pub complementary: bool,
    /// Files are written as `<prefix>_<k>.apt`, k zero-padded to two digits.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long)]
    pub bands: usize,
    #[arg(long, default_value_t = 200)]
    pub nonzeros: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "haar")]
    pub wavelet: WaveletFamily,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    pub levels: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Aperture files, one per shot, in shot order.
    #[arg(long, num_args = 1.., required = true)]
    pub apertures: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub order: Option<OrderArg>,
    /// Higher-order energy split `w-1,w0,w+1`.
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<[f64; 3]>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub cube: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Omit for noiseless measurements.
    #[arg(long)]
    pub snr_db: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub measurements: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub iters: usize,
    #[arg(long, default_value = "haar")]
    pub wavelet: WaveletFamily,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    pub levels: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub trace_csv: Option<PathBuf>,
    /// Ground truth cube for per-iteration PSNR in the trace.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub estimate: PathBuf,
    /// Pixel locations `x,y;x,y;...` for spectral signatures.
    #[arg(long, value_parser = parse_locations)]
    pub signatures: Option<Locations>,
    /// Per-band PSNR CSV.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub signature_csv: Option<PathBuf>,
    /// Directory for per-band PNG slices of truth and estimate.
    #[arg(long)]
    pub slices_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Locations(pub Vec<(usize, usize)>);

fn parse_weights(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected three weights, got {}", v.len()))
}

fn parse_locations(s: &str) -> std::result::Result<Locations, String> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let (x, y) = pair
                .split_once(',')
                .ok_or_else(|| format!("location {pair:?} is not x,y"))?;
            let x = x.trim().parse().map_err(|e| format!("{x:?}: {e}"))?;
            let y = y.trim().parse().map_err(|e| format!("{y:?}: {e}"))?;
            Ok((x, y))
        })
        .collect::<std::result::Result<Vec<_>, String>>()
        .map(Locations)
}

/// Path of shot `k` for a given prefix.
pub fn aperture_path(prefix: &Path, k: usize) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(format!("_{k:02}.apt"));
    PathBuf::from(name)
}

/// Apertures for `shots` exposures. Fresh draws for shot `k` use seed
/// `seed + k`; with `complementary`, odd shots complement the previous one.
pub fn generate_apertures(
    rows: usize,
    cols: usize,
    shots: usize,
    open_fraction: f64,
    seed: u64,
    complementary: bool,
) -> Result<Vec<CodedAperture>> {
    if shots == 0 {
        return Err(Error::Domain("at least one shot is required".into()));
    }
    let mut out: Vec<CodedAperture> = Vec::with_capacity(shots);
    for k in 0..shots {
        let aperture = if complementary && k % 2 == 1 {
            complement(&out[k - 1])
        } else {
            random_aperture(rows, cols, open_fraction, seed.wrapping_add(k as u64))?
        };
        out.push(aperture);
    }
    Ok(out)
}

pub fn cmd_generate_apertures(args: &GenerateArgs) -> Result<Vec<PathBuf>> {
    let apertures = generate_apertures(
        args.rows,
        args.cols,
        args.shots,
        args.open_fraction,
        args.seed,
        args.complementary,
    )?;
    let mut paths = Vec::with_capacity(apertures.len());
    for (k, a) in apertures.iter().enumerate() {
        let path = aperture_path(&args.out_prefix, k);
        write_aperture(&path, a)?;
        println!(
            "{} open={}/{}",
            path.display(),
            a.open_count(),
            a.mask().len()
        );
        paths.push(path);
    }
    Ok(paths)
}

pub fn cmd_synth_cube(args: &SynthArgs) -> Result<()> {
    let spec = TransformSpec::new(args.wavelet, args.levels, args.rows, args.cols, args.bands)?;
    let params = SparseCubeParams {
        nonzeros: args.nonzeros,
        ..SparseCubeParams::default()
    };
    let (cube, _) = sparse_cube(&spec, params, args.seed)?;
    write_cube(&args.out, &cube)?;
    println!(
        "{} {}x{}x{}",
        args.out.display(),
        args.rows,
        args.cols,
        args.bands
    );
    Ok(())
}

fn load_model(args: &ModelArgs, bands: usize, order: Order) -> Result<CassiModel> {
    let shots = args
        .apertures
        .iter()
        .map(read_aperture)
        .collect::<Result<Vec<_>>>()?;
    let weights = args.weights.unwrap_or(DEFAULT_HIGHER_ORDER_WEIGHTS);
    CassiModel::with_weights(bands, shots, order, weights).map_err(|e| match e {
        Error::Size(msg) | Error::Domain(msg) => Error::Config(msg),
        other => other,
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<MeasurementFile> {
    let cube = read_cube(&args.cube)?;
    let order = args.model.order.map(Order::from).unwrap_or(Order::Standard);
    let model = load_model(&args.model, cube.bands(), order)?;
    if (model.m_rows(), model.n_cols()) != (cube.m_rows(), cube.n_cols()) {
        return Err(Error::Config(format!(
            "apertures are {}x{}, cube is {}x{}",
            model.m_rows(),
            model.n_cols(),
            cube.m_rows(),
            cube.n_cols()
        )));
    }
    let clean = model.forward(&cube)?;
    let values = match args.snr_db {
        Some(snr) => {
            let sigma = noise_sigma_for_snr(&clean, snr)?;
            println!("noise sigma = {sigma:e}");
            add_gaussian_noise(&clean, sigma, args.seed)?
        }
        None => clean,
    };
    let file = MeasurementFile {
        shots: model.shot_count() as u32,
        order,
        values,
    };
    write_measurements(&args.out, &file)?;
    println!("m = {}", model.measurement_count());
    println!("measurement rate = {:.4}", model.measurement_rate());
    Ok(file)
}

/// Band count implied by a measurement file and aperture size.
fn infer_bands(file: &MeasurementFile, rows: usize, cols: usize) -> Result<usize> {
    let m = file.values.len();
    let per_row = file.shots as usize * rows;
    if per_row == 0 || !m.is_multiple_of(per_row) {
        return Err(Error::Config(format!(
            "{m} measurements are not a multiple of {} shots x {rows} rows",
            file.shots
        )));
    }
    let width = m / per_row;
    let bands = match file.order {
        Order::Standard => (width + 1).checked_sub(cols),
        Order::HigherOrder => width.checked_sub(cols + 1),
    };
    match bands {
        Some(l) if l > 0 => Ok(l),
        _ => Err(Error::Config(format!(
            "FPA width {width} is inconsistent with {cols} aperture columns"
        ))),
    }
}

pub fn cmd_reconstruct(args: &ReconstructArgs) -> Result<()> {
    let file = read_measurements(&args.measurements)?;
    if let Some(order) = args.model.order {
        if Order::from(order) != file.order {
            return Err(Error::Config(format!(
                "--order {order:?} disagrees with the measurement file ({:?})",
                file.order
            )));
        }
    }
    if file.shots as usize != args.model.apertures.len() {
        return Err(Error::Config(format!(
            "measurement file has {} shots but {} apertures were given",
            file.shots,
            args.model.apertures.len()
        )));
    }
    let first = read_aperture(&args.model.apertures[0])?;
    let bands = infer_bands(&file, first.m_rows(), first.n_cols())?;
    let model = load_model(&args.model, bands, file.order)?;
    if model.measurement_count() != file.values.len() {
        return Err(Error::Config(format!(
            "model expects {} measurements, file has {}",
            model.measurement_count(),
            file.values.len()
        )));
    }
    let spec = TransformSpec::new(
        args.wavelet,
        args.levels,
        model.m_rows(),
        model.n_cols(),
        bands,
    )
    .map_err(|e| Error::Config(e.to_string()))?;
    let truth = args.truth.as_ref().map(read_cube).transpose()?;
    if let Some(t) = &truth {
        if t.dims() != model.cube_dims() {
            return Err(Error::Config(format!(
                "truth cube is {:?}, reconstruction is {:?}",
                t.dims(),
                model.cube_dims()
            )));
        }
    }
    let config = SolverConfig::new(spec)
        .with_alpha(args.alpha)
        .with_max_iters(args.iters);
    config
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;

    let (estimate, report) = run_amp(&model, &file.values, &config, truth.as_ref())?;
    write_cube(&args.out, &estimate)?;
    if let Some(path) = &args.trace_csv {
        fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    println!(
        "{} {}x{}x{} after {} iterations, final sigma2 = {:e}",
        args.out.display(),
        model.m_rows(),
        model.n_cols(),
        bands,
        report.len(),
        report.sigma2.last().copied().unwrap_or(f64::NAN)
    );
    if let Some(p) = report.psnr.last() {
        println!("average PSNR = {p:.4} dB");
    }
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let truth = read_cube(&args.truth)?;
    let estimate = read_cube(&args.estimate)?;
    let locations = args.signatures.clone().map(|l| l.0).unwrap_or_default();
    let report = evaluate(&truth, &estimate, &locations)?;
    print!("{}", report.to_key_value());
    if let Some(path) = &args.out_csv {
        fs::write(path, report.band_csv()).map_err(|e| Error::io(path, e))?;
    }
    if let Some(path) = &args.signature_csv {
        fs::write(path, report.signature_csv()).map_err(|e| Error::io(path, e))?;
    }
    if let Some(dir) = &args.slices_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for band in 0..truth.bands() {
            write_band_png(&truth, band, dir.join(format!("truth_band{band:02}.png")))?;
            write_band_png(
                &estimate,
                band,
                dir.join(format!("estimate_band{band:02}.png")),
            )?;
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        // Fails only if a pool already exists, in which case that pool is used.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match &cli.command {
        Command::GenerateApertures(a) => cmd_generate_apertures(a).map(|_| ()),
        Command::SynthCube(a) => cmd_synth_cube(a),
        Command::Simulate(a) => cmd_simulate(a).map(|_| ()),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}
