//! Batch command-line front end: decomposition, noise injection, transform
//! self-test, and PSNR.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numerical failure
//! (NaN in a result).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ctdecomp::contourlet::required_side_multiple;
use ctdecomp::decompose::{decompose_uvw, write_trace_csv, DecompParams, NoiseModel};
use ctdecomp::grid::{add_gaussian_noise, psnr, ImageGrid, NoiseSpec};
use ctdecomp::io::{load_image, save_image};
use ctdecomp::{ct_analyze, ct_synthesize, ChambolleOpts, Error};

/// Environment variable holding the default thread count.
const THREADS_ENV: &str = "CTDECOMP_THREADS";

#[derive(Parser)]
#[command(
    name = "ctdecomp",
    version,
    about = "Decompose grayscale images into structures + textures + noise"
)]
struct Cli {
    /// Threads for internal kernel parallelism (default: CTDECOMP_THREADS or
    /// all cores). Results are identical regardless of the thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the structures + textures + noise decomposition.
    Decompose(DecomposeArgs),
    /// Add seeded Gaussian noise to an image.
    AddNoise(AddNoiseArgs),
    /// Self-test the transform: perfect reconstruction and energy ratio.
    CheckTransform(CheckTransformArgs),
    /// Print the PSNR between two images in dB.
    Psnr(PsnrArgs),
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    #[arg(long, default_value_t = 100.0)]
    mu: f64,
    #[arg(long, default_value_t = 20.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Directions per scale as 2-exponents, finest first, e.g. 3,3,4.
    #[arg(long, default_value = "3,3,4", value_parser = parse_levels)]
    levels: LevelSpec,
    #[arg(long, default_value = "contourlet", value_parser = parse_noise_model)]
    noise_model: NoiseModel,
    /// Output prefix; writes <prefix>_u, _v, _w, _residual images.
    #[arg(long)]
    out_prefix: PathBuf,
    /// Optional CSV file for the per-iteration trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct AddNoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct CheckTransformArgs {
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value = "3,3,4", value_parser = parse_levels)]
    levels: LevelSpec,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct PsnrArgs {
    a: PathBuf,
    b: PathBuf,
}

/// Comma-separated direction exponents, e.g. "3,3,4".
#[derive(Clone, Debug)]
struct LevelSpec(Vec<usize>);

fn parse_levels(s: &str) -> Result<LevelSpec, String> {
    let levels: Result<Vec<usize>, _> = s.split(',').map(|t| t.trim().parse::<usize>()).collect();
    let levels = levels.map_err(|e| format!("bad level list {s:?}: {e}"))?;
    if levels.is_empty() {
        return Err("level list must not be empty".to_string());
    }
    if let Some(&l) = levels.iter().find(|&&l| l > 5) {
        return Err(format!("direction levels capped at 5, got {l}"));
    }
    Ok(LevelSpec(levels))
}

fn parse_noise_model(s: &str) -> Result<NoiseModel, String> {
    match s {
        "contourlet" => Ok(NoiseModel::Contourlet),
        "wavelet" => Ok(NoiseModel::Wavelet),
        other => Err(format!(
            "noise model must be 'contourlet' or 'wavelet', got {other:?}"
        )),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are success, anything else is usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Err(msg) = init_threads(cli.threads) {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }

    let result = match cli.command {
        Command::Decompose(args) => run_decompose(args),
        Command::AddNoise(args) => run_add_noise(args),
        Command::CheckTransform(args) => run_check_transform(args),
        Command::Psnr(args) => run_psnr(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Io(_) | Error::Format(_) => 2,
                Error::Dimension(_) | Error::InvalidArgument(_) => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn init_threads(cli_threads: Option<usize>) -> Result<(), String> {
    let threads = match cli_threads {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => Some(
                s.parse::<usize>()
                    .map_err(|_| format!("{THREADS_ENV}={s:?} is not a thread count"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err("thread count must be positive".to_string());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn numerical_check(grids: &[&ImageGrid]) -> Result<(), ExitCode> {
    if grids.iter().any(|g| g.has_non_finite()) {
        eprintln!("error: numerical failure (NaN detected)");
        return Err(ExitCode::from(3));
    }
    Ok(())
}

fn output_path(prefix: &Path, suffix: &str, like: &Path) -> PathBuf {
    let ext = like
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("pgm")
        .to_ascii_lowercase();
    let mut name = prefix.as_os_str().to_owned();
    name.push(format!("_{suffix}.{ext}"));
    PathBuf::from(name)
}

fn run_decompose(args: DecomposeArgs) -> Result<ExitCode, Error> {
    // Validate everything before any computation or file output.
    let params = DecompParams {
        lambda: args.lambda,
        mu: args.mu,
        delta: args.delta,
        eps: args.eps,
        n_step: args.max_iter,
        level_spec: args.levels.0.clone(),
        inner: ChambolleOpts::default(),
        noise_model: args.noise_model,
    };
    if !(params.lambda > 0.0 && params.mu > 0.0 && params.delta >= 0.0 && params.eps > 0.0) {
        return Err(Error::InvalidArgument(
            "lambda, mu, eps must be positive and delta nonnegative".to_string(),
        ));
    }
    if params.n_step == 0 {
        return Err(Error::InvalidArgument("max-iter must be positive".to_string()));
    }

    let f = load_image(&args.input)?;

    // Pad symmetrically to the next compatible square size, decompose, crop.
    let multiple = required_side_multiple(&params.level_spec);
    let side = f.width().max(f.height()).div_ceil(multiple) * multiple;
    let padded = if side != f.width() || side != f.height() {
        f.pad_symmetric(side, side)?
    } else {
        f.clone()
    };

    let res = decompose_uvw(&padded, &params)?;

    let u = res.u.crop_centered(f.width(), f.height())?;
    let v = res.v.crop_centered(f.width(), f.height())?;
    let w = res.w.crop_centered(f.width(), f.height())?;
    let residual = res.residual.crop_centered(f.width(), f.height())?;
    if let Err(code) = numerical_check(&[&u, &v, &w, &residual]) {
        return Ok(code);
    }

    save_image(&u, output_path(&args.out_prefix, "u", &args.input), 0.0)?;
    // Oscillating components are displayed around mid-gray.
    save_image(&v, output_path(&args.out_prefix, "v", &args.input), 128.0)?;
    save_image(&w, output_path(&args.out_prefix, "w", &args.input), 128.0)?;
    save_image(
        &residual,
        output_path(&args.out_prefix, "residual", &args.input),
        128.0,
    )?;
    if let Some(trace_path) = &args.trace {
        let mut file = std::fs::File::create(trace_path)?;
        write_trace_csv(&res.trace, &mut file)?;
    }
    eprintln!(
        "decomposed {} in {} iteration(s), converged: {}",
        args.input.display(),
        res.iterations,
        res.converged
    );
    Ok(ExitCode::SUCCESS)
}

fn run_add_noise(args: AddNoiseArgs) -> Result<ExitCode, Error> {
    let spec = NoiseSpec::new(args.sigma, args.seed)?;
    let img = load_image(&args.input)?;
    let noisy = add_gaussian_noise(&img, &spec);
    if let Err(code) = numerical_check(&[&noisy]) {
        return Ok(code);
    }
    save_image(&noisy, &args.output, 0.0)?;
    Ok(ExitCode::SUCCESS)
}

fn run_check_transform(args: CheckTransformArgs) -> Result<ExitCode, Error> {
    let multiple = required_side_multiple(&args.levels.0);
    if args.size == 0 || args.size % multiple != 0 {
        return Err(Error::InvalidArgument(format!(
            "size {} must be a positive multiple of {multiple} for levels {:?}",
            args.size, args.levels.0
        )));
    }
    let img = ImageGrid::random_uniform(args.size, args.size, 0.0, 255.0, args.seed);
    let coeffs = ct_analyze(&img, &args.levels.0)?;
    let back = ct_synthesize(&coeffs)?;
    let pr_error = back.max_abs_diff(&img);
    let ratio = coeffs.energy() / img.energy();
    println!("pr_error={pr_error:.3e} parseval_ratio={ratio:.6}");
    if pr_error <= 1e-9 {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: perfect reconstruction tolerance exceeded");
        Ok(ExitCode::from(3))
    }
}

fn run_psnr(args: PsnrArgs) -> Result<ExitCode, Error> {
    let a = load_image(&args.a)?;
    let b = load_image(&args.b)?;
    let value = psnr(&a, &b, 255.0)?;
    if value.is_infinite() {
        println!("inf");
    } else {
        println!("{value:.6}");
    }
    Ok(ExitCode::SUCCESS)
}
