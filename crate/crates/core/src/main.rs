use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flowcodec::codec::{self, evaluate_grid, select, write_csv};
use flowcodec::flow_io::{load_flo, save_flo};
use flowcodec::{DetectorParams, EncodeParams, Error, ParamGrid, SolverConfig};

#[derive(Parser)]
#[command(name = "flowcodec", version, about = "Edge-aware diffusion codec for optical flow fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a .flo file.
    Encode {
        input: PathBuf,
        output: PathBuf,
        /// Fraction of pixels on the mask grid.
        #[arg(long, default_value_t = 0.01)]
        density: f64,
        /// Quantisation levels per channel.
        #[arg(long, default_value_t = 64)]
        levels: u32,
        /// Hysteresis high threshold.
        #[arg(long, default_value_t = 4.0)]
        t1: f64,
        /// Hysteresis low threshold.
        #[arg(long, default_value_t = 2.0)]
        t2: f64,
        /// Gaussian pre-smoothing scale.
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        /// Encode the raw float field instead of its 8-bit snap.
        #[arg(long)]
        no_snap: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Reconstruct a .flo file from a compressed stream.
    Decode {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// PSNR (dB, 8-bit code space of the first file) between two .flo files.
    Psnr { reference: PathBuf, other: PathBuf },
    /// Render a .flo file with the Middlebury colour wheel as binary PPM.
    Visualize {
        input: PathBuf,
        output: PathBuf,
        /// Magnitude mapped to full saturation; defaults to the field maximum.
        #[arg(long)]
        max_mag: Option<f64>,
    },
    /// Grid search over density, levels and thresholds.
    Sweep {
        input: PathBuf,
        /// CSV destination for the selected rate-distortion curve.
        #[arg(long)]
        out: PathBuf,
        /// CSV destination for every evaluated grid point.
        #[arg(long)]
        all: Option<PathBuf>,
        /// Target compression ratios.
        #[arg(long, value_delimiter = ',', default_value = "50,100,200,300,400,500,600,700,800,900")]
        targets: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.002,0.005,0.01,0.02,0.05")]
        densities: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
        levels: Vec<u32>,
        /// Threshold pairs as T1:T2.
        #[arg(long, value_delimiter = ',', value_parser = parse_pair, default_value = "4:2,8:4,16:8")]
        thresholds: Vec<(f64, f64)>,
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// Relative residual at which conjugate gradients stop.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Use the Jacobi preconditioner.
    #[arg(long)]
    jacobi: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            rel_residual_tol: self.tol,
            jacobi: self.jacobi,
            ..SolverConfig::default()
        }
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected T1:T2, got {s:?}"))?;
    let a = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    Ok((a, b))
}

fn run(command: Command) -> flowcodec::Result<()> {
    match command {
        Command::Encode {
            input,
            output,
            density,
            levels,
            t1,
            t2,
            sigma,
            no_snap,
            solver,
        } => {
            let field = load_flo(&input)?;
            let params = EncodeParams {
                detector: DetectorParams::new(sigma, t1, t2)?,
                density,
                k: levels,
                solver: solver.config(),
                snap_input: !no_snap,
            };
            let bytes = codec::encode(&field, &params)?;
            fs::write(&output, &bytes)?;
            let ratio = (2 * field.len()) as f64 / bytes.len() as f64;
            println!("{} bytes, ratio {ratio:.2}:1", bytes.len());
        }
        Command::Decode { input, output, solver } => {
            let bytes = fs::read(&input)?;
            let field = codec::decode_with(&bytes, &solver.config())?;
            save_flo(&output, &field)?;
        }
        Command::Psnr { reference, other } => {
            let a = load_flo(&reference)?;
            let b = load_flo(&other)?;
            let db = codec::psnr(&a, &b)?;
            if db.is_infinite() {
                println!("inf");
            } else {
                println!("{db:.4}");
            }
        }
        Command::Visualize { input, output, max_mag } => {
            let field = load_flo(&input)?;
            if let Some(m) = max_mag {
                if !(m.is_finite() && m > 0.0) {
                    return Err(Error::InvalidParams(format!("--max-mag must be positive, got {m}")));
                }
            }
            let image = flowcodec::visualize(&field, max_mag);
            let mut w = BufWriter::new(fs::File::create(&output)?);
            image.write_ppm(&mut w)?;
            w.flush()?;
        }
        Command::Sweep {
            input,
            out,
            all,
            targets,
            densities,
            levels,
            thresholds,
            sigma,
            solver,
        } => {
            let field = load_flo(&input)?;
            let grid = ParamGrid {
                densities,
                levels,
                thresholds,
                sigma,
            };
            let points = evaluate_grid(&field, &grid, solver.config())?;
            if let Some(path) = all {
                write_csv(BufWriter::new(fs::File::create(path)?), &points)?;
            }
            let curve = targets
                .iter()
                .map(|&t| select(&points, t))
                .collect::<flowcodec::Result<Vec<_>>>()?;
            write_csv(BufWriter::new(fs::File::create(&out)?), &curve)?;
            let mut stdout = io::stdout().lock();
            for (t, p) in targets.iter().zip(&curve) {
                writeln!(stdout, "target {t}:1 -> ratio {:.1}:1, {:.2} dB", p.ratio, p.psnr_db)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidParams(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
