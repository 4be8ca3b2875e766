use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use grt_lab::config::ExperimentConfig;
use grt_lab::experiment::{run_edge_response, run_forward, run_predict, run_stability};
use grt_lab::validate::{run_validate, run_validate_kernel};
use grt_lab::{GrtError, Result};

/// Edge-response experiments for tangent-sphere Radon inversion.
#[derive(Parser)]
#[command(name = "grt-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample forward data over the reconstruction region and dump the grid.
    Forward(Common),
    /// Reconstruct across the boundary and compare with the prediction.
    ReconstructProfile(Common),
    /// Predicted edge response only.
    Predict(Common),
    /// Kernel property suite.
    ValidateKernel(Common),
    /// All property suites.
    ValidateAll(Common),
    /// Spread of the reconstruction around an off-boundary point.
    Stability(Common),
}

#[derive(Args)]
struct Common {
    /// key = value configuration file; defaults reproduce the reference run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (overrides `output` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Compare curves after mapping both to [0, 1].
    #[arg(long)]
    normalize: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output = out.display().to_string();
        }
        cfg.normalize |= self.normalize;
        Ok(cfg)
    }
}

fn create(path: &str) -> Result<BufWriter<File>> {
    let file = File::create(Path::new(path))
        .map_err(|e| GrtError::Io(io::Error::new(e.kind(), format!("{path}: {e}"))))?;
    Ok(BufWriter::new(file))
}

/// Exit code 1 when the checks ran but did not pass.
enum Outcome {
    Ok,
    Failed,
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Forward(c) => {
            let cfg = c.load()?;
            let grid = run_forward(&cfg)?;
            grid.write_to(create(&cfg.output)?)?;
            let [n1, n2, n3] = grid.index_box().extent();
            println!("nodes {} ({n1} x {n2} x {n3})", grid.node_count());
            println!("wrote {}", cfg.output);
            Ok(Outcome::Ok)
        }
        Command::ReconstructProfile(c) => {
            let cfg = c.load()?;
            let run = run_edge_response(&cfg)?;
            run.curve.write_csv(create(&cfg.output)?)?;
            let curve = &run.curve;
            println!("mc {:.6}", run.chart.mc);
            println!("grid nodes {}", run.node_count);
            println!("f_plus {:.6}", curve.f_plus);
            println!("f0 {}", curve.f0);
            if let (Some(first), Some(last)) = (curve.actual.first(), curve.actual.last()) {
                println!("jump {:.6}", last - first);
            }
            println!("max_abs_dev {:.6e}", curve.max_abs_dev);
            println!("rms_dev {:.6e}", curve.rms_dev);
            println!("wrote {}", cfg.output);
            Ok(Outcome::Ok)
        }
        Command::Predict(c) => {
            let cfg = c.load()?;
            let (chart, curve) = run_predict(&cfg)?;
            let mut w = create(&cfg.output)?;
            writeln!(w, "h,predicted")?;
            for (h, p) in curve.h.iter().zip(&curve.predicted) {
                writeln!(w, "{h:?},{p:?}")?;
            }
            w.flush()?;
            println!("mc {:.6}", chart.mc);
            println!("f_plus {:.6}", curve.f_plus);
            println!("wrote {}", cfg.output);
            Ok(Outcome::Ok)
        }
        Command::ValidateKernel(c) => {
            let report = run_validate_kernel(&c.load()?);
            println!("{report}");
            Ok(if report.passed() { Outcome::Ok } else { Outcome::Failed })
        }
        Command::ValidateAll(c) => {
            let report = run_validate(&c.load()?);
            println!("{report}");
            Ok(if report.passed() { Outcome::Ok } else { Outcome::Failed })
        }
        Command::Stability(c) => {
            let cfg = c.load()?;
            let report = run_stability(&cfg)?;
            let p = report.point;
            println!("point {:.6}, {:.6}, {:.6}", p.x, p.y, p.z);
            println!("tangency gap {:.3e}", report.tangency_gap);
            for l in &report.levels {
                println!(
                    "epsilon {} nodes {} f {:.6} spread {:.6e}",
                    l.epsilon, l.node_count, l.center_value, l.spread
                );
            }
            let passed = report.passed();
            println!("{}", if passed { "PASS" } else { "FAIL" });
            Ok(if passed { Outcome::Ok } else { Outcome::Failed })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("grt-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
