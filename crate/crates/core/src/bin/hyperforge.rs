use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperforge::curvatureflow::Branch;
use hyperforge::pipeline::{self, ExportFormat, RunConfig, SpaceName};
use hyperforge::Error;

#[derive(Parser)]
#[command(name = "hyperforge", version, about = "Two-principal-curvature hypersurfaces in CP2 and CH2")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the curvature flow and write the trajectory and curve files.
    Construct(RunArgs),
    /// Sample the hypersurface from constructed files and write a report.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Run construct and verify over evenly spaced directions at fixed p.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 8)]
        n_dirs: usize,
    },
    /// Convert a sample table to csv or json-mesh.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flags override values read from `--config`.
#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    space: Option<SpaceName>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    p: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    w_angle: Option<f64>,
    #[arg(long)]
    branch: Option<Branch>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t_span: Option<Vec<f64>>,
    #[arg(long)]
    ode_step: Option<f64>,
    #[arg(long)]
    ode_tol: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match (&self.config, self.space, self.c) {
            (Some(path), _, _) => RunConfig::load(path)?,
            (None, Some(space), Some(c)) => RunConfig::new(space, c),
            (None, _, None) => return Err(Error::Config("--c is required without --config".into())),
            (None, None, Some(c)) => RunConfig::new(if c > 0.0 { SpaceName::Cp2 } else { SpaceName::Ch2 }, c),
        };
        if let Some(s) = self.space {
            cfg.space = s;
        }
        if let Some(c) = self.c {
            cfg.c = c;
        }
        if let Some(p) = &self.p {
            let [a, b, c] = p[..] else { return Err(Error::Config("--p takes three comma-separated values".into())) };
            cfg.p = [a, b, c];
        }
        if let Some(w) = self.w_angle {
            cfg.w_angle = w;
        }
        if let Some(b) = self.branch {
            cfg.branch = b;
        }
        if let Some(t) = &self.t_span {
            let [lo, hi] = t[..] else { return Err(Error::Config("--t-span takes two comma-separated values".into())) };
            cfg.t_span = [lo, hi];
        }
        if let Some(v) = self.ode_step {
            cfg.ode_step = v;
        }
        if let Some(v) = self.ode_tol {
            cfg.ode_tol = v;
        }
        if let Some(g) = &self.grid {
            let [n_t, n_theta] = g[..] else { return Err(Error::Config("--grid takes n_t,n_theta".into())) };
            cfg.grid = [n_t, n_theta];
        }
        if let Some(v) = self.fd_step {
            cfg.fd_step = v;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.cmd {
        Cmd::Construct(args) => pipeline::cmd_construct(&args.resolve()?),
        Cmd::Verify { run, trajectory, curve } => {
            let (code, report) = pipeline::cmd_verify(&run.resolve()?, trajectory.as_deref(), curve.as_deref())?;
            println!("{}", report.diagnostic);
            Ok(code)
        }
        Cmd::Sweep { run, n_dirs } => {
            let (code, rows) = pipeline::cmd_sweep(&run.resolve()?, n_dirs)?;
            println!("{:>3} {:>8} {:>12} {:>5} {:>8}", "dir", "w_angle", "status", "pass", "min_b");
            for r in &rows {
                println!("{:>3} {:>8.4} {:>12} {:>5} {:>8.4}", r.index, r.w_angle, r.status, r.pass, r.min_b);
            }
            Ok(code)
        }
        Cmd::Export { input, format, out } => pipeline::cmd_export(&input, format.parse::<ExportFormat>()?, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            pipeline::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
