use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use romtop::bench::{
    builtin_problem, export_density, load_or_compute_reference, parse_run_csv, report_table, run,
    DensityField, DensityFormat, Method, RunConfig, RunReport, BUILTIN_PROBLEMS,
};
use romtop::Error;

#[derive(Parser)]
#[command(name = "romtop", version, about = "Topology optimization with trust-region reduced-order models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on one problem and write run.csv and table.csv.
    Run(RunArgs),
    /// Run every problem with every method.
    Bench(RunArgs),
    /// Convert a density CSV to PGM, VTK or CSV.
    Export {
        input: PathBuf,
        #[arg(long, default_value = "pgm")]
        format: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Build a convergence table from run logs.
    Table {
        logs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Compute (or load) the cached reference value J*.
    Reference {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Flat TOML file with any subset of the run configuration keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "mbb")]
    problem: String,
    #[arg(long)]
    tau: Option<f64>,
    /// Cutoff tolerances, comma separated.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Fail instead of computing J* when no cached reference exists.
    #[arg(long)]
    no_reference_run: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Write density snapshots every N iterations.
    #[arg(long)]
    snapshot_every: Option<usize>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "rom-tr-res")]
    method: String,
}

impl Common {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = &self.eps {
            cfg.epsilons = v.clone();
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.nmax {
            cfg.nmax = v;
        }
        if let Some(v) = self.window {
            cfg.window = v;
        }
        if let Some(v) = self.nu {
            cfg.nu = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.snapshot_every {
            cfg.snapshot_every = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_outputs(dir: &Path, report: &RunReport, epsilons: &[f64]) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("run.csv"), report.to_csv())?;
    let table = report_table(std::slice::from_ref(report), epsilons);
    std::fs::write(dir.join("table.csv"), &table.csv)?;
    for (it, rho) in &report.snapshots {
        let field = DensityField::new(report.nx, report.ny, rho.clone())?;
        for fmt in [DensityFormat::Pgm, DensityFormat::Vtk] {
            field.write(&dir.join(format!("density_{it:04}.{}", fmt.extension())), fmt)?;
        }
    }
    let field = DensityField::new(report.nx, report.ny, report.final_rho.clone())?;
    field.write(&dir.join("density_final.pgm"), DensityFormat::Pgm)?;
    field.write(&dir.join("density_final.csv"), DensityFormat::Csv)?;
    Ok(())
}

fn run_one(problem: &str, method: Method, common: &Common, cfg: &RunConfig, dir: &Path) -> Result<RunReport, Error> {
    let spec = builtin_problem(problem)?;
    let reference = load_or_compute_reference(&common.out, &spec, cfg, !common.no_reference_run)?;
    println!("{}", spec.describe());
    println!("J* = {:.6} ({} HDM-MMA iterations)", reference.j_star, reference.iterations);
    let report = run(&spec, method, cfg, Some(reference.j_star))?;
    write_outputs(dir, &report, &cfg.epsilons)?;
    print!("{}", report_table(std::slice::from_ref(&report), &cfg.epsilons).text);
    println!("wall time: {:.1} s", report.wall_time.as_secs_f64());
    Ok(report)
}

fn main_inner(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.common.config()?;
            let method: Method = args.method.parse()?;
            let dir = args.common.out.join(format!("{}_{}", args.common.problem, method));
            run_one(&args.common.problem, method, &args.common, &cfg, &dir)?;
        }
        Command::Bench(args) => {
            let cfg = args.common.config()?;
            let mut reports = Vec::new();
            for problem in BUILTIN_PROBLEMS.iter().filter(|p| **p != "mbb-small") {
                for method in Method::ALL {
                    let dir = args.common.out.join(format!("{problem}_{method}"));
                    reports.push(run_one(problem, method, &args.common, &cfg, &dir)?);
                }
            }
            let table = report_table(&reports, &cfg.epsilons);
            std::fs::write(args.common.out.join("table.csv"), &table.csv)?;
            print!("{}", table.text);
        }
        Command::Export { input, format, output } => {
            let field = DensityField::from_csv(&std::fs::read_to_string(input)?)?;
            export_density(&field, &output, format.parse()?)?;
        }
        Command::Table { logs, common } => {
            let cfg = common.config()?;
            let mut reports = Vec::new();
            for p in logs {
                reports.push(parse_run_csv(&std::fs::read_to_string(&p)?, &cfg.epsilons, cfg.nu)?);
            }
            if reports.is_empty() {
                return Err(Error::InvalidInput("no run logs given".into()));
            }
            let table = report_table(&reports, &cfg.epsilons);
            std::fs::create_dir_all(&common.out)?;
            std::fs::write(common.out.join("table.csv"), &table.csv)?;
            print!("{}", table.text);
        }
        Command::Reference { common } => {
            let cfg = common.config()?;
            let spec = builtin_problem(&common.problem)?;
            let r = load_or_compute_reference(&common.out, &spec, &cfg, !common.no_reference_run)?;
            println!("{}", spec.describe());
            println!("J* = {:.6} after {} HDM-MMA iterations", r.j_star, r.iterations);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
