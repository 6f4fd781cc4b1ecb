use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use convex_cli::config::{SweepConfig, ToleranceOverrides};
use convex_cli::{emit_plot_data, run, write_outputs, BodySource, CliError, CliResult, Command, ExperimentConfig, PositionMode};
use convex_core::{ModelFamily, ModelSpec};

#[derive(Parser)]
#[command(name = "convex", version, about = "Convex body computations and inequality checks")]
struct Cli {
    /// Directory for bundle.json, CSV views and bodies (default: $CONVEX_OUT_DIR or ./out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Override the vertex/halfspace deduplication tolerance.
    #[arg(long, global = true)]
    dedup_tol: Option<f64>,
    /// Override the dimension cap for exact volumes.
    #[arg(long, global = true)]
    exact_cap: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct BodyArgs {
    /// Body JSON file (repeatable).
    #[arg(long = "body")]
    bodies: Vec<PathBuf>,
    /// Model family instead of a file.
    #[arg(long)]
    family: Option<ModelFamily>,
    #[arg(long)]
    n: Option<usize>,
    /// Vertex count for random polytopes.
    #[arg(long)]
    m: Option<usize>,
    /// Seed of the random polytope model.
    #[arg(long, default_value_t = 0)]
    model_seed: u64,
}

impl BodyArgs {
    fn sources(&self) -> CliResult<Vec<BodySource>> {
        let mut out: Vec<BodySource> = self.bodies.iter().map(|f| BodySource::File { file: f.clone() }).collect();
        if let Some(family) = self.family {
            let n = self.n.ok_or_else(|| CliError::invalid("n", "required with --family"))?;
            let mut spec = ModelSpec::new(family, n);
            spec.m = self.m;
            spec.seed = self.model_seed;
            out.push(BodySource::Model(spec));
        }
        Ok(out)
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Centre,
    Santalo,
    Isotropic,
    Regularize,
    RegularizeCentred,
}

impl From<ModeArg> for PositionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Centre => PositionMode::Barycentre,
            ModeArg::Santalo => PositionMode::Santalo,
            ModeArg::Isotropic => PositionMode::Isotropic,
            ModeArg::Regularize => PositionMode::Regularize,
            ModeArg::RegularizeCentred => PositionMode::RegularizeCentred,
        }
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}"))).collect()
}

fn parse_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',').map(|x| x.trim().parse::<usize>().map_err(|e| format!("{x}: {e}"))).collect()
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a model body.
    Gen {
        #[arg(long)]
        family: ModelFamily,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the body JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Put bodies in a standard position.
    Position {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, value_enum, default_value = "santalo")]
        mode: ModeArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_grid, default_value = "2,4,8,16,32")]
        tgrid: ::std::vec::Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Also write the bundle JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sample projection and section volume radii.
    Scan {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long)]
        l: usize,
        /// Random subspaces per body.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Covering-number profile of K by dilates of L.
    Cover {
        /// K then L; L defaults to the Euclidean ball.
        #[arg(long, num_args = 1..=2, required = true)]
        pair: Vec<PathBuf>,
        #[arg(long, value_parser = parse_grid, default_value = "2,4,8,16,32")]
        tgrid: ::std::vec::Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate inequalities on bodies or over a model family.
    Check {
        /// Name, comma-separated list, `constant-free` or `all`.
        #[arg(long)]
        inequality: String,
        #[command(flatten)]
        body: BodyArgs,
        /// Subspaces per body (bodies per dimension in a sweep).
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        l: Option<usize>,
        /// Sweep this family over --ns and --ls.
        #[arg(long)]
        sweep_family: Option<ModelFamily>,
        #[arg(long, value_parser = parse_list)]
        ns: Option<::std::vec::Vec<usize>>,
        #[arg(long, value_parser = parse_list)]
        ls: Option<::std::vec::Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-emit views of an existing bundle.
    Report {
        #[arg(long)]
        bundle: PathBuf,
        /// View to emit (default: all non-empty).
        #[arg(long)]
        view: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a JSON experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Config plus an optional single-file artefact: (path, view or "bundle"/"body").
fn build(cli: &Cli) -> CliResult<(ExperimentConfig, Option<(PathBuf, String)>)> {
    let (mut c, extra) = match &cli.cmd {
        Cmd::Gen { family, n, m, seed, out } => {
            let mut c = ExperimentConfig::new(Command::Gen);
            let mut spec = ModelSpec::new(*family, *n);
            spec.m = *m;
            spec.seed = *seed;
            c.bodies.push(BodySource::Model(spec));
            c.seed = Some(*seed);
            (c, out.clone().map(|p| (p, "body".to_string())))
        }
        Cmd::Position { body, mode, seed, tgrid, samples, report } => {
            let mut c = ExperimentConfig::new(Command::Position);
            c.bodies = body.sources()?;
            c.position = Some((*mode).into());
            c.seed = *seed;
            c.tgrid = tgrid.clone();
            c.samples = *samples;
            (c, report.clone().map(|p| (p, "bundle".to_string())))
        }
        Cmd::Scan { body, l, samples, seed, out } => {
            let mut c = ExperimentConfig::new(Command::Scan);
            c.bodies = body.sources()?;
            c.l = Some(*l);
            c.subspaces = *samples;
            c.seed = *seed;
            (c, out.clone().map(|p| (p, "scan".to_string())))
        }
        Cmd::Cover { pair, tgrid, samples, seed, out } => {
            let mut c = ExperimentConfig::new(Command::Cover);
            c.bodies.push(BodySource::File { file: pair[0].clone() });
            c.against = pair.get(1).map(|f| BodySource::File { file: f.clone() });
            c.tgrid = tgrid.clone();
            c.samples = *samples;
            c.seed = *seed;
            (c, out.clone().map(|p| (p, "regularity".to_string())))
        }
        Cmd::Check { inequality, body, samples, seed, l, sweep_family, ns, ls, out } => {
            let mut c = ExperimentConfig::new(Command::Check);
            c.inequality = Some(inequality.clone());
            c.bodies = body.sources()?;
            c.subspaces = *samples;
            c.seed = *seed;
            c.l = *l;
            if let Some(family) = sweep_family {
                c.sweep = Some(SweepConfig { family: *family, ns: ns.clone().unwrap_or_default(), ls: ls.clone().unwrap_or_default() });
            }
            let view = if c.sweep.is_some() && c.bodies.is_empty() { "sweep" } else { "inequalities" };
            (c, out.clone().map(|p| (p, view.to_string())))
        }
        Cmd::Report { bundle, view, out } => {
            let mut c = ExperimentConfig::new(Command::Report);
            c.bundle = Some(bundle.clone());
            if let Some(v) = view {
                c.views = vec![v.clone()];
            }
            (c, out.clone().zip(view.clone()))
        }
        Cmd::Run { config } => (ExperimentConfig::from_json_file(config)?, None),
    };
    if cli.out_dir.is_some() {
        c.out_dir = cli.out_dir.clone();
    }
    if cli.dedup_tol.is_some() || cli.exact_cap.is_some() {
        c.tolerances = Some(ToleranceOverrides { dedup: cli.dedup_tol, exact_cap: cli.exact_cap });
    }
    Ok((c, extra))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn execute(cli: &Cli) -> CliResult<i32> {
    let (config, extra) = build(cli)?;
    let mut bundle = run(&config)?;
    if config.command == Command::Report {
        // Emit the stored records under the views asked for now.
        bundle.config.views = config.views.clone();
    }
    let dir = config.resolved_out_dir();
    write_outputs(&bundle, &dir)?;
    if let Some((path, what)) = extra {
        let text = match what.as_str() {
            "bundle" => bundle.to_json(),
            "body" => convex_core::BodyHandle::from_file(&bundle.records.bodies[0].body)?.to_json(),
            view => emit_plot_data(&bundle, view)?,
        };
        write_file(&path, &text)?;
    }
    let s = &bundle.summary;
    eprintln!(
        "{} records, {} failures, {} errors, {} skipped -> {}",
        s.records,
        s.failures,
        s.errors.len(),
        s.skipped.len(),
        dir.display()
    );
    for e in &s.errors {
        eprintln!("error: {e}");
    }
    Ok(bundle.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
