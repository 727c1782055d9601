//! `hvnet`: exact hypervolume, the three approximators, data generation,
//! training, evaluation and the benchmark harness.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hvnet_core::bench::{
    self, approximation_error, line_grid, point_grid, sig9, Approximator, HvNetMethod, LineMethod, PointMethod,
};
use hvnet_core::dataset::{generate_labeled_dataset, read_dataset, read_sets, write_dataset, GenConfig};
use hvnet_core::hvnet::{load_model, save_model, train_with, write_trace, Loss, TrainConfig, DEFAULT_HIDDEN};
use hvnet_core::mc::{hv_mc_with, UniformSampler};
use hvnet_core::transform::{approx_hv_any, normalize, Orientation};
use hvnet_core::{generate_unv_directions, hv_exact, hv_line, rng, ReferencePoint, SolutionSet};

#[derive(Parser)]
#[command(name = "hvnet", version, about = "Exact and approximate hypervolume")]
struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact hypervolume of every set in a file.
    Hv(HvArgs),
    /// Approximate hypervolume of every set in a file.
    Approx(ApproxArgs),
    /// Generate labeled random non-dominated sets.
    GenData(GenArgs),
    /// Train an HV-Net model.
    Train(TrainArgs),
    /// Per-set HV-Net predictions and errors.
    Eval(EvalArgs),
    /// Error-versus-runtime benchmark over test groups.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Set file (JSON lines).
    #[arg(long = "in")]
    input: PathBuf,
    /// Reference point, comma separated. Defaults to (1, ..., 1).
    #[arg(long = "ref", value_delimiter = ',')]
    reference: Option<Vec<f64>>,
    /// Treat objectives as maximized.
    #[arg(long)]
    maximize: bool,
}

impl ProblemArgs {
    fn orientation(&self) -> Orientation {
        if self.maximize {
            Orientation::Maximize
        } else {
            Orientation::Minimize
        }
    }

    fn reference_for(&self, set: &SolutionSet) -> Result<ReferencePoint> {
        Ok(match &self.reference {
            Some(r) => ReferencePoint::new(r.clone())?,
            None if self.maximize => bail!("--maximize needs an explicit --ref"),
            None => ReferencePoint::unit(set.dim()),
        })
    }
}

#[derive(Args)]
struct HvArgs {
    #[command(flatten)]
    problem: ProblemArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Point,
    Line,
    Hvnet,
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum)]
    method: Method,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 1000)]
    k: usize,
    /// Number of line directions.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// HV-Net model file (required for --method hvnet).
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 100)]
    max_size: usize,
    #[arg(long, default_value_t = 1000)]
    pool_size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled training data.
    #[arg(long)]
    data: PathBuf,
    /// Where to write the model.
    #[arg(long)]
    out: PathBuf,
    /// log-mse, mse or mape.
    #[arg(long, default_value = "log-mse")]
    loss: Loss,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 100)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = DEFAULT_HIDDEN)]
    hidden: usize,
    /// Per-epoch loss trace (CSV).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Per-set CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Labeled test-group files; groups of equal m are numbered in order.
    #[arg(long, value_delimiter = ',', required = true)]
    groups: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "point,line,hvnet")]
    methods: Vec<String>,
    /// Model files, one per objective count.
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    /// Sample counts, as a list (100,200) or a range (100:2000:100).
    #[arg(long)]
    k_grid: Option<String>,
    /// Direction counts, as a list or a range.
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON summary averaged over groups.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Hv(args) => cmd_hv(args),
        Command::Approx(args) => cmd_approx(args, seed),
        Command::GenData(args) => cmd_gen(args, seed),
        Command::Train(args) => cmd_train(args, seed),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args, seed),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_hv(args: HvArgs) -> Result<()> {
    let mut out = output(None)?;
    for record in read_sets(&args.problem.input)? {
        let r = args.problem.reference_for(&record.set)?;
        let hv = match args.problem.orientation() {
            Orientation::Minimize => hv_exact(&record.set, &r)?,
            Orientation::Maximize => {
                let p = normalize(&record.set, &r, Orientation::Maximize)?;
                p.scale * hv_exact(&p.set, &p.reference())?
            }
        };
        writeln!(out, "{}", sig9(hv))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_approx(args: ApproxArgs, seed: u64) -> Result<()> {
    let records = read_sets(&args.problem.input)?;
    let orientation = args.problem.orientation();
    let model = match (args.method, &args.model) {
        (Method::Hvnet, Some(path)) => Some(load_model(path).with_context(|| format!("loading {}", path.display()))?),
        (Method::Hvnet, None) => bail!("--method hvnet needs --model"),
        _ => None,
    };
    let mut out = output(None)?;
    for (i, record) in records.iter().enumerate() {
        let r = args.problem.reference_for(&record.set)?;
        let estimate = match args.method {
            Method::Hvnet => approx_hv_any(model.as_ref().expect("loaded above"), &record.set, &r, orientation)?,
            Method::Point | Method::Line => {
                let p = normalize(&record.set, &r, orientation)?;
                let unit = p.reference();
                let canonical = match args.method {
                    Method::Point => {
                        let mut sampler = UniformSampler::from_rng(rng::stream(seed, i as u64));
                        hv_mc_with(&p.set, &unit, args.k, &mut sampler)?
                    }
                    _ => hv_line(&p.set, &unit, &generate_unv_directions(args.n, p.set.dim(), seed)?)?,
                };
                p.scale * canonical
            }
        };
        writeln!(out, "{}", sig9(estimate))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_gen(args: GenArgs, seed: u64) -> Result<()> {
    let cfg = GenConfig {
        m: args.m,
        num_sets: args.count,
        max_size: args.max_size,
        pool_size: args.pool_size,
        seed,
    };
    let data = generate_labeled_dataset(&cfg)?;
    write_dataset(&args.out, &data)?;
    eprintln!("wrote {} sets to {}", data.len(), args.out.display());
    Ok(())
}

fn cmd_train(args: TrainArgs, seed: u64) -> Result<()> {
    let data = read_dataset(&args.data)?;
    let config = TrainConfig {
        loss: args.loss,
        learning_rate: args.lr,
        batch_size: args.batch_size,
        epochs: args.epochs,
        seed,
        hidden: args.hidden,
        train_path: Some(args.data.clone()),
        valid_path: None,
    };
    let outcome = train_with(&config, &data, |epoch, loss| {
        eprintln!("epoch {:>4}  {} {}", epoch + 1, config.loss.name(), sig9(loss));
    })?;
    save_model(&outcome.model, &args.out)?;
    if let Some(path) = &args.trace {
        write_trace(File::create(path)?, &outcome.trace)?;
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let model = load_model(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let records = read_sets(&args.data)?;
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "index,n,exact,predicted,error")?;
    let mut total = 0.0;
    for (i, record) in records.iter().enumerate() {
        let exact = match record.hv {
            Some(hv) => hv,
            None => hv_exact(&record.set, &ReferencePoint::unit(record.set.dim()))?,
        };
        let predicted = model.predict(&record.set)?;
        let error = approximation_error(predicted, exact)?;
        total += error;
        writeln!(out, "{i},{},{},{},{}", record.set.len(), sig9(exact), sig9(predicted), sig9(error))?;
    }
    out.flush()?;
    if !records.is_empty() {
        eprintln!("mean error {} over {} sets", sig9(total / records.len() as f64), records.len());
    }
    Ok(())
}

/// `a,b,c` or `start:end:step` (inclusive).
fn parse_grid(text: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = text.split(':').collect();
    let grid: Vec<usize> = match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step): (usize, usize, usize) = (start.parse()?, end.parse()?, step.parse()?);
            if step == 0 {
                bail!("grid step must be positive");
            }
            (start..=end).step_by(step).collect()
        }
        [list] => list.split(',').map(|v| v.trim().parse()).collect::<Result<_, _>>()?,
        _ => bail!("bad grid '{text}'"),
    };
    if grid.is_empty() || grid.contains(&0) {
        bail!("grid '{text}' must hold positive values");
    }
    Ok(grid)
}

fn cmd_bench(args: BenchArgs, seed: u64) -> Result<()> {
    let groups = bench::load_groups(&args.groups)?;
    let k_grid = args.k_grid.as_deref().map(parse_grid).transpose()?.unwrap_or_else(point_grid);
    let n_grid = args.n_grid.as_deref().map(parse_grid).transpose()?.unwrap_or_else(line_grid);

    let mut methods: Vec<Box<dyn Approximator>> = Vec::new();
    for name in &args.methods {
        match name.as_str() {
            "point" => methods.extend(k_grid.iter().map(|&k| Box::new(PointMethod { k, seed }) as Box<dyn Approximator>)),
            "line" => methods.extend(n_grid.iter().map(|&n| Box::new(LineMethod::new(n, seed)) as Box<dyn Approximator>)),
            "hvnet" => {
                if args.models.is_empty() {
                    bail!("method hvnet needs at least one --model");
                }
                let models = args
                    .models
                    .iter()
                    .map(|p| load_model(p).with_context(|| format!("loading {}", p.display())))
                    .collect::<Result<Vec<_>>>()?;
                let id = args
                    .models
                    .iter()
                    .map(|p| p.file_stem().unwrap_or_default().to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join("+");
                methods.push(Box::new(HvNetMethod::new(id, models)));
            }
            other => bail!("unknown method '{other}' (expected point, line or hvnet)"),
        }
    }

    let records = bench::run_benchmark(&mut methods, &groups)?;
    bench::write_records_csv(File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?, &records)?;
    if let Some(path) = &args.summary {
        serde_json::to_writer_pretty(File::create(path)?, &bench::summarize(&records))?;
    }
    eprintln!("wrote {} rows to {}", records.len(), args.out.display());
    Ok(())
}
