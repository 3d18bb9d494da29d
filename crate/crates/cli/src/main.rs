use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use omnitree_cli::exec::Parallel;
use omnitree_cli::export;
use omnitree_cli::pipeline::{self, Budget, EvalRecord, SweepSpec};
use omnitree_cli::shape::{Shape, ShapeSpec};
use omnitree_core::codec::storage_report;
use omnitree_core::driver::Mode;
use omnitree_core::metrics::{evaluate, Coding};

/// Approximate binary shapes with adaptive omnitrees or octrees.
#[derive(Parser)]
#[command(name = "omnitree", version, args_override_self = true)]
struct Cli {
    /// Worker threads; 0 uses one per core. Never changes results.
    #[arg(long, global = true, env = "OMNITREE_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

const SUBCOMMANDS: &[&str] = &["refine", "evaluate", "sweep", "export", "inspect"];

#[derive(Subcommand)]
enum Command {
    /// Refine a shape and write the tree and field blobs.
    Refine(RefineArgs),
    /// Measure stored artifacts against a shape; prints JSON.
    Evaluate(EvaluateArgs),
    /// Error/storage table over a ladder of leaf budgets; prints CSV.
    Sweep(SweepArgs),
    /// Write leaf geometry as OBJ boxes or a CSV table.
    Export(ExportArgs),
    /// Print statistics of a tree blob.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct ShapeArgs {
    /// cube, sphere, tetrahedron, rod, halfspace:<axis>:<c> or mesh:<path>
    #[arg(long)]
    shape: ShapeSpec,
    /// Spatial dimension (halfspaces only).
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Add a time axis along which the shape makes one turn.
    #[arg(long)]
    time_rotate: bool,
}

impl ShapeArgs {
    fn shape(&self) -> Shape {
        Shape { spec: self.shape.clone(), time_rotate: self.time_rotate, dim: self.dim }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Octree,
    Omnitree,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Octree => Mode::Octree,
            ModeArg::Omnitree => Mode::Omnitree,
        }
    }
}

#[derive(Args)]
struct RefineArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Omnitree)]
    mode: ModeArg,
    /// Stop once the tree has this many leaves.
    #[arg(long, default_value_t = 1024)]
    max_leaves: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Saltelli base samples per leaf (power of two).
    #[arg(long, default_value_t = pipeline::DEFAULT_N_S)]
    n_s: usize,
    /// Fill samples per leaf [default: 4096, or 8192 from 4-d up]
    #[arg(long)]
    n_g: Option<usize>,
    #[arg(long, default_value = "tree.omni")]
    tree: PathBuf,
    #[arg(long, default_value = "field.omng")]
    field: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, default_value = "tree.omni")]
    tree: PathBuf,
    #[arg(long, default_value = "field.omng")]
    field: PathBuf,
    /// Error samples [default: 2^18, or 2^24 from 4-d up]
    #[arg(long)]
    n_e: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "octree,omnitree")]
    modes: Vec<ModeArg>,
    /// Leaf budgets: `16..8192` for powers of two, or a comma list.
    #[arg(long, default_value = "16..8192")]
    ladder: String,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = pipeline::DEFAULT_N_S)]
    n_s: usize,
    #[arg(long)]
    n_g: Option<usize>,
    #[arg(long)]
    n_e: Option<usize>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Obj,
    Csv,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, default_value = "tree.omni")]
    tree: PathBuf,
    #[arg(long, default_value = "field.omng")]
    field: PathBuf,
    #[arg(long, value_enum)]
    format: Format,
    /// Cut a 4-d tree at this time and export the 3-d cross-section (OBJ only).
    #[arg(long)]
    slice_time: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long, default_value = "tree.omni")]
    tree: PathBuf,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn plural(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}

fn refine(args: RefineArgs, exec: &Parallel) -> Result<ExitCode> {
    let shape = args.shape.shape();
    let oracle = shape.build()?;
    let d = oracle.dim();
    let budget = Budget { n_s: args.n_s, n_g: args.n_g.unwrap_or(pipeline::default_n_g(d)), seed: args.seed };
    let arts = pipeline::refine_shape(&oracle, args.mode.into(), args.max_leaves, budget, exec)?;
    arts.write(&args.tree, &args.field)?;
    let stats = arts.tree().node_stats();
    let levels: Vec<String> = stats.max_level.iter().map(u8::to_string).collect();
    println!(
        "{}, {}, max level {}, mean leaf depth {:.3}",
        plural(stats.nodes, "node", "nodes"),
        plural(stats.leaves, "leaf", "leaves"),
        levels.join(" "),
        stats.mean_leaf_depth
    );
    info!("wrote {} and {}", args.tree.display(), args.field.display());
    if arts.perfectly_resolved() {
        warn!(
            "{} is perfectly resolved at {}; stopped below the budget of {}",
            shape.spec,
            plural(stats.leaves, "leaf", "leaves"),
            args.max_leaves
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn evaluate_cmd(args: EvaluateArgs, exec: &Parallel) -> Result<ExitCode> {
    let oracle = args.shape.shape().build()?;
    let (tree, field, coding) = pipeline::read_artifacts(&args.tree, &args.field)?;
    if tree.dim() != oracle.dim() {
        anyhow::bail!("tree is {}-d but the shape is {}-d", tree.dim(), oracle.dim());
    }
    let n_e = args.n_e.unwrap_or(pipeline::default_n_e(tree.dim()));
    let r = evaluate(&tree, &field, &oracle, coding, n_e, args.seed, exec)?;
    println!("{}", serde_json::to_string(&EvalRecord::from(r))?);
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: SweepArgs, exec: &Parallel) -> Result<ExitCode> {
    let shape = args.shape.shape();
    let oracle = shape.build()?;
    let d = oracle.dim();
    let modes: Vec<Mode> = args.modes.iter().map(|&m| m.into()).collect();
    let ladder = pipeline::parse_ladder(&args.ladder)?;
    let name = shape.spec.to_string();
    let spec = SweepSpec {
        shape_name: &name,
        modes: &modes,
        ladder: &ladder,
        seeds: &args.seeds,
        n_s: args.n_s,
        n_g: args.n_g.unwrap_or(pipeline::default_n_g(d)),
        n_e: args.n_e.unwrap_or(pipeline::default_n_e(d)),
    };
    let rows = pipeline::sweep(&oracle, &spec, exec)?;
    let mut w = output(args.out.as_deref())?;
    pipeline::write_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn export_cmd(args: ExportArgs) -> Result<ExitCode> {
    let (tree, field, _) = pipeline::read_artifacts(&args.tree, &args.field)?;
    let mut w = output(args.out.as_deref())?;
    match args.format {
        Format::Csv => {
            if args.slice_time.is_some() {
                anyhow::bail!("--slice-time only applies to OBJ export");
            }
            export::write_csv(&tree, &field, &mut w)?;
        }
        Format::Obj => {
            let leaves = match (tree.dim(), args.slice_time) {
                (3, None) => tree.leaf_rectangles().into_iter().zip(field).collect(),
                (4, Some(t)) => export::time_slice(&tree, &field, t)?,
                (4, None) => anyhow::bail!("4-d trees need --slice-time for OBJ export"),
                (d, _) => anyhow::bail!("OBJ export needs a 3-d tree or a sliced 4-d tree, got {d}-d"),
            };
            export::write_obj(&leaves, &mut w)?;
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn inspect(args: InspectArgs) -> Result<ExitCode> {
    let (tree, coding) = pipeline::read_tree(&args.tree)?;
    let stats = tree.node_stats();
    let storage = storage_report(&tree, 1);
    let bits = match coding {
        Coding::Omnitree => storage.tree_bits_omnitree,
        Coding::Octree => tree.node_count() as u64,
    };
    let normalized = if tree.is_normalized() { "normalized" } else { "not normalized" };
    println!(
        "{}, {}, {normalized}, {bits} tree bits",
        plural(stats.nodes, "node", "nodes"),
        plural(stats.leaves, "leaf", "leaves")
    );
    let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(" ");
    println!("dimension: {}", tree.dim());
    println!("max level: {}", join(&mut stats.max_level.iter().map(u8::to_string)));
    println!("mean leaf depth: {:.3}", stats.mean_leaf_depth);
    let octree = storage.tree_bits_octree.map_or("n/a".to_owned(), |b| b.to_string());
    println!(
        "storage: omnitree coding {} bits, octree coding {octree} bits, data {} bits",
        storage.tree_bits_omnitree, storage.data_bits
    );
    println!("splits per dimension: {}", join(&mut tree.split_histogram().iter().map(u64::to_string)));
    Ok(ExitCode::SUCCESS)
}

fn run() -> Result<ExitCode> {
    let args = omnitree_cli::config::expand(std::env::args_os().collect(), SUBCOMMANDS)?;
    // Exit code 2 is reserved for the perfectly-resolved warning, so usage
    // errors exit with 1 like every other failure.
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            e.print()?;
            return Ok(if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS });
        }
    };
    let exec = Parallel::new(cli.threads)?;
    info!("using {} threads", exec.threads());
    match cli.command {
        Command::Refine(a) => refine(a, &exec),
        Command::Evaluate(a) => evaluate_cmd(a, &exec),
        Command::Sweep(a) => sweep(a, &exec),
        Command::Export(a) => export_cmd(a),
        Command::Inspect(a) => inspect(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
