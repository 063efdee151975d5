use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fairfn::formats::{fmt_float, read_groups, read_partition, write_groups, write_partition, write_trace};
use fairfn::generate::{self, LfrParams};
use fairfn::ingest::{knn_graph, read_dataset, sample_rows, standardize};
use fairfn::metrics::Report;
use fairfn::{load_edge_list, GroupAssignment, Graph, Mode, Partition};

/// Fairness-aware modularity community detection.
#[derive(Parser)]
#[command(name = "fairfn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic graphs, group assignments or feature tables.
    #[command(subcommand)]
    Generate(Generate),
    /// Build a k-nearest-neighbour graph from a feature CSV.
    Knn(KnnArgs),
    /// Run FN or FairFN on a graph.
    Detect(DetectArgs),
    /// Score a partition.
    Eval(EvalArgs),
}

#[derive(Subcommand)]
enum Generate {
    /// LFR-style benchmark graph with planted communities.
    Lfr(LfrArgs),
    /// Group labels drawn i.i.d. from a distribution.
    GroupsIid(GroupsIidArgs),
    /// Binary groups with a per-community bias.
    GroupsBiased(GroupsBiasedArgs),
    /// Isotropic Gaussian clusters.
    Blobs(BlobsArgs),
}

#[derive(Args)]
struct LfrArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Degree-distribution exponent.
    #[arg(long, default_value_t = 2.0)]
    tau1: f64,
    /// Community-size exponent.
    #[arg(long, default_value_t = 1.1)]
    tau2: f64,
    /// Mixing parameter.
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    #[arg(long, default_value_t = 20)]
    min_deg: usize,
    #[arg(long, default_value_t = 100)]
    max_deg: usize,
    #[arg(long)]
    min_community: Option<usize>,
    #[arg(long)]
    max_community: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_graph: PathBuf,
    /// Planted communities as a partition CSV.
    #[arg(long)]
    out_truth: PathBuf,
}

#[derive(Args)]
struct GroupsIidArgs {
    #[arg(long)]
    n: usize,
    /// Comma-separated group probabilities.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.5")]
    dist: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GroupsBiasedArgs {
    /// Partition CSV with the communities to bias.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    p_low: f64,
    #[arg(long, default_value_t = 0.8)]
    p_high: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BlobsArgs {
    #[arg(long, default_value_t = 3000)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    centers: usize,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// Standard deviation of each cluster.
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the generating cluster of each point as a partition CSV.
    #[arg(long)]
    out_labels: Option<PathBuf>,
}

#[derive(Args)]
struct KnnArgs {
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated feature columns; all other columns by default.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Use raw feature values instead of z-scores.
    #[arg(long)]
    no_standardize: bool,
    /// Keep a uniform sample of this many rows.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Column holding the protected attribute.
    #[arg(long, requires = "out_groups")]
    group_column: Option<String>,
    /// Groups file for the rows kept, from `--group-column`.
    #[arg(long, requires = "group_column")]
    out_groups: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Fn,
    Fairfn,
}

impl From<Algo> for Mode {
    fn from(a: Algo) -> Mode {
        match a {
            Algo::Fn => Mode::Fn,
            Algo::Fairfn => Mode::FairFn,
        }
    }
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long, value_enum, default_value = "fairfn")]
    algo: Algo,
    /// Stopping slack: merge while the best gain exceeds -alpha/(2m).
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    groups: PathBuf,
    #[arg(long)]
    out_partition: PathBuf,
    #[arg(long)]
    out_trace: Option<PathBuf>,
    /// Summary file; printed to stdout when omitted.
    #[arg(long)]
    out_summary: Option<PathBuf>,
    /// Also write the highest-Q prefix of the merge sequence.
    #[arg(long)]
    best_q: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    groups: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    /// Ground-truth partition CSV; adds NMI.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

/// Tolerance of the post-run audit against from-scratch evaluation.
const AUDIT_TOL: f64 = 1e-9;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 for bad arguments or mismatched inputs, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let usage = err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<fairfn::Error>(),
            Some(
                fairfn::Error::InvalidArgument(_)
                    | fairfn::Error::MissingColumn(_)
                    | fairfn::Error::SizeMismatch { .. }
            )
        )
    });
    if usage {
        2
    } else {
        1
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(g) => match g {
            Generate::Lfr(a) => cmd_lfr(a),
            Generate::GroupsIid(a) => cmd_groups_iid(a),
            Generate::GroupsBiased(a) => cmd_groups_biased(a),
            Generate::Blobs(a) => cmd_blobs(a),
        },
        Command::Knn(a) => cmd_knn(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_graph(path: &Path) -> Result<Graph> {
    load_edge_list(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_groups(path: &Path) -> Result<GroupAssignment> {
    read_groups(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_partition(path: &Path) -> Result<Partition> {
    read_partition(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_lfr(a: LfrArgs) -> Result<()> {
    let params = LfrParams {
        n: a.n,
        tau1: a.tau1,
        tau2: a.tau2,
        mu: a.mu,
        min_deg: a.min_deg,
        max_deg: a.max_deg,
        min_community: a.min_community,
        max_community: a.max_community,
        seed: a.seed,
    };
    let out = generate::lfr(&params)?;
    write(&a.out_graph, &out.graph.to_edge_list()?)?;
    write(&a.out_truth, &write_partition(&out.truth))
}

fn cmd_groups_iid(a: GroupsIidArgs) -> Result<()> {
    let ga = generate::assign_groups_iid(a.n, &a.dist, a.seed)?;
    write(&a.out, &write_groups(&ga))
}

fn cmd_groups_biased(a: GroupsBiasedArgs) -> Result<()> {
    let truth = load_partition(&a.truth)?;
    let ga = generate::assign_groups_biased(&truth, a.p_low, a.p_high, a.seed)?;
    write(&a.out, &write_groups(&ga))
}

fn cmd_blobs(a: BlobsArgs) -> Result<()> {
    let blobs = generate::gaussian_blobs(a.n, a.centers, a.dims, a.spread, a.seed)?;
    write(&a.out, &blobs.features.to_csv())?;
    if let Some(path) = &a.out_labels {
        write(path, &write_partition(&Partition::from_labels(&blobs.labels)))?;
    }
    Ok(())
}

fn cmd_knn(a: KnnArgs) -> Result<()> {
    let file = fs::File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let data = read_dataset(file, a.columns.as_deref(), a.group_column.as_deref())
        .with_context(|| format!("reading {}", a.input.display()))?;
    let (mut features, mut labels) = (data.features, data.labels);
    if let Some(count) = a.sample {
        let rows = sample_rows(features.rows(), count, a.seed)?;
        features = features.select_rows(&rows);
        labels = labels.map(|l| rows.iter().map(|&i| l[i].clone()).collect());
    }
    if !a.no_standardize {
        features = standardize(&features);
    }
    let graph = knn_graph(&features, a.k)?;
    write(&a.out, &graph.to_edge_list()?)?;
    if let (Some(labels), Some(path)) = (labels, &a.out_groups) {
        write(path, &write_groups(&groups_from_labels(&labels)?))?;
    }
    Ok(())
}

/// Dense group ids in first-appearance order of the raw labels.
fn groups_from_labels(labels: &[String]) -> Result<GroupAssignment> {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let dense: Vec<usize> = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(l.as_str()).or_insert(next)
        })
        .collect();
    Ok(GroupAssignment::from_dense(dense, ids.len())?)
}

fn cmd_detect(a: DetectArgs) -> Result<()> {
    let graph = load_graph(&a.graph)?;
    let groups = load_groups(&a.groups)?;
    let mode = Mode::from(a.algo);
    if mode == Mode::FairFn && groups.r() == 1 {
        eprintln!("warning: a single protected group makes every merge ΔQ^P = 0, so FairFN keeps singletons");
    }

    let started = Instant::now();
    let detection = fairfn::run(&graph, &groups, a.alpha, mode)?;
    let runtime = started.elapsed().as_secs_f64();
    let trace = &detection.trace;
    let (q, qp) = trace
        .records
        .last()
        .map_or((trace.start.q, trace.start.qp), |r| (r.q, r.qp));

    write(&a.out_partition, &write_partition(&detection.partition))?;
    if let Some(path) = &a.out_trace {
        write(path, &write_trace(trace))?;
    }

    // Re-read what was written and recompute everything from scratch.
    let written = load_partition(&a.out_partition)?;
    if written != detection.partition {
        return Err(anyhow!("internal consistency failure: partition file does not round-trip"));
    }
    let report = Report::evaluate(&graph, &groups, &written, None)?;
    for (name, incremental, scratch) in [("Q", q, report.q), ("Q^P", qp, report.qp)] {
        if (incremental - scratch).abs() > AUDIT_TOL {
            return Err(anyhow!(
                "internal consistency failure: accumulated {name} = {incremental} but recomputed {name} = {scratch}"
            ));
        }
    }

    let mut summary = String::new();
    let mut line = |key: &str, value: String| {
        let _ = writeln!(summary, "{key}: {value}");
    };
    line("algo", mode.to_string());
    line("alpha", fmt_float(a.alpha));
    line("n", graph.n().to_string());
    line("edges", graph.edge_count().to_string());
    line("groups", groups.r().to_string());
    line("merges", trace.records.len().to_string());
    line("num_communities", report.num_communities.to_string());
    line("q", fmt_float(report.q));
    line("qp", fmt_float(report.qp));
    line("qp_x100", fmt_float(report.qp * 100.0));
    line("fr", fmt_float(report.fr));
    line("awd", fmt_float(report.awd));
    if a.best_q {
        let (step, best) = trace.best_q();
        let prefix = trace.partition_at(step);
        let path = best_q_path(&a.out_partition);
        write(&path, &write_partition(&prefix))?;
        line("best_q_step", step.to_string());
        line("best_q", fmt_float(best));
        line("best_q_num_communities", prefix.k().to_string());
    }
    line("runtime_seconds", format!("{runtime:.3}"));

    match &a.out_summary {
        Some(path) => write(path, &summary),
        None => {
            print!("{summary}");
            Ok(())
        }
    }
}

/// `p.csv` → `p.bestq.csv`.
fn best_q_path(partition: &Path) -> PathBuf {
    let stem = partition
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "partition".to_string());
    partition.with_file_name(format!("{stem}.bestq.csv"))
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let graph = load_graph(&a.graph)?;
    let groups = load_groups(&a.groups)?;
    let partition = load_partition(&a.partition)?;
    let truth = a.truth.as_deref().map(load_partition).transpose()?;
    let report = Report::evaluate(&graph, &groups, &partition, truth.as_ref())?;
    match a.format {
        Format::Csv => print!("{}", report.to_csv()),
        Format::Text => print!("{}", report.to_text()),
    }
    Ok(())
}
