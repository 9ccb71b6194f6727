//! Command-line front end. Every computation goes through the HTTP
//! service: either a remote one (`--server URL`) or an in-process instance
//! spawned on an ephemeral port.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical rejection (degenerate
//! or non-star-shaped geometry, overflow).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use starsketch::analysis::SketchIndex;
use starsketch::experiment::ExperimentConfig;
use starsketch::geometry::GeneratorParams;
use starsketch::io as disk;
use starsketch::sketch::{PhiKind, PhiSpec, Sketch};
use starsketch::verify::Family;
use starsketch_client::{Client, ClientError};

#[derive(Parser)]
#[command(
    name = "starsketch",
    version,
    about = "Rotation-invariant sketches of star-shaped outlines"
)]
struct Cli {
    /// Base URL of a running service; by default an in-process service is
    /// spawned on an ephemeral port.
    #[arg(long, global = true)]
    server: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhiArg {
    NegExp,
    Laplace,
    Gaussian,
}

impl PhiArg {
    fn kind(self) -> PhiKind {
        match self {
            PhiArg::NegExp => PhiKind::NegExp,
            PhiArg::Laplace => PhiKind::Laplace,
            PhiArg::Gaussian => PhiKind::Gaussian,
        }
    }
}

#[derive(Args)]
struct PhiOpts {
    /// Characteristic map applied to differences.
    #[arg(long, value_enum, default_value = "neg-exp")]
    phi: PhiArg,
    /// Rate parameter λ of the characteristic map.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
}

impl PhiOpts {
    fn spec(&self) -> Result<PhiSpec, CliError> {
        PhiSpec::new(self.phi.kind(), self.lambda).map_err(CliError::from)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service in the foreground.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Standardize an outline file (.csv of x,y rows or .json point list).
    Standardize {
        input: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Standardize and discretize an outline into a radial star function.
    Discretize {
        input: PathBuf,
        #[arg(long)]
        m: usize,
        /// Extra rays per wedge (besides the wedge-center ray).
        #[arg(long, default_value_t = starsketch::geometry::DEFAULT_EXTRA_RAYS)]
        extra_rays: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sketch one or more outline files end to end; writes one
    /// `<stem>.sketch.json` per input. Non-star inputs are reported and
    /// skipped with a nonzero exit code.
    Sketch {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = starsketch::geometry::DEFAULT_EXTRA_RAYS)]
        extra_rays: usize,
        #[command(flatten)]
        phi: PhiOpts,
        /// Directory for the sketch files (default: alongside each input).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Euclidean distance between two sketch files (.json or binary).
    Dist { a: PathBuf, b: PathBuf },
    /// Build or query an on-disk sketch index.
    Index {
        #[command(subcommand)]
        command: IndexCommand,
    },
    /// K-means over an on-disk index.
    Cluster {
        index: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        max_iters: usize,
    },
    /// Paper-style experiments over synthetic shapes.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
    /// Machine verification of the sketch injectivity statement.
    Verify {
        #[command(subcommand)]
        command: VerifyCommand,
    },
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Build an index directory from sketch files; ids are file stems.
    Build {
        /// Output index directory.
        #[arg(long)]
        out: PathBuf,
        sketches: Vec<PathBuf>,
    },
    /// Query an index directory with a sketch file; prints
    /// `rank,id,distance` rows.
    Query {
        index: PathBuf,
        query: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
}

#[derive(Args, Default)]
struct ExperimentOverrides {
    /// Config file (.json or .toml); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Wedge counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n_originals: Option<usize>,
    #[arg(long)]
    n_copies: Option<usize>,
    /// Restrict rotations to multiples of 2π/m (exact-invariance regime).
    #[arg(long)]
    snap_rotations: bool,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Rotation-clustering accuracy; emits `m,trial,accuracy` CSV rows.
    Cluster {
        #[command(flatten)]
        overrides: ExperimentOverrides,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank-1 retrieval of rotated copies.
    Knn {
        #[command(flatten)]
        overrides: ExperimentOverrides,
    },
    /// Sketch convergence order against a high-resolution reference.
    Convergence {
        /// Wedge counts, comma separated; each must divide 8x the largest.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "32,64,128,256,512,1024,2048"
        )]
        m: Vec<usize>,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Check lag-homometry ⟺ equivalence over a function family.
    Injectivity {
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "permutations")]
        family: FamilyArg,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Permutations,
    Random,
}

/// Errors carrying the process exit code.
enum CliError {
    /// Unreadable files, malformed input, bad arguments.
    Input(String),
    /// Degenerate or non-star geometry, numerical overflow.
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match &e {
            ClientError::Api { kind, message, .. } if kind == "numerical" => {
                CliError::Numerical(message.clone())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<starsketch::Error> for CliError {
    fn from(e: starsketch::Error) -> Self {
        use starsketch::Error as E;
        match &e {
            E::NotStarShaped(_) | E::DegeneratePolygon(_) | E::Overflow(_) | E::TiedValues(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Ok(threads) = std::env::var("STARSKETCH_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: STARSKETCH_THREADS must be a positive integer");
                return ExitCode::from(1);
            }
        }
    }

    let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
    match runtime.block_on(run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

async fn connect(server: Option<String>) -> Result<Client, CliError> {
    let base = match server {
        Some(url) => url,
        None => {
            let bound = starsketch_service::spawn("127.0.0.1:0".parse().unwrap())
                .await
                .map_err(|e| CliError::Input(format!("could not start service: {e}")))?;
            format!("http://{bound}")
        }
    };
    Ok(Client::new(base))
}

async fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve { addr } => {
            let addr: std::net::SocketAddr = addr
                .parse()
                .map_err(|e| CliError::Input(format!("bad --addr: {e}")))?;
            eprintln!("listening on {addr}");
            starsketch_service::serve(addr).await?;
            Ok(())
        }
        Command::Standardize { input, output } => {
            let client = connect(cli.server).await?;
            let outline = disk::read_outline(&input)?;
            let standardized = client.standardize(outline.points).await?;
            emit_json(&standardized, output.as_deref())
        }
        Command::Discretize {
            input,
            m,
            extra_rays,
            output,
        } => {
            let client = connect(cli.server).await?;
            let outline = disk::read_outline(&input)?;
            let standardized = client.standardize(outline.points).await?;
            let star = client
                .discretize(&standardized, m, Some(extra_rays))
                .await?;
            emit_json(&star, output.as_deref())
        }
        Command::Sketch {
            inputs,
            m,
            extra_rays,
            phi,
            out_dir,
        } => {
            if inputs.is_empty() {
                return Err(CliError::Input("no input files given".into()));
            }
            let client = connect(cli.server).await?;
            let phi = phi.spec()?;
            let mut skipped = 0usize;
            for input in &inputs {
                match sketch_one(&client, input, m, extra_rays, phi, out_dir.as_deref()).await {
                    Ok(path) => println!("{} -> {}", input.display(), path.display()),
                    Err(CliError::Numerical(msg)) => {
                        eprintln!("skipping {}: {msg}", input.display());
                        skipped += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
            if skipped > 0 {
                Err(CliError::Numerical(format!(
                    "{skipped} of {} inputs were not star-shaped",
                    inputs.len()
                )))
            } else {
                Ok(())
            }
        }
        Command::Dist { a, b } => {
            let client = connect(cli.server).await?;
            let sa = read_sketch(&a)?;
            let sb = read_sketch(&b)?;
            let d = client.sketch_distance(&sa, &sb).await?;
            println!("{d}");
            Ok(())
        }
        Command::Index { command } => match command {
            IndexCommand::Build { out, sketches } => {
                if sketches.is_empty() {
                    return Err(CliError::Input("no sketch files given".into()));
                }
                let first = read_sketch(&sketches[0])?;
                let mut index = SketchIndex::new(first.m, first.phi);
                for path in &sketches {
                    let sketch = read_sketch(path)?;
                    let id = path
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .ok_or_else(|| {
                            CliError::Input(format!("bad file name {}", path.display()))
                        })?
                        .trim_end_matches(".sketch")
                        .to_string();
                    index.insert(id, sketch)?;
                }
                disk::write_index(&out, &index)?;
                println!("indexed {} sketches into {}", sketches.len(), out.display());
                Ok(())
            }
            IndexCommand::Query { index, query, k } => {
                let client = connect(cli.server).await?;
                let stored = disk::read_index(&index)?;
                let query = read_sketch(&query)?;
                client.put_index("cli", &stored).await?;
                let ranked = client.knn("cli", &query, k).await?;
                print!("{}", disk::knn_rows_csv(&ranked));
                Ok(())
            }
        },
        Command::Cluster {
            index,
            k,
            seed,
            max_iters,
        } => {
            let client = connect(cli.server).await?;
            let stored = disk::read_index(&index)?;
            client.put_index("cli", &stored).await?;
            let result = client.kmeans("cli", k, seed, Some(max_iters)).await?;
            emit_json(&result, None)
        }
        Command::Experiment { command } => {
            let client = connect(cli.server).await?;
            match command {
                ExperimentCommand::Cluster { overrides, out } => {
                    let cfg = build_config(&overrides)?;
                    let report = client.experiment_cluster(&cfg).await?;
                    let csv = disk::cluster_rows_csv(&report.rows);
                    match out {
                        Some(path) => std::fs::write(path, csv)?,
                        None => print!("{csv}"),
                    }
                    for s in &report.summary {
                        eprintln!("m={}: mean {:.4} stddev {:.4}", s.m, s.mean, s.stddev);
                    }
                    Ok(())
                }
                ExperimentCommand::Knn { overrides } => {
                    let cfg = build_config(&overrides)?;
                    let report = client.experiment_knn(&cfg).await?;
                    println!(
                        "rank-1 retrieval: {}/{} at m={}",
                        report.rank1_hits, report.queries, report.m
                    );
                    Ok(())
                }
                ExperimentCommand::Convergence { m } => {
                    let report = client.experiment_convergence(None, &m, None).await?;
                    println!("m,deviation");
                    for row in &report.rows {
                        println!("{},{}", row.m, row.deviation);
                    }
                    match report.order {
                        Some(order) => println!("fitted order: {order:.3}"),
                        None => println!("fitted order: exact (all deviations zero)"),
                    }
                    Ok(())
                }
            }
        }
        Command::Verify { command } => {
            let client = connect(cli.server).await?;
            match command {
                VerifyCommand::Injectivity {
                    m,
                    family,
                    trials,
                    seed,
                } => {
                    let family = match family {
                        FamilyArg::Permutations => Family::Permutations,
                        FamilyArg::Random => Family::RandomGeneralPosition,
                    };
                    let report = client
                        .verify_injectivity(m, family, Some(trials), Some(seed))
                        .await?;
                    emit_json(&report, None)
                }
            }
        }
    }
}

async fn sketch_one(
    client: &Client,
    input: &Path,
    m: usize,
    extra_rays: usize,
    phi: PhiSpec,
    out_dir: Option<&Path>,
) -> Result<PathBuf, CliError> {
    let outline = disk::read_outline(input)?;
    let standardized = client.standardize(outline.points).await?;
    let star = client
        .discretize(&standardized, m, Some(extra_rays))
        .await?;
    let sketch = client.sketch(&star.values, Some(phi), None).await?;
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::Input(format!("bad file name {}", input.display())))?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| input.parent().unwrap_or(Path::new(".")).to_path_buf());
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(format!("{stem}.sketch.json"));
    disk::write_sketch_json(&path, &sketch)?;
    Ok(path)
}

fn read_sketch(path: &Path) -> Result<Sketch, CliError> {
    let result = if path.extension().and_then(|e| e.to_str()) == Some("json") {
        disk::read_sketch_json(path)
    } else {
        disk::read_sketch_binary(path)
    };
    result.map_err(CliError::from)
}

fn emit_json<T: serde::Serialize>(value: &T, output: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("serialization failed: {e}")))?;
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Optional-field mirror of `ExperimentConfig` for config files.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    m_values: Option<Vec<usize>>,
    n_originals: Option<usize>,
    n_copies: Option<usize>,
    seed: Option<u64>,
    phi: Option<PhiSpec>,
    trials: Option<usize>,
    snap_rotations: Option<bool>,
    extra_rays: Option<usize>,
    generator: Option<GeneratorParams>,
}

fn build_config(overrides: &ExperimentOverrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();

    if let Some(path) = &overrides.config {
        let text = std::fs::read_to_string(path)?;
        let partial: PartialConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
            _ => serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        };
        if let Some(v) = partial.m_values {
            cfg.m_values = v;
        }
        if let Some(v) = partial.n_originals {
            cfg.n_originals = v;
        }
        if let Some(v) = partial.n_copies {
            cfg.n_copies = v;
        }
        if let Some(v) = partial.seed {
            cfg.seed = v;
        }
        if let Some(v) = partial.phi {
            cfg.phi = v;
        }
        if let Some(v) = partial.trials {
            cfg.trials = v;
        }
        if let Some(v) = partial.snap_rotations {
            cfg.snap_rotations = v;
        }
        if let Some(v) = partial.extra_rays {
            cfg.extra_rays = v;
        }
        if let Some(v) = partial.generator {
            cfg.generator = v;
        }
    }

    // flags win over the config file
    if !overrides.m.is_empty() {
        cfg.m_values = overrides.m.clone();
    }
    if let Some(v) = overrides.seed {
        cfg.seed = v;
    }
    if let Some(v) = overrides.trials {
        cfg.trials = v;
    }
    if let Some(v) = overrides.n_originals {
        cfg.n_originals = v;
    }
    if let Some(v) = overrides.n_copies {
        cfg.n_copies = v;
    }
    if overrides.snap_rotations {
        cfg.snap_rotations = true;
    }
    Ok(cfg)
}
