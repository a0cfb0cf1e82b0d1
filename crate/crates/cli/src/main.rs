use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use vizlab_cli::analyze::{self, DEFAULT_POINTS};
use vizlab_cli::bench::{self, BenchOptions, RunRequest};
use vizlab_cli::datasets::{self, DataConfig, DATA_DIR_ENV, ENDPOINT_ENV};
use vizlab_cli::error::{CliError, Result};
use vizlab_cli::server::{self, ServerConfig, DEFAULT_PORT, DEFAULT_QUEUE_CAPACITY};
use vizlab_cli::transcode::{self, Times};
use vizlab_cli::viewer::{self, Viewer, PLAYBACK_SIZE};
use vizlab_core::catalog::{validate_profile, RunProfile};
use vizlab_core::field::ColumnSchema;
use vizlab_core::ingest::{validate_pdb_id, BondSource, DEFAULT_ENDPOINT};
use vizlab_core::telemetry::PlatformProbe;

#[derive(Parser)]
#[command(name = "vizlab", version, about = "Optimization laboratory for scientific visualization workloads")]
struct Cli {
    /// Dataset cache and transcoded fields.
    #[arg(long, global = true, env = DATA_DIR_ENV, default_value = "data")]
    data_dir: PathBuf,
    /// Where session files are written and served from.
    #[arg(long, visible_alias = "out", global = true, default_value = "sessions")]
    out_dir: PathBuf,
    /// Log at info level.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch a PDB entry into the cache, or parse a local file.
    Ingest(IngestArgs),
    /// Transcode a directory of .dat snapshots to EXR slices and a manifest.
    Transcode(TranscodeArgs),
    /// Run a camera template and write the session.
    Bench(BenchArgs),
    /// Summaries, comparisons, thresholds and small multiples as JSON.
    Analyze(AnalyzeArgs),
    /// HTTP API over the session store with a run queue.
    Serve(ServeArgs),
    /// Free-flight terminal viewer.
    View(ViewArgs),
}

#[derive(Args)]
struct FetchArgs {
    /// PDB download endpoint.
    #[arg(long, env = ENDPOINT_ENV, default_value = DEFAULT_ENDPOINT)]
    endpoint: String,
    /// Network timeout, seconds.
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
    /// Keep only these chains, comma-separated.
    #[arg(long, value_delimiter = ',')]
    chains: Vec<char>,
}

#[derive(Args)]
struct IngestArgs {
    /// PDB id or path to a .pdb file.
    source: String,
    #[command(flatten)]
    fetch: FetchArgs,
}

#[derive(Args)]
struct TranscodeArgs {
    /// Directory of .dat snapshots, ordered by file name.
    input: PathBuf,
    /// Output directory; defaults to `<data-dir>/fields/<input name>`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Snapshot times, comma-separated, one per file.
    #[arg(long, value_delimiter = ',', conflicts_with = "dt")]
    times: Vec<f64>,
    /// Uniform time step between snapshots.
    #[arg(long)]
    dt: Option<f64>,
    /// Time of the first snapshot with --dt.
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// Column meanings, e.g. `x,y,ux,uy,t,oh` (`_` skips a column).
    #[arg(long, default_value = "x,y,ux,uy,t,oh")]
    columns: String,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Seconds per simulated frame, e.g. `1/60`.
    #[arg(long, default_value = "1/60")]
    timestep: String,
    /// Rasterization size `WxH`, or `none`.
    #[arg(long, default_value = "160x90")]
    render: String,
    /// Fill unset distance parameters from the dataset's bounds.
    #[arg(long)]
    scaled_params: bool,
}

impl RunArgs {
    fn options(&self) -> Result<BenchOptions> {
        Ok(BenchOptions {
            timestep: bench::parse_timestep(&self.timestep)?,
            render: bench::parse_render_size(&self.render)?,
            scaled_params: self.scaled_params,
        })
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    dataset: String,
    /// t1, t2 or t3.
    #[arg(long)]
    template: String,
    /// Profile file (JSON, or TOML by extension); baseline when absent.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "")]
    name: String,
    #[arg(long, default_value = "")]
    description: String,
    #[command(flatten)]
    fetch: FetchArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(subcommand)]
    query: AnalyzeQuery,
    /// Write JSON here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone, Copy)]
struct WindowArgs {
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
}

#[derive(Subcommand)]
enum AnalyzeQuery {
    Summary {
        session: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
    },
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// One metric; all five when absent.
        #[arg(long)]
        metric: Option<String>,
        #[command(flatten)]
        window: WindowArgs,
    },
    Threshold {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        value: f64,
        #[arg(required = true)]
        sessions: Vec<PathBuf>,
    },
    Multiples {
        #[arg(long)]
        metric: String,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        #[arg(required = true)]
        sessions: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Built dashboard assets served at `/`.
    #[arg(long)]
    assets: Option<PathBuf>,
    /// Pending runs accepted before POST /runs answers 409.
    #[arg(long, default_value_t = DEFAULT_QUEUE_CAPACITY)]
    queue: usize,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    fetch: FetchArgs,
}

#[derive(Args)]
struct ViewArgs {
    #[arg(long)]
    dataset: String,
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Only `free` is interactive; templates run through `bench`.
    #[arg(long, default_value = "free")]
    template: String,
    /// Replay inputs from a script instead of reading the terminal.
    #[arg(long)]
    playback: Option<PathBuf>,
    /// Framebuffer size for playback, `WxH`.
    #[arg(long)]
    size: Option<String>,
    #[arg(long, default_value = "")]
    name: String,
    #[arg(long, default_value = "")]
    description: String,
    #[command(flatten)]
    fetch: FetchArgs,
}

fn data_config(data_dir: &Path, fetch: &FetchArgs) -> Result<DataConfig> {
    if !(fetch.timeout > 0.0 && fetch.timeout.is_finite()) {
        return Err(CliError::InvalidArgument(format!("timeout must be positive, got {}", fetch.timeout)));
    }
    let mut c = DataConfig::new(data_dir);
    c.endpoint = fetch.endpoint.clone();
    c.timeout = Duration::from_secs_f64(fetch.timeout);
    c.chains = fetch.chains.clone();
    Ok(c)
}

fn profile_or_baseline(path: Option<&Path>) -> Result<RunProfile> {
    match path {
        Some(p) => bench::load_profile(p),
        None => Ok(RunProfile::new("baseline")),
    }
}

fn ingest(cli: &Cli, args: &IngestArgs) -> Result<()> {
    let config = data_config(&cli.data_dir, &args.fetch)?;
    let path = Path::new(&args.source);
    let (label, text) = if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        if let Ok(id) = validate_pdb_id(stem) {
            let target = config.fetch_options().cache_path(&id);
            if let Some(dir) = target.parent() {
                fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            fs::write(&target, &text).map_err(|e| CliError::io(&target, e))?;
            println!("cached {}", target.display());
        }
        (stem.to_string(), text)
    } else {
        let id = validate_pdb_id(&args.source)?;
        let text = datasets::pdb_text(&id, &config)?;
        println!("cached {}", config.fetch_options().cache_path(&id).display());
        (id, text)
    };
    let m = datasets::molecule_from_text(&text, &config.chains)?;
    let conect = m.bonds.iter().filter(|b| b.source == BondSource::Conect).count();
    let chains: String = m.chains().into_iter().collect();
    println!("{label}: {} atoms, {} bonds ({conect} CONECT, {} inferred), chains {chains}", m.atoms.len(), m.bonds.len(), m.bonds.len() - conect);
    println!("  bounds {:?} .. {:?}", m.aabb.min.to_array(), m.aabb.max.to_array());
    Ok(())
}

fn transcode_cmd(cli: &Cli, args: &TranscodeArgs) -> Result<()> {
    let schema = ColumnSchema::from_names(&args.columns)?;
    let times = match (args.dt, args.times.is_empty()) {
        (Some(step), _) => Times::Uniform { start: args.t0, step },
        (None, false) => Times::Explicit(args.times.clone()),
        (None, true) => return Err(CliError::InvalidArgument("snapshot times are required: pass --times or --dt".into())),
    };
    let output = match &args.output {
        Some(o) => o.clone(),
        None => {
            let name = args.input.file_name().ok_or_else(|| CliError::InvalidArgument("input directory has no name".into()))?;
            cli.data_dir.join("fields").join(name)
        }
    };
    let m = transcode::transcode_dir(&args.input, &output, &times, &schema)?;
    println!("{} slices of {}x{} written to {}", m.slices.len(), m.width, m.height, output.display());
    Ok(())
}

fn bench_cmd(cli: &Cli, args: &BenchArgs) -> Result<()> {
    let data = data_config(&cli.data_dir, &args.fetch)?;
    let request = RunRequest {
        dataset: args.dataset.clone(),
        template: args.template.clone(),
        profile: profile_or_baseline(args.profile.as_deref())?,
        name: args.name.clone(),
        description: args.description.clone(),
    };
    let (path, session) = bench::bench_to_file(&request, &data, &args.run.options()?, &cli.out_dir)?;
    print!("{}", bench::summary_text(&session));
    println!("wrote {}", path.display());
    Ok(())
}

fn analyze_cmd(args: &AnalyzeArgs) -> Result<()> {
    let text = match &args.query {
        AnalyzeQuery::Summary { session, window } => {
            let s = &analyze::load_sessions(std::slice::from_ref(session))?[0];
            analyze::summary_json(s, analyze::window(window.t0, window.t1)?, true)?
        }
        AnalyzeQuery::Compare { a, b, metric, window } => {
            let metric = metric.as_deref().map(analyze::parse_metric).transpose()?;
            let s = analyze::load_sessions(&[a, b])?;
            analyze::compare_json(&s[0], &s[1], metric, analyze::window(window.t0, window.t1)?, true)?
        }
        AnalyzeQuery::Threshold { metric, value, sessions } => {
            analyze::threshold_json(&analyze::load_sessions(sessions)?, analyze::parse_metric(metric)?, *value, true)?
        }
        AnalyzeQuery::Multiples { metric, points, sessions } => {
            analyze::multiples_json(&analyze::load_sessions(sessions)?, analyze::parse_metric(metric)?, *points, true)?
        }
    };
    match &args.output {
        Some(path) => fs::write(path, text + "\n").map_err(|e| CliError::io(path, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn serve_cmd(cli: &Cli, args: &ServeArgs) -> Result<()> {
    let config = ServerConfig {
        data: data_config(&cli.data_dir, &args.fetch)?,
        out_dir: cli.out_dir.clone(),
        assets: args.assets.clone(),
        queue_capacity: args.queue,
        bench: args.run.options()?,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Other(e.to_string()))?;
    runtime.block_on(server::serve(config, args.port)).map_err(|e| CliError::Other(format!("server: {e}")))
}

fn view_cmd(cli: &Cli, args: &ViewArgs) -> Result<()> {
    if !args.template.eq_ignore_ascii_case("free") {
        return Err(CliError::InvalidArgument(format!("the viewer only flies free; run template '{}' with `bench`", args.template)));
    }
    let script = match &args.playback {
        Some(p) => Some(viewer::parse_script(&fs::read_to_string(p).map_err(|e| CliError::io(p, e))?)?),
        None => {
            viewer::require_terminal()?;
            None
        }
    };
    let profile = validate_profile(profile_or_baseline(args.profile.as_deref())?)?;
    let scene = datasets::load_scene(&args.dataset, &data_config(&cli.data_dir, &args.fetch)?)?;
    let name = if args.name.is_empty() { Viewer::default_name(&scene.dataset_id, &profile) } else { args.name.clone() };
    let v = Viewer::new(scene, profile, &name, &args.description, Box::new(PlatformProbe::new()))?;
    let session = match script {
        Some(inputs) => {
            let size = match &args.size {
                Some(s) => bench::parse_render_size(s)?.unwrap_or(PLAYBACK_SIZE),
                None => PLAYBACK_SIZE,
            };
            viewer::run_playback(v, &inputs, size)?
        }
        None => viewer::run_interactive(v)?,
    };
    let path = viewer::save(&session, &cli.out_dir)?;
    println!("{} samples saved to {}", session.samples.len(), path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => ingest(cli, a),
        Command::Transcode(a) => transcode_cmd(cli, a),
        Command::Bench(a) => bench_cmd(cli, a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Serve(a) => serve_cmd(cli, a),
        Command::View(a) => view_cmd(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.verbose { "info" } else { "warn" })).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
