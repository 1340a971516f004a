//! `snapmark` command-line entry point.
//!
//! Exit codes: 0 success, 1 user error (bad flags, unknown id, invalid
//! input), 2 internal error.

mod table;

use std::collections::BTreeSet;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use snapmark_core::model::{apply_user_edits, CaptureEdits, CaptureMode, ListedCapture};
use snapmark_core::platform::{
    capture_draft, execute_restore, parse_region, plan_restore, EchoExecutor, NativeProvider, RestorePlan,
    Scenario, ScriptRegistry, SimulatedProvider,
};
use snapmark_core::store::{FieldUpdate, SearchQuery, SortSpec, Store};
use snapmark_core::visibility::{Rect, VisibilityConfig, DEFAULT_DOWNSAMPLE_PX, DEFAULT_THRESHOLD_CELLS};
use snapmark_service::{ApiError, AppState, SharedProvider};

const DATA_DIR_ENV: &str = "SNAPMARK_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "snapmark", version, about = "Bookmark bundles of open windows behind screenshots")]
struct Cli {
    /// Directory holding records/ and images/
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,

    /// Print JSON (same shapes as the HTTP API) instead of tables
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the local HTTP service
    Serve(ServeArgs),
    /// Take a screenshot bookmark from a scenario file and save it
    Capture(CaptureArgs),
    /// List captures, liked first then newest first
    List,
    /// Keyword search over titles, descriptions, apps, window titles, URLs, paths and dates
    Search {
        #[arg(required = true, num_args = 1..)]
        query: Vec<String>,
    },
    /// Like (or with --off, unlike) a capture
    Like {
        id: String,
        #[arg(long)]
        off: bool,
    },
    /// Reopen a capture's resources through the restore scripts
    Reopen {
        id: String,
        /// Comma-separated window ids; defaults to the selected resources
        #[arg(long, value_delimiter = ',')]
        resources: Option<Vec<String>>,
        /// Restore script registry CSV
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Delete a capture and its screenshot
    Delete { id: String },
}

#[derive(Debug, Args)]
struct VisibilityArgs {
    /// Cell side length in pixels for the visibility check
    #[arg(long, default_value_t = DEFAULT_DOWNSAMPLE_PX)]
    downsample: u32,
    /// Minimum overlap in cells (exclusive) for a window to count as visible
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_CELLS)]
    threshold: u32,
}

impl VisibilityArgs {
    fn config(&self) -> Result<VisibilityConfig, CliError> {
        VisibilityConfig::new(self.downsample, self.threshold).map_err(|e| CliError::user(e.to_string()))
    }
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 7878)]
    port: u16,
    /// Address to bind; loopback unless overridden
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    bind: IpAddr,
    /// Serve captures from this scenario instead of the native provider
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Directory with the built web UI (index.html, assets/)
    #[arg(long)]
    ui_dir: Option<PathBuf>,
    #[command(flatten)]
    visibility: VisibilityArgs,
}

#[derive(Debug, Args)]
struct CaptureArgs {
    /// Capture the whole screen
    #[arg(long, conflicts_with = "region", required_unless_present = "region")]
    full: bool,
    /// Capture a region given as x,y,w,h
    #[arg(long, value_parser = parse_region_arg)]
    region: Option<Rect>,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    desc: Option<String>,
    /// Comma-separated visible window ids to leave out
    #[arg(long, value_delimiter = ',')]
    deselect: Vec<String>,
    /// Comma-separated invisible window ids to include
    #[arg(long, value_delimiter = ',')]
    add_invisible: Vec<String>,
    #[command(flatten)]
    visibility: VisibilityArgs,
}

fn parse_region_arg(s: &str) -> Result<Rect, String> {
    parse_region(s).map_err(|e| e.to_string())
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn user(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        CliError {
            code: if e.status < 500 { 1 } else { 2 },
            message: e.message,
        }
    }
}

macro_rules! via_api_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                ApiError::from(e).into()
            }
        }
    )*};
}
via_api_error!(
    snapmark_core::StoreError,
    snapmark_core::platform::PlatformError,
    snapmark_core::model::ModelError
);

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn default_data_dir() -> PathBuf {
    match std::env::var_os("HOME") {
        Some(home) => PathBuf::from(home).join(".local/share/snapmark"),
        None => PathBuf::from("snapmark-data"),
    }
}

fn load_registry(path: Option<&PathBuf>) -> Result<ScriptRegistry, CliError> {
    match path {
        Some(p) => Ok(ScriptRegistry::load(p).map_err(|e| CliError::user(e.to_string()))?),
        None => Ok(ScriptRegistry::builtin()),
    }
}

/// The scenario path comes from the command line, so any failure is a user error.
fn load_scenario(path: &PathBuf) -> Result<Scenario, CliError> {
    Scenario::load(path).map_err(|e| CliError::user(e.to_string()))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("response serializes"));
}

fn run(cli: Cli) -> Result<(), CliError> {
    let data_dir = cli.data_dir.clone().unwrap_or_else(default_data_dir);
    let store = Store::open(&data_dir)?;
    match cli.command {
        Command::Serve(args) => serve(store, args),
        Command::Capture(args) => {
            let scenario = load_scenario(&args.scenario)?;
            let provider = SimulatedProvider::new(scenario);
            let (mode, region) = if args.full {
                (CaptureMode::FullScreen, None)
            } else {
                (CaptureMode::SelectedArea, args.region)
            };
            let draft = capture_draft(&provider, mode, region, args.visibility.config()?, Utc::now())?;
            let edits = CaptureEdits {
                title: args.title,
                description: args.desc,
                deselect_ids: args.deselect.into_iter().collect(),
                add_invisible_ids: args.add_invisible.into_iter().collect(),
            };
            let record = apply_user_edits(&draft.record, &edits)?;
            store.save(&record, &draft.image_png)?;
            if cli.json {
                print_json(&record);
            } else {
                println!("{}", record.capture_id);
            }
            Ok(())
        }
        Command::List => {
            show_listing(store.list_sorted(SortSpec::default()), cli.json);
            Ok(())
        }
        Command::Search { query } => {
            let q = SearchQuery::parse(&query.join(" "));
            show_listing(store.search(&q, SortSpec::default()), cli.json);
            Ok(())
        }
        Command::Like { id, off } => {
            let rec = store.update_fields(&id, &FieldUpdate { liked: Some(!off), ..Default::default() })?;
            if cli.json {
                print_json(&rec);
            } else {
                println!("{} {}", if rec.liked { "liked" } else { "unliked" }, rec.capture_id);
            }
            Ok(())
        }
        Command::Reopen { id, resources, registry } => {
            let registry = load_registry(registry.as_ref())?;
            let rec = store.get(&id)?;
            let ids: Option<BTreeSet<String>> = resources.map(|v| v.into_iter().collect());
            let plan = plan_restore(&rec, ids.as_ref(), &registry)?;
            let executor = EchoExecutor::new();
            let done = RestorePlan {
                actions: execute_restore(plan.actions, &executor),
                skipped: plan.skipped,
            };
            if cli.json {
                print_json(&done);
            } else {
                for a in &done.actions {
                    match &a.error {
                        None => println!("{}", a.command),
                        Some(e) => eprintln!("failed {}: {e}", a.window_id),
                    }
                }
                for s in &done.skipped {
                    eprintln!("skipped {}: {}", s.window_id, s.reason);
                }
            }
            Ok(())
        }
        Command::Delete { id } => {
            store.delete(&id)?;
            if cli.json {
                print_json(&snapmark_service::DeleteResponse { deleted: id });
            } else {
                println!("deleted {id}");
            }
            Ok(())
        }
    }
}

fn show_listing(records: Vec<snapmark_core::CaptureRecord>, json: bool) {
    let now = Utc::now();
    let listed: Vec<ListedCapture> = records.into_iter().map(|r| ListedCapture::new(r, now)).collect();
    if json {
        print_json(&listed);
    } else {
        print!("{}", table::render(&listed));
    }
}

fn serve(store: Store, args: ServeArgs) -> Result<(), CliError> {
    let provider: SharedProvider = match &args.scenario {
        Some(path) => Arc::new(SimulatedProvider::new(load_scenario(path)?)),
        None => Arc::new(NativeProvider),
    };
    let mut state = AppState::new(
        Arc::new(store),
        provider,
        Arc::new(EchoExecutor::new()),
        load_registry(args.registry.as_ref())?,
    )
    .with_visibility(args.visibility.config()?);
    if let Some(dir) = args.ui_dir {
        state = state.with_ui_dir(dir);
    }
    let addr = SocketAddr::new(args.bind, args.port);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError { code: 2, message: e.to_string() })?;
    eprintln!("serving on http://{addr}");
    runtime
        .block_on(snapmark_service::serve(Arc::new(state), addr))
        .map_err(|e| CliError { code: 2, message: format!("server on {addr}: {e}") })
}
