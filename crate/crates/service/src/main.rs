use std::path::PathBuf;
use std::process::ExitCode;

use chrono::Utc;
use clap::{Parser, Subcommand};
use loadcast_core::engine::{Scheduler, SystemClock};
use loadcast_core::ingestion::SourceKind;
use loadcast_service::ops::{self, parse_country, parse_hours, parse_instant, Context};
use loadcast_service::{api, ApiError, ServiceConfig};

#[derive(Parser)]
#[command(name = "loadcast", version, about = "Electricity load forecasting: ingest, audit, train, forecast, evaluate, serve")]
struct Cli {
    /// Data directory; overrides the configuration file.
    #[arg(long, global = true, env = "LOADCAST_DATA_DIR")]
    data_dir: Option<PathBuf>,

    /// TOML configuration file.
    #[arg(long, global = true, env = "LOADCAST_CONFIG")]
    config: Option<PathBuf>,

    /// Directory of `<country>.txt` holiday files; overrides the configuration file.
    #[arg(long, global = true)]
    calendar_dir: Option<PathBuf>,

    /// Print the JSON document the HTTP API would return instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a load CSV (a path or an http(s) URL) and merge it into the store.
    Ingest {
        file: String,
        #[arg(long)]
        country: String,
        /// `total` or `vertical`.
        #[arg(long, default_value = "total")]
        source: String,
    },
    /// Data-quality audit of every stored country over a period.
    Audit {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Rebuild the models of one country.
    Train {
        #[arg(long)]
        country: String,
        /// Also train the nine decile models.
        #[arg(long)]
        deciles: bool,
        /// Timestamp recorded as the training time; defaults to the current time.
        #[arg(long)]
        now: Option<String>,
    },
    /// Issue and store the 24-hour forecast batch.
    Forecast {
        #[arg(long)]
        country: String,
        /// Issue time; defaults to the current time.
        #[arg(long)]
        now: Option<String>,
    },
    /// Show records of the latest stored forecast batch.
    Latest {
        #[arg(long)]
        country: String,
        #[arg(long)]
        from: Option<String>,
        #[arg(long, default_value = "24")]
        hours: String,
    },
    /// List stored countries.
    Countries,
    /// Score stored forecasts against actual load.
    Evaluate {
        #[arg(long)]
        country: String,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long)]
        horizon: Option<String>,
    },
    /// Run the HTTP API and the rebuild/forecast scheduler.
    Serve,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            if json {
                eprintln!("{}", ops::to_json(&e));
            } else {
                eprintln!("error: {}", e.message);
            }
            ExitCode::from(e.code.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ServiceConfig, ApiError> {
    let mut config = match &cli.config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::default(),
    };
    if let Some(dir) = &cli.data_dir {
        config.data_dir = dir.clone();
    }
    if let Some(dir) = &cli.calendar_dir {
        config.calendar_dir = Some(dir.clone());
    }
    Ok(config)
}

fn json_line<T: serde::Serialize>(value: &T) -> String {
    format!("{}\n", ops::to_json(value))
}

fn run(cli: Cli) -> Result<String, ApiError> {
    let config = load_config(&cli)?;
    let ctx = Context::open(&config.data_dir, config.engine.clone(), config.calendar_dir.clone())?;
    let now = |arg: &Option<String>| arg.as_deref().map(parse_instant).transpose().map(|t| t.unwrap_or_else(Utc::now));
    match &cli.command {
        Command::Ingest { file, country, source } => {
            let country = parse_country(country)?;
            let source: SourceKind = source.parse()?;
            let body = read_input(file)?;
            Ok(json_line(&ops::ingest(&ctx, &country, source, &body)?))
        }
        Command::Audit { from, to } => {
            let reports = ops::quality(&ctx, parse_instant(from)?, parse_instant(to)?)?;
            Ok(if cli.json { json_line(&reports) } else { ops::render_quality(&reports) })
        }
        Command::Train { country, deciles, now: at } => {
            let country = parse_country(country)?;
            let deciles = deciles.then_some(true);
            Ok(json_line(&ops::rebuild(&ctx, &country, deciles, now(at)?)?))
        }
        Command::Forecast { country, now: at } => {
            let country = parse_country(country)?;
            Ok(json_line(&ops::issue_forecast(&ctx, &country, now(at)?)?))
        }
        Command::Latest { country, from, hours } => {
            let country = parse_country(country)?;
            let from = from.as_deref().map(parse_instant).transpose()?;
            Ok(json_line(&ops::latest_forecast(&ctx, &country, from, parse_hours(hours)?)?))
        }
        Command::Countries => Ok(json_line(&ops::list_countries(&ctx)?)),
        Command::Evaluate { country, from, to, horizon } => {
            let country = parse_country(country)?;
            let from = from.as_deref().map(parse_instant).transpose()?;
            let to = to.as_deref().map(parse_instant).transpose()?;
            let horizon = horizon.as_deref().map(parse_hours).transpose()?;
            let result = ops::evaluate(&ctx, &country, from, to, horizon)?;
            Ok(if cli.json { json_line(&result) } else { ops::render_evaluation(&result) })
        }
        Command::Serve => serve(ctx, &config).map(|()| String::new()),
    }
}

fn read_input(file: &str) -> Result<Vec<u8>, ApiError> {
    if file.starts_with("http://") || file.starts_with("https://") {
        let response = reqwest::blocking::get(file)
            .and_then(|r| r.error_for_status())
            .map_err(|e| ApiError::invalid(format!("cannot fetch {file}: {e}")))?;
        let bytes = response
            .bytes()
            .map_err(|e| ApiError::invalid(format!("cannot read {file}: {e}")))?;
        return Ok(bytes.to_vec());
    }
    std::fs::read(file).map_err(|e| ApiError::invalid(format!("cannot read {file}: {e}")))
}

fn serve(ctx: Context, config: &ServiceConfig) -> Result<(), ApiError> {
    if config.run_scheduler {
        let mut scheduler = Scheduler::new(ctx.store.clone(), config.scheduler_config())?;
        std::thread::Builder::new()
            .name("scheduler".into())
            .spawn(move || scheduler.run(&SystemClock))
            .map_err(|e| ApiError::internal(format!("cannot start scheduler: {e}")))?;
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| ApiError::internal(e.to_string()))?;
    runtime
        .block_on(api::serve(ctx, &config.listen))
        .map_err(|e| ApiError::internal(format!("cannot serve on {}: {e}", config.listen)))
}
