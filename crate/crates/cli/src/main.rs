//! `isolab` command-line front end.
//!
//! Every subcommand can be driven by flags or by `isolab run --config file.json`
//! with `{"subcommand": ..., "params": {...}, "seed": ..., "format": ...}`.
//! Exit codes: 0 success, 1 identity check failed, 2 bad config, 3 resource guard.

mod commands;
mod params;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use params::*;
use report::{Format, Header, Report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Schema(String),
    #[error(transparent)]
    Library(#[from] isolab::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Library(isolab::Error::Resource(_) | isolab::Error::Capacity(_)) => 3,
            CliError::Io(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "isolab", version, about = "Discrete isoperimetry experiments")]
struct Cli {
    /// Worker threads (falls back to ISOLAB_THREADS, then all cores).
    #[arg(long, global = true, env = "ISOLAB_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Omit the timestamp so identical runs are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file (stdout when absent).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Where failing instances are written.
    #[arg(long, global = true)]
    dump_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    Profile(ProfileParams),
    Wulff(WulffParams),
    Gamma(GammaParams),
    Curlfit(CurlfitParams),
    Heis(HeisParams),
    Step2(Step2Params),
    Tf(TfParams),
    Lamplighter(LamplighterParams),
    Semidirect(SemidirectParams),
    Balloon(BalloonParams),
    Spectral(SpectralParams),
    Mixing(MixingParams),
    Embed(EmbedParams),
    Tempered(TemperedParams),
    /// Run a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    subcommand: String,
    #[serde(default = "empty_object")]
    params: Value,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    format: Option<Format>,
}

fn empty_object() -> Value {
    json!({})
}

fn from_flags(cmd: &Command) -> (String, Value) {
    let (name, params) = match cmd {
        Command::Profile(p) => ("profile", v(p)),
        Command::Wulff(p) => ("wulff", v(p)),
        Command::Gamma(p) => ("gamma", v(p)),
        Command::Curlfit(p) => ("curlfit", v(p)),
        Command::Heis(p) => ("heis", v(p)),
        Command::Step2(p) => ("step2", v(p)),
        Command::Tf(p) => ("tf", v(p)),
        Command::Lamplighter(p) => ("lamplighter", v(p)),
        Command::Semidirect(p) => ("semidirect", v(p)),
        Command::Balloon(p) => ("balloon", v(p)),
        Command::Spectral(p) => ("spectral", v(p)),
        Command::Mixing(p) => ("mixing", v(p)),
        Command::Embed(p) => ("embed", v(p)),
        Command::Tempered(p) => ("tempered", v(p)),
        Command::Run { .. } => unreachable!("handled by the caller"),
    };
    (name.to_string(), params)
}

fn v<T: Serialize>(p: &T) -> Value {
    serde_json::to_value(p).unwrap_or(Value::Null)
}

fn parse<T: serde::de::DeserializeOwned>(params: &Value) -> Result<T, CliError> {
    serde_json::from_value(params.clone()).map_err(|e| CliError::Schema(e.to_string()))
}

fn dispatch(cfg: &RunConfig, seed: u64) -> Result<Report, CliError> {
    let p = &cfg.params;
    match cfg.subcommand.as_str() {
        "profile" => commands::profile(parse(p)?),
        "wulff" => commands::wulff(parse(p)?),
        "gamma" => commands::gamma(parse(p)?),
        "curlfit" => commands::curlfit(parse(p)?, seed),
        "heis" => commands::heis(parse(p)?, seed),
        "step2" => commands::step2(parse(p)?, seed),
        "tf" => commands::tf(parse(p)?),
        "lamplighter" => commands::lamplighter(parse(p)?),
        "semidirect" => commands::semidirect(parse(p)?),
        "balloon" => commands::balloon(parse(p)?),
        "spectral" => commands::spectral(parse(p)?),
        "mixing" => commands::mixing(parse(p)?),
        "embed" => commands::embed(parse(p)?),
        "tempered" => commands::tempered(parse(p)?),
        other => Err(CliError::Schema(format!("unknown subcommand {other:?}"))),
    }
}

fn config_hash(cfg: &RunConfig) -> String {
    // serde_json maps are key-sorted, so this is canonical
    let text = serde_json::to_string(cfg).unwrap_or_default();
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Schema(format!("threads: {e}")))?;
    }
    let mut cfg = match &cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(config)?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| CliError::Schema(e.to_string()))?
        }
        cmd => {
            let (subcommand, params) = from_flags(cmd);
            RunConfig { subcommand, params, seed: None, format: None }
        }
    };
    let seed = *cfg.seed.get_or_insert(cli.seed);
    let format = *cfg.format.get_or_insert(cli.format);
    let report = dispatch(&cfg, seed)?;
    let hash = config_hash(&cfg);
    let header = Header {
        version: env!("CARGO_PKG_VERSION"),
        timestamp: (!cli.deterministic)
            .then(|| std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)),
        config_hash: hash.clone(),
    };
    let config = serde_json::to_value(&cfg).unwrap_or(Value::Null);
    match &cli.out {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            report::write(&mut f, &report, &header, format, &config)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report::write(&mut lock, &report, &header, format, &config)?;
            lock.flush()?;
        }
    }
    let failures = report.failures();
    if failures.is_empty() {
        return Ok(true);
    }
    let dir = cli.dump_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(format!("isolab-counterexample-{}.json", &hash[..12]));
    let dump = json!({ "version": header.version, "config_hash": hash, "config": config, "failures": failures });
    std::fs::write(&path, serde_json::to_string_pretty(&dump).unwrap_or_default())?;
    for f in failures {
        eprintln!("identity check {} failed; instance written to {}", f.name, path.display());
    }
    Ok(false)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("isolab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
