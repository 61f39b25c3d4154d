use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use vlc_apq::{cli, validation, Error, ScenarioConfig, Vec3};

#[derive(Parser)]
#[command(
    name = "apq-sim",
    version,
    about = "APQ / GSSK visible-light link simulator"
)]
struct Opts {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per SER point (per cell for `heatmap`).
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Accept power allocations with a noiseless error floor.
    #[arg(long)]
    allow_floor: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Per-LED channel gains at the receiver.
    Gain {
        #[command(flatten)]
        common: Common,
        /// Receiver position `x,y` or `x,y,z` in meters.
        #[arg(long, value_parser = parse_position)]
        rx: Option<RxPosition>,
    },
    /// SER against transmit SNR.
    SerSweep {
        #[command(flatten)]
        common: Common,
    },
    /// Normalized throughput over the room floor.
    Heatmap {
        #[command(flatten)]
        common: Common,
    },
    /// Run the self-check suite.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone)]
struct RxPosition(Vec<f64>);

fn parse_position(s: &str) -> Result<RxPosition, String> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.len() == 2 || v.len() == 3 {
        Ok(RxPosition(v))
    } else {
        Err("expected x,y or x,y,z".into())
    }
}

fn load(common: &Common, heatmap: bool) -> vlc_apq::Result<ScenarioConfig> {
    let path = &common.config;
    let text =
        fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if text.trim().is_empty() {
        // let the parser report the missing fields
        return ScenarioConfig::from_json_str(&text);
    }
    // overrides go in before validation so --allow-floor can admit a floor
    let mut value: Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let Some(obj) = value.as_object_mut() else {
        return Err(Error::Config("scenario must be a JSON object".into()));
    };
    if let Some(seed) = common.seed {
        obj.insert("seed".into(), seed.into());
    }
    if let Some(trials) = common.trials {
        let key = if heatmap { "heatmap_trials" } else { "trials" };
        obj.insert(key.into(), trials.into());
    }
    if common.allow_floor {
        obj.insert("allow_floor".into(), true.into());
    }
    ScenarioConfig::from_json_str(&value.to_string())
}

fn run(opts: Opts) -> vlc_apq::Result<bool> {
    match opts.command {
        Command::Gain { common, rx } => {
            let cfg = load(&common, false)?;
            let rx = rx.map(|RxPosition(v)| {
                Vec3::new(v[0], v[1], v.get(2).copied().unwrap_or(cfg.rx_height))
            });
            let (rows, serving) = cli::gain_table(&cfg, rx)?;
            for r in &rows {
                println!("Tx{}  gain {:.4e}  ({:.2} dB)", r.led_id, r.gain, r.gain_db);
            }
            println!("serving LED: Tx{serving}");
            let rec = cli::cmd_gain(&cfg, rx, &common.out)?;
            println!("wrote {:?}", rec.files);
        }
        Command::SerSweep { common } => {
            let cfg = load(&common, false)?;
            let rec = cli::cmd_ser_sweep(&cfg, &common.out)?;
            println!("wrote {:?}", rec.files);
        }
        Command::Heatmap { common } => {
            let cfg = load(&common, true)?;
            let rec = cli::cmd_heatmap(&cfg, &common.out)?;
            println!("wrote {:?}", rec.files);
        }
        Command::Validate { seed } => {
            let outcomes = validation::run_all(seed)?;
            for o in &outcomes {
                println!("{o}");
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} passed, {failed} failed", outcomes.len() - failed);
            return Ok(failed == 0);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Opts::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
