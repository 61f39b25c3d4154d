//! Command implementations behind the `apq-sim` binary.
//!
//! Every command writes UTF-8 CSV with a header row and a `config_hash`
//! column, plus a `run.json` record. CSV content depends only on the
//! effective configuration, so identical configs reproduce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::apq::serving_gain;
use crate::channel::{channel_gain, Vec3};
use crate::error::{Error, Result};
use crate::montecarlo::{absolute_throughput, analytic_ser, run_snr_sweep, throughput_map};
use crate::scenario::ScenarioConfig;

/// Bookkeeping written next to every command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub run_id: String,
    pub config_hash: String,
    pub timestamp: u64,
    pub files: Vec<PathBuf>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

fn write_record(out_dir: &Path, hash: &str, files: Vec<PathBuf>) -> Result<ResultRecord> {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let digest = Sha256::digest(format!("{hash}:{timestamp}:{files:?}").as_bytes());
    let run_id = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
    let record = ResultRecord {
        run_id,
        config_hash: hash.to_string(),
        timestamp,
        files,
    };
    let path = out_dir.join("run.json");
    let text = serde_json::to_string_pretty(&record).expect("record serializes");
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(record)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn fmt_f64(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainRow {
    pub led_id: usize,
    pub gain: f64,
    pub gain_db: f64,
}

/// Per-LED channel gains at `rx` (floor coordinates plus optional height),
/// and the index of the serving LED.
pub fn gain_table(cfg: &ScenarioConfig, rx: Option<Vec3>) -> Result<(Vec<GainRow>, usize)> {
    let mut scenario = cfg.build_scenario()?;
    if let Some(p) = rx {
        scenario = scenario.with_receiver_at(p)?;
    }
    let rows = scenario
        .luminaires()
        .iter()
        .enumerate()
        .map(|(i, tx)| {
            let gain = channel_gain(tx, scenario.receiver())?;
            Ok(GainRow {
                led_id: i + 1,
                gain,
                gain_db: 20.0 * gain.log10(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (best, _) = serving_gain(scenario.luminaires(), scenario.receiver())?;
    Ok((rows, best + 1))
}

pub fn cmd_gain(cfg: &ScenarioConfig, rx: Option<Vec3>, out_dir: &Path) -> Result<ResultRecord> {
    ensure_dir(out_dir)?;
    let hash = cfg.config_hash();
    let (rows, _) = gain_table(cfg, rx)?;
    let path = out_dir.join("gain.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["led_id", "gain", "gain_db", "config_hash"])
        .map_err(csv_err)?;
    for r in &rows {
        w.write_record([
            r.led_id.to_string(),
            fmt_f64(r.gain),
            fmt_f64(r.gain_db),
            hash.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    write_record(out_dir, &hash, vec![path])
}

pub fn cmd_ser_sweep(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ResultRecord> {
    ensure_dir(out_dir)?;
    let hash = cfg.config_hash();
    let scheme = cfg.build_scheme()?;
    let scenario = cfg.build_scenario()?;
    let sweep = run_snr_sweep(&scheme, &scenario, &cfg.snr_db, cfg.trials, cfg.seed)?;
    let rx = scenario.receiver().position();
    let path = out_dir.join("ser_sweep.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record([
        "snr_db",
        "ser_mc",
        "stderr",
        "ser_analytic",
        "scheme",
        "rx_x",
        "rx_y",
        "config_hash",
    ])
    .map_err(csv_err)?;
    for (snr, est) in sweep.snr_db.iter().zip(&sweep.points) {
        let analytic = analytic_ser(&scheme, &scenario, *snr)?
            .map(fmt_f64)
            .unwrap_or_default();
        w.write_record([
            fmt_f64(*snr),
            fmt_f64(est.ser),
            fmt_f64(est.stderr),
            analytic,
            sweep.scheme.clone(),
            fmt_f64(rx.x),
            fmt_f64(rx.y),
            hash.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    write_record(out_dir, &hash, vec![path])
}

#[derive(Debug, Clone, Serialize)]
struct HeatmapMeta {
    config_hash: String,
    scheme: String,
    m: usize,
    snr_db: f64,
    origin_x: f64,
    origin_y: f64,
    spacing: f64,
    nx: usize,
    ny: usize,
    trials_per_cell: u64,
    seed: u64,
    peak_success: f64,
    peak_throughput_bps: f64,
}

pub fn cmd_heatmap(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ResultRecord> {
    ensure_dir(out_dir)?;
    let hash = cfg.config_hash();
    let scheme = cfg.build_scheme()?;
    let scenario = cfg.build_scenario()?;
    let snr = cfg.heatmap_snr()?;
    let map = throughput_map(
        &scheme,
        &scenario,
        snr,
        cfg.grid_spacing,
        cfg.heatmap_trials,
        cfg.seed,
    )?;

    let csv_path = out_dir.join("heatmap.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
    let mut header = vec!["config_hash".to_string(), "y_m".to_string()];
    header.extend((0..map.nx).map(|i| format!("x={}", fmt_f64(map.x(i)))));
    w.write_record(&header).map_err(csv_err)?;
    for (j, row) in map.rows().enumerate() {
        let mut rec = vec![hash.clone(), fmt_f64(map.y(j))];
        rec.extend(row.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| io_err(&csv_path, e))?;

    let meta = HeatmapMeta {
        config_hash: hash.clone(),
        scheme: scheme.label(),
        m: scheme.m_total(),
        snr_db: snr,
        origin_x: map.origin.0,
        origin_y: map.origin.1,
        spacing: map.spacing,
        nx: map.nx,
        ny: map.ny,
        trials_per_cell: cfg.heatmap_trials,
        seed: cfg.seed,
        peak_success: map.peak_success,
        peak_throughput_bps: absolute_throughput(
            cfg.data_rate_bps,
            scheme.bits_per_symbol(),
            1.0 - map.peak_success,
        ),
    };
    let meta_path = out_dir.join("heatmap.json");
    fs::write(
        &meta_path,
        serde_json::to_string_pretty(&meta).expect("meta serializes"),
    )
    .map_err(|e| io_err(&meta_path, e))?;
    write_record(out_dir, &hash, vec![csv_path, meta_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_table_reference_points() {
        let cfg = ScenarioConfig::from_json_str(r#"{"scheme":"apq16"}"#).unwrap();
        let (rows, serving) = gain_table(&cfg, None).unwrap();
        assert_eq!(serving, 1);
        assert!((rows[0].gain - 1.646e-4).abs() / 1.646e-4 < 1e-3);
        assert!(rows[1..].iter().all(|r| r.gain < rows[0].gain));

        let (_, serving) = gain_table(&cfg, Some(Vec3::new(2.0, 2.0, 0.75))).unwrap();
        assert_eq!(serving, 3);

        let (rows, _) = gain_table(&cfg, Some(Vec3::new(0.0, 4.0, 0.75))).unwrap();
        assert!(rows
            .iter()
            .all(|r| r.gain == 0.0 && r.gain_db == f64::NEG_INFINITY));
    }

    #[test]
    fn gain_csv_written() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ScenarioConfig::from_json_str(r#"{"scheme":"apq16"}"#).unwrap();
        let rec = cmd_gain(&cfg, None, dir.path()).unwrap();
        let text = fs::read_to_string(&rec.files[0]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "led_id,gain,gain_db,config_hash");
        assert_eq!(lines.count(), 5);
        assert!(dir.path().join("run.json").exists());
    }
}
