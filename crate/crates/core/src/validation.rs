//! Self-checks run by `apq-sim validate` and the acceptance test target.
//!
//! Each check returns a [`CheckOutcome`] instead of panicking so the CLI can
//! report every result before deciding its exit status.

use std::fmt;
use std::fs;

use crate::analysis::{self, StagePowers};
use crate::apq::{apq_modulate, index_to_components, sic_demodulate, ApqConfig};
use crate::channel::{
    channel_gain, detection_scale, DetectionScale, Luminaire, Photodetector, Vec3,
};
use crate::cli::{cmd_gain, cmd_heatmap, cmd_ser_sweep};
use crate::error::Result;
use crate::gssk::GsskConfig;
use crate::montecarlo::{gssk_scales, run_snr_sweep, simulate_apq, simulate_gssk, throughput_map};
use crate::scenario::ScenarioConfig;

/// Transmit SNRs of the analytic-vs-simulation comparison, dB.
pub const AGREEMENT_SNR_DB: [f64; 9] = [
    110.0, 115.0, 120.0, 125.0, 130.0, 135.0, 140.0, 145.0, 150.0,
];
pub const AGREEMENT_TRIALS: u64 = 1_000_000;
pub const GSSK_TRIALS: u64 = 100_000;
pub const HEATMAP_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}. {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: u8, name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        id,
        name,
        passed,
        detail,
    }
}

fn reference(scheme: &str, extra: &str) -> ScenarioConfig {
    ScenarioConfig::from_json_str(&format!(r#"{{"scheme": "{scheme}"{extra}}}"#))
        .expect("reference scenario is valid")
}

/// Check 1: Zero-scale limits of the closed form.
pub fn check_guessing_limits() -> CheckOutcome {
    let cfg = ApqConfig::new(16, 0.3).expect("alpha = 0.3 is valid");
    let p = cfg.powers();
    let b = analysis::ser_breakdown(DetectionScale::default(), &[p[0], p[1], p[2]]);
    let errs = [
        (b.amplitude - 0.5).abs(),
        (b.phase - 0.5).abs(),
        (b.quadrant - 0.75).abs(),
        (b.total - 15.0 / 16.0).abs(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    outcome(
        1,
        "guessing-limit exactness",
        worst <= 1e-9,
        format!(
            "(Pr1, Pr2, Pr3, Pr) = ({}, {}, {}, {}), max deviation {worst:.2e} (tol 1e-9)",
            b.amplitude, b.phase, b.quadrant, b.total
        ),
    )
}

/// Check 2: Closed form against Monte Carlo at the Rx1 geometry; `analytic` is
/// injectable so a deliberately broken formula can be shown to fail.
pub fn check_analytic_agreement_with<F>(analytic: F, trials: u64, seed: u64) -> Result<CheckOutcome>
where
    F: Fn(DetectionScale, &StagePowers) -> f64,
{
    let cfg = ApqConfig::new(16, 0.3)?;
    let p = cfg.powers();
    let powers = [p[0], p[1], p[2]];
    let scenario = reference("apq16", "").build_scenario()?;
    let (_, gain) = crate::apq::serving_gain(scenario.luminaires(), scenario.receiver())?;
    let mut passed = true;
    let mut worst_z: f64 = 0.0;
    let mut failures = Vec::new();
    for (i, &snr) in AGREEMENT_SNR_DB.iter().enumerate() {
        let scale = detection_scale(gain, snr);
        let a = analytic(scale, &powers);
        let mc = simulate_apq(&cfg, scale, trials, seed, i as u64)?.symbol;
        let se = mc.stderr_under(a);
        let z = if se > 0.0 {
            (mc.ser - a).abs() / se
        } else if mc.ser == a {
            0.0
        } else {
            f64::INFINITY
        };
        worst_z = worst_z.max(z);
        if !mc.agrees_with(a, 3.0) {
            passed = false;
            failures.push(format!("{snr} dB: analytic {a:.4e} vs mc {:.4e}", mc.ser));
        }
    }
    let detail = if passed {
        format!(
            "{} points, worst |z| = {worst_z:.2} (tol 3)",
            AGREEMENT_SNR_DB.len()
        )
    } else {
        format!("worst |z| = {worst_z:.2}; {}", failures.join("; "))
    };
    Ok(outcome(
        2,
        "analytic vs Monte Carlo agreement",
        passed,
        detail,
    ))
}

pub fn check_analytic_agreement(seed: u64) -> Result<CheckOutcome> {
    check_analytic_agreement_with(analysis::ser_total, AGREEMENT_TRIALS, seed)
}

/// Check 3: Exhaustive noiseless modulate/demodulate for every supported M.
pub fn check_noiseless_round_trip() -> Result<CheckOutcome> {
    let scale = DetectionScale::new(1.0)?;
    let mut errors = Vec::new();
    for m in [8, 16, 32] {
        let cfg = ApqConfig::new(m, 0.3)?;
        let bad = (0..m)
            .filter(|&k| {
                let c = index_to_components(k, &cfg).expect("in range");
                let x = apq_modulate(c, &cfg).expect("valid").value();
                sic_demodulate(x, scale, &cfg) != c
            })
            .count();
        errors.push((m, bad));
    }
    let passed = errors.iter().all(|&(_, b)| b == 0);
    Ok(outcome(
        3,
        "noiseless SIC round trip",
        passed,
        errors
            .iter()
            .map(|(m, b)| format!("M={m}: {b} errors"))
            .collect::<Vec<_>>()
            .join(", "),
    ))
}

/// Check 4: Aligned pair 2.25 m apart with the reference optics.
pub fn check_channel_gain_spot() -> Result<CheckOutcome> {
    let tx = Luminaire::new(Vec3::new(1.0, 1.0, 3.0), 30f64.to_radians())?;
    let rx = Photodetector::new(
        Vec3::new(1.0, 1.0, 0.75),
        1e-4,
        30f64.to_radians(),
        1.5,
        1.0,
    )?;
    let h = channel_gain(&tx, &rx)?;
    let rel = (h - 1.646e-4).abs() / 1.646e-4;
    Ok(outcome(
        4,
        "channel-gain spot value",
        rel <= 0.01,
        format!("h = {h:.5e}, relative error {rel:.2e} (tol 1e-2)"),
    ))
}

/// Check 5: GSSK with two exactly equal gains out of three never beats the
/// collision floor.
pub fn check_gssk_symmetry_floor(seed: u64) -> Result<CheckOutcome> {
    // equidistant from Tx1 and Tx2 in the d = 0.1 layout; Tx3 differs
    let cfg = reference(
        "gssk3",
        r#", "spacing": 0.1, "receiver": {"x": 2.5, "y": 1.5}"#,
    );
    let scenario = cfg.build_scenario()?;
    let gssk = GsskConfig::new(3)?;
    let mut worst = f64::INFINITY;
    for (i, &snr) in AGREEMENT_SNR_DB.iter().enumerate() {
        let mut gains = gssk_scales(&gssk, &scenario, snr)?;
        gains[1] = gains[0];
        let est = simulate_gssk(&gssk, &gains, GSSK_TRIALS, seed, i as u64)?;
        worst = worst.min(est.ser);
    }
    Ok(outcome(
        5,
        "GSSK symmetry floor",
        worst >= 0.2,
        format!("min SER over 110..150 dB = {worst:.4} (need >= 0.2)"),
    ))
}

/// Check 6: GSSK near the room center improves with SNR, at the exact center it
/// does not.
pub fn check_gssk_directional(seed: u64) -> Result<CheckOutcome> {
    let near = reference("gssk3", r#", "receiver": "rx2""#);
    let center = reference("gssk3", r#", "receiver": "rx3""#);
    let scheme = near.build_scheme()?;
    let a = run_snr_sweep(
        &scheme,
        &near.build_scenario()?,
        &AGREEMENT_SNR_DB,
        GSSK_TRIALS,
        seed,
    )?;
    let b = run_snr_sweep(
        &scheme,
        &center.build_scenario()?,
        &AGREEMENT_SNR_DB,
        GSSK_TRIALS,
        seed,
    )?;

    let monotone = a.points.windows(2).all(|w| {
        let slack = 3.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        w[1].ser <= w[0].ser + slack
    });
    let decreasing = a.points.last().map(|p| p.ser) < a.points.first().map(|p| p.ser);
    let final_ser = a.points.last().map_or(1.0, |p| p.ser);
    let center_min = b.points.iter().map(|p| p.ser).fold(f64::INFINITY, f64::min);
    let passed = monotone && decreasing && final_ser <= 1e-3 && center_min >= 0.2;
    let fmt_curve = |pts: &[crate::montecarlo::SerEstimate]| {
        pts.iter()
            .map(|p| format!("{:.3e}", p.ser))
            .collect::<Vec<_>>()
            .join(" ")
    };
    Ok(outcome(
        6,
        "GSSK near-center vs center",
        passed,
        format!(
            "Rx2 SER [{}] (monotone {monotone}, final {final_ser:.3e}, need <= 1e-3); Rx3 min SER {center_min:.3} (need >= 0.2)",
            fmt_curve(&a.points)
        ),
    ))
}

/// Check 7: APQ coverage is flat around every LED; GSSK with tight spacing has
/// abrupt throughput steps.
pub fn check_heatmap_structure(seed: u64) -> Result<CheckOutcome> {
    let apq_cfg = reference("apq16", "");
    let apq_scenario = apq_cfg.build_scenario()?;
    let apq = throughput_map(
        &apq_cfg.build_scheme()?,
        &apq_scenario,
        140.0,
        0.1,
        HEATMAP_TRIALS,
        seed,
    )?;
    let leds: Vec<Vec3> = apq_scenario
        .luminaires()
        .iter()
        .map(|l| l.position())
        .collect();
    let mut worst_near = f64::INFINITY;
    let mut cells = 0;
    for j in 0..apq.ny {
        for i in 0..apq.nx {
            let (x, y) = (apq.x(i), apq.y(j));
            if leds.iter().any(|p| (p.x - x).hypot(p.y - y) <= 0.75 + 1e-9) {
                cells += 1;
                worst_near = worst_near.min(apq.get(i, j));
            }
        }
    }

    let gssk_cfg = reference("gssk4", r#", "spacing": 0.1"#);
    let gssk = throughput_map(
        &gssk_cfg.build_scheme()?,
        &gssk_cfg.build_scenario()?,
        140.0,
        0.1,
        HEATMAP_TRIALS,
        seed,
    )?;
    let step = gssk.max_adjacent_step();
    Ok(outcome(
        7,
        "heatmap structure",
        worst_near >= 0.95 && step >= 0.3,
        format!(
            "APQ-16 min over {cells} cells near LEDs = {worst_near:.4} (need >= 0.95); GSSK-4 d=0.1 max adjacent step = {step:.3} (need >= 0.3)"
        ),
    ))
}

/// Check 8: Re-running every command with the same config and seed reproduces the
/// CSV bytes.
pub fn check_determinism(seed: u64) -> Result<CheckOutcome> {
    let configs = [
        reference(
            "apq16",
            &format!(
                r#", "trials": 20000, "snr_db": [110, 120, 130], "heatmap_trials": 500, "grid_spacing": 0.5, "seed": {seed}"#
            ),
        ),
        reference(
            "gssk3",
            &format!(
                r#", "trials": 20000, "receiver": "rx2", "spacing": 0.1, "heatmap_trials": 500, "grid_spacing": 0.5, "seed": {seed}"#
            ),
        ),
    ];
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for cfg in &configs {
        let dirs = [
            tempfile::tempdir().map_err(tmp_err)?,
            tempfile::tempdir().map_err(tmp_err)?,
        ];
        for d in &dirs {
            cmd_gain(cfg, None, d.path())?;
            cmd_ser_sweep(cfg, d.path())?;
            cmd_heatmap(cfg, d.path())?;
        }
        for name in ["gain.csv", "ser_sweep.csv", "heatmap.csv", "heatmap.json"] {
            let a = fs::read(dirs[0].path().join(name)).map_err(tmp_err)?;
            let b = fs::read(dirs[1].path().join(name)).map_err(tmp_err)?;
            compared += 1;
            if a != b {
                mismatched.push(name);
            }
        }
    }
    Ok(outcome(
        8,
        "determinism",
        mismatched.is_empty(),
        format!("{compared} files compared, mismatches: {mismatched:?}"),
    ))
}

fn tmp_err(e: std::io::Error) -> crate::error::Error {
    crate::error::Error::Config(format!("temporary directory: {e}"))
}

/// Runs every check in order.
pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_guessing_limits(),
        check_analytic_agreement(seed)?,
        check_noiseless_round_trip()?,
        check_channel_gain_spot()?,
        check_gssk_symmetry_floor(seed)?,
        check_gssk_directional(seed)?,
        check_heatmap_structure(seed)?,
        check_determinism(seed)?,
    ])
}
