//! Monte Carlo against independent references: the closed form, exact
//! enumeration, and the statistical properties the estimator must have.

use vlc_apq::analysis::{ser_amplitude, ser_breakdown, ser_phase, ser_quadrant, ser_total};
use vlc_apq::apq::serving_gain;
use vlc_apq::channel::detection_scale;
use vlc_apq::montecarlo::{
    run_ser_point, run_snr_sweep, simulate_apq, simulate_gssk, throughput_map, Scheme, SerEstimate,
};
use vlc_apq::{ApqConfig, DetectionScale, GsskConfig, ScenarioConfig, Vec3};

fn powers() -> [f64; 3] {
    let p = ApqConfig::new(16, 0.3).unwrap().powers();
    [p[0], p[1], p[2]]
}

fn scenario(json: &str) -> ScenarioConfig {
    ScenarioConfig::from_json_str(json).unwrap()
}

fn raw_apq16() -> Scheme {
    Scheme::Apq {
        config: ApqConfig::new(16, 0.3).unwrap(),
        normalize_power: false,
    }
}

fn assert_agrees(est: &SerEstimate, p: f64, what: &str) {
    assert!(
        est.agrees_with(p, 3.0),
        "{what}: mc {} vs reference {p} (±3·{})",
        est.ser,
        est.stderr_under(p)
    );
}

#[test]
fn amplitude_stage_matches_closed_form() {
    let cfg = ApqConfig::new(16, 0.3).unwrap();
    for (i, s) in [15.0, 25.0, 40.0].into_iter().enumerate() {
        let scale = DetectionScale::new(s).unwrap();
        let r = simulate_apq(&cfg, scale, 1_000_000, 11, i as u64).unwrap();
        assert_agrees(&r.amplitude, ser_amplitude(scale, &powers()), "stage 1");
    }
}

#[test]
fn later_stages_match_closed_form_in_operating_range() {
    let cfg = ApqConfig::new(16, 0.3).unwrap();
    for (i, s) in [52.06, 80.0, 120.0].into_iter().enumerate() {
        let scale = DetectionScale::new(s).unwrap();
        let r = simulate_apq(&cfg, scale, 1_000_000, 12, i as u64).unwrap();
        assert_agrees(&r.phase, ser_phase(scale, &powers()), "stage 2");
        assert_agrees(&r.quadrant, ser_quadrant(scale, &powers()), "stage 3");
        assert_agrees(&r.symbol, ser_total(scale, &powers()), "total");
    }
}

#[test]
fn rx1_at_130_db() {
    let cfg = scenario(r#"{"scheme": {"apq": {"m": 16, "normalize_power": false}}}"#);
    let sc = cfg.build_scenario().unwrap();
    let (_, gain) = serving_gain(sc.luminaires(), sc.receiver()).unwrap();
    let scale = detection_scale(gain, 130.0);
    assert!((scale.value() - 520.5).abs() / 520.5 < 1e-3);
    let est = run_ser_point(&raw_apq16(), &sc, 130.0, 1_000_000, 3).unwrap();
    assert_agrees(&est, ser_total(scale, &powers()), "130 dB");
    let b = ser_breakdown(scale, &powers());
    assert!(b.amplitude < 1e-100 && b.total < 1e-7);
}

#[test]
fn huge_snr_is_error_free_and_reruns_identical() {
    let sc = scenario(r#"{"scheme": "apq16"}"#).build_scenario().unwrap();
    let a = run_ser_point(&raw_apq16(), &sc, 200.0, 10_000, 5).unwrap();
    assert_eq!(a.errors, 0);
    let b = run_ser_point(&raw_apq16(), &sc, 115.0, 10_000, 5).unwrap();
    let c = run_ser_point(&raw_apq16(), &sc, 115.0, 10_000, 5).unwrap();
    assert_eq!(b, c);
}

#[test]
fn results_independent_of_worker_count() {
    let sc = scenario(r#"{"scheme": "gssk4", "spacing": 0.1}"#)
        .build_scenario()
        .unwrap();
    let scheme = Scheme::Gssk(GsskConfig::new(4).unwrap());
    let snr = [120.0, 130.0, 140.0];
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let one = pool.install(|| run_snr_sweep(&scheme, &sc, &snr, 50_000, 4).unwrap());
    let many = run_snr_sweep(&scheme, &sc, &snr, 50_000, 4).unwrap();
    assert_eq!(one, many);
}

#[test]
fn apq_error_rate_falls_with_scale() {
    let cfg = ApqConfig::new(16, 0.3).unwrap();
    let points: Vec<SerEstimate> = [30.0, 50.0, 70.0, 90.0]
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            simulate_apq(&cfg, DetectionScale::new(s).unwrap(), 100_000, 6, i as u64)
                .unwrap()
                .symbol
        })
        .collect();
    for w in points.windows(2) {
        assert!(w[1].ser <= w[0].ser + 3.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt());
    }
    assert!(points[3].ser < points[0].ser);
}

#[test]
fn stderr_scales_with_trials() {
    let cfg = ApqConfig::new(16, 0.3).unwrap();
    let scale = DetectionScale::new(60.0).unwrap();
    let a = simulate_apq(&cfg, scale, 200_000, 8, 0).unwrap().symbol;
    let b = simulate_apq(&cfg, scale, 400_000, 8, 1).unwrap().symbol;
    let ratio = a.stderr.powi(2) / b.stderr.powi(2);
    assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
}

#[test]
fn apq_depends_only_on_serving_gain() {
    // Rx1 under Tx1 and a point under Tx2 see identical serving gains
    let scheme = raw_apq16();
    let base = scenario(r#"{"scheme": "apq16"}"#).build_scenario().unwrap();
    let mirrored = base.with_receiver_at(Vec3::new(3.0, 3.0, 0.75)).unwrap();
    let a = run_snr_sweep(&scheme, &base, &[110.0, 115.0, 120.0], 200_000, 21).unwrap();
    let b = run_snr_sweep(&scheme, &mirrored, &[110.0, 115.0, 120.0], 200_000, 22).unwrap();
    for (x, y) in a.points.iter().zip(&b.points) {
        // two-proportion z-test at p > 0.01
        let pooled = (x.errors + y.errors) as f64 / (x.trials + y.trials) as f64;
        let se = (pooled * (1.0 - pooled) * (1.0 / x.trials as f64 + 1.0 / y.trials as f64)).sqrt();
        let z = if se > 0.0 {
            (x.ser - y.ser).abs() / se
        } else {
            0.0
        };
        assert!(z < 2.576, "z = {z}");
    }
}

#[test]
fn transmit_to_received_snr_offset() {
    // SER crossing 1e-2 in transmit SNR minus the same crossing in received
    // SNR (20·log10 of the detection scale) equals −20·log10(h)
    let sc = scenario(r#"{"scheme": "apq16"}"#).build_scenario().unwrap();
    let (_, h) = serving_gain(sc.luminaires(), sc.receiver()).unwrap();
    let crossing = |f: &dyn Fn(f64) -> f64| {
        let (mut lo, mut hi) = (0.0, 200.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 1e-2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let tx = crossing(&|snr| ser_total(detection_scale(h, snr), &powers()));
    let rx = crossing(&|snr| ser_total(detection_scale(1.0, snr), &powers()));
    let offset = tx - rx;
    assert!((offset + 20.0 * h.log10()).abs() < 1e-6);
    assert!((75.0..=80.0).contains(&offset), "{offset}");
}

#[test]
fn gssk_center_fails_and_zero_gains_guess() {
    let cfg = scenario(r#"{"scheme": "gssk3", "receiver": "rx3"}"#);
    let sweep = run_snr_sweep(
        &cfg.build_scheme().unwrap(),
        &cfg.build_scenario().unwrap(),
        &[110.0, 130.0, 150.0],
        100_000,
        2,
    )
    .unwrap();
    assert!(sweep.points.iter().all(|p| p.ser >= 0.2));

    let g = GsskConfig::new(3).unwrap();
    let est = simulate_gssk(&g, &[0.0; 3], 100_000, 3, 0).unwrap();
    assert_agrees(&est, 7.0 / 8.0, "no information");
}

#[test]
fn gssk_equal_gain_floor_matches_enumeration() {
    // gains (g, g, 3g): patterns 100/010 and 101/011 collide, floor 2/8
    let g = GsskConfig::new(3).unwrap();
    let est = simulate_gssk(&g, &[1e4, 1e4, 3e4], 200_000, 4, 0).unwrap();
    assert_agrees(&est, 0.25, "collision floor");
}

#[test]
fn throughput_map_examples() {
    let cfg = scenario(r#"{"scheme": {"apq": {"m": 16}}, "grid_spacing": 0.5}"#);
    let sc = cfg.build_scenario().unwrap();
    let map = throughput_map(&cfg.build_scheme().unwrap(), &sc, 140.0, 0.5, 20_000, 1).unwrap();
    assert_eq!((map.nx, map.ny), (9, 9));
    assert!(map.values.iter().all(|v| (0.0..=1.0).contains(v)));
    assert_eq!(map.values.iter().cloned().fold(0.0, f64::max), 1.0);
    // (1, 1) sits under Tx1
    assert_eq!(map.get(2, 2), 1.0);
    // the corner sees no LED: pure guessing
    let corner = map.get(0, 0);
    assert!((corner - 1.0 / 16.0).abs() < 0.01, "{corner}");
}

#[test]
fn sweep_rejects_bad_snr_lists() {
    let sc = scenario(r#"{"scheme": "apq16"}"#).build_scenario().unwrap();
    assert!(run_snr_sweep(&raw_apq16(), &sc, &[], 10, 0).is_err());
    assert!(run_snr_sweep(&raw_apq16(), &sc, &[120.0, 110.0], 10, 0).is_err());
}
