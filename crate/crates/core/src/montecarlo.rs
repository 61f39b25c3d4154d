//! Seeded Monte Carlo SER estimation, SNR sweeps and throughput maps.
//!
//! Trials are grouped into fixed-size chunks. Every chunk draws from its own
//! ChaCha stream keyed by `(seed, stream, chunk)`, where `stream` identifies
//! the sweep point or map cell. Error counts are summed as integers, so the
//! result does not depend on how rayon schedules the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis;
use crate::apq::{index_to_components, serving_gain, sic_demodulate, ApqConfig, ComponentIndices};
use crate::channel::{channel_gain, detection_scale, DetectionScale, Vec3};
use crate::error::{Error, Result};
use crate::gssk::{GsskConfig, GsskDetector};
use crate::scenario::Scenario;

const CHUNK: u64 = 4096;

/// Monte Carlo error-rate estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SerEstimate {
    pub errors: u64,
    pub trials: u64,
    pub ser: f64,
    pub stderr: f64,
}

impl SerEstimate {
    pub fn new(errors: u64, trials: u64) -> Self {
        assert!(trials > 0 && errors <= trials);
        let ser = errors as f64 / trials as f64;
        Self {
            errors,
            trials,
            ser,
            stderr: (ser * (1.0 - ser) / trials as f64).sqrt(),
        }
    }

    /// Binomial standard error if the true rate were `p`.
    pub fn stderr_under(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Whether `p` lies within `k` standard errors of the estimate. The
    /// spread is taken under `p` itself, which keeps the test meaningful
    /// when no errors were observed.
    pub fn agrees_with(&self, p: f64, k: f64) -> bool {
        (self.ser - p).abs() <= k * self.stderr_under(p)
    }
}

/// Modulation scheme under test.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Apq {
        config: ApqConfig,
        /// Divide the transmitted waveform by its constellation mean so the
        /// average optical power is one, as for GSSK.
        normalize_power: bool,
    },
    Gssk(GsskConfig),
}

impl Scheme {
    pub fn m_total(&self) -> usize {
        match self {
            Scheme::Apq { config, .. } => config.m_total(),
            Scheme::Gssk(cfg) => cfg.m_total(),
        }
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.m_total().trailing_zeros()
    }

    pub fn label(&self) -> String {
        match self {
            Scheme::Apq { config, .. } => format!("apq{}", config.m_total()),
            Scheme::Gssk(cfg) => format!("gssk{}", cfg.n_tx()),
        }
    }

    fn apq_power_factor(config: &ApqConfig, normalize_power: bool) -> f64 {
        if normalize_power {
            1.0 / config.mean_amplitude()
        } else {
            1.0
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG for one chunk of one stream.
pub fn chunk_rng(seed: u64, stream: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream)));
    rng.set_stream(chunk);
    rng
}

/// Runs `trials` independent trials; bit `b` of each trial's return value
/// increments counter `b`.
fn count_events<const N: usize, F>(trials: u64, seed: u64, stream: u64, trial: F) -> [u64; N]
where
    F: Fn(&mut ChaCha8Rng) -> u8 + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chunk_rng(seed, stream, chunk);
            let n = CHUNK.min(trials - chunk * CHUNK);
            let mut counts = [0u64; N];
            for _ in 0..n {
                let events = trial(&mut rng);
                for (b, c) in counts.iter_mut().enumerate() {
                    *c += u64::from((events >> b) & 1);
                }
            }
            counts
        })
        .reduce(
            || [0u64; N],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::Domain {
            name: "trials",
            value: 0.0,
            expected: "trials >= 1",
        });
    }
    Ok(())
}

/// Symbol and per-layer error rates of one APQ simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApqMcResult {
    pub symbol: SerEstimate,
    pub amplitude: SerEstimate,
    pub phase: SerEstimate,
    pub quadrant: SerEstimate,
}

/// APQ over an AWGN sample with unit noise variance: the receiver sees
/// `scale · x + n` and runs SIC with the same scale.
pub fn simulate_apq(
    cfg: &ApqConfig,
    scale: DetectionScale,
    trials: u64,
    seed: u64,
    stream: u64,
) -> Result<ApqMcResult> {
    check_trials(trials)?;
    let m = cfg.m_total();
    let symbols: Vec<(ComponentIndices, f64)> = (0..m)
        .map(|k| {
            let c = index_to_components(k, cfg)?;
            Ok((c, crate::apq::apq_modulate(c, cfg)?.value()))
        })
        .collect::<Result<_>>()?;
    let s = scale.value();
    let [symbol, amp, phase, quad] = count_events::<4, _>(trials, seed, stream, |rng| {
        let (sent, x) = symbols[rng.random_range(0..m)];
        let noise: f64 = rng.sample(StandardNormal);
        let got = sic_demodulate(s * x + noise, scale, cfg);
        u8::from(got != sent)
            | u8::from(got.a != sent.a) << 1
            | u8::from(got.p != sent.p) << 2
            | u8::from(got.q != sent.q) << 3
    });
    Ok(ApqMcResult {
        symbol: SerEstimate::new(symbol, trials),
        amplitude: SerEstimate::new(amp, trials),
        phase: SerEstimate::new(phase, trials),
        quadrant: SerEstimate::new(quad, trials),
    })
}

/// GSSK with per-LED detection scales `gains`.
pub fn simulate_gssk(
    cfg: &GsskConfig,
    gains: &[f64],
    trials: u64,
    seed: u64,
    stream: u64,
) -> Result<SerEstimate> {
    check_trials(trials)?;
    let det = GsskDetector::new(gains, cfg)?;
    let m = cfg.m_total();
    let [errors] = count_events::<1, _>(trials, seed, stream, |rng| {
        let sent = rng.random_range(0..m);
        let noise: f64 = rng.sample(StandardNormal);
        u8::from(det.detect(det.means()[sent] + noise) != sent)
    });
    Ok(SerEstimate::new(errors, trials))
}

/// Effective APQ detection scale at the scenario's receiver.
pub fn apq_scale(
    config: &ApqConfig,
    normalize_power: bool,
    scenario: &Scenario,
    snr_db: f64,
) -> Result<DetectionScale> {
    let (_, gain) = serving_gain(scenario.luminaires(), scenario.receiver())?;
    Ok(detection_scale(gain, snr_db).boosted(Scheme::apq_power_factor(config, normalize_power)))
}

/// Per-LED detection scales of the GSSK transmit set.
pub fn gssk_scales(cfg: &GsskConfig, scenario: &Scenario, snr_db: f64) -> Result<Vec<f64>> {
    cfg.led_indices()
        .iter()
        .map(|&i| {
            let tx = scenario.luminaires().get(i).ok_or(Error::IndexOutOfRange {
                index: i,
                size: scenario.luminaires().len(),
            })?;
            Ok(detection_scale(channel_gain(tx, scenario.receiver())?, snr_db).value())
        })
        .collect()
}

fn ser_point_stream(
    scheme: &Scheme,
    scenario: &Scenario,
    snr_db: f64,
    trials: u64,
    seed: u64,
    stream: u64,
) -> Result<SerEstimate> {
    match scheme {
        Scheme::Apq {
            config,
            normalize_power,
        } => {
            let scale = apq_scale(config, *normalize_power, scenario, snr_db)?;
            Ok(simulate_apq(config, scale, trials, seed, stream)?.symbol)
        }
        Scheme::Gssk(cfg) => simulate_gssk(
            cfg,
            &gssk_scales(cfg, scenario, snr_db)?,
            trials,
            seed,
            stream,
        ),
    }
}

/// Monte Carlo SER at one transmit SNR for the scenario's receiver.
pub fn run_ser_point(
    scheme: &Scheme,
    scenario: &Scenario,
    snr_db: f64,
    trials: u64,
    seed: u64,
) -> Result<SerEstimate> {
    ser_point_stream(scheme, scenario, snr_db, trials, seed, 0)
}

/// Closed-form SER where one exists (16-ary APQ), else `None`.
pub fn analytic_ser(scheme: &Scheme, scenario: &Scenario, snr_db: f64) -> Result<Option<f64>> {
    match scheme {
        Scheme::Apq {
            config,
            normalize_power,
        } if config.m_total() == 16 => {
            let p = config.powers();
            let scale = apq_scale(config, *normalize_power, scenario, snr_db)?;
            Ok(Some(analysis::ser_total(scale, &[p[0], p[1], p[2]])))
        }
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub snr_db: Vec<f64>,
    pub points: Vec<SerEstimate>,
    pub scheme: String,
    pub geometry: String,
}

/// One [`run_ser_point`] per SNR, point `i` drawing from stream `i`.
pub fn run_snr_sweep(
    scheme: &Scheme,
    scenario: &Scenario,
    snr_list: &[f64],
    trials: u64,
    seed: u64,
) -> Result<SweepResult> {
    if snr_list.is_empty() {
        return Err(Error::Config("empty SNR list".into()));
    }
    if !snr_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config(
            "SNR values must be strictly increasing".into(),
        ));
    }
    let points = snr_list
        .par_iter()
        .enumerate()
        .map(|(i, &snr)| ser_point_stream(scheme, scenario, snr, trials, seed, i as u64))
        .collect::<Result<Vec<_>>>()?;
    let rx = scenario.receiver().position();
    Ok(SweepResult {
        snr_db: snr_list.to_vec(),
        points,
        scheme: scheme.label(),
        geometry: format!("rx=({},{},{})", rx.x, rx.y, rx.z),
    })
}

/// Normalized throughput over a receiver grid covering the room floor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputMap {
    pub origin: (f64, f64),
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, row `j` at `y = origin.1 + j·spacing`.
    pub values: Vec<f64>,
    /// Largest `1 − SER` before normalization.
    pub peak_success: f64,
}

impl ThroughputMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin.0 + i as f64 * self.spacing
    }

    pub fn y(&self, j: usize) -> f64 {
        self.origin.1 + j as f64 * self.spacing
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.nx)
    }

    /// Largest absolute difference between horizontally or vertically
    /// adjacent cells.
    pub fn max_adjacent_step(&self) -> f64 {
        let mut best: f64 = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let v = self.get(i, j);
                if i + 1 < self.nx {
                    best = best.max((v - self.get(i + 1, j)).abs());
                }
                if j + 1 < self.ny {
                    best = best.max((v - self.get(i, j + 1)).abs());
                }
            }
        }
        best
    }
}

fn grid_count(extent: f64, spacing: f64) -> Result<usize> {
    let n = extent / spacing;
    if !spacing.is_finite() || spacing <= 0.0 || (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
        return Err(Error::Domain {
            name: "grid_spacing",
            value: spacing,
            expected: "positive and dividing the room floor",
        });
    }
    Ok(n.round() as usize + 1)
}

/// Throughput `1 − SER` per grid cell, normalized by the map maximum. APQ
/// is served by the strongest LED at each cell; GSSK keeps its LED set.
pub fn throughput_map(
    scheme: &Scheme,
    scenario: &Scenario,
    snr_db: f64,
    grid_spacing: f64,
    trials: u64,
    seed: u64,
) -> Result<ThroughputMap> {
    let room = scenario.room();
    let nx = grid_count(room.x, grid_spacing)?;
    let ny = grid_count(room.y, grid_spacing)?;
    let z = scenario.receiver().position().z;
    let success = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            let pos = Vec3::new(i as f64 * grid_spacing, j as f64 * grid_spacing, z);
            let cell = scenario.with_receiver_at(pos)?;
            let est = ser_point_stream(scheme, &cell, snr_db, trials, seed, k as u64)?;
            Ok(1.0 - est.ser)
        })
        .collect::<Result<Vec<f64>>>()?;
    let peak = success.iter().cloned().fold(0.0, f64::max);
    let values = if peak > 0.0 {
        success.iter().map(|v| v / peak).collect()
    } else {
        success
    };
    Ok(ThroughputMap {
        origin: (0.0, 0.0),
        spacing: grid_spacing,
        nx,
        ny,
        values,
        peak_success: peak,
    })
}

/// Absolute throughput `B · log₂M · (1 − SER)` in bit/s.
pub fn absolute_throughput(data_rate_bps: f64, bits_per_symbol: u32, ser: f64) -> f64 {
    data_rate_bps * f64::from(bits_per_symbol) * (1.0 - ser)
}
