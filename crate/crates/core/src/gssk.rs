//! Generalized space shift keying over a single photodetector.
//!
//! Each of the `N_T` LEDs is either on or off; the on/off pattern is the
//! symbol. The receiver knows every per-LED gain and picks the pattern whose
//! noiseless sum is closest to the received sample.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GsskConfig {
    n_tx: usize,
    led_indices: Vec<usize>,
    amplitude_per_led: f64,
}

impl GsskConfig {
    /// Uses the first `n_tx` luminaires of the scenario.
    pub fn new(n_tx: usize) -> Result<Self> {
        Self::with_leds((0..n_tx).collect())
    }

    pub fn with_leds(led_indices: Vec<usize>) -> Result<Self> {
        let n_tx = led_indices.len();
        if !(1..=16).contains(&n_tx) {
            return Err(Error::Domain {
                name: "n_tx",
                value: n_tx as f64,
                expected: "1 <= n_tx <= 16",
            });
        }
        let mut sorted = led_indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != n_tx {
            return Err(Error::Config("GSSK LED indices must be distinct".into()));
        }
        // a uniformly drawn pattern has n_tx/2 LEDs on
        let amplitude_per_led = 2.0 / n_tx as f64;
        Ok(Self {
            n_tx,
            led_indices,
            amplitude_per_led,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn m_total(&self) -> usize {
        1 << self.n_tx
    }

    pub fn led_indices(&self) -> &[usize] {
        &self.led_indices
    }

    pub fn amplitude_per_led(&self) -> f64 {
        self.amplitude_per_led
    }
}

/// On/off state per participating LED.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActivationPattern {
    pub bits: Vec<u8>,
}

impl ActivationPattern {
    pub fn active_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn to_index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }
}

/// Binary expansion of `symbol_index`, most significant bit on LED 0.
pub fn gssk_modulate(symbol_index: usize, n_tx: usize) -> Result<ActivationPattern> {
    let m = 1usize << n_tx;
    if symbol_index >= m {
        return Err(Error::IndexOutOfRange {
            index: symbol_index,
            size: m,
        });
    }
    let bits = (0..n_tx)
        .map(|i| ((symbol_index >> (n_tx - 1 - i)) & 1) as u8)
        .collect();
    Ok(ActivationPattern { bits })
}

fn check_gains(gains: &[f64], cfg: &GsskConfig) -> Result<()> {
    if gains.len() != cfg.n_tx {
        return Err(Error::LengthMismatch {
            expected: cfg.n_tx,
            actual: gains.len(),
        });
    }
    Ok(())
}

/// Noiseless receive level of a pattern. `gains` are per-LED detection
/// scales (channel gain times the transmit-SNR amplitude factor).
pub fn gssk_received_mean(
    pattern: &ActivationPattern,
    gains: &[f64],
    cfg: &GsskConfig,
) -> Result<f64> {
    check_gains(gains, cfg)?;
    if pattern.bits.len() != cfg.n_tx {
        return Err(Error::LengthMismatch {
            expected: cfg.n_tx,
            actual: pattern.bits.len(),
        });
    }
    Ok(cfg.amplitude_per_led
        * pattern
            .bits
            .iter()
            .zip(gains)
            .map(|(&b, &g)| f64::from(b) * g)
            .sum::<f64>())
}

/// Maximum-likelihood detector with the hypothesis means precomputed.
#[derive(Debug, Clone)]
pub struct GsskDetector {
    means: Vec<f64>,
}

impl GsskDetector {
    pub fn new(gains: &[f64], cfg: &GsskConfig) -> Result<Self> {
        check_gains(gains, cfg)?;
        let means = (0..cfg.m_total())
            .map(|k| gssk_received_mean(&gssk_modulate(k, cfg.n_tx)?, gains, cfg))
            .collect::<Result<_>>()?;
        Ok(Self { means })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Nearest hypothesis; the lowest symbol index wins exact ties.
    pub fn detect(&self, received: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, &mu) in self.means.iter().enumerate() {
            let d = (received - mu) * (received - mu);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }
}

pub fn gssk_detect_ml(received: f64, gains: &[f64], cfg: &GsskConfig) -> Result<usize> {
    Ok(GsskDetector::new(gains, cfg)?.detect(received))
}
