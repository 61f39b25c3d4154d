//! Amplitude/phase/quadrant (APQ) modem.
//!
//! An M-ary APSK symbol is split into three integer components: the ring it
//! sits on, its phase slot inside a sector, and the sector (quadrant for
//! M = 8 and 16). Each component becomes a unipolar PAM level on `[0, 1]`,
//! and the three levels are superimposed with geometrically decaying powers
//! `P₁ > P₂ > P₃`. The receiver peels them off strongest-first by successive
//! interference cancellation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_gain, DetectionScale, Luminaire, Photodetector};
use crate::error::{Error, Result};

/// What to do when a power allocation cannot separate the superposed layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SicPolicy {
    /// Reject any allocation with a noiseless error floor.
    #[default]
    Strict,
    /// Accept it and log a warning.
    AllowFloor,
}

/// Outcome of checking a power allocation against the layer orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SicMargin {
    /// Every layer's half level spacing exceeds the worst-case residual from
    /// the weaker layers, so noiseless SIC is exact.
    ZeroFloor,
    /// `P₁` exceeds the sum of the weaker powers, but residual interference
    /// can still cross a decision threshold without noise.
    DominantOnly,
    /// `P₁ ≤ P₂ + P₃`.
    Violated,
}

/// Which symbol attribute a superposed layer carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Amplitude,
    Phase,
    Quadrant,
}

/// One superposed PAM layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub component: Component,
    pub order: usize,
    pub power: f64,
}

/// Per-symbol decomposition into amplitude, phase and quadrant indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ComponentIndices {
    pub a: usize,
    pub p: usize,
    pub q: usize,
}

impl ComponentIndices {
    pub const fn new(a: usize, p: usize, q: usize) -> Self {
        Self { a, p, q }
    }

    fn get(&self, c: Component) -> usize {
        match c {
            Component::Amplitude => self.a,
            Component::Phase => self.p,
            Component::Quadrant => self.q,
        }
    }

    fn set(&mut self, c: Component, v: usize) {
        match c {
            Component::Amplitude => self.a = v,
            Component::Phase => self.p = v,
            Component::Quadrant => self.q = v,
        }
    }
}

/// Normalized optical amplitude of one transmitted APQ symbol, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ApqWaveformSample(f64);

impl ApqWaveformSample {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Layer orders `(amplitude, phase, quadrant)` for a constellation size.
///
/// A phase order of 1 means the layer is absent. For M = 32 the angular
/// layer has 8 sectors rather than 4: only the last SIC stage can carry more
/// than two levels without a noiseless error floor at practical `α`.
pub fn split_for(m_total: usize) -> Result<(usize, usize, usize)> {
    match m_total {
        8 => Ok((2, 1, 4)),
        16 => Ok((2, 2, 4)),
        32 => Ok((2, 2, 8)),
        other => Err(Error::UnsupportedOrder(other)),
    }
}

/// Fixed power allocation `P_i = α·P_{i−1}` with `Σ P_i = 1`.
pub fn power_allocation(alpha: f64, n_components: usize, policy: SicPolicy) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            name: "alpha",
            value: alpha,
            expected: "0 < alpha < 1",
        });
    }
    if !(2..=3).contains(&n_components) {
        return Err(Error::Domain {
            name: "n_components",
            value: n_components as f64,
            expected: "2 or 3",
        });
    }
    let norm: f64 = (0..n_components).map(|i| alpha.powi(i as i32)).sum();
    let powers: Vec<f64> = (0..n_components)
        .map(|i| alpha.powi(i as i32) / norm)
        .collect();
    let rest: f64 = powers[1..].iter().sum();
    if powers[0] <= rest {
        let detail = format!("P1 = {:.6} <= sum of weaker powers {:.6}", powers[0], rest);
        match policy {
            SicPolicy::Strict => {
                return Err(Error::SicCondition {
                    condition: "P1 > P2 + P3",
                    detail,
                })
            }
            SicPolicy::AllowFloor => log::warn!("{detail}"),
        }
    }
    Ok(powers)
}

/// Classifies an allocation. `layers` must be in decoding order.
pub fn sic_margin(layers: &[Layer]) -> SicMargin {
    let rest = |i: usize| layers[i + 1..].iter().map(|l| l.power).sum::<f64>();
    if layers.is_empty() || layers[0].power <= rest(0) {
        return SicMargin::Violated;
    }
    let zero_floor = layers
        .iter()
        .enumerate()
        .all(|(i, l)| l.order < 2 || l.power / (2.0 * (l.order - 1) as f64) > rest(i));
    if zero_floor {
        SicMargin::ZeroFloor
    } else {
        SicMargin::DominantOnly
    }
}

/// Unipolar PAM level `index / (order − 1)`; a single-level layer sits at 0.
pub fn pam_level(index: usize, order: usize) -> Result<f64> {
    if order == 0 || index >= order {
        return Err(Error::IndexOutOfRange { index, size: order });
    }
    if order == 1 {
        return Ok(0.0);
    }
    Ok(index as f64 / (order - 1) as f64)
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 1 {
        g >>= 1;
        b ^= g;
    }
    b
}

fn gray_encode(b: usize) -> usize {
    b ^ (b >> 1)
}

/// Full APQ configuration: constellation split, power allocation, and the
/// APSK geometry the components index into.
#[derive(Debug, Clone, PartialEq)]
pub struct ApqConfig {
    m_total: usize,
    l_amp: usize,
    l_phase: usize,
    l_quad: usize,
    alpha: f64,
    layers: Vec<Layer>,
    ring_amplitudes: Vec<f64>,
    phase_offsets: Vec<f64>,
}

impl ApqConfig {
    pub fn new(m_total: usize, alpha: f64) -> Result<Self> {
        Self::with_policy(m_total, alpha, SicPolicy::Strict)
    }

    pub fn with_policy(m_total: usize, alpha: f64, policy: SicPolicy) -> Result<Self> {
        let (l_amp, l_phase, l_quad) = split_for(m_total)?;
        let present: Vec<(Component, usize)> = [
            (Component::Amplitude, l_amp),
            (Component::Phase, l_phase),
            (Component::Quadrant, l_quad),
        ]
        .into_iter()
        .filter(|&(_, order)| order > 1)
        .collect();
        let powers = power_allocation(alpha, present.len(), policy)?;
        let layers: Vec<Layer> = present
            .iter()
            .zip(&powers)
            .map(|(&(component, order), &power)| Layer {
                component,
                order,
                power,
            })
            .collect();

        match sic_margin(&layers) {
            SicMargin::ZeroFloor => {}
            margin => {
                let detail = format!(
                    "alpha = {alpha} leaves a noiseless error floor for M = {m_total} ({margin:?})"
                );
                match policy {
                    SicPolicy::Strict => {
                        return Err(Error::SicCondition {
                            condition: if margin == SicMargin::Violated {
                                "P1 > P2 + P3"
                            } else {
                                "zero-floor"
                            },
                            detail,
                        })
                    }
                    SicPolicy::AllowFloor => log::warn!("{detail}"),
                }
            }
        }

        let sector = 2.0 * PI / l_quad as f64;
        let phase_offsets = (0..l_phase)
            .map(|k| (k as f64 + 0.5) * sector / l_phase as f64)
            .collect();
        let ring_amplitudes = (1..=l_amp).map(|r| r as f64).collect();
        Ok(Self {
            m_total,
            l_amp,
            l_phase,
            l_quad,
            alpha,
            layers,
            ring_amplitudes,
            phase_offsets,
        })
    }

    /// Overrides the display geometry. Rings must be positive and strictly
    /// increasing; phases strictly increasing within one sector.
    pub fn with_geometry(mut self, rings: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        let sector = 2.0 * PI / self.l_quad as f64;
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if rings.len() != self.l_amp {
            return Err(Error::LengthMismatch {
                expected: self.l_amp,
                actual: rings.len(),
            });
        }
        if phases.len() != self.l_phase {
            return Err(Error::LengthMismatch {
                expected: self.l_phase,
                actual: phases.len(),
            });
        }
        if !increasing(&rings) || rings.iter().any(|&r| r <= 0.0) {
            return Err(Error::Config(
                "ring amplitudes must be positive and increasing".into(),
            ));
        }
        if !increasing(&phases) || phases.iter().any(|&p| !(0.0..sector).contains(&p)) {
            return Err(Error::Config(
                "phase offsets must increase within one sector".into(),
            ));
        }
        self.ring_amplitudes = rings;
        self.phase_offsets = phases;
        Ok(self)
    }

    pub fn m_total(&self) -> usize {
        self.m_total
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `(amplitude, phase, quadrant)` orders.
    pub fn orders(&self) -> (usize, usize, usize) {
        (self.l_amp, self.l_phase, self.l_quad)
    }

    /// Present layers in decoding order.
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Powers of the present layers, strongest first.
    pub fn powers(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.power).collect()
    }

    pub fn ring_amplitudes(&self) -> &[f64] {
        &self.ring_amplitudes
    }

    pub fn phase_offsets(&self) -> &[f64] {
        &self.phase_offsets
    }

    pub fn sic_margin(&self) -> SicMargin {
        sic_margin(&self.layers)
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.m_total.trailing_zeros()
    }

    /// Mean optical amplitude over a uniformly drawn symbol.
    pub fn mean_amplitude(&self) -> f64 {
        (0..self.m_total)
            .map(|k| {
                let c = index_to_components(k, self).expect("index in range");
                modulate_unchecked(c, self)
            })
            .sum::<f64>()
            / self.m_total as f64
    }

    fn check(&self, c: ComponentIndices) -> Result<()> {
        for (idx, size) in [(c.a, self.l_amp), (c.p, self.l_phase), (c.q, self.l_quad)] {
            if idx >= size {
                return Err(Error::IndexOutOfRange { index: idx, size });
            }
        }
        Ok(())
    }
}

/// Splits a symbol index: most significant bits select the ring, then the
/// phase slot, then the sector. Sector labels are Gray coded.
pub fn index_to_components(symbol_index: usize, cfg: &ApqConfig) -> Result<ComponentIndices> {
    if symbol_index >= cfg.m_total {
        return Err(Error::IndexOutOfRange {
            index: symbol_index,
            size: cfg.m_total,
        });
    }
    let q_bits = cfg.l_quad.trailing_zeros();
    let p_bits = cfg.l_phase.trailing_zeros();
    let q_label = symbol_index & (cfg.l_quad - 1);
    let p = (symbol_index >> q_bits) & (cfg.l_phase - 1);
    let a = symbol_index >> (q_bits + p_bits);
    Ok(ComponentIndices::new(a, p, gray_decode(q_label)))
}

/// Inverse of [`index_to_components`].
pub fn components_to_index(c: ComponentIndices, cfg: &ApqConfig) -> Result<usize> {
    cfg.check(c)?;
    let q_bits = cfg.l_quad.trailing_zeros();
    let p_bits = cfg.l_phase.trailing_zeros();
    Ok((c.a << (q_bits + p_bits)) | (c.p << q_bits) | gray_encode(c.q))
}

/// The APSK point a decomposition stands for.
pub fn components_to_complex(c: ComponentIndices, cfg: &ApqConfig) -> Result<Complex64> {
    cfg.check(c)?;
    let sector = 2.0 * PI / cfg.l_quad as f64;
    let theta = cfg.phase_offsets[c.p] + c.q as f64 * sector;
    Ok(Complex64::from_polar(cfg.ring_amplitudes[c.a], theta))
}

fn modulate_unchecked(c: ComponentIndices, cfg: &ApqConfig) -> f64 {
    cfg.layers
        .iter()
        .map(|l| l.power * c.get(l.component) as f64 / (l.order - 1) as f64)
        .sum::<f64>()
        .min(1.0)
}

/// Power-domain superposition `Σ P_i · level_i`.
pub fn apq_modulate(c: ComponentIndices, cfg: &ApqConfig) -> Result<ApqWaveformSample> {
    cfg.check(c)?;
    Ok(ApqWaveformSample(modulate_unchecked(c, cfg)))
}

/// Successive interference cancellation on one received electrical sample.
///
/// `received` is in noise-standard-deviation units, so a noiseless symbol
/// arrives as `scale · apq_modulate(c)`. A zero scale carries no information
/// and decodes to the all-zero decomposition.
pub fn sic_demodulate(received: f64, scale: DetectionScale, cfg: &ApqConfig) -> ComponentIndices {
    let mut out = ComponentIndices::default();
    let s = scale.value();
    if s <= 0.0 {
        return out;
    }
    let mut residual = received;
    for layer in &cfg.layers {
        let top = (layer.order - 1) as f64;
        let step = s * layer.power / top;
        let level = (residual / step + 0.5).floor().clamp(0.0, top);
        residual -= level * step;
        out.set(layer.component, level as usize);
    }
    out
}

/// The luminaire with the largest gain towards `rx` (lowest index on ties).
pub fn serving_gain(luminaires: &[Luminaire], rx: &Photodetector) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, tx) in luminaires.iter().enumerate() {
        let g = channel_gain(tx, rx)?;
        if best.is_none_or(|(_, b)| g > b) {
            best = Some((i, g));
        }
    }
    best.ok_or(Error::NoLuminaires)
}
