//! Scenario files: room, luminaires, receiver optics, scheme and run budget.
//!
//! Every field except `scheme` has a default reproducing the reference room:
//! a 4 × 4 × 3 m room with five ceiling LEDs laid out around the center at
//! spacing `d`, and an upward-facing photodiode on a 0.75 m desk.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::apq::{ApqConfig, SicPolicy};
use crate::channel::{Luminaire, Photodetector, Vec3};
use crate::error::{Error, Result};
use crate::gssk::GsskConfig;
use crate::montecarlo::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Room {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Room {
    fn default() -> Self {
        Self {
            x: 4.0,
            y: 4.0,
            z: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Optics {
    #[serde(default = "default_angle")]
    pub semi_angle_deg: f64,
    #[serde(default = "default_angle")]
    pub fov_deg: f64,
    #[serde(default = "default_area")]
    pub pd_area_cm2: f64,
    #[serde(default = "default_lens")]
    pub lens_index: f64,
    #[serde(default = "default_filter")]
    pub filter_gain: f64,
}

fn default_angle() -> f64 {
    30.0
}
fn default_area() -> f64 {
    1.0
}
fn default_lens() -> f64 {
    1.5
}
fn default_filter() -> f64 {
    1.0
}

impl Default for Optics {
    fn default() -> Self {
        Self {
            semi_angle_deg: default_angle(),
            fov_deg: default_angle(),
            pd_area_cm2: default_area(),
            lens_index: default_lens(),
            filter_gain: default_filter(),
        }
    }
}

/// Named reference receiver positions, or explicit floor coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReceiverSpec {
    Preset(String),
    Position { x: f64, y: f64 },
}

impl Default for ReceiverSpec {
    fn default() -> Self {
        ReceiverSpec::Preset("rx1".into())
    }
}

impl ReceiverSpec {
    pub fn floor_position(&self) -> Result<(f64, f64)> {
        match self {
            ReceiverSpec::Position { x, y } => Ok((*x, *y)),
            ReceiverSpec::Preset(name) => match name.to_ascii_lowercase().as_str() {
                "rx1" => Ok((1.0, 1.0)),
                "rx2" => Ok((2.1, 2.2)),
                "rx3" => Ok((2.0, 2.0)),
                other => Err(Error::Config(format!(
                    "receiver: unknown preset `{other}` (expected rx1, rx2, rx3 or {{x, y}})"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApqSpec {
    pub m: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_true")]
    pub normalize_power: bool,
}

fn default_alpha() -> f64 {
    0.3
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsskSpec {
    pub n_tx: usize,
    /// Luminaire indices carrying the bits, MSB first. Defaults to the first
    /// `n_tx` luminaires.
    #[serde(default)]
    pub leds: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeBlock {
    Apq(ApqSpec),
    Gssk(GsskSpec),
}

/// Either a shorthand such as `"apq16"` / `"gssk3"` or a full block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeSpec {
    Name(String),
    Block(SchemeBlock),
}

impl SchemeSpec {
    pub fn resolve(&self) -> Result<SchemeBlock> {
        match self {
            SchemeSpec::Block(b) => Ok(b.clone()),
            SchemeSpec::Name(name) => {
                let lower = name.to_ascii_lowercase();
                let bad = || Error::Config(format!("scheme: unknown shorthand `{name}`"));
                if let Some(m) = lower.strip_prefix("apq") {
                    Ok(SchemeBlock::Apq(ApqSpec {
                        m: m.parse().map_err(|_| bad())?,
                        alpha: default_alpha(),
                        normalize_power: true,
                    }))
                } else if let Some(n) = lower.strip_prefix("gssk") {
                    Ok(SchemeBlock::Gssk(GsskSpec {
                        n_tx: n.parse().map_err(|_| bad())?,
                        leds: None,
                    }))
                } else {
                    Err(bad())
                }
            }
        }
    }
}

/// The scenario file. See `docs/scenario.md` for the schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub room: Room,
    /// Spacing `d` of the five-LED layout, meters.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_led_height")]
    pub led_height: f64,
    /// Explicit luminaire positions; replaces the five-LED layout when set.
    #[serde(default)]
    pub luminaires: Option<Vec<Vec3>>,
    #[serde(default)]
    pub receiver: ReceiverSpec,
    #[serde(default = "default_rx_height")]
    pub rx_height: f64,
    #[serde(default)]
    pub optics: Optics,
    #[serde(default = "default_led_power")]
    pub led_power_w: f64,
    #[serde(default = "default_data_rate")]
    pub data_rate_bps: f64,
    pub scheme: SchemeSpec,
    #[serde(default = "default_snr_list")]
    pub snr_db: Vec<f64>,
    /// Defaults to 130, 140, 150 dB for 3, 4, 5 bits per symbol.
    #[serde(default)]
    pub heatmap_snr_db: Option<f64>,
    #[serde(default = "default_grid")]
    pub grid_spacing: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_heatmap_trials")]
    pub heatmap_trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub allow_floor: bool,
}

fn default_spacing() -> f64 {
    1.0
}
fn default_led_height() -> f64 {
    3.0
}
fn default_rx_height() -> f64 {
    0.75
}
fn default_led_power() -> f64 {
    0.25
}
fn default_data_rate() -> f64 {
    10e6
}
fn default_snr_list() -> Vec<f64> {
    (0..=8).map(|k| 110.0 + 5.0 * k as f64).collect()
}
fn default_grid() -> f64 {
    0.1
}
fn default_trials() -> u64 {
    1_000_000
}
fn default_heatmap_trials() -> u64 {
    100_000
}
fn default_seed() -> u64 {
    1
}

impl ScenarioConfig {
    /// Defaults everywhere except the scheme.
    pub fn with_scheme(scheme: SchemeBlock) -> Self {
        Self::from_json_str(&format!(
            "{{\"scheme\": {}}}",
            serde_json::to_string(&scheme).expect("scheme serializes")
        ))
        .expect("default scenario is valid")
    }

    /// Parses, fills defaults, canonicalizes the scheme and validates.
    pub fn from_json_str(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Config(
                "empty scenario file; required fields: scheme".into(),
            ));
        }
        let mut cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.scheme = SchemeSpec::Block(cfg.scheme.resolve()?);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("room.x", self.room.x)?;
        positive("room.y", self.room.y)?;
        positive("room.z", self.room.z)?;
        positive("spacing", self.spacing)?;
        positive("led_height", self.led_height)?;
        positive("rx_height", self.rx_height)?;
        positive("optics.semi_angle_deg", self.optics.semi_angle_deg)?;
        positive("optics.fov_deg", self.optics.fov_deg)?;
        positive("optics.pd_area_cm2", self.optics.pd_area_cm2)?;
        positive("optics.lens_index", self.optics.lens_index)?;
        positive("optics.filter_gain", self.optics.filter_gain)?;
        positive("led_power_w", self.led_power_w)?;
        positive("data_rate_bps", self.data_rate_bps)?;
        positive("grid_spacing", self.grid_spacing)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.heatmap_trials == 0 {
            return Err(Error::Config("heatmap_trials must be at least 1".into()));
        }
        if self.snr_db.is_empty() || !self.snr_db.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "snr_db must be a non-empty, strictly increasing list".into(),
            ));
        }
        self.receiver.floor_position()?;
        self.build_scenario()?;
        self.build_scheme()?;
        Ok(())
    }

    pub fn luminaire_positions(&self) -> Vec<Vec3> {
        if let Some(list) = &self.luminaires {
            return list.clone();
        }
        let (cx, cy) = (self.room.x / 2.0, self.room.y / 2.0);
        let d = self.spacing;
        let z = self.led_height;
        vec![
            Vec3::new(cx - d, cy - d, z),
            Vec3::new(cx + d, cy + d, z),
            Vec3::new(cx, cy, z),
            Vec3::new(cx - d, cy + d, z),
            Vec3::new(cx + d, cy - d, z),
        ]
    }

    pub fn build_scenario(&self) -> Result<Scenario> {
        let semi = self.optics.semi_angle_deg.to_radians();
        let luminaires = self
            .luminaire_positions()
            .into_iter()
            .map(|p| Luminaire::new(p, semi))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Config(format!("luminaires: {e}")))?;
        if luminaires.is_empty() {
            return Err(Error::Config("luminaires: list is empty".into()));
        }
        let (x, y) = self.receiver.floor_position()?;
        let receiver = Photodetector::new(
            Vec3::new(x, y, self.rx_height),
            self.optics.pd_area_cm2 * 1e-4,
            self.optics.fov_deg.to_radians(),
            self.optics.lens_index,
            self.optics.filter_gain,
        )
        .map_err(|e| Error::Config(format!("optics: {e}")))?;
        Ok(Scenario {
            room: self.room,
            luminaires,
            receiver,
        })
    }

    pub fn scheme_block(&self) -> Result<SchemeBlock> {
        self.scheme.resolve()
    }

    pub fn build_scheme(&self) -> Result<Scheme> {
        let policy = if self.allow_floor {
            SicPolicy::AllowFloor
        } else {
            SicPolicy::Strict
        };
        match self.scheme_block()? {
            SchemeBlock::Apq(spec) => Ok(Scheme::Apq {
                config: ApqConfig::with_policy(spec.m, spec.alpha, policy)
                    .map_err(|e| Error::Config(format!("scheme.apq: {e}")))?,
                normalize_power: spec.normalize_power,
            }),
            SchemeBlock::Gssk(spec) => {
                let leds = spec.leds.unwrap_or_else(|| (0..spec.n_tx).collect());
                if leds.len() != spec.n_tx {
                    return Err(Error::Config(format!(
                        "scheme.gssk.leds: expected {} indices, got {}",
                        spec.n_tx,
                        leds.len()
                    )));
                }
                let n_lum = self.luminaire_positions().len();
                if let Some(&bad) = leds.iter().find(|&&i| i >= n_lum) {
                    return Err(Error::Config(format!(
                        "scheme.gssk.leds: index {bad} but only {n_lum} luminaires"
                    )));
                }
                Ok(Scheme::Gssk(
                    GsskConfig::with_leds(leds)
                        .map_err(|e| Error::Config(format!("scheme.gssk: {e}")))?,
                ))
            }
        }
    }

    pub fn heatmap_snr(&self) -> Result<f64> {
        if let Some(snr) = self.heatmap_snr_db {
            return Ok(snr);
        }
        let bits = self.build_scheme()?.bits_per_symbol();
        Ok(100.0 + 10.0 * f64::from(bits))
    }

    /// Hash of the canonical JSON form; object keys are serialized sorted,
    /// so it does not depend on field order in the source file.
    pub fn config_hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_json_str(&text)
}

/// Built geometry: room, luminaires in layout order, and the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    room: Room,
    luminaires: Vec<Luminaire>,
    receiver: Photodetector,
}

impl Scenario {
    pub fn new(room: Room, luminaires: Vec<Luminaire>, receiver: Photodetector) -> Result<Self> {
        if luminaires.is_empty() {
            return Err(Error::NoLuminaires);
        }
        Ok(Self {
            room,
            luminaires,
            receiver,
        })
    }

    pub fn room(&self) -> Room {
        self.room
    }

    pub fn luminaires(&self) -> &[Luminaire] {
        &self.luminaires
    }

    pub fn receiver(&self) -> &Photodetector {
        &self.receiver
    }

    pub fn with_receiver_at(&self, position: Vec3) -> Result<Self> {
        Ok(Self {
            receiver: self.receiver.moved_to(position)?,
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_reference_defaults() {
        let cfg = ScenarioConfig::from_json_str(r#"{"scheme": "apq16"}"#).unwrap();
        assert_eq!(cfg.led_power_w, 0.25);
        assert_eq!(cfg.optics, Optics::default());
        assert_eq!(cfg.optics.semi_angle_deg, 30.0);
        assert_eq!(cfg.optics.fov_deg, 30.0);
        assert_eq!(cfg.optics.pd_area_cm2, 1.0);
        assert_eq!(cfg.optics.lens_index, 1.5);
        assert_eq!(cfg.optics.filter_gain, 1.0);
        assert_eq!(cfg.data_rate_bps, 10e6);
        assert_eq!(cfg.spacing, 1.0);
        assert_eq!(cfg.led_height, 3.0);
        assert_eq!(
            cfg.scheme,
            SchemeSpec::Block(SchemeBlock::Apq(ApqSpec {
                m: 16,
                alpha: 0.3,
                normalize_power: true
            }))
        );
        let pos = cfg.luminaire_positions();
        assert_eq!(pos[0], Vec3::new(1.0, 1.0, 3.0));
        assert_eq!(pos[1], Vec3::new(3.0, 3.0, 3.0));
        assert_eq!(pos[2], Vec3::new(2.0, 2.0, 3.0));
        assert_eq!(pos[3], Vec3::new(1.0, 3.0, 3.0));
        assert_eq!(pos[4], Vec3::new(3.0, 1.0, 3.0));
        assert_eq!(cfg.heatmap_snr().unwrap(), 140.0);
    }

    #[test]
    fn strong_alpha_rejected_unless_allowed() {
        let err = ScenarioConfig::from_json_str(r#"{"scheme": {"apq": {"m": 16, "alpha": 0.9}}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("P1 > P2 + P3"), "{err}");
        assert!(ScenarioConfig::from_json_str(
            r#"{"scheme": {"apq": {"m": 16, "alpha": 0.9}}, "allow_floor": true}"#
        )
        .is_ok());
    }

    #[test]
    fn empty_and_missing_fields_diagnosed() {
        let err = ScenarioConfig::from_json_str("").unwrap_err();
        assert!(err.to_string().contains("scheme"));
        let err = ScenarioConfig::from_json_str("{}").unwrap_err();
        assert!(err.to_string().contains("missing field `scheme`"), "{err}");
        let err = ScenarioConfig::from_json_str(r#"{"scheme":"apq16","spacng":1}"#).unwrap_err();
        assert!(err.to_string().contains("spacng"), "{err}");
        let err = ScenarioConfig::from_json_str(r#"{"scheme":"apq16","spacing":-1}"#).unwrap_err();
        assert!(err.to_string().contains("spacing"), "{err}");
        let err = ScenarioConfig::from_json_str(r#"{"scheme":"qam16"}"#).unwrap_err();
        assert!(err.to_string().contains("qam16"), "{err}");
        let err =
            ScenarioConfig::from_json_str(r#"{"scheme":"gssk3","receiver":"rx9"}"#).unwrap_err();
        assert!(err.to_string().contains("rx9"), "{err}");
    }

    #[test]
    fn hash_ignores_field_order() {
        let a =
            ScenarioConfig::from_json_str(r#"{"scheme":"gssk3","spacing":0.1,"seed":7}"#).unwrap();
        let b =
            ScenarioConfig::from_json_str(r#"{"seed":7,"spacing":0.1,"scheme":"gssk3"}"#).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        let c =
            ScenarioConfig::from_json_str(r#"{"seed":8,"spacing":0.1,"scheme":"gssk3"}"#).unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn serialize_reload_keeps_hash() {
        let a = ScenarioConfig::from_json_str(
            r#"{"scheme":"apq8","receiver":{"x":2.5,"y":1.5},"snr_db":[120,130]}"#,
        )
        .unwrap();
        let b = ScenarioConfig::from_json_str(&a.to_json_string()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn gssk_led_subset_checked() {
        assert!(
            ScenarioConfig::from_json_str(r#"{"scheme":{"gssk":{"n_tx":3,"leds":[0,1,7]}}}"#)
                .is_err()
        );
        assert!(
            ScenarioConfig::from_json_str(r#"{"scheme":{"gssk":{"n_tx":3,"leds":[0,1]}}}"#)
                .is_err()
        );
        let cfg = ScenarioConfig::from_json_str(r#"{"scheme":{"gssk":{"n_tx":2,"leds":[2,4]}}}"#)
            .unwrap();
        match cfg.build_scheme().unwrap() {
            Scheme::Gssk(g) => assert_eq!(g.led_indices(), &[2, 4]),
            other => panic!("{other:?}"),
        }
    }
}
