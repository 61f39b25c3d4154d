//! Line-of-sight optical channel between an LED luminaire and a photodetector.
//!
//! The gain model is the usual Lambertian emitter / concentrator receiver pair:
//!
//! ```text
//! h = A / d² · R_o(φ) · T_s · g(ψ) · cos(ψ)     for ψ ≤ ψ_c
//! h = 0                                          otherwise
//! ```
//!
//! where `φ` is the emergence angle at the LED and `ψ` the incidence angle at
//! the detector. Transmit SNR enters the receivers only through the product of
//! channel gain and noise scale, captured here as a [`DetectionScale`].

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Sub;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cartesian position or direction in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const DOWN: Vec3 = Vec3::new(0.0, 0.0, -1.0);
    pub const UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn scaled(&self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }

    fn unit(&self, name: &'static str) -> Result<Vec3> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Domain {
                name,
                value: n,
                expected: "non-zero finite direction",
            });
        }
        Ok(self.scaled(1.0 / n))
    }
}

impl Sub for Vec3 {
    type Output = Vec3;

    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

fn check_position(p: &Vec3) -> Result<()> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "position",
            value: f64::NAN,
            expected: "finite coordinates",
        })
    }
}

/// An LED luminaire with a Lambertian radiation pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Luminaire {
    position: Vec3,
    orientation: Vec3,
    semi_angle: f64,
    lambertian_order: f64,
}

impl Luminaire {
    /// Ceiling-mounted luminaire pointing straight down.
    pub fn new(position: Vec3, semi_angle: f64) -> Result<Self> {
        Self::with_orientation(position, Vec3::DOWN, semi_angle)
    }

    pub fn with_orientation(position: Vec3, orientation: Vec3, semi_angle: f64) -> Result<Self> {
        check_position(&position)?;
        let orientation = orientation.unit("orientation")?;
        let lambertian_order = lambertian_order(semi_angle)?;
        Ok(Self {
            position,
            orientation,
            semi_angle,
            lambertian_order,
        })
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    pub fn orientation(&self) -> Vec3 {
        self.orientation
    }

    /// Half-power semi-angle in radians.
    pub fn semi_angle(&self) -> f64 {
        self.semi_angle
    }

    pub fn lambertian_order(&self) -> f64 {
        self.lambertian_order
    }
}

/// Receiver optics: photodiode area, optical filter, and a non-imaging
/// concentrator with a hard field of view.
#[derive(Debug, Clone, PartialEq)]
pub struct Photodetector {
    position: Vec3,
    orientation: Vec3,
    area: f64,
    fov: f64,
    lens_index: f64,
    filter_gain: f64,
}

impl Photodetector {
    /// Upward-facing detector. `area` in m², `fov` in radians.
    pub fn new(
        position: Vec3,
        area: f64,
        fov: f64,
        lens_index: f64,
        filter_gain: f64,
    ) -> Result<Self> {
        check_position(&position)?;
        if !(area > 0.0 && area.is_finite()) {
            return Err(Error::Domain {
                name: "area",
                value: area,
                expected: "area > 0",
            });
        }
        if !(fov > 0.0 && fov <= FRAC_PI_2) {
            return Err(Error::Domain {
                name: "fov",
                value: fov,
                expected: "0 < fov <= pi/2",
            });
        }
        if !(lens_index >= 1.0 && lens_index.is_finite()) {
            return Err(Error::Domain {
                name: "lens_index",
                value: lens_index,
                expected: "lens_index >= 1",
            });
        }
        if !(filter_gain > 0.0 && filter_gain <= 1.0) {
            return Err(Error::Domain {
                name: "filter_gain",
                value: filter_gain,
                expected: "0 < filter_gain <= 1",
            });
        }
        Ok(Self {
            position,
            orientation: Vec3::UP,
            area,
            fov,
            lens_index,
            filter_gain,
        })
    }

    pub fn with_orientation(mut self, orientation: Vec3) -> Result<Self> {
        self.orientation = orientation.unit("orientation")?;
        Ok(self)
    }

    /// Same optics, moved to `position`.
    pub fn moved_to(&self, position: Vec3) -> Result<Self> {
        check_position(&position)?;
        Ok(Self {
            position,
            ..self.clone()
        })
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    pub fn orientation(&self) -> Vec3 {
        self.orientation
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn fov(&self) -> f64 {
        self.fov
    }

    pub fn lens_index(&self) -> f64 {
        self.lens_index
    }

    pub fn filter_gain(&self) -> f64 {
        self.filter_gain
    }
}

/// Lambertian emission order for a half-power semi-angle (radians).
pub fn lambertian_order(semi_angle: f64) -> Result<f64> {
    if !(semi_angle > 0.0 && semi_angle < FRAC_PI_2) {
        return Err(Error::Domain {
            name: "semi_angle",
            value: semi_angle,
            expected: "0 < semi_angle < pi/2",
        });
    }
    Ok(-std::f64::consts::LN_2 / semi_angle.cos().ln())
}

/// Lambertian radiant intensity per steradian at `emergence_angle` off axis.
/// Zero beyond the emitter's hemisphere.
pub fn radiant_intensity(emergence_angle: f64, order: f64) -> f64 {
    if emergence_angle > FRAC_PI_2 {
        return 0.0;
    }
    (order + 1.0) / (2.0 * PI) * emergence_angle.cos().max(0.0).powf(order)
}

/// Concentrator gain: `n² / sin²(fov)` inside the field of view, zero outside.
pub fn concentrator_gain(incidence_angle: f64, lens_index: f64, fov: f64) -> f64 {
    if (0.0..=fov).contains(&incidence_angle) {
        let s = fov.sin();
        lens_index * lens_index / (s * s)
    } else {
        0.0
    }
}

fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos()
}

/// DC gain of the line-of-sight path from `tx` to `rx`.
pub fn channel_gain(tx: &Luminaire, rx: &Photodetector) -> Result<f64> {
    let ray = rx.position - tx.position;
    let d = ray.norm();
    if d == 0.0 {
        return Err(Error::CoincidentPositions);
    }
    let to_rx = ray.scaled(1.0 / d);
    let to_tx = to_rx.scaled(-1.0);
    let emergence = angle_between(&tx.orientation, &to_rx);
    let incidence = angle_between(&rx.orientation, &to_tx);
    if incidence > rx.fov {
        return Ok(0.0);
    }
    let gain = rx.area / (d * d)
        * radiant_intensity(emergence, tx.lambertian_order)
        * rx.filter_gain
        * concentrator_gain(incidence, rx.lens_index, rx.fov)
        * incidence.cos();
    Ok(gain.max(0.0))
}

/// The factor `γ·h / σ_n` multiplying every decision distance, i.e. the
/// received noiseless amplitude in units of the noise standard deviation
/// when the total transmit power is normalized to one.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct DetectionScale(f64);

impl DetectionScale {
    pub fn new(value: f64) -> Result<Self> {
        if value >= 0.0 && !value.is_nan() {
            Ok(Self(value))
        } else {
            Err(Error::Domain {
                name: "detection scale",
                value,
                expected: "value >= 0",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Scale multiplied by a non-negative transmit-power factor.
    pub fn boosted(self, factor: f64) -> Self {
        Self((self.0 * factor).max(0.0))
    }
}

/// Converts a channel gain and a transmit SNR (dB) into a [`DetectionScale`].
pub fn detection_scale(gain: f64, snr_tx_db: f64) -> DetectionScale {
    DetectionScale((gain * 10f64.powf(snr_tx_db / 20.0)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    fn table_pd(position: Vec3) -> Photodetector {
        Photodetector::new(position, 1e-4, deg(30.0), 1.5, 1.0).unwrap()
    }

    #[test]
    fn lambertian_order_examples() {
        assert_relative_eq!(lambertian_order(deg(60.0)).unwrap(), 1.0, epsilon = 1e-12);
        // ln(0.5) / ln(sqrt(3)/2), evaluated independently
        let oracle = 0.5f64.ln() / (3f64.sqrt() / 2.0).ln();
        assert_relative_eq!(
            lambertian_order(deg(30.0)).unwrap(),
            oracle,
            epsilon = 1e-12
        );
        assert_relative_eq!(oracle, 4.8187, epsilon = 2e-4);
        assert!(lambertian_order(0.0).is_err());
        assert!(lambertian_order(FRAC_PI_2).is_err());
        assert!(lambertian_order(-0.1).is_err());
    }

    #[test]
    fn lambertian_order_decreases_with_semi_angle() {
        let mut prev = f64::INFINITY;
        for k in 1..90 {
            let m = lambertian_order(deg(k as f64)).unwrap();
            assert!(m > 0.0 && m < prev);
            prev = m;
        }
    }

    #[test]
    fn radiant_intensity_examples() {
        assert_relative_eq!(radiant_intensity(0.0, 1.0), 1.0 / PI, epsilon = 1e-15);
        assert!(radiant_intensity(FRAC_PI_2, 4.8187).abs() < 1e-12);
        assert_relative_eq!(radiant_intensity(0.0, 4.8187), 0.92607, epsilon = 1e-5);
        assert_eq!(radiant_intensity(2.0, 1.0), 0.0);
    }

    #[test]
    fn radiant_intensity_on_axis_identity() {
        for m in [0.1, 1.0, 4.8187, 20.0, 150.0] {
            assert_relative_eq!(
                radiant_intensity(0.0, m) * 2.0 * PI / (m + 1.0),
                1.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn concentrator_gain_examples() {
        assert_relative_eq!(concentrator_gain(0.0, 1.5, deg(30.0)), 9.0, epsilon = 1e-12);
        assert_eq!(concentrator_gain(deg(45.0), 1.5, deg(30.0)), 0.0);
        assert_relative_eq!(concentrator_gain(0.0, 1.0, deg(90.0)), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn aligned_pair_gain() {
        let tx = Luminaire::new(Vec3::new(1.0, 1.0, 3.0), deg(30.0)).unwrap();
        let rx = table_pd(Vec3::new(1.0, 1.0, 0.75));
        let h = channel_gain(&tx, &rx).unwrap();
        // A/d² · (m+1)/2π · 9, with every angle zero
        let m = 0.5f64.ln() / (3f64.sqrt() / 2.0).ln();
        let oracle = 1e-4 / (2.25 * 2.25) * (m + 1.0) / (2.0 * PI) * 9.0;
        assert_relative_eq!(h, oracle, max_relative = 1e-12);
        assert_relative_eq!(h, 1.646e-4, max_relative = 1e-3);
        let db = 20.0 * h.log10();
        assert!((db + 75.7).abs() < 0.1, "{db}");
    }

    #[test]
    fn outside_fov_is_hard_zero() {
        let tx = Luminaire::new(Vec3::new(2.0, 2.0, 3.0), deg(30.0)).unwrap();
        let rx = table_pd(Vec3::new(1.0, 1.0, 0.75));
        assert_eq!(channel_gain(&tx, &rx).unwrap(), 0.0);

        // receiver above the luminaire plane, facing up
        let rx = table_pd(Vec3::new(1.0, 1.0, 3.5));
        assert_eq!(channel_gain(&tx, &rx).unwrap(), 0.0);
    }

    #[test]
    fn coincident_positions_rejected() {
        let tx = Luminaire::new(Vec3::new(1.0, 1.0, 1.0), deg(30.0)).unwrap();
        let rx = table_pd(Vec3::new(1.0, 1.0, 1.0));
        assert_eq!(channel_gain(&tx, &rx), Err(Error::CoincidentPositions));
    }

    #[test]
    fn invalid_optics_rejected() {
        let p = Vec3::new(0.0, 0.0, 0.0);
        assert!(Photodetector::new(p, 0.0, 0.5, 1.5, 1.0).is_err());
        assert!(Photodetector::new(p, 1e-4, 0.0, 1.5, 1.0).is_err());
        assert!(Photodetector::new(p, 1e-4, 2.0, 1.5, 1.0).is_err());
        assert!(Photodetector::new(p, 1e-4, 0.5, 0.9, 1.0).is_err());
        assert!(Photodetector::new(p, 1e-4, 0.5, 1.5, 1.1).is_err());
        assert!(Luminaire::new(Vec3::new(f64::NAN, 0.0, 0.0), 0.5).is_err());
        assert!(Luminaire::with_orientation(p, Vec3::new(0.0, 0.0, 0.0), 0.5).is_err());
    }

    #[test]
    fn detection_scale_examples() {
        assert_relative_eq!(
            detection_scale(1.646e-4, 130.0).value(),
            520.5,
            max_relative = 1e-4
        );
        assert_eq!(detection_scale(0.0, 150.0).value(), 0.0);
        assert_eq!(detection_scale(3.2e-4, 0.0).value(), 3.2e-4);
        assert!(DetectionScale::new(-1.0).is_err());
    }
}
