//! Python bindings for the `vlc-apq` simulator.
//!
//! Scenario-level calls take the same JSON text the `apq-sim` CLI reads.
//! Every library error surfaces as `ValueError`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use vlc_apq::analysis;
use vlc_apq::apq::{self, ComponentIndices, SicPolicy};
use vlc_apq::channel;
use vlc_apq::gssk;
use vlc_apq::montecarlo::{self, SerEstimate};
use vlc_apq::{DetectionScale, Luminaire, Photodetector, ScenarioConfig, Vec3};

fn err(e: vlc_apq::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn policy(allow_floor: bool) -> SicPolicy {
    if allow_floor {
        SicPolicy::AllowFloor
    } else {
        SicPolicy::Strict
    }
}

fn scale(value: f64) -> PyResult<DetectionScale> {
    DetectionScale::new(value).map_err(err)
}

fn vec3(p: (f64, f64, f64)) -> Vec3 {
    Vec3::new(p.0, p.1, p.2)
}

fn estimate<'py>(py: Python<'py>, e: &SerEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("ser", e.ser)?;
    d.set_item("stderr", e.stderr)?;
    d.set_item("errors", e.errors)?;
    d.set_item("trials", e.trials)?;
    Ok(d)
}

/// Lambertian order for a semi-angle in radians.
#[pyfunction]
fn lambertian_order(semi_angle: f64) -> PyResult<f64> {
    channel::lambertian_order(semi_angle).map_err(err)
}

/// Line-of-sight DC gain between a downward LED and an upward detector.
/// Angles in radians, area in m².
#[pyfunction]
#[pyo3(signature = (tx, rx, semi_angle, fov, area = 1e-4, lens_index = 1.5, filter_gain = 1.0))]
fn channel_gain(
    tx: (f64, f64, f64),
    rx: (f64, f64, f64),
    semi_angle: f64,
    fov: f64,
    area: f64,
    lens_index: f64,
    filter_gain: f64,
) -> PyResult<f64> {
    let led = Luminaire::new(vec3(tx), semi_angle).map_err(err)?;
    let pd = Photodetector::new(vec3(rx), area, fov, lens_index, filter_gain).map_err(err)?;
    channel::channel_gain(&led, &pd).map_err(err)
}

#[pyfunction]
fn detection_scale(gain: f64, snr_tx_db: f64) -> f64 {
    channel::detection_scale(gain, snr_tx_db).value()
}

#[pyfunction]
#[pyo3(signature = (alpha, n_components, allow_floor = false))]
fn power_allocation(alpha: f64, n_components: usize, allow_floor: bool) -> PyResult<Vec<f64>> {
    apq::power_allocation(alpha, n_components, policy(allow_floor)).map_err(err)
}

/// Layer orders `(amplitude, phase, quadrant)` for a constellation size.
#[pyfunction]
fn split_for(m_total: usize) -> PyResult<(usize, usize, usize)> {
    apq::split_for(m_total).map_err(err)
}

#[pyfunction]
fn q_function(x: f64) -> f64 {
    analysis::q_function(x)
}

fn stage_powers(powers: Vec<f64>) -> PyResult<analysis::StagePowers> {
    powers.try_into().map_err(|p: Vec<f64>| {
        PyValueError::new_err(format!("expected 3 stage powers, got {}", p.len()))
    })
}

/// Closed-form 16-ary error probabilities: amplitude, phase, quadrant, total.
#[pyfunction]
fn ser_breakdown<'py>(
    py: Python<'py>,
    detection_scale: f64,
    powers: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let b = analysis::ser_breakdown(scale(detection_scale)?, &stage_powers(powers)?);
    let d = PyDict::new(py);
    d.set_item("amplitude", b.amplitude)?;
    d.set_item("phase", b.phase)?;
    d.set_item("quadrant", b.quadrant)?;
    d.set_item("total", b.total)?;
    Ok(d)
}

#[pyfunction]
fn ser_total(detection_scale: f64, powers: Vec<f64>) -> PyResult<f64> {
    Ok(analysis::ser_total(
        scale(detection_scale)?,
        &stage_powers(powers)?,
    ))
}

/// A configured APQ constellation.
#[pyclass(name = "ApqConfig", frozen)]
struct PyApqConfig {
    inner: apq::ApqConfig,
}

#[pymethods]
impl PyApqConfig {
    #[new]
    #[pyo3(signature = (m_total, alpha = 0.3, allow_floor = false))]
    fn new(m_total: usize, alpha: f64, allow_floor: bool) -> PyResult<Self> {
        let inner =
            apq::ApqConfig::with_policy(m_total, alpha, policy(allow_floor)).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn m_total(&self) -> usize {
        self.inner.m_total()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn orders(&self) -> (usize, usize, usize) {
        self.inner.orders()
    }

    #[getter]
    fn powers(&self) -> Vec<f64> {
        self.inner.powers()
    }

    #[getter]
    fn bits_per_symbol(&self) -> u32 {
        self.inner.bits_per_symbol()
    }

    /// "zero_floor", "dominant_only" or "violated".
    #[getter]
    fn sic_margin(&self) -> &'static str {
        match self.inner.sic_margin() {
            apq::SicMargin::ZeroFloor => "zero_floor",
            apq::SicMargin::DominantOnly => "dominant_only",
            apq::SicMargin::Violated => "violated",
        }
    }

    /// `(a, p, q)` layer indices of a symbol.
    fn components(&self, symbol_index: usize) -> PyResult<(usize, usize, usize)> {
        let c = apq::index_to_components(symbol_index, &self.inner).map_err(err)?;
        Ok((c.a, c.p, c.q))
    }

    /// Normalized optical amplitude of a symbol.
    fn modulate(&self, symbol_index: usize) -> PyResult<f64> {
        let c = apq::index_to_components(symbol_index, &self.inner).map_err(err)?;
        Ok(apq::apq_modulate(c, &self.inner).map_err(err)?.value())
    }

    /// Symbol index decided by SIC from a received sample in noise units.
    fn demodulate(&self, received: f64, detection_scale: f64) -> PyResult<usize> {
        let c: ComponentIndices =
            apq::sic_demodulate(received, scale(detection_scale)?, &self.inner);
        apq::components_to_index(c, &self.inner).map_err(err)
    }

    /// Monte Carlo SER at a detection scale.
    #[pyo3(signature = (detection_scale, trials, seed = 1))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        detection_scale: f64,
        trials: u64,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let s = scale(detection_scale)?;
        let r = py
            .detach(|| montecarlo::simulate_apq(&self.inner, s, trials, seed, 0))
            .map_err(err)?;
        let d = estimate(py, &r.symbol)?;
        d.set_item("amplitude", r.amplitude.ser)?;
        d.set_item("phase", r.phase.ser)?;
        d.set_item("quadrant", r.quadrant.ser)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "ApqConfig(m_total={}, alpha={})",
            self.inner.m_total(),
            self.inner.alpha()
        )
    }
}

/// LED on/off pattern of a GSSK symbol, most significant bit first.
#[pyfunction]
fn gssk_modulate(symbol_index: usize, n_tx: usize) -> PyResult<Vec<bool>> {
    let pattern = gssk::gssk_modulate(symbol_index, n_tx).map_err(err)?;
    Ok(pattern.bits.iter().map(|&b| b == 1).collect())
}

/// Maximum-likelihood GSSK decision for a received sample in noise units.
#[pyfunction]
fn gssk_detect(received: f64, gains: Vec<f64>) -> PyResult<usize> {
    let cfg = gssk::GsskConfig::new(gains.len()).map_err(err)?;
    gssk::gssk_detect_ml(received, &gains, &cfg).map_err(err)
}

fn parse(config_json: &str) -> PyResult<ScenarioConfig> {
    ScenarioConfig::from_json_str(config_json).map_err(err)
}

/// Hash of the effective configuration, as written to CSV outputs.
#[pyfunction]
fn config_hash(config_json: &str) -> PyResult<String> {
    Ok(parse(config_json)?.config_hash())
}

/// One Monte Carlo SER point for a scenario.
#[pyfunction]
#[pyo3(signature = (config_json, snr_db, trials = None, seed = None))]
fn ser_point<'py>(
    py: Python<'py>,
    config_json: &str,
    snr_db: f64,
    trials: Option<u64>,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = parse(config_json)?;
    let scheme = cfg.build_scheme().map_err(err)?;
    let scenario = cfg.build_scenario().map_err(err)?;
    let (trials, seed) = (trials.unwrap_or(cfg.trials), seed.unwrap_or(cfg.seed));
    let est = py
        .detach(|| montecarlo::run_ser_point(&scheme, &scenario, snr_db, trials, seed))
        .map_err(err)?;
    let d = estimate(py, &est)?;
    let analytic = montecarlo::analytic_ser(&scheme, &scenario, snr_db).map_err(err)?;
    d.set_item("analytic", analytic)?;
    Ok(d)
}

/// SER over the scenario's SNR list; one dict per point.
#[pyfunction]
fn ser_sweep<'py>(py: Python<'py>, config_json: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = parse(config_json)?;
    let scheme = cfg.build_scheme().map_err(err)?;
    let scenario = cfg.build_scenario().map_err(err)?;
    let sweep = py
        .detach(|| montecarlo::run_snr_sweep(&scheme, &scenario, &cfg.snr_db, cfg.trials, cfg.seed))
        .map_err(err)?;
    sweep
        .snr_db
        .iter()
        .zip(&sweep.points)
        .map(|(&snr, est)| {
            let d = estimate(py, est)?;
            d.set_item("snr_db", snr)?;
            d.set_item(
                "analytic",
                montecarlo::analytic_ser(&scheme, &scenario, snr).map_err(err)?,
            )?;
            Ok(d)
        })
        .collect()
}

/// Normalized throughput over the floor grid, as rows indexed by y.
#[pyfunction]
fn throughput_map<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = parse(config_json)?;
    let scheme = cfg.build_scheme().map_err(err)?;
    let scenario = cfg.build_scenario().map_err(err)?;
    let snr = cfg.heatmap_snr().map_err(err)?;
    let map = py
        .detach(|| {
            montecarlo::throughput_map(
                &scheme,
                &scenario,
                snr,
                cfg.grid_spacing,
                cfg.heatmap_trials,
                cfg.seed,
            )
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("snr_db", snr)?;
    d.set_item("origin", map.origin)?;
    d.set_item("spacing", map.spacing)?;
    d.set_item("peak_success", map.peak_success)?;
    d.set_item(
        "values",
        map.rows().map(<[f64]>::to_vec).collect::<Vec<_>>(),
    )?;
    Ok(d)
}

#[pymodule]
fn vlc_apq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(lambertian_order, m)?)?;
    m.add_function(wrap_pyfunction!(channel_gain, m)?)?;
    m.add_function(wrap_pyfunction!(detection_scale, m)?)?;
    m.add_function(wrap_pyfunction!(power_allocation, m)?)?;
    m.add_function(wrap_pyfunction!(split_for, m)?)?;
    m.add_function(wrap_pyfunction!(q_function, m)?)?;
    m.add_function(wrap_pyfunction!(ser_breakdown, m)?)?;
    m.add_function(wrap_pyfunction!(ser_total, m)?)?;
    m.add_function(wrap_pyfunction!(gssk_modulate, m)?)?;
    m.add_function(wrap_pyfunction!(gssk_detect, m)?)?;
    m.add_function(wrap_pyfunction!(config_hash, m)?)?;
    m.add_function(wrap_pyfunction!(ser_point, m)?)?;
    m.add_function(wrap_pyfunction!(ser_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(throughput_map, m)?)?;
    m.add_class::<PyApqConfig>()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_powers_need_three_entries() {
        assert!(stage_powers(vec![0.7, 0.2, 0.1]).is_ok());
        assert!(stage_powers(vec![0.7, 0.3]).is_err());
    }

    #[test]
    fn floor_flag_maps_to_policy() {
        assert_eq!(policy(false), SicPolicy::Strict);
        assert_eq!(policy(true), SicPolicy::AllowFloor);
        assert!(scale(-1.0).is_err());
    }
}
