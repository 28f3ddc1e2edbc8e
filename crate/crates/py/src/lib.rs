//! Python bindings for the `afdm_isac` simulator.
//!
//! Signals cross the boundary as lists of `complex`, delay-Doppler maps as
//! nested lists indexed `[delay][doppler]`, and channel paths as
//! `(gain, delay, doppler)` tuples.

use ndarray::Array2;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use afdm_isac::channel::PathTap;
use afdm_isac::dd_daft::{vector_to_grid, DdGrid};
use afdm_isac::harness::three_targets;
use afdm_isac::metrics::{FadingTap, FrameSpec, SensingSetup};
use afdm_isac::sensing::{Algorithm, CfarConfig, DelayDopplerMap};
use afdm_isac::waveform::{DaftSymbols, TimeSignal};
use afdm_isac::{params, AfdmError, C64};

type Grid = Vec<Vec<C64>>;

fn py_err(e: AfdmError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn paths(taps: Vec<(C64, usize, i64)>) -> Vec<PathTap> {
    taps.into_iter().map(|(g, l, k)| PathTap::new(g, l, k)).collect()
}

fn grid_rows(cells: &Array2<C64>) -> Grid {
    cells.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn map_from_rows(rows: Grid) -> PyResult<DelayDopplerMap> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("ragged map"));
    }
    let flat: Vec<C64> = rows.into_iter().flatten().collect();
    let cells = Array2::from_shape_vec((n, m), flat).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(DelayDopplerMap {
        cells,
        algorithm: Algorithm::Tfmf,
    })
}

fn dd_grid(cfg: &params::AfdmConfig, v: Vec<C64>) -> PyResult<DdGrid> {
    vector_to_grid(cfg, &DaftSymbols(v)).map_err(py_err)
}

/// Validated waveform parameters.
#[pyclass(name = "AfdmConfig", frozen)]
#[derive(Clone)]
struct PyConfig(params::AfdmConfig);

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn proposed(n_p: usize, k_chirps: usize) -> PyResult<Self> {
        params::proposed_params(n_p, k_chirps).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn classic(n_c: usize, k_max: usize) -> PyResult<Self> {
        params::classic_params(n_c, k_max).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn ofdm(n_c: usize) -> PyResult<Self> {
        params::ofdm_params(n_c).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn ocdm(n_c: usize) -> PyResult<Self> {
        params::ocdm_params(n_c).map(Self).map_err(py_err)
    }

    /// Reinterprets the symbol as a `(N_c / K) x K` grid.
    fn with_grid(&self, k_chirps: usize) -> PyResult<Self> {
        self.0.clone().with_grid(k_chirps).map(Self).map_err(py_err)
    }

    fn with_cpp(&self, l_cpp: usize) -> PyResult<Self> {
        self.0.clone().with_cpp(l_cpp).map(Self).map_err(py_err)
    }

    #[getter]
    fn n_c(&self) -> usize {
        self.0.n_c()
    }

    #[getter]
    fn k_chirps(&self) -> usize {
        self.0.k_chirps()
    }

    #[getter]
    fn n_p(&self) -> usize {
        self.0.n_p()
    }

    #[getter]
    fn c1(&self) -> f64 {
        let c1 = self.0.c1();
        *c1.numer() as f64 / *c1.denom() as f64
    }

    #[getter]
    fn c2(&self) -> f64 {
        self.0.c2().value()
    }

    #[getter]
    fn l_cpp(&self) -> usize {
        self.0.l_cpp()
    }

    #[getter]
    fn preset(&self) -> &'static str {
        self.0.preset().name()
    }

    fn __repr__(&self) -> String {
        format!(
            "AfdmConfig(preset={}, n_c={}, k_chirps={}, c1={}, c2={})",
            self.0.preset(),
            self.0.n_c(),
            self.0.k_chirps(),
            self.0.c1(),
            self.0.c2().value()
        )
    }
}

#[pyfunction]
fn modulate(cfg: &PyConfig, x: Vec<C64>) -> PyResult<Vec<C64>> {
    afdm_isac::waveform::modulate(&cfg.0, &DaftSymbols(x))
        .map(|s| s.samples)
        .map_err(py_err)
}

#[pyfunction]
fn demodulate(cfg: &PyConfig, r: Vec<C64>) -> PyResult<Vec<C64>> {
    afdm_isac::waveform::demodulate(&cfg.0, &TimeSignal::new(r))
        .map(|x| x.0)
        .map_err(py_err)
}

#[pyfunction]
fn subcarrier(cfg: &PyConfig, m: usize) -> PyResult<Vec<C64>> {
    afdm_isac::waveform::subcarrier(&cfg.0, m)
        .map(|s| s.samples)
        .map_err(py_err)
}

#[pyfunction]
fn fmcw_signal(n_p: usize, k_chirps: usize) -> PyResult<Vec<C64>> {
    afdm_isac::waveform::fmcw_signal(n_p, k_chirps)
        .map(|s| s.samples)
        .map_err(py_err)
}

#[pyfunction]
fn dd_to_daft_index(cfg: &PyConfig, l: usize, k: usize) -> PyResult<usize> {
    afdm_isac::waveform::dd_to_daft_index(&cfg.0, l, k).map_err(py_err)
}

#[pyfunction]
fn apply_channel(cfg: &PyConfig, s: Vec<C64>, taps: Vec<(C64, usize, i64)>) -> PyResult<Vec<C64>> {
    afdm_isac::channel::apply_channel(&cfg.0, &TimeSignal::new(s), &paths(taps))
        .map(|r| r.samples)
        .map_err(py_err)
}

#[pyfunction]
fn add_awgn(r: Vec<C64>, snr_db: f64, seed: u64) -> PyResult<Vec<C64>> {
    let mut rng = afdm_isac::metrics::trial_rng(seed, 0);
    afdm_isac::channel::add_awgn(&TimeSignal::new(r), snr_db, &mut rng)
        .map(|r| r.samples)
        .map_err(py_err)
}

#[pyfunction]
fn dpaf(a: Vec<C64>, b: Vec<C64>, l: i64, k: i64) -> PyResult<C64> {
    afdm_isac::ambiguity::dpaf_brute(&TimeSignal::new(a), &TimeSignal::new(b), l, k).map_err(py_err)
}

#[pyfunction]
fn aaf_psi0(cfg: &PyConfig, l: i64, k: i64) -> PyResult<C64> {
    afdm_isac::ambiguity::aaf_psi0_closed(&cfg.0, l, k).map_err(py_err)
}

/// Noiseless received DD grid predicted from the transmitted DAFT symbols.
#[pyfunction]
fn io_predict(cfg: &PyConfig, x: Vec<C64>, taps: Vec<(C64, usize, i64)>) -> PyResult<Grid> {
    let g = dd_grid(&cfg.0, x)?;
    afdm_isac::dd_daft::io_predict(&cfg.0, &g, &paths(taps))
        .map(|y| grid_rows(&y.cells))
        .map_err(py_err)
}

#[pyfunction]
fn tfmf(cfg: &PyConfig, r: Vec<C64>, s_ref: Vec<C64>) -> PyResult<Grid> {
    afdm_isac::sensing::tfmf(&cfg.0, &TimeSignal::new(r), &TimeSignal::new(s_ref))
        .map(|m| grid_rows(&m.cells))
        .map_err(py_err)
}

#[pyfunction]
fn dechirp(cfg: &PyConfig, r: Vec<C64>, pilot: Vec<C64>) -> PyResult<Grid> {
    afdm_isac::sensing::dechirp(&cfg.0, &TimeSignal::new(r), &TimeSignal::new(pilot))
        .map(|m| grid_rows(&m.cells))
        .map_err(py_err)
}

/// `y` and `x` are received and transmitted DAFT-domain vectors.
#[pyfunction]
fn ddmf(cfg: &PyConfig, y: Vec<C64>, x: Vec<C64>) -> PyResult<Grid> {
    let (yg, xg) = (dd_grid(&cfg.0, y)?, dd_grid(&cfg.0, x)?);
    afdm_isac::sensing::ddmf(&cfg.0, &yg, &xg)
        .map(|m| grid_rows(&m.cells))
        .map_err(py_err)
}

/// CA-CFAR over a complex map; returns `(l, k, power, threshold)` per crossing.
#[pyfunction]
#[pyo3(signature = (map, train=2, guard=1, pfa=1e-4))]
fn ca_cfar(map: Grid, train: usize, guard: usize, pfa: f64) -> PyResult<Vec<(usize, usize, f64, f64)>> {
    let map = map_from_rows(map)?;
    let dets = afdm_isac::sensing::ca_cfar_2d(&map, &CfarConfig { train, guard, pfa }).map_err(py_err)?;
    Ok(dets.into_iter().map(|d| (d.l, d.k, d.power, d.threshold)).collect())
}

#[pyfunction]
fn pslr(map: Grid, target: (usize, usize)) -> PyResult<f64> {
    afdm_isac::metrics::pslr(&map_from_rows(map)?, target).map_err(py_err)
}

#[pyfunction]
fn image_snr(map: Grid, target: (usize, usize)) -> PyResult<f64> {
    afdm_isac::metrics::image_snr(&map_from_rows(map)?, target).map_err(py_err)
}

/// Detection probability of the first target with CA-CFAR.
#[pyfunction]
#[pyo3(signature = (cfg, targets, snr_db, po, algorithm="ddmf", trials=100, seed=0))]
fn monte_carlo_pd(
    cfg: &PyConfig,
    targets: Vec<(C64, usize, i64)>,
    snr_db: f64,
    po: f64,
    algorithm: &str,
    trials: usize,
    seed: u64,
) -> PyResult<f64> {
    let alg: Algorithm = algorithm.parse().map_err(py_err)?;
    let frame = FrameSpec::from_po(cfg.0.n_c(), po).map_err(py_err)?;
    let setup = SensingSetup::new(cfg.0.clone(), paths(targets), snr_db, frame);
    afdm_isac::metrics::monte_carlo_pd(&setup, alg, trials, seed).map_err(py_err)
}

/// LMMSE bit error rate over Rayleigh taps given as `(delay, doppler, power)`;
/// returns `(ber, bits, bit_errors)`. Defaults to the three-target scenario.
#[pyfunction]
#[pyo3(signature = (cfg, snr_db, symbols, seed=0, taps=None))]
fn run_ber(
    cfg: &PyConfig,
    snr_db: f64,
    symbols: usize,
    seed: u64,
    taps: Option<Vec<(usize, i64, f64)>>,
) -> PyResult<(f64, usize, usize)> {
    let taps: Vec<FadingTap> = match taps {
        Some(t) => t
            .into_iter()
            .map(|(delay, doppler, power)| FadingTap { delay, doppler, power })
            .collect(),
        None => three_targets(),
    };
    let s = afdm_isac::metrics::run_ber(&cfg.0, &taps, snr_db, symbols, seed).map_err(py_err)?;
    Ok((s.ber(), s.bits, s.bit_errors))
}

#[pymodule]
fn afdm_isac_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(modulate, m)?)?;
    m.add_function(wrap_pyfunction!(demodulate, m)?)?;
    m.add_function(wrap_pyfunction!(subcarrier, m)?)?;
    m.add_function(wrap_pyfunction!(fmcw_signal, m)?)?;
    m.add_function(wrap_pyfunction!(dd_to_daft_index, m)?)?;
    m.add_function(wrap_pyfunction!(apply_channel, m)?)?;
    m.add_function(wrap_pyfunction!(add_awgn, m)?)?;
    m.add_function(wrap_pyfunction!(dpaf, m)?)?;
    m.add_function(wrap_pyfunction!(aaf_psi0, m)?)?;
    m.add_function(wrap_pyfunction!(io_predict, m)?)?;
    m.add_function(wrap_pyfunction!(tfmf, m)?)?;
    m.add_function(wrap_pyfunction!(dechirp, m)?)?;
    m.add_function(wrap_pyfunction!(ddmf, m)?)?;
    m.add_function(wrap_pyfunction!(ca_cfar, m)?)?;
    m.add_function(wrap_pyfunction!(pslr, m)?)?;
    m.add_function(wrap_pyfunction!(image_snr, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_pd, m)?)?;
    m.add_function(wrap_pyfunction!(run_ber, m)?)?;
    Ok(())
}
