//! Affine frequency division multiplexing (AFDM) for joint sensing and
//! communication, with chirp parameters chosen so that the zeroth subcarrier
//! is a Nyquist-sampled FMCW waveform.
//!
//! The crate covers the full simulation chain:
//!
//! - [`params`]: symbol geometry and chirp-parameter presets
//! - [`waveform`]: IDAFT/DAFT, chirp prefix, FMCW reference, DD index map
//! - [`channel`]: integer delay-Doppler channel and AWGN
//! - [`ambiguity`]: discrete periodic ambiguity function, brute force and closed form
//! - [`dd_daft`]: delay-Doppler grids and the DD-DAFT input-output relation
//! - [`sensing`]: TFMF, dechirp and DD-DAFT matched filters, 2D CA-CFAR
//! - [`metrics`]: pilot frames, PSLR, image SNR, Pd, LMMSE and BER
//! - [`harness`]: scenario files and experiment drivers behind the `afdm` CLI

pub mod ambiguity;
pub mod channel;
pub mod dd_daft;
pub mod error;
pub mod fft;
pub mod harness;
pub mod metrics;
pub mod params;
pub mod phase;
pub mod sensing;
pub mod waveform;

pub use num_complex::Complex64 as C64;

pub use error::{AfdmError, Result};
pub use params::{AfdmConfig, Preset, ScenarioConfig};
pub use waveform::{DaftSymbols, TimeSignal};
