//! Experiment plumbing: synthetic data, audio framing, WAV I/O, metrics and
//! result tables.

mod experiment;
mod frames;
mod metrics;
mod report;
mod speech;
mod synth;
mod wav;

pub use experiment::{
    quant_noise_level, reconstruct, run_synthetic, AudioJob, Distortion, Method, Problem, Reconstruction, Restored,
};
pub use frames::{frame_observation, frame_signal, overlap_add, FrameSpec};
pub use metrics::{angular_snr_db, mean, median, snr_db};
pub use report::{format_sig, write_csv, EvalRow, CSV_HEADER};
pub use speech::speech_like;
pub use synth::{gen_synthetic, uniform_quantizer_for_bits, SyntheticSet, SyntheticSpec};
pub use wav::{wav_read, wav_write, WavData};
