use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};
use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WavData {
    pub samples: Array1<f64>,
    pub sample_rate: u32,
}

/// Reads a 16-bit PCM file. Only the first channel is kept.
pub fn wav_read(path: &Path) -> Result<WavData> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::Format(format!(
            "{}: expected 16-bit PCM, found {:?} {}-bit",
            path.display(),
            spec.sample_format,
            spec.bits_per_sample
        )));
    }
    let channels = usize::from(spec.channels);
    if channels > 1 {
        log::info!("{}: {channels} channels, using the first", path.display());
    }
    let mut samples = Vec::with_capacity(reader.len() as usize / channels.max(1));
    for (i, s) in reader.samples::<i16>().enumerate() {
        let s = s?;
        if i % channels == 0 {
            samples.push(f64::from(s) / 32768.0);
        }
    }
    Ok(WavData { samples: Array1::from(samples), sample_rate: spec.sample_rate })
}

fn to_pcm(x: f64) -> i16 {
    let clamped = x.clamp(-1.0, 1.0 - 1.0 / 32768.0);
    // f64::round is half away from zero
    (clamped * 32768.0).round() as i16
}

/// Writes mono 16-bit PCM.
pub fn wav_write(path: &Path, samples: ArrayView1<'_, f64>, sample_rate: u32) -> Result<()> {
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("cannot write NaN samples".into()));
    }
    let spec = WavSpec { channels: 1, sample_rate, bits_per_sample: 16, sample_format: SampleFormat::Int };
    let mut w = WavWriter::create(path, spec)?;
    for &v in samples {
        w.write_sample(to_pcm(v))?;
    }
    w.finalize()?;
    Ok(())
}
