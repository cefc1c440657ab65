use ndarray::{s, Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::linops::Signal;
use crate::measurements::{apply_measurement, ClipState, MeasurementModel, Observation};

/// Rectangular-window framing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSpec {
    pub frame_len: usize,
    /// Fraction of a frame shared with the next one, in `[0, 1)`.
    pub overlap: f64,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self { frame_len: 256, overlap: 0.75 }
    }
}

impl FrameSpec {
    /// `N (1 − overlap)`, which must be a positive integer.
    pub fn hop(&self) -> Result<usize> {
        if self.frame_len == 0 || !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::InvalidArgument(format!(
                "invalid framing: length {} overlap {}",
                self.frame_len, self.overlap
            )));
        }
        let hop = self.frame_len as f64 * (1.0 - self.overlap);
        let rounded = hop.round();
        if rounded < 1.0 || (hop - rounded).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("hop {hop} is not a positive integer")));
        }
        Ok(rounded as usize)
    }

    /// `⌈(len − N)/hop⌉ + 1`
    pub fn frame_count(&self, len: usize) -> Result<usize> {
        let hop = self.hop()?;
        if len < self.frame_len {
            return Err(Error::InvalidArgument(format!(
                "signal of {len} samples is shorter than one frame ({})",
                self.frame_len
            )));
        }
        Ok((len - self.frame_len).div_ceil(hop) + 1)
    }

    fn padded_len(&self, len: usize) -> Result<usize> {
        Ok((self.frame_count(len)? - 1) * self.hop()? + self.frame_len)
    }
}

/// Splits `samples` into overlapping frames; the last frame is zero-padded.
pub fn frame_signal(samples: ArrayView1<'_, f64>, spec: &FrameSpec) -> Result<Vec<Signal>> {
    let count = spec.frame_count(samples.len())?;
    let hop = spec.hop()?;
    let mut padded = Array1::zeros(spec.padded_len(samples.len())?);
    padded.slice_mut(s![..samples.len()]).assign(&samples);
    Ok((0..count)
        .map(|t| padded.slice(s![t * hop..t * hop + spec.frame_len]).to_owned())
        .collect())
}

/// Sums frames at their offsets and divides each sample by the number of
/// frames covering it, then truncates (or zero-extends) to `out_len`.
pub fn overlap_add(frames: &[Signal], spec: &FrameSpec, out_len: usize) -> Result<Array1<f64>> {
    let hop = spec.hop()?;
    if frames.iter().any(|f| f.len() != spec.frame_len) {
        return Err(Error::InvalidArgument("frame length does not match the frame spec".into()));
    }
    let total = if frames.is_empty() { 0 } else { (frames.len() - 1) * hop + spec.frame_len };
    let mut sum = Array1::<f64>::zeros(total.max(out_len));
    let mut cover = Array1::<f64>::zeros(total.max(out_len));
    for (t, f) in frames.iter().enumerate() {
        let span = s![t * hop..t * hop + spec.frame_len];
        sum.slice_mut(span).zip_mut_with(f, |a, b| *a += b);
        cover.slice_mut(span).mapv_inplace(|c| c + 1.0);
    }
    sum.zip_mut_with(&cover, |a, c| {
        if *c > 0.0 {
            *a /= c
        }
    });
    Ok(sum.slice(s![..out_len]).to_owned())
}

/// Splits a separable observation into per-frame observations using the
/// same framing as [`frame_signal`]. Padding samples are the measurement of
/// a zero input.
pub fn frame_observation(obs: &Observation, spec: &FrameSpec) -> Result<Vec<Observation>> {
    if !obs.model().is_separable() {
        return Err(Error::Unsupported("general linear"));
    }
    let len = obs.values().len();
    let frames = frame_signal(obs.values(), spec)?;
    let hop = spec.hop()?;

    let zero = Array1::zeros(1);
    let pad_model = match obs.model() {
        MeasurementModel::Mask(_) => MeasurementModel::Identity,
        m => m.clone(),
    };
    let pad_value = apply_measurement(&pad_model, zero.view())?.values()[0];

    frames
        .into_iter()
        .enumerate()
        .map(|(t, mut values)| {
            let start = t * hop;
            for i in 0..spec.frame_len {
                if start + i >= len {
                    values[i] = pad_value;
                }
            }
            let idx = |i: usize| start + i;
            match obs.model() {
                MeasurementModel::Clip { upper, lower } => {
                    let states = obs.clip_states().expect("clip observations carry states");
                    let s = (0..spec.frame_len)
                        .map(|i| states.get(idx(i)).copied().unwrap_or(ClipState::Reliable))
                        .collect();
                    Observation::with_clip_states(values, *upper, *lower, s)
                }
                MeasurementModel::Mask(m) => {
                    let mask = (0..spec.frame_len).map(|i| m.get(idx(i)).copied().unwrap_or(true)).collect();
                    Observation::new(MeasurementModel::Mask(mask), values)
                }
                m => Observation::new(m.clone(), values),
            }
        })
        .collect()
}
