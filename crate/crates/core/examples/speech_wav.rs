//! Writes the built-in speech-like test signal as a 16 kHz WAV file.
//!
//! cargo run --release --example speech_wav -- speech.wav

use std::path::PathBuf;

use nlcs::pipeline::{speech_like, wav_write};

fn main() -> nlcs::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "speech.wav".into());
    let x = speech_like(2.0, 16000);
    // leave headroom so 16-bit rounding never saturates
    wav_write(&path, (&x * 0.9).view(), 16000)?;
    println!("{}", path.display());
    Ok(())
}
