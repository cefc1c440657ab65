use std::f64::consts::PI;

use ndarray::Array1;

/// Formant centres and bandwidths (Hz) of a neutral vowel, and of a brighter
/// one used on alternate syllables.
const FORMANTS: [[(f64, f64); 3]; 2] = [
    [(500.0, 80.0), (1500.0, 120.0), (2500.0, 160.0)],
    [(300.0, 60.0), (2200.0, 140.0), (3000.0, 200.0)],
];

fn formant_gain(f: f64, vowel: &[(f64, f64); 3], mix: f64, other: &[(f64, f64); 3]) -> f64 {
    let peak = |set: &[(f64, f64); 3]| {
        set.iter()
            .enumerate()
            .map(|(i, &(c, bw))| {
                let d = (f - c) / bw;
                (1.0 / (1.0 + d * d)) * 0.7f64.powi(i as i32)
            })
            .sum::<f64>()
    };
    (1.0 - mix) * peak(vowel) + mix * peak(other)
}

/// A deterministic voiced-speech-like test signal: a harmonic source with a
/// gliding pitch, shaped by slowly morphing formants and a syllable-rate
/// amplitude envelope. Peak amplitude is one.
pub fn speech_like(seconds: f64, sample_rate: u32) -> Array1<f64> {
    let fs = f64::from(sample_rate);
    let len = (seconds * fs).round() as usize;
    let syllable = 0.25;
    let mut out = Array1::zeros(len);
    let mut phase = 0.0_f64;
    for n in 0..len {
        let t = n as f64 / fs;
        let f0 = 140.0 + 30.0 * (2.0 * PI * 0.7 * t).sin() + 10.0 * (2.0 * PI * 3.1 * t).sin();
        phase += 2.0 * PI * f0 / fs;

        let s = t / syllable;
        let k = s.floor() as usize;
        let within = s - s.floor();
        let env = (PI * within).sin().powf(1.5) * (0.6 + 0.4 * ((k * 7 % 5) as f64 / 4.0));
        let mix = 0.5 - 0.5 * (PI * within).cos();
        let (a, b) = (&FORMANTS[k % 2], &FORMANTS[(k + 1) % 2]);

        let mut v = 0.0;
        let mut h = 1;
        while f64::from(h) * f0 < 0.45 * fs.min(8000.0) {
            let fh = f64::from(h) * f0;
            v += formant_gain(fh, a, mix, b) * (f64::from(h) * phase).sin() / f64::from(h).sqrt();
            h += 1;
        }
        out[n] = env * v;
    }
    let peak = out.fold(0.0_f64, |p: f64, v: &f64| p.max(v.abs()));
    if peak > 0.0 {
        out /= peak;
    }
    out
}
