use std::path::Path;
use std::process::{Command, Output};

use nlcs::pipeline::{speech_like, wav_read, wav_write};

fn nlcs(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_nlcs")).args(args).output().expect("spawn nlcs");
    assert!(out.status.success(), "nlcs {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

/// CSV text with the runtime column blanked.
fn without_runtime(csv: &str) -> String {
    let mut idx = None;
    csv.lines()
        .map(|line| {
            if line.starts_with('#') {
                return line.to_string();
            }
            let cells: Vec<&str> = line.split(',').collect();
            let i = *idx.get_or_insert_with(|| cells.iter().position(|c| *c == "runtime_s").expect("runtime column"));
            cells.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| *c).collect::<Vec<_>>().join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write_speech(path: &Path, seconds: f64) {
    wav_write(path, (speech_like(seconds, 16000) * 0.9).view(), 16000).unwrap();
}

#[test]
fn synth_smoke_run_has_finite_snr() {
    let out = nlcs(&[
        "synth", "--distortion", "quant", "--bits", "3", "--method", "fixed", "--lambda", "1e-2", "--count", "20",
        "--stdout",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], "fixed");
    assert!(rows[0][2].parse::<f64>().unwrap().is_finite());
}

#[test]
fn synth_is_reproducible() {
    let args = ["synth", "--distortion", "clip", "--theta", "0.3,0.6", "--count", "30", "--seed", "5", "--stdout"];
    let a = String::from_utf8(nlcs(&args).stdout).unwrap();
    let b = String::from_utf8(nlcs(&args).stdout).unwrap();
    assert_eq!(without_runtime(&a), without_runtime(&b));
    assert_eq!(data_rows(&a).len(), 6);
}

#[test]
fn sequential_flag_does_not_change_results() {
    let args = ["synth", "--distortion", "onebit", "--count", "16", "--seed", "2", "--stdout"];
    let a = String::from_utf8(nlcs(&args).stdout).unwrap();
    let mut seq = args.to_vec();
    seq.push("--sequential");
    let b = String::from_utf8(nlcs(&seq).stdout).unwrap();
    let strip = |s: &str| without_runtime(s).lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn output_csv_replays_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    nlcs(&["synth", "--distortion", "clip", "--theta", "0.5", "--method", "adaptive", "--count", "12", "--seed", "9",
        "--out", first.to_str().unwrap()]);
    nlcs(&["synth", "--config", first.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    let a = std::fs::read_to_string(&first).unwrap();
    let b = std::fs::read_to_string(&second).unwrap();
    assert_eq!(without_runtime(&a), without_runtime(&b));
}

#[test]
fn declip_writes_audio_and_scores() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.wav");
    let output = dir.path().join("out.wav");
    write_speech(&input, 0.25);
    let inp = input.to_str().unwrap();
    nlcs(&["declip", inp, "--theta", "0.5", "--iters", "5", "--reference", inp, "--out", output.to_str().unwrap()]);
    let restored = wav_read(&output).unwrap();
    assert_eq!(restored.sample_rate, 16000);
    assert_eq!(restored.samples.len(), wav_read(&input).unwrap().samples.len());
    let csv = std::fs::read_to_string(output.with_extension("csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "clip:0.5");
    assert!(rows[0][2].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn learned_dictionary_round_trips_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.wav");
    let dict = dir.path().join("d.txt");
    write_speech(&input, 0.25);
    let inp = input.to_str().unwrap();
    nlcs(&["learn-dict", inp, "--theta", "0.5", "--iters", "2", "--inner", "2", "--out", dict.to_str().unwrap()]);
    let loaded = nlcs::dictlearn::read_dictionary_text(std::io::BufReader::new(std::fs::File::open(&dict).unwrap())).unwrap();
    assert_eq!((loaded.signal_dim(), loaded.atom_count()), (256, 512));
    let spec = format!("file:{}", dict.display());
    let out = nlcs(&["declip", inp, "--theta", "0.5", "--iters", "3", "--dict", &spec, "--reference", inp, "--stdout"]);
    assert_eq!(data_rows(&String::from_utf8(out.stdout).unwrap()).len(), 1);
}

#[test]
fn invalid_arguments_fail_cleanly() {
    let bad = Command::new(env!("CARGO_BIN_EXE_nlcs"))
        .args(["synth", "--distortion", "quant", "--bits", "0", "--stdout"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(!String::from_utf8_lossy(&bad.stderr).is_empty());
    let missing = Command::new(env!("CARGO_BIN_EXE_nlcs")).args(["declip", "/nonexistent/in.wav"]).output().unwrap();
    assert!(!missing.status.success());
}
