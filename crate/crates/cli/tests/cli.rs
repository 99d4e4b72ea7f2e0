use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use lulu_core::io::{read_pgm, write_pgm, PgmOptions};
use lulu_core::GridImage;

fn lulu(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lulu"))
        .args(args.iter().map(|a| a.as_ref()))
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn save(dir: &Path, name: &str, f: &GridImage) -> PathBuf {
    let path = dir.join(name);
    write_pgm(f, &path, PgmOptions::default()).unwrap();
    path
}

fn spike() -> GridImage {
    let mut f = GridImage::constant(3, 3, 0, 0).unwrap();
    f.set((1, 1), 5);
    f
}

fn two_pulse() -> GridImage {
    let mut f = GridImage::constant(4, 4, 0, 0).unwrap();
    f.set((1, 1), 8);
    f.set((1, 2), 3);
    f
}

/// Deterministic 8-bit test pattern with ridges and isolated spikes.
fn pattern(w: usize, h: usize) -> GridImage {
    let values = (0..w * h)
        .map(|i| {
            let (r, c) = ((i / w) as i64, (i % w) as i64);
            ((r * 37 + c * 11) % 17) * 9 + if (r * c) % 7 == 3 { 80 } else { 0 }
        })
        .collect();
    GridImage::new(w, h, values, 0).unwrap()
}

#[test]
fn filter_spike_reports_tv_split() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "spike.pgm", &spike());
    let out = dir.path().join("out.pgm");
    let o = lulu(&[&"filter", &input, &out, &"--op", &"ln", &"-n", &"1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("TV input 20 = output 0 + residual 20"));
    assert!(read_pgm(&out).unwrap().is_flat());
}

#[test]
fn filter_is_idempotent_and_fixes_constants() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "p.pgm", &pattern(9, 7));
    let once = dir.path().join("once.pgm");
    let twice = dir.path().join("twice.pgm");
    for (src, dst) in [(&input, &once), (&once, &twice)] {
        let o = lulu(&[
            &"filter", src, dst, &"--op", &"unln", &"-n", &"2", &"-c", &"8",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&once).unwrap(), fs::read(&twice).unwrap());

    let flat = save(
        dir.path(),
        "c.pgm",
        &GridImage::constant(5, 4, 7, 0).unwrap(),
    );
    let out = dir.path().join("c_out.pgm");
    let o = lulu(&[&"filter", &flat, &out, &"--op", &"lnun", &"-n", &"3"]);
    assert!(o.status.success());
    assert_eq!(fs::read(&flat).unwrap(), fs::read(&out).unwrap());
}

#[test]
fn decompose_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "spike.pgm", &spike());
    let pulses = dir.path().join("spike.jsonl");
    let o = lulu(&[&"decompose", &input, &pulses]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("size 1: 1"));
    assert!(!stdout(&o).contains("FAIL"));

    let zero = save(
        dir.path(),
        "zero.pgm",
        &GridImage::constant(4, 4, 0, 0).unwrap(),
    );
    let o = lulu(&[&"decompose", &zero, &dir.path().join("zero.jsonl")]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("0 pulses"));
}

#[test]
fn decompose_then_reconstruct_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (k, conn) in ["4", "8"].iter().enumerate() {
        let input = save(dir.path(), &format!("in{k}.pgm"), &pattern(23, 17));
        let pulses = dir.path().join(format!("p{k}.jsonl"));
        let back = dir.path().join(format!("back{k}.pgm"));
        assert!(lulu(&[&"decompose", &input, &pulses, &"-c", conn])
            .status
            .success());
        let o = lulu(&[&"reconstruct", &pulses, &back]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(fs::read(&input).unwrap(), fs::read(&back).unwrap());
    }
}

#[test]
fn reconstruct_filters() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "two.pgm", &two_pulse());
    let pulses = dir.path().join("two.jsonl");
    assert!(lulu(&[&"decompose", &input, &pulses]).status.success());

    let plateau = dir.path().join("plateau.pgm");
    assert!(
        lulu(&[&"reconstruct", &pulses, &plateau, &"--min-size", &"2"])
            .status
            .success()
    );
    let mut want = GridImage::constant(4, 4, 0, 0).unwrap();
    want.set((1, 1), 3);
    want.set((1, 2), 3);
    assert_eq!(read_pgm(&plateau).unwrap(), want);

    let none = dir.path().join("none.pgm");
    let o = lulu(&[&"reconstruct", &pulses, &none, &"--sign", &"neg"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("no pulses match"));
    assert!(read_pgm(&none).unwrap().is_flat());

    let o = lulu(&[
        &"reconstruct",
        &pulses,
        &none,
        &"--min-size",
        &"5",
        &"--max-size",
        &"2",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sign_filter_keeps_upward_pulses() {
    let dir = tempfile::tempdir().unwrap();
    let f = GridImage::from_rows(&[[5, 5, 5, 5], [5, 9, 1, 5], [5, 5, 5, 5]]);
    let input = save(dir.path(), "mixed.pgm", &f);
    let pulses = dir.path().join("mixed.jsonl");
    assert!(lulu(&[&"decompose", &input, &pulses]).status.success());
    let pos = dir.path().join("pos.pgm");
    assert!(lulu(&[
        &"reconstruct",
        &pulses,
        &pos,
        &"--sign",
        &"pos",
        &"--max-size",
        &"1"
    ])
    .status
    .success());
    assert_eq!(
        read_pgm(&pos).unwrap(),
        GridImage::from_rows(&[[0, 0, 0, 0], [0, 4, 0, 0], [0, 0, 0, 0]])
    );
}

#[test]
fn truncated_decomposition_keeps_a_residual_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "p.pgm", &pattern(12, 10));
    let pulses = dir.path().join("p.jsonl");
    let o = lulu(&[&"decompose", &input, &pulses, &"--max-n", &"3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    assert!(dir.path().join("p.residual.pgm").exists());
    let back = dir.path().join("back.pgm");
    assert!(
        lulu(&[&"reconstruct", &pulses, &back, &"--include-residual"])
            .status
            .success()
    );
    assert_eq!(fs::read(&input).unwrap(), fs::read(&back).unwrap());
}

#[test]
fn histogram_command() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "two.pgm", &two_pulse());
    let pulses = dir.path().join("two.jsonl");
    assert!(lulu(&[&"decompose", &input, &pulses]).status.success());
    let o = lulu(&[&"histogram", &pulses]);
    assert_eq!(stdout(&o), "size,count\n1,1\n2,1\n");
}

#[test]
fn noise_sim_is_fast_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let start = Instant::now();
    let o = lulu(&[
        &"noise-sim",
        &"--width",
        &"20",
        &"--height",
        &"20",
        &"--seed",
        &"9",
        &"--report",
        &a,
    ]);
    assert!(start.elapsed() < Duration::from_secs(1));
    assert!(o.status.success());
    assert!(stdout(&o).contains("size <= 20:"));
    assert!(stdout(&o).contains("size > 100:"));
    lulu(&[
        &"noise-sim",
        &"--width",
        &"20",
        &"--height",
        &"20",
        &"--seed",
        &"9",
        &"--report",
        &b,
    ]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn verify_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "p.pgm", &pattern(8, 6));
    let o = lulu(&[&"verify", &input]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));

    let flat = save(
        dir.path(),
        "c.pgm",
        &GridImage::constant(3, 3, 4, 0).unwrap(),
    );
    assert!(lulu(&[&"verify", &flat, &"-c", &"8"]).status.success());

    let o = lulu(&[&"verify", &input, &"--corrupt-ln", &"2"]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert!(text.contains("FAIL"));
    assert!(text
        .lines()
        .filter(|l| l.starts_with("FAIL"))
        .all(|l| l.contains("(n=2)")));
}

#[test]
fn usage_and_parse_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lulu(&[&"frobnicate"]).status.code(), Some(1));
    assert_eq!(lulu(&[&"--help"]).status.code(), Some(0));

    let bad = dir.path().join("bad.pgm");
    fs::write(&bad, b"P5\n2 2\n255\n\x01").unwrap();
    let o = lulu(&[&"verify", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("expected 4 bytes"), "{}", stderr(&o));

    let input = save(dir.path(), "spike.pgm", &spike());
    let o = lulu(&[
        &"filter",
        &input,
        &dir.path().join("o.pgm"),
        &"--op",
        &"xx",
        &"-n",
        &"1",
    ]);
    assert_eq!(o.status.code(), Some(1));
}
