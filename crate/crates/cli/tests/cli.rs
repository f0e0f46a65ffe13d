use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bifactor::bench::synth::low_rank_image;
use bifactor::dense::io::read_matrix;
use bifactor::pnm::{write_pnm, PortableImage};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/rank5_50x50.txt")
}

fn bifactor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bifactor"))
        .args(args)
        .env_remove("BIFACTOR_JOBS")
        .output()
        .expect("failed to launch bifactor")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rankest_on_clean_rank_five_fixture() {
    let out = bifactor(&["rankest", "--input", path_str(&fixture())]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "5");
}

#[test]
fn rpca_sl_half_recovers_noiseless_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (l_out, s_out, trace) = (
        dir.path().join("L.txt"),
        dir.path().join("S.txt"),
        dir.path().join("trace.csv"),
    );
    let out = bifactor(&[
        "rpca",
        "--method",
        "sl-half",
        "--input",
        path_str(&fixture()),
        "--out-l",
        path_str(&l_out),
        "--out-s",
        path_str(&s_out),
        "--trace",
        path_str(&trace),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (truth, _) = read_matrix(fixture()).unwrap();
    let (l, _) = read_matrix(&l_out).unwrap();
    let rse = l.sub(&truth).frobenius_norm() / truth.frobenius_norm();
    assert!(rse < 1e-4, "rse {rse}");

    let text = std::fs::read_to_string(&trace).unwrap();
    let header = text.lines().next().unwrap();
    for field in [
        "d",
        "lambda",
        "mu0",
        "rho",
        "mu_max",
        "epsilon",
        "max_iters",
    ] {
        assert!(
            header.split(',').any(|h| h == field),
            "missing {field} in {header}"
        );
    }
    // estimated rank and resolved lambda = sqrt(50) on every row
    let row = text.lines().nth(1).unwrap();
    assert!(row.contains(",5,7.0710678118654755,"), "{row}");
}

#[test]
fn complete_with_mask_file() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("mask.txt");
    let mut text = String::from("50 50\n");
    for i in 0..50 {
        let row: Vec<&str> = (0..50)
            .map(|j| if (i * 7 + j * 3) % 5 < 3 { "1" } else { "0" })
            .collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    std::fs::write(&mask, text).unwrap();
    let (l_out, s_out) = (dir.path().join("L.txt"), dir.path().join("S.txt"));
    let out = bifactor(&[
        "complete",
        "--method",
        "fn",
        "--input",
        path_str(&fixture()),
        "--mask",
        path_str(&mask),
        "--rank",
        "5",
        "--max-iters",
        "50",
        "--out-l",
        path_str(&l_out),
        "--out-s",
        path_str(&s_out),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("d=5"));
    let (l, _) = read_matrix(&l_out).unwrap();
    assert_eq!(l.shape(), (50, 50));
}

#[test]
fn inpaint_beats_zero_fill_by_ten_db() {
    let dir = tempfile::tempdir().unwrap();
    let img = low_rank_image(256, 256, 9, 11).unwrap();
    let input = dir.path().join("in.pgm");
    write_pnm(&input, &PortableImage::from_channels(&[img]).unwrap()).unwrap();
    let (output, report) = (dir.path().join("out.pgm"), dir.path().join("report.csv"));
    let out = bifactor(&[
        "inpaint",
        "--method",
        "fn",
        "--image",
        path_str(&input),
        "--missing-ratio",
        "0.8",
        "--seed",
        "3",
        "--out",
        path_str(&output),
        "--report",
        path_str(&report),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&report).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let rec = rdr.records().next().unwrap().unwrap();
    let get = |name: &str| -> f64 {
        let k = header.iter().position(|h| h == name).unwrap();
        rec[k].parse().unwrap()
    };
    let gain = get("psnr") - get("psnr_zero_fill");
    assert!(gain >= 10.0, "gain {gain} dB");
    assert_eq!(get("d"), 9.0);
}

#[test]
fn phase_output_is_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |jobs: &str, name: &str| {
        let path = dir.path().join(name);
        let out = bifactor(&[
            "phase",
            "--method",
            "sl-two-thirds",
            "--size",
            "30",
            "--ranks",
            "1:3:2",
            "--corruptions",
            "0:0.1:0.05",
            "--trials",
            "2",
            "--seed",
            "9",
            "--out",
            path_str(&path),
            "--max-iters",
            "60",
            "--jobs",
            jobs,
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        std::fs::read(path).unwrap()
    };
    let a = run("1", "a.csv");
    let b = run("2", "b.csv");
    assert_eq!(a, b);
    // 2 ranks x 3 corruptions plus the header
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 7);
}

#[test]
fn jobs_fall_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_bifactor"))
        .args([
            "table3",
            "--sizes",
            "30",
            "--trials",
            "1",
            "--seed",
            "2",
            "--max-iters",
            "20",
            "--out",
            path_str(&path),
        ])
        .env("BIFACTOR_JOBS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--jobs"), "{}", stderr(&out));
}

#[test]
fn table3_csv_excludes_timing_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let out = bifactor(&[
        "table3",
        "--sizes",
        "30",
        "--trials",
        "1",
        "--seed",
        "2",
        "--max-iters",
        "20",
        "--out",
        path_str(&path),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(!text.lines().next().unwrap().contains("seconds"));
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("ChaCha20,sl-half,30,"));
}

#[test]
fn errors_exit_two_with_one_line() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["rankest", "--input", "/definitely/not/here.txt"],
        vec!["rankest", "--bogus"],
        vec![
            "phase",
            "--method",
            "nuclear",
            "--size",
            "20",
            "--ranks",
            "5:1:1",
            "--corruptions",
            "0:0.1:0.1",
            "--trials",
            "1",
            "--seed",
            "0",
            "--out",
            "/tmp/unused.csv",
        ],
    ];
    for args in cases {
        let out = bifactor(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = stderr(&out);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
}

#[test]
fn inconsistent_mask_shape_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("mask.txt");
    std::fs::write(&mask, "2 2\n1 0\n0 1\n").unwrap();
    let out = bifactor(&[
        "rankest",
        "--input",
        path_str(&fixture()),
        "--mask",
        path_str(&mask),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("mask is 2x2"), "{}", stderr(&out));
}
