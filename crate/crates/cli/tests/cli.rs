use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use usm::*;
use usm_cli::commands::random_dna;

fn usm(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_usm"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn ok(args: &[&str], stdin: Option<&str>) -> String {
    let out = usm(args, stdin);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str], stdin: Option<&str>) -> String {
    let out = usm(args, stdin);
    assert_eq!(out.status.code(), Some(1), "{args:?} should fail");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("usm: error: "), "{err}");
    assert_eq!(err.lines().count(), 1, "{err}");
    err
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn gattaca_midpoint_csv() {
    let csv = ok(
        &["encode", "--seed-mode", "midpoint", "--seq", "GATTACA"],
        None,
    );
    assert_eq!(
        csv,
        "position,symbol,f1,f2,b1,b2\n\
         1,G,0.75,0.25,0.69140625,0.20703125\n\
         2,A,0.375,0.125,0.3828125,0.4140625\n\
         3,T,0.6875,0.5625,0.765625,0.828125\n\
         4,T,0.84375,0.78125,0.53125,0.65625\n\
         5,A,0.421875,0.390625,0.0625,0.3125\n\
         6,C,0.2109375,0.6953125,0.125,0.625\n\
         7,A,0.10546875,0.34765625,0.25,0.25\n"
    );
}

#[test]
fn files_stdin_and_inline_agree() {
    let dir = tempfile::tempdir().unwrap();
    let fasta = write(dir.path(), "g.fa", ">g some description\nGATT\nACA\n");
    let from_file = ok(&["encode", &fasta], None);
    let from_stdin = ok(&["encode"], Some("GATTACA\n"));
    let from_dash = ok(&["encode", "-"], Some(">g\nGATTACA"));
    let inline = ok(&["encode", "--seq", "GATTACA"], None);
    assert_eq!(from_file, from_stdin);
    assert_eq!(from_file, from_dash);
    assert_eq!(from_file, inline);
}

#[test]
fn csv_values_round_trip_to_the_same_binary64() {
    let abc = Alphabet::from_symbols("ACDEFGHIKLMNPQRSTVWY".chars()).unwrap();
    let seq = "MRPSGTAGAALLALLAALCPASRALEEKKVCQGTSN";
    let map = encode(
        &seq.chars().collect::<Vec<_>>(),
        &abc,
        &EncoderConfig::default(),
    )
    .unwrap();
    let csv = ok(
        &["encode", "--seq", seq, "--alphabet", "ACDEFGHIKLMNPQRSTVWY"],
        None,
    );
    for (i, line) in csv.lines().skip(1).enumerate() {
        let got: Vec<u64> = line
            .split(',')
            .skip(2)
            .map(|v| v.parse::<f64>().unwrap().to_bits())
            .collect();
        let want: Vec<u64> = map
            .forward_at(i)
            .iter()
            .chain(map.backward_at(i))
            .map(|v| v.to_bits())
            .collect();
        assert_eq!(got, want, "row {}", i + 1);
    }
}

#[test]
fn json_carries_seed_metadata() {
    let text = ok(
        &[
            "encode",
            "--format",
            "json",
            "--seed-mode",
            "circular",
            "--seq",
            "GATTACA",
        ],
        None,
    );
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let r = &v[0];
    assert_eq!(r["id"], "seq1");
    assert_eq!(r["seed_mode"], "circular");
    assert_eq!(r["dim"], 2);
    assert_eq!(r["converged"], true);
    assert_eq!(r["positions"].as_array().unwrap().len(), 7);
    assert_eq!(r["positions"][0]["symbol"], "G");
    assert_eq!(r["positions"][6]["forward"].as_array().unwrap().len(), 2);
}

#[test]
fn multi_record_rows_are_labelled() {
    let input = ">a\nAC\n>b\nGT\n";
    let csv = ok(&["encode", "--seed-mode", "midpoint"], Some(input));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "record,position,symbol,f1,f2,b1,b2");
    assert!(lines[1].starts_with("a,1,A,"));
    assert!(lines[4].starts_with("b,2,T,"));
    // union alphabet: C sits on [0,1] even though record b never uses it
    assert_eq!(lines[2], "a,2,C,0.125,0.625,0.25,0.75");

    let one = ok(
        &["encode", "--seed-mode", "midpoint", "--record", "b"],
        Some(input),
    );
    assert!(one.starts_with("position,symbol"));
    assert_eq!(one.lines().count(), 3);
    fails(&["encode", "--record", "zz"], Some(input));
}

#[test]
fn decode_reads_both_directions() {
    let fwd = ok(
        &[
            "decode",
            "--coords",
            "0.10546875,0.34765625",
            "--depth",
            "7",
            "--alphabet",
            "ACGT",
        ],
        None,
    );
    assert_eq!(fwd, "GATTACA\n");
    let bwd = ok(
        &[
            "decode",
            "--coords",
            "0.69140625,0.20703125",
            "--depth",
            "7",
            "--alphabet",
            "ACGT",
            "--direction",
            "backward",
        ],
        None,
    );
    assert_eq!(bwd, "GATTACA\n");
    fails(
        &[
            "decode",
            "--coords",
            "0.5",
            "--depth",
            "3",
            "--alphabet",
            "ACGT",
        ],
        None,
    );
    fails(
        &[
            "decode",
            "--coords",
            "0.5,0.5",
            "--depth",
            "53",
            "--alphabet",
            "ACGT",
        ],
        None,
    );
    fails(
        &[
            "decode",
            "--coords",
            "1.5,0.5",
            "--depth",
            "3",
            "--alphabet",
            "ACGT",
        ],
        None,
    );
}

#[test]
fn fcgr_grids_and_point_density() {
    let csv = ok(
        &[
            "fcgr",
            "--k",
            "1",
            "--seed-mode",
            "midpoint",
            "--seq",
            "GATTACA",
        ],
        None,
    );
    assert_eq!(csv, "cell_index,count\n0,3\n1,1\n2,1\n3,2\n");

    let pgm = usm(
        &["fcgr", "--k", "2", "--format", "pgm", "--seq", "GATTACA"],
        None,
    )
    .stdout;
    assert!(pgm.starts_with(b"P5\n4 4\n255\n"));
    assert_eq!(pgm.len(), b"P5\n4 4\n255\n".len() + 16);

    let d = ok(
        &[
            "fcgr", "--k-real", "1", "--query", "0.5,0.5", "--seq", "GATTACA",
        ],
        None,
    );
    assert_eq!(d, "record,count\nseq1,7\n");

    fails(&["fcgr", "--k", "40", "--seq", "ACGT"], None);
    fails(
        &["fcgr", "--k", "2", "--format", "pgm"],
        Some(">a\nAC\n>b\nGT\n"),
    );
}

#[test]
fn quarter_million_symbols_at_k8() {
    let dir = tempfile::tempdir().unwrap();
    let seq: String = random_dna(244_589, 23).into_iter().collect();
    let fasta = write(dir.path(), "big.fa", &format!(">big\n{seq}\n"));
    let out = dir.path().join("grid.csv");
    ok(
        &[
            "fcgr",
            "--k",
            "8",
            "--direction",
            "forward",
            &fasta,
            "-o",
            out.to_str().unwrap(),
        ],
        None,
    );
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 65_537);
    let total: u64 = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 244_589);

    let bench = ok(&["bench", &fasta, "--k", "8"], None);
    assert!(bench.contains("\nencode_ms "), "{bench}");
    assert!(bench.contains("\nbin_ms "), "{bench}");
    assert!(bench.contains("\ncells 65536\n"), "{bench}");
}

#[test]
fn crosstab_layout() {
    let csv = ok(
        &[
            "crosstab",
            "--seed-mode",
            "circular",
            "--seq",
            "AATGATTACAGGG",
            "--seq",
            "TGAGATTACACGTCA",
        ],
        None,
    );
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 15);
    assert_eq!(lines[0], "symbol,T,G,A,G,A,T,T,A,C,A,C,G,T,C,A,sum,max");
    assert_eq!(lines[1], "A,0,0,2,0,2,0,0,1,0,1,0,0,0,0,1,7,2");
    assert!(lines[14].starts_with("total,"));
    assert!(lines[14].ends_with(",120,7"));
    fails(&["crosstab", "--seq", "ACGT"], None);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let input = ">a\nGATTACAGATTACCA\n>b\nTTGACAGGATAC\n";
    for args in [
        &["encode"][..],
        &["encode", "--format", "json"],
        &["fcgr", "--k", "3", "--record", "a"],
        &["fcgr", "--k", "3", "--record", "b", "--format", "pgm"],
        &["crosstab"],
    ] {
        let a = usm(args, Some(input));
        let b = usm(args, Some(input));
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn normalization_flags() {
    fails(&["encode", "--seq", "gattaca", "--alphabet", "ACGT"], None);
    let up = ok(&["encode", "--seq", "gattaca", "--uppercase"], None);
    assert_eq!(up, ok(&["encode", "--seq", "GATTACA"], None));

    let out = usm(
        &[
            "encode",
            "--seq",
            "GANTTNACA",
            "--alphabet",
            "ACGT",
            "--skip-unknown",
        ],
        None,
    );
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        ok(&["encode", "--seq", "GATTACA", "--alphabet", "ACGT"], None)
    );
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("dropped 2 symbols"));
}

#[test]
fn errors_exit_nonzero_and_leave_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let err = fails(
        &[
            "encode",
            "--seq",
            "GAXTACA",
            "--alphabet",
            "ACGT",
            "-o",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert!(err.contains("'X'"), "{err}");
    assert!(!out.exists());

    fails(&["encode"], Some(""));
    fails(&["encode"], Some(">empty\n>x\nAC\n"));
    fails(&["encode", "/nonexistent/input.fa"], None);
    fails(&["encode", "--seq", "ACGT", "--max-passes", "0"], None);
    fails(
        &[
            "encode",
            "--seq",
            "ACGT",
            "-o",
            dir.path().join("missing/x.csv").to_str().unwrap(),
        ],
        None,
    );
}
