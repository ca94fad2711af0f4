use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proxdist::generate;
use proxdist::linalg::read_dense;
use proxdist::solvers::{CopositivityInstance, InstanceFile, LpInstance, ProblemInstance};
use tempfile::TempDir;

fn proxdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxdist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field(summary: &str, key: &str) -> String {
    summary
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {summary:?}"))
        .to_string()
}

fn write_instance(dir: &TempDir, name: &str, problem: ProblemInstance) -> String {
    let path = dir.path().join(name);
    fs::write(&path, InstanceFile::new(problem, None).to_json().unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn load(path: &Path) -> InstanceFile {
    InstanceFile::from_json(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_nqp_is_positive_definite() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("nqp.json");
    let out = proxdist(&[
        "generate",
        "nqp",
        "--n",
        "8",
        "--seed",
        "7",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let file = load(&path);
    assert_eq!(file.seed, Some(7));
    let ProblemInstance::Nqp(inst) = file.problem else {
        panic!("wrong kind")
    };
    assert!(SymmetricEigen::new(inst.a.to_dense()).eigenvalues.min() > 0.0);
}

#[test]
fn generate_is_bit_identical() {
    let first = proxdist(&["generate", "lp", "--m", "4", "--n", "8", "--seed", "1"]);
    let second = proxdist(&["generate", "lp", "--m", "4", "--n", "8", "--seed", "1"]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let other = proxdist(&["generate", "lp", "--m", "4", "--n", "8", "--seed", "2"]);
    assert_ne!(first.stdout, other.stdout);
}

#[test]
fn generate_lcp_carries_certificate() {
    let out = proxdist(&["generate", "lcp", "--n", "8", "--seed", "3"]);
    let file = InstanceFile::from_json(&stdout(&out)).unwrap();
    let ProblemInstance::Lcp(inst) = file.problem else {
        panic!("wrong kind")
    };
    let cert = inst.certificate.as_ref().expect("certificate");
    assert!(inst.objective(&cert.x, &cert.y) <= 1e-20);
    assert_eq!(cert.x.dot(&cert.y), 0.0);
}

#[test]
fn generate_usage_errors() {
    assert_eq!(
        proxdist(&["generate", "lp", "--n", "8"]).status.code(),
        Some(1)
    );
    assert_eq!(
        proxdist(&["generate", "widget", "--n", "8"]).status.code(),
        Some(1)
    );
    assert_eq!(
        proxdist(&["generate", "lp", "--m", "9", "--n", "8"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn solve_trivial_lp() {
    let dir = TempDir::new().unwrap();
    let inst = LpInstance::new(
        DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        DVector::from_column_slice(&[1.0]),
        DVector::from_column_slice(&[1.0, 1.0]),
    )
    .unwrap();
    let path = write_instance(&dir, "lp.json", ProblemInstance::Lp(inst));
    let out = proxdist(&["solve", &path]);
    assert_eq!(out.status.code(), Some(0));
    let summary = stdout(&out);
    for key in ["kind", "dims", "loss", "dist", "iters", "seconds"] {
        field(&summary, key);
    }
    assert_eq!(field(&summary, "kind"), "lp");
    assert_eq!(field(&summary, "dims"), "1x2");
    let loss: f64 = field(&summary, "loss").parse().unwrap();
    assert!((loss - 1.0).abs() <= 1e-4);
}

#[test]
fn solve_horn_matrix() {
    let dir = TempDir::new().unwrap();
    let path = write_instance(
        &dir,
        "horn.json",
        ProblemInstance::Copositivity(CopositivityInstance::horn()),
    );
    let out = proxdist(&["solve", &path]);
    let loss: f64 = field(&stdout(&out), "loss").parse().unwrap();
    assert!(loss.abs() <= 1e-5);
}

#[test]
fn acceleration_saves_iterations() {
    let dir = TempDir::new().unwrap();
    for seed in 0..10 {
        let problem =
            ProblemInstance::Nqp(generate::nqp(4 + seed % 9, false, seed as u64).unwrap());
        let path = write_instance(&dir, &format!("nqp{seed}.json"), problem);
        let iters = |extra: &[&str]| -> usize {
            let mut args = vec!["solve", path.as_str()];
            args.extend_from_slice(extra);
            field(&stdout(&proxdist(&args)), "iters").parse().unwrap()
        };
        let fast = iters(&[]);
        let slow = iters(&["--no-accel"]);
        assert!(fast <= slow, "seed {seed}: {fast} vs {slow}");
        assert_eq!(iters(&["--no-accel", "--accel"]), fast);
    }
}

#[test]
fn solve_writes_result_and_trace() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("k.json");
    let result = dir.path().join("result.json");
    let trace = dir.path().join("trace.jsonl");
    proxdist(&[
        "generate",
        "kinship",
        "--n",
        "5",
        "-o",
        inst.to_str().unwrap(),
    ]);
    let out = proxdist(&[
        "solve",
        inst.to_str().unwrap(),
        "--variant",
        "pd1",
        "--result",
        result.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&result).unwrap()).unwrap();
    assert_eq!(record["kind"], "kinship");
    assert_eq!(record["status"], "converged");
    assert_eq!(record["solution"].as_array().unwrap().len(), 5);
    let lines = fs::read_to_string(&trace).unwrap();
    let iters = record["iterations"].as_u64().unwrap() as usize;
    assert_eq!(lines.lines().count(), iters);
    let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(first["iter"], 1);
}

#[test]
fn solve_exit_codes() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("nqp.json");
    proxdist(&["generate", "nqp", "--n", "6", "-o", inst.to_str().unwrap()]);
    let limited = proxdist(&["solve", inst.to_str().unwrap(), "--max-iters", "3"]);
    assert_eq!(limited.status.code(), Some(2));
    assert_eq!(field(&stdout(&limited), "status"), "iteration-limit");

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"kind\": \"nqp\",\n  \"dims\": [2,\n").unwrap();
    let out = proxdist(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    let missing = proxdist(&["solve", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    let bad_d = proxdist(&["solve", inst.to_str().unwrap(), "--d", "2"]);
    assert_eq!(bad_d.status.code(), Some(1));
}

#[test]
fn bench_lp_matches_oracle() {
    let out = proxdist(&["bench", "lp", "--dims", "2,4,8"]);
    assert!(out.status.success());
    let (header, rows) = read_csv(&stdout(&out));
    assert_eq!(
        header,
        [
            "kind",
            "m",
            "n",
            "seed",
            "rep",
            "optimum",
            "oracle_optimum",
            "seconds",
            "iters",
            "status",
            "error"
        ]
    );
    assert_eq!(rows.len(), 3);
    let (opt, orc, m, n) = (
        column(&header, "optimum"),
        column(&header, "oracle_optimum"),
        column(&header, "m"),
        column(&header, "n"),
    );
    for (row, dim) in rows.iter().zip([2, 4, 8]) {
        assert_eq!(row[m], dim.to_string());
        assert_eq!(row[n], (2 * dim).to_string());
        let (a, b): (f64, f64) = (row[opt].parse().unwrap(), row[orc].parse().unwrap());
        assert!((a - b).abs() <= 1e-3 * (1.0 + b.abs()), "{a} vs {b}");
    }
}

#[test]
fn bench_kinship_matches_dykstra() {
    let out = proxdist(&["bench", "kinship", "--dims", "2,4,8,16"]);
    let (header, rows) = read_csv(&stdout(&out));
    assert_eq!(rows.len(), 4);
    let (opt, orc) = (
        column(&header, "optimum"),
        column(&header, "oracle_optimum"),
    );
    for row in &rows {
        let (a, b): (f64, f64) = (row[opt].parse().unwrap(), row[orc].parse().unwrap());
        assert!((a - b).abs() <= 1e-3 * (1.0 + b.abs()), "{a} vs {b}");
    }
}

#[test]
fn bench_is_ordered_and_reproducible() {
    let args = [
        "bench", "nqp", "--dims", "3,9,5", "--seeds", "4,1", "--reps", "2", "--jobs", "4",
    ];
    let (header, first) = read_csv(&stdout(&proxdist(&args)));
    let (_, second) = read_csv(&stdout(&proxdist(&args)));
    let (n, seed, rep, opt) = (
        column(&header, "n"),
        column(&header, "seed"),
        column(&header, "rep"),
        column(&header, "optimum"),
    );
    let keys: Vec<_> = first
        .iter()
        .map(|r| (r[n].clone(), r[seed].clone(), r[rep].clone()))
        .collect();
    let mut expected = Vec::new();
    for d in ["3", "9", "5"] {
        for s in ["4", "1"] {
            for k in ["0", "1"] {
                expected.push((d.to_string(), s.to_string(), k.to_string()));
            }
        }
    }
    assert_eq!(keys, expected);
    let optima = |rows: &[Vec<String>]| rows.iter().map(|r| r[opt].clone()).collect::<Vec<_>>();
    assert_eq!(optima(&first), optima(&second));
}

#[test]
fn bench_usage_errors() {
    assert_eq!(proxdist(&["bench", "lp", "--dims"]).status.code(), Some(1));
    assert_eq!(proxdist(&["bench", "lp"]).status.code(), Some(1));
    assert_eq!(
        proxdist(&["bench", "nqp", "--dims", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        proxdist(&["bench", "nqp", "--dims", "4", "--reps", "0"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn bench_records_row_failures() {
    // A zero multiplier is rejected at solve time, so every row fails.
    let out = proxdist(&["bench", "nqp", "--dims", "3", "--rho-mult", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let (header, rows) = read_csv(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][column(&header, "status")], "error");
    assert!(!rows[0][column(&header, "error")].is_empty());
}

#[test]
fn spca_full_support_matches_pca() {
    let dir = TempDir::new().unwrap();
    let table = dir.path().join("pve.csv");
    let out = proxdist(&[
        "spca",
        "--synthetic",
        "12",
        "40",
        "--seed",
        "5",
        "--q",
        "1,3",
        "--r",
        "12",
        "--eps1",
        "1e-10",
        "--csv",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let (header, rows) = read_csv(&fs::read_to_string(&table).unwrap());
    assert_eq!(&header[..3], ["q", "pve", "seconds"]);

    let x = generate::spca_data(12, 40, 5);
    let gram = x.tr_mul(&x);
    let mut eig: Vec<f64> = SymmetricEigen::new(gram.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    for row in &rows {
        let q: usize = row[0].parse().unwrap();
        let pve: f64 = row[1].parse().unwrap();
        let pca = eig[..q].iter().sum::<f64>() / gram.trace();
        assert!((pve - pca).abs() <= 1e-4 * pca, "q = {q}: {pve} vs {pca}");
    }
}

#[test]
fn spca_matrix_mode_no_worse_than_column_mode() {
    let run = |mode: &str, r: &str| -> Vec<f64> {
        let out = proxdist(&[
            "spca",
            "--synthetic",
            "20",
            "60",
            "--seed",
            "2",
            "--q",
            "2,3",
            "--r",
            r,
            "--mode",
            mode,
        ]);
        assert!(out.status.success());
        let (_, rows) = read_csv(&stdout(&out));
        rows.iter().map(|row| row[1].parse().unwrap()).collect()
    };
    let column = run("column", "3");
    // r = q·3 in matrix mode for q = 2 and 3 respectively.
    let matrix_q2 = run("matrix", "6")[0];
    let matrix_q3 = run("matrix", "9")[1];
    assert!(
        matrix_q2 >= column[0] - 1e-8,
        "{matrix_q2} vs {}",
        column[0]
    );
    assert!(
        matrix_q3 >= column[1] - 1e-8,
        "{matrix_q3} vs {}",
        column[1]
    );
}

#[test]
fn spca_writes_loadings() {
    let dir = TempDir::new().unwrap();
    let base = dir.path().join("u.txt");
    let out = proxdist(&[
        "spca",
        "--synthetic",
        "10",
        "30",
        "--q",
        "1,2",
        "--r",
        "3",
        "--loadings",
        base.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for q in [1usize, 2] {
        let path = dir.path().join(format!("u.q{q}.txt"));
        let u = read_dense(std::io::BufReader::new(fs::File::open(&path).unwrap())).unwrap();
        assert_eq!(u.shape(), (10, q));
        for j in 0..q {
            assert!(u.column(j).iter().filter(|v| **v != 0.0).count() <= 3);
        }
    }
}

#[test]
fn spca_data_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("x.txt");
    let x = generate::spca_data(6, 20, 1);
    let mut f = fs::File::create(&path).unwrap();
    proxdist::linalg::write_dense(&mut f, &x).unwrap();
    let out = proxdist(&[
        "spca",
        "--data",
        path.to_str().unwrap(),
        "--q",
        "2",
        "--r",
        "3",
    ]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&stdout(&out));
    let pve: f64 = rows[0][1].parse().unwrap();
    assert!(pve > 0.0 && pve <= 1.0);
}

#[test]
fn spca_usage_errors() {
    let base = ["spca", "--synthetic", "8", "20", "--r", "2"];
    let with = |extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        proxdist(&args).status.code()
    };
    assert_eq!(with(&["--q", "0"]), Some(1));
    // r above p in column mode.
    assert_eq!(
        proxdist(&["spca", "--synthetic", "8", "20", "--q", "2", "--r", "9"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        proxdist(&["spca", "--q", "2", "--r", "2"]).status.code(),
        Some(1)
    );
    assert_eq!(with(&["--q", "2", "--start", "sideways"]), Some(1));
}
