use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use assn_cli::{parse_config, run};

fn assn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_assn"))
        .args(args)
        .env("ASSN_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn kv(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn data_rows(path: &Path) -> usize {
    let text = fs::read_to_string(path).unwrap();
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("# config-hash: "), "{}: {first}", path.display());
    text.lines().filter(|l| !l.starts_with('#')).count() - 1
}

#[test]
fn small_run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = assn(&[
        "run",
        "--problem",
        "linesource",
        "--solver",
        "explicit",
        "--quad-order",
        "2",
        "--nx",
        "20",
        "--ny",
        "20",
        "--t-end",
        "0.2",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_rows(&out.join("phi.csv")), 400);
    assert_eq!(data_rows(&out.join("lineouts.csv")), 60);
    assert_eq!(data_rows(&out.join("rings.csv")), 4 * 360);
    assert_eq!(data_rows(&out.join("rings_summary.csv")), 4);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("steps = ") && summary.contains("min_phi = "));
}

#[test]
fn determinism_and_sigma_as_switch() {
    let dir = tempfile::tempdir().unwrap();
    let base = "problem = linesource\nsolver = explicit\nquad_order = 2\nnx = 16\nny = 16\nt_end = 0.3\n";
    let cfg_path = dir.path().join("run.cfg");
    fs::write(&cfg_path, base).unwrap();
    let go = |name: &str, sigma_as: &str| {
        let out = dir.path().join(name);
        let o = assn(&[
            "run",
            "--config",
            cfg_path.to_str().unwrap(),
            "--sigma-as",
            sigma_as,
            "--output-dir",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out.join("phi.csv")).unwrap()
    };
    let a = go("a", "0");
    let b = go("b", "0");
    let c = go("c", "5");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn lattice_implicit_cfl2_reports_negative_flux() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        None,
        &kv(&[
            ("problem", "lattice"),
            ("solver", "implicit"),
            ("sigma_as", "0"),
            ("nx", "28"),
            ("ny", "28"),
            ("output_dir", dir.path().to_str().unwrap()),
        ]),
    )
    .unwrap();
    assert_eq!((cfg.cfl, cfg.t_end, cfg.quad_order), (2.0, 3.2, 4));
    let s = run(&cfg).unwrap();
    assert!(s.min_phi < 0.0, "min phi {}", s.min_phi);
    assert!(s.gmres_iterations_max > 0);
    let text = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    let min: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("min_phi = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(min < 0.0);
}

#[test]
fn reference_gives_deltas_and_mismatch_fails() {
    let dir = tempfile::tempdir().unwrap();
    let reference = dir.path().join("ref.csv");
    let o = assn(&[
        "mc-reference",
        "--nx",
        "16",
        "--ny",
        "16",
        "--particles",
        "20000",
        "--out",
        reference.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_rows(&reference), 256);

    let common = ["--problem", "linesource", "--solver", "explicit", "--quad-order", "2", "--reference"];
    let mut args = vec!["run"];
    args.extend(common);
    let out = dir.path().join("ok");
    args.extend([reference.to_str().unwrap(), "--nx", "16", "--ny", "16", "--output-dir", out.to_str().unwrap()]);
    let o = assn(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("delta1 = ") && summary.contains("delta2 = "));

    let mut args = vec!["run"];
    args.extend(common);
    let bad = dir.path().join("bad");
    args.extend([reference.to_str().unwrap(), "--nx", "20", "--ny", "20", "--output-dir", bad.to_str().unwrap()]);
    let o = assn(&args);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid"));
}

#[test]
fn invalid_configs_exit_nonzero_with_the_key_named() {
    let o = assn(&["run", "--problem", "linesource", "--solver", "explicit", "--cfl", "-1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cfl"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "problem = linesource\nsolver = explicit\nwidth = 3\n").unwrap();
    let o = assn(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("width"));
}

#[test]
fn sweep_writes_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = assn(&[
        "sweep",
        "--problem",
        "linesource",
        "--solver",
        "explicit",
        "--nx",
        "16",
        "--ny",
        "16",
        "--t-end",
        "0.3",
        "--particles",
        "20000",
        "--sigma-as-values",
        "0,2",
        "--beta-values",
        "1,4",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let path = out.join("heatmap.csv");
    assert_eq!(data_rows(&path), 4);
    let text = fs::read_to_string(path).unwrap();
    assert!(text.contains("\nsigma_as,beta,delta1,ratio\n"));
    assert!(text.contains("\n0,1,") && text.contains(",1e0\n"));
}

#[test]
fn quadrature_and_stability_exports() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.txt");
    let o = assn(&["quadrature", "--order", "3", "--out", q.to_str().unwrap()]);
    assert!(o.status.success());
    let loaded = assn_core::quadrature::load_quadrature(&q).unwrap();
    assert_eq!(loaded.len(), 42);
    assert!(fs::read_to_string(&q).unwrap().starts_with("# config-hash: "));

    let s = dir.path().join("spectrum.csv");
    let o = assn(&["stability-check", "--n", "50", "--out", s.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(data_rows(&s), 50);

    let o = assn(&["quadrature", "--order", "1", "--out", q.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_assn"))
        .args(["stability-check", "--n", "10", "--out", "/dev/null"])
        .env("ASSN_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("ASSN_THREADS"));
}
