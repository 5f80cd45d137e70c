use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use gl4::cli::{check_decreasing, parse_config, read_config, Command, FermiCommand, Format, ParseOutcome};

fn argv(s: &str) -> Vec<String> {
    std::iter::once("gl4").chain(s.split_whitespace()).map(String::from).collect()
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("gl4-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn bin(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Proc::new(env!("CARGO_BIN_EXE_gl4")).current_dir(dir).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn vortex_flags_land_in_the_config() {
    let cli = parse_config(&argv("vortex --lambda 1 --rmax 20 --nodes 4000 --out p.csv")).unwrap();
    let Command::Vortex(a) = cli.command else { panic!("wrong subcommand") };
    assert_eq!(a.lambda, 1.0);
    assert_eq!(a.rmax, 20.0);
    assert_eq!(a.nodes, 4000);
    assert_eq!(a.out, PathBuf::from("p.csv"));
}

#[test]
fn flags_beat_the_file() {
    let d = scratch("prec");
    let cfg = d.join("run.cfg");
    std::fs::write(&cfg, "lambda = 2\n# comment\nrmax = 15\n").unwrap();
    let c = cfg.to_str().unwrap();
    let cli = parse_config(&argv(&format!("vortex --config {c} --lambda 1"))).unwrap();
    let Command::Vortex(a) = cli.command else { panic!() };
    assert_eq!(a.lambda, 1.0);
    assert_eq!(a.rmax, 15.0);
    // config before the subcommand works too
    let cli = parse_config(&argv(&format!("--config {c} vortex"))).unwrap();
    let Command::Vortex(a) = cli.command else { panic!() };
    assert_eq!(a.lambda, 2.0);
}

#[test]
fn unknown_and_malformed_keys_are_named() {
    let d = scratch("keys");
    let cfg = d.join("bad.cfg");
    std::fs::write(&cfg, "lambda = 2\nbogus = 3\n").unwrap();
    match parse_config(&argv(&format!("vortex --config {}", cfg.display()))) {
        Err(ParseOutcome::Error(e)) => {
            assert!(e.to_string().contains("bogus"));
            assert_eq!(e.exit_code(), 1);
        }
        other => panic!("expected an error, got {other:?}"),
    }
    std::fs::write(&cfg, "lambda = two\n").unwrap();
    match parse_config(&argv(&format!("vortex --config {}", cfg.display()))) {
        Err(ParseOutcome::Error(e)) => assert!(e.to_string().contains("lambda"), "{e}"),
        other => panic!("expected an error, got {other:?}"),
    }
    assert!(read_config("no equals sign").is_err());
    assert_eq!(read_config("flow_iters = 3").unwrap(), vec![("flow-iters".to_string(), "3".to_string())]);
}

#[test]
fn bool_keys_in_files() {
    let d = scratch("bool");
    let cfg = d.join("r.cfg");
    std::fs::write(&cfg, "skip_norm = true\n").unwrap();
    let cli = parse_config(&argv(&format!("reduce --config {}", cfg.display()))).unwrap();
    let Command::Reduce(a) = cli.command else { panic!() };
    assert!(a.skip_norm);
    std::fs::write(&cfg, "skip_norm = maybe\n").unwrap();
    assert!(parse_config(&argv(&format!("reduce --config {}", cfg.display()))).is_err());
}

#[test]
fn nested_subcommands_and_formats() {
    let cli = parse_config(&argv("fermi probe --point 1,0,1,-0.5 --eps 0.5")).unwrap();
    let Command::Fermi(FermiCommand::Probe(p)) = cli.command else { panic!() };
    assert_eq!(p.point.0, vec![1.0, 0.0, 1.0, -0.5]);
    let cli = parse_config(&argv("saddle --L 12 --format svg")).unwrap();
    let Command::Saddle(s) = cli.command else { panic!() };
    assert_eq!(s.length, 12.0);
    assert!(matches!(s.format, Format::Svg));
    assert!(matches!(parse_config(&argv("--help")), Err(ParseOutcome::Info(_))));
}

#[test]
fn epsilon_lists_must_decrease() {
    assert!(check_decreasing("eps", &[0.2, 0.1, 0.05]).is_ok());
    assert!(check_decreasing("eps", &[0.05, 0.1]).is_err());
    assert!(check_decreasing("eps", &[0.1, 0.1]).is_err());
    assert!(check_decreasing("eps", &[0.1, -0.1]).is_err());
    let d = scratch("eps");
    let (code, _, err) = bin(&d, &["reduce", "--eps", "0.05,0.1"]);
    assert_eq!(code, 1);
    assert!(err.contains("decreasing"), "{err}");
    assert!(!d.join("report.json").exists());
}

#[test]
fn vortex_csv_header_and_digits() {
    let d = scratch("vortex");
    let (code, out, _) = bin(&d, &["vortex", "--lambda", "1", "--rmax", "20", "--nodes", "400", "--out", "p.csv"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 1);
    let text = std::fs::read_to_string(d.join("p.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,U,V,dU,dV"));
    let row: Vec<&str> = lines.nth(10).unwrap().split(',').collect();
    assert_eq!(row.len(), 5);
    // 17 significant digits
    let mant = row[1].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mant.len(), 17);
    // no temp files left behind
    let names: Vec<String> = std::fs::read_dir(&d).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert_eq!(names, vec!["p.csv".to_string()]);
}

#[test]
fn bad_input_exits_one() {
    let d = scratch("bad");
    assert_eq!(bin(&d, &["vortex", "--lambda", "-1"]).0, 1);
    assert_eq!(bin(&d, &["vortex", "--lambda", "abc"]).0, 1);
    assert_eq!(bin(&d, &["nonsense"]).0, 1);
    assert_eq!(bin(&d, &["omega", "--loop", "circle:s=0.785,r=100"]).0, 1);
    assert_eq!(bin(&d, &["omega", "--loop", "circle:s=0.785,r=0"]).0, 1);
    assert_eq!(bin(&d, &["vortex", "--out", "/nonexistent-dir/p.csv"]).0, 1);
    let (code, out, _) = bin(&d, &["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("reduce"));
}

#[test]
fn jacobi_artifacts() {
    let d = scratch("jacobi");
    let (code, _, _) = bin(&d, &["jacobi", "verify", "--nodes", "41,81,161", "--out", "jv"]);
    assert_eq!(code, 0);
    let mut n = 0;
    for e in std::fs::read_dir(d.join("jv")).unwrap() {
        let text = std::fs::read_to_string(e.unwrap().path()).unwrap();
        assert!(text.starts_with("h,residual_sup\n"));
        assert_eq!(text.lines().count(), 4);
        n += 1;
    }
    assert!(n >= 4);
    assert_eq!(bin(&d, &["jacobi", "modes", "--out", "m.csv"]).0, 0);
    let modes = std::fs::read_to_string(d.join("m.csv")).unwrap();
    assert!(modes.starts_with("k,branch,"));
}

#[test]
fn saddle_svg_comes_with_csv() {
    let d = scratch("saddle");
    let (code, _, err) = bin(&d, &["saddle", "--lambda", "2", "--n", "100", "--format", "svg", "--out", "f.svg", "--summary", "s.json"]);
    assert_eq!(code, 0, "{err}");
    let svg = std::fs::read_to_string(d.join("f.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(!svg.contains("href"));
    let csv = std::fs::read_to_string(d.join("f.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101 * 101 + 1);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("s.json")).unwrap()).unwrap();
    assert!(summary["residuals"]["f"].as_f64().unwrap() < 1e-6);
}

#[test]
fn reports_are_reproducible() {
    let d = scratch("repro");
    let args = |o: &'static str| vec!["reduce", "--skip-norm", "--eps", "0.2,0.1,0.05", "--rmax", "20", "--nodes", "1001", "--out", o];
    assert_eq!(bin(&d, &args("a.json")).0, 0);
    assert_eq!(bin(&d, &args("b.json")).0, 0);
    let a = std::fs::read(d.join("a.json")).unwrap();
    let b = std::fs::read(d.join("b.json")).unwrap();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    for k in ["epsilon", "F_norm", "projections", "mismatch", "slopes"] {
        assert!(v.get(k).is_some(), "missing {k}");
    }
    let (c1, _, _) = bin(&d, &["fermi", "check", "--samples", "100", "--seed", "7", "--out", "f1.json"]);
    let (c2, _, _) = bin(&d, &["fermi", "check", "--samples", "100", "--seed", "7", "--out", "f2.json"]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(std::fs::read(d.join("f1.json")).unwrap(), std::fs::read(d.join("f2.json")).unwrap());
}

#[test]
fn omega_and_probe_print_summaries() {
    let d = scratch("omega");
    let (code, out, err) = bin(
        &d,
        &["omega", "--loop", "circle:s=0.7853981633974483,r=0.1", "--n-u", "400", "--n-theta", "256", "--n-loop", "64"],
    );
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("winding"));
    let (code, out, _) = bin(&d, &["fermi", "probe", "--point", "1,0.3,0.8,-0.2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["distance"].as_f64().unwrap() > 0.0);
}
