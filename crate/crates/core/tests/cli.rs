use std::path::Path;
use std::process::{Command as Proc, Output};

use fermicorr::cli::{normalize, CliError, Command, Format, RunConfig, CACHE_ENV, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK};
use fermicorr::Error;
use proptest::prelude::*;

const TWO_PI_CUBED: f64 = 8.0 * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI;

fn bin(args: &[&str], cwd: Option<&Path>, env: &[(&str, &Path)]) -> Output {
    let mut c = Proc::new(env!("CARGO_BIN_EXE_fermicorr"));
    c.args(args).env_remove(CACHE_ENV);
    if let Some(d) = cwd {
        c.current_dir(d);
    }
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    bin(args, None, &[]).status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn write_unit_table(dir: &Path) {
    let v = TWO_PI_CUBED;
    std::fs::write(dir.join("unit-mode.json"), format!(r#"{{"entries": [{{"k":[1,0,0],"v":{v:?}}},{{"k":[-1,0,0],"v":{v:?}}}]}}"#))
        .unwrap();
}

#[test]
fn energy_with_table_potential() {
    let dir = tempfile::tempdir().unwrap();
    write_unit_table(dir.path());
    let o = bin(&["energy", "--kf", "1", "--potential", "table:unit-mode.json", "--format", "csv"], Some(dir.path()), &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# seed=0\n"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 6.0);
    assert!((rows[0][3].parse::<f64>().unwrap() + 2.0).abs() < 1e-14);
}

#[test]
fn energy_without_interaction() {
    let o = bin(&["energy", "--kf", "1", "--potential", "none"], None, &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let row = &data_rows(&stdout(&o))[0];
    assert_eq!(row[2].parse::<f64>().unwrap(), 6.0);
    for v in &row[3..] {
        assert_eq!(v.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn energy_json() {
    let o = bin(&["energy", "--kf", "1.5", "--format", "json", "--per-k", "--seed", "9"], None, &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"], 9);
    assert!(v["e_corr_bos"].as_str().unwrap().parse::<f64>().unwrap() < 0.0);
    assert!(!v["per_k"].as_array().unwrap().is_empty());
}

#[test]
fn scan_single_and_duplicates() {
    let o = bin(&["scan", "--kf-list", "2"], None, &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let text = stdout(&o);
    assert_eq!(data_rows(&text).len(), 1);
    assert!(!text.contains("# fit"));

    let o = bin(&["scan", "--kf-list", "1,2,2,1.5"], None, &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let text = stdout(&o);
    assert_eq!(data_rows(&text.lines().filter(|l| !l.starts_with("# fit")).collect::<Vec<_>>().join("\n")).len(), 3);
    assert!(text.contains("# fit e_corr_bos"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate"));
}

#[test]
fn lune_rows() {
    let o = bin(&["lune", "--kf", "1", "--beta", "-1"], None, &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let text = stdout(&o);
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.ends_with("sum_lambda_pow_-1.0"), "{header}");
    let rows = data_rows(&text);
    let count = fermicorr::lattice::k_vectors_within(4.0).len();
    assert_eq!(rows.len(), count);
    for r in rows {
        let norm: f64 = r[3].parse().unwrap();
        let size: usize = r[4].parse().unwrap();
        if norm > 2.0 {
            assert_eq!(size, 7);
        }
        if r[0] == "1" && r[1] == "0" && r[2] == "0" {
            assert_eq!(size, 5);
            assert!((r[7].parse::<f64>().unwrap() - 26.0 / 3.0).abs() < 1e-12);
        }
    }
}

#[test]
fn verify_suite_passes() {
    let o = bin(&["verify", "--suite", "fock-algebra", "--kf", "0.9", "--format", "json"], None, &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"], 0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let not_a_dir = dir.path().join("plain-file");
    std::fs::write(&not_a_dir, "x").unwrap();
    let nd = not_a_dir.to_str().unwrap();
    let bad_out = dir.path().join("missing").join("out.csv");

    let cases: &[(&[&str], i32)] = &[
        (&["--help"], EXIT_OK),
        (&["--version"], EXIT_OK),
        (&["energy", "--kf", "1", "--potential", "none"], EXIT_OK),
        (&["lune", "--kf", "0.9"], EXIT_OK),
        (&[], EXIT_CONFIG),
        (&["frobnicate"], EXIT_CONFIG),
        (&["energy"], EXIT_CONFIG),
        (&["lune"], EXIT_CONFIG),
        (&["scan"], EXIT_CONFIG),
        (&["energy", "--kf", "abc"], EXIT_CONFIG),
        (&["energy", "--kf", "-1"], EXIT_CONFIG),
        (&["energy", "--kf", "0"], EXIT_CONFIG),
        (&["energy", "--kf", "inf"], EXIT_CONFIG),
        (&["energy", "--kf", "1", "--potential", "gauss:s=1"], EXIT_CONFIG),
        (&["energy", "--kf", "1", "--potential", "coulomb:g=-1"], EXIT_CONFIG),
        (&["energy", "--kf", "1", "--potential", "table:/nonexistent.json"], EXIT_CONFIG),
        (&["energy", "--kf", "1", "--kcut", "0"], EXIT_CONFIG),
        (&["energy", "--kf", "1", "--kcut", "1"], EXIT_CONFIG),
        (&["energy", "--kf", "1", "--tail-tol", "0"], EXIT_CONFIG),
        (&["energy", "--kf", "1", "--quad-tol", "-1"], EXIT_CONFIG),
        (&["energy", "--kf", "1", "--threads", "0"], EXIT_CONFIG),
        (&["energy", "--kf", "1", "--format", "xml"], EXIT_CONFIG),
        (&["energy", "--kf", "1", "--unknown-flag"], EXIT_CONFIG),
        (&["scan", "--kf-list", "3..2"], EXIT_CONFIG),
        (&["scan", "--kf-list", ","], EXIT_CONFIG),
        (&["verify", "--suite", "nope"], EXIT_CONFIG),
        (&["lune", "--kf", "1", "--cache-dir", nd], EXIT_FAILURE),
    ];
    for (args, want) in cases {
        assert_eq!(code(args), *want, "{args:?}");
    }
    let o = bin(&["energy", "--kf", "1", "--out", bad_out.to_str().unwrap()], None, &[]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn error_kinds_map_to_exit_codes() {
    let cases = [
        (Error::InvalidArgument("x".into()), EXIT_CONFIG),
        (Error::Parse("x".into()), EXIT_CONFIG),
        (Error::ResourceLimit("x".into()), EXIT_CONFIG),
        (Error::Numerical("x".into()), EXIT_FAILURE),
        (Error::Io(std::io::Error::other("x")), EXIT_FAILURE),
    ];
    for (e, want) in cases {
        assert_eq!(CliError::from(e).exit_code(), want);
    }
}

#[test]
fn output_file_and_thread_independence() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, threads) in [(&a, "1"), (&b, "3")] {
        let o = bin(&["energy", "--kf", "2.5", "--threads", threads, "--out", path.to_str().unwrap()], None, &[]);
        assert_eq!(o.status.code(), Some(EXIT_OK));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn cache_env_overrides_flag() {
    let flag_dir = tempfile::tempdir().unwrap();
    let env_dir = tempfile::tempdir().unwrap();
    let o = bin(
        &["lune", "--kf", "1", "--cache-dir", flag_dir.path().to_str().unwrap()],
        None,
        &[(CACHE_ENV, env_dir.path())],
    );
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert_eq!(std::fs::read_dir(flag_dir.path()).unwrap().count(), 0);
    assert_eq!(std::fs::read_dir(env_dir.path()).unwrap().count(), 1);

    let o = bin(&["lune", "--kf", "1", "--cache-dir", flag_dir.path().to_str().unwrap()], None, &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert_eq!(std::fs::read_dir(flag_dir.path()).unwrap().count(), 1);
}

#[test]
fn kf_list_ranges() {
    let c = RunConfig::parse_from(["fermicorr", "scan", "--kf-list", "3..5, 7.5"]).unwrap();
    assert_eq!(c.k_f_list, vec![3.0, 4.0, 5.0, 7.5]);
    let c = RunConfig::parse_from(["fermicorr", "scan", "--kf-list", "2,3,2"]).unwrap();
    assert_eq!(c.scan_values(), (vec![2.0, 3.0], vec![2.0]));
}

#[test]
fn normalize_is_canonical() {
    let a = normalize(["fermicorr", "energy", "--seed", "3", "--kf", "2"]).unwrap();
    let b = normalize(["fermicorr", "energy", "--kf=2.0", "--seed=3"]).unwrap();
    assert_eq!(a, b);
    assert!(matches!(normalize(["fermicorr", "energy"]), Err(CliError::Config(_))));
}

fn opt_pos() -> impl Strategy<Value = Option<f64>> {
    prop::option::of(0.01f64..100.0)
}

fn config() -> impl Strategy<Value = RunConfig> {
    let command = prop_oneof![Just(Command::Energy), Just(Command::Scan), Just(Command::Verify), Just(Command::Lune)];
    let potential = prop_oneof![
        (0.01f64..10.0).prop_map(|g| format!("coulomb:g={g:?}")),
        (0.01f64..10.0, 0.01f64..5.0).prop_map(|(g, mu)| format!("yukawa:g={g:?},mu={mu:?}")),
        Just("none".to_string()),
    ];
    let suite = prop::sample::select(fermicorr::verify::SUITES.to_vec()).prop_map(String::from);
    (
        (command, 0.1f64..20.0, prop::collection::vec(0.1f64..20.0, 0..4), potential, opt_pos()),
        (1e-8f64..0.1, 1e-14f64..1e-4, prop::option::of(1usize..16), any::<u64>()),
        (any::<bool>(), any::<bool>(), suite, any::<bool>(), any::<bool>(), prop::collection::vec(-1.0f64..1.0, 0..3)),
    )
        .prop_map(|((command, k_f, list, potential, kcut), (tail_tol, quad_tol, threads, seed), (json, out, suite, cache, per_k, beta))| {
            let k_f_list = if command == Command::Scan && list.is_empty() { vec![k_f] } else { list };
            RunConfig {
                command,
                k_f: Some(k_f),
                k_f_list,
                potential,
                kcut: kcut.map(|c| c + 2.0 * k_f),
                tail_tol,
                quad_tol,
                threads,
                seed,
                out: out.then(|| "result.csv".into()),
                format: if json { Format::Json } else { Format::Csv },
                suite,
                cache_dir: cache.then(|| "/tmp/lunes".into()),
                per_k,
                beta,
            }
        })
}

proptest! {
    #[test]
    fn config_round_trips(c in config()) {
        let args = c.to_args();
        let parsed = RunConfig::parse_from(&args).unwrap();
        prop_assert_eq!(&parsed, &c);
        let once = normalize(&args).unwrap();
        prop_assert_eq!(&once, &c.to_command_line());
        let twice = normalize(once.split(' ')).unwrap();
        prop_assert_eq!(once, twice);
    }
}
