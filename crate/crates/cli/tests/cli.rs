use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_horofill"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .env_remove("HOROFILL_OUT")
        .output()
        .unwrap()
}

fn results(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("results.json")).unwrap()).unwrap()
}

#[test]
fn list_names_five_kinds() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    for k in ["fill-sweep", "hard-sphere", "pipeline", "cover-audit", "whitney-audit"] {
        assert!(text.contains(k), "{k} missing");
    }
    let verbose = String::from_utf8(bin().args(["list", "--verbose"]).output().unwrap().stdout).unwrap();
    assert!(verbose.contains("[fill_sweep]") && verbose.contains("stability"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = bin().args(["list", "--colour"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn euclidean_sweep_writes_record_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&configs().join("euclidean-baseline.toml"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = results(dir.path());
    assert_eq!(rec["kind"], "fill-sweep");
    assert_eq!(rec["passed"], true);
    assert_eq!(rec["config_hash"].as_str().unwrap().len(), 64);
    let masses: Vec<&str> = rec["instances"].as_array().unwrap().iter().map(|i| i["filling"]["mass"].as_str().unwrap()).collect();
    assert_eq!(masses, ["4/1", "9/1", "16/1", "25/1", "36/1"]);
    let csv = std::fs::read_to_string(dir.path().join("fillings.csv")).unwrap();
    assert!(csv.starts_with("id,mass_in,mass_in_f64,fill_mass,fill_mass_f64,status,duality_gap\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn malformed_config_exits_nonzero_with_schema_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "kind = \"whitney-audit\"\n[whitney_audit]\nsides = [4]\n").unwrap();
    let out = run(&cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid config"));
}

#[test]
fn seed_flag_satisfies_the_seed_rule() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("random.toml");
    std::fs::write(
        &cfg,
        "kind = \"fill-sweep\"\n[space]\nbuilder = \"grid\"\ndims = 2\nside = 3\n\
         [fill_sweep]\nfamily = \"random-cycles\"\ncount = 5\nk = 1\nbudget = \"8\"\n",
    )
    .unwrap();
    assert_eq!(run(&cfg, &dir.path().join("a"), &[]).status.code(), Some(2));
    assert!(run(&cfg, &dir.path().join("b"), &["--seed", "4"]).status.success());
}

#[test]
fn capacity_errors_name_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&configs().join("cover-horosphere.toml"), dir.path(), &["--cap-cells", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_cells"));
}

#[test]
fn reruns_reproduce_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = configs().join("lp-vs-oracle.toml");
    assert!(run(&cfg, &a, &["--jobs", "1"]).status.success());
    assert!(run(&cfg, &b, &["--jobs", "3"]).status.success());
    let strip = |mut v: serde_json::Value| {
        v.as_object_mut().unwrap().remove("wall_clock_ms");
        for i in v["instances"].as_array_mut().unwrap() {
            i["filling"].as_object_mut().unwrap().remove("runtime_ms");
        }
        v
    };
    assert_eq!(strip(results(&a)), strip(results(&b)));
    let audit = bin().arg("audit").arg(a.join("results.json")).output().unwrap();
    assert!(audit.status.success());
    assert!(String::from_utf8_lossy(&audit.stdout).starts_with("REPRODUCED"));
}

#[test]
fn failed_assertions_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.toml");
    std::fs::write(
        &cfg,
        "kind = \"fill-sweep\"\n[space]\nbuilder = \"grid\"\ndims = 2\nside = 4\n\
         [fill_sweep]\nfamily = \"grid-squares\"\nsizes = [2, 3, 4]\nexponent = [2.5, 3.0]\n",
    )
    .unwrap();
    let out = run(&cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL exponent_in_range"));
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(configs().join("whitney.toml"))
        .env("HOROFILL_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(results(dir.path())["instances"].as_array().unwrap().len(), 9);
    assert!(dir.path().join("whitney.csv").exists());
}
