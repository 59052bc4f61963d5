use cylgraft_cli::output::fmt_f64;
use cylgraft_cli::{Report, RunConfig};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn cylgraft(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cylgraft"));
    c.args(args).arg("--out").arg(out);
    if let Some(p) = config {
        c.arg("--config").arg(p);
    }
    c.output().unwrap()
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn report(out: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

const SMALL_CYLINDER: &str = "seed = 7\n[cylinder_check]\nseries = 20\nn_max = 4\n";

#[test]
fn success_writes_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, SMALL_CYLINDER);
    let out = dir.path().join("out");
    let o = cylgraft(&["cylinder-check"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r.seed, 7);
    assert!(r.all_pass());
    assert_eq!(r.summary.total, r.records.len());
    // every number in the series table is written with 17 significant digits
    let mut rd = csv::Reader::from_path(out.join("cylinder_series.csv")).unwrap();
    assert_eq!(rd.headers().unwrap().get(1), Some("l"));
    let rows: Vec<_> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 20);
    for cell in rows[0].iter().skip(1) {
        let v: f64 = cell.parse().unwrap();
        if cell.contains('e') {
            assert_eq!(cell, fmt_f64(v));
        }
    }
    assert!(out.join("plotdata").is_dir());
}

#[test]
fn float_format_round_trips() {
    for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }
}

#[test]
fn usage_and_config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        // unknown field
        "[cylinder_check]\nseries = 4\nbogus = 1\n",
        // malformed range
        "[collar_table]\nell_min = 0.4\nell_max = 0.1\n",
        // pointwise bounds forced on a window that misses the preconditions
        "[cylinder_check]\nseries = 4\nl = 0.5\npointwise = \"on\"\n",
        "tol = -1.0\n",
    ];
    for (k, text) in cases.iter().enumerate() {
        let cfg = write_config(&dir, text);
        let cmd = if text.contains("collar") { "collar-table" } else { "cylinder-check" };
        let o = cylgraft(&[cmd], Some(&cfg), &out);
        assert_eq!(o.status.code(), Some(2), "case {k}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = cylgraft(&["cylinder-check"], Some(&dir.path().join("missing.toml")), &out);
    assert_eq!(o.status.code(), Some(2));
    let o = cylgraft(&["no-such-command"], None, &out);
    assert_eq!(o.status.code(), Some(2));
    let o = cylgraft(&["cylinder-check", "--refine", "0"], None, &out);
    assert_eq!(o.status.code(), Some(2));
    // a sweep command without its section
    let o = cylgraft(&["graft-sweep"], None, &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pinch_verify_rejects_a_nonseparating_family() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "[pinch_verify]\nmode = \"nonseparating\"\nL = [2.0]\nsteps_per_unit = 2\n[pinch_verify.main_part]\nkind = \"slab-with-handle\"\n",
    );
    let o = cylgraft(&["pinch-verify"], Some(&cfg), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn a_single_modulus_skips_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "[graft_sweep]\nmode = \"nonseparating\"\nL = [2.0]\nsteps_per_unit = 2\n[graft_sweep.main_part]\nkind = \"slab-with-handle\"\n",
    );
    let out = dir.path().join("out");
    let o = cylgraft(&["graft-sweep"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let fit = r.get("asymptotics.fit").unwrap();
    assert!(!fit.asserted);
    assert!(fit.note.as_deref().unwrap().starts_with("skipped"));
}

#[test]
fn failed_checks_exit_with_1() {
    // the sampled package is symplectic only up to the mesh error
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "[package_fit.family]\nmode = \"nonseparating\"\nL = [2.0]\nsteps_per_unit = 2\n[package_fit.family.main_part]\nkind = \"slab-with-handle\"\n",
    );
    let out = dir.path().join("out");
    let o = cylgraft(&["package-fit"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert!(r.records.iter().any(|x| x.failed() && x.name.starts_with("package.extracted-spread")));
    assert!(r.get("package.toy-residual").unwrap().pass);
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, SMALL_CYLINDER);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for o in [&a, &b] {
        assert_eq!(cylgraft(&["cylinder-check"], Some(&cfg), o).status.code(), Some(0));
    }
    for f in ["report.json", "cylinder_series.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.path().join("c");
    cylgraft(&["cylinder-check", "--seed", "8"], Some(&cfg), &c);
    assert_ne!(std::fs::read(a.join("cylinder_series.csv")).unwrap(), std::fs::read(c.join("cylinder_series.csv")).unwrap());
}

#[test]
fn bundled_configs_parse() {
    for name in ["cylinder-check.toml", "genus2-handle.toml", "pure-cylinder.toml", "two-tori.toml"] {
        let cfg = RunConfig::load(&bundled(name)).unwrap();
        if let Some(s) = &cfg.graft_sweep {
            s.family(1).unwrap().validate().unwrap();
        }
    }
}

#[test]
fn string_keyed_bound_inputs() {
    let cfg = RunConfig::parse(
        "[graft_sweep]\nmode = \"nonseparating\"\nL = [2.0]\nsteps_per_unit = 2\n[graft_sweep.main_part]\nkind = \"slab-with-handle\"\n\
         [graft_sweep.bounds]\nw_a = 0.125\n[graft_sweep.bounds.partner_collar_moduli]\nx = 0.25\n",
    )
    .unwrap();
    assert!(cfg.graft_sweep.unwrap().bounds.unwrap().inputs().is_err());
}
