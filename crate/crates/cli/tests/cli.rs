use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pat_core::files::{read_field, read_observation, write_field};

const SMALL3: &str = "\
recon.nmax = 4
grid.dt = 0.01
grid.t_final = 2.1
grid.n_radii = 6
quad.shell_radii = 100
quad.mean_cells = 8
";

const SMALL2: &str = "\
grid.dim = 2
recon.nmax = 4
grid.dt = 0.01
grid.t_final = 2.5
grid.n_radii = 6
quad.shell_radii = 100
quad.mean_cells = 8
recon.n_iter = 2
";

fn pat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pat")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = pat(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and the single stderr line.
fn fails(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = pat(dir, args);
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    (out.status.code().unwrap(), err)
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small3.cfg"), SMALL3).unwrap();
    fs::write(dir.path().join("small2.cfg"), SMALL2).unwrap();
    dir
}

const BUMP: &str = "bump:center=0.3,0,0:radius=0.5:power=3";

#[test]
fn synth_recon_is_byte_identical() {
    let runs: Vec<_> = ["1", "2"]
        .iter()
        .map(|w| {
            let dir = setup();
            let d = dir.path();
            ok(d, &["synth", "--config", "small3.cfg", "--phantom", "multibump:count=3", "--seed", "7", "--out", "o.meta"]);
            ok(d, &["recon", "o.meta", "--config", "small3.cfg", "--method", "exterior3d", "--workers", w, "--out", "f.meta"]);
            let names = ["o.meta", "o.bin", "o.provenance", "f.meta", "f.bin", "f.report"];
            let bytes: Vec<Vec<u8>> = names.iter().map(|n| fs::read(d.join(n)).unwrap()).collect();
            bytes
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0][1].iter().any(|&b| b != 0));
}

#[test]
fn seed_changes_random_phantom() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["synth", "--config", "small3.cfg", "--phantom", "multibump", "--seed", "1", "--out", "a.meta"]);
    ok(d, &["synth", "--config", "small3.cfg", "--phantom", "multibump", "--seed", "2", "--out", "b.meta"]);
    assert_ne!(fs::read(d.join("a.bin")).unwrap(), fs::read(d.join("b.bin")).unwrap());
}

#[test]
fn synth_respects_finite_speed() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["synth", "--config", "small3.cfg", "--phantom", BUMP, "--out", "o.meta", "--csv"]);
    let (h, obs) = read_observation(&d.join("o.meta")).unwrap();
    assert_eq!(h.n_times, 211);
    // the support is 0.2 away from the sphere
    for node in 0..obs.grid.len() {
        assert!(obs.series(node)[..20].iter().all(|&v| v == 0.0));
    }
    assert!(obs.data.iter().any(|&v| v.abs() > 1e-3));
    let csv = fs::read_to_string(d.join("o.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,node,value"));
    assert_eq!(lines.next(), Some("0,0,0"));
    assert_eq!(csv.lines().count(), 1 + obs.data.len());
    let side = fs::read_to_string(d.join("o.provenance")).unwrap();
    assert!(side.contains(&format!("phantom.spec = {BUMP}")));
}

#[test]
fn zero_observation_gives_zero_fields() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["synth", "--config", "small3.cfg", "--phantom", "zero", "--out", "z.meta"]);
    let (_, obs) = read_observation(&d.join("z.meta")).unwrap();
    assert!(obs.data.iter().all(|&v| v == 0.0));
    for m in ["exterior3d", "interior3d-volterra", "halftime", "fr-xcheck"] {
        ok(d, &["recon", "z.meta", "--config", "small3.cfg", "--method", m, "--out", "f.meta"]);
        let (_, f) = read_field(&d.join("f.meta")).unwrap();
        assert!(f.a.iter().chain(&f.b).all(|&v| v == 0.0), "{m}");
    }
    ok(d, &["synth", "--config", "small2.cfg", "--phantom", "zero", "--out", "z2.meta"]);
    for m in ["exterior2d", "iterative2d"] {
        ok(d, &["recon", "z2.meta", "--config", "small2.cfg", "--method", m, "--out", "f.meta"]);
        let (_, f) = read_field(&d.join("f.meta")).unwrap();
        assert!(f.a.iter().all(|&v| v == 0.0), "{m}");
    }
}

#[test]
fn roundtrip_and_compare() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["synth", "--config", "small3.cfg", "--phantom", BUMP, "--out", "o.meta", "--truth", "t.meta"]);
    ok(d, &["recon", "o.meta", "--config", "small3.cfg", "--out", "f.meta", "--csv"]);
    let kv = ok(d, &["compare", "f.meta", "t.meta", "--kv"]);
    let a_l2: f64 = kv.lines().next().unwrap().strip_prefix("a.rel_l2 = ").unwrap().parse().unwrap();
    assert!(a_l2 < 0.1, "{a_l2}");
    assert!(fs::read_to_string(d.join("f.csv")).unwrap().starts_with("r,node,a,b\n"));
    assert!(ok(d, &["compare", "t.meta", "t.meta", "--kv"]).lines().all(|l| l.ends_with(" = 0")));
    let (_, mut f) = read_field(&d.join("t.meta")).unwrap();
    for v in f.a.iter_mut() {
        *v *= 2.0;
    }
    write_field(&d.join("double.meta"), &f, 2.1, "scaled").unwrap();
    let kv = ok(d, &["compare", "double.meta", "t.meta", "--kv"]);
    assert!(kv.contains("a.rel_l2 = 1\n") && kv.contains("a.rel_linf = 1\n"), "{kv}");
    let report = fs::read_to_string(d.join("f.report")).unwrap();
    assert!(report.starts_with("method = exterior3d\n"));
}

#[test]
fn iterative_report_and_halftime_warning() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["synth", "--config", "small2.cfg", "--phantom", "bump:center=0.2,0.1:radius=0.5", "--out", "o.meta"]);
    ok(d, &["recon", "o.meta", "--config", "small2.cfg", "--out", "f.meta"]);
    let report = fs::read_to_string(d.join("f.report")).unwrap();
    assert!(report.contains("method = iterative2d") && report.contains("iteration.count = 2"), "{report}");
    ok(d, &["synth", "--config", "small3.cfg", "--phantom", BUMP, "--component", "a", "--out", "a.meta"]);
    let out = pat(d, &["recon", "a.meta", "--config", "small3.cfg", "--method", "halftime", "--vanishing", "a", "--out", "h.meta"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("warning: half-time residual"));
    let out = pat(d, &["recon", "a.meta", "--config", "small3.cfg", "--method", "halftime", "--vanishing", "b", "--out", "h.meta"]);
    assert!(out.status.success() && out.stderr.is_empty());
}

#[test]
fn residue_method_reads_pole_lists() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("p.txt"), "# mode re_p im_p re_c im_c\n2 -1 0 1 0\n2 -2 0 -2 0\n").unwrap();
    ok(d, &["recon", "p.txt", "--config", "small3.cfg", "--method", "interior3d-residue", "--out", "r.meta"]);
    let (_, f) = read_field(&d.join("r.meta")).unwrap();
    assert!(f.a.iter().any(|&v| v != 0.0));
    assert!(fs::read_to_string(d.join("r.report")).unwrap().contains("residue.tail_a"));
    fs::write(d.join("bad.txt"), "2 -1 0 1\n").unwrap();
    let (code, err) = fails(d, &["recon", "bad.txt", "--config", "small3.cfg", "--method", "interior3d-residue", "--out", "r.meta"]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn exit_codes() {
    let dir = setup();
    let d = dir.path();
    let (code, err) = fails(d, &["recon"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[usage]"));
    assert_eq!(fails(d, &["frobnicate"]).0, 2);
    assert_eq!(fails(d, &["recon", "x.meta", "--method", "magic", "--out", "f.meta"]).0, 2);
    fs::write(d.join("bad.cfg"), "recon.nmax = lots\n").unwrap();
    assert_eq!(fails(d, &["synth", "--config", "bad.cfg", "--phantom", "zero", "--out", "o.meta"]).0, 2);
    assert_eq!(fails(d, &["synth", "--config", "small3.cfg", "--phantom", "blob", "--out", "o.meta"]).0, 2);
    assert_eq!(fails(d, &["synth", "--config", "missing.cfg", "--phantom", "zero", "--out", "o.meta"]).0, 4);
    assert_eq!(fails(d, &["recon", "missing.meta", "--out", "f.meta"]).0, 4);

    // recursive 2D scheme needs T > 2
    let short = SMALL2.replace("grid.t_final = 2.5", "grid.t_final = 2");
    fs::write(d.join("short2.cfg"), short).unwrap();
    ok(d, &["synth", "--config", "short2.cfg", "--phantom", "bump:center=0.2,0:radius=0.5", "--out", "s.meta"]);
    let (code, err) = fails(d, &["recon", "s.meta", "--config", "short2.cfg", "--method", "iterative2d", "--out", "f.meta"]);
    assert_eq!(code, 3, "{err}");
    assert!(err.starts_with("error[numerical]") && err.contains("T > 2"), "{err}");

    // method and data dimension disagree
    let (code, err) = fails(d, &["recon", "s.meta", "--method", "exterior3d", "--out", "f.meta"]);
    assert_eq!(code, 3, "{err}");

    // corrupted payload
    let bin = d.join("s.bin");
    let mut bytes = fs::read(&bin).unwrap();
    bytes.pop();
    fs::write(&bin, bytes).unwrap();
    assert_eq!(fails(d, &["recon", "s.meta", "--config", "small2.cfg", "--out", "f.meta"]).0, 4);

    // incompatible grids
    ok(d, &["synth", "--config", "small3.cfg", "--phantom", "zero", "--out", "z.meta", "--truth", "t3.meta"]);
    ok(d, &["synth", "--config", "small2.cfg", "--phantom", "zero", "--out", "z2.meta", "--truth", "t2.meta"]);
    assert_eq!(fails(d, &["compare", "t3.meta", "t2.meta"]).0, 3);
}

#[test]
fn selftest_passes() {
    let dir = setup();
    let out = ok(dir.path(), &["selftest"]);
    assert!(out.lines().all(|l| l.starts_with("PASS")), "{out}");
    assert_eq!(out.lines().count(), 9);
}
