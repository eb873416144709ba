use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const REFERENCE: &str = "[scheme]\nscheme = \"mlf\"\nnu = 0.5\nD = 0.8\nflux = \"burgers\"\n\n[shock]\nu_minus = 1\nu_plus = -1\n";

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    fs::write(dir.join("run.ini"), config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_dspstab"))
        .current_dir(dir)
        .args(args)
        .args(["--config", "run.ini"])
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn hypotheses_pass_on_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["hypotheses"], REFERENCE);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let table = stdout(&o);
    for name in ["consistency", "cfl", "rankine_hugoniot", "lax", "band_edges", "unit_roots_right", "spectral_probe"] {
        assert!(table.contains(name), "{name} missing");
    }
    let csv = fs::read_to_string(dir.path().join("out/hypotheses.csv")).unwrap();
    assert!(csv.starts_with("check,value,threshold,verdict\n"));
    assert!(!csv.contains(",fail\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn invalid_choice_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{REFERENCE}\n[experiment]\nchoice = 2\np = 0.3\n");
    let o = run(dir.path(), &["experiment"], &cfg);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("choice 2"), "{}", stderr(&o));
}

#[test]
fn config_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["profile"], "[scheme]\n\nnu = -1\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let o = run(dir.path(), &["profile"], "[scheme]\nwidth = 3\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown key"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn experiment_outputs_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{REFERENCE}\n[experiment]\nj_max = 20\nn_max = 200\n");
    let a = run(dir.path(), &["experiment", "--out", "a"], &cfg);
    assert_eq!(a.status.code(), Some(0), "{}{}", stdout(&a), stderr(&a));
    let b = Command::new(env!("CARGO_BIN_EXE_dspstab"))
        .current_dir(dir.path())
        .env("DSPSTAB_THREADS", "1")
        .args(["experiment", "--config", "run.ini", "--out", "b"])
        .output()
        .unwrap();
    assert_eq!(b.status.code(), Some(0));
    for f in ["norms.csv", "envelope.csv", "slopes.csv", "envelope_l1.svg", "envelope_linf.svg", "effective_config.ini"] {
        let x = fs::read(dir.path().join("a").join(f)).unwrap();
        let y = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let norms = fs::read_to_string(dir.path().join("a/norms.csv")).unwrap();
    assert!(norms.starts_with("n,J,l1_norm,linf_norm\n"));
    assert_eq!(norms.lines().count(), 1 + 20 * 201);
    let slopes = fs::read_to_string(dir.path().join("a/slopes.csv")).unwrap();
    assert!(slopes.starts_with("norm,fitted,target,verdict\nl1,"));
    let svg = fs::read_to_string(dir.path().join("a/envelope_l1.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    let mut entries: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    entries.sort();
    assert_eq!(entries, ["a", "b", "run.ini"]);
}

#[test]
fn late_regression_window_fails_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{REFERENCE}\n[experiment]\nj_max = 10\nn_max = 400\nreg_lo = 200\nreg_hi = 400\n[output]\nformats = csv\n");
    let o = run(dir.path(), &["experiment"], &cfg);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(!dir.path().join("out/envelope_l1.svg").exists());
}

#[test]
fn green_csv_stays_inside_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["green", "--n", "50", "--j0", "-40", "--csv", "g.csv"], REFERENCE);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/g.csv")).unwrap();
    assert!(csv.starts_with("n,j0,j,green,leading_term,residual\n"));
    let o = run(dir.path(), &["green", "--n", "5", "--csv", "../escape.csv"], REFERENCE);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("escape.csv").exists());
}

#[test]
fn green_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["green", "--n", "2000", "--decompose"], REFERENCE);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("decomposition_exponent"));
    assert!(dir.path().join("out/decomposition.csv").exists());
}

#[test]
fn bounds_pass_on_reference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{REFERENCE}\n[bounds]\ntrials = 20\ninsum_n_max = 2000\n");
    let o = run(dir.path(), &["bounds"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/bounds.csv")).unwrap();
    assert!(csv.contains("duhamel(delta=0.25)"));
}

#[test]
fn profile_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["profile"], REFERENCE);
    assert_eq!(o.status.code(), Some(0));
    let fam = fs::read_to_string(dir.path().join("out/family.csv")).unwrap();
    assert!(fam.starts_with("delta,mass,residual,iterations\n"));
    assert_eq!(fam.lines().count(), 1 + 17);
    let prof = fs::read_to_string(dir.path().join("out/profile.csv")).unwrap();
    assert!(prof.starts_with("# left_tail=1 right_tail=-1\nj,value\n"), "{}", &prof[..40]);
}
