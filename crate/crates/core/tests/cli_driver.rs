//! End-to-end runs of the configuration drivers and the `bie2d` binary.

use std::path::PathBuf;
use std::process::Command;

use bie2d::cli::{run_bench, run_cases, run_solve, ResultRow, RunConfig, CSV_HEADER};
use bie2d::formulations::Formulation;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bie2d-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn without_timing(r: &ResultRow) -> String {
    let csv = r.csv();
    csv.rsplitn(3, ',').nth(2).unwrap().to_string()
}

#[test]
fn solve_writes_far_field_and_csv() {
    let (ff, csv) = (scratch("solve_ff.csv"), scratch("solve.csv"));
    let text = format!(
        "physics.k1 = 1\nphysics.k2 = 4\ndiscretization.unknowns = 128\nformulation.names = cfiesk\n\
         reference.factor = 0\noutput.farfield_path = {}\noutput.csv_path = {}\n",
        ff.display(),
        csv.display()
    );
    let report = run_solve(&RunConfig::parse(&text).unwrap()).unwrap();
    assert!(report.all_converged());
    let far = std::fs::read_to_string(&ff).unwrap();
    let lines: Vec<&str> = far.lines().collect();
    assert_eq!(lines[0], "theta,re,im,abs");
    assert_eq!(lines.len(), 1025);
    let first_re = lines[1].split(',').nth(1).unwrap();
    let mantissa = first_re.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.replace('.', "").len(), 15);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(table.lines().count(), 2);
    assert!(report.rows[0].matvec_ms > 0.0);
}

#[test]
fn no_contrast_scatters_nothing() {
    let text = "physics.k1 = 2\nphysics.k2 = 2\ndiscretization.unknowns = 1024\nformulation.names = cfiesk\nreference.factor = 0\n";
    let report = run_solve(&RunConfig::parse(text).unwrap()).unwrap();
    let max = report.far_fields[0].values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(max <= 1e-8, "far field {max:e}");
}

#[test]
fn repeated_counts_give_identical_rows() {
    let text = "physics.k1 = 1\nphysics.k2 = 4\ndiscretization.unknowns = 96, 96\n\
                formulation.names = cfiefk2, scfie\nreference.factor = 2\n";
    let report = run_cases(&RunConfig::parse(text).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert_eq!(without_timing(&report.rows[0]), without_timing(&report.rows[2]));
    assert_eq!(without_timing(&report.rows[1]), without_timing(&report.rows[3]));
    assert_eq!(report.far_fields[0], report.far_fields[2]);
}

#[test]
fn single_row_sweep_equals_solve() {
    let common = "formulation.names = cfier\nphysics.kappa_im = 4\ngmres.tol = 1e-6\nreference.factor = 0\n";
    let bench = run_bench(&RunConfig::parse(&format!("bench.rows = 3.5 1 128\n{common}")).unwrap()).unwrap();
    let solve = run_solve(
        &RunConfig::parse(&format!("physics.k1 = 3.5\nphysics.k2 = 1\ndiscretization.unknowns = 128\n{common}")).unwrap(),
    )
    .unwrap();
    assert_eq!(without_timing(&bench.rows[0]), without_timing(&solve.rows[0]));
    assert_eq!(bench.far_fields, solve.far_fields);
}

#[test]
fn errors_decrease_under_refinement() {
    let text = "physics.k1 = 1\nphysics.k2 = 4\ndiscretization.unknowns = 128, 256, 512\n\
                formulation.names = cfiesk, cfiefk2\nreference.factor = 2\n";
    let report = run_cases(&RunConfig::parse(text).unwrap()).unwrap();
    for f in [Formulation::Cfiesk, Formulation::Cfiefk2] {
        let e: Vec<f64> = [128, 256, 512].iter().map(|&u| report.row(f, u).unwrap().eps_inf.unwrap()).collect();
        assert!(e[0] > e[1] && e[1] > e[2], "{f}: {e:?}");
    }
}

fn binary(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bie2d")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn binary_exit_codes() {
    let bad = scratch("bad.cfg");
    std::fs::write(&bad, "physics.k1 = 1\nphysics.k2 = 4\ndiscretization.unknowns = 64\nphysics.rho_mode = two\n").unwrap();
    let (code, err) = binary(&["solve", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 4"), "{err}");

    let capped = scratch("capped.cfg");
    std::fs::write(
        &capped,
        "physics.k1 = 1\nphysics.k2 = 4\ndiscretization.unknowns = 64\nformulation.names = cfiesk\n\
         gmres.max_iter = 2\nreference.factor = 0\n",
    )
    .unwrap();
    assert_eq!(binary(&["solve", capped.to_str().unwrap()]).0, 2);

    let ok = scratch("ok.cfg");
    std::fs::write(&ok, "physics.k1 = 1\nphysics.k2 = 4\ndiscretization.unknowns = 64\nformulation.names = scfie\nreference.factor = 0\nrun.threads = 1\n").unwrap();
    assert_eq!(binary(&["solve", ok.to_str().unwrap()]).0, 0);
}

#[test]
fn shipped_tables_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../tables");
    let names = ["ms1", "mu1", "ms2", "mu2", "ms3", "mu3", "ms4", "mu4", "ms2r", "mu2r", "ms2rounded"];
    for name in names {
        let cfg = RunConfig::from_file(&dir.join(format!("{name}.cfg"))).unwrap();
        assert_eq!(cfg.cases.len(), 4, "{name}");
        assert_eq!(cfg.formulations.len(), 5, "{name}");
    }
}
