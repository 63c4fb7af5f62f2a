//! Acceptance run. Prints one PASS/FAIL line per criterion with the
//! measured quantities; exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use bie2d::cli::{run_cases, RunConfig, SolveReport};
use bie2d::formulations::{Formulation, RhoMode, TransmissionProblem};
use bie2d::geometry::{build_mesh, Curve};
use bie2d::postprocess::uniform_angles;
use bie2d::verify;

struct Outcome {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn run(text: &str) -> (SolveReport, f64) {
    let cfg = RunConfig::parse(text).expect("acceptance configuration parses");
    let t = Instant::now();
    let report = run_cases(&cfg).expect("acceptance run completes");
    (report, t.elapsed().as_secs_f64())
}

fn iters(r: &SolveReport, f: Formulation, u: usize) -> usize {
    r.row(f, u).expect("row present").iterations
}

fn eps(r: &SolveReport, f: Formulation, u: usize) -> f64 {
    r.row(f, u).and_then(|row| row.eps_inf).expect("error present")
}

const MS1_UNKNOWNS: [usize; 4] = [256, 512, 1024, 2048];

fn criteria_1_2() -> [Outcome; 2] {
    let (ms1, secs) = run(
        "geometry.kind = square\nphysics.k1 = 1\nphysics.k2 = 4\nphysics.rho_mode = one\n\
         discretization.unknowns = 256, 512, 1024, 2048\n\
         formulation.names = cfiefk2, cfiesk, scfie, cfier, cfierps\ngmres.tol = 1e-12\nreference.factor = 2\n",
    );

    let e256 = eps(&ms1, Formulation::Cfiesk, 256);
    let e2048 = eps(&ms1, Formulation::Cfiesk, 2048);
    let ratios: Vec<f64> = MS1_UNKNOWNS
        .windows(2)
        .map(|w| eps(&ms1, Formulation::Cfiefk2, w[0]) / eps(&ms1, Formulation::Cfiefk2, w[1]))
        .collect();
    let c1 = Outcome {
        id: 1,
        title: "MS1 convergence: CFIESK error at 256 and 2048 unknowns, CFIEFK2 ratios, runtime",
        passed: e256 <= 1e-5 && e2048 <= 5e-9 && ratios.iter().all(|r| (4.0..=16.0).contains(r)) && secs <= 300.0,
        detail: format!(
            "cfiesk eps(256) = {e256:.2e} (<= 1e-5), eps(2048) = {e2048:.2e} (<= 5e-9); cfiefk2 ratios {:?} (in [4, 16]); {secs:.0} s (<= 300)",
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ),
    };

    // (formulation, lowest, highest) admissible counts at every refinement.
    let bands = [
        (Formulation::Cfiesk, 34 - 5, 34 + 5),
        (Formulation::Cfiefk2, 31 - 5, 31 + 5),
        (Formulation::Cfier, 43 - 7, 47 + 7),
        (Formulation::Cfierps, 32 - 5, 34 + 5),
        (Formulation::Scfie, 43 - 8, 54 + 8),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (f, lo, hi) in bands {
        let counts: Vec<usize> = MS1_UNKNOWNS.iter().map(|&u| iters(&ms1, f, u)).collect();
        let ok = counts.iter().all(|c| (lo..=hi).contains(c));
        passed &= ok;
        parts.push(format!("{f} {counts:?} in [{lo}, {hi}]{}", if ok { "" } else { " MISS" }));
    }
    let c2 = Outcome { id: 2, title: "MS1 iteration counts", passed, detail: parts.join("; ") };
    [c1, c2]
}

fn criterion_3() -> Outcome {
    let (r, _) = run(
        "geometry.kind = square\nphysics.rho_mode = one\nphysics.kappa_im = 4\nbench.rows = 28 8 2048\n\
         formulation.names = cfiesk, scfie, cfier\ngmres.tol = 1e-4\nreference.factor = 0\n",
    );
    let (sk, sc, cr) = (
        iters(&r, Formulation::Cfiesk, 2048),
        iters(&r, Formulation::Scfie, 2048),
        iters(&r, Formulation::Cfier, 2048),
    );
    Outcome {
        id: 3,
        title: "MS2R k1 = 28, k2 = 8, 2048 unknowns: CFIER and SCFIE against CFIESK",
        passed: cr as f64 <= 0.45 * sk as f64 && sc as f64 <= 0.55 * sk as f64,
        detail: format!(
            "cfier {cr} <= {:.2}, scfie {sc} <= {:.2} (cfiesk {sk})",
            0.45 * sk as f64,
            0.55 * sk as f64
        ),
    }
}

fn criterion_4() -> Outcome {
    let (r, _) = run(
        "geometry.kind = ushape\nphysics.rho_mode = one\nphysics.kappa_im = 4\nbench.rows = 28 8 2816\n\
         formulation.names = cfiesk, cfier\ngmres.tol = 1e-4\nreference.factor = 0\n",
    );
    let (sk, cr) = (iters(&r, Formulation::Cfiesk, 2816), iters(&r, Formulation::Cfier, 2816));
    let within = |c: usize, paper: f64| (c as f64 - paper).abs() <= 0.25 * paper;
    let ratio_ok = cr as f64 <= 0.40 * sk as f64;
    let (sk_ok, cr_ok) = (within(sk, 240.0), within(cr, 67.0));
    Outcome {
        id: 4,
        title: "MU2R k1 = 28, k2 = 8, 2816 unknowns: CFIER against CFIESK, counts within 25%",
        passed: ratio_ok && sk_ok && cr_ok,
        detail: format!(
            "cfier {cr} <= {:.1} ({}); cfiesk {sk} in [180, 300] ({}); cfier {cr} in [50.25, 83.75] ({})",
            0.40 * sk as f64,
            ok(ratio_ok),
            ok(sk_ok),
            ok(cr_ok)
        ),
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISS"
    }
}

fn criterion_5() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for mode in [RhoMode::One, RhoMode::KRatio] {
        let p = TransmissionProblem::new(1.0, 4.0, mode).unwrap();
        for kind in Formulation::ALL {
            let limit = if kind == Formulation::Cfiesk { 1e-6 } else { 1e-4 };
            let e = verify::disk_far_error(kind, &p, 2.0, 128).unwrap();
            passed &= e <= limit;
            parts.push(format!("{kind}/rho={}: {e:.1e}", p.rho));
        }
    }
    Outcome {
        id: 5,
        title: "disk radius 2 against the series solution at n = 128 (cfiesk <= 1e-6, others <= 1e-4)",
        passed,
        detail: parts.join(", "),
    }
}

fn criterion_6() -> Outcome {
    let calderon = verify::calderon_residual(32, 1.0, 16).unwrap();

    let problem = TransmissionProblem::new(1.0, 4.0, RhoMode::One).unwrap();
    let square = Curve::square(4.0).unwrap();
    let mesh = build_mesh(&square, 128, 3).unwrap();
    let null = verify::null_field_residual(&problem, &mesh, &verify::ring(5.0, 20)).unwrap();

    let laplace = verify::laplace_constant_deviation(&mesh);
    let sums = bie2d::operators::laplace_double_row_sums(&mesh);
    let corner_dist = |i: usize| {
        let x = mesh.x[i];
        (x[0].abs() - 2.0).abs().hypot((x[1].abs() - 2.0).abs())
    };
    let away = (0..mesh.len())
        .filter(|&i| corner_dist(i) > 0.1)
        .map(|i| (sums[i] + 0.5).abs())
        .fold(0.0, f64::max);

    let quad = [4, 8, 16, 32].iter().map(|&n| verify::quadrature_exactness(n).unwrap()).fold(0.0, f64::max);

    let checks = [calderon <= 1e-6, null <= 1e-6, laplace <= 1e-8, quad <= 1e-11];
    Outcome {
        id: 6,
        title: "identities: Calderon, null field, Laplace constant on the square, quadrature exactness",
        passed: checks.iter().all(|c| *c),
        detail: format!(
            "calderon {calderon:.1e} (<= 1e-6, {}); null field {null:.1e} (<= 1e-6, {}); laplace max |sum + 1/2| {laplace:.1e} (<= 1e-8, {}; {away:.1e} at nodes farther than 0.1 from a corner); quadrature {quad:.1e} (<= 1e-11, {})",
            ok(checks[0]),
            ok(checks[1]),
            ok(checks[2]),
            ok(checks[3])
        ),
    }
}

fn criterion_7() -> Outcome {
    let problem = TransmissionProblem::new(1.0, 4.0, RhoMode::One).unwrap();
    let solved = verify::solve(Formulation::Cfiesk, &problem, &Curve::square(4.0).unwrap(), 128, 3, 1e-12).unwrap();
    let err = verify::far_field_asymptotic_error(&problem, &solved, 1e6, &uniform_angles(32)).unwrap();
    Outcome {
        id: 7,
        title: "far-field constant: potential at |x| = 1e6 against the far field (square, cfiesk)",
        passed: err <= 1e-5,
        detail: format!("max deviation {err:.2e} (<= 1e-5)"),
    }
}

fn cubic(x: f64, beta: f64) -> f64 {
    x * x * x - 3.0 * beta * x * x + beta
}

fn criterion_8() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for rho in [0.1, 0.5, 2.0, 10.0, 100.0] {
        let beta = (rho + 1.0) / (2.0 * (rho - 1.0));
        let roots = bie2d::formulations::contrast_cubic_roots(rho).unwrap();
        let (imag, smallest) = verify::cubic_root_summary(rho).unwrap();
        // Independent count: sign changes of the cubic on a fine grid, none in [-1/2, 1/2].
        let bound = 1.0 + 3.0 * beta.abs() + beta.abs();
        let steps = 400_000;
        let grid = |j: usize| -bound + 2.0 * bound * j as f64 / steps as f64;
        let changes: Vec<f64> = (0..steps)
            .filter(|&j| cubic(grid(j), beta).signum() != cubic(grid(j + 1), beta).signum())
            .map(grid)
            .collect();
        let inner_free = changes.iter().all(|x| x.abs() > 0.5);
        let matched = roots.iter().all(|z| changes.iter().any(|x| (x - z.re).abs() <= 2.0 * 2.0 * bound / steps as f64));
        let ok_rho = imag == 0.0 && smallest > 0.5 && changes.len() == 3 && inner_free && matched;
        passed &= ok_rho;
        parts.push(format!("rho {rho}: min |root| {smallest:.4}, {} sign changes", changes.len()));
    }
    Outcome { id: 8, title: "contrast cubic roots real and outside [-1/2, 1/2]", passed, detail: parts.join("; ") }
}

fn criterion_9() -> Outcome {
    let base = "physics.rho_mode = one\nbench.rows = 8 32 2048\n\
                formulation.names = cfiefk2, cfiesk, scfie, cfier, cfierps\ngmres.tol = 1e-4\nreference.factor = 0\n";
    let (sq, _) = run(&format!("geometry.kind = square\n{base}"));
    let (lq, _) = run(&format!("geometry.kind = lq_ball\ngeometry.q = 512\ngeometry.radius = 2\n{base}"));
    let mut passed = true;
    let mut parts = Vec::new();
    for f in [Formulation::Cfiefk2, Formulation::Cfiesk, Formulation::Scfie, Formulation::Cfier, Formulation::Cfierps] {
        let (a, b) = (iters(&sq, f, 2048), iters(&lq, f, 2048));
        let within = (b as f64 - a as f64).abs() <= 0.25 * a as f64;
        passed &= within;
        parts.push(format!("{f} square {a} rounded {b}{}", if within { "" } else { " MISS" }));
    }
    Outcome { id: 9, title: "rounded square against square, k1 = 8, k2 = 32, 2048 unknowns (within 25%)", passed, detail: parts.join("; ") }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut outcomes = Vec::new();
    outcomes.extend(criteria_1_2());
    outcomes.push(criterion_3());
    outcomes.push(criterion_4());
    outcomes.push(criterion_5());
    outcomes.push(criterion_6());
    outcomes.push(criterion_7());
    outcomes.push(criterion_8());
    outcomes.push(criterion_9());
    for o in &outcomes {
        println!("criterion {}: {} {} | {}", o.id, if o.passed { "PASS" } else { "FAIL" }, o.title, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("acceptance: {} passed, {failed} failed, {:.0} s", outcomes.len() - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
