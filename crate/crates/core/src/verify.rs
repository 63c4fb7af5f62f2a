//! Numerical identity checks behind `bie2d verify`: Calderón relations,
//! the incident null field, Laplace double-layer constants, quadrature
//! exactness on trigonometric polynomials, disk far fields against the
//! separation-of-variables series, far-field asymptotics and the contrast
//! cubic.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::formulations::{build_system, contrast_cubic_roots, incident_traces, Formulation, RhoMode, TraceVector, TransmissionProblem};
use crate::geometry::{build_mesh, Curve, GradedMesh, Vec2};
use crate::linalg::gmres;
use crate::operators::{laplace_double_row_sums, LinearMap, OperatorNeeds, OperatorSet};
use crate::postprocess::{far_field, max_far_error, mie_reference, near_field, uniform_angles, Region, DEFAULT_DIRECTIONS};
use crate::quadrature::{build_tables, log_quadrature, pv_quadrature};

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, passed: value.is_finite() && value <= limit }
    }
}

/// A solved transmission problem.
#[derive(Debug, Clone)]
pub struct Solved {
    pub mesh: GradedMesh,
    pub traces: TraceVector,
    pub iterations: usize,
}

/// Solves `kind` on `curve` with `2n` nodes and sigmoid order `p`.
pub fn solve(kind: Formulation, problem: &TransmissionProblem, curve: &Curve, n: usize, p: u32, tol: f64) -> Result<Solved> {
    let mesh = build_mesh(curve, n, p)?;
    let tables = build_tables(n)?;
    let ops = OperatorSet::build(&mesh, &tables, problem.k1, problem.k2, Some(problem.kappa), kind.needs())?;
    let sys = build_system(kind, problem, &mesh, &ops)?;
    let res = gmres(&sys, &sys.rhs, tol, sys.size())?.require_converged(tol)?;
    let traces = sys.traces(&res.solution)?;
    Ok(Solved { mesh, traces, iterations: res.iterations })
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max_m max(||(S N + I/4 - K K) e_m||, ||(N S + I/4 - KT KT) e_m||)` over
/// Fourier modes `|m| <= max_mode` on the unit circle.
pub fn calderon_residual(n: usize, k: f64, max_mode: i64) -> Result<f64> {
    let mesh = build_mesh(&Curve::circle(1.0)?, n, 3)?;
    let tables = build_tables(n)?;
    let needs = OperatorNeeds { single: true, double: true, adjdouble: true, hyper: true, ..Default::default() };
    let ops = OperatorSet::build(&mesh, &tables, k, k, None, needs)?;
    let (s, d, dt, hyp) = (ops.s1()?, ops.d1()?, ops.kt1()?, ops.n1()?);
    let mut worst = 0.0f64;
    for m in -max_mode..=max_mode {
        let v: Vec<Complex64> = mesh.t.iter().map(|t| Complex64::from_polar(1.0, m as f64 * t)).collect();
        let lhs1 = s.apply(&hyp.apply(&v));
        let kk = d.apply(&d.apply(&v));
        let lhs2 = hyp.apply(&s.apply(&v));
        let tt = dt.apply(&dt.apply(&v));
        let r1: Vec<Complex64> = (0..v.len()).map(|i| lhs1[i] + 0.25 * v[i] - kk[i]).collect();
        let r2: Vec<Complex64> = (0..v.len()).map(|i| lhs2[i] + 0.25 * v[i] - tt[i]).collect();
        worst = worst.max(max_abs(&r1)).max(max_abs(&r2));
    }
    Ok(worst)
}

/// `count` points equally spaced on the circle of radius `radius`.
pub fn ring(radius: f64, count: usize) -> Vec<Vec2> {
    uniform_angles(count).iter().map(|a| [radius * a.cos(), radius * a.sin()]).collect()
}

/// `max |-SL_1(gamma_N u_inc) + DL_1(gamma_D u_inc)|` over exterior points,
/// relative to `max |u_inc| = 1`.
pub fn null_field_residual(problem: &TransmissionProblem, mesh: &GradedMesh, points: &[Vec2]) -> Result<f64> {
    let inc = incident_traces(problem, mesh);
    Ok(max_abs(&near_field(&inc, problem, mesh, points, Region::Exterior)?))
}

/// `max_i |h sum_j H_0(t_i, t_j) + 1/2|`.
pub fn laplace_constant_deviation(mesh: &GradedMesh) -> f64 {
    laplace_double_row_sums(mesh).iter().map(|s| (s + 0.5).abs()).fold(0.0, f64::max)
}

/// Largest error of the logarithmic and cotangent quadratures on
/// `e^{imt}`, `|m| < n`, at every node.
pub fn quadrature_exactness(n: usize) -> Result<f64> {
    let tables = build_tables(n)?;
    let nodes: Vec<f64> = (0..tables.len()).map(|i| tables.node(i)).collect();
    let mut worst = 0.0f64;
    for m in -(n as i64 - 1)..=(n as i64 - 1) {
        let f: Vec<Complex64> = nodes.iter().map(|t| Complex64::from_polar(1.0, m as f64 * t)).collect();
        let log_factor = if m == 0 { 0.0 } else { -2.0 * PI / m.unsigned_abs() as f64 };
        let pv_factor = -0.5 * m.unsigned_abs() as f64;
        for (i, fi) in f.iter().enumerate() {
            worst = worst.max((log_quadrature(&tables, &f, i)? - log_factor * fi).norm());
            worst = worst.max((pv_quadrature(&tables, &f, i)? - pv_factor * fi).norm());
        }
    }
    Ok(worst)
}

/// Far-field error of `kind` on a disk against the separation-of-variables series.
pub fn disk_far_error(kind: Formulation, problem: &TransmissionProblem, radius: f64, n: usize) -> Result<f64> {
    let solved = solve(kind, problem, &Curve::circle(radius)?, n, kind.default_p(), 1e-12)?;
    let angles = uniform_angles(DEFAULT_DIRECTIONS);
    let ff = far_field(&solved.traces, problem, &solved.mesh, &angles)?;
    max_far_error(&ff, &mie_reference(radius, problem, &angles)?)
}

/// `max |sqrt(R) e^{-i k1 R} u^1(R xhat) - u_inf(xhat)|` over `angles`.
pub fn far_field_asymptotic_error(
    problem: &TransmissionProblem,
    solved: &Solved,
    radius: f64,
    angles: &[f64],
) -> Result<f64> {
    let ff = far_field(&solved.traces, problem, &solved.mesh, angles)?;
    let points: Vec<Vec2> = angles.iter().map(|a| [radius * a.cos(), radius * a.sin()]).collect();
    let u = near_field(&solved.traces, problem, &solved.mesh, &points, Region::Exterior)?;
    let scale = Complex64::from_polar(radius.sqrt(), -problem.k1 * radius);
    Ok(u.iter().zip(&ff.values).map(|(a, b)| (a * scale - b).norm()).fold(0.0, f64::max))
}

/// Roots of the contrast cubic: `(max |Im|, min |root|)`.
pub fn cubic_root_summary(rho: f64) -> Result<(f64, f64)> {
    let roots = contrast_cubic_roots(rho)?;
    let imag = roots.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let smallest = roots.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    Ok((imag, smallest))
}

/// The fast check suite run by `bie2d verify`.
pub fn run_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    out.push(Check::at_most("calderon, unit circle, n = 32, k = 1, |m| <= 8", calderon_residual(32, 1.0, 8)?, 1e-6));

    let square = Curve::square(4.0)?;
    let problem = TransmissionProblem::new(1.0, 4.0, RhoMode::One)?;
    let mesh = build_mesh(&square, 64, 3)?;
    out.push(Check::at_most("null field, square, n = 64", null_field_residual(&problem, &mesh, &ring(5.0, 20))?, 1e-6));

    let circle = build_mesh(&Curve::circle(1.5)?, 32, 3)?;
    out.push(Check::at_most("laplace double layer constant, circle, n = 32", laplace_constant_deviation(&circle), 1e-8));

    let quad = [4, 8, 16, 32].iter().map(|&n| quadrature_exactness(n)).collect::<Result<Vec<_>>>()?;
    out.push(Check::at_most("log and cotangent quadrature exactness, n <= 32", quad.iter().cloned().fold(0.0, f64::max), 1e-11));

    for mode in [RhoMode::One, RhoMode::KRatio] {
        let p = TransmissionProblem::new(1.0, 4.0, mode)?;
        for kind in Formulation::ALL {
            let limit = if kind == Formulation::Cfiesk { 1e-6 } else { 1e-4 };
            let err = disk_far_error(kind, &p, 2.0, 64)?;
            out.push(Check::at_most(format!("disk far field, {kind}, rho = {}, n = 64", p.rho), err, limit));
        }
    }

    let solved = solve(Formulation::Cfiesk, &problem, &square, 64, 3, 1e-12)?;
    let err = far_field_asymptotic_error(&problem, &solved, 1e6, &uniform_angles(16))?;
    out.push(Check::at_most("far-field constant at |x| = 1e6, square, n = 64", err, 1e-5));

    for rho in [0.1, 0.5, 2.0, 10.0, 100.0] {
        let (imag, smallest) = cubic_root_summary(rho)?;
        out.push(Check {
            name: format!("contrast cubic roots real and outside [-1/2, 1/2], rho = {rho}"),
            value: smallest,
            limit: 0.5,
            passed: imag == 0.0 && smallest > 0.5,
        });
    }
    Ok(out)
}
