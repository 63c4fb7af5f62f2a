//! Far and near fields from boundary traces, the far-field error metric and
//! the separation-of-variables solution for a disk.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::formulations::{TraceVector, TransmissionProblem};
use crate::geometry::{GradedMesh, Vec2};
use crate::specfun::{bessel_jy_orders, jy01_real};

/// Number of far-field directions used unless configured otherwise.
pub const DEFAULT_DIRECTIONS: usize = 1024;

/// Far-field samples `u_inf(cos theta, sin theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    pub angles: Vec<f64>,
    pub values: Vec<Complex64>,
}

/// `count` angles `2 pi j / count`, `j = 0..count`.
pub fn uniform_angles(count: usize) -> Vec<f64> {
    (0..count).map(|j| 2.0 * PI * j as f64 / count as f64).collect()
}

/// `e^{i pi/4} / sqrt(8 pi k)`: the factor in `G_k(x - y) ~ c e^{ik|x|} e^{-ik xhat.y} / sqrt|x|`.
pub fn far_field_constant(k: f64) -> Complex64 {
    Complex64::from_polar(1.0 / (8.0 * PI * k).sqrt(), FRAC_PI_4)
}

fn check_traces(traces: &TraceVector, mesh: &GradedMesh) -> Result<()> {
    if traces.dirichlet.len() != mesh.len() || traces.neumann_w.len() != mesh.len() {
        return Err(Error::LengthMismatch { expected: mesh.len(), got: traces.dirichlet.len() });
    }
    Ok(())
}

/// Far field of `u^1 = -SL_1(gamma_N u) + DL_1(gamma_D u)` by the trapezoid rule.
pub fn far_field(traces: &TraceVector, problem: &TransmissionProblem, mesh: &GradedMesh, angles: &[f64]) -> Result<FarField> {
    check_traces(traces, mesh)?;
    let k = problem.k1;
    let c = far_field_constant(k) * mesh.h;
    let values = angles
        .par_iter()
        .map(|th| {
            let xh = [th.cos(), th.sin()];
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..mesh.len() {
                let (x, nu) = (mesh.x[j], mesh.normal[j]);
                let phase = Complex64::from_polar(1.0, -k * (xh[0] * x[0] + xh[1] * x[1]));
                let dn = Complex64::new(0.0, k * (xh[0] * nu[0] + xh[1] * nu[1]));
                acc += (-traces.neumann_w[j] - dn * traces.dirichlet[j]) * phase;
            }
            acc * c
        })
        .collect();
    Ok(FarField { angles: angles.to_vec(), values })
}

/// Which side of the boundary a near-field point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Exterior,
    Interior,
}

/// `h sum_j [a_j G_k(x - x_j) + b_j dG_k/dnu_j(x - x_j)]` with weighted normals.
fn potential(k: f64, mesh: &GradedMesh, x: Vec2, single: &[Complex64], double: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..mesh.len() {
        let y = mesh.x[j];
        let r = [x[0] - y[0], x[1] - y[1]];
        let rho = r[0].hypot(r[1]);
        let b = jy01_real(k * rho);
        let g = Complex64::new(0.0, 0.25) * b.h0();
        let nr = mesh.normal[j][0] * r[0] + mesh.normal[j][1] * r[1];
        let dg = Complex64::new(0.0, 0.25 * k * nr / rho) * b.h1();
        acc += single[j] * g + double[j] * dg;
    }
    acc * mesh.h
}

fn check_distance(mesh: &GradedMesh, x: Vec2) -> Result<()> {
    let d = mesh.x.iter().map(|y| (x[0] - y[0]).hypot(x[1] - y[1])).fold(f64::INFINITY, f64::min);
    if d < 5.0 * mesh.max_spacing() {
        return Err(Error::NearBoundary { distance: d });
    }
    Ok(())
}

/// Scattered field `u^1` (exterior) or transmitted field `u^2` (interior).
///
/// Exterior: `u^1 = -SL_1(gamma_N u) + DL_1(gamma_D u)`. Interior:
/// `u^2 = SL_2(gamma_N u / rho) - DL_2(gamma_D u)`, with the traces of the
/// total exterior field.
pub fn near_field(
    traces: &TraceVector,
    problem: &TransmissionProblem,
    mesh: &GradedMesh,
    points: &[Vec2],
    region: Region,
) -> Result<Vec<Complex64>> {
    check_traces(traces, mesh)?;
    for p in points {
        check_distance(mesh, *p)?;
    }
    let (k, single, double): (f64, Vec<Complex64>, Vec<Complex64>) = match region {
        Region::Exterior => (
            problem.k1,
            traces.neumann_w.iter().map(|z| -z).collect(),
            traces.dirichlet.clone(),
        ),
        Region::Interior => (
            problem.k2,
            traces.neumann_w.iter().map(|z| z / problem.rho).collect(),
            traces.dirichlet.iter().map(|z| -z).collect(),
        ),
    };
    Ok(points.par_iter().map(|x| potential(k, mesh, *x, &single, &double)).collect())
}

/// `max_j |calc_j - reference_j|` over matching direction sets.
pub fn max_far_error(calc: &FarField, reference: &FarField) -> Result<f64> {
    if calc.angles.len() != reference.angles.len()
        || calc.angles.iter().zip(&reference.angles).any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::DirectionMismatch);
    }
    Ok(calc.values.iter().zip(&reference.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}

/// Exterior coefficients `a_m`, `m = -M..=M`, of the disk transmission problem.
pub fn mie_coefficients(radius: f64, problem: &TransmissionProblem, extra_modes: usize) -> Result<Vec<Complex64>> {
    problem.validate()?;
    if !(radius > 0.0) {
        return Err(Error::InvalidGeometry(format!("disk radius {radius} must be positive")));
    }
    let (k1, k2, rho) = (problem.k1, problem.k2, problem.rho);
    let mmax = (k1 * radius).ceil() as usize + extra_modes;
    let (j1, y1) = bessel_jy_orders(k1 * radius, mmax + 1)?;
    let (j2, _) = bessel_jy_orders(k2 * radius, mmax + 1)?;
    let theta_d = problem.direction[1].atan2(problem.direction[0]);
    let deriv = |v: &[f64], m: usize| if m == 0 { -v[1] } else { 0.5 * (v[m - 1] - v[m + 1]) };
    let mut out = Vec::with_capacity(2 * mmax + 1);
    for ms in -(mmax as i64)..=(mmax as i64) {
        let m = ms.unsigned_abs() as usize;
        // J_{-m} = (-1)^m J_m; the sign cancels in the ratio below.
        let h = Complex64::new(j1[m], y1[m]);
        let hp = Complex64::new(deriv(&j1, m), deriv(&y1, m));
        let (a1, a1p, b2, b2p) = (j1[m], deriv(&j1, m), j2[m], deriv(&j2, m));
        let inc = Complex64::i().powi(ms as i32) * Complex64::from_polar(1.0, -(ms as f64) * theta_d);
        let den = k1 * hp * b2 - rho * k2 * b2p * h;
        if den.norm() == 0.0 {
            return Err(Error::Domain(format!("singular mode system at m = {ms}")));
        }
        out.push(inc * (rho * k2 * b2p * a1 - k1 * a1p * b2) / den);
    }
    Ok(out)
}

/// Disk far field `sqrt(2/(pi k1)) e^{-i pi/4} sum_m a_m (-i)^m e^{i m theta}`,
/// truncated at `|m| <= k1 a + 40`.
pub fn mie_reference(radius: f64, problem: &TransmissionProblem, angles: &[f64]) -> Result<FarField> {
    mie_reference_modes(radius, problem, angles, 40)
}

pub fn mie_reference_modes(radius: f64, problem: &TransmissionProblem, angles: &[f64], extra: usize) -> Result<FarField> {
    let coeffs = mie_coefficients(radius, problem, extra)?;
    let mmax = (coeffs.len() / 2) as i64;
    let c = Complex64::from_polar((2.0 / (PI * problem.k1)).sqrt(), -FRAC_PI_4);
    let values = angles
        .iter()
        .map(|th| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, a) in coeffs.iter().enumerate() {
                let m = idx as i64 - mmax;
                acc += a * Complex64::i().powi(-m as i32) * Complex64::from_polar(1.0, m as f64 * th);
            }
            acc * c
        })
        .collect();
    Ok(FarField { angles: angles.to_vec(), values })
}
