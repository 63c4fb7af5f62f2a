//! Kernel splittings `K(t, tau) = K1(t, tau) ln(4 sin^2((t - tau)/2)) + K2(t, tau)`
//! for the parametrized boundary operators, with closed-form diagonals.
//!
//! Geometry follows `r = x(t) - x(tau)`, weighted normals `nu = (x2', -x1')`.
//! The `*_off` and `*_diag` helpers take precomputed Bessel values so that
//! operator assembly evaluates special functions once per node pair.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{CurvePoint, GradedMesh, Vec2};
use crate::specfun::{h01, j01, jy01_real, EULER_GAMMA};

const INV_4PI: f64 = 0.25 / PI;
const INV_2PI: f64 = 0.5 / PI;

/// Coefficient of `ln(4 sin^2((t - tau)/2))` and the smooth remainder.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SplitValue {
    pub log_coeff: Complex64,
    pub smooth: Complex64,
}

impl SplitValue {
    pub fn new(log_coeff: Complex64, smooth: Complex64) -> Self {
        Self { log_coeff, smooth }
    }

    /// Full kernel value for a given `ln(4 sin^2((t - tau)/2))`.
    pub fn total(&self, log_term: f64) -> Complex64 {
        self.log_coeff * log_term + self.smooth
    }

    fn scale(self, c: Complex64) -> Self {
        Self { log_coeff: self.log_coeff * c, smooth: self.smooth * c }
    }
}

impl std::ops::Sub for SplitValue {
    type Output = SplitValue;
    fn sub(self, o: SplitValue) -> SplitValue {
        SplitValue { log_coeff: self.log_coeff - o.log_coeff, smooth: self.smooth - o.smooth }
    }
}

/// `J0, J1, H0, H1` at `k |r|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairBessel {
    pub j0: Complex64,
    pub j1: Complex64,
    pub h0: Complex64,
    pub h1: Complex64,
}

impl PairBessel {
    pub fn real(z: f64) -> Self {
        let c = jy01_real(z);
        Self {
            j0: Complex64::new(c.j0, 0.0),
            j1: Complex64::new(c.j1, 0.0),
            h0: c.h0(),
            h1: c.h1(),
        }
    }

    pub fn complex(z: Complex64) -> Self {
        let (j0, j1) = j01(z);
        let (h0, h1) = h01(z);
        Self { j0, j1, h0, h1 }
    }

    /// Hankel values only; the `J` fields are left at zero.
    pub fn hankel_only(z: Complex64) -> Self {
        let (h0, h1) = h01(z);
        let zero = Complex64::new(0.0, 0.0);
        Self { j0: zero, j1: zero, h0, h1 }
    }
}

/// `ln(4 sin^2((t - tau)/2))`.
pub fn log_term(t: f64, tau: f64) -> f64 {
    let s = (0.5 * (t - tau)).sin();
    (4.0 * s * s).ln()
}

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn i_c(v: f64) -> Complex64 {
    Complex64::new(0.0, v)
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

pub fn single_off(b: &PairBessel, log: f64) -> SplitValue {
    let m1 = -INV_4PI * b.j0;
    let m = i_c(0.25) * b.h0;
    SplitValue::new(m1, m - m1 * log)
}

pub fn single_diag(k: Complex64, speed: f64) -> SplitValue {
    let m2 = i_c(0.25) - re(EULER_GAMMA * INV_2PI) - INV_2PI * (k * speed * 0.5).ln();
    SplitValue::new(re(-INV_4PI), m2)
}

/// Double-layer kernel (normal at the source) and the Laplace kernel `H_0`.
pub fn double_off(k: Complex64, b: &PairBessel, r: Vec2, rho: f64, nu_src: Vec2, log: f64) -> (SplitValue, f64) {
    let nr = dot(nu_src, r);
    let full = i_c(0.25) * k * nr * b.h1 / rho;
    let h1 = -INV_4PI * k * nr * b.j1 / rho;
    (SplitValue::new(h1, full - h1 * log), INV_2PI * nr / (rho * rho))
}

/// Diagonal `H_{k,2}(t,t) = H_0(t,t) = nu . x'' / (4 pi |x'|^2)`.
pub fn curvature_diag(p: &CurvePoint) -> f64 {
    let s2 = dot(p.dx, p.dx);
    INV_4PI * dot(p.normal(), p.ddx) / s2
}

/// Adjoint double-layer kernel (normal at the target).
pub fn adjdouble_off(k: Complex64, b: &PairBessel, r: Vec2, rho: f64, nu_tgt: Vec2, log: f64) -> SplitValue {
    let nr = dot(nu_tgt, r);
    let full = i_c(-0.25) * k * nr * b.h1 / rho;
    let h1 = INV_4PI * k * nr * b.j1 / rho;
    SplitValue::new(h1, full - h1 * log)
}

/// `Q_k = k^2 M_k (x'(t) . x'(tau))`.
pub fn hyper_q_off(k: Complex64, b: &PairBessel, tangents: f64, log: f64) -> SplitValue {
    single_off(b, log).scale(k * k * tangents)
}

pub fn hyper_q_diag(k: Complex64, speed: f64) -> SplitValue {
    single_diag(k, speed).scale(k * k * speed * speed)
}

/// `D_k = d/dt [ ln(sin^2((t - tau)/2)) / (4 pi) + M_k ]`.
pub fn hyper_d_off(k: Complex64, b: &PairBessel, r: Vec2, rho: f64, dx_tgt: Vec2, log: f64, cot: f64) -> SplitValue {
    let rt = dot(r, dx_tgt);
    let full = re(INV_4PI * cot) - i_c(0.25) * k * b.h1 * rt / rho;
    let d1 = INV_4PI * k * rt * b.j1 / rho;
    SplitValue::new(d1, full - d1 * log)
}

/// Diagonal of `D_k`: `-(1/4 pi) x' . x'' / |x'|^2`.
pub fn hyper_d_diag(p: &CurvePoint) -> SplitValue {
    SplitValue::new(re(0.0), re(-INV_4PI * dot(p.dx, p.ddx) / dot(p.dx, p.dx)))
}

/// Sandwich `nu(t)^T Hess(G_k - G_0)(r) nu(tau)`.
pub fn hessian_off(k: Complex64, b: &PairBessel, r: Vec2, rho: f64, nu_tgt: Vec2, nu_src: Vec2, log: f64) -> SplitValue {
    let rho2 = rho * rho;
    let a = dot(nu_tgt, r);
    let c = dot(nu_src, r);
    let nn = dot(nu_tgt, nu_src);
    let ac = a * c;
    let full = -i_c(0.25) * k * k * b.h0 * (ac / rho2)
        + (i_c(0.25) * b.h1 * k * rho - INV_2PI) * (2.0 * ac / (rho2 * rho2) - nn / rho2);
    let l1 = INV_4PI * k * (b.j1 / rho * nn + (k * b.j0 - 2.0 * b.j1 / rho) * (ac / rho2));
    SplitValue::new(l1, full - l1 * log)
}

pub fn hessian_diag(k: Complex64, speed: f64) -> SplitValue {
    let s2 = speed * speed;
    let l1 = k * k * (s2 / (8.0 * PI));
    let l2 = k * k
        * (INV_4PI * (k * speed * 0.5).ln() - i_c(0.125) + re((2.0 * EULER_GAMMA - 1.0) / (8.0 * PI)))
        * s2;
    SplitValue::new(l1, l2)
}

fn check_k(k: f64) -> Result<Complex64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("wavenumber {k} must be real and positive")));
    }
    Ok(re(k))
}

fn is_diag(t: f64, tau: f64) -> bool {
    let d = (t - tau).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d) < 1e-14
}

struct Pair {
    a: CurvePoint,
    b: CurvePoint,
    r: Vec2,
    rho: f64,
    log: f64,
}

fn pair(mesh: &GradedMesh, t: f64, tau: f64) -> Pair {
    let a = mesh.eval(t);
    let b = mesh.eval(tau);
    let r = [a.x[0] - b.x[0], a.x[1] - b.x[1]];
    Pair { a, b, r, rho: r[0].hypot(r[1]), log: log_term(t, tau) }
}

fn nonsingular(p: &CurvePoint) -> Result<()> {
    if !(p.speed() > 0.0) {
        return Err(Error::SingularDiagonal { t: p.t });
    }
    Ok(())
}

/// Split of the single-layer kernel `M_k(t, tau) = G_k(|x(t) - x(tau)|)`.
pub fn split_single(k: f64, mesh: &GradedMesh, t: f64, tau: f64) -> Result<SplitValue> {
    let kc = check_k(k)?;
    if is_diag(t, tau) {
        let a = mesh.eval(t);
        nonsingular(&a)?;
        return Ok(single_diag(kc, a.speed()));
    }
    let p = pair(mesh, t, tau);
    Ok(single_off(&PairBessel::real(k * p.rho), p.log))
}

/// Split of the double-layer kernel and the Laplace kernel `H_0`.
pub fn split_double(k: f64, mesh: &GradedMesh, t: f64, tau: f64) -> Result<(SplitValue, f64)> {
    let kc = check_k(k)?;
    if is_diag(t, tau) {
        let a = mesh.eval(t);
        nonsingular(&a)?;
        let c = curvature_diag(&a);
        return Ok((SplitValue::new(re(0.0), re(c)), c));
    }
    let p = pair(mesh, t, tau);
    Ok(double_off(kc, &PairBessel::real(k * p.rho), p.r, p.rho, p.b.normal(), p.log))
}

/// Split of the weighted adjoint double-layer kernel.
pub fn split_adjdouble(k: f64, mesh: &GradedMesh, t: f64, tau: f64) -> Result<SplitValue> {
    let kc = check_k(k)?;
    if is_diag(t, tau) {
        let a = mesh.eval(t);
        nonsingular(&a)?;
        return Ok(SplitValue::new(re(0.0), re(curvature_diag(&a))));
    }
    let p = pair(mesh, t, tau);
    Ok(adjdouble_off(kc, &PairBessel::real(k * p.rho), p.r, p.rho, p.a.normal(), p.log))
}

/// Splits of `Q_k` and `D_k` from the weighted hypersingular operator.
pub fn split_hyper_parts(k: f64, mesh: &GradedMesh, t: f64, tau: f64) -> Result<(SplitValue, SplitValue)> {
    let kc = check_k(k)?;
    if is_diag(t, tau) {
        let a = mesh.eval(t);
        nonsingular(&a)?;
        return Ok((hyper_q_diag(kc, a.speed()), hyper_d_diag(&a)));
    }
    let p = pair(mesh, t, tau);
    let b = PairBessel::real(k * p.rho);
    let cot = 1.0 / (0.5 * (t - tau)).tan();
    Ok((
        hyper_q_off(kc, &b, dot(p.a.dx, p.b.dx), p.log),
        hyper_d_off(kc, &b, p.r, p.rho, p.a.dx, p.log, cot),
    ))
}

/// Split of the kernel of `N_{k1}^w - N_{k2}^w`, i.e. of
/// `-nu(t)^T Hess(G_{k1} - G_{k2}) nu(tau)`. Finite at corners.
pub fn split_hyper_diff(k1: f64, k2: f64, mesh: &GradedMesh, t: f64, tau: f64) -> Result<SplitValue> {
    let (c1, c2) = (check_k(k1)?, check_k(k2)?);
    if is_diag(t, tau) {
        let s = mesh.eval(t).speed();
        if s == 0.0 {
            return Ok(SplitValue::default());
        }
        return Ok(hessian_diag(c2, s) - hessian_diag(c1, s));
    }
    let p = pair(mesh, t, tau);
    let (na, nb) = (p.a.normal(), p.b.normal());
    let l1 = hessian_off(c1, &PairBessel::real(k1 * p.rho), p.r, p.rho, na, nb, p.log);
    let l2 = hessian_off(c2, &PairBessel::real(k2 * p.rho), p.r, p.rho, na, nb, p.log);
    Ok(l2 - l1)
}
