//! Kernel splits compared against finite differences of the Green's function.

use bie2d::geometry::{build_mesh, Curve, GradedMesh, Vec2};
use bie2d::kernels::{log_term, split_adjdouble, split_double, split_hyper_diff, split_single};
use bie2d::specfun::greens;
use num_complex::Complex64;

fn g(k: f64, x: Vec2, y: Vec2) -> Complex64 {
    let r = (x[0] - y[0]).hypot(x[1] - y[1]);
    greens(Complex64::new(k, 0.0), r).unwrap()
}

fn shift(x: Vec2, d: Vec2, s: f64) -> Vec2 {
    [x[0] + s * d[0], x[1] + s * d[1]]
}

/// Directional derivative of `G(x, y)` in `x` along `d` (fourth order).
fn dx(k: f64, x: Vec2, y: Vec2, d: Vec2) -> Complex64 {
    let e = 2e-4;
    (g(k, shift(x, d, -2.0 * e), y) - g(k, shift(x, d, 2.0 * e), y)
        + (g(k, shift(x, d, e), y) - g(k, shift(x, d, -e), y)) * 8.0)
        / (12.0 * e)
}

fn mesh() -> GradedMesh {
    build_mesh(&Curve::ushape(4.0, 2.0, 2.0).unwrap(), 32, 3).unwrap()
}

const PAIRS: [(f64, f64); 4] = [(0.4, 1.3), (2.0, 5.1), (3.3, 3.9), (6.0, 0.2)];

#[test]
fn single_matches_greens() {
    let m = mesh();
    for (t, tau) in PAIRS {
        let (a, b) = (m.eval(t), m.eval(tau));
        let v = split_single(5.0, &m, t, tau).unwrap().total(log_term(t, tau));
        assert!((v - g(5.0, a.x, b.x)).norm() < 1e-13);
    }
}

#[test]
fn double_is_source_normal_derivative() {
    let m = mesh();
    for (t, tau) in PAIRS {
        let (a, b) = (m.eval(t), m.eval(tau));
        let (v, _) = split_double(5.0, &m, t, tau).unwrap();
        let fd = dx(5.0, b.x, a.x, b.normal());
        assert!((v.total(log_term(t, tau)) - fd).norm() < 1e-8, "{t} {tau} {} {fd}", v.total(log_term(t, tau)));
    }
}

#[test]
fn adjoint_is_target_normal_derivative() {
    let m = mesh();
    for (t, tau) in PAIRS {
        let (a, b) = (m.eval(t), m.eval(tau));
        let v = split_adjdouble(5.0, &m, t, tau).unwrap();
        let fd = dx(5.0, a.x, b.x, a.normal());
        assert!((v.total(log_term(t, tau)) - fd).norm() < 1e-8, "{t} {tau} {} {fd}", v.total(log_term(t, tau)));
    }
}

#[test]
fn hessian_difference_matches_second_derivative() {
    let m = mesh();
    let (k1, k2) = (7.0, 2.5);
    for (t, tau) in PAIRS {
        let (a, b) = (m.eval(t), m.eval(tau));
        let e = 1e-3;
        let diff = |x: Vec2| dx(k1, x, b.x, a.normal()) - dx(k2, x, b.x, a.normal());
        // d/dy along nu_b of d/dx along nu_a; G depends on x - y.
        let fd = (diff(shift(a.x, b.normal(), 2.0 * e)) - diff(shift(a.x, b.normal(), -2.0 * e))
            - (diff(shift(a.x, b.normal(), e)) - diff(shift(a.x, b.normal(), -e))) * 8.0)
            / (12.0 * e);
        let v = split_hyper_diff(k1, k2, &m, t, tau).unwrap().total(log_term(t, tau));
        assert!((v - fd).norm() < 1e-6 * (1.0 + fd.norm()), "{t} {tau} {v} {fd}");
    }
}
