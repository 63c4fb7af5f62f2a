//! Property tests on mesh grading, quadrature tables, operator symmetry,
//! GMRES, the disk series and the contrast cubic.

use bie2d::formulations::{contrast_cubic_roots, RhoMode, TransmissionProblem};
use bie2d::geometry::{build_mesh, sigmoid, Curve};
use bie2d::linalg::gmres;
use bie2d::operators::{assemble_single, DenseOperator, LinearMap};
use bie2d::postprocess::mie_reference;
use bie2d::quadrature::build_tables;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Gaussian elimination with partial pivoting.
fn lu_solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm())).unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
            let v = b[k];
            b[i] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let s: Complex64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

fn lcg(seed: &mut u64) -> f64 {
    *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
}

#[test]
fn gmres_matches_dense_elimination() {
    let n = 50;
    let mut seed = 7u64;
    let rows: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let z = Complex64::new(lcg(&mut seed), lcg(&mut seed)) * 0.3;
                    if i == j {
                        z + 2.0
                    } else {
                        z / (n as f64).sqrt()
                    }
                })
                .collect()
        })
        .collect();
    let b: Vec<Complex64> = (0..n).map(|_| Complex64::new(lcg(&mut seed), lcg(&mut seed))).collect();
    let a = DenseOperator::from_rows(n, "random", |i, out| out.copy_from_slice(&rows[i]));
    let r = gmres(&a, &b, 1e-13, n).unwrap();
    assert!(r.converged);
    let exact = lu_solve(rows, b);
    let err = r.solution.iter().zip(&exact).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(err < 1e-11, "gmres vs elimination {err:e}");
    let mut prev = f64::INFINITY;
    for h in &r.residual_history {
        assert!(*h <= prev * (1.0 + 1e-12));
        prev = *h;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sigmoid_is_monotone_and_fixes_ends(lo in -3.0f64..3.0, len in 0.1f64..4.0, p in 2u32..7, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let hi = lo + len;
        let (s0, s1) = (lo + len * a.min(b), lo + len * a.max(b));
        let w0 = sigmoid(s0, lo, hi, p).unwrap();
        let w1 = sigmoid(s1, lo, hi, p).unwrap();
        prop_assert!(w0.w <= w1.w + 1e-12);
        prop_assert!(w0.dw >= 0.0);
        prop_assert!((sigmoid(lo, lo, hi, p).unwrap().w - lo).abs() < 1e-12);
        prop_assert!((sigmoid(hi, lo, hi, p).unwrap().w - hi).abs() < 1e-12);
        let mid = sigmoid(lo + 0.5 * len, lo, hi, p).unwrap().w;
        prop_assert!((mid - (lo + 0.5 * len)).abs() < 1e-12);
    }

    #[test]
    fn quadrature_tables_are_circulant(n in 2usize..40, i in 0usize..80, j in 0usize..80, s in 0usize..80) {
        let t = build_tables(n).unwrap();
        let m = 2 * n;
        let (i, j, s) = (i % m, j % m, s % m);
        prop_assert_eq!(t.r(i, j), t.r((i + s) % m, (j + s) % m));
        prop_assert_eq!(t.t(i, j), t.t((i + s) % m, (j + s) % m));
        prop_assert_eq!(t.d(i, j), t.d((i + s) % m, (j + s) % m));
    }

    #[test]
    fn single_layer_matrix_is_symmetric(k in 0.5f64..12.0, shape in 0usize..3) {
        let curve = match shape {
            0 => Curve::square(4.0).unwrap(),
            1 => Curve::ushape(4.0, 2.0, 2.0).unwrap(),
            _ => Curve::lq_ball(8, 1.5).unwrap(),
        };
        let n = 24;
        let mesh = build_mesh(&curve, n, 3).unwrap();
        let s = assemble_single(Complex64::new(k, 0.0), &mesh, &build_tables(n).unwrap()).unwrap();
        let scale = s.entries().iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..s.dim() {
            for j in 0..i {
                prop_assert!((s.get(i, j) - s.get(j, i)).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn cubic_roots_avoid_central_interval(rho in prop_oneof![0.001f64..0.99, 1.01f64..1000.0]) {
        let roots = contrast_cubic_roots(rho).unwrap();
        let beta = (rho + 1.0) / (2.0 * (rho - 1.0));
        for z in roots {
            prop_assert!(z.im.abs() < 1e-12);
            prop_assert!(z.re.abs() > 0.5);
            let p = z.re.powi(3) - 3.0 * beta * z.re * z.re + beta;
            prop_assert!(p.abs() <= 1e-9 * (1.0 + beta.abs().powi(3)));
        }
    }

    #[test]
    fn disk_series_is_reciprocal(th_in in 0.0f64..(2.0 * PI), th_out in 0.0f64..(2.0 * PI), k1 in 0.5f64..3.0, ratio in 0.0f64..1.0) {
        let mode = if ratio < 0.5 { RhoMode::One } else { RhoMode::KRatio };
        let p = TransmissionProblem::new(k1, 2.5 * k1, mode).unwrap();
        let a = mie_reference(1.0, &p.with_direction([th_in.cos(), th_in.sin()]).unwrap(), &[th_out]).unwrap();
        let back = p.with_direction([-th_out.cos(), -th_out.sin()]).unwrap();
        let b = mie_reference(1.0, &back, &[th_in + PI]).unwrap();
        prop_assert!((a.values[0] - b.values[0]).norm() < 1e-10);
    }
}
