//! Unrestarted complex GMRES (Arnoldi with modified Gram-Schmidt, Givens
//! rotations for the least-squares update).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::LinearMap;

#[derive(Debug, Clone, PartialEq)]
pub struct GmresResult {
    pub solution: Vec<Complex64>,
    pub iterations: usize,
    /// Relative residual `||b - A x_j|| / ||b||` after each iteration, starting at `j = 0`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

impl GmresResult {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&0.0)
    }

    /// `Err(NotConverged)` unless the tolerance was reached.
    pub fn require_converged(self, tol: f64) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { iterations: self.iterations, residual: self.final_residual(), tol })
        }
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Rotation `[c, s; -conj(s), c]` that zeroes `b` in `(a, b)`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let r = an.hypot(b.norm());
    if r == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, b.conj() / b.norm());
    }
    (an / r, (a / an) * b.conj() / r)
}

/// Solves `A x = b` from `x0 = 0` to relative residual `tol`.
pub fn gmres<A: LinearMap + ?Sized>(a: &A, b: &[Complex64], tol: f64, max_iter: usize) -> Result<GmresResult> {
    let m = a.dim();
    if b.len() != m {
        return Err(Error::LengthMismatch { expected: m, got: b.len() });
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!("GMRES tolerance {tol} must lie in (0, 1)")));
    }
    let zero = Complex64::new(0.0, 0.0);
    let beta = norm(b);
    if beta == 0.0 {
        return Ok(GmresResult { solution: vec![zero; m], iterations: 0, residual_history: vec![0.0], converged: true });
    }
    let max_iter = max_iter.min(m);
    let mut basis: Vec<Vec<Complex64>> = vec![b.iter().map(|z| z / beta).collect()];
    let mut hess: Vec<Vec<Complex64>> = Vec::new();
    let mut rot: Vec<(f64, Complex64)> = Vec::new();
    let mut g = vec![Complex64::new(beta, 0.0)];
    let mut history = vec![1.0];
    let mut converged = false;
    for j in 0..max_iter {
        let mut w = a.apply(&basis[j]);
        let wnorm = norm(&w);
        let mut col = vec![zero; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dotc(v, &w);
            col[i] = hij;
            for (wk, vk) in w.iter_mut().zip(v) {
                *wk -= hij * vk;
            }
        }
        let hnext = norm(&w);
        col[j + 1] = Complex64::new(hnext, 0.0);
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (x, y) = (col[i], col[i + 1]);
            col[i] = c * x + s * y;
            col[i + 1] = -s.conj() * x + c * y;
        }
        let (c, s) = givens(col[j], col[j + 1]);
        col[j] = c * col[j] + s * col[j + 1];
        col[j + 1] = zero;
        rot.push((c, s));
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s.conj() * gj);
        hess.push(col);
        let rel = g[j + 1].norm() / beta;
        history.push(rel);
        // An invariant Krylov subspace contains the exact solution.
        let breakdown = hnext <= 1e-14 * wnorm;
        if rel <= tol || breakdown {
            converged = true;
            break;
        }
        basis.push(w.iter().map(|z| z / hnext).collect());
    }
    let k = hess.len();
    let mut y = vec![zero; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for l in i + 1..k {
            acc -= hess[l][i] * y[l];
        }
        y[i] = acc / hess[i][i];
    }
    let mut x = vec![zero; m];
    for (yi, v) in y.iter().zip(&basis) {
        for (xk, vk) in x.iter_mut().zip(v) {
            *xk += yi * vk;
        }
    }
    Ok(GmresResult { solution: x, iterations: k, residual_history: history, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::DenseOperator;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dense(rows: Vec<Vec<Complex64>>) -> DenseOperator {
        let n = rows.len();
        DenseOperator::from_rows(n, "test", |i, out| out.copy_from_slice(&rows[i]))
    }

    #[test]
    fn identity_one_iteration() {
        let a = dense(vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]);
        let b = vec![c(2.0, 1.0), c(-1.0, 0.5)];
        let r = gmres(&a, &b, 1e-12, 10).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert!((r.solution[0] - b[0]).norm() < 1e-15);
    }

    #[test]
    fn diagonal_two_iterations() {
        let a = dense(vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(2.0, 0.0)]]);
        let r = gmres(&a, &[c(1.0, 0.0), c(1.0, 0.0)], 1e-12, 10).unwrap();
        assert!(r.iterations <= 2);
        assert!((r.solution[0] - 1.0).norm() < 1e-14 && (r.solution[1] - 0.5).norm() < 1e-14);
    }

    #[test]
    fn zero_rhs() {
        let a = dense(vec![vec![c(3.0, 0.0)]]);
        let r = gmres(&a, &[c(0.0, 0.0)], 1e-10, 5).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.solution, vec![c(0.0, 0.0)]);
    }

    #[test]
    fn stalls_report_not_converged() {
        // Cyclic shift: the residual stays at 1 until the full dimension.
        let n = 6;
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if (i + n - 1) % n == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
            .collect();
        let a = dense(rows);
        let mut b = vec![c(0.0, 0.0); n];
        b[0] = c(1.0, 0.0);
        let r = gmres(&a, &b, 1e-10, 3).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        assert!(matches!(r.require_converged(1e-10), Err(Error::NotConverged { .. })));
    }
}
