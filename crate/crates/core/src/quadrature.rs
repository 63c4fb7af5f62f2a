//! Periodic quadrature on the shifted grid `t_i = i h + h/2`, `h = pi/n`.
//!
//! All weight tables are circulant: the entry coupling nodes `i` and `j`
//! depends only on `(i - j) mod 2n`, so each is stored as a single row.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Logarithmic, principal-value and differentiation weights for `2n` nodes.
#[derive(Debug, Clone)]
pub struct QuadratureTables {
    pub n: usize,
    pub h: f64,
    log_w: Vec<f64>,
    pv_w: Vec<f64>,
    diff_w: Vec<f64>,
    log_kernel: Vec<f64>,
    cot_half: Vec<f64>,
}

impl QuadratureTables {
    pub fn len(&self) -> usize {
        2 * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let m = 2 * self.n;
        (i + m - j % m) % m
    }

    /// Log weight `R_j(t_i)`.
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.log_w[self.idx(i, j)]
    }

    /// PV-cotangent weight `T_j(t_i)`.
    pub fn t(&self, i: usize, j: usize) -> f64 {
        self.pv_w[self.idx(i, j)]
    }

    /// Fourier differentiation matrix entry.
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.diff_w[self.idx(i, j)]
    }

    /// `ln(4 sin^2((t_i - t_j)/2))`; undefined (infinite) on the diagonal.
    pub fn log_kernel(&self, i: usize, j: usize) -> f64 {
        self.log_kernel[self.idx(i, j)]
    }

    /// `cot((t_i - t_j)/2)`; zero on the diagonal.
    pub fn cot_half(&self, i: usize, j: usize) -> f64 {
        self.cot_half[self.idx(i, j)]
    }

    /// Circulant rows indexed by `(i - j) mod 2n`.
    pub fn log_row(&self) -> &[f64] {
        &self.log_w
    }
    pub fn pv_row(&self) -> &[f64] {
        &self.pv_w
    }
    pub fn diff_row(&self) -> &[f64] {
        &self.diff_w
    }
    pub fn log_kernel_row(&self) -> &[f64] {
        &self.log_kernel
    }
    pub fn cot_row(&self) -> &[f64] {
        &self.cot_half
    }

    fn dense(&self, row: &[f64]) -> Vec<Vec<f64>> {
        let m = self.len();
        (0..m).map(|i| (0..m).map(|j| row[self.idx(i, j)]).collect()).collect()
    }

    pub fn r_matrix(&self) -> Vec<Vec<f64>> {
        self.dense(&self.log_w)
    }
    pub fn t_matrix(&self) -> Vec<Vec<f64>> {
        self.dense(&self.pv_w)
    }
    pub fn d_matrix(&self) -> Vec<Vec<f64>> {
        self.dense(&self.diff_w)
    }

    /// Node parameter `t_i`.
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }
}

pub fn build_tables(n: usize) -> Result<QuadratureTables> {
    if n < 2 {
        return Err(Error::Domain(format!("quadrature needs n >= 2, got {n}")));
    }
    let m = 2 * n;
    let nf = n as f64;
    let h = PI / nf;
    let cos_tab: Vec<f64> = (0..m).map(|l| (l as f64 * h).cos()).collect();
    let mut log_w = vec![0.0; m];
    let mut pv_w = vec![0.0; m];
    let mut diff_w = vec![0.0; m];
    let mut log_kernel = vec![f64::NEG_INFINITY; m];
    let mut cot_half = vec![0.0; m];
    for k in 0..m {
        let alt = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut sl = 0.0;
        let mut sp = 0.0;
        for mm in 1..n {
            let c = cos_tab[(mm * k) % m];
            sl += c / mm as f64;
            sp += mm as f64 * c;
        }
        log_w[k] = -2.0 * PI / nf * sl - PI / (nf * nf) * alt;
        pv_w[k] = -sp / (2.0 * nf) - 0.25 * alt;
        if k != 0 {
            let half = 0.5 * k as f64 * h;
            let (s, c) = half.sin_cos();
            cot_half[k] = c / s;
            diff_w[k] = 0.5 * alt * cot_half[k];
            log_kernel[k] = (4.0 * s * s).ln();
        }
    }
    Ok(QuadratureTables { n, h, log_w, pv_w, diff_w, log_kernel, cot_half })
}

fn check_len(tables: &QuadratureTables, len: usize) -> Result<()> {
    if len != tables.len() {
        return Err(Error::LengthMismatch { expected: tables.len(), got: len });
    }
    Ok(())
}

/// `sum_j R_j(t_i) f_j`, approximating `int ln(4 sin^2((t_i - tau)/2)) f(tau) dtau`.
pub fn log_quadrature(tables: &QuadratureTables, f: &[Complex64], i: usize) -> Result<Complex64> {
    check_len(tables, f.len())?;
    Ok(f.iter().enumerate().map(|(j, v)| v * tables.r(i, j)).sum())
}

/// `sum_j T_j(t_i) f_j`, approximating `(1/4 pi) PV int cot((tau - t_i)/2) f'(tau) dtau`.
pub fn pv_quadrature(tables: &QuadratureTables, f: &[Complex64], i: usize) -> Result<Complex64> {
    check_len(tables, f.len())?;
    Ok(f.iter().enumerate().map(|(j, v)| v * tables.t(i, j)).sum())
}

/// Trapezoid rule `h sum_j f_j`.
pub fn trapezoid(tables: &QuadratureTables, f: &[Complex64]) -> Result<Complex64> {
    check_len(tables, f.len())?;
    Ok(f.iter().sum::<Complex64>() * tables.h)
}

/// Spectral derivative of nodal samples.
pub fn differentiate(tables: &QuadratureTables, f: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(tables, f.len())?;
    let m = tables.len();
    Ok((0..m).map(|i| (0..m).map(|j| f[j] * tables.d(i, j)).sum()).collect())
}

/// Value at `t` of the interpolant in the span of `1, cos mt, sin mt`
/// (`m < n`) and `cos n(t - h/2)` through the shifted nodes.
pub fn trig_interp_eval(values: &[Complex64], t: f64) -> Result<Complex64> {
    let m = values.len();
    if m < 4 || m % 2 != 0 {
        return Err(Error::LengthMismatch { expected: m + m % 2, got: m });
    }
    let n = m / 2;
    let nf = n as f64;
    let h = PI / nf;
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, v) in values.iter().enumerate() {
        let th = t - (j as f64 + 0.5) * h;
        let half = 0.5 * th;
        let s = half.sin();
        let basis = if s.abs() < 1e-8 {
            let mut b = 1.0 + (nf * th).cos();
            for k in 1..n {
                b += 2.0 * (k as f64 * th).cos();
            }
            b
        } else {
            ((nf - 0.5) * th).sin() / s + (nf * th).cos()
        };
        acc += v * (basis / (2.0 * nf));
    }
    Ok(acc)
}

/// Which Fourier multiplier to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierKind {
    /// `sigma_S(m) = 1 / (2 sqrt(m^2 - kappa^2))`
    Single,
    /// `sigma_N(m) = -sqrt(m^2 - kappa^2) / 2`
    Hyper,
}

fn check_kappa(kappa: Complex64) -> Result<()> {
    if !(kappa.im > 0.0) {
        return Err(Error::RealKappa(kappa.to_string()));
    }
    Ok(())
}

/// Symbol value at integer frequency `m` (principal square root).
pub fn symbol(kind: MultiplierKind, kappa: Complex64, m: i64) -> Result<Complex64> {
    check_kappa(kappa)?;
    let root = (Complex64::new((m * m) as f64, 0.0) - kappa * kappa).sqrt();
    Ok(match kind {
        MultiplierKind::Single => 0.5 / root,
        MultiplierKind::Hyper => -0.5 * root,
    })
}

/// Circulant row of the multiplier with modes `-n < m <= n`; the Nyquist
/// mode uses the symmetric average of the symbol at `+n` and `-n`.
pub fn symbol_row<F: Fn(i64) -> Complex64>(n: usize, sigma: F) -> Vec<Complex64> {
    let m = 2 * n;
    let nf = n as f64;
    let h = PI / nf;
    let cos_tab: Vec<f64> = (0..m).map(|l| (l as f64 * h).cos()).collect();
    let sin_tab: Vec<f64> = (0..m).map(|l| (l as f64 * h).sin()).collect();
    let s0 = sigma(0);
    let nyq = 0.5 * (sigma(n as i64) + sigma(-(n as i64)));
    let sym: Vec<(Complex64, Complex64)> = (1..n)
        .map(|k| {
            let a = sigma(k as i64);
            let b = sigma(-(k as i64));
            (a + b, (a - b) * Complex64::i())
        })
        .collect();
    (0..m)
        .map(|d| {
            let alt = if d % 2 == 0 { 1.0 } else { -1.0 };
            let mut acc = s0 + nyq * alt;
            for (k, (even, odd)) in sym.iter().enumerate() {
                let l = ((k + 1) * d) % m;
                acc += even * cos_tab[l] + odd * sin_tab[l];
            }
            acc / (2.0 * nf)
        })
        .collect()
}

/// Applies a general Fourier multiplier to nodal samples.
pub fn apply_symbol<F: Fn(i64) -> Complex64>(values: &[Complex64], sigma: F) -> Result<Vec<Complex64>> {
    let m = values.len();
    if m < 4 || m % 2 != 0 {
        return Err(Error::LengthMismatch { expected: m + m % 2, got: m });
    }
    let row = symbol_row(m / 2, sigma);
    Ok((0..m)
        .map(|i| (0..m).map(|j| values[j] * row[(i + m - j) % m]).sum())
        .collect())
}

/// Applies `sigma_S` or `sigma_N` for the complex wavenumber `kappa`.
pub fn apply_multiplier(kind: MultiplierKind, kappa: Complex64, values: &[Complex64]) -> Result<Vec<Complex64>> {
    check_kappa(kappa)?;
    apply_symbol(values, |m| symbol(kind, kappa, m).expect("kappa checked"))
}
