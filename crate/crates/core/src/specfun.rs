//! Bessel and Hankel functions of orders 0 and 1, plus the free-space
//! Green's function of the Helmholtz operator.
//!
//! Three regimes are used: the ascending power series for `|z| <= 6`,
//! Miller's backward recurrence with Neumann-series evaluation of `Y` for
//! `6 < |z| < 20`, and Hankel's asymptotic expansion for `|z| >= 20`.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const SERIES_LIMIT: f64 = 6.0;
const ASYMPTOTIC_LIMIT: f64 = 20.0;
const HANKEL_ASYMPTOTIC_LIMIT: f64 = 17.0;
const MAX_ABS_ARG: f64 = 1.0e4;
const MAX_IMAG_ARG: f64 = 700.0;

/// `J0, J1, Y0, Y1` evaluated at a single argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder<T> {
    pub j0: T,
    pub j1: T,
    pub y0: T,
    pub y1: T,
}

impl Cylinder<f64> {
    pub fn h0(&self) -> Complex64 {
        Complex64::new(self.j0, self.y0)
    }
    pub fn h1(&self) -> Complex64 {
        Complex64::new(self.j1, self.y1)
    }
}

impl Cylinder<Complex64> {
    pub fn h0(&self) -> Complex64 {
        self.j0 + Complex64::i() * self.y0
    }
    pub fn h1(&self) -> Complex64 {
        self.j1 + Complex64::i() * self.y1
    }
}

fn check_order(order: u32) -> Result<()> {
    if order > 1 {
        return Err(Error::Domain(format!("Bessel order {order} unsupported (0 or 1)")));
    }
    Ok(())
}

fn check_arg(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    if z.norm() > MAX_ABS_ARG {
        return Err(Error::Domain(format!("|z| = {} exceeds {MAX_ABS_ARG}", z.norm())));
    }
    if z.im.abs() > MAX_IMAG_ARG {
        return Err(Error::Domain(format!("|Im z| = {} would overflow", z.im.abs())));
    }
    Ok(())
}

/// Bessel function of the first kind `J_order(z)` for `order` in {0, 1}.
pub fn bessel_j(order: u32, z: Complex64) -> Result<Complex64> {
    check_order(order)?;
    check_arg(z)?;
    let (j0, j1) = j01(z);
    Ok(if order == 0 { j0 } else { j1 })
}

/// Hankel function of the first kind `H^(1)_order(x)` for real `x > 0`.
pub fn hankel1(order: u32, x: f64) -> Result<Complex64> {
    check_order(order)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Hankel argument must be positive, got {x}")));
    }
    check_arg(Complex64::new(x, 0.0))?;
    let c = jy01_real(x);
    Ok(if order == 0 { c.h0() } else { c.h1() })
}

/// Hankel function of the first kind for complex arguments in the closed
/// upper half plane, excluding the origin.
pub fn hankel1_complex(order: u32, z: Complex64) -> Result<Complex64> {
    check_order(order)?;
    check_arg(z)?;
    if z.im < 0.0 || z.norm() == 0.0 {
        return Err(Error::Domain(format!("Hankel argument {z} outside the upper half plane")));
    }
    let (h0, h1) = h01(z);
    Ok(if order == 0 { h0 } else { h1 })
}

/// Free-space Green's function `G_k(r)`; `-ln(r)/(2 pi)` when `k = 0`.
pub fn greens(k: Complex64, r: f64) -> Result<Complex64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {r}")));
    }
    if k == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(-r.ln() / (2.0 * PI), 0.0));
    }
    if k.re <= 0.0 || k.im < 0.0 {
        return Err(Error::Domain(format!("wavenumber {k} needs Re k > 0 and Im k >= 0")));
    }
    let z = k * r;
    check_arg(z)?;
    let (h0, _) = h01(z);
    Ok(Complex64::new(0.0, 0.25) * h0)
}

/// `(J0(z), J1(z))` without argument validation.
pub fn j01(z: Complex64) -> (Complex64, Complex64) {
    let a = z.norm();
    if a == 0.0 {
        return (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    }
    if a <= SERIES_LIMIT {
        series_j(z)
    } else if a < ASYMPTOTIC_LIMIT {
        let (j, _) = miller_complex(z, 1);
        (j[0], j[1])
    } else {
        let c = asymptotic_complex(z);
        (c.j0, c.j1)
    }
}

/// `(H0(z), H1(z))` for `Im z >= 0`, `z != 0`, without validation.
pub fn h01(z: Complex64) -> (Complex64, Complex64) {
    if z.im == 0.0 && z.re > 0.0 {
        let c = jy01_real(z.re);
        return (c.h0(), c.h1());
    }
    if z.norm() >= HANKEL_ASYMPTOTIC_LIMIT {
        let (h, _) = hankel_asymptotic(z);
        return (h[0], h[1]);
    }
    if z.im > 1.5 {
        return hankel_integral(z);
    }
    let c = jy01_complex(z);
    (c.h0(), c.h1())
}

/// `J0, J1, Y0, Y1` at complex `z != 0` (principal branch of the logarithm).
pub fn jy01_complex(z: Complex64) -> Cylinder<Complex64> {
    let a = z.norm();
    if a <= SERIES_LIMIT {
        series_jy_complex(z)
    } else if a < ASYMPTOTIC_LIMIT {
        neumann_complex(z)
    } else {
        asymptotic_complex(z)
    }
}

/// `J0, J1, Y0, Y1` at real `x > 0`.
pub fn jy01_real(x: f64) -> Cylinder<f64> {
    if x <= SERIES_LIMIT {
        series_jy_real(x)
    } else if x < ASYMPTOTIC_LIMIT {
        neumann_real(x)
    } else {
        asymptotic_real(x)
    }
}

fn series_j(z: Complex64) -> (Complex64, Complex64) {
    let mq = -z * z * 0.25;
    let mut t = Complex64::new(1.0, 0.0);
    let mut u = Complex64::new(1.0, 0.0);
    let mut j0 = t;
    let mut j1 = u;
    for k in 1..80 {
        let kf = k as f64;
        t *= mq / (kf * kf);
        u *= mq / (kf * (kf + 1.0));
        j0 += t;
        j1 += u;
        if t.norm() < 1e-18 * j0.norm().max(1e-300) && u.norm() < 1e-18 * j1.norm().max(1e-300) {
            break;
        }
    }
    (j0, j1 * z * 0.5)
}

fn series_jy_complex(z: Complex64) -> Cylinder<Complex64> {
    let mq = -z * z * 0.25;
    let mut t = Complex64::new(1.0, 0.0);
    let mut u = Complex64::new(1.0, 0.0);
    let mut j0 = t;
    let mut j1 = u;
    let mut y0s = Complex64::new(0.0, 0.0);
    // H_0 + H_1 = 1 for the k = 0 term of the Y1 series.
    let mut y1s = u;
    let mut hk = 0.0;
    for k in 1..80 {
        let kf = k as f64;
        t *= mq / (kf * kf);
        u *= mq / (kf * (kf + 1.0));
        hk += 1.0 / kf;
        let hk1 = hk + 1.0 / (kf + 1.0);
        j0 += t;
        j1 += u;
        y0s += t * hk;
        y1s += u * (hk + hk1);
        if t.norm() * (1.0 + hk) < 1e-18 * (j0.norm() + y0s.norm())
            && u.norm() * (1.0 + hk1) < 1e-18 * (j1.norm() + y1s.norm())
        {
            break;
        }
    }
    let half = z * 0.5;
    let j1 = j1 * half;
    let lg = half.ln() + EULER_GAMMA;
    let y0 = (lg * j0 - y0s) * (2.0 / PI);
    let y1 = -2.0 / (PI * z) + lg * j1 * (2.0 / PI) - half * y1s / PI;
    Cylinder { j0, j1, y0, y1 }
}

fn series_jy_real(x: f64) -> Cylinder<f64> {
    let mq = -x * x * 0.25;
    let mut t = 1.0;
    let mut u = 1.0;
    let mut j0 = t;
    let mut j1 = u;
    let mut y0s = 0.0;
    let mut y1s = u;
    let mut hk = 0.0;
    for k in 1..80 {
        let kf = k as f64;
        t *= mq / (kf * kf);
        u *= mq / (kf * (kf + 1.0));
        hk += 1.0 / kf;
        let hk1 = hk + 1.0 / (kf + 1.0);
        j0 += t;
        j1 += u;
        y0s += t * hk;
        y1s += u * (hk + hk1);
        if t.abs() * (1.0 + hk) < 1e-18 && u.abs() * (1.0 + hk1) < 1e-18 {
            break;
        }
    }
    let half = 0.5 * x;
    let j1 = j1 * half;
    let lg = half.ln() + EULER_GAMMA;
    let y0 = (lg * j0 - y0s) * (2.0 / PI);
    let y1 = -2.0 / (PI * x) + lg * j1 * (2.0 / PI) - half * y1s / PI;
    Cylinder { j0, j1, y0, y1 }
}

fn miller_start(a: f64, nmax: usize) -> usize {
    let n = (a as usize).max(nmax) + 46;
    n + (n & 1)
}

/// Backward recurrence for `J_0 .. J_N` at complex `z`, normalized with
/// the generating-function identity `exp(-i z) = J0 + 2 sum (-i)^k J_k`
/// (or its conjugate form in the lower half plane).
fn miller_complex(z: Complex64, nmax: usize) -> (Vec<Complex64>, usize) {
    let start = miller_start(z.norm(), nmax);
    let mut f = vec![Complex64::new(0.0, 0.0); start + 2];
    f[start] = Complex64::new(1e-30, 0.0);
    let zi = 1.0 / z;
    for k in (1..=start).rev() {
        f[k - 1] = f[k] * zi * (2.0 * k as f64) - f[k + 1];
        if f[k - 1].norm() > 1e250 {
            for v in f.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let upper = z.im >= 0.0;
    let mut sum = f[0];
    let mut phase = Complex64::new(1.0, 0.0);
    let rot = if upper { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) };
    for v in f.iter().take(start + 1).skip(1) {
        phase *= rot;
        sum += *v * phase * 2.0;
    }
    let target = if upper {
        (Complex64::new(0.0, -1.0) * z).exp()
    } else {
        (Complex64::new(0.0, 1.0) * z).exp()
    };
    let scale = target / sum;
    for v in f.iter_mut() {
        *v *= scale;
    }
    (f, start)
}

fn neumann_complex(z: Complex64) -> Cylinder<Complex64> {
    let (j, start) = miller_complex(z, 1);
    let lg = (z * 0.5).ln() + EULER_GAMMA;
    let mut s0 = Complex64::new(0.0, 0.0);
    let mut s1 = Complex64::new(0.0, 0.0);
    let mut k = 1;
    while 2 * k + 1 <= start {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        s0 += j[2 * k] * (sign / kf);
        s1 += j[2 * k + 1] * (sign * (2.0 * kf + 1.0) / (kf * (kf + 1.0)));
        k += 1;
    }
    let y0 = lg * j[0] * (2.0 / PI) - s0 * (4.0 / PI);
    let y1 = -j[0] * 2.0 / (PI * z) + (lg - 1.0) * j[1] * (2.0 / PI) - s1 * (2.0 / PI);
    Cylinder { j0: j[0], j1: j[1], y0, y1 }
}

/// Backward recurrence for `J_0 .. J_N` at real `x > 0`, normalized with
/// `1 = J0 + 2 sum J_{2k}`.
fn miller_real(x: f64, nmax: usize) -> (Vec<f64>, usize) {
    let start = miller_start(x, nmax);
    let mut f = vec![0.0; start + 2];
    f[start] = 1e-30;
    let xi = 1.0 / x;
    for k in (1..=start).rev() {
        f[k - 1] = f[k] * xi * (2.0 * k as f64) - f[k + 1];
        if f[k - 1].abs() > 1e250 {
            for v in f.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let mut sum = f[0];
    let mut k = 2;
    while k <= start {
        sum += 2.0 * f[k];
        k += 2;
    }
    for v in f.iter_mut() {
        *v /= sum;
    }
    (f, start)
}

fn neumann_real(x: f64) -> Cylinder<f64> {
    let (j, start) = miller_real(x, 1);
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 <= start {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        s0 += sign * j[2 * k] / kf;
        s1 += sign * (2.0 * kf + 1.0) * j[2 * k + 1] / (kf * (kf + 1.0));
        k += 1;
    }
    let y0 = (2.0 / PI) * lg * j[0] - (4.0 / PI) * s0;
    let y1 = -2.0 * j[0] / (PI * x) + (2.0 / PI) * (lg - 1.0) * j[1] - (2.0 / PI) * s1;
    Cylinder { j0: j[0], j1: j[1], y0, y1 }
}

/// `H0, H1` from `K_nu(w) = int_0^inf exp(-w cosh t) cosh(nu t) dt` with
/// `w = -i z`, using the trapezoid rule (exponentially convergent since the
/// integrand is analytic in a strip of half-width `atan(Im z / |Re z|)`).
fn hankel_integral(z: Complex64) -> (Complex64, Complex64) {
    let w = Complex64::new(z.im, -z.re);
    let strip = z.im.atan2(z.re.abs()).min(1.0);
    let step = (2.0 * PI * strip / (40.0 + w.re)).min(0.1);
    let t_max = (1.0 + 40.0 / w.re).acosh();
    let count = (t_max / step).ceil() as usize;
    let mut k0 = 0.5 * (-w).exp();
    let mut k1 = Complex64::new(0.0, 0.0);
    for m in 1..=count {
        let t = m as f64 * step;
        let e = (-w * t.cosh()).exp();
        k0 += e;
        k1 += e * t.cosh();
    }
    k0 *= step;
    k1 = (k1 + 0.5 * (-w).exp()) * step;
    // H^(1)_nu(z) = (2 / pi) i^(-nu - 1) K_nu(-i z)
    (Complex64::new(0.0, -2.0 / PI) * k0, -2.0 / PI * k1)
}

/// Hankel asymptotic sums for orders 0 and 1: returns `([H1_0, H1_1], [H2_0, H2_1])`.
fn hankel_asymptotic(z: Complex64) -> ([Complex64; 2], [Complex64; 2]) {
    let pref = (2.0 / (PI * z)).sqrt();
    let zi = 1.0 / z;
    let i = Complex64::i();
    let mut h1 = [Complex64::new(0.0, 0.0); 2];
    let mut h2 = [Complex64::new(0.0, 0.0); 2];
    for nu in 0..2 {
        let mu = 4.0 * (nu * nu) as f64;
        let mut a = Complex64::new(1.0, 0.0);
        let mut sp = a;
        let mut sm = a;
        let mut ik = Complex64::new(1.0, 0.0);
        let mut last = f64::INFINITY;
        for k in 1..200 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            a *= zi * ((mu - odd * odd) / (8.0 * kf));
            let mag = a.norm();
            if mag > last {
                break;
            }
            last = mag;
            ik *= i;
            sp += ik * a;
            sm += ik.conj() * a;
            if mag < 1e-17 {
                break;
            }
        }
        let chi = z - (nu as f64) * PI * 0.5 - FRAC_PI_4;
        h1[nu] = pref * (i * chi).exp() * sp;
        h2[nu] = pref * (-i * chi).exp() * sm;
    }
    (h1, h2)
}

fn asymptotic_complex(z: Complex64) -> Cylinder<Complex64> {
    let (h1, h2) = hankel_asymptotic(z);
    let half_i = Complex64::new(0.0, -0.5);
    Cylinder {
        j0: (h1[0] + h2[0]) * 0.5,
        j1: (h1[1] + h2[1]) * 0.5,
        y0: (h1[0] - h2[0]) * half_i,
        y1: (h1[1] - h2[1]) * half_i,
    }
}

fn asymptotic_real(x: f64) -> Cylinder<f64> {
    let xi = 1.0 / x;
    let pref = (2.0 / (PI * x)).sqrt();
    let mut out = [0.0; 4];
    for nu in 0..2 {
        let mu = 4.0 * (nu * nu) as f64;
        // P = sum (-1)^m a_{2m} / x^{2m}, Q = sum (-1)^m a_{2m+1} / x^{2m+1}
        let mut a = 1.0;
        let mut p = 1.0;
        let mut q = 0.0;
        let mut last = f64::INFINITY;
        for k in 1..200 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            a *= xi * (mu - odd * odd) / (8.0 * kf);
            if a.abs() > last {
                break;
            }
            last = a.abs();
            match k % 4 {
                0 => p += a,
                1 => q += a,
                2 => p -= a,
                _ => q -= a,
            }
            if a.abs() < 1e-17 {
                break;
            }
        }
        let chi = x - (nu as f64) * PI * 0.5 - FRAC_PI_4;
        let (s, c) = chi.sin_cos();
        out[nu] = pref * (p * c - q * s);
        out[nu + 2] = pref * (p * s + q * c);
    }
    Cylinder { j0: out[0], j1: out[1], y0: out[2], y1: out[3] }
}

/// `J_m(x)` and `Y_m(x)` for `m = 0..=nmax` at real `x > 0`.
///
/// `J` comes from a backward recurrence scaled to whichever of `J0`, `J1`
/// is larger in magnitude; `Y` from the (stable) forward recurrence.
pub fn bessel_jy_orders(x: f64, nmax: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(x > 0.0) || !x.is_finite() || x > MAX_ABS_ARG {
        return Err(Error::Domain(format!("argument {x} outside (0, {MAX_ABS_ARG}]")));
    }
    let base = jy01_real(x);
    let (f, _) = miller_real(x, nmax + 1);
    let scale = if base.j0.abs() >= base.j1.abs() { base.j0 / f[0] } else { base.j1 / f[1] };
    let mut j: Vec<f64> = f.iter().take(nmax + 1).map(|v| v * scale).collect();
    j[0] = base.j0;
    if nmax >= 1 {
        j[1] = base.j1;
    }
    let mut y = vec![0.0; nmax + 1];
    y[0] = base.y0;
    if nmax >= 1 {
        y[1] = base.y1;
    }
    for m in 1..nmax {
        y[m + 1] = 2.0 * m as f64 / x * y[m] - y[m - 1];
    }
    Ok((j, y))
}
