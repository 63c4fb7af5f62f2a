//! Dense Nyström matrices for the weighted boundary operators.
//!
//! Every operator is assembled row by row from the kernel splits in
//! [`crate::kernels`]: the logarithmic coefficient is integrated with the
//! log weights `R`, the smooth remainder with the trapezoid rule. Complex
//! wavenumbers use a windowed split so that the exponentially growing `J`
//! functions are only ever evaluated close to the diagonal.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::geometry::{GradedMesh, Vec2};
use crate::kernels::{
    adjdouble_off, curvature_diag, double_off, hessian_diag, hessian_off, hyper_d_diag, hyper_d_off,
    hyper_q_diag, hyper_q_off, single_diag, single_off, PairBessel, SplitValue,
};
use crate::quadrature::{symbol, symbol_row, MultiplierKind, QuadratureTables};

/// Anything that maps nodal densities to nodal densities.
pub trait LinearMap: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
}

/// Row-major complex square matrix.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<Complex64>,
    label: String,
}

impl DenseOperator {
    pub fn zeros(dim: usize, label: impl Into<String>) -> Self {
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim], label: label.into() }
    }

    pub fn from_rows<F>(dim: usize, label: impl Into<String>, fill: F) -> Self
    where
        F: Fn(usize, &mut [Complex64]) + Sync,
    {
        let mut op = Self::zeros(dim, label);
        op.data.par_chunks_mut(dim).enumerate().for_each(|(i, row)| fill(i, row));
        op
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `self + c * other`, elementwise.
    pub fn add_scaled(&mut self, c: Complex64, other: &DenseOperator) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, got: other.dim });
        }
        self.data.par_iter_mut().zip(other.data.par_iter()).for_each(|(a, b)| *a += c * b);
        Ok(())
    }
}

impl LinearMap for DenseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim, "matvec length mismatch for {}", self.label);
        self.data
            .par_chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Circulant action `y_i = sum_j row[(i - j) mod m] x_j`.
pub fn apply_circulant(row: &[f64], x: &[Complex64]) -> Vec<Complex64> {
    let m = x.len();
    (0..m)
        .into_par_iter()
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in x.iter().enumerate() {
                acc += v * row[(i + m - j) % m];
            }
            acc
        })
        .collect()
}

/// Weighted hypersingular operator `A psi + B (Dmat psi)`.
///
/// `A` holds the cotangent PV weights and the `Q_k` term, `B` the `D_k`
/// term that acts on the spectral derivative of the density.
#[derive(Debug, Clone)]
pub struct HyperOperator {
    pub direct: DenseOperator,
    pub tangential: DenseOperator,
    diff_row: Vec<f64>,
}

impl HyperOperator {
    /// Adds a derivative-free correction to the direct part.
    pub fn shifted(mut self, extra: &DenseOperator) -> Result<Self> {
        self.direct.add_scaled(Complex64::new(1.0, 0.0), extra)?;
        Ok(self)
    }
}

impl LinearMap for HyperOperator {
    fn dim(&self) -> usize {
        self.direct.dim
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let dpsi = apply_circulant(&self.diff_row, x);
        let mut y = self.direct.apply(x);
        for (a, b) in y.iter_mut().zip(self.tangential.apply(&dpsi)) {
            *a += b;
        }
        y
    }
}

/// Packed upper-triangular index for `i < j` among `m` nodes.
fn packed(i: usize, j: usize, m: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * (2 * m - a - 1) / 2 + (b - a - 1)
}

/// Node-pair distances and Bessel values for one wavenumber.
///
/// For complex wavenumbers the `J` values are computed only for pairs inside
/// the window; elsewhere they are left at zero and must not be used.
#[derive(Debug, Clone)]
pub struct WavenumberTable {
    pub k: Complex64,
    m: usize,
    values: Vec<PairBessel>,
}

impl WavenumberTable {
    pub fn build(mesh: &GradedMesh, k: Complex64, window: Option<&Window>) -> Result<Self> {
        if !(k.re > 0.0) || k.im < 0.0 || !k.re.is_finite() || !k.im.is_finite() {
            return Err(Error::Domain(format!("wavenumber {k} needs Re k > 0 and Im k >= 0")));
        }
        let m = mesh.len();
        let real = k.im == 0.0;
        let values: Vec<PairBessel> = (0..m)
            .into_par_iter()
            .flat_map_iter(|i| {
                (i + 1..m).map(move |j| {
                    let rho = distance(mesh.x[i], mesh.x[j]);
                    if real {
                        PairBessel::real(k.re * rho)
                    } else if window.map_or(true, |w| w.weight(mesh.t[i] - mesh.t[j]) > 0.0) {
                        PairBessel::complex(k * rho)
                    } else {
                        PairBessel::hankel_only(k * rho)
                    }
                })
            })
            .collect();
        Ok(Self { k, m, values })
    }

    pub fn pair(&self, i: usize, j: usize) -> &PairBessel {
        &self.values[packed(i, j, self.m)]
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }
}

fn distance(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn check_sizes(mesh: &GradedMesh, tables: &QuadratureTables) -> Result<()> {
    if mesh.n != tables.n {
        return Err(Error::LengthMismatch { expected: mesh.len(), got: tables.len() });
    }
    Ok(())
}

fn check_table(mesh: &GradedMesh, table: &WavenumberTable) -> Result<()> {
    if table.m != mesh.len() {
        return Err(Error::LengthMismatch { expected: mesh.len(), got: table.m });
    }
    Ok(())
}

struct Geo {
    r: Vec2,
    rho: f64,
}

fn geo(mesh: &GradedMesh, i: usize, j: usize) -> Geo {
    let (a, b) = (mesh.x[i], mesh.x[j]);
    let r = [a[0] - b[0], a[1] - b[1]];
    Geo { r, rho: r[0].hypot(r[1]) }
}

fn nystrom(tables: &QuadratureTables, i: usize, j: usize, s: SplitValue) -> Complex64 {
    s.log_coeff * tables.r(i, j) + s.smooth * tables.h
}

/// Smooth cutoff `chi(u)`: one for `|u| <= delta/2`, zero for `|u| >= delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub delta: f64,
}

impl Window {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= PI) {
            return Err(Error::Domain(format!("window width {delta} must lie in (0, pi]")));
        }
        Ok(Self { delta })
    }

    /// Width adapted to the decay rate of the complex wavenumber:
    /// `min(pi/2, 8 / (Im kappa * max |x'|))`, but never below `8h`.
    pub fn adaptive(kappa: Complex64, mesh: &GradedMesh) -> Self {
        let vmax = mesh.speed.iter().cloned().fold(0.0, f64::max);
        let natural = if kappa.im > 0.0 { 8.0 / (kappa.im * vmax) } else { FRAC_PI_2 };
        Self { delta: natural.min(FRAC_PI_2).max(8.0 * mesh.h).min(PI) }
    }

    /// Window weight at parameter difference `u` (reduced to `(-pi, pi]`).
    pub fn weight(&self, u: f64) -> f64 {
        let a = (u + PI).rem_euclid(2.0 * PI) - PI;
        let half = 0.5 * self.delta;
        let d = a.abs();
        if d <= half {
            1.0
        } else if d >= self.delta {
            0.0
        } else {
            let x = (d - half) / half;
            (2.0 * (-1.0 / x).exp() / (x - 1.0)).exp()
        }
    }
}

/// Single-layer matrix `S_k` for real `k`.
pub fn assemble_single_with(mesh: &GradedMesh, tables: &QuadratureTables, wt: &WavenumberTable) -> Result<DenseOperator> {
    check_sizes(mesh, tables)?;
    check_table(mesh, wt)?;
    let k = wt.k;
    Ok(DenseOperator::from_rows(mesh.len(), format!("S[{k}]"), |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let s = if i == j {
                single_diag(k, mesh.speed[i])
            } else {
                single_off(wt.pair(i, j), tables.log_kernel(i, j))
            };
            *out = nystrom(tables, i, j, s);
        }
    }))
}

/// Double-layer matrix `K_k` with the Laplace singularity subtraction.
pub fn assemble_double_with(mesh: &GradedMesh, tables: &QuadratureTables, wt: &WavenumberTable) -> Result<DenseOperator> {
    check_sizes(mesh, tables)?;
    check_table(mesh, wt)?;
    let k = wt.k;
    Ok(DenseOperator::from_rows(mesh.len(), format!("K[{k}]"), |i, row| {
        let mut laplace = 0.0;
        for (j, out) in row.iter_mut().enumerate() {
            if i == j {
                continue;
            }
            let g = geo(mesh, i, j);
            let (s, h0) = double_off(k, wt.pair(i, j), g.r, g.rho, mesh.normal[j], tables.log_kernel(i, j));
            laplace += h0;
            *out = nystrom(tables, i, j, s);
        }
        row[i] = Complex64::new(-0.5 - tables.h * laplace, 0.0);
    }))
}

/// Row sums `h sum_j H_0(t_i, t_j)` of the Laplace double-layer trapezoid block,
/// with the curvature diagonal; these approximate `-1/2` away from corners.
pub fn laplace_double_row_sums(mesh: &GradedMesh) -> Vec<f64> {
    let m = mesh.len();
    let h = PI / mesh.n as f64;
    (0..m)
        .into_par_iter()
        .map(|i| {
            let mut acc = curvature_diag(&mesh.point(i));
            for j in (0..m).filter(|&j| j != i) {
                let g = geo(mesh, i, j);
                let nr = mesh.normal[j][0] * g.r[0] + mesh.normal[j][1] * g.r[1];
                acc += nr / (2.0 * PI * g.rho * g.rho);
            }
            h * acc
        })
        .collect()
}

/// Weighted adjoint double-layer matrix `K_k^{T,w}`.
pub fn assemble_adjdouble_with(mesh: &GradedMesh, tables: &QuadratureTables, wt: &WavenumberTable) -> Result<DenseOperator> {
    check_sizes(mesh, tables)?;
    check_table(mesh, wt)?;
    let k = wt.k;
    Ok(DenseOperator::from_rows(mesh.len(), format!("KT[{k}]"), |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let s = if i == j {
                SplitValue::new(Complex64::new(0.0, 0.0), Complex64::new(curvature_diag(&mesh.point(i)), 0.0))
            } else {
                let g = geo(mesh, i, j);
                adjdouble_off(k, wt.pair(i, j), g.r, g.rho, mesh.normal[i], tables.log_kernel(i, j))
            };
            *out = nystrom(tables, i, j, s);
        }
    }))
}

/// Weighted hypersingular operator `N_k^w`.
pub fn assemble_hyper_with(mesh: &GradedMesh, tables: &QuadratureTables, wt: &WavenumberTable) -> Result<HyperOperator> {
    check_sizes(mesh, tables)?;
    check_table(mesh, wt)?;
    let k = wt.k;
    let m = mesh.len();
    let direct = DenseOperator::from_rows(m, format!("Nq[{k}]"), |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let q = if i == j {
                hyper_q_diag(k, mesh.speed[i])
            } else {
                let dots = mesh.dx[i][0] * mesh.dx[j][0] + mesh.dx[i][1] * mesh.dx[j][1];
                hyper_q_off(k, wt.pair(i, j), dots, tables.log_kernel(i, j))
            };
            *out = tables.t(i, j) + nystrom(tables, i, j, q);
        }
    });
    let tangential = DenseOperator::from_rows(m, format!("Nd[{k}]"), |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let d = if i == j {
                hyper_d_diag(&mesh.point(i))
            } else {
                let g = geo(mesh, i, j);
                hyper_d_off(k, wt.pair(i, j), g.r, g.rho, mesh.dx[i], tables.log_kernel(i, j), tables.cot_half(i, j))
            };
            *out = nystrom(tables, i, j, d);
        }
    });
    Ok(HyperOperator { direct, tangential, diff_row: tables.diff_row().to_vec() })
}

/// `N_{k1}^w - N_{k2}^w` through the Hessian-difference splitting. If `window`
/// is given, the log split is applied only where the window is nonzero.
pub fn assemble_hyper_diff_with(
    mesh: &GradedMesh,
    tables: &QuadratureTables,
    wt1: &WavenumberTable,
    wt2: &WavenumberTable,
    window: Option<&Window>,
) -> Result<DenseOperator> {
    check_sizes(mesh, tables)?;
    check_table(mesh, wt1)?;
    check_table(mesh, wt2)?;
    let (k1, k2) = (wt1.k, wt2.k);
    Ok(DenseOperator::from_rows(mesh.len(), format!("Ndiff[{k1},{k2}]"), |i, row| {
        let (na, s) = (mesh.normal[i], mesh.speed[i]);
        for (j, out) in row.iter_mut().enumerate() {
            if i == j {
                *out = nystrom(tables, i, j, hessian_diag(k2, s) - hessian_diag(k1, s));
                continue;
            }
            let g = geo(mesh, i, j);
            let log = tables.log_kernel(i, j);
            let chi = window.map_or(1.0, |w| w.weight(mesh.t[i] - mesh.t[j]));
            let nb = mesh.normal[j];
            let l1 = hessian_off(k1, wt1.pair(i, j), g.r, g.rho, na, nb, log);
            let l2 = hessian_off(k2, wt2.pair(i, j), g.r, g.rho, na, nb, log);
            let v = l2 - l1;
            *out = if chi == 1.0 {
                nystrom(tables, i, j, v)
            } else {
                let full = v.total(log);
                if chi == 0.0 {
                    full * tables.h
                } else {
                    v.log_coeff * (chi * tables.r(i, j)) + (full - v.log_coeff * (chi * log)) * tables.h
                }
            };
        }
    }))
}

/// Single layer `S_kappa` for complex `kappa` with the windowed splitting.
pub fn assemble_single_windowed(
    mesh: &GradedMesh,
    tables: &QuadratureTables,
    wt: &WavenumberTable,
    window: &Window,
) -> Result<DenseOperator> {
    check_sizes(mesh, tables)?;
    check_table(mesh, wt)?;
    let k = wt.k;
    Ok(DenseOperator::from_rows(mesh.len(), format!("S[{k}]"), |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            if i == j {
                *out = nystrom(tables, i, j, single_diag(k, mesh.speed[i]));
                continue;
            }
            let chi = window.weight(mesh.t[i] - mesh.t[j]);
            let b = wt.pair(i, j);
            let full = Complex64::new(0.0, 0.25) * b.h0;
            *out = if chi == 0.0 {
                full * tables.h
            } else {
                let log = tables.log_kernel(i, j);
                let m1 = -b.j0 / (4.0 * PI);
                m1 * (chi * tables.r(i, j)) + (full - m1 * (chi * log)) * tables.h
            };
        }
    }))
}

fn is_real(k: Complex64) -> bool {
    k.im == 0.0
}

/// `S_k` for real `k`, or the windowed `S_kappa` for `Im kappa > 0`.
pub fn assemble_single(k: Complex64, mesh: &GradedMesh, tables: &QuadratureTables) -> Result<DenseOperator> {
    if is_real(k) {
        let wt = WavenumberTable::build(mesh, k, None)?;
        assemble_single_with(mesh, tables, &wt)
    } else {
        let w = Window::adaptive(k, mesh);
        let wt = WavenumberTable::build(mesh, k, Some(&w))?;
        assemble_single_windowed(mesh, tables, &wt, &w)
    }
}

pub fn assemble_double(k: f64, mesh: &GradedMesh, tables: &QuadratureTables) -> Result<DenseOperator> {
    let wt = WavenumberTable::build(mesh, Complex64::new(k, 0.0), None)?;
    assemble_double_with(mesh, tables, &wt)
}

pub fn assemble_adjdouble_w(k: f64, mesh: &GradedMesh, tables: &QuadratureTables) -> Result<DenseOperator> {
    let wt = WavenumberTable::build(mesh, Complex64::new(k, 0.0), None)?;
    assemble_adjdouble_with(mesh, tables, &wt)
}

/// `N_k^w` for real `k`, or `N_kappa^w = (N_kappa^w - N_{Re kappa}^w) + N_{Re kappa}^w`.
pub fn assemble_hyper_w(k: Complex64, mesh: &GradedMesh, tables: &QuadratureTables) -> Result<HyperOperator> {
    let k0 = Complex64::new(k.re, 0.0);
    let wt0 = WavenumberTable::build(mesh, k0, None)?;
    let base = assemble_hyper_with(mesh, tables, &wt0)?;
    if is_real(k) {
        return Ok(base);
    }
    let w = Window::adaptive(k, mesh);
    let wt = WavenumberTable::build(mesh, k, Some(&w))?;
    let diff = assemble_hyper_diff_with(mesh, tables, &wt, &wt0, Some(&w))?;
    base.shifted(&diff)
}

pub fn assemble_hyper_diff_w(k1: f64, k2: f64, mesh: &GradedMesh, tables: &QuadratureTables) -> Result<DenseOperator> {
    let wt1 = WavenumberTable::build(mesh, Complex64::new(k1, 0.0), None)?;
    let wt2 = WavenumberTable::build(mesh, Complex64::new(k2, 0.0), None)?;
    assemble_hyper_diff_with(mesh, tables, &wt1, &wt2, None)
}

/// Fourier-multiplier surrogate `PS_{S,kappa}` or `PS_{N,kappa}^w`: the
/// circulant matrix of `sigma(m)` acting on parameter-space Fourier modes.
///
/// Both symbols act on the parametric frequency directly, so the hypersingular
/// surrogate shares its leading behavior `-|m|/2` with the cotangent part of
/// `N_k^w`.
pub fn assemble_ps(kind: MultiplierKind, kappa: Complex64, mesh: &GradedMesh) -> Result<DenseOperator> {
    symbol(kind, kappa, 0)?;
    let m = mesh.len();
    let row = symbol_row(mesh.n, |f| symbol(kind, kappa, f).expect("kappa checked"));
    let label = match kind {
        MultiplierKind::Single => format!("PS_S[{kappa}]"),
        MultiplierKind::Hyper => format!("PS_N[{kappa}]"),
    };
    Ok(DenseOperator::from_rows(m, label, |i, out| {
        for (j, v) in out.iter_mut().enumerate() {
            *v = row[(i + m - j) % m];
        }
    }))
}

/// Which operators an [`OperatorSet`] should assemble.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OperatorNeeds {
    pub single: bool,
    pub double: bool,
    pub adjdouble: bool,
    pub hyper: bool,
    pub hyper_diff: bool,
    pub kappa: bool,
    pub principal_symbol: bool,
}

impl OperatorNeeds {
    pub fn union(self, o: OperatorNeeds) -> OperatorNeeds {
        OperatorNeeds {
            single: self.single || o.single,
            double: self.double || o.double,
            adjdouble: self.adjdouble || o.adjdouble,
            hyper: self.hyper || o.hyper,
            hyper_diff: self.hyper_diff || o.hyper_diff,
            kappa: self.kappa || o.kappa,
            principal_symbol: self.principal_symbol || o.principal_symbol,
        }
    }
}

/// Operators for both media (index 1 exterior, 2 interior) on one mesh.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub k1: f64,
    pub k2: f64,
    pub kappa: Option<Complex64>,
    pub s1: Option<DenseOperator>,
    pub s2: Option<DenseOperator>,
    pub d1: Option<DenseOperator>,
    pub d2: Option<DenseOperator>,
    pub kt1: Option<DenseOperator>,
    pub kt2: Option<DenseOperator>,
    pub n1: Option<HyperOperator>,
    pub n2: Option<HyperOperator>,
    pub ndiff: Option<DenseOperator>,
    pub s_kappa: Option<DenseOperator>,
    pub n_kappa: Option<HyperOperator>,
    pub ps_s: Option<DenseOperator>,
    pub ps_n: Option<DenseOperator>,
}

fn require<'a, T>(op: &'a Option<T>, name: &'static str) -> Result<&'a T> {
    op.as_ref().ok_or(Error::MissingOperator(name))
}

impl OperatorSet {
    pub fn build(
        mesh: &GradedMesh,
        tables: &QuadratureTables,
        k1: f64,
        k2: f64,
        kappa: Option<Complex64>,
        needs: OperatorNeeds,
    ) -> Result<Self> {
        let c = |k: f64| Complex64::new(k, 0.0);
        let any_real = needs.single || needs.double || needs.adjdouble || needs.hyper || needs.hyper_diff;
        let (wt1, wt2) = if any_real {
            (Some(WavenumberTable::build(mesh, c(k1), None)?), Some(WavenumberTable::build(mesh, c(k2), None)?))
        } else {
            (None, None)
        };
        let both = |f: &dyn Fn(&WavenumberTable) -> Result<DenseOperator>, on: bool| -> Result<(Option<DenseOperator>, Option<DenseOperator>)> {
            if !on {
                return Ok((None, None));
            }
            Ok((Some(f(wt1.as_ref().unwrap())?), Some(f(wt2.as_ref().unwrap())?)))
        };
        let (s1, s2) = both(&|wt| assemble_single_with(mesh, tables, wt), needs.single)?;
        let (d1, d2) = both(&|wt| assemble_double_with(mesh, tables, wt), needs.double)?;
        let (kt1, kt2) = both(&|wt| assemble_adjdouble_with(mesh, tables, wt), needs.adjdouble)?;
        let (n1, n2) = if needs.hyper {
            (
                Some(assemble_hyper_with(mesh, tables, wt1.as_ref().unwrap())?),
                Some(assemble_hyper_with(mesh, tables, wt2.as_ref().unwrap())?),
            )
        } else {
            (None, None)
        };
        let ndiff = if needs.hyper_diff {
            Some(assemble_hyper_diff_with(mesh, tables, wt1.as_ref().unwrap(), wt2.as_ref().unwrap(), None)?)
        } else {
            None
        };
        drop((wt1, wt2));
        let need_kappa = needs.kappa || needs.principal_symbol;
        let kap = match (need_kappa, kappa) {
            (false, _) => None,
            (true, Some(z)) if z.im > 0.0 => Some(z),
            (true, z) => return Err(Error::RealKappa(format!("{z:?}"))),
        };
        let (mut s_kappa, mut n_kappa, mut ps_s, mut ps_n) = (None, None, None, None);
        if let (true, Some(z)) = (needs.kappa, kap) {
            let w = Window::adaptive(z, mesh);
            let wt = WavenumberTable::build(mesh, z, Some(&w))?;
            let wt0 = WavenumberTable::build(mesh, c(z.re), None)?;
            s_kappa = Some(assemble_single_windowed(mesh, tables, &wt, &w)?);
            let diff = assemble_hyper_diff_with(mesh, tables, &wt, &wt0, Some(&w))?;
            n_kappa = Some(assemble_hyper_with(mesh, tables, &wt0)?.shifted(&diff)?);
        }
        if let (true, Some(z)) = (needs.principal_symbol, kap) {
            ps_s = Some(assemble_ps(MultiplierKind::Single, z, mesh)?);
            ps_n = Some(assemble_ps(MultiplierKind::Hyper, z, mesh)?);
        }
        Ok(Self { k1, k2, kappa: kap, s1, s2, d1, d2, kt1, kt2, n1, n2, ndiff, s_kappa, n_kappa, ps_s, ps_n })
    }

    pub fn s1(&self) -> Result<&DenseOperator> {
        require(&self.s1, "S1")
    }
    pub fn s2(&self) -> Result<&DenseOperator> {
        require(&self.s2, "S2")
    }
    pub fn d1(&self) -> Result<&DenseOperator> {
        require(&self.d1, "K1")
    }
    pub fn d2(&self) -> Result<&DenseOperator> {
        require(&self.d2, "K2")
    }
    pub fn kt1(&self) -> Result<&DenseOperator> {
        require(&self.kt1, "KT1")
    }
    pub fn kt2(&self) -> Result<&DenseOperator> {
        require(&self.kt2, "KT2")
    }
    pub fn n1(&self) -> Result<&HyperOperator> {
        require(&self.n1, "N1")
    }
    pub fn n2(&self) -> Result<&HyperOperator> {
        require(&self.n2, "N2")
    }
    pub fn ndiff(&self) -> Result<&DenseOperator> {
        require(&self.ndiff, "N1-N2")
    }
    pub fn s_kappa(&self) -> Result<&DenseOperator> {
        require(&self.s_kappa, "S_kappa")
    }
    pub fn n_kappa(&self) -> Result<&HyperOperator> {
        require(&self.n_kappa, "N_kappa")
    }
    pub fn ps_s(&self) -> Result<&DenseOperator> {
        require(&self.ps_s, "PS_S")
    }
    pub fn ps_n(&self) -> Result<&DenseOperator> {
        require(&self.ps_n, "PS_N")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, Curve};
    use crate::quadrature::build_tables;
    use crate::specfun::bessel_jy_orders;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn circle(n: usize) -> (GradedMesh, QuadratureTables) {
        (build_mesh(&Curve::circle(1.0).unwrap(), n, 3).unwrap(), build_tables(n).unwrap())
    }

    fn mode(mesh: &GradedMesh, m: i64) -> Vec<Complex64> {
        mesh.t.iter().map(|t| Complex64::from_polar(1.0, m as f64 * t)).collect()
    }

    /// Unit-circle eigenvalues `(S, K, KT, N)` of mode `m` at wavenumber `k`.
    fn circle_eigs(k: f64, m: usize) -> [Complex64; 4] {
        let (j, y) = bessel_jy_orders(k, m + 1).unwrap();
        let jm = j[m];
        let hm = Complex64::new(j[m], y[m]);
        let (jp, hp) = if m == 0 {
            (-j[1], Complex64::new(-j[1], -y[1]))
        } else {
            (0.5 * (j[m - 1] - j[m + 1]), Complex64::new(0.5 * (j[m - 1] - j[m + 1]), 0.5 * (y[m - 1] - y[m + 1])))
        };
        let i = Complex64::i();
        let s = i * PI / 2.0 * jm * hm;
        let kk = i * PI * k / 2.0 * jm * hp + 0.5;
        let kt = i * PI * k / 2.0 * jp * hm - 0.5;
        let n = i * PI * k * k / 2.0 * jp * hp;
        [s, kk, kt, n]
    }

    fn max_dev(a: &[Complex64], b: &[Complex64], lam: Complex64) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - lam * y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn circle_eigenvalues() {
        let (mesh, tables) = circle(32);
        let k = 1.7;
        let s = assemble_single(c(k), &mesh, &tables).unwrap();
        let d = assemble_double(k, &mesh, &tables).unwrap();
        let kt = assemble_adjdouble_w(k, &mesh, &tables).unwrap();
        let n = assemble_hyper_w(c(k), &mesh, &tables).unwrap();
        for m in [0i64, 1, 3, -5, 9] {
            let v = mode(&mesh, m);
            let [ls, lk, lkt, ln] = circle_eigs(k, m.unsigned_abs() as usize);
            assert!(max_dev(&s.apply(&v), &v, ls) < 1e-12, "S m={m}");
            assert!(max_dev(&d.apply(&v), &v, lk) < 1e-12, "K m={m}");
            assert!(max_dev(&kt.apply(&v), &v, lkt) < 1e-12, "KT m={m}");
            assert!(max_dev(&n.apply(&v), &v, ln) < 1e-10 * (1.0 + ln.norm()), "N m={m}");
        }
    }

    #[test]
    fn hyper_difference_matches_full_operators() {
        let (mesh, tables) = circle(32);
        let n1 = assemble_hyper_w(c(3.0), &mesh, &tables).unwrap();
        let n2 = assemble_hyper_w(c(1.2), &mesh, &tables).unwrap();
        let nd = assemble_hyper_diff_w(3.0, 1.2, &mesh, &tables).unwrap();
        for m in [0i64, 2, 7] {
            let v = mode(&mesh, m);
            let a = n1.apply(&v);
            let b = n2.apply(&v);
            let d = nd.apply(&v);
            for i in 0..v.len() {
                assert!((a[i] - b[i] - d[i]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn equal_wavenumbers_give_zero_difference() {
        let (mesh, tables) = circle(16);
        let nd = assemble_hyper_diff_w(2.0, 2.0, &mesh, &tables).unwrap();
        assert!(nd.entries().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn windowed_complex_operators_on_circle() {
        use crate::specfun::{h01, j01};
        let kappa = Complex64::new(2.0, 1.5);
        let (j0, j1) = j01(kappa);
        let (h0, h1) = h01(kappa);
        let i = Complex64::i();
        // m = 0 and m = 1 eigenvalues with J_0' = -J_1 and H_1' = H_0 - H_1 / kappa.
        let s_eig = [i * PI / 2.0 * j0 * h0, i * PI / 2.0 * j1 * h1];
        let jp1 = j0 - j1 / kappa;
        let hp1 = h0 - h1 / kappa;
        let n_eig = [i * PI / 2.0 * kappa * kappa * j1 * h1, i * PI / 2.0 * kappa * kappa * jp1 * hp1];
        let mut prev = f64::INFINITY;
        for n in [32, 64, 128] {
            let (mesh, tables) = circle(n);
            let s = assemble_single(kappa, &mesh, &tables).unwrap();
            let nk = assemble_hyper_w(kappa, &mesh, &tables).unwrap();
            for m in [0usize, 1] {
                let v = mode(&mesh, m as i64);
                let es = max_dev(&s.apply(&v), &v, s_eig[m]);
                let en = max_dev(&nk.apply(&v), &v, n_eig[m]);
                let worst = es.max(en);
                assert!(m == 1 || worst < prev / 30.0, "n={n}: {worst:e} after {prev:e}");
                if m == 0 {
                    prev = worst;
                }
                if n == 128 {
                    assert!(worst < 1e-10, "n={n} m={m} S {es:e} N {en:e}");
                }
            }
        }
    }

    #[test]
    fn window_profile() {
        let w = Window::new(1.0).unwrap();
        assert_eq!(w.weight(0.2), 1.0);
        assert_eq!(w.weight(-0.5), 1.0);
        assert_eq!(w.weight(1.0), 0.0);
        assert_eq!(w.weight(2.0 * PI + 0.1), 1.0);
        let mid = w.weight(0.75);
        assert!(mid > 0.0 && mid < 1.0);
        assert!(w.weight(0.6) > w.weight(0.9));
    }

    #[test]
    fn ps_single_on_modes() {
        let (mesh, _) = circle(16);
        let kappa = Complex64::new(2.5, 1.0);
        let ps = assemble_ps(MultiplierKind::Single, kappa, &mesh).unwrap();
        for m in [0i64, 1, -4, 7] {
            let v = mode(&mesh, m);
            let lam = symbol(MultiplierKind::Single, kappa, m).unwrap();
            assert!(max_dev(&ps.apply(&v), &v, lam) < 1e-13);
        }
        assert!(assemble_ps(MultiplierKind::Hyper, c(2.0), &mesh).is_err());
    }

    #[test]
    fn missing_operator_is_reported() {
        let (mesh, tables) = circle(8);
        let ops = OperatorSet::build(&mesh, &tables, 1.0, 2.0, None, OperatorNeeds { single: true, ..Default::default() }).unwrap();
        assert!(ops.s1().is_ok());
        assert!(matches!(ops.kt1(), Err(Error::MissingOperator(_))));
    }

    #[test]
    fn packed_index_is_bijective() {
        let m = 7;
        let mut seen = vec![false; m * (m - 1) / 2];
        for i in 0..m {
            for j in i + 1..m {
                let p = packed(i, j, m);
                assert!(!seen[p]);
                seen[p] = true;
                assert_eq!(p, packed(j, i, m));
            }
        }
        assert!(seen.iter().all(|s| *s));
    }
}
