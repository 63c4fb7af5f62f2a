//! Transmission problem data and the discrete linear systems for the
//! CFIEFK, CFIEFK², CFIESK, CFIER, CFIERPS and SCFIE formulations.
//!
//! Two-trace systems act on `[dirichlet; neumann_w]`, where `neumann_w` is the
//! exterior Neumann trace of the total field multiplied by `|x'(t)|`.

use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{GradedMesh, Vec2};
use crate::operators::{DenseOperator, LinearMap, OperatorNeeds, OperatorSet};

/// How the contrast `rho` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoMode {
    One,
    KRatio,
}

impl FromStr for RhoMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "one" | "1" => Ok(RhoMode::One),
            "k_ratio" => Ok(RhoMode::KRatio),
            other => Err(Error::Domain(format!("unknown rho mode `{other}` (expected `one` or `k_ratio`)"))),
        }
    }
}

/// Wavenumbers, contrast, coupling constants and incidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionProblem {
    pub k1: f64,
    pub k2: f64,
    pub rho: f64,
    pub eta: f64,
    pub kappa: Complex64,
    pub direction: Vec2,
}

impl TransmissionProblem {
    /// Defaults: `eta = k1`, `kappa = (k1 + k2)/2 + i k1`, incidence `(0, -1)`.
    pub fn new(k1: f64, k2: f64, mode: RhoMode) -> Result<Self> {
        let rho = match mode {
            RhoMode::One => 1.0,
            RhoMode::KRatio => k1 * k1 / (k2 * k2),
        };
        let p = Self {
            k1,
            k2,
            rho,
            eta: k1,
            kappa: Complex64::new(0.5 * (k1 + k2), k1),
            direction: [0.0, -1.0],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_kappa(mut self, kappa: Complex64) -> Result<Self> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        self.rho = rho;
        self.validate()?;
        Ok(self)
    }

    pub fn with_direction(mut self, d: Vec2) -> Result<Self> {
        self.direction = d;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.k1, self.k2, self.rho, self.eta, self.kappa.re, self.kappa.im];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("problem parameters must be finite".into()));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(Error::Domain(format!("wavenumbers must be positive (k1 = {}, k2 = {})", self.k1, self.k2)));
        }
        if !(self.rho > 0.0) {
            return Err(Error::Domain(format!("contrast rho = {} must be positive", self.rho)));
        }
        if self.eta == 0.0 {
            return Err(Error::Domain("coupling eta must be nonzero".into()));
        }
        if !(self.kappa.im > 0.0) {
            return Err(Error::RealKappa(self.kappa.to_string()));
        }
        let norm = self.direction[0].hypot(self.direction[1]);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("incidence direction has length {norm}, expected 1")));
        }
        Ok(())
    }
}

/// Boundary traces of the total exterior field at the mesh nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceVector {
    pub dirichlet: Vec<Complex64>,
    pub neumann_w: Vec<Complex64>,
}

impl TraceVector {
    pub fn zeros(m: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self { dirichlet: vec![z; m], neumann_w: vec![z; m] }
    }

    pub fn len(&self) -> usize {
        self.dirichlet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirichlet.is_empty()
    }

    fn stacked(&self) -> Vec<Complex64> {
        self.dirichlet.iter().chain(self.neumann_w.iter()).copied().collect()
    }
}

/// Plane-wave traces `(u_inc(x(t_i)), i k1 (d . nu(t_i)) u_inc(x(t_i)))`.
pub fn incident_traces(problem: &TransmissionProblem, mesh: &GradedMesh) -> TraceVector {
    let d = problem.direction;
    let k = problem.k1;
    let dirichlet: Vec<Complex64> =
        mesh.x.iter().map(|x| Complex64::from_polar(1.0, k * (x[0] * d[0] + x[1] * d[1]))).collect();
    let neumann_w = dirichlet
        .iter()
        .zip(&mesh.normal)
        .map(|(u, nu)| u * Complex64::new(0.0, k * (d[0] * nu[0] + d[1] * nu[1])))
        .collect();
    TraceVector { dirichlet, neumann_w }
}

/// The available integral equation formulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    Cfiefk,
    Cfiefk2,
    Cfiesk,
    Cfier,
    Cfierps,
    Scfie,
}

impl Formulation {
    pub const ALL: [Formulation; 6] = [
        Formulation::Cfiefk,
        Formulation::Cfiefk2,
        Formulation::Cfiesk,
        Formulation::Cfier,
        Formulation::Cfierps,
        Formulation::Scfie,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formulation::Cfiefk => "cfiefk",
            Formulation::Cfiefk2 => "cfiefk2",
            Formulation::Cfiesk => "cfiesk",
            Formulation::Cfier => "cfier",
            Formulation::Cfierps => "cfierps",
            Formulation::Scfie => "scfie",
        }
    }

    /// Default sigmoid order: 4 for SCFIE, 3 otherwise.
    pub fn default_p(self) -> u32 {
        if self == Formulation::Scfie {
            4
        } else {
            3
        }
    }

    /// System size for `2n` mesh nodes.
    pub fn system_size(self, nodes: usize) -> usize {
        if self == Formulation::Scfie {
            nodes
        } else {
            2 * nodes
        }
    }

    pub fn needs(self) -> OperatorNeeds {
        let first_kind = OperatorNeeds { single: true, double: true, adjdouble: true, hyper: true, ..Default::default() };
        let second_kind =
            OperatorNeeds { single: true, double: true, adjdouble: true, hyper_diff: true, ..Default::default() };
        match self {
            Formulation::Cfiefk | Formulation::Cfiefk2 => first_kind,
            Formulation::Cfiesk | Formulation::Scfie => second_kind,
            Formulation::Cfier => first_kind.union(second_kind).union(OperatorNeeds { kappa: true, ..Default::default() }),
            Formulation::Cfierps => {
                first_kind.union(second_kind).union(OperatorNeeds { principal_symbol: true, ..Default::default() })
            }
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        Formulation::ALL
            .iter()
            .copied()
            .find(|f| f.name() == key || (key == "cfiefk²" && *f == Formulation::Cfiefk2))
            .ok_or_else(|| Error::Domain(format!("unknown formulation `{s}`")))
    }
}

fn add(a: &mut [Complex64], b: &[Complex64], c: Complex64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += c * y;
    }
}

fn axpy(a: &[Complex64], ca: Complex64, b: &[Complex64], cb: Complex64) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// A square linear system `A x = b` expressed through operator actions.
pub struct LinearSystem<'a> {
    pub kind: Formulation,
    pub rhs: Vec<Complex64>,
    ops: &'a OperatorSet,
    rho: f64,
    eta: f64,
    nodes: usize,
}

impl<'a> LinearSystem<'a> {
    pub fn size(&self) -> usize {
        self.kind.system_size(self.nodes)
    }

    /// CFK block operator on stacked traces.
    fn cfk(&self, x: &[Complex64]) -> Vec<Complex64> {
        let o = self.ops;
        let (u, v) = x.split_at(self.nodes);
        let r = self.rho;
        let (d1, d2) = (o.d1.as_ref().unwrap(), o.d2.as_ref().unwrap());
        let mut top = axpy(&d1.apply(u), re(-1.0), &d2.apply(u), re(-1.0));
        add(&mut top, &o.s1.as_ref().unwrap().apply(v), re(1.0));
        add(&mut top, &o.s2.as_ref().unwrap().apply(v), re(1.0 / r));
        let mut bot = axpy(&o.n1.as_ref().unwrap().apply(u), re(-1.0), &o.n2.as_ref().unwrap().apply(u), re(-r));
        add(&mut bot, &o.kt1.as_ref().unwrap().apply(v), re(1.0));
        add(&mut bot, &o.kt2.as_ref().unwrap().apply(v), re(1.0));
        top.extend(bot);
        top
    }

    /// CSK block operator on stacked traces.
    fn csk(&self, x: &[Complex64]) -> Vec<Complex64> {
        let o = self.ops;
        let (u, v) = x.split_at(self.nodes);
        let r = self.rho;
        let c = re(0.5 * (1.0 / r + 1.0));
        let mut top = axpy(&o.d2.as_ref().unwrap().apply(u), re(1.0), &o.d1.as_ref().unwrap().apply(u), re(-1.0 / r));
        add(&mut top, u, c);
        add(&mut top, &o.s1.as_ref().unwrap().apply(v), re(1.0 / r));
        add(&mut top, &o.s2.as_ref().unwrap().apply(v), re(-1.0 / r));
        let mut bot = o.ndiff.as_ref().unwrap().apply(u);
        bot.iter_mut().for_each(|z| *z = -*z);
        add(&mut bot, v, c);
        add(&mut bot, &o.kt1.as_ref().unwrap().apply(v), re(1.0));
        add(&mut bot, &o.kt2.as_ref().unwrap().apply(v), re(-1.0 / r));
        top.extend(bot);
        top
    }

    /// `[[0, S], [-rho N, 0]] y` with either the complex-wavenumber operators
    /// or their principal-symbol surrogates.
    fn regularizer(&self, y: &[Complex64], c_top: f64, c_bot: f64) -> Vec<Complex64> {
        let o = self.ops;
        let (u, v) = y.split_at(self.nodes);
        let (mut top, bot) = if self.kind == Formulation::Cfierps {
            (o.ps_s.as_ref().unwrap().apply(v), o.ps_n.as_ref().unwrap().apply(u))
        } else {
            (o.s_kappa.as_ref().unwrap().apply(v), o.n_kappa.as_ref().unwrap().apply(u))
        };
        top.iter_mut().for_each(|z| *z *= c_top);
        top.extend(bot.into_iter().map(|z| z * (-self.rho * c_bot)));
        top
    }

    fn scfie(&self, mu: &[Complex64]) -> Vec<Complex64> {
        let o = self.ops;
        let r = self.rho;
        let kt1 = o.kt1.as_ref().unwrap();
        let kt2 = o.kt2.as_ref().unwrap();
        let a = kt2.apply(mu);
        let b = o.s2.as_ref().unwrap().apply(mu);
        let mu_plus = axpy(mu, re(1.0), &a, re(2.0));
        let mut kw = kt2.apply(&axpy(mu, re(r), &a, re(-2.0)));
        kw.iter_mut().for_each(|z| *z = -*z);
        add(&mut kw, &kt1.apply(&mu_plus), re(-r));
        add(&mut kw, &o.ndiff.as_ref().unwrap().apply(&b), re(2.0));
        let mut sw = o.s1.as_ref().unwrap().apply(&mu_plus);
        sw.iter_mut().for_each(|z| *z *= -r);
        add(&mut sw, &b, re(-1.0));
        add(&mut sw, &o.d1.as_ref().unwrap().apply(&b), re(2.0));
        let ieta = Complex64::new(0.0, self.eta);
        mu.iter()
            .zip(kw.iter().zip(&sw))
            .map(|(m, (k, s))| -0.5 * (1.0 + r) * m + k - ieta * s)
            .collect()
    }

    /// Converts a solution vector into boundary traces of the total field.
    pub fn traces(&self, x: &[Complex64]) -> Result<TraceVector> {
        if x.len() != self.size() {
            return Err(Error::LengthMismatch { expected: self.size(), got: x.len() });
        }
        if self.kind != Formulation::Scfie {
            let (u, v) = x.split_at(self.nodes);
            return Ok(TraceVector { dirichlet: u.to_vec(), neumann_w: v.to_vec() });
        }
        scfie_to_traces(self.ops, self.rho, x)
    }
}

impl LinearMap for LinearSystem<'_> {
    fn dim(&self) -> usize {
        self.size()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.size(), "system length mismatch");
        match self.kind {
            Formulation::Cfiefk => self.cfk(x),
            Formulation::Cfiefk2 => self.cfk(&self.cfk(x)),
            Formulation::Cfiesk => self.csk(x),
            Formulation::Cfier | Formulation::Cfierps => {
                let r = self.rho;
                let mut y = self.csk(x);
                y.iter_mut().for_each(|z| *z *= r / (r + 1.0));
                let reg = self.regularizer(&self.cfk(x), 2.0 / (1.0 + r), 2.0 / (1.0 + r));
                add(&mut y, &reg, re(1.0));
                y
            }
            Formulation::Scfie => self.scfie(x),
        }
    }
}

fn check_ops(kind: Formulation, ops: &OperatorSet) -> Result<()> {
    let n = kind.needs();
    if n.single {
        ops.s1()?;
        ops.s2()?;
    }
    if n.double {
        ops.d1()?;
        ops.d2()?;
    }
    if n.adjdouble {
        ops.kt1()?;
        ops.kt2()?;
    }
    if n.hyper {
        ops.n1()?;
        ops.n2()?;
    }
    if n.hyper_diff {
        ops.ndiff()?;
    }
    if n.kappa {
        ops.s_kappa()?;
        ops.n_kappa()?;
    }
    if n.principal_symbol {
        ops.ps_s()?;
        ops.ps_n()?;
    }
    Ok(())
}

/// Builds the system and right-hand side for plane-wave incidence.
pub fn build_system<'a>(
    kind: Formulation,
    problem: &TransmissionProblem,
    mesh: &GradedMesh,
    ops: &'a OperatorSet,
) -> Result<LinearSystem<'a>> {
    problem.validate()?;
    check_ops(kind, ops)?;
    let nodes = mesh.len();
    let dim = ops.s1()?.dim();
    if dim != nodes {
        return Err(Error::LengthMismatch { expected: nodes, got: dim });
    }
    if ops.k1 != problem.k1 || ops.k2 != problem.k2 {
        return Err(Error::Domain("operators were assembled for different wavenumbers".into()));
    }
    let inc = incident_traces(problem, mesh);
    let mut sys = LinearSystem { kind, rhs: Vec::new(), ops, rho: problem.rho, eta: problem.eta, nodes };
    sys.rhs = system_rhs(&sys, &inc);
    Ok(sys)
}

fn system_rhs(sys: &LinearSystem<'_>, inc: &TraceVector) -> Vec<Complex64> {
    let r = sys.rho;
    let b = inc.stacked();
    match sys.kind {
        Formulation::Cfiefk => b,
        Formulation::Cfiefk2 => sys.cfk(&b),
        Formulation::Cfiesk => {
            let mut v = b;
            v[..sys.nodes].iter_mut().for_each(|z| *z /= r);
            v
        }
        Formulation::Cfier | Formulation::Cfierps => {
            let mut v: Vec<Complex64> = inc.dirichlet.iter().map(|z| z / (r + 1.0)).collect();
            v.extend(inc.neumann_w.iter().map(|z| z * (r / (r + 1.0))));
            let reg = sys.regularizer(&b, 2.0 / (r + 1.0), 2.0 / (r + 1.0));
            add(&mut v, &reg, re(1.0));
            v
        }
        Formulation::Scfie => {
            let ieta = Complex64::new(0.0, sys.eta);
            inc.neumann_w.iter().zip(&inc.dirichlet).map(|(n, d)| n - ieta * d).collect()
        }
    }
}

/// Traces `gamma_D = -2 S_2 mu`, `gamma_N^w = -rho (mu + 2 K_2^{T,w} mu)` from the SCFIE density.
pub fn scfie_to_traces(ops: &OperatorSet, rho: f64, mu: &[Complex64]) -> Result<TraceVector> {
    let s2: &DenseOperator = ops.s2()?;
    let kt2 = ops.kt2()?;
    if mu.len() != s2.dim() {
        return Err(Error::LengthMismatch { expected: s2.dim(), got: mu.len() });
    }
    let dirichlet = s2.apply(mu).into_iter().map(|z| -2.0 * z).collect();
    let neumann_w = axpy(mu, re(-rho), &kt2.apply(mu), re(-2.0 * rho));
    Ok(TraceVector { dirichlet, neumann_w })
}

/// Roots of `x^3 - 3 beta x^2 + beta`, `beta = (rho + 1) / (2 (rho - 1))`.
///
/// Uses the trigonometric form when all three roots are real and
/// Cardano's formula otherwise; returned roots are complex in general.
pub fn contrast_cubic_roots(rho: f64) -> Result<[Complex64; 3]> {
    if rho == 1.0 || !(rho > 0.0) {
        return Err(Error::Domain(format!("cubic is undefined for rho = {rho}")));
    }
    let beta = (rho + 1.0) / (2.0 * (rho - 1.0));
    // x = y + beta: y^3 + p y + q = 0
    let p = -3.0 * beta * beta;
    let q = -2.0 * beta.powi(3) + beta;
    let disc = -(4.0 * p.powi(3) + 27.0 * q * q);
    if disc >= 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let roots = [0, 1, 2].map(|j| re(m * (theta - 2.0 * std::f64::consts::PI * j as f64 / 3.0).cos() + beta));
        Ok(roots)
    } else {
        let d = (q * q / 4.0 + p.powi(3) / 27.0).sqrt();
        let u = (-q / 2.0 + d).cbrt();
        let v = (-q / 2.0 - d).cbrt();
        let w = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
        let (uc, vc) = (re(u), re(v));
        Ok([uc + vc + beta, w * uc + w.conj() * vc + beta, w.conj() * uc + w * vc + beta])
    }
}
