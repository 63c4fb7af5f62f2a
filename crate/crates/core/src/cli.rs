//! Run configuration and the `solve`, `convergence` and `bench` drivers.
//!
//! A configuration file holds one `section.key = value` per line; `#` starts
//! a comment. Keys:
//!
//! | key | value |
//! |-----|-------|
//! | `geometry.kind` | `square`, `ushape`, `lq_ball`, `circle` or `polygon` |
//! | `geometry.side`, `geometry.notch_width`, `geometry.notch_depth` | square and U-shape sizes |
//! | `geometry.q`, `geometry.radius` | `lq_ball` exponent, `lq_ball` or circle radius |
//! | `geometry.vertices` | polygon vertices, `x y; x y; ...` counter-clockwise |
//! | `physics.k1`, `physics.k2` | wavenumbers (omit when `bench.rows` is given) |
//! | `physics.rho_mode` | `one` or `k_ratio` |
//! | `physics.eta` | SCFIE coupling, default `k1` |
//! | `physics.kappa_re`, `physics.kappa_im` | regularization wavenumber, default `(k1 + k2)/2 + i k1` |
//! | `physics.incidence_angle` | plane-wave direction in radians, default `-pi/2` |
//! | `discretization.unknowns` | comma-separated list; mesh has `unknowns / 2` nodes |
//! | `discretization.p` | sigmoid order for every formulation (default 3, SCFIE 4) |
//! | `formulation.names` | comma-separated list or `all` |
//! | `gmres.tol`, `gmres.max_iter` | relative residual target and iteration cap |
//! | `farfield.num_dirs` | number of far-field directions |
//! | `reference.factor` | refinement of the CFIESK reference; `0` disables it |
//! | `bench.rows` | `k1 k2 unknowns; ...` |
//! | `output.csv_path`, `output.farfield_path` | output files |
//! | `run.threads` | worker threads (overridden by `BIE2D_THREADS`) |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::formulations::{build_system, Formulation, RhoMode, TransmissionProblem};
use crate::geometry::{build_mesh, builtin_geometry, GeometryKind};
use crate::linalg::gmres;
use crate::operators::{LinearMap, OperatorNeeds, OperatorSet};
use crate::postprocess::{far_field, max_far_error, uniform_angles, FarField, DEFAULT_DIRECTIONS};
use crate::quadrature::build_tables;

/// Exact CSV header of every result table.
pub const CSV_HEADER: &str = "formulation,k1,k2,rho,unknowns,p,gmres_tol,iterations,eps_inf,matvec_ms,total_ms";

/// GMRES tolerance of the refined reference solve.
pub const REFERENCE_TOL: f64 = 1e-12;

const KEYS: &[&str] = &[
    "geometry.kind",
    "geometry.side",
    "geometry.notch_width",
    "geometry.notch_depth",
    "geometry.q",
    "geometry.radius",
    "geometry.vertices",
    "physics.k1",
    "physics.k2",
    "physics.rho_mode",
    "physics.eta",
    "physics.kappa_re",
    "physics.kappa_im",
    "physics.incidence_angle",
    "discretization.unknowns",
    "discretization.p",
    "formulation.names",
    "gmres.tol",
    "gmres.max_iter",
    "farfield.num_dirs",
    "reference.factor",
    "bench.rows",
    "output.csv_path",
    "output.farfield_path",
    "run.threads",
];

/// Physical parameters; `k1`/`k2` are filled per case.
#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub rho_mode: RhoMode,
    pub eta: Option<f64>,
    pub kappa_re: Option<f64>,
    pub kappa_im: Option<f64>,
    pub incidence_angle: Option<f64>,
}

impl Physics {
    pub fn problem(&self, k1: f64, k2: f64) -> Result<TransmissionProblem> {
        let mut p = TransmissionProblem::new(k1, k2, self.rho_mode)?;
        if let Some(eta) = self.eta {
            p = p.with_eta(eta)?;
        }
        let kappa = Complex64::new(self.kappa_re.unwrap_or(0.5 * (k1 + k2)), self.kappa_im.unwrap_or(k1));
        p = p.with_kappa(kappa)?;
        if let Some(a) = self.incidence_angle {
            p = p.with_direction([a.cos(), a.sin()])?;
        }
        Ok(p)
    }
}

/// One `(k1, k2, unknowns)` configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Case {
    pub k1: f64,
    pub k2: f64,
    pub unknowns: usize,
}

/// Parsed run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: GeometryKind,
    pub physics: Physics,
    pub cases: Vec<Case>,
    pub p: Option<u32>,
    pub formulations: Vec<Formulation>,
    pub gmres_tol: f64,
    pub max_iter: usize,
    pub num_dirs: usize,
    pub reference_factor: usize,
    pub csv_path: Option<PathBuf>,
    pub farfield_path: Option<PathBuf>,
    pub threads: Option<usize>,
}

struct Entries(BTreeMap<String, (usize, String)>);

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected `section.key = value`, found `{body}`")))?;
            let key = key.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(config_err(line, format!("unknown key `{key}`")));
            }
            let value = value.trim();
            if value.is_empty() {
                return Err(config_err(line, format!("missing value for `{key}`")));
            }
            if let Some((first, _)) = map.insert(key.clone(), (line, value.to_string())) {
                return Err(config_err(line, format!("`{key}` already set on line {first}")));
            }
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.0.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => {
                v.parse().map(Some).map_err(|_| config_err(line, format!("cannot parse `{v}` for `{key}`")))
            }
        }
    }

    fn line(&self, key: &str) -> usize {
        self.raw(key).map(|(l, _)| l).unwrap_or(0)
    }

    fn list<T: std::str::FromStr>(&self, key: &str, sep: char) -> Result<Option<Vec<T>>> {
        let Some((line, v)) = self.raw(key) else { return Ok(None) };
        v.split(sep)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| config_err(line, format!("cannot parse `{s}` in `{key}`"))))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(0, format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let e = Entries::parse(text)?;
        let geometry = parse_geometry(&e)?;

        let rho_line = e.line("physics.rho_mode");
        let rho_mode = match e.raw("physics.rho_mode") {
            None => RhoMode::One,
            Some((_, v)) => v.parse().map_err(|err: Error| config_err(rho_line, err.to_string()))?,
        };
        let physics = Physics {
            rho_mode,
            eta: e.get("physics.eta")?,
            kappa_re: e.get("physics.kappa_re")?,
            kappa_im: e.get("physics.kappa_im")?,
            incidence_angle: e.get("physics.incidence_angle")?,
        };

        let cases = match e.raw("bench.rows") {
            Some((line, rows)) => parse_rows(line, rows)?,
            None => {
                let k1 = e.get::<f64>("physics.k1")?.ok_or_else(|| config_err(0, "missing `physics.k1`"))?;
                let k2 = e.get::<f64>("physics.k2")?.ok_or_else(|| config_err(0, "missing `physics.k2`"))?;
                let unknowns = e
                    .list::<usize>("discretization.unknowns", ',')?
                    .ok_or_else(|| config_err(0, "missing `discretization.unknowns`"))?;
                unknowns.into_iter().map(|u| Case { k1, k2, unknowns: u }).collect()
            }
        };
        if cases.is_empty() {
            return Err(config_err(0, "no cases to run"));
        }
        let case_line = e.line("bench.rows").max(e.line("discretization.unknowns"));
        for c in &cases {
            if c.unknowns == 0 || c.unknowns % 4 != 0 {
                return Err(config_err(case_line, format!("unknowns {} must be a positive multiple of 4", c.unknowns)));
            }
            physics.problem(c.k1, c.k2).map_err(|err| config_err(case_line, err.to_string()))?;
        }

        let formulations = match e.raw("formulation.names") {
            None => return Err(config_err(0, "missing `formulation.names`")),
            Some((_, v)) if v.trim().eq_ignore_ascii_case("all") => {
                Formulation::ALL.iter().copied().filter(|f| *f != Formulation::Cfiefk).collect()
            }
            Some((line, v)) => v
                .split(',')
                .map(|s| s.parse::<Formulation>().map_err(|err| config_err(line, err.to_string())))
                .collect::<Result<Vec<_>>>()?,
        };

        let gmres_tol = e.get("gmres.tol")?.unwrap_or(1e-12);
        if !(gmres_tol > 0.0 && gmres_tol < 1.0) {
            return Err(config_err(e.line("gmres.tol"), format!("gmres.tol = {gmres_tol} must lie in (0, 1)")));
        }
        let p: Option<u32> = e.get("discretization.p")?;
        if let Some(p) = p {
            if !(2..=16).contains(&p) {
                return Err(config_err(e.line("discretization.p"), format!("p = {p} must lie in 2..=16")));
            }
        }
        let num_dirs = e.get("farfield.num_dirs")?.unwrap_or(DEFAULT_DIRECTIONS);
        if num_dirs == 0 {
            return Err(config_err(e.line("farfield.num_dirs"), "farfield.num_dirs must be positive"));
        }
        let reference_factor = e.get("reference.factor")?.unwrap_or(2);
        if reference_factor == 1 {
            return Err(config_err(e.line("reference.factor"), "reference.factor must be 0 or at least 2"));
        }
        Ok(Self {
            geometry,
            physics,
            cases,
            p,
            formulations,
            gmres_tol,
            max_iter: e.get("gmres.max_iter")?.unwrap_or(2000),
            num_dirs,
            reference_factor,
            csv_path: e.get::<String>("output.csv_path")?.map(PathBuf::from),
            farfield_path: e.get::<String>("output.farfield_path")?.map(PathBuf::from),
            threads: e.get("run.threads")?,
        })
    }

    fn order(&self, f: Formulation) -> u32 {
        self.p.unwrap_or(f.default_p())
    }
}

fn parse_geometry(e: &Entries) -> Result<GeometryKind> {
    let kind = e.raw("geometry.kind").map(|(_, v)| v.to_ascii_lowercase()).unwrap_or_else(|| "square".into());
    let f = |key: &str, default: f64| -> Result<f64> { Ok(e.get(key)?.unwrap_or(default)) };
    let g = match kind.as_str() {
        "square" => GeometryKind::Square { side: f("geometry.side", 4.0)? },
        "ushape" | "u" => GeometryKind::UShape {
            side: f("geometry.side", 4.0)?,
            notch_width: f("geometry.notch_width", 2.0)?,
            notch_depth: f("geometry.notch_depth", 2.0)?,
        },
        "lq_ball" => GeometryKind::LqBall { q: e.get("geometry.q")?.unwrap_or(512), radius: f("geometry.radius", 2.0)? },
        "circle" => GeometryKind::Circle { radius: f("geometry.radius", 1.0)? },
        "polygon" => {
            let line = e.line("geometry.vertices");
            let pairs: Vec<String> =
                e.list("geometry.vertices", ';')?.ok_or_else(|| config_err(0, "polygon needs `geometry.vertices`"))?;
            let vertices = pairs
                .iter()
                .map(|p| {
                    let xy: Vec<f64> = p.split_whitespace().filter_map(|s| s.parse().ok()).collect();
                    match xy[..] {
                        [x, y] => Ok([x, y]),
                        _ => Err(config_err(line, format!("vertex `{p}` is not `x y`"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            GeometryKind::Polygon { vertices }
        }
        other => return Err(config_err(e.line("geometry.kind"), format!("unknown geometry `{other}`"))),
    };
    builtin_geometry(&g).map_err(|err| config_err(e.line("geometry.kind"), err.to_string()))?;
    Ok(g)
}

fn parse_rows(line: usize, rows: &str) -> Result<Vec<Case>> {
    rows.split(';')
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .map(|r| {
            let parts: Vec<&str> = r.split_whitespace().collect();
            let bad = || config_err(line, format!("bench row `{r}` is not `k1 k2 unknowns`"));
            if parts.len() != 3 {
                return Err(bad());
            }
            Ok(Case {
                k1: parts[0].parse().map_err(|_| bad())?,
                k2: parts[1].parse().map_err(|_| bad())?,
                unknowns: parts[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// One CSV row plus the convergence flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub formulation: Formulation,
    pub k1: f64,
    pub k2: f64,
    pub rho: f64,
    pub unknowns: usize,
    pub p: u32,
    pub gmres_tol: f64,
    pub iterations: usize,
    pub eps_inf: Option<f64>,
    pub matvec_ms: f64,
    /// Operator assembly (shared by formulations with the same `p`), solve and far field.
    pub total_ms: f64,
    pub converged: bool,
}

impl ResultRow {
    pub fn csv(&self) -> String {
        let eps = self.eps_inf.map(|e| format!("{e:.6e}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{:e},{},{},{:.3},{:.1}",
            self.formulation,
            self.k1,
            self.k2,
            self.rho,
            self.unknowns,
            self.p,
            self.gmres_tol,
            self.iterations,
            eps,
            self.matvec_ms,
            self.total_ms
        )
    }
}

/// Rows and far fields of a run, in configuration order.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub rows: Vec<ResultRow>,
    pub far_fields: Vec<FarField>,
}

impl SolveReport {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv());
            s.push('\n');
        }
        s
    }

    pub fn row(&self, f: Formulation, unknowns: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.formulation == f && r.unknowns == unknowns)
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Far field of CFIESK at `unknowns` with `p = 3` and tolerance [`REFERENCE_TOL`].
pub fn reference_far_field(cfg: &RunConfig, problem: &TransmissionProblem, unknowns: usize) -> Result<FarField> {
    let curve = builtin_geometry(&cfg.geometry)?;
    let n = unknowns / 4;
    let mesh = build_mesh(&curve, n, 3)?;
    let tables = build_tables(n)?;
    let ops = OperatorSet::build(&mesh, &tables, problem.k1, problem.k2, None, Formulation::Cfiesk.needs())?;
    let sys = build_system(Formulation::Cfiesk, problem, &mesh, &ops)?;
    let res = gmres(&sys, &sys.rhs, REFERENCE_TOL, cfg.max_iter.max(sys.size()))?.require_converged(REFERENCE_TOL)?;
    far_field(&sys.traces(&res.solution)?, problem, &mesh, &uniform_angles(cfg.num_dirs))
}

/// Solves every configured formulation for one case.
pub fn solve_case(cfg: &RunConfig, case: Case, reference: Option<&FarField>) -> Result<SolveReport> {
    let problem = cfg.physics.problem(case.k1, case.k2)?;
    let curve = builtin_geometry(&cfg.geometry)?;
    let n = case.unknowns / 4;
    let angles = uniform_angles(cfg.num_dirs);
    let mut orders: Vec<u32> = cfg.formulations.iter().map(|f| cfg.order(*f)).collect();
    orders.sort_unstable();
    orders.dedup();
    let mut done: Vec<(Formulation, ResultRow, FarField)> = Vec::new();
    for p in orders {
        let group: Vec<Formulation> = cfg.formulations.iter().copied().filter(|f| cfg.order(*f) == p).collect();
        let t0 = Instant::now();
        let mesh = build_mesh(&curve, n, p)?;
        let tables = build_tables(n)?;
        let needs = group.iter().fold(OperatorNeeds::default(), |acc, f| acc.union(f.needs()));
        let ops = OperatorSet::build(&mesh, &tables, problem.k1, problem.k2, Some(problem.kappa), needs)?;
        let assembly_ms = ms(t0);
        for f in group {
            if done.iter().any(|d| d.0 == f) {
                continue;
            }
            let t1 = Instant::now();
            let sys = build_system(f, &problem, &mesh, &ops)?;
            let tm = Instant::now();
            let _ = sys.apply(&sys.rhs);
            let matvec_ms = ms(tm);
            let res = gmres(&sys, &sys.rhs, cfg.gmres_tol, cfg.max_iter)?;
            let ff = far_field(&sys.traces(&res.solution)?, &problem, &mesh, &angles)?;
            let eps_inf = reference.map(|r| max_far_error(&ff, r)).transpose()?;
            let row = ResultRow {
                formulation: f,
                k1: case.k1,
                k2: case.k2,
                rho: problem.rho,
                unknowns: case.unknowns,
                p,
                gmres_tol: cfg.gmres_tol,
                iterations: res.iterations,
                eps_inf,
                matvec_ms,
                total_ms: assembly_ms + ms(t1),
                converged: res.converged,
            };
            done.push((f, row, ff));
        }
    }
    let mut rows = Vec::new();
    let mut far_fields = Vec::new();
    for f in &cfg.formulations {
        if let Some(pos) = done.iter().position(|d| d.0 == *f) {
            let (_, row, ff) = done.remove(pos);
            rows.push(row);
            far_fields.push(ff);
        }
    }
    Ok(SolveReport { rows, far_fields })
}

/// Runs all cases; cases sharing `(k1, k2)` share one reference at
/// `reference_factor` times their largest unknown count.
pub fn run_cases(cfg: &RunConfig) -> Result<SolveReport> {
    let mut references: Vec<((f64, f64), FarField)> = Vec::new();
    if cfg.reference_factor > 0 {
        for c in &cfg.cases {
            if references.iter().any(|(k, _)| *k == (c.k1, c.k2)) {
                continue;
            }
            let top = cfg.cases.iter().filter(|d| (d.k1, d.k2) == (c.k1, c.k2)).map(|d| d.unknowns).max().unwrap();
            let problem = cfg.physics.problem(c.k1, c.k2)?;
            references.push(((c.k1, c.k2), reference_far_field(cfg, &problem, top * cfg.reference_factor)?));
        }
    }
    let mut report = SolveReport { rows: Vec::new(), far_fields: Vec::new() };
    for c in &cfg.cases {
        let reference = references.iter().find(|(k, _)| *k == (c.k1, c.k2)).map(|(_, r)| r);
        let part = solve_case(cfg, *c, reference)?;
        report.rows.extend(part.rows);
        report.far_fields.extend(part.far_fields);
    }
    Ok(report)
}

/// A single formulation at a single discretization.
pub fn run_solve(cfg: &RunConfig) -> Result<SolveReport> {
    if cfg.cases.len() != 1 || cfg.formulations.len() != 1 {
        return Err(config_err(0, "`solve` needs exactly one unknown count and one formulation"));
    }
    let report = run_cases(cfg)?;
    if let Some(path) = &cfg.farfield_path {
        std::fs::write(path, far_field_csv(&report.far_fields[0]))?;
    }
    persist(cfg, &report)?;
    Ok(report)
}

/// Error and iteration table over a list of unknown counts.
pub fn run_convergence(cfg: &RunConfig) -> Result<SolveReport> {
    if cfg.cases.len() < 2 {
        return Err(config_err(0, "`convergence` needs at least two unknown counts"));
    }
    let report = run_cases(cfg)?;
    persist(cfg, &report)?;
    Ok(report)
}

/// Iterations, errors and timings over the `bench.rows` sweep.
pub fn run_bench(cfg: &RunConfig) -> Result<SolveReport> {
    let report = run_cases(cfg)?;
    persist(cfg, &report)?;
    Ok(report)
}

fn persist(cfg: &RunConfig, report: &SolveReport) -> Result<()> {
    if let Some(path) = &cfg.csv_path {
        std::fs::write(path, report.csv())?;
    }
    Ok(())
}

/// `theta,re,im,abs` with 15 significant digits.
pub fn far_field_csv(ff: &FarField) -> String {
    let mut s = String::from("theta,re,im,abs\n");
    for (th, v) in ff.angles.iter().zip(&ff.values) {
        let _ = writeln!(s, "{th:.14e},{:.14e},{:.14e},{:.14e}", v.re, v.im, v.norm());
    }
    s
}

/// `log2(eps_u / eps_2u)` for every formulation with errors at both `u` and `2u`.
pub fn empirical_orders(rows: &[ResultRow]) -> Vec<(Formulation, usize, f64)> {
    let mut out = Vec::new();
    for r in rows {
        let next = rows.iter().find(|s| {
            s.formulation == r.formulation && s.k1 == r.k1 && s.k2 == r.k2 && s.unknowns == 2 * r.unknowns
        });
        if let (Some(a), Some(b)) = (r.eps_inf, next.and_then(|s| s.eps_inf)) {
            out.push((r.formulation, r.unknowns, (a / b).log2()));
        }
    }
    out
}

/// Thread count from `BIE2D_THREADS`, else the configuration.
pub fn thread_count(cfg: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("BIE2D_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(config_err(0, format!("BIE2D_THREADS = `{v}` is not a positive integer"))),
        },
        Err(_) => Ok(cfg),
    }
}

/// Exit status for a failed run: 1 configuration, 2 non-convergence, 3 otherwise.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } => 1,
        Error::NotConverged { .. } => 2,
        _ => 3,
    }
}
