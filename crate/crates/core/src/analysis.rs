//! pSNR sweeps, crossover and dB-gap analysis, and the adaptive-modulation
//! envelope.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::cad::{box_capacity_with, solve_radial_cad_with, CapacitySolution, SolverConfig};
use crate::channel::ConstraintKind;
use crate::constellation::{make_apsk, make_psk, make_qam, Constellation, Ring};
use crate::error::{invalid, Error, Result};
use crate::numerics::{gauss_hermite, QuadratureRule, DEFAULT_HERMITE_ORDER};
use crate::rates::mi_discrete_complex;

pub const DEFAULT_PSNR_MIN: f64 = 0.1;
pub const DEFAULT_PSNR_MAX: f64 = 100.0;
pub const DEFAULT_GRID_POINTS: usize = 60;
/// Relative bracket width at which crossover bisection stops.
pub const CROSSOVER_REL_TOL: f64 = 1e-3;
/// Relative bracket width at which rate inversion stops.
const INVERSION_REL_TOL: f64 = 1e-7;
/// pSNR at which the default 16APSK copies the circular CAD.
pub const APSK_DESIGN_PSNR: f64 = 10.0;

/// `n` logarithmically spaced points on `[min, max]`.
pub fn log_grid(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max.is_finite() && min.is_finite()) {
        return invalid(format!("grid bounds must be positive and finite, got [{min}, {max}]"));
    }
    match n {
        0 => invalid("grid needs at least one point"),
        1 if min == max => Ok(vec![min]),
        1 => invalid("a one-point grid needs min == max"),
        _ if max <= min => invalid(format!("grid needs min < max, got [{min}, {max}]")),
        _ => {
            let (a, b) = (min.ln(), max.ln());
            let mut grid: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
            grid[0] = min;
            grid[n - 1] = max;
            Ok(grid)
        }
    }
}

/// The 60-point grid over `[0.1, 100]`.
pub fn default_psnr_grid() -> Vec<f64> {
    log_grid(DEFAULT_PSNR_MIN, DEFAULT_PSNR_MAX, DEFAULT_GRID_POINTS).expect("valid default grid")
}

/// Rate series aligned to a pSNR grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    psnr_grid: Vec<f64>,
    columns: Vec<(String, Vec<f64>)>,
}

impl SweepTable {
    pub fn new(psnr_grid: Vec<f64>) -> Result<Self> {
        if psnr_grid.is_empty() {
            return invalid("empty pSNR grid");
        }
        if psnr_grid.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return invalid("pSNR values must be positive and finite");
        }
        if psnr_grid.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("pSNR grid must be strictly increasing");
        }
        Ok(Self { psnr_grid, columns: Vec::new() })
    }

    /// Adds a named series. Values within rounding of zero are clamped to 0.
    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.psnr_grid.len() {
            return invalid(format!("column {name} has {} values for {} grid points", values.len(), self.psnr_grid.len()));
        }
        if name == "psnr" || self.column(&name).is_some() {
            return invalid(format!("duplicate column name {name}"));
        }
        if name.is_empty() || name.contains(',') {
            return invalid(format!("column name {name:?} is not CSV-safe"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= -1e-9)) {
            return invalid(format!("column {name} has invalid rate {v}"));
        }
        self.columns.push((name, values.into_iter().map(|v| v.max(0.0)).collect()));
        Ok(())
    }

    pub fn psnr_grid(&self) -> &[f64] {
        &self.psnr_grid
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn columns(&self) -> &[(String, Vec<f64>)] {
        &self.columns
    }

    /// CSV with header `psnr,<names>...`, nine significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["psnr".to_string()];
        header.extend(self.names().map(str::to_string));
        w.write_record(&header)?;
        for (i, &p) in self.psnr_grid.iter().enumerate() {
            let mut row = vec![format_value(p)];
            row.extend(self.columns.iter().map(|(_, v)| format_value(v[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.first().map(String::as_str) != Some("psnr") {
            return invalid("CSV must start with a psnr column");
        }
        let mut grid = Vec::new();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len() - 1];
        for record in r.records() {
            let record = record?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad number {s:?}: {e}")));
            grid.push(parse(&record[0])?);
            for (c, field) in cols.iter_mut().zip(record.iter().skip(1)) {
                c.push(parse(field)?);
            }
        }
        let mut table = Self::new(grid)?;
        for (name, values) in header.into_iter().skip(1).zip(cols) {
            table.push_column(name, values)?;
        }
        Ok(table)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Nine significant digits, printed in the shortest form that parses back to
/// the rounded value.
fn format_value(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// A constellation with the name used for its table column.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedConstellation {
    pub name: String,
    pub constellation: Constellation,
}

impl NamedConstellation {
    pub fn new(name: impl Into<String>, constellation: Constellation) -> Self {
        Self { name: name.into(), constellation }
    }
}

/// Resolves `qpsk`, `16psk`, `16qam`, `64qam`, `16apsk` or `file:PATH`.
pub fn named_constellation(name: &str) -> Result<NamedConstellation> {
    let c = match name.to_ascii_lowercase().as_str() {
        "qpsk" => make_psk(4, PI / 4.0)?,
        "16psk" => make_psk(16, 0.0)?,
        "16qam" => make_qam(16)?,
        "64qam" => make_qam(64)?,
        "16apsk" => default_16apsk()?,
        _ => match name.strip_prefix("file:") {
            Some(path) => {
                let c = Constellation::read_json(path)?;
                let stem = Path::new(path).file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
                return Ok(NamedConstellation::new(stem, c));
            }
            None => return invalid(format!("unknown constellation {name:?}")),
        },
    };
    Ok(NamedConstellation::new(name.to_ascii_lowercase(), c))
}

/// Parses a comma-separated list of constellation names.
pub fn named_constellations(list: &str) -> Result<Vec<NamedConstellation>> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(named_constellation).collect()
}

/// Two-ring 16APSK copied from the circular CAD at pSNR 10: 8 points on the
/// inner ring and 8 on the outer ring, staggered by π/8.
pub fn default_16apsk() -> Result<Constellation> {
    static CACHE: OnceLock<std::result::Result<Constellation, String>> = OnceLock::new();
    CACHE
        .get_or_init(|| build_16apsk().map_err(|e| e.to_string()))
        .clone()
        .map_err(Error::InvalidArgument)
}

fn build_16apsk() -> Result<Constellation> {
    let cad = solve_radial_cad_with(1.0, 1.0 / APSK_DESIGN_PSNR, &SolverConfig::default())?;
    let d = cad.radial().expect("radial solver returns rings");
    let n = d.len();
    if n < 2 {
        return invalid("circular CAD at the design pSNR has a single ring");
    }
    // The boundary ring is last; lump every inner ring into the heaviest one.
    let w_out = d.probs()[n - 1];
    let inner = (0..n - 1)
        .max_by(|&a, &b| d.probs()[a].total_cmp(&d.probs()[b]))
        .expect("at least one inner ring");
    let r_in = d.radii()[inner];
    make_apsk(&[Ring::new(8, r_in, 0.0, 1.0 - w_out), Ring::new(8, 1.0, PI / 8.0, w_out)])
}

/// Default brackets for the pairs whose crossovers are of interest.
pub fn default_crossover_bracket(a: &str, b: &str, kind: ConstraintKind) -> Option<(f64, f64)> {
    let key = |s: &str| s.to_ascii_lowercase();
    let (a, b) = (key(a), key(b));
    let pair = |x: &str, y: &str| (a == x && b == y) || (a == y && b == x);
    match kind {
        ConstraintKind::Box if pair("qpsk", "16qam") => Some((2.0, 20.0)),
        ConstraintKind::Box if pair("16qam", "64qam") => Some((10.0, 100.0)),
        ConstraintKind::Circular if pair("16psk", "16apsk") => Some((2.0, 10.0)),
        _ => None,
    }
}

/// Numerical settings shared by the analysis routines.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub hermite: QuadratureRule,
    pub solver: SolverConfig,
    /// Keep going when a capacity solve fails, using its best iterate.
    pub keep_partial: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            hermite: gauss_hermite(DEFAULT_HERMITE_ORDER).expect("default Hermite rule"),
            solver: SolverConfig::default(),
            keep_partial: false,
        }
    }
}

impl AnalysisConfig {
    /// Same settings with both quadrature orders doubled.
    pub fn doubled(&self) -> Result<Self> {
        Ok(Self {
            hermite: self.hermite.doubled()?,
            solver: SolverConfig {
                hermite_order: 2 * self.solver.hermite_order,
                laguerre_order: 2 * self.solver.laguerre_order,
                ..self.solver
            },
            keep_partial: self.keep_partial,
        })
    }
}

/// Achievable rate in bits of `c`, peak-normalized for `kind`, at `psnr`.
pub fn rate_at(c: &Constellation, kind: ConstraintKind, e_max: f64, psnr: f64, config: &AnalysisConfig) -> Result<f64> {
    let noise_power = noise_for(e_max, psnr)?;
    let c = c.normalize_peak(kind, e_max)?;
    Ok(mi_discrete_complex(&c, noise_power, &config.hermite)?.reported())
}

/// Capacity solve for either constraint, returned in complex-channel units.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityPoint {
    pub psnr: f64,
    pub capacity_bits: f64,
    pub kkt_max_violation: f64,
    pub kkt_support_deviation: f64,
    pub converged: bool,
    #[serde(skip)]
    pub solution: CapacitySolution,
}

pub fn capacity_at(kind: ConstraintKind, e_max: f64, psnr: f64, config: &AnalysisConfig) -> Result<CapacityPoint> {
    let noise_power = noise_for(e_max, psnr)?;
    let attempt = match kind {
        ConstraintKind::Box => box_capacity_with(e_max, noise_power, &config.solver).map(|b| CapacityPoint {
            psnr,
            capacity_bits: b.capacity_bits,
            kkt_max_violation: b.kkt_max_violation,
            kkt_support_deviation: b.kkt_support_deviation,
            converged: true,
            solution: b.scalar,
        }),
        ConstraintKind::Circular => solve_radial_cad_with(e_max, noise_power, &config.solver).map(|s| CapacityPoint {
            psnr,
            capacity_bits: s.capacity_bits,
            kkt_max_violation: s.kkt_max_violation,
            kkt_support_deviation: s.kkt_support_deviation,
            converged: true,
            solution: s,
        }),
    };
    match attempt {
        Err(Error::ConvergenceFailure { best, .. }) if config.keep_partial => {
            let scale = if kind == ConstraintKind::Box { 2.0 } else { 1.0 };
            Ok(CapacityPoint {
                psnr,
                capacity_bits: scale * best.capacity_bits,
                kkt_max_violation: scale * best.kkt_max_violation,
                kkt_support_deviation: scale * best.kkt_support_deviation,
                converged: false,
                solution: *best,
            })
        }
        other => other,
    }
}

fn noise_for(e_max: f64, psnr: f64) -> Result<f64> {
    if !(e_max > 0.0 && e_max.is_finite()) {
        return invalid(format!("peak power must be positive, got {e_max}"));
    }
    if !(psnr > 0.0 && psnr.is_finite()) {
        return invalid(format!("pSNR must be positive, got {psnr}"));
    }
    Ok(e_max / psnr)
}

/// Capacity at every grid point, in grid order, plus the points whose solve
/// did not converge (only possible with `keep_partial`).
pub fn capacity_sweep(
    kind: ConstraintKind,
    e_max: f64,
    psnr_grid: &[f64],
    config: &AnalysisConfig,
) -> Result<(SweepTable, Vec<CapacityPoint>)> {
    let mut table = SweepTable::new(psnr_grid.to_vec())?;
    let points: Vec<CapacityPoint> =
        psnr_grid.par_iter().map(|&p| capacity_at(kind, e_max, p, config)).collect::<Result<_>>()?;
    table.push_column("capacity", points.iter().map(|p| p.capacity_bits).collect())?;
    let failed = points.into_iter().filter(|p| !p.converged).collect();
    Ok((table, failed))
}

/// One column per constellation and a trailing `capacity` column.
pub fn rate_sweep(
    mods: &[NamedConstellation],
    kind: ConstraintKind,
    e_max: f64,
    psnr_grid: &[f64],
    config: &AnalysisConfig,
) -> Result<(SweepTable, Vec<CapacityPoint>)> {
    if mods.is_empty() {
        return invalid("rate sweep needs at least one constellation");
    }
    let mut table = SweepTable::new(psnr_grid.to_vec())?;
    for m in mods {
        let rates = psnr_grid
            .par_iter()
            .map(|&p| rate_at(&m.constellation, kind, e_max, p, config))
            .collect::<Result<Vec<f64>>>()?;
        table.push_column(m.name.clone(), rates)?;
    }
    let (cap, failed) = capacity_sweep(kind, e_max, psnr_grid, config)?;
    table.push_column("capacity", cap.column("capacity").expect("capacity column").to_vec())?;
    Ok((table, failed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverResult {
    pub psnr_star: f64,
    pub pair: (String, String),
    /// Final bracket; the rate difference changes sign inside it.
    pub bracket: (f64, f64),
}

/// pSNR where the rates of `a` and `b` cross, by bisection on `bracket`.
pub fn crossover(
    a: &NamedConstellation,
    b: &NamedConstellation,
    kind: ConstraintKind,
    e_max: f64,
    bracket: (f64, f64),
    config: &AnalysisConfig,
) -> Result<CrossoverResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return invalid(format!("bracket must satisfy 0 < lo < hi, got ({lo}, {hi})"));
    }
    let diff = |p: f64| -> Result<f64> {
        Ok(rate_at(&a.constellation, kind, e_max, p, config)? - rate_at(&b.constellation, kind, e_max, p, config)?)
    };
    let f_lo = diff(lo)?;
    let f_hi = diff(hi)?;
    if !(f_lo * f_hi < 0.0) {
        return Err(Error::NoCrossover { lo, hi });
    }
    while (hi - lo) > CROSSOVER_REL_TOL * 0.5 * (lo + hi) {
        let mid = 0.5 * (lo + hi);
        let f_mid = diff(mid)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CrossoverResult { psnr_star: 0.5 * (lo + hi), pair: (a.name.clone(), b.name.clone()), bracket: (lo, hi) })
}

/// Pointwise best of several rate series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub values: Vec<f64>,
    /// Name of the winning series at each point (first one on ties).
    pub choice: Vec<String>,
}

pub fn adaptive_envelope(columns: &[(&str, &[f64])]) -> Result<Envelope> {
    let Some(&(_, first)) = columns.first() else {
        return invalid("envelope needs at least one series");
    };
    let n = first.len();
    if let Some((name, c)) = columns.iter().find(|(_, c)| c.len() != n) {
        return invalid(format!("series {name} has {} points, expected {n}", c.len()));
    }
    let mut values = Vec::with_capacity(n);
    let mut choice = Vec::with_capacity(n);
    for i in 0..n {
        let (mut best, mut name) = (columns[0].1[i], columns[0].0);
        for &(nm, c) in &columns[1..] {
            if c[i] > best {
                best = c[i];
                name = nm;
            }
        }
        values.push(best);
        choice.push(name.to_string());
    }
    Ok(Envelope { values, choice })
}

/// A monotone rate-versus-pSNR curve that can be re-evaluated anywhere.
#[derive(Debug, Clone)]
pub enum RateCurve {
    /// Best rate among the constellations.
    Envelope(Vec<NamedConstellation>),
    Capacity,
}

impl RateCurve {
    pub fn eval(&self, kind: ConstraintKind, e_max: f64, psnr: f64, config: &AnalysisConfig) -> Result<f64> {
        match self {
            RateCurve::Envelope(mods) => {
                if mods.is_empty() {
                    return invalid("envelope needs at least one constellation");
                }
                mods.iter()
                    .map(|m| rate_at(&m.constellation, kind, e_max, psnr, config))
                    .try_fold(f64::NEG_INFINITY, |acc, r| r.map(|r| acc.max(r)))
            }
            RateCurve::Capacity => Ok(capacity_at(kind, e_max, psnr, config)?.capacity_bits),
        }
    }
}

/// Smallest pSNR in `[grid[0], grid[last]]` at which `curve` reaches
/// `target` bits. The grid only brackets the root; the final bisection
/// re-evaluates the curve.
pub fn invert_rate(
    curve: &RateCurve,
    kind: ConstraintKind,
    e_max: f64,
    target: f64,
    psnr_grid: &[f64],
    config: &AnalysisConfig,
) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return invalid(format!("target rate must be positive, got {target}"));
    }
    SweepTable::new(psnr_grid.to_vec())?;
    let f = |p: f64| curve.eval(kind, e_max, p, config);
    let (first, last) = (psnr_grid[0], psnr_grid[psnr_grid.len() - 1]);
    if f(first)? > target {
        return Err(Error::OutOfRange(format!("rate {target} is already exceeded at pSNR {first}")));
    }
    if f(last)? < target {
        return Err(Error::OutOfRange(format!("rate {target} is not reached by pSNR {last}")));
    }
    // Binary search over grid cells, then bisection inside the cell.
    let (mut i, mut j) = (0, psnr_grid.len() - 1);
    while j - i > 1 {
        let k = (i + j) / 2;
        if f(psnr_grid[k])? < target {
            i = k;
        } else {
            j = k;
        }
    }
    let (mut lo, mut hi) = (psnr_grid[i], psnr_grid[j]);
    while hi - lo > INVERSION_REL_TOL * lo {
        let mid = (lo * hi).sqrt();
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Extra pSNR in dB that `curve` needs over `reference` to reach `target`.
pub fn db_gap_at_rate(
    curve: &RateCurve,
    reference: &RateCurve,
    kind: ConstraintKind,
    e_max: f64,
    target: f64,
    psnr_grid: &[f64],
    config: &AnalysisConfig,
) -> Result<f64> {
    let p_curve = invert_rate(curve, kind, e_max, target, psnr_grid, config)?;
    let p_ref = invert_rate(reference, kind, e_max, target, psnr_grid, config)?;
    Ok(10.0 * (p_curve / p_ref).log10())
}

/// One CAD of a sweep, with support normalized to `[-1, 1]` (box, scalar
/// component) or `[0, 1]` (circular, radii).
#[derive(Debug, Clone, Serialize)]
pub struct CadSweepEntry {
    pub psnr: f64,
    pub support: Vec<f64>,
    pub probs: Vec<f64>,
    pub capacity_bits: f64,
    pub kkt_max_violation: f64,
    pub kkt_support_deviation: f64,
    pub converged: bool,
    /// Set when the solve failed outright.
    pub error: Option<String>,
}

pub fn cad_sweep(kind: ConstraintKind, e_max: f64, psnr_grid: &[f64], config: &AnalysisConfig) -> Result<Vec<CadSweepEntry>> {
    SweepTable::new(psnr_grid.to_vec())?;
    let config = AnalysisConfig { keep_partial: true, ..config.clone() };
    Ok(psnr_grid
        .par_iter()
        .map(|&psnr| match capacity_at(kind, e_max, psnr, &config) {
            Ok(point) => {
                let (support, probs) = match (point.solution.scalar(), point.solution.radial()) {
                    (Some(d), _) => (d.points().iter().map(|x| x / d.amplitude_limit()).collect(), d.probs().to_vec()),
                    (_, Some(d)) => {
                        let r = d.e_max().sqrt();
                        (d.radii().iter().map(|x| x / r).collect(), d.probs().to_vec())
                    }
                    _ => unreachable!("solution is scalar or radial"),
                };
                CadSweepEntry {
                    psnr,
                    support,
                    probs,
                    capacity_bits: point.capacity_bits,
                    kkt_max_violation: point.kkt_max_violation,
                    kkt_support_deviation: point.kkt_support_deviation,
                    converged: point.converged,
                    error: None,
                }
            }
            Err(e) => CadSweepEntry {
                psnr,
                support: Vec::new(),
                probs: Vec::new(),
                capacity_bits: f64::NAN,
                kkt_max_violation: f64::NAN,
                kkt_support_deviation: f64::NAN,
                converged: false,
                error: Some(e.to_string()),
            },
        })
        .collect())
}
