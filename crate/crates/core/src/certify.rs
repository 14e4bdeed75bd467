//! Grid certification: every point's normalized residual against its
//! certificate, convergence slopes, and CSV/JSON reports.
//!
//! A grid is the product `gamma x (alpha, beta) x p x n`, where the exponent
//! lists are zipped into pairs. Records are ordered by that nesting (`n`
//! fastest) no matter how the work is scheduled.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::time::Instant;

use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::osc_phase;
use crate::coeffs::{coefficients_at, CoefficientTable};
use crate::error::{Error, Result};
use crate::expand::{evaluate_point_with, Convention, ExpansionResult, Flag};
use crate::oracle::{
    jacobi_recurrence_trace, rational_from_f64, rational_to_scaled, RationalOracle,
    DEFAULT_RATIONAL_CAP,
};
use crate::params::{validate_point, Parameters, Region, RegionPoint};
use crate::scaled::ScaledReal;

pub const DEFAULT_SLACK: f64 = 1e-9;
/// Below this `|cos(N gamma + kappa)|` an oscillatory record is flagged `near-zero`.
pub const NEAR_ZERO: f64 = 1e-3;
/// Residuals under this multiple of the normalized sum are rounding noise.
pub const ROUNDING_FLOOR: f64 = 1e-13;
pub const MIN_SLOPE_POINTS: usize = 4;

pub const CSV_HEADER: [&str; 15] = [
    "n",
    "gamma",
    "alpha",
    "beta",
    "p",
    "region",
    "approx_mantissa",
    "approx_exp2",
    "exact_mantissa",
    "exact_exp2",
    "zeta_hat",
    "bound",
    "ratio",
    "pass",
    "flags",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    #[default]
    Scaled,
    Rational,
}

impl std::str::FromStr for OracleMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "scaled" => Ok(OracleMode::Scaled),
            "rational" => Ok(OracleMode::Rational),
            other => Err(format!(
                "unknown oracle `{other}` (expected scaled|rational)"
            )),
        }
    }
}

fn default_slack() -> f64 {
    DEFAULT_SLACK
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub region: Region,
    /// Ascending.
    pub n: Vec<usize>,
    pub gamma: Vec<f64>,
    /// Zipped with `beta`.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub p: Vec<usize>,
    #[serde(default)]
    pub oracle: OracleMode,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default)]
    pub convention: Convention,
}

const ACCEPTANCE_PAIRS: [(f64, f64); 4] = [(0.0, 0.0), (0.0, -0.5), (-0.25, -0.5), (-0.5, -0.5)];

impl GridSpec {
    fn acceptance(region: Region, gamma: Vec<f64>) -> Self {
        GridSpec {
            region,
            n: vec![10, 20, 50, 100, 200, 500],
            gamma,
            alpha: ACCEPTANCE_PAIRS.iter().map(|p| p.0).collect(),
            beta: ACCEPTANCE_PAIRS.iter().map(|p| p.1).collect(),
            p: vec![1, 2, 3],
            oracle: OracleMode::Scaled,
            slack: DEFAULT_SLACK,
            convention: Convention::default(),
        }
    }

    /// 288-point outer grid.
    pub fn acceptance_outer() -> Self {
        Self::acceptance(Region::Outer, vec![0.25, 0.5, 1.0, 2.0])
    }

    /// 288-point oscillatory grid.
    pub fn acceptance_osc() -> Self {
        Self::acceptance(
            Region::Oscillatory,
            vec![0.3, 0.7, 1.2, std::f64::consts::FRAC_PI_2],
        )
    }

    pub fn pairs(&self) -> Vec<Parameters> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(&alpha, &beta)| Parameters { alpha, beta })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.gamma.len() * self.alpha.len().min(self.beta.len()) * self.p.len() * self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks every point before anything is evaluated.
    pub fn validate(&self) -> Result<()> {
        let bad = |index: usize, reason: String| Err(Error::InvalidGrid { index, reason });
        if self.alpha.len() != self.beta.len() {
            return bad(
                0,
                format!(
                    "alpha and beta lists are zipped and must have equal length ({} vs {})",
                    self.alpha.len(),
                    self.beta.len()
                ),
            );
        }
        if !(self.slack.is_finite() && self.slack >= 0.0) {
            return bad(
                0,
                format!("slack {} must be finite and non-negative", self.slack),
            );
        }
        if self.n.windows(2).any(|w| w[0] > w[1]) {
            return bad(0, "n list must be sorted ascending".into());
        }
        if self.oracle == OracleMode::Rational {
            if let Some(&n) = self.n.iter().find(|&&n| n > DEFAULT_RATIONAL_CAP) {
                return bad(
                    0,
                    Error::DegreeCap {
                        n,
                        cap: DEFAULT_RATIONAL_CAP,
                    }
                    .to_string(),
                );
            }
        }
        let mut index = 0;
        for &gamma in &self.gamma {
            for params in self.pairs() {
                for &p in &self.p {
                    for &n in &self.n {
                        let reason = if n == 0 {
                            Some("n must be at least 1".to_string())
                        } else if p == 0 {
                            Some(Error::ZeroOrder.to_string())
                        } else {
                            match RegionPoint::new(self.region, gamma) {
                                Err(e) => Some(e.to_string()),
                                Ok(pt) => validate_point(params, pt)
                                    .into_result()
                                    .err()
                                    .map(|e| e.to_string()),
                            }
                        };
                        if let Some(reason) = reason {
                            return bad(index, reason);
                        }
                        index += 1;
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub n: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p: usize,
    pub region: Region,
    pub approx: ScaledReal,
    pub exact: ScaledReal,
    /// `exact / prefactor - normalized_sum`.
    pub zeta_hat: f64,
    /// Certified bound on the normalized residual.
    pub bound: f64,
    /// `|zeta_hat| / bound`.
    pub ratio: f64,
    pub pass: bool,
    pub flags: Vec<String>,
}

impl CertificateRecord {
    pub fn above_threshold(&self) -> bool {
        !self
            .flags
            .iter()
            .any(|f| f == Flag::HypothesisTension.as_str())
    }

    pub fn flag_string(&self) -> String {
        self.flags.join("|")
    }
}

fn record(result: &ExpansionResult, exact: ScaledReal, slack: f64) -> CertificateRecord {
    let zeta_hat = exact.ratio(result.prefactor) - result.normalized_sum;
    assert!(zeta_hat.is_finite(), "residual must be finite");
    let bound = result.bundle.certified_bound;
    let mut flags: Vec<String> = result
        .flags
        .iter()
        .map(|f| f.as_str().to_string())
        .collect();
    if let RegionPoint::Oscillatory { gamma } = result.point {
        if osc_phase(result.n, gamma, result.params).cos().abs() < NEAR_ZERO {
            flags.push("near-zero".into());
        }
    }
    CertificateRecord {
        n: result.n,
        gamma: result.point.gamma(),
        alpha: result.params.alpha,
        beta: result.params.beta,
        p: result.p,
        region: result.point.region(),
        approx: result.value,
        exact,
        zeta_hat,
        bound,
        ratio: zeta_hat.abs() / bound,
        pass: zeta_hat.abs() <= bound * (1.0 + slack),
        flags,
    }
}

fn exact_values(
    mode: OracleMode,
    nmax: usize,
    params: Parameters,
    x: f64,
) -> Result<Vec<ScaledReal>> {
    match mode {
        OracleMode::Scaled => Ok(jacobi_recurrence_trace(nmax, params, x)),
        OracleMode::Rational => {
            let q = |v: f64| -> BigRational { rational_from_f64(v) };
            let trace =
                RationalOracle::default().trace(nmax, &q(params.alpha), &q(params.beta), &q(x))?;
            Ok(trace.iter().map(rational_to_scaled).collect())
        }
    }
}

/// One point, checked against the oracle.
pub fn certify_point(
    n: usize,
    point: RegionPoint,
    params: Parameters,
    p: usize,
    slack: f64,
    oracle: OracleMode,
    convention: Convention,
) -> Result<CertificateRecord> {
    let table = coefficients_at(point, params, p)?;
    let result = evaluate_point_with(n, point, params, p, convention, &table)?;
    let exact = exact_values(oracle, n, params, point.x())?[n];
    Ok(record(&result, exact, slack))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OrderStats {
    pub p: usize,
    pub n_points: usize,
    pub passed: usize,
    pub worst_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    /// Pass rate over records at or above their degree threshold.
    pub pass_rate: f64,
    /// Largest `|zeta_hat| / bound` over those records.
    pub worst_ratio: f64,
    pub n_points: usize,
    pub wall_ms: u64,
    pub above_threshold: usize,
    pub below_threshold: usize,
    pub below_threshold_passed: usize,
    pub per_p: Vec<OrderStats>,
}

impl SweepSummary {
    pub fn all_pass(&self) -> bool {
        self.pass_rate == 1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub records: Vec<CertificateRecord>,
    pub summary: SweepSummary,
}

pub fn summarize(records: &[CertificateRecord], wall_ms: u64) -> SweepSummary {
    let above: Vec<&CertificateRecord> = records.iter().filter(|r| r.above_threshold()).collect();
    let passed = above.iter().filter(|r| r.pass).count();
    let below: Vec<&CertificateRecord> = records.iter().filter(|r| !r.above_threshold()).collect();
    let mut per_p: BTreeMap<usize, OrderStats> = BTreeMap::new();
    for r in &above {
        let s = per_p.entry(r.p).or_insert_with(|| OrderStats {
            p: r.p,
            ..OrderStats::default()
        });
        s.n_points += 1;
        s.passed += usize::from(r.pass);
        s.worst_ratio = s.worst_ratio.max(r.ratio);
    }
    SweepSummary {
        pass_rate: if above.is_empty() {
            1.0
        } else {
            passed as f64 / above.len() as f64
        },
        worst_ratio: above.iter().map(|r| r.ratio).fold(0.0, f64::max),
        n_points: records.len(),
        wall_ms,
        above_threshold: above.len(),
        below_threshold: below.len(),
        below_threshold_passed: below.iter().filter(|r| r.pass).count(),
        per_p: per_p.into_values().collect(),
    }
}

/// All records of one `(gamma, alpha, beta)` cell, from one oracle pass and
/// one coefficient table.
fn certify_cell(
    grid: &GridSpec,
    gamma: f64,
    params: Parameters,
    table: &CoefficientTable,
) -> Result<Vec<CertificateRecord>> {
    let point = RegionPoint::new(grid.region, gamma)?;
    let nmax = grid.n.last().copied().unwrap_or(0);
    let exact = exact_values(grid.oracle, nmax, params, point.x())?;
    let mut out = Vec::with_capacity(grid.p.len() * grid.n.len());
    for &p in &grid.p {
        for &n in &grid.n {
            let result = evaluate_point_with(n, point, params, p, grid.convention, table)?;
            out.push(record(&result, exact[n], grid.slack));
        }
    }
    Ok(out)
}

fn run_cells(grid: &GridSpec) -> Result<Vec<CertificateRecord>> {
    let p_max = grid.p.iter().copied().max().unwrap_or(1);
    let cells: Vec<(f64, Parameters)> = grid
        .gamma
        .iter()
        .flat_map(|&g| grid.pairs().into_iter().map(move |pr| (g, pr)))
        .collect();
    // read-only coefficient snapshot, built before any record is evaluated
    let tables: Vec<CoefficientTable> = cells
        .par_iter()
        .map(|&(g, pr)| coefficients_at(RegionPoint::new(grid.region, g)?, pr, p_max))
        .collect::<Result<_>>()?;
    let blocks: Vec<Vec<CertificateRecord>> = cells
        .par_iter()
        .zip(tables.par_iter())
        .map(|(&(g, pr), table)| certify_cell(grid, g, pr, table))
        .collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Certifies every grid point. `threads = None` uses rayon's global pool.
///
/// Output is a pure function of the grid: each cell is computed by the same
/// sequential code whatever the thread count, and blocks are merged by index.
pub fn sweep(grid: &GridSpec, threads: Option<usize>) -> Result<SweepReport> {
    grid.validate()?;
    let start = Instant::now();
    let records = match threads {
        None => run_cells(grid)?,
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidGrid {
                index: 0,
                reason: format!("thread pool: {e}"),
            })?
            .install(|| run_cells(grid))?,
    };
    let wall_ms = start.elapsed().as_millis() as u64;
    let summary = summarize(&records, wall_ms);
    Ok(SweepReport { records, summary })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = points.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2))
    });
    num / den
}

/// Log-log slope of the residual against `n`; close to `-p` when the
/// expansion has order `p`.
///
/// Outer residuals are used directly. Oscillatory residuals oscillate with
/// `theta_n`, so each `n` is paired with `n+1` and the slowly varying complex
/// amplitude `Z` in `zeta_hat(m) = Re(Z e^{i theta_m})` is solved for; the
/// slope is taken on `|Z|`. Residuals below `1e-13 |sum|` are dropped.
pub fn convergence_slope(
    gamma: f64,
    params: Parameters,
    p: usize,
    region: Region,
    n_list: &[usize],
) -> Result<f64> {
    let point = RegionPoint::new(region, gamma)?;
    validate_point(params, point).into_result()?;
    let table = coefficients_at(point, params, p)?;
    let a_p = table.coeffs[p].norm();
    if a_p <= 1e-10 {
        return Err(Error::DegenerateCoefficient(a_p));
    }
    let nmax = n_list.iter().copied().max().unwrap_or(0) + 1;
    let exact = jacobi_recurrence_trace(nmax, params, point.x());
    let conv = Convention::default();
    let residual = |n: usize| -> Result<(f64, f64)> {
        let r = evaluate_point_with(n, point, params, p, conv, &table)?;
        Ok((
            exact[n].ratio(r.prefactor) - r.normalized_sum,
            r.normalized_sum,
        ))
    };
    let mut points = Vec::new();
    for &n in n_list {
        let (z, sum) = residual(n)?;
        let magnitude = match region {
            Region::Outer => z.abs(),
            Region::Oscillatory => {
                let (z1, _) = residual(n + 1)?;
                let t0 = osc_phase(n, gamma, params);
                let t1 = osc_phase(n + 1, gamma, params);
                // [cos t0, -sin t0; cos t1, -sin t1] (X, Y) = (z, z1)
                let det = -t0.cos() * t1.sin() + t0.sin() * t1.cos();
                let x = (-z * t1.sin() + z1 * t0.sin()) / det;
                let y = (t0.cos() * z1 - t1.cos() * z) / det;
                Complex64::new(x, y).norm()
            }
        };
        if magnitude > ROUNDING_FLOOR * sum.abs() && magnitude > 0.0 {
            points.push(((n as f64).ln(), magnitude.ln()));
        }
    }
    if points.len() < MIN_SLOPE_POINTS {
        return Err(Error::TooFewPoints(points.len()));
    }
    Ok(least_squares_slope(&points))
}

fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_row(r: &CertificateRecord) -> [String; 15] {
    [
        r.n.to_string(),
        sig17(r.gamma),
        sig17(r.alpha),
        sig17(r.beta),
        r.p.to_string(),
        r.region.to_string(),
        sig17(r.approx.mantissa()),
        r.approx.exponent().to_string(),
        sig17(r.exact.mantissa()),
        r.exact.exponent().to_string(),
        sig17(r.zeta_hat),
        sig17(r.bound),
        sig17(r.ratio),
        r.pass.to_string(),
        r.flag_string(),
    ]
}

/// Header plus one row per record, 17 significant digits.
pub fn write_csv<W: Write>(records: &[CertificateRecord], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io::Error::other)?;
    for r in records {
        w.write_record(csv_row(r)).map_err(io::Error::other)?;
    }
    w.flush()
}

/// Flat JSON objects with the CSV column names.
pub fn json_rows(records: &[CertificateRecord]) -> serde_json::Value {
    serde_json::Value::Array(
        records
            .iter()
            .map(|r| {
                serde_json::json!({
                    "n": r.n,
                    "gamma": r.gamma,
                    "alpha": r.alpha,
                    "beta": r.beta,
                    "p": r.p,
                    "region": r.region,
                    "approx_mantissa": r.approx.mantissa(),
                    "approx_exp2": r.approx.exponent(),
                    "exact_mantissa": r.exact.mantissa(),
                    "exact_exp2": r.exact.exponent(),
                    "zeta_hat": r.zeta_hat,
                    "bound": r.bound,
                    "ratio": r.ratio,
                    "pass": r.pass,
                    "flags": r.flag_string(),
                })
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(a: f64, b: f64) -> Parameters {
        Parameters::new(a, b).unwrap()
    }

    fn small_grid() -> GridSpec {
        GridSpec {
            n: vec![10, 50],
            gamma: vec![1.0],
            alpha: vec![0.0],
            beta: vec![0.0],
            p: vec![1, 2],
            ..GridSpec::acceptance_outer()
        }
    }

    #[test]
    fn single_point_passes() {
        let pt = RegionPoint::outer(1.0).unwrap();
        let r = certify_point(
            50,
            pt,
            pr(0.0, 0.0),
            1,
            DEFAULT_SLACK,
            OracleMode::Scaled,
            Convention::default(),
        )
        .unwrap();
        assert!(r.pass && r.above_threshold());
        let again = certify_point(
            50,
            pt,
            pr(0.0, 0.0),
            1,
            DEFAULT_SLACK,
            OracleMode::Scaled,
            Convention::default(),
        )
        .unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn threshold_flag() {
        let pt = RegionPoint::outer(0.002).unwrap();
        let r = certify_point(
            10,
            pt,
            pr(0.0, 0.0),
            3,
            DEFAULT_SLACK,
            OracleMode::Scaled,
            Convention::default(),
        )
        .unwrap();
        assert!(!r.above_threshold());
        let pt = RegionPoint::outer(0.02).unwrap();
        let r = certify_point(
            10,
            pt,
            pr(0.0, 0.0),
            3,
            DEFAULT_SLACK,
            OracleMode::Scaled,
            Convention::default(),
        )
        .unwrap();
        assert!(r.above_threshold());
    }

    #[test]
    fn empty_grid_is_vacuous() {
        let grid = GridSpec {
            n: vec![],
            ..small_grid()
        };
        let rep = sweep(&grid, Some(1)).unwrap();
        assert!(rep.records.is_empty());
        assert_eq!(rep.summary.pass_rate, 1.0);
    }

    #[test]
    fn invalid_grids_rejected() {
        let g = GridSpec {
            alpha: vec![0.5],
            ..small_grid()
        };
        assert!(matches!(
            sweep(&g, None),
            Err(Error::InvalidGrid { index: 0, .. })
        ));
        let g = GridSpec {
            n: vec![50, 10],
            ..small_grid()
        };
        assert!(g.validate().is_err());
        let g = GridSpec {
            beta: vec![],
            ..small_grid()
        };
        assert!(g.validate().is_err());
        let g = GridSpec {
            p: vec![1, 0],
            ..small_grid()
        };
        assert!(matches!(
            g.validate(),
            Err(Error::InvalidGrid { index: 2, .. })
        ));
    }

    #[test]
    fn rational_and_scaled_agree() {
        let mut g = small_grid();
        let scaled = sweep(&g, Some(2)).unwrap();
        g.oracle = OracleMode::Rational;
        let exact = sweep(&g, Some(2)).unwrap();
        for (a, b) in scaled.records.iter().zip(&exact.records) {
            let tol = 1e-9 * b.zeta_hat.abs().max(1e-300);
            assert!(
                (a.zeta_hat - b.zeta_hat).abs() <= tol.max(1e-14),
                "{a:?} vs {b:?}"
            );
        }
    }

    #[test]
    fn csv_header_and_shape() {
        let rep = sweep(&small_grid(), Some(1)).unwrap();
        let mut buf = Vec::new();
        write_csv(&rep.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), rep.records.len());
        let json = json_rows(&rep.records);
        assert_eq!(json.as_array().unwrap().len(), rep.records.len());
    }

    #[test]
    fn slope_examples() {
        let ns = [100, 140, 200, 280, 400, 500];
        let s = convergence_slope(1.0, pr(0.0, 0.0), 1, Region::Outer, &ns).unwrap();
        assert!((-1.15..=-0.85).contains(&s), "{s}");
        let s = convergence_slope(1.0, pr(-0.5, -0.5), 2, Region::Outer, &ns).unwrap();
        assert!((s + 2.0).abs() <= 0.15, "{s}");
        assert!(matches!(
            convergence_slope(1.0, pr(0.0, 0.0), 1, Region::Outer, &[100, 200]),
            Err(Error::TooFewPoints(2))
        ));
    }
}
