//! Filter optimization, threshold bisection in the mixing parameter and the
//! per-p data behind the activation figures.
//!
//! Filters are searched over `diag(x, 1)⊗diag(y, 1)⊗diag(z, 1)` on a log
//! grid followed by a Nelder-Mead pass. The objective is λ₁′ restricted to
//! filters whose leading singular value of X/N is degenerate: outside that
//! region λ₁′ comes from the diagonal term alone and is not attainable.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::filtering::{filtered_bound, FilterParams, FilterTriple, FilteredAnalysis, ANNIHILATION_TOL};
use crate::io::{sci, serialize_sci};
use crate::linalg::{svd_3x9, Mat3x9, DEGENERACY_TOL};
use crate::state::{DensityMatrix, Family};
use crate::svetlichny::{
    certify_bound, unfiltered_bound, AnalysisConfig, BoundReport, PauliTensor, CLASSICAL_BOUND,
};

/// Bi-local model boundary for the chi family at θ = π/8, taken from the
/// local-model literature. Used only as an annotation.
pub const BILOCAL_BOUNDARY_CHI: f64 = 0.4167;

/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_WIDTH: f64 = 2e-5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterSearch {
    pub log10_min: f64,
    pub log10_max: f64,
    /// Grid points per axis in the coarse pass.
    pub grid_points: usize,
    /// Objective evaluations allowed in the refinement pass.
    pub refine_evals: usize,
}

impl Default for FilterSearch {
    fn default() -> Self {
        Self { log10_min: -3.0, log10_max: 3.0, grid_points: 25, refine_evals: 200 }
    }
}

impl FilterSearch {
    fn validate(&self) -> Result<()> {
        if !(self.log10_min.is_finite() && self.log10_max.is_finite() && self.log10_min < self.log10_max) {
            return Err(Error::Argument(format!(
                "filter search range [1e{}, 1e{}] is empty",
                self.log10_min, self.log10_max
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::Argument("filter search needs at least 2 grid points per axis".into()));
        }
        Ok(())
    }

    fn axis(&self) -> Vec<f64> {
        let n = self.grid_points;
        (0..n)
            .map(|i| self.log10_min + (self.log10_max - self.log10_min) * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn spacing(&self) -> f64 {
        (self.log10_max - self.log10_min) / (self.grid_points - 1) as f64
    }
}

/// A family with p left free, plus everything a scan needs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanSpec {
    pub family: Family,
    pub p_grid: Vec<f64>,
    pub filter_search: FilterSearch,
    pub seed: u64,
    #[serde(skip)]
    pub analysis: AnalysisConfig,
}

impl ScanSpec {
    pub fn new(family: Family, p_grid: Vec<f64>, seed: u64) -> Result<Self> {
        let spec = Self {
            family,
            p_grid,
            filter_search: FilterSearch::default(),
            seed,
            analysis: AnalysisConfig::with_seed(seed),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_grid.is_empty() {
            return Err(Error::Argument("p grid is empty".into()));
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Argument(format!("p grid value {p} is outside [0, 1]")));
        }
        if self.p_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("p grid must be strictly increasing".into()));
        }
        self.filter_search.validate()
    }
}

/// Parses `start:end:step` into an inclusive grid.
pub fn parse_p_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Argument(format!("p grid must look like start:end:step, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts.iter().map(|s| s.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(start.is_finite() && end.is_finite() && step.is_finite() && step > 0.0 && end >= start) {
        return Err(bad());
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
    // Keep the endpoint exact when the step divides the range.
    if let Some(last) = grid.last_mut() {
        if (end - *last).abs() < 1e-9 * step {
            *last = end;
        }
    }
    Ok(grid)
}

/// The default p grid for figure data: 0, 0.01, …, 1.
pub fn default_p_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// Cheap λ₁′ for diagonal filters, from the Pauli tensor of ρ.
///
/// With `F = diag(v, 1)` (no unitary part) M′ equals X/N exactly:
/// `F σ₁ F = v σ₁`, `F σ₂ F = v σ₂`, `F σ₃ F = (v²−1)/2 I + (v²+1)/2 σ₃` and
/// `F² = (v²+1)/2 I + (v²−1)/2 σ₃`.
#[derive(Clone, Debug)]
pub struct FastEvaluator {
    t: [[[f64; 4]; 4]; 4],
}

/// One objective evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FastEval {
    pub lambda1: f64,
    /// Leading singular value of X/N is degenerate (relative tolerance, so a
    /// lone tiny singular value does not qualify).
    pub eligible: bool,
    /// `σ₁ − σ₂` of X/N.
    pub gap: f64,
}

fn sandwich_coeffs(v: f64) -> ([[f64; 4]; 3], [f64; 4]) {
    let v2 = v * v;
    let c = [
        [0.0, v, 0.0, 0.0],
        [0.0, 0.0, v, 0.0],
        [(v2 - 1.0) / 2.0, 0.0, 0.0, (v2 + 1.0) / 2.0],
    ];
    let d = [(v2 + 1.0) / 2.0, 0.0, 0.0, (v2 - 1.0) / 2.0];
    (c, d)
}

impl FastEvaluator {
    pub fn new(rho: &DensityMatrix) -> Result<Self> {
        Ok(Self { t: PauliTensor::from_state(rho)?.0 })
    }

    fn contract(&self, ca: &[f64; 4], cb: &[f64; 4], cc: &[f64; 4]) -> f64 {
        let mut s = 0.0;
        for (al, &wa) in ca.iter().enumerate() {
            if wa == 0.0 {
                continue;
            }
            for (be, &wb) in cb.iter().enumerate() {
                if wb == 0.0 {
                    continue;
                }
                for (ga, &wc) in cc.iter().enumerate() {
                    if wc != 0.0 {
                        s += wa * wb * wc * self.t[al][be][ga];
                    }
                }
            }
        }
        s
    }

    /// X and N for the diagonal filter.
    pub fn x_and_n(&self, params: FilterParams) -> (Mat3x9, f64) {
        let (cx, dx) = sandwich_coeffs(params.x);
        let (cy, dy) = sandwich_coeffs(params.y);
        let (cz, dz) = sandwich_coeffs(params.z);
        let mut x = [[0.0; 9]; 3];
        for l in 0..3 {
            for m in 0..3 {
                for n in 0..3 {
                    x[m][3 * l + n] = self.contract(&cx[l], &cy[m], &cz[n]);
                }
            }
        }
        (x, self.contract(&dx, &dy, &dz))
    }

    /// `None` when the filter annihilates the state.
    pub fn eval(&self, params: FilterParams) -> Option<FastEval> {
        let (x, n) = self.x_and_n(params);
        if !(n > ANNIHILATION_TOL) {
            return None;
        }
        let s = svd_3x9(&x.map(|row| row.map(|v| v / n))).singular_values;
        let gap = s[0] - s[1];
        Some(FastEval { lambda1: s[0], eligible: gap <= DEGENERACY_TOL * s[0], gap })
    }
}

/// Result of the filter search.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterOptimum {
    pub params: FilterParams,
    /// Objective value found by the search.
    pub lambda1_prime: f64,
    /// False when no grid point was eligible and plain λ₁′ was maximized.
    pub restricted: bool,
    pub evaluations: usize,
    pub analysis: FilteredAnalysis,
}

/// Minimization target for the search; eligible points always beat
/// ineligible ones.
fn objective(e: Option<FastEval>, restricted: bool) -> f64 {
    match e {
        None => f64::INFINITY,
        Some(e) if !restricted || e.eligible => -e.lambda1,
        Some(e) => e.gap,
    }
}

fn params_from_log(u: &[f64; 3]) -> FilterParams {
    FilterParams { x: 10f64.powf(u[0]), y: 10f64.powf(u[1]), z: 10f64.powf(u[2]) }
}

/// Nelder-Mead on the box `[lo, hi]³`; points are clamped into the box.
fn nelder_mead(
    f: impl Fn(&[f64; 3]) -> f64,
    start: [f64; 3],
    step: f64,
    lo: f64,
    hi: f64,
    max_evals: usize,
) -> ([f64; 3], f64, usize) {
    let clamp = |p: [f64; 3]| p.map(|v| v.clamp(lo, hi));
    let evals = std::cell::Cell::new(0usize);
    let eval = |p: &[f64; 3]| {
        evals.set(evals.get() + 1);
        f(p)
    };
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((start, eval(&start)));
    for d in 0..3 {
        let mut p = start;
        p[d] += if p[d] + step <= hi { step } else { -step };
        let p = clamp(p);
        simplex.push((p, eval(&p)));
    }
    while evals.get() < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[3].1);
        let size = simplex[1..]
            .iter()
            .map(|(p, _)| (0..3).map(|d| (p[d] - simplex[0].0[d]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size < 1e-12 || (worst - best).abs() < 1e-15 * best.abs().max(1e-300) && size < 1e-9 {
            break;
        }
        let centroid: [f64; 3] = std::array::from_fn(|d| simplex[..3].iter().map(|(p, _)| p[d]).sum::<f64>() / 3.0);
        let along = |t: f64| clamp(std::array::from_fn(|d| centroid[d] + t * (simplex[3].0[d] - centroid[d])));
        let r = along(-1.0);
        let fr = eval(&r);
        if fr < simplex[0].1 {
            let e = along(-2.0);
            let fe = eval(&e);
            simplex[3] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (r, fr);
        } else {
            let c = if fr < simplex[3].1 { along(-0.5) } else { along(0.5) };
            let fc = eval(&c);
            if fc < simplex[3].1.min(fr) {
                simplex[3] = (c, fc);
            } else {
                let b = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    let p = clamp(std::array::from_fn(|d| b[d] + 0.5 * (s.0[d] - b[d])));
                    *s = (p, eval(&p));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, simplex[0].1, evals.get())
}

/// Searches diagonal filters for the largest attainable-looking λ₁′.
///
/// The identity filter is always a candidate, so the result is never worse
/// than the unfiltered λ₁.
pub fn optimize_filter(rho: &DensityMatrix, search: &FilterSearch) -> Result<FilterOptimum> {
    search.validate()?;
    let ev = FastEvaluator::new(rho)?;
    let axis = search.axis();
    let n = axis.len();
    let grid: Vec<([f64; 3], Option<FastEval>)> = (0..n * n * n)
        .into_par_iter()
        .map(|idx| {
            let u = [axis[idx / (n * n)], axis[(idx / n) % n], axis[idx % n]];
            (u, ev.eval(params_from_log(&u)))
        })
        .collect();
    let restricted = grid.iter().any(|(_, e)| e.is_some_and(|e| e.eligible));
    let mut best: Option<([f64; 3], f64)> = None;
    for (u, e) in &grid {
        let f = objective(*e, restricted);
        if best.is_none_or(|(_, bf)| f < bf) {
            best = Some((*u, f));
        }
    }
    let (start, _) = best.expect("grid is nonempty");
    let (u, f, refine) = nelder_mead(
        |u| objective(ev.eval(params_from_log(u)), restricted),
        start,
        search.spacing(),
        search.log10_min,
        search.log10_max,
        search.refine_evals,
    );
    let mut params = params_from_log(&u);
    let mut lambda = -f;
    if !f.is_finite() || f > 0.0 {
        // Nothing eligible survived; fall back to the identity below.
        lambda = f64::NEG_INFINITY;
    }
    if let Some(id) = ev.eval(FilterParams::IDENTITY) {
        // Ties go to the identity, so states that filtering cannot improve
        // report no filter. The fast path loses about 1e-10 (relative) at
        // extreme filters, hence the width of a tie.
        let tie = (!restricted || id.eligible) && id.lambda1 >= lambda - 1e-9 * lambda.abs().max(1.0);
        if id.lambda1 > lambda || tie {
            params = FilterParams::IDENTITY;
            lambda = id.lambda1;
        }
    }
    let analysis = filtered_bound(rho, &FilterTriple::diagonal(params))?;
    Ok(FilterOptimum {
        params,
        lambda1_prime: lambda,
        restricted,
        evaluations: grid.len() + refine + 1,
        analysis,
    })
}

/// Which curve a threshold refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Unfiltered,
    Filtered,
}

/// The filtered side of a scan point.
#[derive(Clone, Debug, PartialEq)]
pub struct FilteredPoint {
    pub filter: FilterParams,
    pub restricted: bool,
    pub n_factor: f64,
    pub report: BoundReport,
}

/// One row of a scan.
#[derive(Clone, Debug, PartialEq)]
pub struct PointRecord {
    pub p: f64,
    pub unfiltered: Option<BoundReport>,
    pub filtered: Option<FilteredPoint>,
}

impl PointRecord {
    pub fn violates_before(&self) -> Option<bool> {
        self.unfiltered.as_ref().map(BoundReport::violates)
    }

    pub fn violates_after(&self) -> Option<bool> {
        self.filtered.as_ref().map(|f| f.report.violates())
    }

    pub fn violates(&self, mode: Mode) -> Option<bool> {
        match mode {
            Mode::Unfiltered => self.violates_before(),
            Mode::Filtered => self.violates_after(),
        }
    }
}

/// Best filter for `rho` and the certified report of the filtered state.
pub fn filtered_point(rho: &DensityMatrix, search: &FilterSearch, cfg: &AnalysisConfig) -> Result<FilteredPoint> {
    let opt = optimize_filter(rho, search)?;
    let report = certify_bound(&opt.analysis.rho_prime, &opt.analysis.m_prime, cfg)?;
    Ok(FilteredPoint { filter: opt.params, restricted: opt.restricted, n_factor: opt.analysis.n_raw, report })
}

/// Evaluates one p for the requested curves.
pub fn evaluate_point(family: &Family, p: f64, modes: &[Mode], spec: &ScanSpec) -> Result<PointRecord> {
    let rho = family.build(p)?;
    let unfiltered = if modes.contains(&Mode::Unfiltered) { Some(unfiltered_bound(&rho, &spec.analysis)?) } else { None };
    let filtered = if modes.contains(&Mode::Filtered) {
        Some(filtered_point(&rho, &spec.filter_search, &spec.analysis)?)
    } else {
        None
    };
    Ok(PointRecord { p, unfiltered, filtered })
}

fn predicate(family: &Family, p: f64, mode: Mode, spec: &ScanSpec) -> Result<bool> {
    let rec = evaluate_point(family, p, &[mode], spec)?;
    Ok(rec.violates(mode).expect("mode was evaluated"))
}

/// Outcome of a threshold search.
#[derive(Clone, Debug, PartialEq)]
pub enum ThresholdOutcome {
    /// The predicate changes value once on the grid; bisected to this p.
    Threshold { p: f64, violating_above: bool },
    /// The predicate is constant on the grid.
    NoTransition { always: bool },
    /// More than one change on the grid; the grid intervals that contain one.
    NonMonotone { brackets: Vec<[f64; 2]> },
}

impl ThresholdOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            ThresholdOutcome::Threshold { p, .. } => Some(*p),
            _ => None,
        }
    }
}

impl Serialize for ThresholdOutcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ThresholdOutcome::Threshold { p, violating_above } => {
                let mut st = s.serialize_struct("ThresholdOutcome", 3)?;
                st.serialize_field("kind", "threshold")?;
                st.serialize_field("p", &Sci(*p))?;
                st.serialize_field("violating_above", violating_above)?;
                st.end()
            }
            ThresholdOutcome::NoTransition { always } => {
                let mut st = s.serialize_struct("ThresholdOutcome", 2)?;
                st.serialize_field("kind", "no_transition")?;
                st.serialize_field("always_violating", always)?;
                st.end()
            }
            ThresholdOutcome::NonMonotone { brackets } => {
                let b: Vec<[Sci; 2]> = brackets.iter().map(|[l, h]| [Sci(*l), Sci(*h)]).collect();
                let mut st = s.serialize_struct("ThresholdOutcome", 2)?;
                st.serialize_field("kind", "non_monotone")?;
                st.serialize_field("brackets", &b)?;
                st.end()
            }
        }
    }
}

#[derive(Serialize)]
struct Sci(#[serde(serialize_with = "serialize_sci")] f64);

/// Bisects `pred` given its values on `grid`.
pub fn bisect_on_grid(grid: &[f64], flags: &[bool], mut pred: impl FnMut(f64) -> Result<bool>) -> Result<ThresholdOutcome> {
    assert_eq!(grid.len(), flags.len());
    let changes: Vec<usize> = (1..flags.len()).filter(|&i| flags[i] != flags[i - 1]).collect();
    match changes[..] {
        [] => Ok(ThresholdOutcome::NoTransition { always: flags.first().copied().unwrap_or(false) }),
        [i] => {
            let (mut lo, mut hi) = (grid[i - 1], grid[i]);
            let lo_flag = flags[i - 1];
            while hi - lo > BISECTION_WIDTH {
                let mid = 0.5 * (lo + hi);
                if pred(mid)? == lo_flag {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(ThresholdOutcome::Threshold { p: 0.5 * (lo + hi), violating_above: !lo_flag })
        }
        _ => Ok(ThresholdOutcome::NonMonotone { brackets: changes.iter().map(|&i| [grid[i - 1], grid[i]]).collect() }),
    }
}

/// The p at which the violation predicate switches, for `mode`.
///
/// The predicate is first evaluated on `spec.p_grid`; bisection runs only
/// when it changes exactly once there.
pub fn threshold_bisect(mode: Mode, spec: &ScanSpec) -> Result<ThresholdOutcome> {
    spec.validate()?;
    let flags: Vec<bool> = spec
        .p_grid
        .par_iter()
        .map(|&p| predicate(&spec.family, p, mode, spec))
        .collect::<Result<_>>()?;
    bisect_on_grid(&spec.p_grid, &flags, |p| predicate(&spec.family, p, mode, spec))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    Fig1,
    Fig2,
}

impl Figure {
    pub fn family(self) -> Family {
        match self {
            Figure::Fig1 => Family::chi(),
            Figure::Fig2 => Family::GhzColoredNoise,
        }
    }
}

/// A labeled constant shown alongside the curves.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Annotation {
    pub label: &'static str,
    #[serde(serialize_with = "serialize_sci")]
    pub p: f64,
    /// Always "external": the value is quoted, not computed.
    pub source: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub unfiltered: Option<ThresholdOutcome>,
    pub filtered: Option<ThresholdOutcome>,
}

/// Per-p curves, thresholds and the activation window.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationReport {
    pub figure: Option<Figure>,
    pub spec: ScanSpec,
    pub records: Vec<PointRecord>,
    pub thresholds: Thresholds,
    /// p range where the filtered state violates and the unfiltered one does
    /// not.
    pub activation_window: Option<[f64; 2]>,
    pub annotations: Vec<Annotation>,
}

pub const CSV_HEADER: &str =
    "p,unfiltered_bound,unfiltered_attained,x,y,z,filtered_bound,filtered_attained,violates_before,violates_after";

impl ActivationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        let num = |v: Option<f64>| v.map(sci).unwrap_or_default();
        let flag = |v: Option<bool>| v.map(|b| b.to_string()).unwrap_or_default();
        for r in &self.records {
            let u = r.unfiltered.as_ref();
            let f = r.filtered.as_ref();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                sci(r.p),
                num(u.map(|u| u.bound)),
                num(u.map(|u| u.achieved)),
                num(f.map(|f| f.filter.x)),
                num(f.map(|f| f.filter.y)),
                num(f.map(|f| f.filter.z)),
                num(f.map(|f| f.report.bound)),
                num(f.map(|f| f.report.achieved)),
                flag(r.violates_before()),
                flag(r.violates_after()),
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[derive(Serialize)]
struct RecordJson<'a> {
    #[serde(serialize_with = "serialize_sci")]
    p: f64,
    unfiltered: Option<&'a BoundReport>,
    filter: Option<FilterJson>,
    filtered: Option<&'a BoundReport>,
    violates_before: Option<bool>,
    violates_after: Option<bool>,
}

#[derive(Serialize)]
struct FilterJson {
    #[serde(serialize_with = "serialize_sci")]
    x: f64,
    #[serde(serialize_with = "serialize_sci")]
    y: f64,
    #[serde(serialize_with = "serialize_sci")]
    z: f64,
    #[serde(serialize_with = "serialize_sci")]
    n: f64,
    restricted: bool,
}

impl Serialize for ActivationReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Window(
            #[serde(serialize_with = "serialize_sci")] f64,
            #[serde(serialize_with = "serialize_sci")] f64,
        );
        let records: Vec<RecordJson> = self
            .records
            .iter()
            .map(|r| RecordJson {
                p: r.p,
                unfiltered: r.unfiltered.as_ref(),
                filter: r.filtered.as_ref().map(|f| FilterJson {
                    x: f.filter.x,
                    y: f.filter.y,
                    z: f.filter.z,
                    n: f.n_factor,
                    restricted: f.restricted,
                }),
                filtered: r.filtered.as_ref().map(|f| &f.report),
                violates_before: r.violates_before(),
                violates_after: r.violates_after(),
            })
            .collect();
        let mut st = s.serialize_struct("ActivationReport", 8)?;
        st.serialize_field("figure", &self.figure)?;
        st.serialize_field("family", &self.spec.family)?;
        st.serialize_field("seed", &self.spec.seed)?;
        st.serialize_field("classical_bound", &Sci(CLASSICAL_BOUND))?;
        st.serialize_field("thresholds", &self.thresholds)?;
        st.serialize_field("activation_window", &self.activation_window.map(|[a, b]| Window(a, b)))?;
        st.serialize_field("annotations", &self.annotations)?;
        st.serialize_field("records", &records)?;
        st.end()
    }
}

fn threshold_from_records(records: &[PointRecord], mode: Mode, spec: &ScanSpec) -> Result<Option<ThresholdOutcome>> {
    let flags: Option<Vec<bool>> = records.iter().map(|r| r.violates(mode)).collect();
    let Some(flags) = flags else { return Ok(None) };
    let grid: Vec<f64> = records.iter().map(|r| r.p).collect();
    bisect_on_grid(&grid, &flags, |p| predicate(&spec.family, p, mode, spec)).map(Some)
}

fn activation_window(th: &Thresholds) -> Option<[f64; 2]> {
    use ThresholdOutcome::*;
    let lower = match th.filtered.as_ref()? {
        Threshold { p, violating_above: true } => *p,
        NoTransition { always: true } => 0.0,
        _ => return None,
    };
    let upper = match th.unfiltered.as_ref()? {
        Threshold { p, violating_above: true } => *p,
        NoTransition { always: false } => 1.0,
        _ => return None,
    };
    (lower < upper).then_some([lower, upper])
}

/// Evaluates every grid point for the given curves and locates thresholds.
pub fn scan(spec: &ScanSpec, modes: &[Mode]) -> Result<ActivationReport> {
    spec.validate()?;
    let records: Vec<PointRecord> = spec
        .p_grid
        .par_iter()
        .map(|&p| evaluate_point(&spec.family, p, modes, spec))
        .collect::<Result<_>>()?;
    let thresholds = Thresholds {
        unfiltered: threshold_from_records(&records, Mode::Unfiltered, spec)?,
        filtered: threshold_from_records(&records, Mode::Filtered, spec)?,
    };
    let activation_window = activation_window(&thresholds);
    Ok(ActivationReport { figure: None, spec: spec.clone(), records, thresholds, activation_window, annotations: vec![] })
}

/// Both curves for one of the two figures. `spec.family` is replaced by the
/// figure's family.
pub fn figure_data(figure: Figure, spec: &ScanSpec) -> Result<ActivationReport> {
    let spec = ScanSpec { family: figure.family(), ..spec.clone() };
    let mut report = scan(&spec, &[Mode::Unfiltered, Mode::Filtered])?;
    report.figure = Some(figure);
    if figure == Figure::Fig1 {
        report.annotations.push(Annotation {
            label: "bi-local model boundary",
            p: BILOCAL_BOUNDARY_CHI,
            source: "external",
        });
    }
    Ok(report)
}
