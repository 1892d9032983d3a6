//! Text and JSON renderings of the analysis results.

use std::fmt::Write as _;

use serde::Serialize;

use svbound::filtering::FilteredAnalysis;
use svbound::io::{serialize_sci, serialize_sci_rows, serialize_sci_slice};
use svbound::scan::{ActivationReport, ThresholdOutcome, BISECTION_WIDTH};
use svbound::svetlichny::CLASSICAL_BOUND;
use svbound::{BoundReport, CorrelationMatrix, FilterParams, Mat3x9, MeasurementSettings, OracleResult, Vec3};

const COLUMNS: &str = "xx xy xz yx yy yz zx zy zz";

fn matrix_text(out: &mut String, m: &Mat3x9) {
    let largest = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let cell = |v: f64| {
        if largest < 1e3 {
            format!("{:>11.6}", clean(v))
        } else {
            format!("{:>11.3e}", clean(v))
        }
    };
    let _ = writeln!(out, "     {}", COLUMNS.split(' ').map(|c| format!("{c:>11}")).collect::<String>());
    for (row, name) in m.iter().zip(["x", "y", "z"]) {
        let cells: String = row.iter().map(|v| cell(*v)).collect();
        let _ = writeln!(out, "  {name}    {cells}");
    }
}

/// Prints -0.000000 as 0.000000.
fn clean(v: f64) -> f64 {
    if v.abs() < 5e-13 {
        0.0
    } else {
        v
    }
}

fn vec_text(v: &Vec3) -> String {
    format!("({:+.6}, {:+.6}, {:+.6})", clean(v[0]), clean(v[1]), clean(v[2]))
}

fn settings_text(out: &mut String, s: &MeasurementSettings) {
    for (name, v) in s.named() {
        let _ = writeln!(out, "  {name:<2} = {}", vec_text(v));
    }
}

fn verdict(rep: &BoundReport) -> &'static str {
    if rep.violates() {
        "VIOLATED (attained value exceeds 4)"
    } else {
        "not violated"
    }
}

fn report_text(out: &mut String, rep: &BoundReport, symbol: &str) {
    let _ = writeln!(out, "bound 4{symbol} = {:.10}", rep.bound);
    if rep.tight {
        let _ = writeln!(out, "tightness: attained (decomposition residual {:.1e})", rep.decomposition_residual);
    } else if rep.decomposition_residual.is_finite() {
        let _ = writeln!(
            out,
            "tightness: not certified tight (best decomposition residual {:.1e})",
            rep.decomposition_residual
        );
    } else {
        let _ = writeln!(
            out,
            "tightness: not certified tight (leading singular value has multiplicity {})",
            rep.degeneracy
        );
    }
    match rep.oracle_value {
        Some(v) => {
            let _ = writeln!(out, "see-saw value = {v:.10}");
        }
        None => {
            let _ = writeln!(out, "see-saw value = not run");
        }
    }
    let _ = writeln!(out, "attained tr(Sρ) = {:.10}", rep.achieved);
    let _ = writeln!(out, "settings:");
    settings_text(out, &rep.settings);
    let _ = writeln!(out, "classical bound {CLASSICAL_BOUND}: {}", verdict(rep));
}

pub fn bound_text(label: &str, corr: &CorrelationMatrix, rep: &BoundReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "state: {label}");
    let _ = writeln!(out, "correlation matrix M (rows: B; columns: A,C):");
    matrix_text(&mut out, &corr.m);
    let s = corr.singular_values();
    let _ = writeln!(out, "singular values: {:.10} {:.10} {:.10}", s[0], s[1], s[2]);
    report_text(&mut out, rep, "λ₁");
    out
}

fn rows(m: &Mat3x9) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

#[derive(Serialize)]
struct BoundJson<'a> {
    state: &'a str,
    #[serde(serialize_with = "serialize_sci_rows")]
    correlation_matrix: Vec<Vec<f64>>,
    #[serde(serialize_with = "serialize_sci_slice")]
    singular_values: Vec<f64>,
    report: &'a BoundReport,
    violates: bool,
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

pub fn bound_json(label: &str, corr: &CorrelationMatrix, rep: &BoundReport) -> String {
    to_json(&BoundJson {
        state: label,
        correlation_matrix: rows(&corr.m),
        singular_values: corr.singular_values().to_vec(),
        report: rep,
        violates: rep.violates(),
    })
}

pub fn filter_text(
    label: &str,
    params: FilterParams,
    optimized: bool,
    fa: &FilteredAnalysis,
    rep: &BoundReport,
    unfiltered: Option<&BoundReport>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "state: {label}");
    let how = if optimized { "best filter found" } else { "filter" };
    let _ = writeln!(
        out,
        "{how}: x = {:.10}, y = {:.10}, z = {:.10}  (diag(x,1) ⊗ diag(y,1) ⊗ diag(z,1))",
        params.x, params.y, params.z
    );
    let _ = writeln!(out, "N = {:.10}  (tr of the unnormalized filtered state: {:.10})", fa.n_factor, fa.n_raw);
    let _ = writeln!(out, "X (rows: B; columns: A,C):");
    matrix_text(&mut out, &fa.x_matrix);
    let s = fa.x_svd.singular_values;
    let _ = writeln!(out, "singular values of X/N: {:.10} {:.10} {:.10}", s[0], s[1], s[2]);
    report_text(&mut out, rep, "λ₁′");
    if let Some(u) = unfiltered {
        let _ = writeln!(
            out,
            "before filtering: bound {:.10}, attained {:.10}, {}",
            u.bound,
            u.achieved,
            verdict(u)
        );
        if rep.violates() && !u.violates() {
            let _ = writeln!(out, "hidden nonlocality: only the filtered state violates the classical bound");
        }
    }
    out
}

#[derive(Serialize)]
struct FilterJson<'a> {
    state: &'a str,
    optimized: bool,
    #[serde(serialize_with = "serialize_sci_slice")]
    filter: Vec<f64>,
    #[serde(serialize_with = "serialize_sci")]
    n: f64,
    #[serde(serialize_with = "serialize_sci")]
    n_unnormalized: f64,
    #[serde(serialize_with = "serialize_sci_rows")]
    x_matrix: Vec<Vec<f64>>,
    #[serde(serialize_with = "serialize_sci_slice")]
    singular_values: Vec<f64>,
    report: &'a BoundReport,
    violates: bool,
    unfiltered: Option<&'a BoundReport>,
}

pub fn filter_json(
    label: &str,
    params: FilterParams,
    optimized: bool,
    fa: &FilteredAnalysis,
    rep: &BoundReport,
    unfiltered: Option<&BoundReport>,
) -> String {
    to_json(&FilterJson {
        state: label,
        optimized,
        filter: params.as_array().to_vec(),
        n: fa.n_factor,
        n_unnormalized: fa.n_raw,
        x_matrix: rows(&fa.x_matrix),
        singular_values: fa.x_svd.singular_values.to_vec(),
        report: rep,
        violates: rep.violates(),
        unfiltered,
    })
}

pub fn oracle_text(label: &str, res: &OracleResult, restarts: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "state: {label}");
    let _ = writeln!(out, "see-saw maximum of tr(Sρ) over {restarts} restarts = {:.10}", res.value);
    let conv = if res.converged { "converged" } else { "sweep limit reached" };
    let _ = writeln!(out, "best run: {} sweeps, {conv}", res.sweeps_used);
    let _ = writeln!(out, "settings:");
    settings_text(&mut out, &res.settings);
    let v = if svbound::svetlichny::violates_classical_bound(res.value) { "VIOLATED" } else { "not violated" };
    let _ = writeln!(out, "classical bound {CLASSICAL_BOUND}: {v}");
    out
}

#[derive(Serialize)]
struct OracleJson<'a> {
    state: &'a str,
    restarts: usize,
    result: &'a OracleResult,
}

pub fn oracle_json(label: &str, res: &OracleResult, restarts: usize) -> String {
    to_json(&OracleJson { state: label, restarts, result: res })
}

fn threshold_text(t: &ThresholdOutcome) -> String {
    match t {
        ThresholdOutcome::Threshold { p, violating_above } => {
            let side = if *violating_above { "violation for p above" } else { "violation for p below" };
            format!("{p:.5} ± {:.0e} ({side})", BISECTION_WIDTH / 2.0)
        }
        ThresholdOutcome::NoTransition { always: true } => "none (violated everywhere on the grid)".into(),
        ThresholdOutcome::NoTransition { always: false } => "none (never violated on the grid)".into(),
        ThresholdOutcome::NonMonotone { brackets } => {
            let b: Vec<String> = brackets.iter().map(|[l, h]| format!("[{l}, {h}]")).collect();
            format!("refused: the predicate changes more than once, in {}", b.join(", "))
        }
    }
}

pub fn scan_text(rep: &ActivationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "family: {}", rep.spec.family.name());
    let _ = writeln!(
        out,
        "grid: {} points in [{}, {}]",
        rep.spec.p_grid.len(),
        rep.spec.p_grid[0],
        rep.spec.p_grid[rep.spec.p_grid.len() - 1]
    );
    let before = rep.records.iter().filter(|r| r.violates_before() == Some(true)).count();
    let after = rep.records.iter().filter(|r| r.violates_after() == Some(true)).count();
    if let Some(t) = &rep.thresholds.unfiltered {
        let _ = writeln!(out, "unfiltered: {before} violating grid points; threshold {}", threshold_text(t));
    }
    if let Some(t) = &rep.thresholds.filtered {
        let _ = writeln!(out, "filtered:   {after} violating grid points; threshold {}", threshold_text(t));
    }
    if let Some([lo, hi]) = rep.activation_window {
        let _ = writeln!(out, "activation window (filtered violates, unfiltered does not): [{lo:.5}, {hi:.5}]");
    }
    for a in &rep.annotations {
        let _ = writeln!(out, "annotation: {} at p = {} ({})", a.label, a.p, a.source);
        if let Some(ThresholdOutcome::Threshold { p, violating_above: true }) = &rep.thresholds.filtered {
            if *p < a.p {
                let _ = writeln!(out, "hidden nonlocality window: [{p:.5}, {}]", a.p);
            }
        }
    }
    out
}
