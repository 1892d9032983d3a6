//! Attainment of the 4λ₁ bound.
//!
//! The bound is attained when the leading right singular subspace of M is
//! at least two-dimensional and contains vectors of the form
//! `a⊗c − a′⊗c′` and `a⊗c′ + a′⊗c` for unit `a, a′, c, c′`. These two
//! vectors are always orthogonal and their squared norms add up to 4, so it
//! is enough that both lie in the subspace; their norms may differ when
//! `a·a′ ≠ 0`.
//!
//! The search minimizes `‖(I − P)u₁‖² + ‖(I − P)u₂‖²`, with `P` the
//! projector on the subspace, over the spherical angles of the four
//! vectors. Each start is refined with Levenberg-Marquardt.

use nalgebra::{SMatrix, SVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::serialize_sci;
use crate::linalg::{dot, outer3, SvdResult, Vec3, Vec9};
use crate::random::{rng_stream, unit_vector};
use crate::svetlichny::{optimal_bb, target_vectors, CorrelationMatrix, MeasurementSettings};

/// Residual at or below which a decomposition counts as found.
pub const FOUND_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TightnessConfig {
    pub starts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for TightnessConfig {
    fn default() -> Self {
        Self { starts: 64, max_iterations: 2000, seed: crate::DEFAULT_SEED }
    }
}

/// Outcome of the decomposition search.
///
/// When `found`, `v1 = P(a⊗c − a′⊗c′)` and `v2 = P(a⊗c′ + a′⊗c)` are the
/// subspace vectors matched by the decomposition and
/// `‖v1 − u₁‖² + ‖v2 − u₂‖² = residual²`. `mixing_angle` is the direction
/// of `v1` in the plane of the first two basis vectors of the subspace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionResult {
    pub found: bool,
    pub a: Vec3,
    pub a_p: Vec3,
    pub c: Vec3,
    pub c_p: Vec3,
    #[serde(serialize_with = "serialize_sci")]
    pub mixing_angle: f64,
    /// `INFINITY` when no search was run.
    #[serde(serialize_with = "serialize_sci")]
    pub residual: f64,
    pub degeneracy: usize,
    pub v1: Vec9,
    pub v2: Vec9,
}

impl DecompositionResult {
    fn not_searched(degeneracy: usize) -> Self {
        Self {
            found: false,
            a: [1.0, 0.0, 0.0],
            a_p: [1.0, 0.0, 0.0],
            c: [1.0, 0.0, 0.0],
            c_p: [1.0, 0.0, 0.0],
            mixing_angle: 0.0,
            residual: f64::INFINITY,
            degeneracy,
            v1: [0.0; 9],
            v2: [0.0; 9],
        }
    }
}

/// Projection onto a subspace with an orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: Vec<Vec9>,
}

impl Subspace {
    pub fn new(basis: Vec<Vec9>) -> Self {
        Self { basis }
    }

    pub fn basis(&self) -> &[Vec9] {
        &self.basis
    }

    pub fn project(&self, v: &Vec9) -> Vec9 {
        let mut out = [0.0; 9];
        for e in &self.basis {
            let d = dot(e, v);
            for i in 0..9 {
                out[i] += d * e[i];
            }
        }
        out
    }

    /// `(I − P)v`.
    pub fn reject(&self, v: &Vec9) -> Vec9 {
        let p = self.project(v);
        let mut out = *v;
        for i in 0..9 {
            out[i] -= p[i];
        }
        out
    }

    /// `√(‖(I−P)u₁‖² + ‖(I−P)u₂‖²)` for the target vectors of `a, a′, c, c′`.
    pub fn decomposition_residual(&self, a: &Vec3, a_p: &Vec3, c: &Vec3, c_p: &Vec3) -> f64 {
        let (u1, u2) = target_vectors(a, a_p, c, c_p);
        let (r1, r2) = (self.reject(&u1), self.reject(&u2));
        (dot(&r1, &r1) + dot(&r2, &r2)).sqrt()
    }
}

fn sphere_point(theta: f64, phi: f64) -> (Vec3, Vec3, Vec3) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let v = [st * cp, st * sp, ct];
    let d_theta = [ct * cp, ct * sp, -st];
    let d_phi = [-st * sp, st * cp, 0.0];
    (v, d_theta, d_phi)
}

fn sphere_angles(v: &Vec3) -> (f64, f64) {
    (v[2].clamp(-1.0, 1.0).acos(), v[1].atan2(v[0]))
}

type Params = SVector<f64, 8>;

struct Problem<'a> {
    space: &'a Subspace,
}

impl Problem<'_> {
    fn vectors(&self, x: &Params) -> [Vec3; 4] {
        [0, 1, 2, 3].map(|k| sphere_point(x[2 * k], x[2 * k + 1]).0)
    }

    /// Residual vector (18 entries) and Jacobian (18×8).
    fn eval(&self, x: &Params) -> (SVector<f64, 18>, SMatrix<f64, 18, 8>) {
        let pts = [0, 1, 2, 3].map(|k| sphere_point(x[2 * k], x[2 * k + 1]));
        let [(a, da_t, da_p), (ap, dap_t, dap_p), (c, dc_t, dc_p), (cp, dcp_t, dcp_p)] = pts;
        let (u1, u2) = target_vectors(&a, &ap, &c, &cp);
        let r1 = self.space.reject(&u1);
        let r2 = self.space.reject(&u2);
        let mut r = SVector::<f64, 18>::zeros();
        for i in 0..9 {
            r[i] = r1[i];
            r[9 + i] = r2[i];
        }

        // d u1, d u2 with respect to each of the eight angles.
        let neg = |v: Vec9| v.map(|x| -x);
        let derivs: [(Vec9, Vec9); 8] = [
            (outer3(&da_t, &c), outer3(&da_t, &cp)),
            (outer3(&da_p, &c), outer3(&da_p, &cp)),
            (neg(outer3(&dap_t, &cp)), outer3(&dap_t, &c)),
            (neg(outer3(&dap_p, &cp)), outer3(&dap_p, &c)),
            (outer3(&a, &dc_t), outer3(&ap, &dc_t)),
            (outer3(&a, &dc_p), outer3(&ap, &dc_p)),
            (neg(outer3(&ap, &dcp_t)), outer3(&a, &dcp_t)),
            (neg(outer3(&ap, &dcp_p)), outer3(&a, &dcp_p)),
        ];
        let mut jac = SMatrix::<f64, 18, 8>::zeros();
        for (col, (d1, d2)) in derivs.iter().enumerate() {
            let (q1, q2) = (self.space.reject(d1), self.space.reject(d2));
            for i in 0..9 {
                jac[(i, col)] = q1[i];
                jac[(9 + i, col)] = q2[i];
            }
        }
        (r, jac)
    }

    fn cost(&self, x: &Params) -> f64 {
        let [a, ap, c, cp] = self.vectors(x);
        self.space.decomposition_residual(&a, &ap, &c, &cp).powi(2)
    }
}

/// Levenberg-Marquardt from `x`; returns the final point and its squared
/// residual.
fn refine(problem: &Problem<'_>, mut x: Params, max_iterations: usize) -> (Params, f64) {
    let mut mu = 1e-3;
    let (mut r, mut jac) = problem.eval(&x);
    let mut cost = r.norm_squared();
    for _ in 0..max_iterations {
        if cost < 1e-30 {
            break;
        }
        let jtj = jac.transpose() * jac;
        let g = jac.transpose() * r;
        let mut accepted = false;
        let mut small_step = false;
        while mu < 1e12 {
            let mut lhs = jtj;
            for i in 0..8 {
                lhs[(i, i)] += mu;
            }
            let Some(chol) = lhs.cholesky() else {
                mu *= 4.0;
                continue;
            };
            let step = -chol.solve(&g);
            let trial = x + step;
            let trial_cost = problem.cost(&trial);
            if trial_cost < cost {
                let improvement = cost - trial_cost;
                small_step = step.norm() < 1e-12 && improvement < 1e-12;
                x = trial;
                cost = trial_cost;
                mu = (mu / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted || small_step {
            break;
        }
        (r, jac) = problem.eval(&x);
    }
    (x, cost)
}

fn random_start<R: Rng>(rng: &mut R) -> Params {
    let mut x = Params::zeros();
    for k in 0..4 {
        let (t, p) = sphere_angles(&unit_vector(rng));
        x[2 * k] = t;
        x[2 * k + 1] = p;
    }
    x
}

/// Number of starts run in parallel before checking for an exact hit.
const START_BATCH: usize = 8;
const EXACT_HIT: f64 = 1e-10;

/// Searches the leading singular subspace for the decomposition that
/// certifies the bound as attained.
///
/// If λ₁ is nondegenerate no search is made and `found` is false: the
/// bound is then not certified tight, which does not mean it is not
/// attained.
pub fn check_tightness(svd: &SvdResult, cfg: &TightnessConfig) -> DecompositionResult {
    let degeneracy = svd.degeneracy();
    let space = Subspace::new(svd.leading_subspace());
    if space.basis().len() < 2 {
        return DecompositionResult::not_searched(degeneracy);
    }
    let problem = Problem { space: &space };

    let mut best: Option<(f64, Params)> = None;
    let mut start = 0;
    while start < cfg.starts.max(1) {
        let end = (start + START_BATCH).min(cfg.starts.max(1));
        let batch: Vec<(f64, Params)> = (start..end)
            .into_par_iter()
            .map(|idx| {
                let mut rng = rng_stream(cfg.seed, idx as u64);
                let (x, cost) = refine(&problem, random_start(&mut rng), cfg.max_iterations);
                (cost, x)
            })
            .collect();
        for cand in batch {
            if best.as_ref().is_none_or(|(c, _)| cand.0 < *c) {
                best = Some(cand);
            }
        }
        if best.as_ref().is_some_and(|(c, _)| c.sqrt() <= EXACT_HIT) {
            break;
        }
        start = end;
    }

    let (_, x) = best.expect("at least one start");
    let [a, a_p, c, c_p] = problem.vectors(&x);
    let residual = space.decomposition_residual(&a, &a_p, &c, &c_p);
    let (u1, u2) = target_vectors(&a, &a_p, &c, &c_p);
    let v1 = space.project(&u1);
    let v2 = space.project(&u2);
    let basis = space.basis();
    let mixing_angle = dot(&basis[1], &v1).atan2(dot(&basis[0], &v1));
    DecompositionResult {
        found: residual <= FOUND_TOL,
        a,
        a_p,
        c,
        c_p,
        mixing_angle,
        residual,
        degeneracy,
        v1,
        v2,
    }
}

/// Full settings for a found decomposition, with `(b, b′)` from
/// [`optimal_bb`]. The returned value is `‖u+w‖ + ‖u−w‖`.
pub fn assemble_settings(dec: &DecompositionResult, corr: &CorrelationMatrix) -> Result<(MeasurementSettings, f64)> {
    if !dec.found {
        return Err(Error::Precondition("no decomposition was found; the bound is not certified tight".into()));
    }
    let (b, b_p, value) = optimal_bb(&corr.m, &dec.a, &dec.a_p, &dec.c, &dec.c_p);
    let settings = MeasurementSettings::new(dec.a, dec.a_p, b, b_p, dec.c, dec.c_p)?;
    Ok((settings, value))
}
