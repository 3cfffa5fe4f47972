//! Explicit curves `s -> (c(s), P(s))` realizing closure paths, their
//! convergence check, and a Monte-Carlo perturbation experiment.
//!
//! A witness for `src -> dst` satisfies
//! `act_pair(curve(s), representative(dst)) -> representative(src)` as `s -> 0`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::closure::{pair_path, ClosureError};
use crate::congruence::StarClass;
use crate::matcore::{act_pair, c, cis, mat, pair_distance, GroupElement, Mat2, MatError, MatrixPair, Sym2, C64};
use crate::pairnf::{classify_pair, representative, BForm, OrbitClass};

pub const DEFAULT_S0: f64 = 0.5;
pub const DEFAULT_SWEEP: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

type Curve = Arc<dyn Fn(f64) -> Result<GroupElement, MatError> + Send + Sync>;

#[derive(Clone)]
pub struct WitnessFamily {
    pub id: &'static str,
    pub src: OrbitClass,
    pub dst: OrbitClass,
    pub citation: String,
    curve: Curve,
}

impl fmt::Debug for WitnessFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WitnessFamily").field("id", &self.id).field("src", &self.src).field("dst", &self.dst).finish()
    }
}

impl WitnessFamily {
    pub fn curve(&self, s: f64) -> Result<GroupElement, MatError> {
        (self.curve)(s)
    }

    /// `act_pair(curve(s), representative(dst))`.
    pub fn image(&self, s: f64) -> Result<MatrixPair, MatError> {
        Ok(act_pair(&self.curve(s)?, &representative(&self.dst)))
    }

    pub fn residual(&self, s: f64) -> Result<f64, MatError> {
        Ok(pair_distance(&self.image(s)?, &representative(&self.src)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessSummary {
    pub id: &'static str,
    pub src: OrbitClass,
    pub dst: OrbitClass,
    pub citation: String,
}

impl From<&WitnessFamily> for WitnessSummary {
    fn from(w: &WitnessFamily) -> Self {
        WitnessSummary { id: w.id, src: w.src, dst: w.dst, citation: w.citation.clone() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("residuals do not decrease across the sweep: {0:?}")]
    DivergenceDetected(Vec<f64>),
    #[error("s values must be positive and strictly decreasing")]
    BadSweep,
    #[error(transparent)]
    Group(#[from] MatError),
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub id: &'static str,
    pub s_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub monotone: bool,
    pub final_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

pub fn verify_witness(w: &WitnessFamily, s_values: &[f64], tol: f64) -> Result<ConvergenceReport, WitnessError> {
    if s_values.is_empty() || s_values.iter().any(|&s| !(s > 0.0)) || s_values.windows(2).any(|p| p[1] >= p[0]) {
        return Err(WitnessError::BadSweep);
    }
    let residuals = s_values.iter().map(|&s| w.residual(s)).collect::<Result<Vec<_>, _>>()?;
    let first = residuals[0];
    let last = *residuals.last().unwrap();
    if residuals.len() > 1 && !(last < first) && last > tol {
        return Err(WitnessError::DivergenceDetected(residuals));
    }
    let monotone = residuals.windows(2).all(|p| p[1] < p[0] || p[1] <= tol * 1e-3);
    Ok(ConvergenceReport {
        id: w.id,
        s_values: s_values.to_vec(),
        final_residual: last,
        monotone,
        passed: monotone && last <= tol,
        tol,
        residuals,
    })
}

// ---------------------------------------------------------------------------
// catalog

fn cls(a: StarClass, b: BForm) -> OrbitClass {
    OrbitClass::new(a, b).expect("catalog class")
}

fn entry<F>(id: &'static str, src: OrbitClass, dst: OrbitClass, citation: &str, f: F) -> WitnessFamily
where
    F: Fn(f64) -> (C64, Mat2) + Send + Sync + 'static,
{
    WitnessFamily {
        id,
        src,
        dst,
        citation: citation.to_string(),
        curve: Arc::new(move |s| {
            let (cc, p) = f(s);
            GroupElement::new(cc, p)
        }),
    }
}

fn r(x: f64) -> C64 {
    c(x, 0.0)
}

fn one() -> C64 {
    c(1.0, 0.0)
}

fn zero() -> C64 {
    c(0.0, 0.0)
}

/// Fixed parameter choices used by the catalog instances.
const TAU: f64 = 0.5;
const THETA: f64 = PI / 4.0;
const BB: f64 = 0.8;
const DD: f64 = 1.5;
const AA: f64 = 0.7;
const AT: f64 = 0.6;
const PHI: f64 = 0.9;

pub fn witness_catalog() -> Vec<WitnessFamily> {
    use StarClass::*;
    let semidef_zero = cls(Rank1Semidef, BForm::Zero);
    let first = cls(Rank1Semidef, BForm::First { a: AT });
    let s_zero = cls(Indefinite, BForm::Zero);
    let zero_e11 = cls(Zero, BForm::UnitFirst);
    let rec = Reciprocal { tau: TAU };
    let mut v = Vec::new();

    v.push(entry("diag-scale-unimodular", semidef_zero, cls(Unimodular { theta: THETA }, BForm::Zero), "diagonal scaling diag(1, s) of the second coordinate", |s| (one(), mat(one(), zero(), zero(), r(s)))));
    v.push(entry("diag-scale-definite", semidef_zero, cls(Definite, BForm::Zero), "diagonal scaling diag(1, s) of the second coordinate", |s| (one(), mat(one(), zero(), zero(), r(s)))));
    v.push(entry("diag-scale-indefinite", semidef_zero, s_zero, "diagonal scaling diag(1, s) of the second coordinate", |s| (one(), mat(one(), zero(), zero(), r(s)))));
    v.push(entry("shear-reciprocal", semidef_zero, cls(rec, BForm::Zero), "lower triangular shear normalized by 1/sqrt(1+tau)", |s| {
        let k = 1.0 / (1.0 + TAU).sqrt();
        (one(), mat(r(k), zero(), r(k), r(k * s)))
    }));
    v.push(entry("shear-nilpotent", semidef_zero, cls(Rank1Nilpotent, BForm::Zero), "lower triangular shear with unit columns", |s| (one(), mat(one(), zero(), one(), r(s)))));
    v.push(entry("split-indefinite-to-jordan", s_zero, cls(JordanType, BForm::Zero), "rows (1/s, 1/s) and (s, -s) with normalization 1/sqrt(2)", |s| {
        let k = FRAC_1_SQRT_2;
        (one(), mat(r(k / s), r(k / s), r(k * s), r(-k * s)))
    }));
    v.push(entry("upper-shear-phase-head", cls(rec, BForm::Anti { b: BB }), cls(rec, BForm::PhaseHead { phi: PHI, b: BB, zeta: zero() }), "upper triangular [[s, s^2], [0, 1/s]]", |s| (one(), mat(r(s), r(s * s), zero(), r(1.0 / s)))));
    v.push(entry("upper-shear-nilpotent", cls(Rank1Nilpotent, BForm::Anti { b: BB }), cls(Rank1Nilpotent, BForm::UnitHeadAnti { b: BB }), "upper triangular [[s, s^2], [0, 1/s]]", |s| (one(), mat(r(s), r(s * s), zero(), r(1.0 / s)))));
    v.push(entry("lower-shear-phase-tail", cls(rec, BForm::Anti { b: BB }), cls(rec, BForm::PhaseTail { b: BB, phi: PHI }), "lower triangular [[1/s, 0], [s^2, s]]", |s| (one(), mat(r(1.0 / s), zero(), r(s * s), r(s)))));
    v.push(entry("lower-shear-nilpotent", cls(Rank1Nilpotent, BForm::Anti { b: BB }), cls(Rank1Nilpotent, BForm::ComplexHead { zeta: zero(), b: BB }), "lower triangular [[1/s, 0], [s^2, s]]", |s| (one(), mat(r(1.0 / s), zero(), r(s * s), r(s)))));
    v.push(entry("stabilizer-scale-head", cls(rec, BForm::Zero), cls(rec, BForm::UnitHead { zeta: zero() }), "diagonal stabilizer element diag(s, 1/s)", |s| (one(), mat(r(s), zero(), zero(), r(1.0 / s)))));
    v.push(entry("stabilizer-scale-second", cls(rec, BForm::Zero), cls(rec, BForm::UnitSecond), "diagonal stabilizer element diag(1/s, s)", |s| (one(), mat(r(1.0 / s), zero(), zero(), r(s)))));
    v.push(entry("nilpotent-scale-first", cls(Rank1Nilpotent, BForm::Zero), cls(Rank1Nilpotent, BForm::UnitFirst), "diagonal stabilizer element diag(s, 1/s)", |s| (one(), mat(r(s), zero(), zero(), r(1.0 / s)))));
    v.push(entry("jordan-corner", s_zero, cls(JordanType, BForm::Second { d: DD }), "rows (1/(2s), -1/(2s)) and (s, s)", |s| (one(), mat(r(0.5 / s), r(-0.5 / s), r(s), r(s)))));
    v.push(entry("jordan-anti-scalar", cls(Indefinite, BForm::Repeated { d0: BB, d: BB }), cls(JordanType, BForm::Anti { b: BB }), "c = -1 with rows (i/s, 1/s) and (-is, s) over sqrt(2)", |s| {
        let k = FRAC_1_SQRT_2;
        (r(-1.0), mat(c(0.0, k / s), r(k / s), c(0.0, -k * s), r(k * s)))
    }));
    v.push(entry("swap-frame-isotropic", s_zero, cls(Indefinite, BForm::UnitFirst), "rows (s, -s) and (1/(2s), 1/(2s))", |s| (one(), mat(r(s), r(-s), r(0.5 / s), r(0.5 / s)))));
    v.push(entry("swap-frame-anti-tail", cls(Indefinite, BForm::Repeated { d0: 1.0, d: 1.0 }), cls(Indefinite, BForm::AntiUnitTail { b: 1.0 }), "rows (1/(2s), -i/(2s)) and (s, is)", |s| (one(), mat(r(0.5 / s), c(0.0, -0.5 / s), r(s), c(0.0, s)))));
    v.push(entry("column-sum-indefinite", zero_e11, cls(Indefinite, BForm::Diag { a: AA, d: DD }), "first column (1, 1) normalized by 1/sqrt(a + d + 2b)", |s| {
        let k = 1.0 / (AA + DD).sqrt();
        (one(), mat(r(k), zero(), r(k), r(k * s)))
    }));
    v.push(entry("column-sum-indefinite-anti", zero_e11, cls(Indefinite, BForm::Anti { b: BB }), "first column (1, 1) normalized by 1/sqrt(a + d + 2b)", |s| {
        let k = 1.0 / (2.0 * BB).sqrt();
        (one(), mat(r(k), zero(), r(k), r(k * s)))
    }));
    v.push(entry("jordan-anti-rank-one", zero_e11, cls(JordanType, BForm::Anti { b: BB }), "rows (1/s, s^2) and (-is, s^2) scaled by (1+i)/(2 sqrt(b))", |s| {
        let k = c(1.0, 1.0) / (2.0 * BB.sqrt());
        (one(), mat(k / s, k * (s * s), k * c(0.0, -s), k * (s * s)))
    }));
    v.push(entry("jordan-diag-rank-one", zero_e11, cls(JordanType, BForm::DiagComplex { a: AA, zeta: c(0.4, -0.3) }), "diagonal (1/sqrt(a), s)", |s| (one(), mat(r(1.0 / AA.sqrt()), zero(), zero(), r(s)))));
    v.push(entry("reciprocal-head-rank-one", zero_e11, cls(rec, BForm::PhaseHead { phi: PHI, b: BB, zeta: c(0.2, 0.5) }), "diagonal (e^{-i phi/2}, s)", |s| (one(), mat(cis(-PHI / 2.0), zero(), zero(), r(s)))));
    v.push(entry("reciprocal-tail-rank-one", zero_e11, cls(rec, BForm::PhaseTail { b: BB, phi: PHI }), "antidiagonal (s, e^{-i phi/2})", |s| (one(), mat(zero(), r(s), cis(-PHI / 2.0), zero()))));
    v.push(entry("semidef-tail-rank-one", zero_e11, cls(Rank1Semidef, BForm::DiagUnitTail { a: AA }), "rows (s, s) and (1, s)", |s| (one(), mat(r(s), r(s), one(), r(s)))));
    v.push(entry("semidef-swap-rank-one", zero_e11, cls(Rank1Semidef, BForm::UnitAnti), "rows (s, s^2) and (1/s, s^2) over sqrt(2)", |s| {
        let k = FRAC_1_SQRT_2;
        (one(), mat(r(k * s), r(k * s * s), r(k / s), r(k * s * s)))
    }));
    v.push(entry("semidef-swap-identity", cls(Zero, BForm::Identity), cls(Rank1Semidef, BForm::UnitAnti), "rows (s, is) and (1/s, -i/s) over sqrt(2)", |s| {
        let k = FRAC_1_SQRT_2;
        (one(), mat(r(k * s), c(0.0, k * s), r(k / s), c(0.0, -k / s)))
    }));
    v.push(entry("semidef-swap-first", first, cls(Rank1Semidef, BForm::UnitAnti), "rows (1, s) and (a/2, 0)", |s| (one(), mat(one(), r(s), r(AT / 2.0), zero()))));
    v.push(entry("semidef-tail-first", first, cls(Rank1Semidef, BForm::DiagUnitTail { a: 0.25 }), "rows (1, 0) and (sqrt(a~ - a), s)", |s| (one(), mat(one(), zero(), r((AT - 0.25).sqrt()), r(s)))));
    v.push(entry("definite-below", first, cls(Definite, BForm::Diag { a: AA, d: DD }), "first column (sqrt(a~ + d), i sqrt(a - a~)) over sqrt(a + d)", |s| {
        let k = 1.0 / (AA + DD).sqrt();
        (one(), mat(r(k * (AT + DD).sqrt()), zero(), c(0.0, k * (AA - AT).sqrt()), r(s)))
    }));
    v.push(entry("definite-between", first, cls(Definite, BForm::Diag { a: 0.3, d: DD }), "first column (sqrt(d - a~), sqrt(a~ - a)) over sqrt(d - a)", |s| {
        let a = 0.3;
        let k = 1.0 / (DD - a).sqrt();
        (one(), mat(r(k * (DD - AT).sqrt()), zero(), r(k * (AT - a).sqrt()), r(s)))
    }));
    v.push(entry("indefinite-above", first, cls(Indefinite, BForm::Diag { a: 0.3, d: DD }), "first column (sqrt(a~ + d), sqrt(a~ - a)) over sqrt(a + d)", |s| {
        let a = 0.3;
        let k = 1.0 / (a + DD).sqrt();
        (one(), mat(r(k * (AT + DD).sqrt()), zero(), r(k * (AT - a).sqrt()), r(s)))
    }));
    v.push(entry("indefinite-below", first, cls(Indefinite, BForm::Diag { a: AA, d: DD }), "first column (sqrt(d - a~), i sqrt(a - a~)) over sqrt(d - a)", |s| {
        let k = 1.0 / (DD - AA).sqrt();
        (one(), mat(r(k * (DD - AT).sqrt()), zero(), c(0.0, k * (AA - AT).sqrt()), r(s)))
    }));
    v.push(entry("indefinite-anti", first, cls(Indefinite, BForm::Anti { b: BB }), "first column (x, u) with x^2 - u^2 = 1 and 2bxu = a~", |s| {
        let q = (BB * BB + AT * AT).sqrt();
        let x = ((BB + q) / (2.0 * BB)).sqrt();
        let u = ((q - BB) / (2.0 * BB)).sqrt();
        (one(), mat(r(x), r(s), r(u), r(s)))
    }));
    v.push(entry("swap-frame-first", first, cls(Indefinite, BForm::UnitFirst), "G [[sqrt(p^2+1), 0], [-p, s^2]] with G = [[1, 1], [1/2, -1/2]] and p = (1 - a~)/(2 sqrt(a~))", |s| {
        let p = (1.0 - AT) / (2.0 * AT.sqrt());
        let inner = mat(r((p * p + 1.0).sqrt()), zero(), r(-p), r(s * s));
        let g = mat(one(), one(), r(0.5), r(-0.5));
        (one(), g * inner)
    }));
    v.push(entry("jordan-anti-first", first, cls(JordanType, BForm::Anti { b: BB }), "c = -i with rows (a~(1-i)/(2b), s) and (1+i, s) over sqrt(2)", |s| {
        let k = FRAC_1_SQRT_2;
        (c(0.0, -1.0), mat(c(1.0, -1.0) * (k * AT / (2.0 * BB)), r(k * s), c(k, k), r(k * s)))
    }));
    v.push(entry("jordan-diag-first", first, cls(JordanType, BForm::DiagComplex { a: AA, zeta: zero() }), "c = -i with rows (sqrt(a~/a), s) and (i, 0)", |s| (c(0.0, -1.0), mat(r((AT / AA).sqrt()), r(s), c(0.0, 1.0), zero()))));
    v.push(entry("jordan-corner-zero", semidef_zero, cls(JordanType, BForm::Second { d: DD }), "rows (1/s, s) and (s, 0) over sqrt(2)", |s| {
        let k = FRAC_1_SQRT_2;
        (one(), mat(r(k / s), r(k * s), r(k * s), zero()))
    }));
    v.push(entry("jordan-corner-first", first, cls(JordanType, BForm::Second { d: DD }), "c = (sqrt(d^2 - a~^2) - i a~)/d with rows (sqrt(d^2 - a~^2), s) and (2 a~, 0) over 2 sqrt(a~ d)", |s| {
        let w = (DD * DD - AT * AT).sqrt();
        let k = 1.0 / (2.0 * (AT * DD).sqrt());
        (c(w / DD, -AT / DD), mat(r(k * w), r(k * s), r(k * 2.0 * AT), zero()))
    }));
    v
}

// ---------------------------------------------------------------------------
// perturbation experiment

#[derive(Debug, Clone, Serialize)]
pub struct PerturbReport {
    pub source: OrbitClass,
    pub epsilon: f64,
    pub samples: usize,
    /// Reached families keyed by `"<A>|<B>"`; failed classifications under `"unresolved"`.
    pub histogram: BTreeMap<String, usize>,
    pub violations: Vec<OrbitClass>,
    pub unknown_edges: usize,
    pub unresolved: usize,
}

enum Outcome {
    Reached(OrbitClass, Result<bool, ClosureError>),
    Unresolved,
}

fn ball_sample(rng: &mut ChaCha8Rng, eps: f64) -> C64 {
    c(rng.random_range(-eps..=eps), rng.random_range(-eps..=eps))
}

/// One perturbation of `rep` with entries uniform in the `eps` max-norm ball.
pub fn perturbed_pair(rep: &MatrixPair, eps: f64, rng: &mut ChaCha8Rng) -> MatrixPair {
    let mut e = Mat2::zeros();
    for k in 0..4 {
        e[(k / 2, k % 2)] = ball_sample(rng, eps);
    }
    let f = Sym2::from_entries(ball_sample(rng, eps), ball_sample(rng, eps), ball_sample(rng, eps));
    MatrixPair { a: rep.a + e, b: Sym2::symmetrize(&(rep.b.matrix() + f.matrix())) }
}

pub fn perturb_experiment(cls: &OrbitClass, eps: f64, n: usize, seed: u64) -> PerturbReport {
    perturb_experiment_tol(cls, eps, n, seed, crate::matcore::DEFAULT_TOL)
}

pub fn perturb_experiment_tol(cls: &OrbitClass, eps: f64, n: usize, seed: u64, tol: f64) -> PerturbReport {
    let rep = representative(cls);
    let outcomes: Vec<Outcome> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let p = perturbed_pair(&rep, eps, &mut rng);
            match classify_pair(&p, tol) {
                Ok(found) => Outcome::Reached(found.cls, pair_path(cls, &found.cls)),
                Err(_) => Outcome::Unresolved,
            }
        })
        .collect();
    let mut report = PerturbReport {
        source: *cls,
        epsilon: eps,
        samples: n,
        histogram: BTreeMap::new(),
        violations: Vec::new(),
        unknown_edges: 0,
        unresolved: 0,
    };
    for o in outcomes {
        match o {
            Outcome::Reached(found, path) => {
                *report.histogram.entry(found.family_id()).or_default() += 1;
                match path {
                    Ok(true) => {}
                    Ok(false) => report.violations.push(found),
                    Err(ClosureError::UnknownEdge(..)) => report.unknown_edges += 1,
                }
            }
            Outcome::Unresolved => {
                *report.histogram.entry("unresolved".into()).or_default() += 1;
                report.unresolved += 1;
            }
        }
    }
    report
}
