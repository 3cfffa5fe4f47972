//! Closure graphs: which orbits lie in the closure of which.
//!
//! `pair_path(src, dst)` is true when `src` lies in the closure of the orbit of
//! `dst`, i.e. arbitrarily small perturbations of `src` reach that orbit.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::bounds::det_invariant_p;
use crate::congruence::StarClass;
use crate::matcore::{c, singular_values, C64};
use crate::pairnf::{representative, BForm, OrbitClass, FAMILY_TABLE};

/// Default tolerance for parameter comparisons in path queries.
pub const PARAM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosureError {
    #[error("path {0} -> {1} is not determined")]
    UnknownEdge(String, String),
}

pub fn psi2_path(rank_src: u8, rank_dst: u8) -> bool {
    rank_src <= rank_dst
}

fn star_rank_edge(src: &StarClass, dst: &StarClass) -> bool {
    use StarClass::*;
    match src {
        Zero => true,
        Rank1Semidef => matches!(dst, Rank1Nilpotent | Definite | Indefinite | Unimodular { .. } | Reciprocal { .. } | JordanType),
        Indefinite => matches!(dst, JordanType),
        _ => false,
    }
}

fn same_star(src: &StarClass, dst: &StarClass, tol: f64) -> bool {
    match (src, dst) {
        (StarClass::Reciprocal { tau: x }, StarClass::Reciprocal { tau: y }) => (x - y).abs() <= tol,
        (StarClass::Unimodular { theta: x }, StarClass::Unimodular { theta: y }) => (x - y).abs() <= tol,
        _ => src == dst,
    }
}

fn psi1_path_tol(src: &StarClass, dst: &StarClass, tol: f64) -> bool {
    same_star(src, dst, tol) || star_rank_edge(src, dst)
}

/// Closure relation for a single matrix under unit-scaled *-congruence.
pub fn psi1_path(src: &StarClass, dst: &StarClass) -> bool {
    psi1_path_tol(src, dst, PARAM_TOL)
}

// ---------------------------------------------------------------------------
// edge conditions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Src,
    Dst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParamRef {
    pub side: Side,
    pub name: &'static str,
}

const fn src(name: &'static str) -> ParamRef {
    ParamRef { side: Side::Src, name }
}

const fn dst(name: &'static str) -> ParamRef {
    ParamRef { side: Side::Dst, name }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ParamConstraint {
    Equal(ParamRef, ParamRef),
    Zero(ParamRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntervalKind {
    /// `2b/(1+tau) <= a~ <= 2b/(1-tau)`, with `tau = 0` for the nilpotent family.
    ReciprocalAnti,
    /// `a~ <= d`.
    JordanCorner,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EdgeCondition {
    Always,
    Never,
    ParamEq(Vec<ParamConstraint>),
    Interval(IntervalKind),
    /// `a~ <= M(target B, theta)`.
    MaxBound,
}

impl fmt::Display for ParamRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.side {
            Side::Src => "src",
            Side::Dst => "dst",
        };
        write!(f, "{s}.{}", self.name)
    }
}

impl fmt::Display for EdgeCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeCondition::Always => write!(f, "always"),
            EdgeCondition::Never => write!(f, "never"),
            EdgeCondition::ParamEq(list) => {
                let parts: Vec<String> = list
                    .iter()
                    .map(|c| match c {
                        ParamConstraint::Equal(x, y) => format!("{x} = {y}"),
                        ParamConstraint::Zero(x) => format!("{x} = 0"),
                    })
                    .collect();
                write!(f, "{}", parts.join(", "))
            }
            EdgeCondition::Interval(IntervalKind::ReciprocalAnti) => {
                write!(f, "2 dst.b/(1+dst.tau) <= src.a <= 2 dst.b/(1-dst.tau)")
            }
            EdgeCondition::Interval(IntervalKind::JordanCorner) => write!(f, "src.a <= dst.d"),
            EdgeCondition::MaxBound => write!(f, "src.a <= M(dst)"),
        }
    }
}

/// Named parameter of a class; real parameters come back with zero imaginary part.
pub fn param(cls: &OrbitClass, name: &str) -> Option<C64> {
    let r = |x: f64| Some(c(x, 0.0));
    match (name, cls.a_family) {
        ("tau", StarClass::Reciprocal { tau }) => return r(tau),
        ("theta", StarClass::Unimodular { theta }) => return r(theta),
        _ => {}
    }
    match (name, cls.b_form) {
        ("a", BForm::First { a } | BForm::DiagUnitTail { a } | BForm::Diag { a, .. } | BForm::Full { a, .. })
        | ("a", BForm::ZeroTail { a, .. } | BForm::DiagComplex { a, .. }) => r(a),
        ("b", BForm::Anti { b } | BForm::UnitHeadAnti { b } | BForm::AntiUnitTail { b } | BForm::ZeroHead { b, .. })
        | ("b", BForm::ZeroTail { b, .. } | BForm::PhaseHead { b, .. } | BForm::PhaseTail { b, .. } | BForm::ComplexHead { b, .. }) => r(b),
        ("d", BForm::Second { d } | BForm::Diag { d, .. } | BForm::Repeated { d, .. } | BForm::Full { d, .. })
        | ("d", BForm::ZeroHead { d, .. } | BForm::PolarTail { d, .. }) => r(d),
        ("d0", BForm::Repeated { d0, .. }) => r(d0),
        ("r", BForm::Full { r: x, .. }) => r(x),
        ("phi", BForm::Full { phi, .. } | BForm::PhaseHead { phi, .. } | BForm::PhaseTail { phi, .. }) => r(phi),
        ("zeta", BForm::PhaseHead { zeta, .. } | BForm::UnitHead { zeta } | BForm::DiagComplex { zeta, .. } | BForm::ComplexHead { zeta, .. }) => Some(zeta),
        ("theta", BForm::PolarTail { theta, .. }) => r(theta),
        _ => None,
    }
}

/// Copy of `cls` with one parameter replaced.
pub fn with_param(cls: &OrbitClass, name: &str, v: C64) -> Option<OrbitClass> {
    let x = v.re;
    let mut a_family = cls.a_family;
    let mut b = cls.b_form;
    match (name, &mut a_family) {
        ("tau", StarClass::Reciprocal { tau }) => *tau = x,
        ("theta", StarClass::Unimodular { theta }) => *theta = x,
        _ => {
            let slot: Option<&mut f64> = match (name, &mut b) {
                ("a", BForm::First { a } | BForm::DiagUnitTail { a } | BForm::Diag { a, .. } | BForm::Full { a, .. })
                | ("a", BForm::ZeroTail { a, .. } | BForm::DiagComplex { a, .. }) => Some(a),
                ("b", BForm::Anti { b } | BForm::UnitHeadAnti { b } | BForm::AntiUnitTail { b } | BForm::ZeroHead { b, .. })
                | ("b", BForm::ZeroTail { b, .. } | BForm::PhaseHead { b, .. } | BForm::PhaseTail { b, .. } | BForm::ComplexHead { b, .. }) => Some(b),
                ("d", BForm::Second { d } | BForm::Diag { d, .. } | BForm::Repeated { d, .. } | BForm::Full { d, .. })
                | ("d", BForm::ZeroHead { d, .. } | BForm::PolarTail { d, .. }) => Some(d),
                ("d0", BForm::Repeated { d0, .. }) => Some(d0),
                ("r", BForm::Full { r, .. }) => Some(r),
                ("phi", BForm::Full { phi, .. } | BForm::PhaseHead { phi, .. } | BForm::PhaseTail { phi, .. }) => Some(phi),
                ("theta", BForm::PolarTail { theta, .. }) => Some(theta),
                ("zeta", BForm::PhaseHead { zeta, .. } | BForm::UnitHead { zeta } | BForm::DiagComplex { zeta, .. } | BForm::ComplexHead { zeta, .. }) => {
                    *zeta = v;
                    None
                }
                _ => return None,
            };
            if let Some(s) = slot {
                *s = x;
            }
        }
    }
    OrbitClass::new(a_family, b).ok()
}

/// Arguments of `max_f` attached to a unimodular or definite target.
fn max_f_args(dst: &OrbitClass) -> Option<(f64, f64, C64, f64)> {
    let theta = match dst.a_family {
        StarClass::Unimodular { theta } => theta,
        StarClass::Definite => 0.0,
        _ => return None,
    };
    let z = c(0.0, 0.0);
    let r = |x: f64| c(x, 0.0);
    let args = match dst.b_form {
        BForm::Full { a, r: rr, phi, d } => (a, rr, C64::from_polar(d, -2.0 * phi)),
        BForm::ZeroHead { b, d } => (0.0, b, r(d)),
        BForm::ZeroTail { a, b } => (a, b, z),
        BForm::Second { d } => (0.0, 0.0, r(d)),
        BForm::First { a } => (a, 0.0, z),
        BForm::Anti { b } => (0.0, b, z),
        BForm::Diag { a, d } => (a, 0.0, r(d)),
        BForm::Repeated { d0, d } => (d0, 0.0, r(d)),
        BForm::Zero => (0.0, 0.0, z),
        _ => return None,
    };
    Some((args.0, args.1, args.2, theta))
}

/// Family-level edge data; the necessary conditions are applied separately.
pub fn edge_condition(src_id: &str, dst_id: &str) -> EdgeCondition {
    use EdgeCondition::*;
    let (da, db) = dst_id.split_once('|').unwrap_or((dst_id, ""));
    match src_id {
        "Zero|Zero" => Always,
        "Rank1Semidef|Zero" => match dst_id {
            "Rank1Semidef|First" | "Reciprocal|Anti" | "Rank1Nilpotent|Anti" => Never,
            _ => Always,
        },
        "Rank1Semidef|First" => match dst_id {
            "Rank1Semidef|First" => Never,
            "Reciprocal|Anti" | "Rank1Nilpotent|Anti" => Interval(IntervalKind::ReciprocalAnti),
            "JordanType|Second" => Interval(IntervalKind::JordanCorner),
            _ if da == "Unimodular" || da == "Definite" => MaxBound,
            _ => Always,
        },
        "Zero|UnitFirst" => {
            let ok = match da {
                "Zero" => db == "Identity",
                "Rank1Semidef" => matches!(db, "DiagUnitTail" | "UnitSecond" | "UnitAnti"),
                "Rank1Nilpotent" => matches!(db, "DiagUnitTail" | "ComplexHead" | "UnitHeadAnti" | "UnitSecond" | "UnitFirst"),
                "Reciprocal" => matches!(db, "PhaseHead" | "PhaseTail" | "UnitHead" | "UnitSecond"),
                "JordanType" => matches!(db, "Anti" | "DiagComplex"),
                "Indefinite" => matches!(db, "Diag" | "Repeated" | "Anti" | "PolarTail" | "AntiUnitTail" | "UnitFirst"),
                _ => false,
            };
            if ok {
                Always
            } else {
                Never
            }
        }
        "Zero|Identity" => match dst_id {
            "Rank1Semidef|UnitAnti" => Always,
            _ => Never,
        },
        "Reciprocal|Anti" => match dst_id {
            "Reciprocal|PhaseHead" => ParamEq(vec![
                ParamConstraint::Equal(src("b"), dst("b")),
                ParamConstraint::Zero(dst("zeta")),
            ]),
            "Reciprocal|PhaseTail" => ParamEq(vec![ParamConstraint::Equal(src("b"), dst("b"))]),
            _ => Never,
        },
        "Rank1Nilpotent|Anti" => match dst_id {
            "Rank1Nilpotent|UnitHeadAnti" => ParamEq(vec![ParamConstraint::Equal(src("b"), dst("b"))]),
            "Rank1Nilpotent|ComplexHead" => ParamEq(vec![
                ParamConstraint::Equal(src("b"), dst("b")),
                ParamConstraint::Zero(dst("zeta")),
            ]),
            _ => Never,
        },
        "Reciprocal|Zero" => match dst_id {
            "Reciprocal|UnitHead" => ParamEq(vec![ParamConstraint::Zero(dst("zeta"))]),
            "Reciprocal|UnitSecond" => Always,
            _ => Never,
        },
        "Rank1Nilpotent|Zero" => match dst_id {
            "Rank1Nilpotent|UnitFirst" | "Rank1Nilpotent|UnitSecond" => Always,
            _ => Never,
        },
        "Indefinite|Zero" => match dst_id {
            "JordanType|Zero" | "JordanType|Second" | "Indefinite|UnitFirst" => Always,
            _ => Never,
        },
        "Indefinite|Repeated" => match dst_id {
            "JordanType|Anti" | "Indefinite|AntiUnitTail" => ParamEq(vec![
                ParamConstraint::Equal(src("d"), src("d0")),
                ParamConstraint::Equal(src("d"), dst("b")),
            ]),
            _ => Never,
        },
        _ => Never,
    }
}

impl EdgeCondition {
    pub fn evaluate(&self, s: &OrbitClass, d: &OrbitClass, tol: f64) -> bool {
        let get = |p: &ParamRef| match p.side {
            Side::Src => param(s, p.name),
            Side::Dst => param(d, p.name),
        };
        match self {
            EdgeCondition::Always => true,
            EdgeCondition::Never => false,
            EdgeCondition::ParamEq(list) => list.iter().all(|k| match k {
                ParamConstraint::Equal(x, y) => match (get(x), get(y)) {
                    (Some(u), Some(v)) => (u - v).norm() <= tol,
                    _ => false,
                },
                ParamConstraint::Zero(x) => get(x).is_some_and(|u| u.norm() <= tol),
            }),
            EdgeCondition::Interval(kind) => {
                let Some(at) = param(s, "a") else { return false };
                let at = at.re;
                match kind {
                    IntervalKind::ReciprocalAnti => {
                        let tau = param(d, "tau").map_or(0.0, |t| t.re);
                        let Some(b) = param(d, "b") else { return false };
                        let (lo, hi) = anti_interval(b.re, tau);
                        at >= lo - tol && at <= hi + tol
                    }
                    IntervalKind::JordanCorner => param(d, "d").is_some_and(|dd| at <= dd.re + tol),
                }
            }
            EdgeCondition::MaxBound => {
                let Some(at) = param(s, "a") else { return false };
                match max_f_args(d) {
                    Some((a, b, dd, th)) => at.re <= max_f(a, b, dd, th, 1e-10) + tol.max(1e-9),
                    None => false,
                }
            }
        }
    }
}

/// `[2b/(1+tau), 2b/(1-tau)]`.
pub fn anti_interval(b: f64, tau: f64) -> (f64, f64) {
    (2.0 * b / (1.0 + tau), 2.0 * b / (1.0 - tau))
}

fn b_rank(cls: &OrbitClass) -> u8 {
    let s = singular_values(cls.b_form.matrix().matrix());
    s.iter().filter(|&&x| x > 1e-12).count() as u8
}

/// Reason a necessary condition fails, if any.
pub fn necessary_failure(s: &OrbitClass, d: &OrbitClass, tol: f64) -> Option<&'static str> {
    if !psi1_path_tol(&s.a_family, &d.a_family, tol) {
        return Some("A part has no path");
    }
    if !psi2_path(b_rank(s), b_rank(d)) {
        return Some("B rank decreases");
    }
    let p = det_invariant_p(&representative(s), &representative(d));
    if p.abs() > tol.max(1e-12) {
        return Some("determinant invariant is nonzero");
    }
    if s.dim >= d.dim {
        return Some("dimension does not increase");
    }
    None
}

/// `pair_path` with an explicit tolerance for parameter comparisons.
pub fn pair_path_tol(s: &OrbitClass, d: &OrbitClass, tol: f64) -> Result<bool, ClosureError> {
    if s.approx_eq(d, tol) {
        return Ok(true);
    }
    if necessary_failure(s, d, tol).is_some() {
        return Ok(false);
    }
    Ok(edge_condition(&s.family_id(), &d.family_id()).evaluate(s, d, tol))
}

pub fn pair_path(s: &OrbitClass, d: &OrbitClass) -> Result<bool, ClosureError> {
    pair_path_tol(s, d, PARAM_TOL)
}

// ---------------------------------------------------------------------------
// the maximization behind MaxBound

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Sample-then-refine maximization of a continuous function on `[lo, hi]`.
fn scan_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, tol: f64, periodic: bool) -> f64 {
    let h = (hi - lo) / n as f64;
    let pts = if periodic { n } else { n + 1 };
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..pts {
        let v = f(lo + i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let x = lo + best_i as f64 * h;
    let (l, r) = if periodic { (x - h, x + h) } else { ((x - h).max(lo), (x + h).min(hi)) };
    best.max(golden_max(&f, l, r, tol).1)
}

/// Maximum of `|a R e^{i beta} + 2 b sqrt(RT) + d T e^{-i beta}|` over
/// `R, T >= 0` with `R^2 + 2 R T cos(theta) + T^2 = 1` and real `beta`.
pub fn max_f(a: f64, b: f64, d: C64, theta: f64, tol: f64) -> f64 {
    let ct = theta.cos();
    let inner = |w: f64| {
        let rho = 1.0 / (1.0 + ct * (2.0 * w).sin()).sqrt();
        let (r, t) = (rho * w.cos(), rho * w.sin());
        let u = a * r;
        let m = 2.0 * b * (r * t).max(0.0).sqrt();
        let v = d * t;
        let h = |beta: f64| (C64::from_polar(u, beta) + m + v * C64::from_polar(1.0, -beta)).norm();
        scan_max(h, -PI, PI, 64, (tol * 1e-2).max(1e-13), true)
    };
    scan_max(inner, 0.0, PI / 2.0, 256, (tol * 1e-2).max(1e-13), false)
}

// ---------------------------------------------------------------------------
// graphs, export and validation

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Psi1,
    Psi2,
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphNode {
    pub id: String,
    pub dim: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphEdge {
    pub from: String,
    pub to: String,
    pub condition: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

const STAR_FAMILIES: [(&str, u8); 8] = [
    ("Zero", 0),
    ("Rank1Semidef", 4),
    ("Definite", 5),
    ("Indefinite", 5),
    ("Rank1Nilpotent", 6),
    ("Reciprocal", 7),
    ("Unimodular", 7),
    ("JordanType", 7),
];

fn star_by_name(name: &str) -> StarClass {
    match name {
        "Zero" => StarClass::Zero,
        "Rank1Semidef" => StarClass::Rank1Semidef,
        "Rank1Nilpotent" => StarClass::Rank1Nilpotent,
        "Definite" => StarClass::Definite,
        "Indefinite" => StarClass::Indefinite,
        "Reciprocal" => StarClass::Reciprocal { tau: 0.5 },
        "Unimodular" => StarClass::Unimodular { theta: 1.0 },
        _ => StarClass::JordanType,
    }
}

fn family_ranks(id: &str) -> impl Iterator<Item = u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let id = id.to_string();
    (0..8).map(move |_| b_rank(&sample_family(&id, &mut rng)))
}

fn family_min_rank(id: &str) -> u8 {
    family_ranks(id).min().unwrap_or(0)
}

fn family_max_rank(id: &str) -> u8 {
    family_ranks(id).max().unwrap_or(0)
}

/// Family ids `"<A>|<B>"` of all pairs with a declared nontrivial edge.
pub fn declared_edges() -> Vec<(String, String, EdgeCondition)> {
    let mut out = Vec::new();
    for (sa, sb, sd) in FAMILY_TABLE.iter() {
        for (ta, tb, td) in FAMILY_TABLE.iter() {
            let (sid, tid) = (format!("{sa}|{sb}"), format!("{ta}|{tb}"));
            if sid == tid || sd >= td {
                continue;
            }
            if !(*sa == *ta || star_rank_edge(&star_by_name(sa), &star_by_name(ta))) {
                continue;
            }
            if !psi2_path(family_min_rank(&sid), family_max_rank(&tid)) {
                continue;
            }
            let cond = edge_condition(&sid, &tid);
            if cond == EdgeCondition::Never {
                continue;
            }
            out.push((sid, tid, cond));
        }
    }
    out
}

pub fn build_graph(kind: GraphKind) -> ClosureGraph {
    match kind {
        GraphKind::Psi2 => ClosureGraph {
            nodes: (0..3).map(|r| GraphNode { id: format!("rank{r}"), dim: [0, 4, 6][r] }).collect(),
            edges: vec![
                GraphEdge { from: "rank0".into(), to: "rank1".into(), condition: "always".into() },
                GraphEdge { from: "rank1".into(), to: "rank2".into(), condition: "always".into() },
            ],
        },
        GraphKind::Psi1 => {
            let nodes = STAR_FAMILIES.iter().map(|(n, d)| GraphNode { id: n.to_string(), dim: *d }).collect();
            let mut edges = Vec::new();
            for (s, _) in STAR_FAMILIES.iter() {
                for (t, _) in STAR_FAMILIES.iter() {
                    if s != t && star_rank_edge(&star_by_name(s), &star_by_name(t)) {
                        edges.push(GraphEdge { from: s.to_string(), to: t.to_string(), condition: "always".into() });
                    }
                }
            }
            ClosureGraph { nodes, edges }
        }
        GraphKind::Pair => {
            let nodes = FAMILY_TABLE.iter().map(|(a, b, d)| GraphNode { id: format!("{a}|{b}"), dim: *d }).collect();
            let edges = declared_edges()
                .into_iter()
                .map(|(s, t, c)| GraphEdge { from: s, to: t, condition: c.to_string() })
                .collect();
            ClosureGraph { nodes, edges }
        }
    }
}

pub fn export_graph(kind: GraphKind, format: ExportFormat) -> String {
    let g = build_graph(kind);
    match format {
        ExportFormat::Json => {
            let name = match kind {
                GraphKind::Psi1 => "psi1",
                GraphKind::Psi2 => "psi2",
                GraphKind::Pair => "pair",
            };
            let v = json!({"schema": 1, "graph": name, "nodes": g.nodes, "edges": g.edges});
            serde_json::to_string_pretty(&v).expect("graph serializes")
        }
        ExportFormat::Dot => {
            let mut s = String::from("digraph closure {\n");
            for n in &g.nodes {
                s.push_str(&format!("  \"{}\" [label=\"{}\\ndim {}\"];\n", n.id, n.id, n.dim));
            }
            for e in &g.edges {
                s.push_str(&format!("  \"{}\" -> \"{}\" [label=\"{}\"];\n", e.from, e.to, e.condition));
            }
            s.push_str("}\n");
            s
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub src: OrbitClass,
    pub dst: OrbitClass,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub edges: usize,
    pub samples: usize,
    pub violations: Vec<Violation>,
}

/// Random parameters for a family.
pub fn sample_family<R: Rng>(id: &str, rng: &mut R) -> OrbitClass {
    let (af, bf) = id.split_once('|').expect("family id");
    let mut pos = || -> f64 { rng.random_range(0.2..2.0) };
    let (p1, p2, p3, p4) = (pos(), pos(), pos(), pos());
    let tau = rng.random_range(0.05..0.95);
    let theta = rng.random_range(0.05..PI - 0.05);
    let phi = rng.random_range(0.0..PI);
    let zeta = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let flip = rng.random_bool(0.5);
    let a_family = match af {
        "Reciprocal" => StarClass::Reciprocal { tau },
        "Unimodular" => StarClass::Unimodular { theta },
        other => star_by_name(other),
    };
    let (lo, hi) = (p1.min(p2), p1.max(p2) + 0.05);
    let b_form = match bf {
        "Zero" => BForm::Zero,
        "Identity" => BForm::Identity,
        "UnitFirst" => BForm::UnitFirst,
        "UnitSecond" => BForm::UnitSecond,
        "UnitAnti" => BForm::UnitAnti,
        "First" => BForm::First { a: p1 },
        "Second" => BForm::Second { d: p1 },
        "Anti" => BForm::Anti { b: p1 },
        "Diag" => BForm::Diag { a: lo, d: hi },
        "Repeated" => BForm::Repeated { d0: if flip { p1 } else { 0.0 }, d: p1 },
        "DiagUnitTail" => BForm::DiagUnitTail { a: p1 },
        "Full" => BForm::Full { a: p1, r: p3 - 0.2, phi, d: p2 },
        "ZeroHead" => BForm::ZeroHead { b: p1, d: p2 },
        "ZeroTail" => BForm::ZeroTail { a: p1, b: p2 },
        "PhaseHead" => BForm::PhaseHead { phi, b: p1, zeta },
        "PhaseTail" => BForm::PhaseTail { b: p1, phi },
        "UnitHead" => BForm::UnitHead { zeta },
        "DiagComplex" => BForm::DiagComplex { a: p1, zeta },
        "ComplexHead" => BForm::ComplexHead { zeta, b: p1 },
        "UnitHeadAnti" => BForm::UnitHeadAnti { b: p1 },
        "PolarTail" => BForm::PolarTail { d: p4, theta },
        _ => BForm::AntiUnitTail { b: p1 },
    };
    OrbitClass::new(a_family, b_form).expect("sampled class is valid")
}

/// Random endpoint pair satisfying an edge condition.
pub fn sample_edge<R: Rng>(src_id: &str, dst_id: &str, cond: &EdgeCondition, rng: &mut R) -> (OrbitClass, OrbitClass) {
    let mut s = sample_family(src_id, rng);
    let mut d = sample_family(dst_id, rng);
    for name in ["tau", "theta"] {
        if s.a_family.name() == d.a_family.name() {
            if let (Some(v), Some(_)) = (param(&s, name), param(&d, name)) {
                if !matches!(d.b_form, BForm::PolarTail { .. }) {
                    d = with_param(&d, name, v).unwrap_or(d);
                }
            }
        }
    }
    match cond {
        EdgeCondition::ParamEq(list) => {
            for k in list {
                match k {
                    ParamConstraint::Equal(x, y) => {
                        let v = match x.side {
                            Side::Src => param(&s, x.name),
                            Side::Dst => param(&d, x.name),
                        }
                        .expect("constraint parameter");
                        match y.side {
                            Side::Src => s = with_param(&s, y.name, v).unwrap_or(s),
                            Side::Dst => d = with_param(&d, y.name, v).unwrap_or(d),
                        }
                    }
                    ParamConstraint::Zero(x) => match x.side {
                        Side::Src => s = with_param(&s, x.name, c(0.0, 0.0)).unwrap_or(s),
                        Side::Dst => d = with_param(&d, x.name, c(0.0, 0.0)).unwrap_or(d),
                    },
                }
            }
        }
        EdgeCondition::Interval(IntervalKind::ReciprocalAnti) => {
            let tau = param(&d, "tau").map_or(0.0, |t| t.re);
            let b = param(&d, "b").unwrap().re;
            let (lo, hi) = anti_interval(b, tau);
            let at = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            s = with_param(&s, "a", c(at, 0.0)).unwrap_or(s);
        }
        EdgeCondition::Interval(IntervalKind::JordanCorner) => {
            let dd = param(&d, "d").unwrap().re;
            s = with_param(&s, "a", c(rng.random_range(0.01..=1.0) * dd, 0.0)).unwrap_or(s);
        }
        EdgeCondition::MaxBound => {
            let (a, b, dd, th) = max_f_args(&d).expect("max bound target");
            let m = max_f(a, b, dd, th, 1e-10);
            if m > 0.0 {
                s = with_param(&s, "a", c(rng.random_range(0.01..=1.0) * m, 0.0)).unwrap_or(s);
            }
        }
        EdgeCondition::Always | EdgeCondition::Never => {}
    }
    (s, d)
}

/// Checks the necessary conditions on explicit endpoint pairs.
pub fn check_edges(pairs: &[(OrbitClass, OrbitClass)]) -> Vec<Violation> {
    pairs
        .iter()
        .filter_map(|(s, d)| {
            necessary_failure(s, d, 1e-12).map(|r| Violation { src: *s, dst: *d, reason: r.to_string() })
        })
        .collect()
}

/// Samples every declared pair-graph edge and checks the necessary conditions.
pub fn validate_graph() -> ValidationReport {
    validate_graph_with(20, 0)
}

pub fn validate_graph_with(samples_per_edge: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = declared_edges();
    let mut pairs = Vec::new();
    for (s, d, cond) in &edges {
        for _ in 0..samples_per_edge {
            let (x, y) = sample_edge(s, d, cond, &mut rng);
            if !cond.evaluate(&x, &y, 1e-9) {
                pairs.push((x, y));
                continue;
            }
            pairs.push((x, y));
        }
    }
    let mut violations = check_edges(&pairs);
    for (x, y) in &pairs {
        let cond = edge_condition(&x.family_id(), &y.family_id());
        if !cond.evaluate(x, y, 1e-9) {
            violations.push(Violation { src: *x, dst: *y, reason: "sample does not satisfy its edge condition".into() });
        }
    }
    ValidationReport { edges: edges.len(), samples: pairs.len(), violations }
}
