//! The 42 normal-form families of pairs and the classifier that reduces an
//! arbitrary pair onto one of them.
//!
//! After `A` is brought to its representative, `B` is normalized by the
//! stabilizer of that representative. For the indefinite representative three
//! families are presented with `A = [[0,1],[1,0]]` instead of `1 (+) -1`; both
//! matrices lie in the same *-congruence class.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::congruence::{classify_star, takagi, CongruenceError, StarClass};
use crate::matcore::{
    act_pair, c, cis, col, complex_json, diag, eigenvalues, eigenvector, from_cols, mat, max_norm, pair_distance,
    real_mat, sesq, bilin, vadd, vnorm, vscale, wrap_angle, GroupElement, Mat2, MatError, MatrixPair, Sym2, C64,
};

/// The B column of the tables, one variant per distinct matrix shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum BForm {
    /// `0`
    Zero,
    /// `I`
    Identity,
    /// `1 (+) 0`
    UnitFirst,
    /// `0 (+) 1`
    UnitSecond,
    /// `[[0,1],[1,0]]`
    UnitAnti,
    /// `a (+) 0`
    First { a: f64 },
    /// `0 (+) d`
    Second { d: f64 },
    /// `[[0,b],[b,0]]`
    Anti { b: f64 },
    /// `a (+) d`, `0 < a < d`
    Diag { a: f64, d: f64 },
    /// `d0 (+) d`, `d0` either 0 or `d`
    Repeated { d0: f64, d: f64 },
    /// `a (+) 1`
    DiagUnitTail { a: f64 },
    /// `[[a, r e^{i phi}], [r e^{i phi}, d]]`
    Full { a: f64, r: f64, phi: f64, d: f64 },
    /// `[[0,b],[b,d]]`
    ZeroHead { b: f64, d: f64 },
    /// `[[a,b],[b,0]]`
    ZeroTail { a: f64, b: f64 },
    /// `[[e^{i phi}, b], [b, zeta]]`
    PhaseHead {
        phi: f64,
        b: f64,
        #[serde(with = "complex_json")]
        zeta: C64,
    },
    /// `[[0,b],[b,e^{i phi}]]`
    PhaseTail { b: f64, phi: f64 },
    /// `1 (+) zeta`
    UnitHead {
        #[serde(with = "complex_json")]
        zeta: C64,
    },
    /// `a (+) zeta`
    DiagComplex {
        a: f64,
        #[serde(with = "complex_json")]
        zeta: C64,
    },
    /// `[[zeta,b],[b,1]]`
    ComplexHead {
        #[serde(with = "complex_json")]
        zeta: C64,
        b: f64,
    },
    /// `[[1,b],[b,0]]`
    UnitHeadAnti { b: f64 },
    /// `1 (+) d e^{i theta}`, `0 < theta < pi`
    PolarTail { d: f64, theta: f64 },
    /// `[[0,b],[b,1]]`
    AntiUnitTail { b: f64 },
}

impl BForm {
    pub fn name(&self) -> &'static str {
        match self {
            BForm::Zero => "Zero",
            BForm::Identity => "Identity",
            BForm::UnitFirst => "UnitFirst",
            BForm::UnitSecond => "UnitSecond",
            BForm::UnitAnti => "UnitAnti",
            BForm::First { .. } => "First",
            BForm::Second { .. } => "Second",
            BForm::Anti { .. } => "Anti",
            BForm::Diag { .. } => "Diag",
            BForm::Repeated { .. } => "Repeated",
            BForm::DiagUnitTail { .. } => "DiagUnitTail",
            BForm::Full { .. } => "Full",
            BForm::ZeroHead { .. } => "ZeroHead",
            BForm::ZeroTail { .. } => "ZeroTail",
            BForm::PhaseHead { .. } => "PhaseHead",
            BForm::PhaseTail { .. } => "PhaseTail",
            BForm::UnitHead { .. } => "UnitHead",
            BForm::DiagComplex { .. } => "DiagComplex",
            BForm::ComplexHead { .. } => "ComplexHead",
            BForm::UnitHeadAnti { .. } => "UnitHeadAnti",
            BForm::PolarTail { .. } => "PolarTail",
            BForm::AntiUnitTail { .. } => "AntiUnitTail",
        }
    }

    pub fn matrix(&self) -> Sym2 {
        let r = |x: f64| c(x, 0.0);
        let o = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let (a, b, d) = match *self {
            BForm::Zero => (o, o, o),
            BForm::Identity => (one, o, one),
            BForm::UnitFirst => (one, o, o),
            BForm::UnitSecond => (o, o, one),
            BForm::UnitAnti => (o, one, o),
            BForm::First { a } => (r(a), o, o),
            BForm::Second { d } => (o, o, r(d)),
            BForm::Anti { b } => (o, r(b), o),
            BForm::Diag { a, d } => (r(a), o, r(d)),
            BForm::Repeated { d0, d } => (r(d0), o, r(d)),
            BForm::DiagUnitTail { a } => (r(a), o, one),
            BForm::Full { a, r: rr, phi, d } => (r(a), cis(phi) * rr, r(d)),
            BForm::ZeroHead { b, d } => (o, r(b), r(d)),
            BForm::ZeroTail { a, b } => (r(a), r(b), o),
            BForm::PhaseHead { phi, b, zeta } => (cis(phi), r(b), zeta),
            BForm::PhaseTail { b, phi } => (o, r(b), cis(phi)),
            BForm::UnitHead { zeta } => (one, o, zeta),
            BForm::DiagComplex { a, zeta } => (r(a), o, zeta),
            BForm::ComplexHead { zeta, b } => (zeta, r(b), one),
            BForm::UnitHeadAnti { b } => (one, r(b), o),
            BForm::PolarTail { d, theta } => (one, o, cis(theta) * d),
            BForm::AntiUnitTail { b } => (o, r(b), one),
        };
        Sym2::from_entries(a, b, d)
    }

    /// Real and complex parameters in declaration order, complex ones split.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            BForm::Zero | BForm::Identity | BForm::UnitFirst | BForm::UnitSecond | BForm::UnitAnti => vec![],
            BForm::First { a } | BForm::DiagUnitTail { a } => vec![a],
            BForm::Second { d } => vec![d],
            BForm::Anti { b } | BForm::UnitHeadAnti { b } | BForm::AntiUnitTail { b } => vec![b],
            BForm::Diag { a, d } => vec![a, d],
            BForm::Repeated { d0, d } => vec![d0, d],
            BForm::Full { a, r, phi, d } => vec![a, r, phi, d],
            BForm::ZeroHead { b, d } => vec![b, d],
            BForm::ZeroTail { a, b } => vec![a, b],
            BForm::PhaseHead { phi, b, zeta } => vec![phi, b, zeta.re, zeta.im],
            BForm::PhaseTail { b, phi } => vec![b, phi],
            BForm::UnitHead { zeta } => vec![zeta.re, zeta.im],
            BForm::DiagComplex { a, zeta } => vec![a, zeta.re, zeta.im],
            BForm::ComplexHead { zeta, b } => vec![zeta.re, zeta.im, b],
            BForm::PolarTail { d, theta } => vec![d, theta],
        }
    }

    fn params_valid(&self) -> bool {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        let phase = |x: f64| (0.0..PI).contains(&x);
        let fin = |z: C64| z.re.is_finite() && z.im.is_finite();
        match *self {
            BForm::Zero | BForm::Identity | BForm::UnitFirst | BForm::UnitSecond | BForm::UnitAnti => true,
            BForm::First { a } | BForm::DiagUnitTail { a } => pos(a),
            BForm::Second { d } => pos(d),
            BForm::Anti { b } | BForm::UnitHeadAnti { b } | BForm::AntiUnitTail { b } => pos(b),
            BForm::Diag { a, d } => pos(a) && pos(d) && a < d,
            BForm::Repeated { d0, d } => pos(d) && (d0 == 0.0 || d0 == d),
            BForm::Full { a, r, phi, d } => pos(a) && pos(d) && r >= 0.0 && r.is_finite() && phase(phi),
            BForm::ZeroHead { b, d } => pos(b) && pos(d),
            BForm::ZeroTail { a, b } => pos(a) && pos(b),
            BForm::PhaseHead { phi, b, zeta } => phase(phi) && pos(b) && fin(zeta),
            BForm::PhaseTail { b, phi } => pos(b) && phase(phi),
            BForm::UnitHead { zeta } => fin(zeta),
            BForm::DiagComplex { a, zeta } => pos(a) && fin(zeta),
            BForm::ComplexHead { zeta, b } => fin(zeta) && pos(b),
            BForm::PolarTail { d, theta } => pos(d) && theta > 0.0 && theta < PI,
        }
    }
}

/// `(A family, B form, orbit dimension)` for all 42 families.
pub const FAMILY_TABLE: [(&str, &str, u8); 42] = [
    ("Unimodular", "ZeroHead", 9),
    ("Unimodular", "Full", 9),
    ("Unimodular", "ZeroTail", 9),
    ("Unimodular", "Second", 8),
    ("Unimodular", "Anti", 8),
    ("Unimodular", "First", 8),
    ("Unimodular", "Zero", 7),
    ("Reciprocal", "PhaseHead", 9),
    ("Reciprocal", "PhaseTail", 9),
    ("Reciprocal", "UnitHead", 9),
    ("Reciprocal", "UnitSecond", 9),
    ("Reciprocal", "Anti", 8),
    ("Reciprocal", "Zero", 7),
    ("JordanType", "Anti", 9),
    ("JordanType", "DiagComplex", 9),
    ("JordanType", "Second", 8),
    ("JordanType", "Zero", 7),
    ("Rank1Nilpotent", "DiagUnitTail", 9),
    ("Rank1Nilpotent", "ComplexHead", 9),
    ("Rank1Nilpotent", "UnitHeadAnti", 9),
    ("Rank1Nilpotent", "UnitSecond", 8),
    ("Rank1Nilpotent", "UnitFirst", 8),
    ("Rank1Nilpotent", "Anti", 7),
    ("Rank1Nilpotent", "Zero", 6),
    ("Definite", "Diag", 9),
    ("Definite", "Repeated", 8),
    ("Definite", "Zero", 5),
    ("Indefinite", "Diag", 9),
    ("Indefinite", "Repeated", 8),
    ("Indefinite", "Anti", 8),
    ("Indefinite", "Zero", 5),
    ("Indefinite", "PolarTail", 9),
    ("Indefinite", "AntiUnitTail", 9),
    ("Indefinite", "UnitFirst", 8),
    ("Zero", "Identity", 6),
    ("Zero", "UnitFirst", 4),
    ("Zero", "Zero", 0),
    ("Rank1Semidef", "DiagUnitTail", 9),
    ("Rank1Semidef", "UnitSecond", 8),
    ("Rank1Semidef", "UnitAnti", 8),
    ("Rank1Semidef", "First", 5),
    ("Rank1Semidef", "Zero", 4),
];

pub fn table_dim(a_family: &str, b_form: &str) -> Option<u8> {
    FAMILY_TABLE.iter().find(|(a, b, _)| *a == a_family && *b == b_form).map(|e| e.2)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PairError {
    #[error("{0}")]
    Star(#[from] CongruenceError),
    #[error("no stabilizer element reaches a table form (best residual {best_residual:e})")]
    StabilizerSolveFailed { best_residual: f64 },
    #[error("invalid orbit class: {0}")]
    InvalidClass(String),
    #[error(transparent)]
    Group(#[from] MatError),
}

impl PairError {
    pub fn is_ambiguous(&self) -> bool {
        matches!(self, PairError::Star(CongruenceError::AmbiguousNearBoundary(_)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClass")]
pub struct OrbitClass {
    pub a_family: StarClass,
    pub b_form: BForm,
    pub dim: u8,
}

#[derive(Deserialize)]
struct RawClass {
    a_family: StarClass,
    b_form: BForm,
    #[allow(dead_code)]
    dim: Option<u8>,
}

impl TryFrom<RawClass> for OrbitClass {
    type Error = PairError;
    fn try_from(r: RawClass) -> Result<Self, PairError> {
        OrbitClass::new(r.a_family, r.b_form)
    }
}

impl OrbitClass {
    pub fn new(a_family: StarClass, b_form: BForm) -> Result<Self, PairError> {
        if !a_family.is_valid() {
            return Err(PairError::InvalidClass(format!("parameter out of range in {a_family:?}")));
        }
        if !b_form.params_valid() {
            return Err(PairError::InvalidClass(format!("parameter out of range in {b_form:?}")));
        }
        let dim = table_dim(a_family.name(), b_form.name())
            .ok_or_else(|| PairError::InvalidClass(format!("{} with {} is not a table family", a_family.name(), b_form.name())))?;
        Ok(OrbitClass { a_family, b_form, dim })
    }

    /// Stable `"<Afamily>|<Bform>"` identifier of the family.
    pub fn family_id(&self) -> String {
        format!("{}|{}", self.a_family.name(), self.b_form.name())
    }

    /// True for the families presented with `A = [[0,1],[1,0]]`.
    pub fn uses_swap_frame(&self) -> bool {
        matches!(self.a_family, StarClass::Indefinite)
            && matches!(self.b_form, BForm::PolarTail { .. } | BForm::AntiUnitTail { .. } | BForm::UnitFirst)
    }

    pub fn params(&self) -> Vec<f64> {
        let mut v = match self.a_family {
            StarClass::Reciprocal { tau } => vec![tau],
            StarClass::Unimodular { theta } => vec![theta],
            _ => vec![],
        };
        v.extend(self.b_form.params());
        v
    }

    /// Same family with every parameter within `tol`.
    pub fn approx_eq(&self, other: &OrbitClass, tol: f64) -> bool {
        if self.family_id() != other.family_id() {
            return false;
        }
        let (x, y) = (self.params(), other.params());
        x.len() == y.len() && x.iter().zip(&y).all(|(p, q)| (p - q).abs() <= tol)
    }
}

pub fn swap_matrix() -> Mat2 {
    real_mat(0.0, 1.0, 1.0, 0.0)
}

pub fn representative(cls: &OrbitClass) -> MatrixPair {
    let a = if cls.uses_swap_frame() { swap_matrix() } else { cls.a_family.representative() };
    MatrixPair { a, b: cls.b_form.matrix() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifiedPair {
    pub cls: OrbitClass,
    pub reducer: GroupElement,
    pub residual: f64,
}

/// Stabilizer step: `(c, Q)` and the resulting form.
struct Normalized {
    form: BForm,
    c: C64,
    q: Mat2,
}

fn norm(form: BForm, c: C64, q: Mat2) -> Result<Normalized, PairError> {
    Ok(Normalized { form, c, q })
}

fn unit(z: C64) -> C64 {
    if z.norm() == 0.0 {
        c(1.0, 0.0)
    } else {
        z / z.norm()
    }
}

fn rr(x: f64) -> C64 {
    c(x, 0.0)
}

fn transform(b: &Mat2, q: &Mat2) -> Mat2 {
    q.transpose() * b * q
}

pub fn classify_pair(p: &MatrixPair, tol: f64) -> Result<ClassifiedPair, PairError> {
    let star = classify_star(&p.a, tol)?;
    let bp = *act_pair(&star.reducer, p).b.matrix();
    let z = tol.sqrt() * max_norm(&bp).max(1.0);
    let n = match star.cls {
        StarClass::Zero => zero_family(&bp, z),
        StarClass::Rank1Semidef => semidef_family(&bp, z),
        StarClass::Rank1Nilpotent => nilpotent_family(&bp, z),
        StarClass::Definite => definite_family(&bp, z),
        StarClass::Indefinite => indefinite_family(&bp, tol, z),
        StarClass::Reciprocal { .. } => reciprocal_family(&bp, z),
        StarClass::Unimodular { .. } => unimodular_family(&bp, z),
        StarClass::JordanType => jordan_family(&bp, z),
    }?;
    let cls = OrbitClass::new(star.cls, n.form)?;
    let reducer = GroupElement::normalized(n.c, n.q)? * star.reducer;
    let residual = pair_distance(&act_pair(&reducer, p), &representative(&cls));
    Ok(ClassifiedPair { cls, reducer, residual })
}

pub fn orbit_equal(p: &MatrixPair, q: &MatrixPair, tol: f64) -> Result<bool, PairError> {
    let x = classify_pair(p, tol)?;
    let y = classify_pair(q, tol)?;
    Ok(x.cls.approx_eq(&y.cls, tol.sqrt()))
}

/// Members of the two 14-dimensional generic bundles.
pub fn is_generic(cls: &OrbitClass) -> bool {
    match (cls.a_family, cls.b_form) {
        (StarClass::Reciprocal { .. }, BForm::PhaseHead { b, .. }) => b > 0.0,
        (StarClass::Unimodular { .. }, BForm::Full { a, d, .. }) => a > 0.0 && d > 0.0,
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// stabilizer normalizations; `b` is already expressed in the A-normal frame

fn entries(b: &Mat2) -> (C64, C64, C64) {
    (b[(0, 0)], (b[(0, 1)] + b[(1, 0)]) * 0.5, b[(1, 1)])
}

fn zero_family(b: &Mat2, z: f64) -> Result<Normalized, PairError> {
    let (u, s) = takagi(&Sym2::symmetrize(b));
    let uc = u.map(|w| w.conj());
    if s[0] <= z {
        return norm(BForm::Zero, rr(1.0), Mat2::identity());
    }
    if s[1] <= z {
        return norm(BForm::UnitFirst, rr(1.0), uc * diag(rr(s[0].powf(-0.5)), rr(1.0)));
    }
    norm(BForm::Identity, rr(1.0), uc * diag(rr(s[0].powf(-0.5)), rr(s[1].powf(-0.5))))
}

fn definite_family(b: &Mat2, z: f64) -> Result<Normalized, PairError> {
    let (u, s) = takagi(&Sym2::symmetrize(b));
    let uc = u.map(|w| w.conj());
    let q = uc * swap_matrix();
    let (a, d) = (s[1], s[0]);
    if d <= z {
        return norm(BForm::Zero, rr(1.0), Mat2::identity());
    }
    if a <= z {
        return norm(BForm::Repeated { d0: 0.0, d }, rr(1.0), q);
    }
    if d - a <= z {
        let m = 0.5 * (a + d);
        return norm(BForm::Repeated { d0: m, d: m }, rr(1.0), q);
    }
    norm(BForm::Diag { a, d }, rr(1.0), q)
}

fn semidef_family(b: &Mat2, z: f64) -> Result<Normalized, PairError> {
    let (al, be, de) = entries(b);
    let one = rr(1.0);
    let zero = rr(0.0);
    if de.norm() > z {
        let red = al - be * be / de;
        let x = cis(-red.arg() / 2.0);
        let u = -be * x / de;
        let v = de.sqrt().inv();
        let q = mat(x, zero, u, v);
        let a = red.norm();
        let form = if a <= z { BForm::UnitSecond } else { BForm::DiagUnitTail { a } };
        return norm(form, one, q);
    }
    if be.norm() > z {
        let u = -al / (be * 2.0);
        let v = be.inv();
        return norm(BForm::UnitAnti, one, mat(one, zero, u, v));
    }
    if al.norm() > z {
        let x = cis(-al.arg() / 2.0);
        return norm(BForm::First { a: al.norm() }, one, diag(x, one));
    }
    norm(BForm::Zero, one, Mat2::identity())
}

fn nilpotent_family(b: &Mat2, z: f64) -> Result<Normalized, PairError> {
    let (al, be, de) = entries(b);
    // Q = diag(p, q) with |pq| = 1 and c = 1 / (conj(p) q)
    let done = |form: BForm, p: C64, q: C64| norm(form, (p.conj() * q).inv(), diag(p, q));
    let (zb, zd) = (be.norm() <= z, de.norm() <= z);
    if !zd {
        let q = de.sqrt().inv();
        if !zb {
            let p = rr(be.norm()) / (q * be);
            let zeta = p * p * al;
            return done(BForm::ComplexHead { zeta, b: be.norm() }, p, q);
        }
        let a = al.norm() * de.norm();
        if a <= z {
            return done(BForm::UnitSecond, q.inv(), q);
        }
        let p = cis(-al.arg() / 2.0) * de.norm().sqrt();
        return done(BForm::DiagUnitTail { a }, p, q);
    }
    if al.norm() > z {
        let p = al.sqrt().inv();
        if !zb {
            let q = rr(be.norm()) / (p * be);
            return done(BForm::UnitHeadAnti { b: be.norm() }, p, q);
        }
        return done(BForm::UnitFirst, p, p.inv());
    }
    if !zb {
        return done(BForm::Anti { b: be.norm() }, rr(1.0), unit(be).conj());
    }
    done(BForm::Zero, rr(1.0), rr(1.0))
}

/// Splits an angle in `[0, 2pi)` into a sign and a phase in `[0, pi)`.
fn fold_half(raw: f64, z: f64) -> (f64, f64) {
    let raw = wrap_angle(raw);
    let (sign, phi) = if raw < PI { (1.0, raw) } else { (-1.0, raw - PI) };
    if PI - phi <= z {
        (-sign, 0.0)
    } else {
        (sign, phi)
    }
}

/// Rescales by `diag(k, 1/k)` so the diagonal entries have equal size before
/// thresholding; a skewed frame would otherwise hide a small but nonzero entry.
fn reciprocal_family(b: &Mat2, z: f64) -> Result<Normalized, PairError> {
    let top = max_norm(b).max(1.0);
    let floor = z * z / top;
    let (al, de) = (b[(0, 0)].norm(), b[(1, 1)].norm());
    if al <= floor || de <= floor {
        return reciprocal_balanced(b, z);
    }
    let k = (de / al).powf(0.25);
    let kq = diag(rr(k), rr(1.0 / k));
    let bal = transform(b, &kq);
    let n = reciprocal_balanced(&bal, z / top * max_norm(&bal).max(1.0))?;
    norm(n.form, n.c, kq * n.q)
}

fn reciprocal_balanced(b: &Mat2, z: f64) -> Result<Normalized, PairError> {
    let (al, be, de) = entries(b);
    // Q = diag(p, s / conj(p)) with s = +-1 acting together with c = s
    let done = |form_of: &dyn Fn(&Mat2) -> BForm, s: f64, p: C64| {
        let q = diag(p, rr(s) / p.conj());
        let out = transform(b, &q);
        norm(form_of(&out), rr(s), q)
    };
    let (za, zb, zd) = (al.norm() <= z, be.norm() <= z, de.norm() <= z);
    if !za && !zb {
        let (s, phi) = fold_half(al.arg() - be.arg(), z);
        let chi = (rr(s) * unit(be).conj()).arg() / 2.0;
        let p = cis(chi) / al.norm().sqrt();
        return done(&|o: &Mat2| BForm::PhaseHead { phi, b: be.norm(), zeta: o[(1, 1)] }, s, p);
    }
    if !za {
        let p = cis(-al.arg() / 2.0) / al.norm().sqrt();
        return done(&|o: &Mat2| BForm::UnitHead { zeta: o[(1, 1)] }, 1.0, p);
    }
    if !zd && !zb {
        let (s, phi) = fold_half(de.arg() - be.arg(), z);
        let chi = (rr(s) * unit(be).conj()).arg() / 2.0;
        let p = cis(chi) * de.norm().sqrt();
        return done(&|_: &Mat2| BForm::PhaseTail { b: be.norm(), phi }, s, p);
    }
    if !zd {
        let p = cis(-de.arg() / 2.0) * de.norm().sqrt();
        return done(&|_: &Mat2| BForm::UnitSecond, 1.0, p);
    }
    if !zb {
        let p = cis(-be.arg() / 2.0);
        return done(&|_: &Mat2| BForm::Anti { b: be.norm() }, 1.0, p);
    }
    norm(BForm::Zero, rr(1.0), Mat2::identity())
}

fn unimodular_family(b: &Mat2, z: f64) -> Result<Normalized, PairError> {
    let (al, be, de) = entries(b);
    let one = rr(1.0);
    let (za, zb, zd) = (al.norm() <= z, be.norm() <= z, de.norm() <= z);
    match (za, zb, zd) {
        (false, _, false) => {
            let ea = cis(-al.arg() / 2.0);
            let mut ed = cis(-de.arg() / 2.0);
            let mut off = ea * ed * be;
            let r = off.norm();
            let mut phi = 0.0;
            if r > z {
                phi = wrap_angle(off.arg());
                if phi >= PI {
                    ed = -ed;
                    off = -off;
                    phi = wrap_angle(off.arg());
                }
                if PI - phi <= z {
                    phi = 0.0;
                }
            }
            let _ = off;
            norm(BForm::Full { a: al.norm(), r, phi, d: de.norm() }, one, diag(ea, ed))
        }
        (true, false, false) => {
            let ed = cis(-de.arg() / 2.0);
            let ea = unit(ed * be).conj();
            norm(BForm::ZeroHead { b: be.norm(), d: de.norm() }, one, diag(ea, ed))
        }
        (false, false, true) => {
            let ea = cis(-al.arg() / 2.0);
            let ed = unit(ea * be).conj();
            norm(BForm::ZeroTail { a: al.norm(), b: be.norm() }, one, diag(ea, ed))
        }
        (true, true, false) => norm(BForm::Second { d: de.norm() }, one, diag(one, cis(-de.arg() / 2.0))),
        (false, true, true) => norm(BForm::First { a: al.norm() }, one, diag(cis(-al.arg() / 2.0), one)),
        (true, false, true) => norm(BForm::Anti { b: be.norm() }, one, diag(one, unit(be).conj())),
        (true, true, true) => norm(BForm::Zero, one, Mat2::identity()),
    }
}

/// Largest off-table component tolerated by the Jordan-type normalization.
pub const JORDAN_SOLVE_LIMIT: f64 = 1e-6;

fn jordan_family(b: &Mat2, z: f64) -> Result<Normalized, PairError> {
    let (al, be, de) = entries(b);
    let one = rr(1.0);
    let limit = JORDAN_SOLVE_LIMIT * max_norm(b).max(1.0);
    // Q = e^{i psi} [[1, i t], [0, 1]]
    let shear = |psi: f64, t: f64| mat(one, c(0.0, t), rr(0.0), one) * cis(psi);
    if al.norm() > z {
        let rot = unit(al).conj();
        let a = al.norm();
        let t = -(rot * be).im / a;
        let resid = (rot * be).re.abs();
        if resid > limit {
            return Err(PairError::StabilizerSolveFailed { best_residual: resid });
        }
        let q = shear(rot.arg() / 2.0, t);
        let zeta = transform(b, &q)[(1, 1)];
        return norm(BForm::DiagComplex { a, zeta }, one, q);
    }
    if be.norm() > z {
        let rot = unit(be).conj();
        let bn = be.norm();
        let t = -(rot * de).im / (2.0 * bn);
        let resid = (rot * de).re.abs();
        if resid > limit {
            return Err(PairError::StabilizerSolveFailed { best_residual: resid });
        }
        return norm(BForm::Anti { b: bn }, one, shear(rot.arg() / 2.0, t));
    }
    if de.norm() > z {
        return norm(BForm::Second { d: de.norm() }, one, shear(-de.arg() / 2.0, 0.0));
    }
    norm(BForm::Zero, one, Mat2::identity())
}

/// `(1/sqrt 2) [[1,1],[1,-1]]`; conjugates `1 (+) -1` to `[[0,1],[1,0]]`.
fn frame_change() -> Mat2 {
    real_mat(1.0, 1.0, 1.0, -1.0) * rr(std::f64::consts::FRAC_1_SQRT_2)
}

fn indefinite_family(b: &Mat2, tol: f64, z: f64) -> Result<Normalized, PairError> {
    let s = real_mat(1.0, 0.0, 0.0, -1.0);
    let hx = swap_matrix();
    let kc = frame_change();
    let one = rr(1.0);
    let (u, sv) = takagi(&Sym2::symmetrize(b));
    if sv[0] <= z {
        return norm(BForm::Zero, one, Mat2::identity());
    }
    if sv[1] <= z {
        let kappa = sv[0];
        let w = col(&u, 0);
        let ws = w[0].norm_sqr() - w[1].norm_sqr();
        if kappa * ws.abs() > z {
            let eps = -ws.signum();
            let q1 = vscale(&[-w[1], w[0]], rr(ws.abs().powf(-0.5)));
            let y = [q1[0], -q1[1]];
            let mut q2 = [-y[1].conj(), y[0].conj()];
            let n2 = sesq(&q2, &s, &q2).re.abs();
            q2 = vscale(&q2, rr(n2.powf(-0.5)));
            let m = q2[0] * w[0] + q2[1] * w[1];
            q2 = vscale(&q2, unit(m).conj());
            let q = from_cols(q1, q2);
            let d = transform(b, &q)[(1, 1)].re;
            return norm(BForm::Repeated { d0: 0.0, d }, rr(eps), q);
        }
        // isotropic direction: present as (swap, 1 (+) 0)
        let w2 = [(w[0] + w[1]) * std::f64::consts::FRAC_1_SQRT_2, (w[0] - w[1]) * std::f64::consts::FRAC_1_SQRT_2];
        let q2 = [-w2[1], w2[0]];
        let n = vnorm(&q2).powi(2);
        let uvec = [q2[1] / n, q2[0] / n];
        let t = -sesq(&uvec, &hx, &uvec).re / 2.0;
        let q1 = vadd(&uvec, &vscale(&q2, rr(t)));
        let sigma = (rr(kappa.sqrt()) * (q1[0] * w2[0] + q1[1] * w2[1])).inv();
        let qq = from_cols(vscale(&q1, sigma), vscale(&q2, sigma.conj().inv()));
        return norm(BForm::UnitFirst, one, kc * qq);
    }
    let bc = b.map(|w| w.conj());
    let nmat = s * bc * s * b;
    let [l1, l2] = eigenvalues(&nmat);
    let scale = l2.norm();
    let zr = tol.sqrt();
    if (l2 - l1).norm() <= zr * scale {
        let lam = (l1 + l2) * 0.5;
        if lam.re > 0.0 {
            if max_norm(&(nmat - Mat2::identity() * lam)) <= zr * scale {
                return indefinite_repeated(b, &s, lam.re.sqrt());
            }
            return indefinite_defective(b, &kc, &hx);
        }
        return indefinite_anti(b, &s);
    }
    if l1.im.abs().max(l2.im.abs()) <= zr * scale {
        if l1.re <= 0.0 {
            return Err(PairError::StabilizerSolveFailed { best_residual: l1.re.abs() });
        }
        return indefinite_diag(b, &s, &nmat, l1, l2);
    }
    indefinite_polar(b, &kc, &hx)
}

fn indefinite_diag(b: &Mat2, s: &Mat2, nmat: &Mat2, l1: C64, l2: C64) -> Result<Normalized, PairError> {
    let mut xs = [eigenvector(nmat, rr(l1.re)), eigenvector(nmat, rr(l2.re))];
    let mut signs = [0.0; 2];
    for (k, x) in xs.iter_mut().enumerate() {
        let sn = sesq(x, s, x).re;
        signs[k] = sn.signum();
        *x = vscale(x, rr(sn.abs().powf(-0.5)));
        let m = bilin(x, b, x);
        *x = vscale(x, cis(-m.arg() / 2.0));
    }
    let q = from_cols(xs[0], xs[1]);
    let out = transform(b, &q);
    let (a, d) = (out[(0, 0)].re, out[(1, 1)].re);
    norm(BForm::Diag { a, d }, rr(signs[0]), q)
}

fn indefinite_repeated(b: &Mat2, s: &Mat2, d: f64) -> Result<Normalized, PairError> {
    let bc = b.map(|w| w.conj());
    let fix = |y: [C64; 2]| {
        let yc = [y[0].conj(), y[1].conj()];
        let t = s * bc * nalgebra::Vector2::new(yc[0], yc[1]) / rr(d);
        [y[0] + t[0], y[1] + t[1]]
    };
    let o = rr(0.0);
    let i = c(0.0, 1.0);
    let cands = [fix([rr(1.0), o]), fix([o, rr(1.0)]), fix([i, o]), fix([o, i])];
    let mut best = (0, 1, -1.0);
    for j in 0..4 {
        for k in j + 1..4 {
            let det = (cands[j][0] * cands[k][1] - cands[j][1] * cands[k][0]).norm();
            if det > best.2 {
                best = (j, k, det);
            }
        }
    }
    let (fa, fb) = (cands[best.0], cands[best.1]);
    let g = [[sesq(&fa, s, &fa).re, sesq(&fa, s, &fb).re], [sesq(&fb, s, &fa).re, sesq(&fb, s, &fb).re]];
    let gm = nalgebra::Matrix2::new(g[0][0], g[0][1], g[1][0], g[1][1]);
    let e = nalgebra::SymmetricEigen::new(gm);
    let (lo, hi) = if e.eigenvalues[0] <= e.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let comb = |k: usize| {
        let v = e.eigenvectors.column(k);
        let x = vadd(&vscale(&fa, rr(v[0])), &vscale(&fb, rr(v[1])));
        vscale(&x, rr(e.eigenvalues[k].abs().powf(-0.5)))
    };
    let q1 = comb(hi);
    let q2 = vscale(&comb(lo), c(0.0, -1.0));
    let q = from_cols(q1, q2);
    let out = transform(b, &q);
    let dd = 0.5 * (out[(0, 0)].re + out[(1, 1)].re);
    norm(BForm::Repeated { d0: dd, d: dd }, rr(1.0), q)
}

fn indefinite_anti(b: &Mat2, s: &Mat2) -> Result<Normalized, PairError> {
    let (al, be, de) = entries(b);
    let disc = (be * be - al * de).sqrt();
    let qv = if (be + disc).norm() >= (be - disc).norm() { -(be + disc) } else { -(be - disc) };
    let mut lines = [[qv, al], [de, qv]];
    let mut sgn = [0.0; 2];
    for (k, x) in lines.iter_mut().enumerate() {
        let sn = sesq(x, s, x).re;
        sgn[k] = sn;
        *x = vscale(x, rr(sn.abs().powf(-0.5)));
    }
    let (mut q1, mut q2) = if sgn[0] > 0.0 { (lines[0], lines[1]) } else { (lines[1], lines[0]) };
    let off = bilin(&q1, b, &q2);
    q2 = vscale(&q2, unit(off).conj());
    q1 = vscale(&q1, rr(1.0));
    let q = from_cols(q1, q2);
    let bb = transform(b, &q)[(0, 1)].re;
    norm(BForm::Anti { b: bb }, rr(1.0), q)
}

fn indefinite_defective(b: &Mat2, kc: &Mat2, hx: &Mat2) -> Result<Normalized, PairError> {
    let bs = transform(b, kc);
    let bc = bs.map(|w| w.conj());
    let nmat = hx * bc * hx * bs;
    let [l1, l2] = eigenvalues(&nmat);
    let x = eigenvector(&nmat, (l1 + l2) * 0.5);
    let n = vnorm(&x).powi(2);
    let y = [x[1] / n, x[0] / n];
    let h = sesq(&x, hx, &y);
    let eta = sesq(&y, hx, &y).re;
    let beta = bilin(&x, &bs, &y);
    let gamma = bilin(&y, &bs, &y);
    let bn = beta.norm() / h.norm();
    let dd = eta - (gamma * h.conj() / beta).re;
    let eps = -dd.signum();
    let m = (bn * dd.abs()).powf(-0.5);
    let rot = unit(rr(eps * bn) * h.conj() / beta);
    let mu = cis(rot.arg() / 2.0) * m;
    let lam = rr(eps) / (mu.conj() * h.conj());
    let nu = (rr(1.0) - mu * mu * gamma) / (mu * beta * 2.0);
    let q1 = vscale(&x, lam);
    let q2 = vadd(&vscale(&y, mu), &vscale(&x, nu));
    let qq = from_cols(q1, q2);
    let bval = transform(&bs, &qq)[(0, 1)].re;
    norm(BForm::AntiUnitTail { b: bval }, rr(eps), kc * qq)
}

fn indefinite_polar(b: &Mat2, kc: &Mat2, hx: &Mat2) -> Result<Normalized, PairError> {
    let bs = transform(b, kc);
    let bc = bs.map(|w| w.conj());
    let nmat = hx * bc * hx * bs;
    let [l1, l2] = eigenvalues(&nmat);
    let (lo, hi) = if l1.im < l2.im { (l1, l2) } else { (l2, l1) };
    let x1 = eigenvector(&nmat, lo);
    let x2 = eigenvector(&nmat, hi);
    let lam = bilin(&x1, &bs, &x1).sqrt().inv();
    let mu = (lam.conj() * sesq(&x1, hx, &x2)).inv();
    let qq = from_cols(vscale(&x1, lam), vscale(&x2, mu));
    let zval = transform(&bs, &qq)[(1, 1)];
    norm(BForm::PolarTail { d: zval.norm(), theta: zval.arg() }, rr(1.0), kc * qq)
}


/// Parameter draws covering every family; shared by tests and tooling.
pub mod samples {
    use super::*;

    const THETAS: [f64; 5] = [0.3, 1.0, 1.5, 2.5, 3.0];
    const TAUS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

    fn b_samples(family: &str, k: usize) -> Vec<BForm> {
        let a = [0.4, 0.7, 1.3, 2.0, 0.9][k];
        let b = [0.5, 1.2, 0.8, 2.2, 1.7][k];
        let d = [1.1, 0.6, 2.4, 1.5, 3.1][k];
        let r = [0.0, 0.6, 1.5, 0.3, 2.0][k];
        let phi = [0.0, 0.4, 1.2, 2.0, 3.0][k];
        let zeta = [c(0.3, -0.5), c(0.0, 0.0), c(-1.2, 0.4), c(2.0, 1.0), c(0.0, -0.8)][k];
        let theta = [0.3, 1.0, 1.5, 2.5, 3.0][k];
        let (lo, hi) = if a < d { (a, d) } else { (d, a) };
        let all = [
            BForm::Zero,
            BForm::Identity,
            BForm::UnitFirst,
            BForm::UnitSecond,
            BForm::UnitAnti,
            BForm::First { a },
            BForm::Second { d },
            BForm::Anti { b },
            BForm::Diag { a: lo, d: hi },
            BForm::Repeated { d0: 0.0, d },
            BForm::Repeated { d0: d, d },
            BForm::DiagUnitTail { a },
            BForm::Full { a, r, phi, d },
            BForm::ZeroHead { b, d },
            BForm::ZeroTail { a, b },
            BForm::PhaseHead { phi, b, zeta },
            BForm::PhaseTail { b, phi },
            BForm::UnitHead { zeta },
            BForm::DiagComplex { a, zeta },
            BForm::ComplexHead { zeta, b },
            BForm::UnitHeadAnti { b },
            BForm::PolarTail { d, theta },
            BForm::AntiUnitTail { b },
        ];
        let _ = family;
        all.to_vec()
    }

    fn a_samples(family: &str, k: usize) -> StarClass {
        match family {
            "Zero" => StarClass::Zero,
            "Rank1Semidef" => StarClass::Rank1Semidef,
            "Rank1Nilpotent" => StarClass::Rank1Nilpotent,
            "Definite" => StarClass::Definite,
            "Indefinite" => StarClass::Indefinite,
            "Reciprocal" => StarClass::Reciprocal { tau: TAUS[k] },
            "Unimodular" => StarClass::Unimodular { theta: THETAS[k] },
            _ => StarClass::JordanType,
        }
    }

    /// Five parameter draws for every family with continuous parameters, one
    /// for the rest.
    pub fn all_samples() -> Vec<OrbitClass> {
        let mut out = Vec::new();
        for (af, bf, _) in FAMILY_TABLE.iter() {
            let mut seen = Vec::new();
            for k in 0..5 {
                let a = a_samples(af, k);
                for b in b_samples(af, k) {
                    if b.name() != *bf {
                        continue;
                    }
                    if let Ok(cls) = OrbitClass::new(a, b) {
                        if !seen.iter().any(|s: &OrbitClass| s == &cls) {
                            seen.push(cls);
                        }
                    }
                }
            }
            out.extend(seen);
        }
        out
    }

    /// Draws for one family.
    pub fn family_samples(family_id: &str) -> Vec<OrbitClass> {
        all_samples().into_iter().filter(|c| c.family_id() == family_id).collect()
    }
}
