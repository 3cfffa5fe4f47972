//! Unit-scaled *-congruence classes of a single matrix and T-congruence rank
//! of a symmetric one, each with a reducing transformation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcore::{
    c, cis, col, eigenvalues, eigenvector, from_cols, hermitian_eigen, max_norm, real_mat, sesq,
    singular_values, vnorm, vscale, wrap_angle, GroupElement, Mat2, MatError, Sym2, C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum StarClass {
    Zero,
    Rank1Semidef,
    Rank1Nilpotent,
    Definite,
    Indefinite,
    Reciprocal { tau: f64 },
    Unimodular { theta: f64 },
    JordanType,
}

impl StarClass {
    pub fn name(&self) -> &'static str {
        match self {
            StarClass::Zero => "Zero",
            StarClass::Rank1Semidef => "Rank1Semidef",
            StarClass::Rank1Nilpotent => "Rank1Nilpotent",
            StarClass::Definite => "Definite",
            StarClass::Indefinite => "Indefinite",
            StarClass::Reciprocal { .. } => "Reciprocal",
            StarClass::Unimodular { .. } => "Unimodular",
            StarClass::JordanType => "JordanType",
        }
    }

    /// Real dimension of the orbit of the representative.
    pub fn orbit_dim(&self) -> u8 {
        match self {
            StarClass::Zero => 0,
            StarClass::Rank1Semidef => 4,
            StarClass::Rank1Nilpotent => 6,
            StarClass::Definite | StarClass::Indefinite => 5,
            StarClass::Reciprocal { .. } | StarClass::Unimodular { .. } | StarClass::JordanType => 7,
        }
    }

    pub fn rank(&self) -> u8 {
        match self {
            StarClass::Zero => 0,
            StarClass::Rank1Semidef | StarClass::Rank1Nilpotent => 1,
            _ => 2,
        }
    }

    /// Parameter ranges are open intervals.
    pub fn is_valid(&self) -> bool {
        match *self {
            StarClass::Reciprocal { tau } => tau > 0.0 && tau < 1.0,
            StarClass::Unimodular { theta } => theta > 0.0 && theta < PI,
            _ => true,
        }
    }

    pub fn representative(&self) -> Mat2 {
        let o = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        match *self {
            StarClass::Zero => Mat2::zeros(),
            StarClass::Rank1Semidef => real_mat(1.0, 0.0, 0.0, 0.0),
            StarClass::Rank1Nilpotent => real_mat(0.0, 1.0, 0.0, 0.0),
            StarClass::Definite => Mat2::identity(),
            StarClass::Indefinite => real_mat(1.0, 0.0, 0.0, -1.0),
            StarClass::Reciprocal { tau } => real_mat(0.0, 1.0, tau, 0.0),
            StarClass::Unimodular { theta } => Mat2::new(one, o, o, cis(theta)),
            StarClass::JordanType => Mat2::new(o, one, one, c(0.0, 1.0)),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CongruenceError {
    #[error("matrix is singular (|det| = {0})")]
    SingularInput(f64),
    #[error("input lies on a family boundary: {0:?}")]
    AmbiguousNearBoundary(Vec<StarClass>),
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("non-finite input")]
    NonFinite,
    #[error(transparent)]
    Group(#[from] MatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StarReduction {
    pub cls: StarClass,
    pub reducer: GroupElement,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TCongReduction {
    pub rank: u8,
    pub reducer: Mat2,
    pub residual: f64,
}

/// `(A^*)^{-1} A`.
pub fn cosquare(a: &Mat2, tol: f64) -> Result<Mat2, CongruenceError> {
    let det = a.determinant().norm();
    if !(det > tol) {
        return Err(CongruenceError::SingularInput(det));
    }
    let inv = a.adjoint().try_inverse().ok_or(CongruenceError::SingularInput(det))?;
    Ok(inv * a)
}

fn star_residual(a: &Mat2, g: &GroupElement, target: &Mat2) -> f64 {
    let out = g.p().adjoint() * a * g.p() * g.c();
    max_norm(&(out - target))
}

fn finish(a: &Mat2, cls: StarClass, cval: C64, p: Mat2) -> Result<StarReduction, CongruenceError> {
    let reducer = GroupElement::normalized(cval, p)?;
    let residual = star_residual(a, &reducer, &cls.representative());
    Ok(StarReduction { cls, reducer, residual })
}

pub fn classify_star(a: &Mat2, tol: f64) -> Result<StarReduction, CongruenceError> {
    if !(tol > 0.0) {
        return Err(CongruenceError::BadTolerance);
    }
    if !crate::matcore::is_finite(a) {
        return Err(CongruenceError::NonFinite);
    }
    let [s1, s2] = singular_values(a);
    let scale = s1.max(1.0);
    if s1 <= tol {
        return finish(a, StarClass::Zero, c(1.0, 0.0), Mat2::identity());
    }
    let cut = tol * scale;
    if (s2 - cut).abs() <= 0.1 * cut {
        return Err(CongruenceError::AmbiguousNearBoundary(vec![StarClass::Rank1Nilpotent, StarClass::JordanType]));
    }
    if s2 <= cut {
        rank_one(a, tol)
    } else {
        rank_two(a, tol)
    }
}

fn rank_one(a: &Mat2, tol: f64) -> Result<StarReduction, CongruenceError> {
    let svd = a.svd(true, true);
    let (u_m, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let k = if svd.singular_values[0] >= svd.singular_values[1] { 0 } else { 1 };
    let sigma = svd.singular_values[k];
    let u = col(&u_m, k);
    let v = [vt[(k, 0)].conj(), vt[(k, 1)].conj()];
    // a = sigma u v^*
    let overlap = u[0].conj() * v[0] + u[1].conj() * v[1];
    let sin = (1.0 - overlap.norm_sqr()).max(0.0).sqrt();
    if sin <= tol.sqrt() {
        let phase = overlap / overlap.norm();
        let perp = [-u[1].conj(), u[0].conj()];
        let p = from_cols(vscale(&u, c(sigma.powf(-0.5), 0.0)), perp);
        finish(a, StarClass::Rank1Semidef, phase, p)
    } else {
        let uv = from_cols(u, v);
        let inv = uv.try_inverse().ok_or(CongruenceError::SingularInput(0.0))?;
        let p = (inv * c(sigma.powf(-0.5), 0.0)).adjoint();
        finish(a, StarClass::Rank1Nilpotent, c(1.0, 0.0), p)
    }
}

fn rank_two(a: &Mat2, tol: f64) -> Result<StarReduction, CongruenceError> {
    let m = cosquare(a, 0.0)?;
    let [ls, lb] = eigenvalues(&m);
    let sq = tol.sqrt();
    let gap = (lb - ls).norm() / lb.norm();
    if gap <= sq {
        let mean = (ls + lb) * 0.5;
        let lam = mean / mean.norm();
        let resid = max_norm(&(m - Mat2::identity() * lam));
        if resid <= sq * max_norm(&m).max(1.0) {
            scalar_cosquare(a, lam)
        } else {
            jordan(a, lam)
        }
    } else {
        let log_ratio = (ls.norm() / lb.norm()).ln().abs();
        let arg_gap = (ls / lb).arg().abs();
        if log_ratio < arg_gap {
            unimodular(a, &m, ls, lb)
        } else {
            reciprocal(a, &m, ls, lb)
        }
    }
}

fn scalar_cosquare(a: &Mat2, lam: C64) -> Result<StarReduction, CongruenceError> {
    let half = cis(-lam.arg() / 2.0);
    let h = a * half;
    let ([h0, h1], u) = hermitian_eigen(&h);
    if h0 * h1 > 0.0 {
        let sign = if h0 > 0.0 { 1.0 } else { -1.0 };
        let p = from_cols(vscale(&col(&u, 0), c(h0.abs().powf(-0.5), 0.0)), vscale(&col(&u, 1), c(h1.abs().powf(-0.5), 0.0)));
        finish(a, StarClass::Definite, half * sign, p)
    } else {
        // h0 < 0 < h1: put the positive direction first
        let p = from_cols(vscale(&col(&u, 1), c(h1.abs().powf(-0.5), 0.0)), vscale(&col(&u, 0), c(h0.abs().powf(-0.5), 0.0)));
        finish(a, StarClass::Indefinite, half, p)
    }
}

fn jordan(a: &Mat2, lam: C64) -> Result<StarReduction, CongruenceError> {
    let mut c0 = cis(-lam.arg() / 2.0);
    let mut ap = a * c0;
    let i2 = c(0.0, 2.0);
    let mut k = (ap - ap.adjoint()) / i2;
    if (k[(0, 0)] + k[(1, 1)]).re < 0.0 {
        c0 = -c0;
        ap = -ap;
        k = -k;
    }
    let h = (ap + ap.adjoint()) * c(0.5, 0.0);
    let ([_, kappa], kv) = hermitian_eigen(&k);
    let x = col(&kv, 0);
    let w = col(&kv, 1);
    let p2 = vscale(&w, c(kappa.max(f64::MIN_POSITIVE).powf(-0.5), 0.0));
    let alpha = sesq(&x, &h, &p2).conj().inv();
    let p1 = vscale(&x, alpha);
    let t = -sesq(&p2, &h, &p2).re / 2.0;
    let p2 = crate::matcore::vadd(&p2, &vscale(&p1, c(t, 0.0)));
    finish(a, StarClass::JordanType, c0, from_cols(p1, p2))
}

fn unimodular(a: &Mat2, m: &Mat2, l1: C64, l2: C64) -> Result<StarReduction, CongruenceError> {
    let mut x1 = eigenvector(m, l1);
    let mut x2 = eigenvector(m, l2);
    let d1 = sesq(&x1, a, &x1);
    let d2 = sesq(&x2, a, &x2);
    x1 = vscale(&x1, c(d1.norm().powf(-0.5), 0.0));
    x2 = vscale(&x2, c(d2.norm().powf(-0.5), 0.0));
    let (psi1, psi2) = (d1.arg(), d2.arg());
    let delta = wrap_angle(psi2 - psi1);
    let (theta, cval, p) = if delta <= PI {
        (delta, cis(-psi1), from_cols(x1, x2))
    } else {
        (2.0 * PI - delta, cis(-psi2), from_cols(x2, x1))
    };
    let cls = StarClass::Unimodular { theta };
    if !cls.is_valid() {
        return Err(CongruenceError::AmbiguousNearBoundary(vec![cls, StarClass::Definite, StarClass::Indefinite]));
    }
    finish(a, cls, cval, p)
}

fn reciprocal(a: &Mat2, m: &Mat2, ls: C64, lb: C64) -> Result<StarReduction, CongruenceError> {
    let xs = eigenvector(m, ls);
    let xb = eigenvector(m, lb);
    let beta = sesq(&xs, a, &xb);
    let gamma = sesq(&xb, a, &xs);
    let ratio = gamma / beta;
    let tau = ratio.norm();
    let v = ratio.arg() / 2.0;
    let q = cis(v) / beta.norm();
    let cval = cis(-v) * beta.norm() / beta;
    let cls = StarClass::Reciprocal { tau };
    if !cls.is_valid() {
        return Err(CongruenceError::AmbiguousNearBoundary(vec![cls, StarClass::Definite]));
    }
    finish(a, cls, cval, from_cols(xs, vscale(&xb, q)))
}

/// Takagi factorization `B = U diag(s1, s2) U^T` with `U` unitary and `s1 >= s2 >= 0`.
pub fn takagi(b: &Sym2) -> (Mat2, [f64; 2]) {
    let bm = *b.matrix();
    let ([_, top], v) = hermitian_eigen(&(bm.adjoint() * bm));
    let s1 = top.max(0.0).sqrt();
    if s1 == 0.0 {
        return (Mat2::identity(), [0.0, 0.0]);
    }
    let x = col(&v, 1);
    let xc = [x[0].conj(), x[1].conj()];
    let bx = [bm[(0, 0)] * x[0] + bm[(0, 1)] * x[1], bm[(1, 0)] * x[0] + bm[(1, 1)] * x[1]];
    // both candidates are fixed by u -> B conj(u) / s1; one has norm >= sqrt 2
    let plus = [xc[0] + bx[0] / s1, xc[1] + bx[1] / s1];
    let minus = [(xc[0] - bx[0] / s1) * c(0.0, 1.0), (xc[1] - bx[1] / s1) * c(0.0, 1.0)];
    let u1 = if vnorm(&plus) >= vnorm(&minus) { plus } else { minus };
    let u1 = vscale(&u1, c(1.0 / vnorm(&u1), 0.0));
    let mut u2 = [-u1[1].conj(), u1[0].conj()];
    let u2c = [u2[0].conj(), u2[1].conj()];
    let kappa = sesq(&u2, &bm, &u2c);
    u2 = vscale(&u2, cis(kappa.arg() / 2.0));
    (from_cols(u1, u2), [s1, kappa.norm()])
}

pub fn classify_tcong(b: &Sym2, tol: f64) -> TCongReduction {
    let (u, s) = takagi(b);
    let cut = tol * max_norm(b.matrix()).max(1.0);
    let mut rank = 0u8;
    let mut scales = [c(1.0, 0.0); 2];
    for (k, &sv) in s.iter().enumerate() {
        if sv > cut {
            rank += 1;
            scales[k] = c(sv.powf(-0.5), 0.0);
        }
    }
    let uc = u.map(|z| z.conj());
    let reducer = uc * crate::matcore::diag(scales[0], scales[1]);
    let mut target = Mat2::zeros();
    for k in 0..rank as usize {
        target[(k, k)] = c(1.0, 0.0);
    }
    let residual = max_norm(&(reducer.transpose() * b.matrix() * reducer - target));
    TCongReduction { rank, reducer, residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{mat, sample_group};
    use proptest::prelude::*;

    fn reps() -> Vec<StarClass> {
        vec![
            StarClass::Zero,
            StarClass::Rank1Semidef,
            StarClass::Rank1Nilpotent,
            StarClass::Definite,
            StarClass::Indefinite,
            StarClass::Reciprocal { tau: 0.37 },
            StarClass::Unimodular { theta: PI / 3.0 },
            StarClass::JordanType,
        ]
    }

    fn moved(a: &Mat2, seed: u64) -> Mat2 {
        let g = sample_group(seed, 1.0).unwrap();
        g.p().adjoint() * a * g.p() * g.c()
    }

    fn same_class(x: &StarClass, y: &StarClass, tol: f64) -> bool {
        match (x, y) {
            (StarClass::Reciprocal { tau: a }, StarClass::Reciprocal { tau: b }) => (a - b).abs() <= tol,
            (StarClass::Unimodular { theta: a }, StarClass::Unimodular { theta: b }) => (a - b).abs() <= tol,
            _ => x == y,
        }
    }

    #[test]
    fn cosquare_examples() {
        let th = 0.8;
        let m = cosquare(&StarClass::Unimodular { theta: th }.representative(), 1e-12).unwrap();
        assert!((m - crate::matcore::diag(c(1.0, 0.0), cis(2.0 * th))).norm() < 1e-14);
        let m = cosquare(&StarClass::Reciprocal { tau: 0.25 }.representative(), 1e-12).unwrap();
        assert!((m - real_mat(0.25, 0.0, 0.0, 4.0)).norm() < 1e-14);
        let m = cosquare(&StarClass::JordanType.representative(), 1e-12).unwrap();
        assert!((m - mat(c(1.0, 0.0), c(0.0, 2.0), c(0.0, 0.0), c(1.0, 0.0))).norm() < 1e-14);
        assert!(matches!(cosquare(&Mat2::zeros(), 1e-9), Err(CongruenceError::SingularInput(_))));
    }

    #[test]
    fn zero_and_swap() {
        let r = classify_star(&Mat2::zeros(), 1e-9).unwrap();
        assert_eq!(r.cls, StarClass::Zero);
        assert_eq!(r.reducer, GroupElement::identity());
        let r = classify_star(&real_mat(0.0, 1.0, 1.0, 0.0), 1e-9).unwrap();
        assert_eq!(r.cls, StarClass::Indefinite);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn representatives_classify_to_themselves() {
        for cls in reps() {
            let r = classify_star(&cls.representative(), 1e-9).unwrap();
            assert!(same_class(&r.cls, &cls, 1e-12), "{cls:?} -> {:?}", r.cls);
            assert!(r.residual < 1e-12, "{cls:?} residual {}", r.residual);
        }
    }

    #[test]
    fn orbit_round_trip() {
        for cls in reps() {
            for seed in 0..1000 {
                let a = moved(&cls.representative(), seed);
                let r = classify_star(&a, 1e-9).unwrap_or_else(|e| panic!("{cls:?} seed {seed}: {e}"));
                assert!(same_class(&r.cls, &cls, 1e-6), "{cls:?} seed {seed} -> {:?}", r.cls);
                assert!(r.residual < 1e-8, "{cls:?} seed {seed} residual {}", r.residual);
            }
        }
    }

    #[test]
    fn tcong_examples() {
        assert_eq!(classify_tcong(&Sym2::zero(), 1e-9).rank, 0);
        let r = classify_tcong(&Sym2::from_entries(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)), 1e-9);
        assert_eq!(r.rank, 2);
        assert!(r.residual < 1e-10);
        let r = classify_tcong(&Sym2::from_entries(c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)), 1e-9);
        assert_eq!(r.rank, 1);
        assert!(r.residual < 1e-10);
    }

    #[test]
    fn tcong_rank_matches_independent_svd() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for i in 0..10_000 {
            let rank = i % 3;
            let mut z = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let b = match rank {
                0 => Mat2::zeros(),
                1 => {
                    let (x, y, k) = (z(), z(), z());
                    mat(k * x * x, k * x * y, k * x * y, k * y * y)
                }
                _ => {
                    let (x, y, w) = (z(), z(), z());
                    mat(x, y, y, w)
                }
            };
            let b = Sym2::new(b).unwrap();
            let [s0, s1] = singular_values(b.matrix());
            let cut = 1e-9 * max_norm(b.matrix()).max(1.0);
            let want = (s0 > cut) as u8 + (s1 > cut) as u8;
            let got = classify_tcong(&b, 1e-9);
            assert_eq!(got.rank, want, "sample {i}");
            assert!(got.residual < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn cosquare_spectrum_transforms(seed in 0u64..1_000_000) {
            let a = *sample_group(seed.wrapping_add(17), 1.0).unwrap().p();
            let g = sample_group(seed, 1.0).unwrap();
            let b = g.p().adjoint() * a * g.p() * g.c();
            let want = cosquare(&a, 1e-12).unwrap() * (g.c() * g.c());
            let got = cosquare(&b, 1e-12).unwrap();
            let ew = eigenvalues(&want);
            let eg = eigenvalues(&got);
            let scale = 1.0 + ew[1].norm();
            let straight = (ew[0] - eg[0]).norm().max((ew[1] - eg[1]).norm());
            let crossed = (ew[0] - eg[1]).norm().max((ew[1] - eg[0]).norm());
            prop_assert!(straight.min(crossed) <= 1e-8 * scale);
        }

        #[test]
        fn hermitian_signature_decides_scalar_classes(seed in 0u64..1_000_000, neg in any::<bool>()) {
            let base = if neg { StarClass::Indefinite } else { StarClass::Definite };
            let a = moved(&base.representative(), seed);
            let m = cosquare(&a, 1e-12).unwrap();
            let mu = m[(0, 0)];
            prop_assert!((m - Mat2::identity() * mu).norm() < 1e-8 * (1.0 + mu.norm()));
            let h = a * cis(-mu.arg() / 2.0);
            let ([h0, h1], _) = hermitian_eigen(&h);
            prop_assert_eq!(h0 * h1 < 0.0, neg);
            prop_assert_eq!(classify_star(&a, 1e-9).unwrap().cls, base);
        }

        #[test]
        fn takagi_reconstructs(seed in 0u64..1_000_000) {
            let p = *sample_group(seed, 1.0).unwrap().p();
            let b = Sym2::symmetrize(&p);
            let (u, s) = takagi(&b);
            let rebuilt = u * crate::matcore::diag(c(s[0], 0.0), c(s[1], 0.0)) * u.transpose();
            prop_assert!(max_norm(&(rebuilt - b.matrix())) < 1e-10);
            prop_assert!(max_norm(&(u.adjoint() * u - Mat2::identity())) < 1e-10);
        }
    }
}
