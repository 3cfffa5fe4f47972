//! Quantitative non-path certificates and phase estimates.
//!
//! All norms here are the entrywise max norm used by `pair_distance`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcore::{c, max_norm, singular_values, Mat2, MatrixPair, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateRule {
    NormRule,
    SingularityRule,
    DetRatioRule,
    TcongRule,
    StarTableRule,
}

/// No pair `(A~ + E, B~ + F)` with `|E| < bound_e` and `|F| < bound_f` lies in
/// the target orbit. A missing component places no constraint on that side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonPathCertificate {
    #[serde(rename = "bound_E")]
    pub bound_e: Option<f64>,
    #[serde(rename = "bound_F")]
    pub bound_f: Option<f64>,
    pub rule: CertificateRule,
}

impl NonPathCertificate {
    /// Smallest constrained component; always positive.
    pub fn bound(&self) -> f64 {
        self.bound_e.unwrap_or(f64::INFINITY).min(self.bound_f.unwrap_or(f64::INFINITY))
    }

    /// True if the perturbation sizes fall inside the excluded box.
    pub fn excludes(&self, e_norm: f64, f_norm: f64) -> bool {
        e_norm < self.bound_e.unwrap_or(f64::INFINITY) && f_norm < self.bound_f.unwrap_or(f64::INFINITY)
    }
}

/// `|det A~ det B| - |det B~ det A|` for `src = (A~, B~)`, `dst = (A, B)`.
pub fn det_invariant_p(src: &MatrixPair, dst: &MatrixPair) -> f64 {
    (src.a.determinant() * dst.b.matrix().determinant()).norm()
        - (src.b.matrix().determinant() * dst.a.determinant()).norm()
}

const EXACT: f64 = 1e-12;

fn is_zero(m: &Mat2) -> bool {
    max_norm(m) <= EXACT
}

fn is_singular(m: &Mat2) -> bool {
    singular_values(m)[1] <= EXACT * max_norm(m).max(1.0)
}

/// Max-norm distance from `m` to the singular matrices is at least this.
fn singular_gap(m: &Mat2) -> f64 {
    singular_values(m)[1] / 2.0
}

pub fn nonpath_lower_bound(src: &MatrixPair, dst: &MatrixPair) -> Option<NonPathCertificate> {
    let (at, bt) = (src.a, *src.b.matrix());
    let (a, b) = (dst.a, *dst.b.matrix());
    let mut cands = Vec::new();
    let e_only = |x: f64, rule| NonPathCertificate { bound_e: Some(x), bound_f: None, rule };
    let f_only = |x: f64, rule| NonPathCertificate { bound_e: None, bound_f: Some(x), rule };

    if !is_zero(&at) && is_zero(&a) {
        cands.push(e_only(max_norm(&at), CertificateRule::NormRule));
    }
    if !is_zero(&bt) && is_zero(&b) {
        cands.push(f_only(max_norm(&bt), CertificateRule::NormRule));
    }
    if !is_singular(&at) && is_singular(&a) {
        cands.push(e_only(singular_gap(&at), CertificateRule::SingularityRule));
    }
    if !is_singular(&bt) && is_singular(&b) {
        cands.push(f_only(singular_gap(&bt), CertificateRule::TcongRule));
    }
    let dets = [at.determinant(), bt.determinant(), a.determinant(), b.determinant()];
    if dets.iter().all(|d| d.norm() > EXACT) {
        let p = det_invariant_p(src, dst);
        if p.abs() > EXACT {
            let be = (p.abs() / (4.0 * dets[3].norm() * (2.0 * max_norm(&at) + 1.0))).min(1.0);
            let bf = (p.abs() / (4.0 * dets[2].norm() * (2.0 * max_norm(&bt) + 1.0))).min(1.0);
            cands.push(NonPathCertificate { bound_e: Some(be), bound_f: Some(bf), rule: CertificateRule::DetRatioRule });
        }
    }
    cands
        .into_iter()
        .filter(|c| c.bound() > 0.0)
        .max_by(|x, y| x.bound().partial_cmp(&y.bound()).unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseEstimate {
    /// `arg(det A~ / det A)` in `(-pi, pi]`.
    pub delta: f64,
    /// Bound on `min_k |c - (-1)^k e^{i delta/2}|`.
    pub g_bound: f64,
    /// Bound on `| |det P| - sqrt(|det A~| / |det A|) |`.
    pub r_bound: f64,
}

/// Admissible perturbation radius for `phase_estimate`.
pub fn phase_radius(src_a: &Mat2) -> f64 {
    src_a.determinant().norm() / (8.0 * max_norm(src_a) + 4.0)
}

pub fn phase_estimate(src_a: &Mat2, dst_a: &Mat2, e_norm: f64) -> Result<PhaseEstimate, BoundsError> {
    let (dt, d) = (src_a.determinant(), dst_a.determinant());
    if dt.norm() <= EXACT || d.norm() <= EXACT {
        return Err(BoundsError::PreconditionViolated("singular matrix".into()));
    }
    if !(e_norm >= 0.0) || e_norm > phase_radius(src_a) {
        return Err(BoundsError::PreconditionViolated(format!("perturbation {e_norm} exceeds admissible radius")));
    }
    let m = max_norm(src_a);
    Ok(PhaseEstimate {
        delta: (dt / d).arg(),
        g_bound: e_norm * (8.0 * m + 4.0) / dt.norm(),
        r_bound: e_norm * (4.0 * m + 2.0) / (dt.norm() * d.norm()).sqrt(),
    })
}

/// Rows of the single-matrix stabilizer table with their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "row")]
pub enum ResidualRow {
    C1 { theta: f64 },
    C3 { alpha: f64, theta: f64 },
    C4 { tau: f64, alpha: f64 },
    C5 {
        alpha: f64,
        beta: f64,
        #[serde(with = "crate::matcore::complex_json")]
        omega: C64,
        k: i32,
    },
    C6 { tau: f64, k: i32 },
    C7 { alpha: f64, beta: f64, omega: f64, k: i32 },
    C9 { alpha: f64, omega: f64, sigma: f64, k: i32 },
    C10 { alpha: f64 },
    C11 { alpha: f64 },
    C12 { k: i32 },
}

fn unit(x: f64) -> bool {
    x == 0.0 || x == 1.0
}

fn sign(k: i32) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

impl ResidualRow {
    pub fn check(&self) -> Result<(), BoundsError> {
        let ok = match *self {
            ResidualRow::C1 { theta } => theta > 0.0 && theta < std::f64::consts::PI,
            ResidualRow::C3 { alpha, theta } => unit(alpha) && (0.0..std::f64::consts::PI).contains(&theta),
            ResidualRow::C4 { tau, alpha } => (0.0..1.0).contains(&tau) && unit(alpha),
            ResidualRow::C5 { alpha, beta, omega, .. } => {
                (beta == 1.0 && alpha == 0.0 && (omega == c(0.0, 0.0) || omega == c(0.0, 1.0)))
                    || (beta == 0.0 && unit(alpha) && omega == c(-alpha, 0.0))
            }
            ResidualRow::C6 { tau, .. } => (0.0..1.0).contains(&tau),
            ResidualRow::C7 { alpha, beta, omega, .. } => {
                (alpha == 0.0 && omega == 0.0 && beta == 1.0)
                    || (beta == 0.0 && unit(alpha) && (omega == 0.0 || omega.abs() == alpha))
            }
            ResidualRow::C9 { alpha, omega, sigma, .. } => {
                sigma.abs() == 1.0 && ((alpha == 1.0 && (omega == sigma || omega == 0.0)) || (alpha == 0.0 && omega == 0.0))
            }
            ResidualRow::C10 { alpha } | ResidualRow::C11 { alpha } => unit(alpha),
            ResidualRow::C12 { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(BoundsError::BadParams(format!("{self:?}")))
        }
    }
}

/// Moduli of a row's expressions at `(c, P = [[x, y], [u, v]])`.
pub fn residual_expressions(row: &ResidualRow, cc: C64, p: &Mat2) -> Result<Vec<f64>, BoundsError> {
    row.check()?;
    let (x, y, u, v) = (p[(0, 0)], p[(0, 1)], p[(1, 0)], p[(1, 1)]);
    let ci = cc.inv();
    let r = |z: f64| c(z, 0.0);
    let vals: Vec<C64> = match *row {
        ResidualRow::C1 { .. } => vec![u * u, y * y, r(x.norm_sqr() - 1.0), r(v.norm_sqr() - 1.0)],
        ResidualRow::C3 { alpha, theta } => {
            vec![r(x.norm_sqr()) + C64::from_polar(u.norm_sqr(), theta) - ci * alpha, y * y, v * v]
        }
        ResidualRow::C4 { tau, alpha } => {
            let w = x.conj() * u;
            vec![y.conj() * v, x.conj() * v, u.conj() * y, c((1.0 + tau) * w.re, (1.0 - tau) * w.im) - ci * alpha]
        }
        ResidualRow::C5 { alpha, beta, omega, k } => {
            let s = sign(k);
            vec![
                r(2.0 * (x.conj() * u).re - s * alpha),
                r(2.0 * (y.conj() * v).re - s * omega.re),
                x.conj() * v + u.conj() * y - s * beta,
                u * u,
                r(v.norm_sqr() - s * omega.im),
            ]
        }
        ResidualRow::C6 { tau, k } => {
            let mut out = vec![x.conj() * u, y.conj() * v, y.conj() * u, v.conj() * x - ci];
            if tau > 0.0 {
                out.push(cc - sign(k));
            }
            out
        }
        ResidualRow::C7 { alpha, beta, omega, k } => {
            let s = sign(k);
            vec![
                r(2.0 * (y.conj() * v).re - s * omega),
                r(2.0 * (x.conj() * u).re - s * alpha),
                x.conj() * v + u.conj() * y - s * beta,
            ]
        }
        ResidualRow::C9 { alpha, omega, sigma, k } => {
            let mut out = vec![
                r(x.norm_sqr() + sigma * u.norm_sqr()) - ci * alpha,
                x.conj() * y + u.conj() * v * sigma,
                r(y.norm_sqr() + sigma * v.norm_sqr()) - ci * omega,
            ];
            if omega == sigma {
                let kk = if sigma == 1.0 { 0 } else { k };
                out.push(cc - sign(kk));
            }
            out
        }
        ResidualRow::C10 { alpha } => vec![
            x.conj() * v + u.conj() * y,
            u.conj() * v,
            r((y.conj() * u).re),
            v * v,
            c(2.0 * (x.conj() * u).re, u.norm_sqr()) - ci * alpha,
        ],
        ResidualRow::C11 { alpha } => {
            let mut out = vec![y * y, r(x.norm_sqr() - alpha)];
            if alpha == 1.0 {
                out.push(cc - 1.0);
            }
            out
        }
        ResidualRow::C12 { k } => vec![
            x.conj() * y - u.conj() * v - sign(k),
            r(x.norm_sqr() - u.norm_sqr()),
            r(y.norm_sqr() - v.norm_sqr()),
        ],
    };
    Ok(vals.into_iter().map(|z| z.norm()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{act_pair, diag, identity, real_mat, sample_group, GroupElement, Sym2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn pair(a: Mat2, b: Mat2) -> MatrixPair {
        MatrixPair::from_mats(a, b)
    }

    fn rdiag(x: f64, y: f64) -> Mat2 {
        real_mat(x, 0.0, 0.0, y)
    }

    #[test]
    fn p_examples() {
        let i2 = identity();
        assert_eq!(det_invariant_p(&pair(i2, i2), &pair(rdiag(1.0, -1.0), i2)), 0.0);
        assert_eq!(det_invariant_p(&pair(i2, rdiag(1.0, 0.0)), &pair(i2, i2)), 1.0);
    }

    #[test]
    fn p_matches_direct_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut rc = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        for _ in 0..200 {
            let m: Vec<C64> = (0..10).map(|_| rc()).collect();
            let src = pair(Mat2::new(m[0], m[1], m[2], m[3]), Mat2::new(m[4], m[5], m[5], m[6]));
            let dst = pair(Mat2::new(m[7], m[8], m[9], m[0]), Mat2::new(m[1], m[2], m[2], m[3]));
            let da = m[0] * m[3] - m[1] * m[2];
            let db = m[4] * m[6] - m[5] * m[5];
            let dta = m[7] * m[0] - m[8] * m[9];
            let dtb = m[1] * m[3] - m[2] * m[2];
            let want = (da * dtb).norm() - (db * dta).norm();
            assert!((det_invariant_p(&src, &dst) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singularity_rule_is_sharp_in_max_norm() {
        let cert = nonpath_lower_bound(&pair(identity(), Mat2::zeros()), &pair(rdiag(1.0, 0.0), Mat2::zeros())).unwrap();
        assert_eq!(cert.rule, CertificateRule::SingularityRule);
        assert!((cert.bound_e.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(cert.bound_f, None);
        // a max-norm 1/2 perturbation already reaches the singular matrices
        let e = real_mat(-0.5, 0.5, 0.5, -0.5);
        assert!((identity() + e).determinant().norm() < 1e-15);
    }

    #[test]
    fn rank_drop_rule() {
        let cert = nonpath_lower_bound(&pair(identity(), identity()), &pair(identity(), rdiag(1.0, 0.0))).unwrap();
        assert_eq!(cert.rule, CertificateRule::TcongRule);
        assert!((cert.bound_f.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn det_ratio_example() {
        let cert = nonpath_lower_bound(&pair(identity(), identity()), &pair(rdiag(1.0, -1.0), rdiag(2.0, 1.0))).unwrap();
        assert_eq!(cert.rule, CertificateRule::DetRatioRule);
        assert!((cert.bound_e.unwrap() - 1.0 / 24.0).abs() < 1e-15);
        assert!((cert.bound_f.unwrap() - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn no_rule_on_same_orbit() {
        let p = pair(identity(), rdiag(1.0, 2.0));
        let g = sample_group(4, 1.0).unwrap();
        assert!(nonpath_lower_bound(&p, &act_pair(&g, &p)).is_none());
    }

    #[test]
    fn certificate_json_shape() {
        let cert = nonpath_lower_bound(&pair(identity(), identity()), &pair(rdiag(1.0, -1.0), rdiag(2.0, 1.0))).unwrap();
        let v = serde_json::to_value(cert).unwrap();
        assert_eq!(v["rule"], "DetRatioRule");
        assert!(v["bound_E"].is_f64() && v["bound_F"].is_f64());
    }

    #[test]
    fn phase_examples() {
        let z = phase_estimate(&identity(), &identity(), 0.0).unwrap();
        assert_eq!((z.delta, z.g_bound, z.r_bound), (0.0, 0.0, 0.0));
        let z = phase_estimate(&identity(), &rdiag(1.0, -1.0), 0.01).unwrap();
        assert!((z.delta.abs() - PI).abs() < 1e-12);
        assert!((z.g_bound - 0.12).abs() < 1e-12);
        assert!((z.r_bound - 0.06).abs() < 1e-12);
        assert!(phase_estimate(&identity(), &identity(), 1.0).is_err());
    }

    #[test]
    fn phase_bounds_hold_empirically() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for seed in 0..1000u64 {
            let g = sample_group(seed, 1.0).unwrap();
            let a = diag(c(1.0, 0.0), C64::from_polar(1.0, rng.random_range(0.0..PI)));
            let img = act_pair(&g, &MatrixPair::from_mats(a, Mat2::zeros())).a;
            // src = image - E, with E inside the admissible radius
            let mut e = Mat2::zeros();
            for k in 0..4 {
                e[(k / 2, k % 2)] = C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(0.0..2.0 * PI));
            }
            let src = img - e;
            let rad = phase_radius(&src);
            if rad <= 0.0 {
                continue;
            }
            let e = e * c(rad * rng.random_range(0.0..1.0) / max_norm(&e), 0.0);
            let src = img - e;
            let Ok(est) = phase_estimate(&src, &a, max_norm(&e)) else { continue };
            let half = C64::from_polar(1.0, est.delta / 2.0);
            let gerr = (g.c() - half).norm().min((g.c() + half).norm());
            assert!(gerr <= est.g_bound + 1e-12, "seed {seed}: {gerr} > {}", est.g_bound);
            let rerr = (g.p().determinant().norm() - (src.determinant().norm() / a.determinant().norm()).sqrt()).abs();
            assert!(rerr <= est.r_bound + 1e-12, "seed {seed}: {rerr} > {}", est.r_bound);
        }
    }

    #[test]
    fn residual_examples() {
        let i2 = identity();
        let one = c(1.0, 0.0);
        assert_eq!(residual_expressions(&ResidualRow::C6 { tau: 0.3, k: 0 }, one, &i2).unwrap(), vec![0.0; 5]);
        assert_eq!(residual_expressions(&ResidualRow::C6 { tau: 0.0, k: 0 }, one, &i2).unwrap(), vec![0.0; 4]);
        assert_eq!(residual_expressions(&ResidualRow::C3 { alpha: 1.0, theta: 0.0 }, one, &i2).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(residual_expressions(&ResidualRow::C4 { tau: 1.0, alpha: 0.0 }, one, &i2).is_err());
    }

    #[test]
    fn residuals_scale_with_perturbation() {
        // (c, P) near a stabilizer element of A~: expressions shrink like |E|
        // each case: target A, base element (c0, P0) with c0 P0* A P0 = A~, row
        let h = 1.0 / 2f64.sqrt();
        let swap_base = real_mat(h, h, h, -h);
        let cases: Vec<(Mat2, Mat2, ResidualRow)> = vec![
            (Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(0.4, 0.0), c(0.0, 0.0)), identity(), ResidualRow::C6 { tau: 0.4, k: 0 }),
            (diag(c(1.0, 0.0), C64::from_polar(1.0, 1.0)), identity(), ResidualRow::C1 { theta: 1.0 }),
            (rdiag(1.0, -1.0), identity(), ResidualRow::C9 { alpha: 1.0, omega: -1.0, sigma: -1.0, k: 0 }),
            (rdiag(1.0, -1.0), swap_base, ResidualRow::C12 { k: 0 }),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (a, base, row) in cases {
            let target = act_pair(&GroupElement::new(c(1.0, 0.0), base).unwrap(), &MatrixPair { a, b: Sym2::zero() }).a;
            assert!(residual_expressions(&row, c(1.0, 0.0), &base).unwrap().iter().all(|r| *r < 1e-12));
            let mut ratios = Vec::new();
            for t in [1e-3, 1e-5, 1e-7] {
                let mut worst: f64 = 0.0;
                for _ in 0..50 {
                    let mut x = Mat2::zeros();
                    for k in 0..4 {
                        x[(k / 2, k % 2)] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    }
                    let p = base + x * c(t, 0.0);
                    let cc = C64::from_polar(1.0, t * rng.random_range(-1.0..1.0));
                    let g = GroupElement::new(cc, p).unwrap();
                    let img = act_pair(&g, &MatrixPair { a, b: Sym2::zero() }).a;
                    let e = max_norm(&(img - target));
                    let r = residual_expressions(&row, cc, &p).unwrap();
                    worst = worst.max(r.iter().cloned().fold(0.0, f64::max) / e);
                }
                ratios.push(worst);
            }
            assert!(ratios.iter().all(|r| r.is_finite() && *r < 1e3), "{row:?}: {ratios:?}");
        }
    }
}
