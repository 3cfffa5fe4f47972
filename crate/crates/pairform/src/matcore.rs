//! Complex 2x2 matrices, the acting group and seeded sampling.
//!
//! A matrix is serialized as a 2x2 nested array of `[re, im]` pairs and a pair
//! as `{"A": .., "B": ..}`.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

/// Default absolute tolerance used throughout the crate.
pub const DEFAULT_TOL: f64 = 1e-9;

const MAX_SAMPLE_ROUNDS: usize = 100;
const MIN_SAMPLE_DET: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("matrix is not symmetric: off-diagonal entries {0} and {1}")]
    NotSymmetric(C64, C64),
    #[error("scalar factor has modulus {0}, expected 1")]
    NotUnimodular(f64),
    #[error("matrix factor is singular (|det| = {0})")]
    Singular(f64),
    #[error("spread must be positive, got {0}")]
    BadSpread(f64),
    #[error("no admissible group element after {0} rejection rounds")]
    SamplingExhausted(usize),
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Unit complex number `e^{i t}`.
pub fn cis(t: f64) -> C64 {
    C64::from_polar(1.0, t)
}

pub fn mat(a: C64, b: C64, c: C64, d: C64) -> Mat2 {
    Mat2::new(a, b, c, d)
}

pub fn real_mat(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
    Mat2::new(C64::from(a), C64::from(b), C64::from(c), C64::from(d))
}

pub fn diag(a: C64, d: C64) -> Mat2 {
    Mat2::new(a, C64::default(), C64::default(), d)
}

pub fn identity() -> Mat2 {
    Mat2::identity()
}

pub fn zero() -> Mat2 {
    Mat2::zeros()
}

pub fn is_finite(m: &Mat2) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entry modulus.
pub fn max_norm(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Symmetric 2x2 complex matrix. The (1,2) and (2,1) entries are bitwise equal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym2(Mat2);

impl Sym2 {
    pub fn new(m: Mat2) -> Result<Self, MatError> {
        if !is_finite(&m) {
            return Err(MatError::NonFinite);
        }
        if m[(0, 1)] != m[(1, 0)] {
            return Err(MatError::NotSymmetric(m[(0, 1)], m[(1, 0)]));
        }
        Ok(Sym2(m))
    }

    /// `(m + m^T) / 2`.
    pub fn symmetrize(m: &Mat2) -> Self {
        let off = (m[(0, 1)] + m[(1, 0)]) * 0.5;
        Sym2(Mat2::new(m[(0, 0)], off, off, m[(1, 1)]))
    }

    pub fn from_entries(a: C64, b: C64, d: C64) -> Self {
        Sym2(Mat2::new(a, b, b, d))
    }

    pub fn zero() -> Self {
        Sym2(Mat2::zeros())
    }

    pub fn identity() -> Self {
        Sym2(Mat2::identity())
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat2 {
        self.0
    }

    /// The independent entries (1,1), (1,2), (2,2).
    pub fn entries(&self) -> (C64, C64, C64) {
        (self.0[(0, 0)], self.0[(0, 1)], self.0[(1, 1)])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixPair {
    pub a: Mat2,
    pub b: Sym2,
}

impl MatrixPair {
    pub fn new(a: Mat2, b: Sym2) -> Result<Self, MatError> {
        if !is_finite(&a) {
            return Err(MatError::NonFinite);
        }
        Ok(MatrixPair { a, b })
    }

    /// Builds a pair, symmetrizing `b`.
    pub fn from_mats(a: Mat2, b: Mat2) -> Self {
        MatrixPair { a, b: Sym2::symmetrize(&b) }
    }

    pub fn zero() -> Self {
        MatrixPair { a: Mat2::zeros(), b: Sym2::zero() }
    }

    pub fn is_finite(&self) -> bool {
        is_finite(&self.a) && is_finite(self.b.matrix())
    }
}

/// Max of the componentwise max-norm distances.
pub fn pair_distance(p: &MatrixPair, q: &MatrixPair) -> f64 {
    max_norm(&(p.a - q.a)).max(max_norm(&(p.b.matrix() - q.b.matrix())))
}

/// Element `(c, P)` with `|c| = 1` and `P` invertible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement {
    c: C64,
    p: Mat2,
}

impl GroupElement {
    pub fn new(c: C64, p: Mat2) -> Result<Self, MatError> {
        if !(c.re.is_finite() && c.im.is_finite()) || !is_finite(&p) {
            return Err(MatError::NonFinite);
        }
        let m = c.norm();
        if (m - 1.0).abs() > 1e-12 {
            return Err(MatError::NotUnimodular(m));
        }
        let det = p.determinant().norm();
        if !(det > 0.0) {
            return Err(MatError::Singular(det));
        }
        Ok(GroupElement { c, p })
    }

    /// Like [`GroupElement::new`] but rescales `c` onto the unit circle first.
    pub fn normalized(c: C64, p: Mat2) -> Result<Self, MatError> {
        let m = c.norm();
        if !(m > 0.0) || !m.is_finite() {
            return Err(MatError::NotUnimodular(m));
        }
        Self::new(c / m, p)
    }

    pub fn identity() -> Self {
        GroupElement { c: C64::new(1.0, 0.0), p: Mat2::identity() }
    }

    pub fn c(&self) -> C64 {
        self.c
    }

    pub fn p(&self) -> &Mat2 {
        &self.p
    }

    pub fn inverse(&self) -> Self {
        let p = self.p.try_inverse().expect("group element is invertible");
        GroupElement { c: self.c.conj(), p }
    }
}

/// `g * h` acts as `g` after `h`.
impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, h: GroupElement) -> GroupElement {
        GroupElement { c: self.c * h.c, p: h.p * self.p }
    }
}

/// `(c P* A P, sym(P^T B P))`.
pub fn act_pair(g: &GroupElement, pair: &MatrixPair) -> MatrixPair {
    let p = &g.p;
    let a = p.adjoint() * pair.a * p * g.c;
    let b = p.transpose() * pair.b.matrix() * p;
    MatrixPair { a, b: Sym2::symmetrize(&b) }
}

/// Seeded random group element; entries of `P` are complex Gaussians with
/// `E|z|^2 = spread^2`.
pub fn sample_group(seed: u64, spread: f64) -> Result<GroupElement, MatError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_group_with(&mut rng, spread)
}

pub fn sample_group_with<R: Rng + ?Sized>(rng: &mut R, spread: f64) -> Result<GroupElement, MatError> {
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(MatError::BadSpread(spread));
    }
    let normal = Normal::new(0.0, spread / 2f64.sqrt()).expect("finite positive std");
    let alpha = rng.random_range(0.0..2.0 * PI);
    for _ in 0..MAX_SAMPLE_ROUNDS {
        let mut e = [C64::default(); 4];
        for z in e.iter_mut() {
            *z = C64::new(normal.sample(rng), normal.sample(rng));
        }
        let p = Mat2::new(e[0], e[1], e[2], e[3]);
        if p.determinant().norm() >= MIN_SAMPLE_DET {
            return Ok(GroupElement { c: cis(alpha), p });
        }
    }
    Err(MatError::SamplingExhausted(MAX_SAMPLE_ROUNDS))
}

// ---------------------------------------------------------------------------
// small dense helpers

/// Eigenvalues of a 2x2 matrix, ordered by increasing modulus.
pub fn eigenvalues(m: &Mat2) -> [C64; 2] {
    let half_tr = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let det = m.determinant();
    let disc = (half_tr * half_tr - det).sqrt();
    let (l1, l2) = (half_tr + disc, half_tr - disc);
    // recompute the small one from the product to avoid cancellation
    let (big, small) = if l1.norm() >= l2.norm() { (l1, l2) } else { (l2, l1) };
    let small = if big.norm() > 0.0 { det / big } else { small };
    [small, big]
}

/// Unit null vector of `m - lambda I`.
pub fn eigenvector(m: &Mat2, lambda: C64) -> [C64; 2] {
    let r = m - Mat2::identity() * lambda;
    let c1 = [r[(0, 1)], -r[(0, 0)]];
    let c2 = [-r[(1, 1)], r[(1, 0)]];
    let n1 = c1[0].norm_sqr() + c1[1].norm_sqr();
    let n2 = c2[0].norm_sqr() + c2[1].norm_sqr();
    let v = if n1 >= n2 { c1 } else { c2 };
    let n = n1.max(n2).sqrt();
    if n == 0.0 {
        return [C64::new(1.0, 0.0), C64::default()];
    }
    [v[0] / n, v[1] / n]
}

/// Singular values in decreasing order.
pub fn singular_values(m: &Mat2) -> [f64; 2] {
    let s = m.singular_values();
    let (x, y) = (s[0], s[1]);
    if x >= y {
        [x, y]
    } else {
        [y, x]
    }
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues ascending with unit
/// eigenvectors as columns.
pub fn hermitian_eigen(h: &Mat2) -> ([f64; 2], Mat2) {
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let e = nalgebra::SymmetricEigen::new(herm);
    let (l0, l1) = (e.eigenvalues[0], e.eigenvalues[1]);
    let v = e.eigenvectors;
    if l0 <= l1 {
        ([l0, l1], v)
    } else {
        ([l1, l0], Mat2::from_columns(&[v.column(1).into_owned(), v.column(0).into_owned()]))
    }
}

pub fn col(m: &Mat2, j: usize) -> [C64; 2] {
    [m[(0, j)], m[(1, j)]]
}

pub fn from_cols(a: [C64; 2], b: [C64; 2]) -> Mat2 {
    Mat2::new(a[0], b[0], a[1], b[1])
}

/// `x^* M y`.
pub fn sesq(x: &[C64; 2], m: &Mat2, y: &[C64; 2]) -> C64 {
    let my = [m[(0, 0)] * y[0] + m[(0, 1)] * y[1], m[(1, 0)] * y[0] + m[(1, 1)] * y[1]];
    x[0].conj() * my[0] + x[1].conj() * my[1]
}

/// `x^T M y`.
pub fn bilin(x: &[C64; 2], m: &Mat2, y: &[C64; 2]) -> C64 {
    let my = [m[(0, 0)] * y[0] + m[(0, 1)] * y[1], m[(1, 0)] * y[0] + m[(1, 1)] * y[1]];
    x[0] * my[0] + x[1] * my[1]
}

pub fn vscale(v: &[C64; 2], s: C64) -> [C64; 2] {
    [v[0] * s, v[1] * s]
}

pub fn vadd(a: &[C64; 2], b: &[C64; 2]) -> [C64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn vnorm(v: &[C64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

// ---------------------------------------------------------------------------
// JSON

pub type MatJson = [[[f64; 2]; 2]; 2];

pub fn mat_to_json(m: &Mat2) -> MatJson {
    let mut out = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = [m[(i, j)].re, m[(i, j)].im];
        }
    }
    out
}

pub fn mat_from_json(j: &MatJson) -> Mat2 {
    Mat2::new(
        C64::new(j[0][0][0], j[0][0][1]),
        C64::new(j[0][1][0], j[0][1][1]),
        C64::new(j[1][0][0], j[1][0][1]),
        C64::new(j[1][1][0], j[1][1][1]),
    )
}

#[derive(Serialize, Deserialize)]
struct PairJson {
    #[serde(rename = "A")]
    a: MatJson,
    #[serde(rename = "B")]
    b: MatJson,
}

impl Serialize for MatrixPair {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PairJson { a: mat_to_json(&self.a), b: mat_to_json(self.b.matrix()) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixPair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = PairJson::deserialize(d)?;
        let b = Sym2::new(mat_from_json(&j.b)).map_err(serde::de::Error::custom)?;
        MatrixPair::new(mat_from_json(&j.a), b).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct GroupJson {
    c: [f64; 2],
    #[serde(rename = "P")]
    p: MatJson,
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GroupJson { c: [self.c.re, self.c.im], p: mat_to_json(&self.p) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = GroupJson::deserialize(d)?;
        GroupElement::new(C64::new(j.c[0], j.c[1]), mat_from_json(&j.p)).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for a complex number as `[re, im]`.
pub mod complex_json {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rand_mat(seed: u64) -> Mat2 {
        *sample_group(seed, 1.0).unwrap().p()
    }

    #[test]
    fn identity_action_is_trivial() {
        let p = MatrixPair::from_mats(rand_mat(1), rand_mat(2));
        let q = act_pair(&GroupElement::identity(), &p);
        assert!(pair_distance(&p, &q) < 1e-15);
    }

    #[test]
    fn diagonal_conjugation() {
        let s = 0.3;
        let g = GroupElement::new(c(1.0, 0.0), diag(c(1.0, 0.0), c(s, 0.0))).unwrap();
        let lam = cis(0.7);
        let p = MatrixPair::from_mats(diag(c(1.0, 0.0), lam), zero());
        let q = act_pair(&g, &p);
        assert!((q.a - diag(c(1.0, 0.0), lam * s * s)).norm() < 1e-15);
        assert_eq!(q.b.matrix(), &zero());
    }

    #[test]
    fn determinant_identity() {
        let g = sample_group(7, 1.0).unwrap();
        let q = act_pair(&g, &MatrixPair::from_mats(identity(), identity()));
        let dp = g.p().determinant();
        let want_a = g.c() * g.c() * dp.norm_sqr();
        assert!((q.a.determinant() - want_a).norm() < 1e-10 * want_a.norm().max(1.0));
        assert!((q.b.matrix().determinant() - dp * dp).norm() < 1e-10 * dp.norm_sqr().max(1.0));
    }

    #[test]
    fn max_norm_examples() {
        assert_eq!(max_norm(&zero()), 0.0);
        let m = mat(c(3.0, 0.0), c(0.0, 4.0), c(0.0, 0.0), c(-5.0, 0.0));
        assert_eq!(max_norm(&m), 5.0);
    }

    #[test]
    fn pair_distance_examples() {
        let p = MatrixPair::from_mats(identity(), zero());
        assert_eq!(pair_distance(&p, &p), 0.0);
        assert_eq!(pair_distance(&p, &MatrixPair::zero()), 1.0);
    }

    #[test]
    fn sampling_is_deterministic_and_valid() {
        assert_eq!(sample_group(42, 1.0).unwrap(), sample_group(42, 1.0).unwrap());
        assert!(sample_group(1, 0.0).is_err());
        assert!(sample_group(1, -1.0).is_err());
        for seed in 0..10_000 {
            let g = sample_group(seed, 1.0).unwrap();
            assert!((g.c().norm() - 1.0).abs() <= 1e-12);
            assert!(g.p().determinant().norm() >= MIN_SAMPLE_DET);
        }
    }

    #[test]
    fn symmetric_check_is_exact() {
        let m = mat(c(1.0, 0.0), c(2.0, 0.0), c(2.0, 1e-17), c(0.0, 0.0));
        assert!(Sym2::new(m).is_err());
        assert!(Sym2::new(Sym2::symmetrize(&m).into_matrix()).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let p = MatrixPair::from_mats(rand_mat(3), rand_mat(4));
        let s = serde_json::to_string(&p).unwrap();
        let q: MatrixPair = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        let asym = r#"{"A":[[[1,0],[0,0]],[[0,0],[1,0]]],"B":[[[0,0],[1,0]],[[2,0],[0,0]]]}"#;
        assert!(serde_json::from_str::<MatrixPair>(asym).is_err());
    }

    #[test]
    fn eigen_helpers() {
        let m = mat(c(2.0, 1.0), c(1.0, 0.0), c(0.5, -1.0), c(-1.0, 0.3));
        for l in eigenvalues(&m) {
            let v = eigenvector(&m, l);
            let r = m * Mat2::from_columns(&[nalgebra::Vector2::new(v[0], v[1]); 2]);
            assert!((r[(0, 0)] - l * v[0]).norm() < 1e-12);
            assert!((r[(1, 0)] - l * v[1]).norm() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn action_is_a_left_action(s1 in 0u64..1_000_000, s2 in 0u64..1_000_000, s3 in 0u64..1_000_000) {
            let g = sample_group(s1, 1.0).unwrap();
            let h = sample_group(s2, 1.0).unwrap();
            let p = MatrixPair::from_mats(rand_mat(s3), rand_mat(s3 + 1));
            let lhs = act_pair(&(g * h), &p);
            let rhs = act_pair(&g, &act_pair(&h, &p));
            let scale = 1.0 + max_norm(&lhs.a).max(max_norm(lhs.b.matrix()));
            prop_assert!(pair_distance(&lhs, &rhs) <= 1e-10 * scale);
        }

        #[test]
        fn determinants_transform(s1 in 0u64..1_000_000, s2 in 0u64..1_000_000) {
            let g = sample_group(s1, 1.0).unwrap();
            let p = MatrixPair::from_mats(rand_mat(s2), rand_mat(s2 + 1));
            let q = act_pair(&g, &p);
            let dp = g.p().determinant();
            let da = (q.a.determinant().norm() - dp.norm_sqr() * p.a.determinant().norm()).abs();
            let db = (q.b.matrix().determinant() - dp * dp * p.b.matrix().determinant()).norm();
            let scale = 1.0 + dp.norm_sqr() * (1.0 + max_norm(&p.a) + max_norm(p.b.matrix())).powi(2);
            prop_assert!(da <= 1e-10 * scale);
            prop_assert!(db <= 1e-10 * scale);
            prop_assert_eq!(q.b.matrix()[(0, 1)], q.b.matrix()[(1, 0)]);
        }

        #[test]
        fn submultiplicative(s1 in 0u64..1_000_000, s2 in 0u64..1_000_000) {
            let x = rand_mat(s1);
            let y = rand_mat(s2);
            prop_assert!(max_norm(&(x * y)) <= 2.0 * max_norm(&x) * max_norm(&y) + 1e-14);
        }

        #[test]
        fn triangle_inequality(s in 0u64..1_000_000) {
            let p = MatrixPair::from_mats(rand_mat(s), rand_mat(s + 1));
            let q = MatrixPair::from_mats(rand_mat(s + 2), rand_mat(s + 3));
            let r = MatrixPair::from_mats(rand_mat(s + 4), rand_mat(s + 5));
            prop_assert!(pair_distance(&p, &r) <= pair_distance(&p, &q) + pair_distance(&q, &r) + 1e-14);
            prop_assert_eq!(pair_distance(&p, &q), pair_distance(&q, &p));
        }
    }
}
