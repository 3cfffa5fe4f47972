//! Quadratic jets of a real 4-manifold graphed over `C^2` in `C^3` near a
//! complex point, reduced to a pair `(A, B)`.
//!
//! A jet is `w = w0 + s^T zbar + r^T z + zbar^T A z + 1/2 zbar^T B zbar + 1/2 z^T C z`.
//! The reduced form is `w~ = zbar^T A z + Re(z^T B' z)`.

use nalgebra::{Matrix4, Vector2, Vector4};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::matcore::{c, mat_from_json, mat_to_json, max_norm, Mat2, MatJson, MatrixPair, Sym2, C64};

/// Largest `|lin_zbar|` (max norm) accepted for the translation step.
pub const NEAR_IDENTITY_RADIUS: f64 = 0.1;

pub type CVec2 = Vector2<C64>;

#[derive(Debug, Clone, PartialEq)]
pub struct JetData {
    pub w0: C64,
    pub lin_z: CVec2,
    pub lin_zbar: CVec2,
    pub a: Mat2,
    pub b: Sym2,
    pub c: Sym2,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("jet is not in standard position: {0}")]
    NotStandardPosition(String),
    #[error("{0} is not symmetric")]
    NotSymmetric(&'static str),
}

/// The substitution `z = z_shift + zeta`, `w~ = w - w_shift - lin_removed^T zeta - 1/2 zeta^T quad_removed zeta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JetTransform {
    #[serde(serialize_with = "ser_vec")]
    pub z_shift: CVec2,
    #[serde(with = "crate::matcore::complex_json")]
    pub w_shift: C64,
    #[serde(serialize_with = "ser_vec")]
    pub lin_removed: CVec2,
    #[serde(serialize_with = "ser_mat")]
    pub quad_removed: Mat2,
}

fn ser_vec<S: Serializer>(v: &CVec2, s: S) -> Result<S::Ok, S::Error> {
    [[v[0].re, v[0].im], [v[1].re, v[1].im]].serialize(s)
}

fn ser_mat<S: Serializer>(m: &Mat2, s: S) -> Result<S::Ok, S::Error> {
    mat_to_json(m).serialize(s)
}

#[derive(Serialize, Deserialize)]
struct JetJson {
    w0: [f64; 2],
    lin_z: [[f64; 2]; 2],
    lin_zbar: [[f64; 2]; 2],
    #[serde(rename = "A")]
    a: MatJson,
    #[serde(rename = "B")]
    b: MatJson,
    #[serde(rename = "C")]
    c: MatJson,
}

fn vec_json(v: &CVec2) -> [[f64; 2]; 2] {
    [[v[0].re, v[0].im], [v[1].re, v[1].im]]
}

fn json_vec(v: &[[f64; 2]; 2]) -> CVec2 {
    CVec2::new(c(v[0][0], v[0][1]), c(v[1][0], v[1][1]))
}

impl Serialize for JetData {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        JetJson {
            w0: [self.w0.re, self.w0.im],
            lin_z: vec_json(&self.lin_z),
            lin_zbar: vec_json(&self.lin_zbar),
            a: mat_to_json(&self.a),
            b: mat_to_json(self.b.matrix()),
            c: mat_to_json(self.c.matrix()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for JetData {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = JetJson::deserialize(d)?;
        let b = Sym2::new(mat_from_json(&j.b)).map_err(|_| serde::de::Error::custom(SurfaceError::NotSymmetric("B")))?;
        let cm = Sym2::new(mat_from_json(&j.c)).map_err(|_| serde::de::Error::custom(SurfaceError::NotSymmetric("C")))?;
        Ok(JetData {
            w0: c(j.w0[0], j.w0[1]),
            lin_z: json_vec(&j.lin_z),
            lin_zbar: json_vec(&j.lin_zbar),
            a: mat_from_json(&j.a),
            b,
            c: cm,
        })
    }
}

impl JetData {
    /// Jet of the reduced form itself: `w = zbar^T A z + Re(z^T B z)`.
    pub fn from_pair(p: &MatrixPair) -> Self {
        let bb = p.b.matrix().map(|z| z.conj());
        JetData {
            w0: c(0.0, 0.0),
            lin_z: CVec2::zeros(),
            lin_zbar: CVec2::zeros(),
            a: p.a,
            b: Sym2::symmetrize(&bb),
            c: p.b,
        }
    }
}

/// Solves `s + A z + B zbar = 0` for `z`, a real-linear 4x4 system.
fn critical_point(j: &JetData, tol: f64) -> Result<CVec2, SurfaceError> {
    let (a, b) = (j.a, *j.b.matrix());
    let m = Matrix4::from_fn(|r, col| {
        let (i, k) = (r % 2, col % 2);
        let (ar, ai, br, bi) = (a[(i, k)].re, a[(i, k)].im, b[(i, k)].re, b[(i, k)].im);
        match (r < 2, col < 2) {
            (true, true) => ar + br,
            (true, false) => -ai + bi,
            (false, true) => ai + bi,
            (false, false) => ar - br,
        }
    });
    let sv = m.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smin <= tol * smax.max(1.0) {
        return Err(SurfaceError::NotStandardPosition("complex point is not isolated".into()));
    }
    let rhs = Vector4::new(-j.lin_zbar[0].re, -j.lin_zbar[1].re, -j.lin_zbar[0].im, -j.lin_zbar[1].im);
    let x = m.lu().solve(&rhs).ok_or_else(|| SurfaceError::NotStandardPosition("singular system".into()))?;
    Ok(CVec2::new(c(x[0], x[2]), c(x[1], x[3])))
}

fn quad(x: &CVec2, m: &Mat2, y: &CVec2) -> C64 {
    (x.transpose() * m * y)[(0, 0)]
}

pub fn reduce_jet(j: &JetData, tol: f64) -> Result<(MatrixPair, JetTransform), SurfaceError> {
    let sn = j.lin_zbar.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if sn > NEAR_IDENTITY_RADIUS {
        return Err(SurfaceError::NotStandardPosition(format!("|lin_zbar| = {sn} exceeds {NEAR_IDENTITY_RADIUS}")));
    }
    let zp = if sn > 0.0 { critical_point(j, tol)? } else { CVec2::zeros() };
    let (a, b, cm) = (j.a, *j.b.matrix(), *j.c.matrix());
    let zpb = zp.map(|z| z.conj());
    let w_shift = j.w0
        + (j.lin_zbar.transpose() * zpb)[(0, 0)]
        + (j.lin_z.transpose() * zp)[(0, 0)]
        + quad(&zpb, &a, &zp)
        + quad(&zpb, &b, &zpb) * 0.5
        + quad(&zp, &cm, &zp) * 0.5;
    let lin_removed = j.lin_z + a.transpose() * zpb + cm * zp;
    let bbar = b.map(|z| z.conj());
    let quad_removed = cm - bbar;
    let pair = MatrixPair { a, b: Sym2::symmetrize(&bbar) };
    Ok((pair, JetTransform { z_shift: zp, w_shift, lin_removed, quad_removed }))
}

/// True when `A` is Hermitian to within `tol`.
pub fn is_quadratically_flat(p: &MatrixPair, tol: f64) -> bool {
    max_norm(&(p.a - p.a.adjoint())) <= tol
}
