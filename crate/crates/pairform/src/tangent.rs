//! Tangent space of an orbit as the span of ten real 14-vectors.
//!
//! Coordinates 0..8 hold the entries of `A` row-major as (re, im); 8..14 hold
//! the (1,1), (1,2), (2,2) entries of `B`.

use nalgebra::{DMatrix, SVector};
use thiserror::Error;

use crate::matcore::{c, Mat2, MatrixPair};

pub type Vec14 = SVector<f64, 14>;

pub const FRAME_LABELS: [&str; 10] = ["w1", "w2", "v11", "v12", "v21", "v22", "u11", "u12", "u21", "u22"];

#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    pub vectors: [Vec14; 10],
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TangentError {
    #[error("singular value {value:e} too close to the rank cut {cut:e}")]
    RankUnstable { value: f64, cut: f64 },
    #[error("tolerance must be positive")]
    BadTolerance,
}

pub fn embed(a: &Mat2, b: &Mat2) -> Vec14 {
    let mut v = Vec14::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let k = 2 * (2 * i + j);
            v[k] = a[(i, j)].re;
            v[k + 1] = a[(i, j)].im;
        }
    }
    for (n, (i, j)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
        v[8 + 2 * n] = b[(i, j)].re;
        v[9 + 2 * n] = b[(i, j)].im;
    }
    v
}

fn unit_matrix(j: usize, k: usize) -> Mat2 {
    let mut m = Mat2::zeros();
    m[(j, k)] = c(1.0, 0.0);
    m
}

pub fn tangent_frame(p: &MatrixPair) -> TangentFrame {
    let a = p.a;
    let b = *p.b.matrix();
    let i = c(0.0, 1.0);
    let mut vectors = [Vec14::zeros(); 10];
    vectors[0] = embed(&a, &b);
    vectors[1] = embed(&(a * i), &(b * -i));
    for (n, (j, k)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let ejk = unit_matrix(j, k);
        let ekj = unit_matrix(k, j);
        vectors[2 + n] = embed(&(ekj * a + a * ejk), &(ekj * b + b * ejk));
        vectors[6 + n] = embed(&((-ekj * a + a * ejk) * i), &((ekj * b + b * ejk) * i));
    }
    TangentFrame { vectors }
}

/// Singular values of the 10 x 14 frame, descending.
pub fn frame_singular_values(p: &MatrixPair) -> Vec<f64> {
    let f = tangent_frame(p);
    let m = DMatrix::from_fn(10, 14, |r, col| f.vectors[r][col]);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Numerical rank of the frame: singular values above `tol * largest`.
pub fn orbit_dimension(p: &MatrixPair, tol: f64) -> Result<u8, TangentError> {
    if !(tol > 0.0) {
        return Err(TangentError::BadTolerance);
    }
    let s = frame_singular_values(p);
    let top = s[0];
    if top == 0.0 {
        return Ok(0);
    }
    let cut = tol * top;
    if let Some(&value) = s.iter().find(|&&x| x >= cut / 10.0 && x <= cut * 10.0) {
        return Err(TangentError::RankUnstable { value, cut });
    }
    Ok(s.iter().filter(|&&x| x > cut).count() as u8)
}
