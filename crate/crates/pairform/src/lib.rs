//! Classification of pairs `(A, B)` of 2x2 complex matrices, `B` symmetric,
//! under `(c, P) . (A, B) = (c P* A P, P^T B P)`.

pub mod bounds;
pub mod closure;
pub mod congruence;
pub mod matcore;
pub mod pairnf;
pub mod surface;
pub mod tangent;
pub mod witness;
