//! SL(3) group and sl(3) algebra primitives.
//!
//! Elements of SL(3) are 3x3 matrices with unit determinant; tangent vectors
//! are traceless 3x3 matrices. Coordinates on the algebra use the fixed basis
//! A1..A8 (off-diagonal elementary matrices followed by the two traceless
//! diagonal generators), so `wedge`/`vee` give a stable 8-vector contract for
//! serialization and the excitation Gram matrix.

use nalgebra::{Matrix3, SVector};

use crate::error::{Error, Result};

/// Determinant tolerance for membership in SL(3).
pub const DET_TOL: f64 = 1e-9;
/// Trace tolerance for membership in sl(3).
pub const TRACE_TOL: f64 = 1e-12;

/// Coordinates of an sl(3) element in the basis A1..A8.
pub type TangentCoords = SVector<f64, 8>;

/// A unit-determinant 3x3 matrix (group element, homography or group error).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SL3 {
    m: Matrix3<f64>,
}

/// A traceless 3x3 matrix (group velocity, correction term, ...).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sl3 {
    m: Matrix3<f64>,
}

impl SL3 {
    /// Validates `det(m) = 1` within [`DET_TOL`].
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let det = m.determinant();
        if (det - 1.0).abs() > DET_TOL {
            return Err(Error::NotUnitDeterminant { det });
        }
        Ok(SL3 { m })
    }

    pub fn identity() -> Self {
        SL3 {
            m: Matrix3::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix3<f64> {
        self.m
    }

    /// Group inverse. Renormalizes the determinant if floating point drift
    /// pushed it past [`DET_TOL`].
    pub fn inverse(&self) -> SL3 {
        let inv = self
            .m
            .try_inverse()
            .expect("SL(3) element is always invertible");
        SL3::renormalized(inv)
    }

    /// Transpose; det is preserved so the result stays in SL(3).
    pub fn transpose(&self) -> SL3 {
        SL3 { m: self.m.transpose() }
    }

    /// Group composition with determinant-drift control.
    pub fn compose(&self, rhs: &SL3) -> SL3 {
        SL3::renormalized(self.m * rhs.m)
    }

    /// Wraps `m`, rescaling by det^(-1/3) only when drift exceeds [`DET_TOL`].
    /// `m` must already be close to the group (det > 0).
    fn renormalized(m: Matrix3<f64>) -> SL3 {
        let det = m.determinant();
        debug_assert!(det > 0.0, "renormalized() expects a near-SL(3) matrix");
        if (det - 1.0).abs() > DET_TOL {
            SL3 {
                m: m * det.powf(-1.0 / 3.0),
            }
        } else {
            SL3 { m }
        }
    }
}

impl std::ops::Mul for &SL3 {
    type Output = SL3;
    fn mul(self, rhs: &SL3) -> SL3 {
        self.compose(rhs)
    }
}

impl Sl3 {
    /// Validates `tr(m) = 0` within [`TRACE_TOL`].
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let trace = m.trace();
        if trace.abs() > TRACE_TOL {
            return Err(Error::NotTraceless { trace });
        }
        Ok(Sl3 { m })
    }

    pub fn zero() -> Self {
        Sl3 { m: Matrix3::zeros() }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix3<f64> {
        self.m
    }

    pub fn scale(&self, s: f64) -> Sl3 {
        Sl3 { m: self.m * s }
    }

    pub fn norm(&self) -> f64 {
        frobenius_norm(&self.m)
    }
}

impl std::ops::Add for &Sl3 {
    type Output = Sl3;
    fn add(self, rhs: &Sl3) -> Sl3 {
        Sl3 { m: self.m + rhs.m }
    }
}

impl std::ops::Sub for &Sl3 {
    type Output = Sl3;
    fn sub(self, rhs: &Sl3) -> Sl3 {
        Sl3 { m: self.m - rhs.m }
    }
}

/// The i-th basis matrix of sl(3), i in 0..8.
pub fn basis(i: usize) -> Matrix3<f64> {
    let e = |r: usize, c: usize| {
        let mut m = Matrix3::zeros();
        m[(r, c)] = 1.0;
        m
    };
    match i {
        0 => e(0, 1),
        1 => e(1, 0),
        2 => e(1, 2),
        3 => e(2, 1),
        4 => e(2, 0),
        5 => e(0, 2),
        6 => e(0, 0) - Matrix3::identity() / 3.0,
        7 => e(1, 1) - Matrix3::identity() / 3.0,
        _ => panic!("sl(3) basis index out of range: {i}"),
    }
}

/// Linear isomorphism R^8 -> sl(3): v -> sum v_i A_i.
pub fn wedge(v: &TangentCoords) -> Sl3 {
    let m = Matrix3::new(
        2.0 * v[6] / 3.0 - v[7] / 3.0,
        v[0],
        v[5],
        v[1],
        2.0 * v[7] / 3.0 - v[6] / 3.0,
        v[2],
        v[4],
        v[3],
        -(v[6] + v[7]) / 3.0,
    );
    Sl3 { m }
}

/// Inverse of [`wedge`]; reads coordinates off the matrix entries.
pub fn vee(x: &Sl3) -> TangentCoords {
    let m = &x.m;
    TangentCoords::from_column_slice(&[
        m[(0, 1)],
        m[(1, 0)],
        m[(1, 2)],
        m[(2, 1)],
        m[(2, 0)],
        m[(0, 2)],
        2.0 * m[(0, 0)] + m[(1, 1)],
        m[(0, 0)] + 2.0 * m[(1, 1)],
    ])
}

/// Orthogonal projection of a 3x3 matrix onto sl(3): M - tr(M)/3 I.
pub fn project_sl3(m: &Matrix3<f64>) -> Sl3 {
    Sl3 {
        m: m - Matrix3::identity() * (m.trace() / 3.0),
    }
}

/// Matrix exponential sl(3) -> SL(3), scaling-and-squaring with a truncated
/// Taylor core. Exact (to roundoff) for nilpotent arguments.
pub fn exp_sl3(u: &Sl3) -> SL3 {
    let norm = frobenius_norm(&u.m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let a = u.m / f64::powi(2.0, squarings as i32);

    // Taylor to order 14; error ~ ||a||^15/15! with ||a|| <= 0.5.
    let mut term = Matrix3::identity();
    let mut sum = Matrix3::identity();
    for k in 1..=14 {
        term = term * a / (k as f64);
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    SL3::renormalized(sum)
}

/// Adjoint action Ad_H(U) = H U H^-1. Accepts any group element, in
/// particular the transpose of an estimate.
pub fn adjoint(h: &SL3, u: &Sl3) -> Sl3 {
    let m = h.m * u.m * h.inverse().m;
    // conjugation preserves the trace; strip roundoff residue
    project_sl3(&m)
}

/// Lie bracket [A, B] = AB - BA.
pub fn lie_bracket(a: &Sl3, b: &Sl3) -> Sl3 {
    Sl3 {
        m: a.m * b.m - b.m * a.m,
    }
}

/// Rescales a positive-determinant matrix onto SL(3) by det^(-1/3).
pub fn normalize_determinant(m: &Matrix3<f64>) -> Result<SL3> {
    let det = m.determinant();
    if det <= 0.0 || !det.is_finite() {
        return Err(Error::DegenerateHomography { det });
    }
    Ok(SL3 {
        m: m * det.powf(-1.0 / 3.0),
    })
}

/// Euclidean matrix inner product tr(A'B).
pub fn frobenius_inner(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a.transpose() * b).trace()
}

/// Frobenius norm sqrt(<A, A>).
pub fn frobenius_norm(a: &Matrix3<f64>) -> f64 {
    frobenius_inner(a, a).sqrt()
}
