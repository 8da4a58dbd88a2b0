//! Two-qubit computational basis conventions.
//!
//! Basis index of `|ij>` is `2 i + j`, qubit 1 being the most significant.
//! `|0>` is the `+1` eigenvector of `sigma_z`.

use nalgebra::Matrix4;

use crate::C64;

pub type Mat4 = Matrix4<C64>;

/// `sigma_z` eigenvalue of a single-qubit level.
#[inline]
pub fn sz(level: usize) -> f64 {
    if level == 0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub fn index(i: usize, j: usize) -> usize {
    2 * i + j
}

/// Qubit levels `(i, j)` of a basis index.
#[inline]
pub fn levels(k: usize) -> (usize, usize) {
    (k >> 1, k & 1)
}

pub const LABELS: [&str; 4] = ["00", "01", "10", "11"];

pub fn projector(k: usize) -> Mat4 {
    let mut m = Mat4::zeros();
    m[(k, k)] = C64::new(1.0, 0.0);
    m
}

pub fn diag(d: [C64; 4]) -> Mat4 {
    let mut m = Mat4::zeros();
    for k in 0..4 {
        m[(k, k)] = d[k];
    }
    m
}

pub fn sigma_z(qubit: usize) -> Mat4 {
    let mut d = [C64::new(0.0, 0.0); 4];
    for (k, dk) in d.iter_mut().enumerate() {
        let (i, j) = levels(k);
        *dk = C64::new(if qubit == 0 { sz(i) } else { sz(j) }, 0.0);
    }
    diag(d)
}

pub fn sigma_x(qubit: usize) -> Mat4 {
    let mut m = Mat4::zeros();
    for k in 0..4 {
        let flipped = if qubit == 0 { k ^ 2 } else { k ^ 1 };
        m[(flipped, k)] = C64::new(1.0, 0.0);
    }
    m
}

/// Lowering operator `|0><1|` of one qubit.
pub fn sigma_minus(qubit: usize) -> Mat4 {
    let mut m = Mat4::zeros();
    let bit = if qubit == 0 { 2 } else { 1 };
    for k in 0..4 {
        if k & bit != 0 {
            m[(k ^ bit, k)] = C64::new(1.0, 0.0);
        }
    }
    m
}

pub fn pure(psi: [C64; 4]) -> Mat4 {
    let mut m = Mat4::zeros();
    for r in 0..4 {
        for c in 0..4 {
            m[(r, c)] = psi[r] * psi[c].conj();
        }
    }
    m
}

/// Product state `|+>|+>`.
pub fn plus_plus() -> Mat4 {
    let v = C64::new(0.5, 0.0);
    pure([v; 4])
}

pub fn bell_plus() -> Mat4 {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    pure([z, h, h, z])
}

pub fn bell_minus() -> Mat4 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    pure([z, C64::new(h, 0.0), C64::new(-h, 0.0), z])
}

pub fn hermitian_part(m: &Mat4) -> Mat4 {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn max_abs(m: &Mat4) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}
