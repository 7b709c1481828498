//! Fixed-size complex 2×2 algebra used throughout the crate.
//!
//! Pauli convention: `σ_z = diag(1, -1)`, coin basis `|→⟩ = (1, 0)`,
//! `|←⟩ = (0, 1)`.

use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};
#[allow(unused_imports)] // shadowed by std inherents when std is linked
use num_traits::Float;

use num_complex::Complex64;

pub type C64 = Complex64;

/// Real Bloch-space vector.
pub type Vec3 = [f64; 3];

/// Column vector in the coin space.
pub type Vec2 = [C64; 2];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn sub3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale3(s: f64, a: &Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

pub fn vec2_norm_sqr(v: &Vec2) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

/// `⟨u|v⟩`, antilinear in the first argument.
pub fn inner(u: &Vec2, v: &Vec2) -> C64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

/// Row-major complex 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const SIGMA_X: Mat2 = Mat2([[ZERO, ONE], [ONE, ZERO]]);
    pub const SIGMA_Y: Mat2 = Mat2([[ZERO, C64::new(0.0, -1.0)], [I, ZERO]]);
    pub const SIGMA_Z: Mat2 = Mat2([[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]]);

    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[C64::new(a, 0.0), C64::new(b, 0.0)], [C64::new(c, 0.0), C64::new(d, 0.0)]])
    }

    /// `½(a0·𝟙 + a·σ)`.
    pub fn from_bloch(a0: f64, a: &Vec3) -> Self {
        Mat2([
            [C64::new(0.5 * (a0 + a[2]), 0.0), C64::new(0.5 * a[0], -0.5 * a[1])],
            [C64::new(0.5 * a[0], 0.5 * a[1]), C64::new(0.5 * (a0 - a[2]), 0.0)],
        ])
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &Vec2, v: &Vec2) -> Self {
        Mat2([[u[0] * v[0].conj(), u[0] * v[1].conj()], [u[1] * v[0].conj(), u[1] * v[1].conj()]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]])
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Largest entrywise modulus of `U†U − 𝟙`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Mat2::IDENTITY)
    }

    /// Bloch parameters `(a0, a)` such that the Hermitian part of `self`
    /// equals `½(a0·𝟙 + a·σ)`.
    pub fn bloch_params(&self) -> (f64, Vec3) {
        let m = &self.0;
        let a0 = m[0][0].re + m[1][1].re;
        let off = 0.5 * (m[0][1] + m[1][0].conj());
        (a0, [2.0 * off.re, -2.0 * off.im, m[0][0].re - m[1][1].re])
    }

    /// Spectral decomposition of the Hermitian part of `self`.
    pub fn eigh(&self) -> HermitianEigen {
        let (a0, a) = self.bloch_params();
        let len = norm3(&a);
        let hi = 0.5 * (a0 + len);
        let lo = 0.5 * (a0 - len);
        if len == 0.0 {
            return HermitianEigen { values: [hi, lo], vectors: [[ONE, ZERO], [ZERO, ONE]] };
        }
        let n = scale3(1.0 / len, &a);
        HermitianEigen { values: [hi, lo], vectors: [bloch_ket(&n), bloch_ket(&scale3(-1.0, &n))] }
    }
}

/// Pure coin state pointing along the unit Bloch direction `n`.
pub fn bloch_ket(n: &Vec3) -> Vec2 {
    // The smaller component comes from ρ = 2·up·down to avoid cancellation
    // in 1 ± n_z near the poles.
    let rho = (n[0] * n[0] + n[1] * n[1]).sqrt();
    let (up, down) = if n[2] >= 0.0 {
        let up = (0.5 * (1.0 + n[2])).sqrt();
        (up, 0.5 * rho / up)
    } else {
        let down = (0.5 * (1.0 - n[2])).sqrt();
        (0.5 * rho / down, down)
    };
    let phase = if rho > 0.0 { C64::new(n[0] / rho, n[1] / rho) } else { ONE };
    [C64::new(up, 0.0), phase * down]
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Clone, Copy, Debug)]
pub struct HermitianEigen {
    pub values: [f64; 2],
    pub vectors: [Vec2; 2],
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, rhs: Mat2) {
        *self = *self + rhs;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        self + (-rhs)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale_real(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

impl Index<(usize, usize)> for Mat2 {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat2 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}
