use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::math;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

macro_rules! square_matrix {
    ($name:ident, $n:expr) => {
        /// Dense row-major complex matrix.
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name(pub [[C64; $n]; $n]);

        impl $name {
            pub const DIM: usize = $n;

            pub const fn zeros() -> Self {
                $name([[ZERO; $n]; $n])
            }

            pub fn identity() -> Self {
                let mut m = Self::zeros();
                for k in 0..$n {
                    m.0[k][k] = ONE;
                }
                m
            }

            pub fn from_fn(mut f: impl FnMut(usize, usize) -> C64) -> Self {
                let mut m = Self::zeros();
                for r in 0..$n {
                    for c in 0..$n {
                        m.0[r][c] = f(r, c);
                    }
                }
                m
            }

            pub fn from_real(rows: [[f64; $n]; $n]) -> Self {
                Self::from_fn(|r, c| C64::new(rows[r][c], 0.0))
            }

            /// Conjugate transpose.
            pub fn adjoint(&self) -> Self {
                Self::from_fn(|r, c| self.0[c][r].conj())
            }

            pub fn transpose(&self) -> Self {
                Self::from_fn(|r, c| self.0[c][r])
            }

            pub fn conj(&self) -> Self {
                Self::from_fn(|r, c| self.0[r][c].conj())
            }

            pub fn scale(&self, s: C64) -> Self {
                Self::from_fn(|r, c| self.0[r][c] * s)
            }

            pub fn scale_re(&self, s: f64) -> Self {
                Self::from_fn(|r, c| self.0[r][c] * s)
            }

            pub fn trace(&self) -> C64 {
                (0..$n).map(|k| self.0[k][k]).sum()
            }

            pub fn frobenius_norm(&self) -> f64 {
                math::sqrt(self.0.iter().flatten().map(|z| z.norm_sqr()).sum())
            }

            /// Largest entrywise deviation from Hermiticity.
            pub fn hermiticity_error(&self) -> f64 {
                let mut worst: f64 = 0.0;
                for r in 0..$n {
                    for c in 0..$n {
                        worst = worst.max((self.0[r][c] - self.0[c][r].conj()).norm());
                    }
                }
                worst
            }

            /// Symmetrized copy `(m + m†)/2`.
            pub fn hermitian_part(&self) -> Self {
                Self::from_fn(|r, c| (self.0[r][c] + self.0[c][r].conj()) * 0.5)
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
            }

            pub fn mul_vec(&self, v: &[C64; $n]) -> [C64; $n] {
                let mut out = [ZERO; $n];
                for r in 0..$n {
                    out[r] = (0..$n).map(|c| self.0[r][c] * v[c]).sum();
                }
                out
            }

            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                self.0
                    .iter()
                    .flatten()
                    .zip(other.0.iter().flatten())
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            }
        }

        impl AsRef<$name> for $name {
            fn as_ref(&self) -> &$name {
                self
            }
        }

        impl Index<(usize, usize)> for $name {
            type Output = C64;
            fn index(&self, (r, c): (usize, usize)) -> &C64 {
                &self.0[r][c]
            }
        }

        impl IndexMut<(usize, usize)> for $name {
            fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
                &mut self.0[r][c]
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                $name::from_fn(|r, c| self.0[r][c] + rhs.0[r][c])
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                $name::from_fn(|r, c| self.0[r][c] - rhs.0[r][c])
            }
        }

        impl Mul for $name {
            type Output = $name;
            fn mul(self, rhs: $name) -> $name {
                $name::from_fn(|r, c| (0..$n).map(|k| self.0[r][k] * rhs.0[k][c]).sum())
            }
        }
    };
}

square_matrix!(ComplexMat2, 2);
square_matrix!(ComplexMat4, 4);

impl ComplexMat2 {
    pub fn new(a11: C64, a12: C64, a21: C64, a22: C64) -> Self {
        ComplexMat2([[a11, a12], [a21, a22]])
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Kronecker product `self ⊗ rhs`, indexed `(2a+b, 2c+d) = self[a][c]·rhs[b][d]`.
    pub fn kron(&self, rhs: &ComplexMat2) -> ComplexMat4 {
        ComplexMat4::from_fn(|r, c| self.0[r / 2][c / 2] * rhs.0[r % 2][c % 2])
    }
}

/// Row-major vectorization `(a11, a12, a21, a22)`.
pub fn vec(m: &ComplexMat2) -> [C64; 4] {
    [m.0[0][0], m.0[0][1], m.0[1][0], m.0[1][1]]
}

/// Inverse of [`vec`].
pub fn unvec(v: &[C64; 4]) -> ComplexMat2 {
    ComplexMat2([[v[0], v[1]], [v[2], v[3]]])
}

pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec_is_row_major() {
        let m = ComplexMat2::from_real([[1.0, 2.0], [3.0, 4.0]]);
        let v = vec(&m);
        let re: [f64; 4] = [v[0].re, v[1].re, v[2].re, v[3].re];
        assert_eq!(re, [1.0, 2.0, 3.0, 4.0]);
        assert_eq!(unvec(&v), m);
    }

    #[test]
    fn vec_identity() {
        let v = vec(&ComplexMat2::identity());
        assert_eq!(v, [ONE, ZERO, ZERO, ONE]);
    }

    #[test]
    fn kron_vec_identity() {
        // vec(A X B) = (A ⊗ Bᵀ) vec(X) under row-major stacking.
        let a = ComplexMat2::new(C64::new(1.0, 0.5), C64::new(0.0, -1.0), C64::new(2.0, 0.0), C64::new(0.3, 0.3));
        let x = ComplexMat2::new(C64::new(0.2, 0.0), C64::new(1.0, 1.0), C64::new(-0.5, 0.1), C64::new(0.0, 2.0));
        let b = ComplexMat2::new(C64::new(0.0, 1.0), C64::new(1.0, 0.0), C64::new(0.7, -0.2), C64::new(-1.0, 0.0));
        let lhs = vec(&(a * x * b));
        let rhs = a.kron(&b.transpose()).mul_vec(&vec(&x));
        for k in 0..4 {
            assert!((lhs[k] - rhs[k]).norm() < 1e-14);
        }
    }
}
