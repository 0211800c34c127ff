//! Hermitian eigendecompositions: closed form for 2×2, cyclic Jacobi for 4×4.

use super::matrix::{ComplexMat2, ComplexMat4, C64, ONE, ZERO};
use crate::math;

/// Eigenpairs of a Hermitian matrix. `values` ascend; `vectors` holds the
/// eigenvectors as columns, so `m = V·diag(values)·V†`.
#[derive(Debug, Clone, Copy)]
pub struct Eigen<M, const N: usize> {
    pub values: [f64; N],
    pub vectors: M,
}

pub type Eigen2 = Eigen<ComplexMat2, 2>;
pub type Eigen4 = Eigen<ComplexMat4, 4>;

/// Unitary whose columns diagonalize the Hermitian block `[[a, b], [b*, d]]`,
/// first column for the smaller eigenvalue.
fn rotation_2x2(a: f64, b: C64, d: f64) -> ([f64; 2], [[C64; 2]; 2]) {
    let mean = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    let radius = math::hypot(half_gap, b.norm());
    let lo = mean - radius;
    let hi = mean + radius;
    if b.norm() == 0.0 {
        return if a <= d {
            ([a, d], [[ONE, ZERO], [ZERO, ONE]])
        } else {
            ([d, a], [[ZERO, ONE], [ONE, ZERO]])
        };
    }
    let theta = 0.5 * math::atan2(2.0 * b.norm(), a - d);
    let (s, c) = (math::sin(theta), math::cos(theta));
    let phase = b / b.norm();
    // (c, e^{-iφ}s) belongs to `hi`, (−e^{iφ}s, c) to `lo`.
    let v_hi = [C64::new(c, 0.0), phase.conj() * s];
    let v_lo = [-phase * s, C64::new(c, 0.0)];
    ([lo, hi], [[v_lo[0], v_hi[0]], [v_lo[1], v_hi[1]]])
}

pub fn eigh2(m: &ComplexMat2) -> Eigen2 {
    let h = m.hermitian_part();
    let (values, cols) = rotation_2x2(h[(0, 0)].re, h[(0, 1)], h[(1, 1)].re);
    Eigen { values, vectors: ComplexMat2(cols) }
}

pub const JACOBI_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 60;

fn off_diagonal_norm(a: &ComplexMat4) -> f64 {
    let mut s = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    math::sqrt(s)
}

pub fn eigh4(m: &ComplexMat4) -> Eigen4 {
    let mut a = m.hermitian_part();
    let mut v = ComplexMat4::identity();
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                if a[(p, q)].norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (_, w) = rotation_2x2(a[(p, p)].re, a[(p, q)], a[(q, q)].re);
                // a ← Gᵀ* a G with G the embedded 2×2 unitary `w`.
                for k in 0..4 {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * w[0][0] + akq * w[1][0];
                    a[(k, q)] = akp * w[0][1] + akq * w[1][1];
                }
                for k in 0..4 {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = w[0][0].conj() * apk + w[1][0].conj() * aqk;
                    a[(q, k)] = w[0][1].conj() * apk + w[1][1].conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..4 {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * w[0][0] + vkq * w[1][0];
                    v[(k, q)] = vkp * w[0][1] + vkq * w[1][1];
                }
            }
        }
    }
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.map(|k| a[(k, k)].re);
    let vectors = ComplexMat4::from_fn(|r, c| v[(r, order[c])]);
    Eigen { values, vectors }
}

macro_rules! reassemble {
    ($fn:ident, $mat:ident, $eig:ident, $n:expr) => {
        /// Rebuild `V·diag(f(λ))·V†`.
        pub fn $fn(e: &$eig, f: impl Fn(f64) -> f64) -> $mat {
            let mapped = e.values.map(f);
            $mat::from_fn(|r, c| {
                (0..$n)
                    .map(|k| e.vectors[(r, k)] * mapped[k] * e.vectors[(c, k)].conj())
                    .sum()
            })
        }
    };
}

reassemble!(spectral_map2, ComplexMat2, Eigen2, 2);
reassemble!(spectral_map4, ComplexMat4, Eigen4, 4);
