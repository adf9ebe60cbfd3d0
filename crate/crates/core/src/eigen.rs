//! Cyclic Jacobi eigendecomposition for symmetric 3x3 matrices.

use crate::geom::Vec3;
use crate::scalar::Real;

/// Symmetric 3x3 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym3<T>(pub [[T; 3]; 3]);

/// Eigenpairs sorted by descending eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen3<T> {
    pub values: [T; 3],
    pub vectors: [Vec3<T>; 3],
}

impl<T: Real> Sym3<T> {
    pub fn zero() -> Self {
        Sym3([[T::zero(); 3]; 3])
    }

    /// Accumulates the outer product `v vᵀ`.
    pub fn add_outer(&mut self, v: Vec3<T>) {
        let c = [v.x, v.y, v.z];
        for (i, row) in self.0.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = *e + c[i] * c[j];
            }
        }
    }

    pub fn trace(&self) -> T {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn eigen(&self) -> Eigen3<T> {
        let mut a = self.0;
        let mut v = [[T::zero(); 3]; 3];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = T::one();
        }

        let scale = a.iter().flatten().fold(T::zero(), |m, e| m.max(e.abs()));
        if scale > T::zero() {
            for _sweep in 0..64 {
                let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
                if off <= T::epsilon() * scale * T::lit(1e-3) {
                    break;
                }
                for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                    if a[p][q] == T::zero() {
                        continue;
                    }
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }

        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| {
            a[j][j]
                .partial_cmp(&a[i][i])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let col = |k: usize| Vec3::new(v[0][k], v[1][k], v[2][k]);
        Eigen3 {
            values: order.map(|k| a[k][k]),
            vectors: order.map(col),
        }
    }
}

/// One Jacobi rotation zeroing `a[p][q]`; accumulates the rotation into `v`.
fn rotate<T: Real>(a: &mut [[T; 3]; 3], v: &mut [[T; 3]; 3], p: usize, q: usize) {
    let two = T::lit(2.0);
    let theta = (a[q][q] - a[p][p]) / (two * a[p][q]);
    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    for k in 0..3 {
        let akp = a[k][p];
        let akq = a[k][q];
        a[k][p] = c * akp - s * akq;
        a[k][q] = s * akp + c * akq;
    }
    for k in 0..3 {
        let apk = a[p][k];
        let aqk = a[q][k];
        a[p][k] = c * apk - s * aqk;
        a[q][k] = s * apk + c * aqk;
    }
    for row in v.iter_mut() {
        let vp = row[p];
        let vq = row[q];
        row[p] = c * vp - s * vq;
        row[q] = s * vp + c * vq;
    }
}
