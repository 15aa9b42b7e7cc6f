//! Just enough 3x3 symmetric linear algebra for the Gram-matrix solves.

use crate::bloch::BlochVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Sym3 {
    pub m: [[f64; 3]; 3],
}

impl Sym3 {
    pub fn zero() -> Self {
        Self { m: [[0.0; 3]; 3] }
    }

    /// Adds `w * u u^T`.
    pub fn add_outer(&mut self, u: BlochVector, w: f64) {
        let v = u.to_array();
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] += w * v[i] * v[j];
            }
        }
    }

    pub fn shifted(&self, lambda: f64) -> Self {
        let mut out = *self;
        for i in 0..3 {
            out.m[i][i] += lambda;
        }
        out
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Cholesky solve; `None` if the matrix is not numerically positive definite.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_spd(&self, b: BlochVector) -> Option<BlochVector> {
        let a = &self.m;
        let mut l = [[0.0f64; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let mut s = a[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if s <= 0.0 {
                        return None;
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        let b = b.to_array();
        let mut y = [0.0; 3];
        for i in 0..3 {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i][k] * y[k];
            }
            y[i] = s / l[i][i];
        }
        let mut x = [0.0; 3];
        for i in (0..3).rev() {
            let mut s = y[i];
            for k in i + 1..3 {
                s -= l[k][i] * x[k];
            }
            x[i] = s / l[i][i];
        }
        Some(BlochVector::from_array(x))
    }

    pub fn mul(&self, v: BlochVector) -> BlochVector {
        let v = v.to_array();
        let mut out = [0.0; 3];
        for (i, row) in self.m.iter().enumerate() {
            out[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
        }
        BlochVector::from_array(out)
    }
}
