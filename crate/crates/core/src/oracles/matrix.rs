use crate::error::{Error, Result};
use crate::se2::GroupElement;

/// A 3×3 matrix, used as the homogeneous representation
/// `[[cos θ, −sin θ, x], [sin θ, cos θ, y], [0, 0, 1]]` of SE(2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_element(g: &GroupElement) -> Mat3 {
        let (s, c) = g.theta.sin_cos();
        Mat3([[c, -s, g.x], [s, c, g.y], [0.0, 0.0, 1.0]])
    }

    /// Read back `(x, y, θ)` with `θ = atan2(m₁₀, m₀₀)`.
    pub fn to_element(&self) -> GroupElement {
        let m = &self.0;
        GroupElement::new(m[0][2], m[1][2], m[1][0].atan2(m[0][0]))
    }

    pub fn mul(&self, other: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        Mat3(out)
    }

    pub fn add(&self, other: &Mat3) -> Mat3 {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Mat3) -> Mat3 {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        self.zip(self, |a, _| a * s)
    }

    fn zip(&self, other: &Mat3, f: impl Fn(f64, f64) -> f64) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = f(self.0[i][j], other.0[i][j]);
            }
        }
        Mat3(out)
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// General inverse by the adjugate.
    pub fn inverse(&self) -> Mat3 {
        let m = &self.0;
        let det = self.det();
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                *v = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
            }
        }
        Mat3(out)
    }

    /// `M · (x, y, 1)ᵀ`, dropping the homogeneous coordinate.
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2],
        ]
    }

    pub fn max_abs_diff(&self, other: &Mat3) -> f64 {
        let d = self.sub(other);
        d.0.iter().flatten().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    fn norm1(&self) -> f64 {
        (0..3)
            .map(|j| (0..3).map(|i| self.0[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Principal square root by the Denman–Beavers iteration.
    pub fn sqrt(&self) -> Mat3 {
        let (mut y, mut z) = (*self, Mat3::IDENTITY);
        for _ in 0..100 {
            let y_next = y.add(&z.inverse()).scale(0.5);
            let z_next = z.add(&y.inverse()).scale(0.5);
            let done = y_next.max_abs_diff(&y) < 1e-16 * (1.0 + y.norm1());
            y = y_next;
            z = z_next;
            if done {
                break;
            }
        }
        y
    }

    /// Principal logarithm by inverse scaling and squaring: repeated square
    /// roots until close to the identity, then the series of `log(I + X)`.
    ///
    /// Fails when the rotation block has angle ±π (no real principal log).
    pub fn log(&self) -> Result<Mat3> {
        let theta = self.0[1][0].atan2(self.0[0][0]);
        if (theta.abs() - std::f64::consts::PI).abs() < 1e-9 {
            return Err(Error::Domain { theta });
        }
        let mut a = *self;
        let mut squarings = 0;
        while a.sub(&Mat3::IDENTITY).norm1() > 1e-3 && squarings < 60 {
            a = a.sqrt();
            squarings += 1;
        }
        let x = a.sub(&Mat3::IDENTITY);
        let mut term = x;
        let mut sum = x;
        for k in 2..30 {
            term = term.mul(&x);
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            sum = sum.add(&term.scale(sign / k as f64));
        }
        Ok(sum.scale((1u64 << squarings) as f64))
    }
}
