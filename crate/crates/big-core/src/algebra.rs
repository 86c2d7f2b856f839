//! Tiny fixed-size algebra for the 2-D solver, plus the 3-D skew/rotation
//! pieces. All 2-D cross-product reductions live here so sign conventions are
//! tested in exactly one place.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct V2 {
    pub x: f64,
    pub y: f64,
}

impl V2 {
    pub const ZERO: V2 = V2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> V2 {
        V2 { x, y }
    }

    pub fn dot(self, o: V2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_inf(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }

    /// Component by index (0 = x, 1 = y); used by index-sum formulas.
    pub fn get(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => panic!("V2 index {i}"),
        }
    }
}

impl Add for V2 {
    type Output = V2;
    fn add(self, o: V2) -> V2 {
        V2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for V2 {
    fn add_assign(&mut self, o: V2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for V2 {
    type Output = V2;
    fn sub(self, o: V2) -> V2 {
        V2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for V2 {
    type Output = V2;
    fn mul(self, s: f64) -> V2 {
        V2::new(self.x * s, self.y * s)
    }
}

impl Neg for V2 {
    type Output = V2;
    fn neg(self) -> V2 {
        V2::new(-self.x, -self.y)
    }
}

/// 2-D scalar cross product a × b = a₁b₂ − a₂b₁.
pub fn cross2(a: V2, b: V2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// 2-D cross of a scalar angular rate with a vector: ω × v = ω·(−v₂, v₁).
pub fn omega_cross(omega: f64, v: V2) -> V2 {
    V2::new(-omega * v.y, omega * v.x)
}

/// Row-major 2×2 matrix; `m[i][j]` is row i, column j.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct M2(pub [[f64; 2]; 2]);

impl M2 {
    pub const ZERO: M2 = M2([[0.0; 2]; 2]);
    pub const I: M2 = M2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn transpose(self) -> M2 {
        M2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    pub fn trace(self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn inverse(self) -> Option<M2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(M2([
            [self.0[1][1] / d, -self.0[0][1] / d],
            [-self.0[1][0] / d, self.0[0][0] / d],
        ]))
    }

    pub fn sym(self) -> M2 {
        M2([
            [self.0[0][0], 0.5 * (self.0[0][1] + self.0[1][0])],
            [0.5 * (self.0[0][1] + self.0[1][0]), self.0[1][1]],
        ])
    }

    /// Frobenius inner product with itself.
    pub fn frob2(self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum()
    }

    pub fn norm_inf(self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Add for M2 {
    type Output = M2;
    fn add(self, o: M2) -> M2 {
        let mut r = M2::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                r.0[i][j] = self.0[i][j] + o.0[i][j];
            }
        }
        r
    }
}

impl Sub for M2 {
    type Output = M2;
    fn sub(self, o: M2) -> M2 {
        let mut r = M2::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                r.0[i][j] = self.0[i][j] - o.0[i][j];
            }
        }
        r
    }
}

impl Mul<f64> for M2 {
    type Output = M2;
    fn mul(self, s: f64) -> M2 {
        let mut r = self;
        for row in r.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        r
    }
}

impl Mul<V2> for M2 {
    type Output = V2;
    fn mul(self, v: V2) -> V2 {
        V2::new(
            self.0[0][0] * v.x + self.0[0][1] * v.y,
            self.0[1][0] * v.x + self.0[1][1] * v.y,
        )
    }
}

impl Mul<M2> for M2 {
    type Output = M2;
    fn mul(self, o: M2) -> M2 {
        let mut r = M2::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    r.0[i][j] += self.0[i][k] * o.0[k][j];
                }
            }
        }
        r
    }
}

/// 2-D rotation stored as its angle; always exactly orthogonal.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Rot2 {
    pub angle: f64,
}

impl Rot2 {
    pub const IDENTITY: Rot2 = Rot2 { angle: 0.0 };

    pub fn new(angle: f64) -> Rot2 {
        Rot2 { angle }
    }

    pub fn matrix(self) -> M2 {
        let (s, c) = self.angle.sin_cos();
        M2([[c, -s], [s, c]])
    }

    pub fn apply(self, v: V2) -> V2 {
        let (s, c) = self.angle.sin_cos();
        V2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    /// Qᵀ v (rotation by the opposite angle).
    pub fn apply_t(self, v: V2) -> V2 {
        let (s, c) = self.angle.sin_cos();
        V2::new(c * v.x + s * v.y, -s * v.x + c * v.y)
    }
}

/// Skew matrix of a 2-D angular rate: [[0, −ω], [ω, 0]].
pub fn skew2(omega: f64) -> M2 {
    M2([[0.0, -omega], [omega, 0.0]])
}

// --- 3-D pieces (dimension-generic formulas; runtime solve is 2-D) ---

pub type V3 = [f64; 3];
pub type M3 = [[f64; 3]; 3];

pub fn cross3(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Skew matrix 𝔸(ω) with 𝔸(ω)v = ω × v.
pub fn skew3(w: V3) -> M3 {
    [
        [0.0, -w[2], w[1]],
        [w[2], 0.0, -w[0]],
        [-w[1], w[0], 0.0],
    ]
}

pub fn mat3_mul(a: M3, b: M3) -> M3 {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                r[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    r
}

pub fn mat3_vec(a: M3, v: V3) -> V3 {
    let mut r = [0.0; 3];
    for i in 0..3 {
        for k in 0..3 {
            r[i] += a[i][k] * v[k];
        }
    }
    r
}

/// exp(𝔸(w)·t): Rodrigues' rotation about axis w.
pub fn rot3_exp(w: V3, t: f64) -> M3 {
    let th = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt() * t;
    if th == 0.0 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let k = skew3([w[0] / n, w[1] / n, w[2] / n]);
    let k2 = mat3_mul(k, k);
    let (s, c) = th.sin_cos();
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 } else { 0.0 };
            r[i][j] = id + s * k[i][j] + (1.0 - c) * k2[i][j];
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cross_sign_conventions() {
        // e1 × e2 = +1; ω × e1 = ω e2.
        assert_eq!(cross2(V2::new(1.0, 0.0), V2::new(0.0, 1.0)), 1.0);
        assert_eq!(omega_cross(2.0, V2::new(1.0, 0.0)), V2::new(0.0, 2.0));
        // skew2 agrees with omega_cross.
        let v = V2::new(0.3, -0.7);
        assert_eq!(skew2(1.3) * v, omega_cross(1.3, v));
    }

    #[test]
    fn skew3_matches_cross3() {
        let w = [0.3, -1.1, 0.7];
        let v = [2.0, 0.5, -0.4];
        let av = mat3_vec(skew3(w), v);
        let cv = cross3(w, v);
        for i in 0..3 {
            assert_abs_diff_eq!(av[i], cv[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn rot2_transpose_inverts() {
        let q = Rot2::new(0.83);
        let v = V2::new(1.2, -0.4);
        let w = q.apply_t(q.apply(v));
        assert_abs_diff_eq!(w.x, v.x, epsilon = 1e-15);
        assert_abs_diff_eq!(w.y, v.y, epsilon = 1e-15);
        // matrix() is orthogonal with det 1
        let m = q.matrix();
        let mtm = m.transpose() * m;
        assert!((mtm - M2::I).norm_inf() < 1e-15);
        assert_abs_diff_eq!(m.det(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn m2_inverse() {
        let m = M2([[2.0, 1.0], [0.5, 3.0]]);
        let mi = m.inverse().unwrap();
        assert!((m * mi - M2::I).norm_inf() < 1e-15);
    }
}
