//! Small fixed-size linear algebra: 3-vectors, 3x3 matrices, rotations.
//!
//! The whole library works with body-frame 3-vectors (`gamma`, `Omega`, `L`,
//! ...) and 3x3 attitude matrices, so everything here is hand-rolled and
//! allocation-free.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::error::So3Error;

/// A 3-vector with `f64` components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0).then(|| self / n)
    }

    /// Component of `self` orthogonal to the (unit) direction `n`.
    pub fn reject_from_unit(self, n: Vec3) -> Vec3 {
        self - n * self.dot(n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Scalar triple product `(self, b, c)`.
    pub fn triple(self, b: Vec3, c: Vec3) -> f64 {
        self.dot(b.cross(c))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A 3x3 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn zero() -> Mat3 {
        Mat3([[0.0; 3]; 3])
    }

    /// Diagonal matrix from the given entries.
    pub fn diag(d: [f64; 3]) -> Mat3 {
        let mut m = Mat3::zero();
        for i in 0..3 {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn transpose(self) -> Mat3 {
        let mut t = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                t.0[i][j] = self.0[j][i];
            }
        }
        t
    }

    pub fn det(self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate; `None` when the determinant vanishes.
    pub fn inverse(self) -> Option<Mat3> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        let mut adj = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                let (c, e) = ((j + 1) % 3, (j + 2) % 3);
                // cofactor transposed
                adj.0[j][i] = m[a][c] * m[b][e] - m[a][e] * m[b][c];
            }
        }
        Some(adj * (1.0 / d))
    }

    pub fn trace(self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn col(self, j: usize) -> Vec3 {
        Vec3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Mat3 {
        Mat3([[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]])
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(self, other: Mat3) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut r = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] = self.0[i][j] + o.0[i][j];
            }
        }
        r
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        let mut r = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] = self.0[i][j] - o.0[i][j];
            }
        }
        r
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        let mut r = self;
        for row in r.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        r
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.0[0][0] * v.x + self.0[0][1] * v.y + self.0[0][2] * v.z,
            self.0[1][0] * v.x + self.0[1][1] * v.y + self.0[1][2] * v.z,
            self.0[2][0] * v.x + self.0[2][1] * v.y + self.0[2][2] * v.z,
        )
    }
}

impl Mul<Mat3> for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut r = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        r
    }
}

/// Skew-symmetric matrix of `v`: `hat(v) * w = v x w` for every `w`.
pub fn hat(v: Vec3) -> Mat3 {
    Mat3([[0.0, -v.z, v.y], [v.z, 0.0, -v.x], [-v.y, v.x, 0.0]])
}

/// Inverse of [`hat`] on skew-symmetric matrices.
pub fn vee(m: Mat3) -> Vec3 {
    Vec3::new(m.0[2][1], m.0[0][2], m.0[1][0])
}

/// A rotation matrix (`R^T R = I`, `det R = +1` within [`crate::tol::ROTATION_TOL`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3(Mat3);

impl Rot3 {
    pub const IDENTITY: Rot3 = Rot3(Mat3::IDENTITY);

    /// Wraps a matrix that is already a rotation; errors when the
    /// orthogonality defect or determinant says otherwise.
    pub fn try_new(m: Mat3) -> Result<Rot3, So3Error> {
        let defect = (m.transpose() * m).max_abs_diff(Mat3::IDENTITY);
        if defect > crate::tol::ROTATION_TOL || (m.det() - 1.0).abs() > crate::tol::ROTATION_TOL {
            return Err(So3Error::NotARotation { defect });
        }
        Ok(Rot3(m))
    }

    pub fn matrix(self) -> Mat3 {
        self.0
    }

    pub fn apply(self, v: Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn inverse_apply(self, v: Vec3) -> Vec3 {
        self.0.transpose() * v
    }

    pub fn inverse(self) -> Rot3 {
        Rot3(self.0.transpose())
    }

    /// Rotation by `angle` about the (not necessarily unit) `axis`.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Rot3 {
        match axis.normalized() {
            None => Rot3::IDENTITY,
            Some(n) => {
                let k = hat(n);
                let m = Mat3::IDENTITY + k * angle.sin() + (k * k) * (1.0 - angle.cos());
                Rot3(m)
            }
        }
    }

    /// Exponential of `hat(w)`: rotation by `|w|` about `w`.
    pub fn exp(w: Vec3) -> Rot3 {
        Rot3::from_axis_angle(w, w.norm())
    }

    /// Principal rotation angle in `[0, pi]`.
    pub fn angle(self) -> f64 {
        let c = ((self.0.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }

    /// Orthogonality defect `max |R^T R - I|`.
    pub fn orthogonality_defect(self) -> f64 {
        (self.0.transpose() * self.0).max_abs_diff(Mat3::IDENTITY)
    }
}

impl Mul<Rot3> for Rot3 {
    type Output = Rot3;
    fn mul(self, o: Rot3) -> Rot3 {
        Rot3(self.0 * o.0)
    }
}

/// Orthogonal polar factor of `m`.
///
/// Newton iteration `M <- (M + M^-T) / 2`, quadratically convergent to the
/// polar factor for `det M > 0`; idempotent on exact rotations. Inputs that
/// are singular or closer to a reflection are rejected.
pub fn project_rotation(m: Mat3) -> Result<Rot3, So3Error> {
    if !m.is_finite() {
        return Err(So3Error::NonFinite);
    }
    let det = m.det();
    if det <= 0.0 {
        return Err(So3Error::ReflectionOrSingular { det });
    }
    let mut x = m;
    for _ in 0..100 {
        let inv_t = match x.inverse() {
            Some(inv) => inv.transpose(),
            None => return Err(So3Error::ReflectionOrSingular { det }),
        };
        let next = (x + inv_t) * 0.5;
        let step = next.max_abs_diff(x);
        x = next;
        if step < 1e-15 {
            break;
        }
    }
    Rot3::try_new(x).map_err(|_| So3Error::ReflectionOrSingular { det })
}
