//! One-tangent forward-mode dual numbers.
//!
//! Used wherever a first derivative must be exact rather than a finite
//! difference: the inner derivatives of the pulled-back momentum 1-form in
//! the closedness check, the chart Jacobian in the conformal vector-field
//! check, and the closed-form Hamiltonian partials' cross-validation.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// `re + eps * du` with `eps^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub du: f64,
}

impl Dual {
    pub const fn new(re: f64, du: f64) -> Dual {
        Dual { re, du }
    }

    pub const fn constant(re: f64) -> Dual {
        Dual { re, du: 0.0 }
    }

    /// The seeded variable: value `re`, unit derivative.
    pub const fn variable(re: f64) -> Dual {
        Dual { re, du: 1.0 }
    }

    pub fn sin(self) -> Dual {
        Dual::new(self.re.sin(), self.du * self.re.cos())
    }

    pub fn cos(self) -> Dual {
        Dual::new(self.re.cos(), -self.du * self.re.sin())
    }

    pub fn sqrt(self) -> Dual {
        let r = self.re.sqrt();
        Dual::new(r, self.du / (2.0 * r))
    }

    /// `self^c` for a constant real exponent.
    pub fn powf(self, c: f64) -> Dual {
        let p = self.re.powf(c);
        Dual::new(p, c * self.re.powf(c - 1.0) * self.du)
    }

    pub fn recip(self) -> Dual {
        Dual::new(1.0 / self.re, -self.du / (self.re * self.re))
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.du + o.du)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.du - o.du)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.du + self.du * o.re)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual::new(self.re / o.re, (self.du * o.re - self.re * o.du) / (o.re * o.re))
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.du)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, s: f64) -> Dual {
        Dual::new(self.re * s, self.du * s)
    }
}

/// A 3-vector of duals; just enough algebra for the chart computations.
#[derive(Debug, Clone, Copy)]
pub struct DVec3(pub [Dual; 3]);

impl DVec3 {
    pub fn constant(v: crate::so3::Vec3) -> DVec3 {
        DVec3([Dual::constant(v.x), Dual::constant(v.y), Dual::constant(v.z)])
    }

    /// Seeds value `v` with tangent `dv` (directional derivative input).
    pub fn seeded(v: crate::so3::Vec3, dv: crate::so3::Vec3) -> DVec3 {
        DVec3([
            Dual::new(v.x, dv.x),
            Dual::new(v.y, dv.y),
            Dual::new(v.z, dv.z),
        ])
    }

    pub fn dot(self, o: DVec3) -> Dual {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(self, o: DVec3) -> DVec3 {
        let (a, b) = (self.0, o.0);
        DVec3([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    pub fn scale(self, s: Dual) -> DVec3 {
        DVec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn plus(self, o: DVec3) -> DVec3 {
        DVec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    /// Componentwise product with a constant diagonal matrix.
    pub fn diag_mul(self, d: [f64; 3]) -> DVec3 {
        DVec3([self.0[0] * d[0], self.0[1] * d[1], self.0[2] * d[2]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_composite() {
        // f(x) = sin(x^2) / sqrt(x) at x = 1.3
        let x = Dual::variable(1.3);
        let f = (x * x).sin() / x.sqrt();
        let h = 1e-6;
        let g = |x: f64| (x * x).sin() / x.sqrt();
        let fd = (g(1.3 + h) - g(1.3 - h)) / (2.0 * h);
        assert!((f.du - fd).abs() < 1e-9);
    }

    #[test]
    fn powf_constant_exponent() {
        let x = Dual::variable(2.0);
        let f = x.powf(-1.5);
        assert!((f.re - 2.0f64.powf(-1.5)).abs() < 1e-15);
        assert!((f.du - (-1.5) * 2.0f64.powf(-2.5)).abs() < 1e-15);
    }
}
