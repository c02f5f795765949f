use std::ops::{Add, Div, Mul, Neg, Sub};

/// First-order dual number `re + eps·ε` with `ε² = 0`.
///
/// Seeding `eps = 1` on the independent variable propagates the exact
/// derivative through every arithmetic operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub const fn new(re: f64, eps: f64) -> Self {
        Dual { re, eps }
    }

    pub const fn constant(re: f64) -> Self {
        Dual { re, eps: 0.0 }
    }

    /// The independent variable at `x`.
    pub const fn variable(x: f64) -> Self {
        Dual { re: x, eps: 1.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }

    pub fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, e * self.eps)
    }

    /// Natural log; caller guarantees `re > 0`.
    pub fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }

    /// Square root; caller guarantees `re > 0`.
    pub fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual::new(r, self.eps / (2.0 * r))
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dual::constant(1.0);
        }
        let lower = self.re.powi(n - 1);
        Dual::new(lower * self.re, f64::from(n) * lower * self.eps)
    }

    /// Real power with a constant exponent; caller guarantees `re > 0`.
    pub fn powf(self, p: f64) -> Self {
        let v = self.re.powf(p);
        Dual::new(v, p * v / self.re * self.eps)
    }

    /// `self^rhs` with both sides varying; caller guarantees `re > 0`.
    pub fn pow(self, rhs: Dual) -> Self {
        (rhs * self.ln()).exp()
    }
}

impl From<f64> for Dual {
    fn from(v: f64) -> Self {
        Dual::constant(v)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(self.re * rhs.re, self.eps * rhs.re + self.re * rhs.eps)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let q = self.re / rhs.re;
        Dual::new(q, (self.eps - q * rhs.eps) / rhs.re)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(self, rhs: f64) -> Dual {
        Dual::new(self.re + rhs, self.eps)
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(self, rhs: f64) -> Dual {
        Dual::new(self.re - rhs, self.eps)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, rhs: f64) -> Dual {
        Dual::new(self.re * rhs, self.eps * rhs)
    }
}

impl Div<f64> for Dual {
    type Output = Dual;
    fn div(self, rhs: f64) -> Dual {
        Dual::new(self.re / rhs, self.eps / rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::variable(3.0);
        let sq = x * x;
        assert_eq!(sq, Dual::new(9.0, 6.0));

        // S/(0.1+S) at 0.1: derivative b/(b+S)^2 = 2.5
        let s = Dual::variable(0.1);
        let m = s / (s + 0.1);
        assert!((m.re - 0.5).abs() < 1e-15);
        assert!((m.eps - 2.5).abs() < 1e-12);
    }

    #[test]
    fn elementary_functions() {
        assert_eq!(Dual::variable(0.0).exp(), Dual::new(1.0, 1.0));
        let l = Dual::variable(2.0).ln();
        assert!((l.eps - 0.5).abs() < 1e-15);
        let r = Dual::variable(4.0).sqrt();
        assert_eq!(r, Dual::new(2.0, 0.25));
        let p = Dual::variable(-2.0).powi(3);
        assert_eq!(p, Dual::new(-8.0, 12.0));
        let f = Dual::variable(4.0).powf(0.5);
        assert!((f.eps - 0.25).abs() < 1e-15);
        assert_eq!(Dual::variable(5.0).powi(0), Dual::constant(1.0));
    }
}
