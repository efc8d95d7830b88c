//! Second-order jets in (r, phi): value plus first and second partials.

use std::ops::{Add, Mul};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub r: f64,
    pub p: f64,
    pub rr: f64,
    pub rp: f64,
    pub pp: f64,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, ..Default::default() }
    }

    /// Function of r alone, from its value and two derivatives.
    pub fn radial(v: f64, d: f64, dd: f64) -> Self {
        Jet { v, r: d, rr: dd, ..Default::default() }
    }

    /// Function of phi alone.
    pub fn angular(v: f64, d: f64, dd: f64) -> Self {
        Jet { v, p: d, pp: dd, ..Default::default() }
    }

    pub fn scaled(self, c: f64) -> Self {
        Jet { v: c * self.v, r: c * self.r, p: c * self.p, rr: c * self.rr, rp: c * self.rp, pp: c * self.pp }
    }

    /// Jet of the rescaled component `lambda^-w * c(lambda r, phi)` at r.
    pub fn rescaled(self, lambda: f64, weight: i32) -> Self {
        let w = lambda.powi(-weight);
        Jet {
            v: self.v * w,
            r: self.r * w * lambda,
            p: self.p * w,
            rr: self.rr * w * lambda * lambda,
            rp: self.rp * w * lambda,
            pp: self.pp * w,
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            r: self.r + o.r,
            p: self.p + o.p,
            rr: self.rr + o.rr,
            rp: self.rp + o.rp,
            pp: self.pp + o.pp,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            r: self.r * o.v + self.v * o.r,
            p: self.p * o.v + self.v * o.p,
            rr: self.rr * o.v + 2.0 * self.r * o.r + self.v * o.rr,
            rp: self.rp * o.v + self.r * o.p + self.p * o.r + self.v * o.rp,
            pp: self.pp * o.v + 2.0 * self.p * o.p + self.v * o.pp,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_matches_closed_form() {
        // (r^2) * sin(phi) at (r, phi) = (1.5, 0.3)
        let (r, p) = (1.5_f64, 0.3_f64);
        let a = Jet::radial(r * r, 2.0 * r, 2.0);
        let b = Jet::angular(p.sin(), p.cos(), -p.sin());
        let c = a * b;
        assert!((c.v - r * r * p.sin()).abs() < 1e-15);
        assert!((c.r - 2.0 * r * p.sin()).abs() < 1e-15);
        assert!((c.rp - 2.0 * r * p.cos()).abs() < 1e-15);
        assert!((c.pp + r * r * p.sin()).abs() < 1e-15);
        assert!((c.rr - 2.0 * p.sin()).abs() < 1e-15);
    }
}
