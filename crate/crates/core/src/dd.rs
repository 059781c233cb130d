//! Double-double arithmetic for the alternating sums in the Bernstein-to-Legendre
//! change of basis, where plain f64 loses all significance past basis size ~20.
//!
//! A value is represented as an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
//! Only the handful of operations the transform needs are provided.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

// Exact product via FMA: a*b = p + fma(a, b, -p).
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = two_sum(s, e);
        Dd { hi, lo }
    }

    #[cfg(test)]
    pub fn add_f64(self, x: f64) -> Dd {
        self.add(Dd::from(x))
    }

    #[cfg(test)]
    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, x: f64) -> Dd {
        let (p, e) = two_prod(self.hi, x);
        let e = e + self.lo * x;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }

    // Division refined with one Newton step; good to ~30 significant digits.
    #[inline]
    pub fn div_f64(self, x: f64) -> Dd {
        let q1 = self.hi / x;
        let (p, e) = two_prod(q1, x);
        let r = (self.hi - p) - e + self.lo;
        let q2 = r / x;
        let (hi, lo) = two_sum(q1, q2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_recovers_cancelled_bits() {
        // 1 + 1e-20 - 1 vanishes in f64 but survives in dd.
        let s = Dd::from(1.0).add_f64(1e-20).add_f64(-1.0);
        assert_eq!(s.to_f64(), 1e-20);
    }

    #[test]
    fn product_is_exact_for_representables() {
        let a = Dd::from(1.0 + 2f64.powi(-30));
        let b = a.mul(a);
        let expect = 1.0 + 2f64.powi(-29) + 2f64.powi(-60);
        assert!((b.to_f64() - expect).abs() < 1e-25);
    }

    #[test]
    fn division_round_trips() {
        let x = Dd::from(std::f64::consts::PI);
        let y = x.div_f64(7.0).mul_f64(7.0);
        assert!((y.to_f64() - std::f64::consts::PI).abs() < 1e-30);
        assert!((y.add(x.mul_f64(-1.0))).to_f64().abs() < 1e-30);
    }
}
