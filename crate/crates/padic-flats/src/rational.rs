use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{BigUint, Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar: a reduced fraction with positive denominator.
///
/// Wraps `num::BigRational`, which maintains both invariants (gcd of
/// numerator and denominator is 1, denominator strictly positive) on every
/// operation. Zero is stored as 0/1.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(BigRational);

impl ExactRational {
    /// Builds `num/den`, reducing to lowest terms. Errors on `den = 0`.
    pub fn new(num: BigInt, den: BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidArgument("rational with zero denominator".into()));
        }
        Ok(ExactRational(BigRational::new(num, den)))
    }

    pub fn from_int(v: i64) -> Self {
        ExactRational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_bigint(v: BigInt) -> Self {
        ExactRational(BigRational::from_integer(v))
    }

    pub fn from_biguint(v: BigUint) -> Self {
        ExactRational(BigRational::from_integer(BigInt::from(v)))
    }

    /// Convenience constructor for small literal fractions.
    pub fn ratio(num: i64, den: i64) -> Result<Self> {
        Self::new(BigInt::from(num), BigInt::from(den))
    }

    pub fn zero() -> Self {
        ExactRational(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactRational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        ExactRational(self.0.abs())
    }

    /// `p^e` for a (possibly negative) exponent.
    pub fn p_pow(p: u64, e: i64) -> Self {
        let base = BigInt::from(p);
        if e >= 0 {
            ExactRational(BigRational::from_integer(base.pow(e as u32)))
        } else {
            ExactRational(BigRational::new(BigInt::one(), base.pow((-e) as u32)))
        }
    }

    /// Integer power; negative exponents reject zero.
    pub fn pow(&self, e: i32) -> Result<Self> {
        if self.is_zero() && e < 0 {
            return Err(Error::NotInvertible("0 raised to a negative power".into()));
        }
        Ok(ExactRational(num::traits::Pow::pow(&self.0, e)))
    }

    /// Division with an explicit error on a zero divisor.
    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::NotInvertible("division by zero rational".into()));
        }
        Ok(ExactRational(&self.0 / &rhs.0))
    }

    /// p-adic valuation; `None` for zero (valuation +infinity).
    pub fn valuation(&self, p: u64) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        let p_big = BigUint::from(p);
        let up = count_factors(self.0.numer().magnitude(), &p_big) as i64;
        let down = count_factors(self.0.denom().magnitude(), &p_big) as i64;
        Some(up - down)
    }

    /// p-adic absolute value as an exact rational: `p^{-v_p(x)}`, and 0 for 0.
    pub fn abs_p(&self, p: u64) -> Self {
        match self.valuation(p) {
            None => Self::zero(),
            Some(v) => Self::p_pow(p, -v),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Canonical `"num/den"` form (denominator always explicit).
    pub fn fraction_string(&self) -> String {
        format!("{}/{}", self.0.numer(), self.0.denom())
    }

    /// Lossy decimal rendering with 12 significant digits.
    pub fn decimal_string(&self) -> String {
        const SIG: u32 = 12;
        if self.is_zero() {
            return "0".into();
        }
        let neg = self.is_negative();
        let a = self.0.numer().magnitude().clone();
        let b = self.0.denom().magnitude().clone();
        let ten = BigUint::from(10u32);
        // Exponent e with 10^e <= a/b < 10^{e+1}: start from the digit-count
        // difference and correct by direct comparison.
        let mut e = a.to_string().len() as i64 - b.to_string().len() as i64;
        let cmp_pow = |e: i64| {
            let lhs = if e < 0 { &a * ten.pow((-e) as u32) } else { a.clone() };
            let rhs = if e > 0 { &b * ten.pow(e as u32) } else { b.clone() };
            lhs.cmp(&rhs)
        };
        while cmp_pow(e) == std::cmp::Ordering::Less {
            e -= 1;
        }
        while cmp_pow(e + 1) != std::cmp::Ordering::Less {
            e += 1;
        }
        // Half-away-from-zero rounding of a/b * 10^(SIG-1-e).
        let shift = SIG as i64 - 1 - e;
        let (num_sc, den_sc) = if shift >= 0 {
            (&a * ten.pow(shift as u32), b.clone())
        } else {
            (a.clone(), &b * ten.pow((-shift) as u32))
        };
        let (q, r) = num_sc.div_rem(&den_sc);
        let mut digits = q;
        if &r * 2u32 >= den_sc {
            digits += 1u32;
        }
        if digits >= ten.pow(SIG) {
            digits /= &ten;
            e += 1;
        }
        let ds = digits.to_string();
        debug_assert_eq!(ds.len(), SIG as usize);

        let mut s = String::new();
        if neg {
            s.push('-');
        }
        if (0..SIG as i64).contains(&e) {
            let split = e as usize + 1;
            s.push_str(&ds[..split]);
            let frac = ds[split..].trim_end_matches('0');
            if !frac.is_empty() {
                s.push('.');
                s.push_str(frac);
            }
        } else if (SIG as i64..=15).contains(&e) {
            s.push_str(&ds);
            for _ in 0..(e + 1 - SIG as i64) {
                s.push('0');
            }
        } else if (-5..0).contains(&e) {
            s.push_str("0.");
            for _ in 0..(-e - 1) {
                s.push('0');
            }
            s.push_str(ds.trim_end_matches('0'));
        } else {
            s.push_str(&ds[..1]);
            let frac = ds[1..].trim_end_matches('0');
            if !frac.is_empty() {
                s.push('.');
                s.push_str(frac);
            }
            s.push('e');
            s.push_str(&e.to_string());
        }
        s
    }
}

/// Multiplicity of the factor `p` in a nonzero natural number.
fn count_factors(x: &BigUint, p: &BigUint) -> u64 {
    debug_assert!(!x.is_zero());
    let mut n = x.clone();
    let mut c = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if r.is_zero() {
            n = q;
            c += 1;
        } else {
            return c;
        }
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.fraction_string())
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &ExactRational) -> ExactRational {
                ExactRational(&self.0 $op &rhs.0)
            }
        }
        impl $trait for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: ExactRational) -> ExactRational {
                ExactRational(self.0 $op rhs.0)
            }
        }
    };
}

forward_binop!(Add, add, +);
forward_binop!(Sub, sub, -);
forward_binop!(Mul, mul, *);

impl Neg for &ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        ExactRational(-&self.0)
    }
}

impl Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        ExactRational(-self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> ExactRational {
        ExactRational::ratio(n, d).unwrap()
    }

    #[test]
    fn reduces_and_normalizes_sign() {
        let x = r(6, -4);
        assert_eq!(x.fraction_string(), "-3/2");
        assert!(x.is_negative());
        assert_eq!(r(0, 5).fraction_string(), "0/1");
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(ExactRational::ratio(1, 0).is_err());
    }

    #[test]
    fn arithmetic() {
        let a = r(1, 2);
        let b = r(1, 3);
        assert_eq!(&a + &b, r(5, 6));
        assert_eq!(&a - &b, r(1, 6));
        assert_eq!(&a * &b, r(1, 6));
        assert_eq!(a.checked_div(&b).unwrap(), r(3, 2));
        assert!(a.checked_div(&ExactRational::zero()).is_err());
        assert_eq!(-&a, r(-1, 2));
    }

    #[test]
    fn p_powers() {
        assert_eq!(ExactRational::p_pow(2, 3), r(8, 1));
        assert_eq!(ExactRational::p_pow(3, -2), r(1, 9));
        assert_eq!(ExactRational::p_pow(5, 0), r(1, 1));
    }

    #[test]
    fn valuations() {
        assert_eq!(r(12, 1).valuation(2), Some(2));
        assert_eq!(r(-1, 9).valuation(3), Some(-2));
        assert_eq!(r(7, 2).valuation(2), Some(-1));
        assert_eq!(r(5, 3).valuation(7), Some(0));
        assert_eq!(ExactRational::zero().valuation(2), None);
        assert_eq!(r(4, 1).abs_p(2), r(1, 4));
        assert_eq!(ExactRational::zero().abs_p(5), ExactRational::zero());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(r(35, 31).decimal_string(), "1.12903225806");
        assert_eq!(r(2, 3).decimal_string(), "0.666666666667");
        assert_eq!(r(1, 8).decimal_string(), "0.125");
        assert_eq!(r(-1, 9).decimal_string(), "-0.111111111111");
        assert_eq!(r(1, 1).decimal_string(), "1");
        assert_eq!(r(416, 729).decimal_string(), "0.570644718793");
        assert_eq!(ExactRational::zero().decimal_string(), "0");
        assert_eq!(r(1, 100_000_000).decimal_string(), "1e-8");
        assert_eq!(r(123, 1).decimal_string(), "123");
    }

    #[test]
    fn powers() {
        assert_eq!(r(2, 3).pow(2).unwrap(), r(4, 9));
        assert_eq!(r(2, 3).pow(-1).unwrap(), r(3, 2));
        assert!(ExactRational::zero().pow(-1).is_err());
    }
}
