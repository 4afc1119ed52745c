use std::fmt;
use std::sync::Arc;

use num::bigint::BigInt;
use num::{BigUint, Integer, One, ToPrimitive, Zero};

use crate::bracket::BracketedValue;
use crate::error::{Error, Result};
use crate::rational::ExactRational;

/// Working ring `Z/p^m`: the prime, the precision, and the cached modulus.
///
/// Contexts are immutable and cheap to clone (shared inner). Equality is by
/// `(p, m)`.
#[derive(Clone)]
pub struct PadicContext(Arc<CtxInner>);

struct CtxInner {
    p: u64,
    m: u32,
    modulus: BigUint,
    /// `p^m` as a machine word when it fits below 2^63 (fast paths).
    modulus_u64: Option<u64>,
}

impl PadicContext {
    /// Validates that `p` is prime (deterministic check) and `m >= 1`.
    pub fn new(p: u64, m: u32) -> Result<Self> {
        if !is_prime_u64(p) {
            return Err(Error::InvalidContext(format!("{p} is not prime")));
        }
        if m == 0 {
            return Err(Error::InvalidContext("precision must be at least 1".into()));
        }
        let modulus = BigUint::from(p).pow(m);
        let modulus_u64 = modulus.to_u64().filter(|&v| v < (1u64 << 63));
        Ok(PadicContext(Arc::new(CtxInner {
            p,
            m,
            modulus,
            modulus_u64,
        })))
    }

    pub fn prime(&self) -> u64 {
        self.0.p
    }

    pub fn precision(&self) -> u32 {
        self.0.m
    }

    pub fn modulus(&self) -> &BigUint {
        &self.0.modulus
    }

    /// `p^m` as a u64 when it is small enough that products of two residues
    /// fit in u128 arithmetic.
    pub fn modulus_u64(&self) -> Option<u64> {
        self.0.modulus_u64
    }

    /// Wraps an arbitrary natural number, reducing mod `p^m`.
    pub fn approx(&self, residue: BigUint) -> PadicApprox {
        PadicApprox {
            ctx: self.clone(),
            residue: residue % self.modulus(),
        }
    }

    pub fn approx_u64(&self, residue: u64) -> PadicApprox {
        self.approx(BigUint::from(residue))
    }

    /// Wraps a signed integer, mapping negatives to their residue classes.
    pub fn approx_i64(&self, value: i64) -> PadicApprox {
        let m = BigInt::from(self.modulus().clone());
        let r = BigInt::from(value).mod_floor(&m);
        self.approx(r.to_biguint().expect("mod_floor is nonnegative"))
    }

    pub fn zero(&self) -> PadicApprox {
        self.approx(BigUint::zero())
    }

    pub fn one(&self) -> PadicApprox {
        self.approx(BigUint::one())
    }
}

impl PartialEq for PadicContext {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.m == other.0.m
    }
}

impl Eq for PadicContext {}

impl fmt::Debug for PadicContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PadicContext(p={}, m={})", self.0.p, self.0.m)
    }
}

impl fmt::Display for PadicContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/{}^{}", self.0.p, self.0.m)
    }
}

/// Valuation of a residue at working precision `m`.
///
/// A nonzero residue pins the valuation exactly (`Finite(v)`, `0 <= v < m`);
/// a zero residue only reveals that the valuation is `>= m`. The derived
/// ordering puts every `Finite` below every `AtLeast`, which is the correct
/// order for values sharing one context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(u32),
    AtLeast(u32),
}

impl Valuation {
    pub fn finite_value(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::AtLeast(_) => None,
        }
    }

    /// The smallest valuation consistent with the observation.
    pub fn lower_bound(self) -> u32 {
        match self {
            Valuation::Finite(v) | Valuation::AtLeast(v) => v,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::AtLeast(m) => write!(f, ">={m}"),
        }
    }
}

/// A truncated p-adic integer: a residue `0 <= r < p^m` tagged with its ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicApprox {
    ctx: PadicContext,
    residue: BigUint,
}

impl PadicApprox {
    pub fn ctx(&self) -> &PadicContext {
        &self.ctx
    }

    pub fn residue(&self) -> &BigUint {
        &self.residue
    }

    pub fn is_zero(&self) -> bool {
        self.residue.is_zero()
    }

    /// Exact valuation of the residue, or `AtLeast(m)` for the zero residue.
    pub fn valuation(&self) -> Valuation {
        if self.residue.is_zero() {
            return Valuation::AtLeast(self.ctx.precision());
        }
        let p = BigUint::from(self.ctx.prime());
        let mut v = 0u32;
        let mut n = self.residue.clone();
        loop {
            let (q, r) = n.div_rem(&p);
            if r.is_zero() {
                v += 1;
                n = q;
            } else {
                return Valuation::Finite(v);
            }
        }
    }

    /// `|x|_p` as a bracket: a point `p^{-v}` when the valuation is exact,
    /// and the censoring interval `[0, p^{-m}]` for the zero residue.
    pub fn abs_p(&self) -> BracketedValue {
        let p = self.ctx.prime();
        match self.valuation() {
            Valuation::Finite(v) => BracketedValue::point(ExactRational::p_pow(p, -(v as i64)))
                .expect("p^-v is positive"),
            Valuation::AtLeast(m) => {
                BracketedValue::new(ExactRational::zero(), ExactRational::p_pow(p, -(m as i64)))
                    .expect("0 <= p^-m")
            }
        }
    }

    fn assert_same_ctx(&self, rhs: &Self, op: &str) {
        assert!(
            self.ctx == rhs.ctx,
            "cannot {op} values from {} and {}",
            self.ctx,
            rhs.ctx
        );
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.assert_same_ctx(rhs, "add");
        self.ctx.approx(&self.residue + &rhs.residue)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.assert_same_ctx(rhs, "subtract");
        let m = self.ctx.modulus();
        self.ctx.approx(m + &self.residue - &rhs.residue)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        self.assert_same_ctx(rhs, "multiply");
        self.ctx.approx(&self.residue * &rhs.residue)
    }

    pub fn neg(&self) -> Self {
        let m = self.ctx.modulus();
        self.ctx.approx(m - &self.residue)
    }

    /// Multiplicative inverse mod `p^m`; only units (valuation 0) qualify.
    pub fn unit_inverse(&self) -> Result<Self> {
        if self.valuation() != Valuation::Finite(0) {
            return Err(Error::NotInvertible(format!(
                "residue {} has positive valuation in {}",
                self.residue, self.ctx
            )));
        }
        let modulus = BigInt::from(self.ctx.modulus().clone());
        let a = BigInt::from(self.residue.clone());
        let g = a.extended_gcd(&modulus);
        debug_assert!(g.gcd.is_one());
        let inv = g.x.mod_floor(&modulus);
        Ok(self.ctx.approx(inv.to_biguint().expect("mod_floor is nonnegative")))
    }

    /// Reduces to a lower precision `m2 <= m` (same prime).
    pub fn reduce_precision(&self, m2: u32) -> Result<Self> {
        if m2 == 0 || m2 > self.ctx.precision() {
            return Err(Error::InvalidArgument(format!(
                "cannot reduce precision {} to {}",
                self.ctx.precision(),
                m2
            )));
        }
        let ctx = PadicContext::new(self.ctx.prime(), m2)?;
        Ok(ctx.approx(self.residue.clone()))
    }
}

impl fmt::Display for PadicApprox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {}^{})", self.residue, self.ctx.prime(), self.ctx.precision())
    }
}

/// Maps a p-integral rational into `Z/p^m`: the unique residue `r` with
/// `r * den ≡ num (mod p^m)`.
pub fn padic_of_rational(q: &ExactRational, ctx: &PadicContext) -> Result<PadicApprox> {
    let p = BigUint::from(ctx.prime());
    if q.denom().magnitude().is_multiple_of(&p) {
        return Err(Error::NonUnitDenominator(format!(
            "denominator of {q} is divisible by {}",
            ctx.prime()
        )));
    }
    let modulus = BigInt::from(ctx.modulus().clone());
    let num = q.numer().mod_floor(&modulus);
    let den = q.denom().mod_floor(&modulus);
    let g = den.extended_gcd(&modulus);
    debug_assert!(g.gcd.is_one());
    let inv = g.x.mod_floor(&modulus);
    let r = (num * inv).mod_floor(&modulus);
    Ok(ctx.approx(r.to_biguint().expect("mod_floor is nonnegative")))
}

/// Deterministic Miller-Rabin primality test, exact for all u64 inputs.
pub fn is_prime_u64(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &q in &WITNESSES {
        if n % q == 0 {
            return n == q;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod_u64(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub(crate) fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64, m: u32) -> PadicContext {
        PadicContext::new(p, m).unwrap()
    }

    #[test]
    fn context_validation() {
        assert!(PadicContext::new(4, 2).is_err());
        assert!(PadicContext::new(1, 2).is_err());
        assert!(PadicContext::new(0, 2).is_err());
        assert!(PadicContext::new(2, 0).is_err());
        let c = ctx(7, 3);
        assert_eq!(c.prime(), 7);
        assert_eq!(c.precision(), 3);
        assert_eq!(c.modulus(), &BigUint::from(343u32));
        assert_eq!(c.modulus_u64(), Some(343));
    }

    #[test]
    fn primality() {
        let primes: Vec<u64> = (0..100u64).filter(|&n| is_prime_u64(n)).collect();
        assert_eq!(
            primes,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97]
        );
        assert!(is_prime_u64(1_000_000_007));
        assert!(!is_prime_u64(1_000_000_007u64 * 3));
        // Largest u64 prime.
        assert!(is_prime_u64(18_446_744_073_709_551_557));
        // Strong pseudoprime to several small bases.
        assert!(!is_prime_u64(3_215_031_751));
    }

    #[test]
    fn valuations() {
        assert_eq!(ctx(2, 6).approx_u64(12).valuation(), Valuation::Finite(2));
        assert_eq!(ctx(5, 3).approx_u64(0).valuation(), Valuation::AtLeast(3));
        assert_eq!(ctx(3, 4).approx_u64(54).valuation(), Valuation::Finite(3));
        assert_eq!(ctx(2, 3).approx_u64(8).valuation(), Valuation::AtLeast(3));
    }

    #[test]
    fn valuation_ordering() {
        assert!(Valuation::Finite(0) < Valuation::Finite(2));
        assert!(Valuation::Finite(5) < Valuation::AtLeast(6));
        assert_eq!(Valuation::AtLeast(3).lower_bound(), 3);
        assert_eq!(Valuation::Finite(2).finite_value(), Some(2));
        assert_eq!(Valuation::AtLeast(3).finite_value(), None);
    }

    #[test]
    fn abs_p_brackets() {
        let r = |n: i64, d: i64| ExactRational::ratio(n, d).unwrap();
        let b = ctx(2, 6).approx_u64(12).abs_p();
        assert_eq!(b.lo(), &r(1, 4));
        assert_eq!(b.hi(), &r(1, 4));
        let b = ctx(2, 3).approx_u64(0).abs_p();
        assert_eq!(b.lo(), &r(0, 1));
        assert_eq!(b.hi(), &r(1, 8));
        let b = ctx(7, 2).approx_u64(1).abs_p();
        assert_eq!(b.lo(), &r(1, 1));
        assert_eq!(b.hi(), &r(1, 1));
    }

    #[test]
    fn arithmetic_wraps() {
        let c = ctx(3, 2);
        let a = c.approx_u64(7);
        let b = c.approx_u64(5);
        assert_eq!(a.add(&b).residue(), &BigUint::from(3u32));
        assert_eq!(a.sub(&b).residue(), &BigUint::from(2u32));
        assert_eq!(b.sub(&a).residue(), &BigUint::from(7u32));
        assert_eq!(a.mul(&b).residue(), &BigUint::from(8u32));
        assert_eq!(a.neg().residue(), &BigUint::from(2u32));
        assert_eq!(c.zero().neg().residue(), &BigUint::from(0u32));
        assert_eq!(c.approx_i64(-1).residue(), &BigUint::from(8u32));
    }

    #[test]
    fn unit_inverses() {
        let c = ctx(2, 4);
        let w = c.approx_u64(3);
        let inv = w.unit_inverse().unwrap();
        assert_eq!(inv.residue(), &BigUint::from(11u32));
        assert!(c.approx_u64(2).unit_inverse().is_err());
        assert!(c.zero().unit_inverse().is_err());
    }

    #[test]
    fn rational_embeddings() {
        let r = |n: i64, d: i64| ExactRational::ratio(n, d).unwrap();
        let x = padic_of_rational(&r(-1, 9), &ctx(5, 3)).unwrap();
        assert_eq!(x.residue(), &BigUint::from(111u32));
        let x = padic_of_rational(&r(1, 1), &ctx(7, 5)).unwrap();
        assert_eq!(x.residue(), &BigUint::from(1u32));
        let x = padic_of_rational(&r(1, 3), &ctx(2, 4)).unwrap();
        assert_eq!(x.residue(), &BigUint::from(11u32));
        assert!(padic_of_rational(&r(1, 3), &ctx(3, 2)).is_err());
    }

    #[test]
    fn rational_embedding_respects_precision_reduction() {
        let r = |n: i64, d: i64| ExactRational::ratio(n, d).unwrap();
        for (num, den) in [(-1i64, 9i64), (1, 3), (7, 5), (-22, 13)] {
            let q = r(num, den);
            let at5 = padic_of_rational(&q, &ctx(7, 5)).unwrap();
            for m2 in 1..=4 {
                let direct = padic_of_rational(&q, &ctx(7, m2)).unwrap();
                assert_eq!(at5.reduce_precision(m2).unwrap(), direct);
            }
        }
    }
}
