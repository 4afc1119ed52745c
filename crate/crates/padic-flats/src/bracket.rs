use std::fmt;

use crate::error::{Error, Result};
use crate::rational::ExactRational;

/// Certified enclosure `[lo, hi]` of a nonnegative quantity.
///
/// Truncated arithmetic censors values smaller than the working precision;
/// every expectation in this crate is therefore an interval, with the two
/// ends treating the censored mass as 0 and as the precision cap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BracketedValue {
    lo: ExactRational,
    hi: ExactRational,
}

impl BracketedValue {
    pub fn new(lo: ExactRational, hi: ExactRational) -> Result<Self> {
        if lo.is_negative() {
            return Err(Error::InvalidArgument(format!(
                "bracket lower end {lo} is negative"
            )));
        }
        if hi < lo {
            return Err(Error::InvalidArgument(format!(
                "bracket ends out of order: lo = {lo}, hi = {hi}"
            )));
        }
        Ok(BracketedValue { lo, hi })
    }

    /// Degenerate bracket `[x, x]`.
    pub fn point(x: ExactRational) -> Result<Self> {
        Self::new(x.clone(), x)
    }

    pub fn lo(&self) -> &ExactRational {
        &self.lo
    }

    pub fn hi(&self) -> &ExactRational {
        &self.hi
    }

    pub fn width(&self) -> ExactRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> ExactRational {
        (&self.lo + &self.hi)
            .checked_div(&ExactRational::from_int(2))
            .expect("division by two")
    }

    pub fn contains(&self, x: &ExactRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// Is this bracket entirely inside `outer`?
    pub fn nested_in(&self, outer: &BracketedValue) -> bool {
        outer.lo <= self.lo && self.hi <= outer.hi
    }

    pub fn add(&self, rhs: &BracketedValue) -> BracketedValue {
        BracketedValue {
            lo: &self.lo + &rhs.lo,
            hi: &self.hi + &rhs.hi,
        }
    }

    /// Scales both ends by a nonnegative rational.
    pub fn scale(&self, factor: &ExactRational) -> Result<BracketedValue> {
        if factor.is_negative() {
            return Err(Error::InvalidArgument(format!(
                "bracket scale factor {factor} is negative"
            )));
        }
        Ok(BracketedValue {
            lo: &self.lo * factor,
            hi: &self.hi * factor,
        })
    }
}

impl fmt::Display for BracketedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Monte Carlo estimate: mean bracket plus spread diagnostics.
///
/// The bracket ends are the sample means of the per-sample bracket ends; the
/// standard error is computed from the sample variance of the bracket
/// midpoints.
#[derive(Clone, Debug)]
pub struct McEstimate {
    pub mean_bracket: BracketedValue,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn new(mean_bracket: BracketedValue, std_error: f64, samples: u64, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidArgument("Monte Carlo estimate with zero samples".into()));
        }
        if !std_error.is_finite() || std_error < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "standard error {std_error} is not a nonnegative finite number"
            )));
        }
        Ok(McEstimate {
            mean_bracket,
            std_error,
            samples,
            seed,
        })
    }
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> ExactRational {
        ExactRational::ratio(n.max(0), d.max(1)).unwrap()
    }

    proptest! {
        #[test]
        fn nesting_is_preserved_by_add_and_scale(
            lo in 0i64..1000, w in 0i64..500, pad in 0i64..500,
            lo2 in 0i64..1000, w2 in 0i64..500, pad2 in 0i64..500,
            d in 1i64..64, f_num in 0i64..100, f_den in 1i64..16,
        ) {
            let inner = BracketedValue::new(rat(lo, d), rat(lo + w, d)).unwrap();
            let outer = BracketedValue::new(rat(lo - pad, d), rat(lo + w + pad, d)).unwrap();
            let inner2 = BracketedValue::new(rat(lo2, d), rat(lo2 + w2, d)).unwrap();
            let outer2 = BracketedValue::new(rat(lo2 - pad2, d), rat(lo2 + w2 + pad2, d)).unwrap();
            prop_assert!(inner.nested_in(&outer));
            prop_assert!(inner.add(&inner2).nested_in(&outer.add(&outer2)));
            let factor = rat(f_num, f_den);
            prop_assert!(inner.scale(&factor).unwrap().nested_in(&outer.scale(&factor).unwrap()));
        }

        #[test]
        fn bracket_contains_midpoint_and_endpoints(
            lo in 0i64..1000, w in 0i64..500, d in 1i64..64,
        ) {
            let b = BracketedValue::new(rat(lo, d), rat(lo + w, d)).unwrap();
            prop_assert!(b.contains(&b.midpoint()));
            prop_assert!(b.contains(b.lo()));
            prop_assert!(b.contains(b.hi()));
            prop_assert!(!b.width().is_negative());
            prop_assert!(b.nested_in(&b));
        }

        #[test]
        fn reversed_endpoints_rejected(lo in 0i64..1000, w in 1i64..500, d in 1i64..64) {
            prop_assert!(BracketedValue::new(rat(lo + w, d), rat(lo, d)).is_err());
        }
    }
}
