use num::bigint::BigInt;
use num::{Integer, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::padic::PadicContext;
use crate::rational::ExactRational;

/// A polynomial `f: Z_p^k -> Q_p` given by explicit terms. Evaluation at
/// integer points is exact, so normalized Riemann sums are exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialIntegrand {
    nvars: usize,
    terms: Vec<(ExactRational, Vec<u32>)>,
}

impl PolynomialIntegrand {
    pub fn new(nvars: usize, terms: Vec<(ExactRational, Vec<u32>)>) -> Result<Self> {
        if nvars == 0 {
            return Err(Error::InvalidArgument("integrand needs at least one variable".into()));
        }
        for (_, e) in &terms {
            if e.len() != nvars {
                return Err(Error::InvalidArgument(format!(
                    "exponent vector length {} does not match {} variables",
                    e.len(),
                    nvars
                )));
            }
        }
        Ok(PolynomialIntegrand { nvars, terms })
    }

    pub fn constant(nvars: usize, c: ExactRational) -> Self {
        PolynomialIntegrand {
            nvars: nvars.max(1),
            terms: vec![(c, vec![0; nvars.max(1)])],
        }
    }

    pub fn from_integer_terms(nvars: usize, terms: &[(i64, Vec<u32>)]) -> Result<Self> {
        PolynomialIntegrand::new(
            nvars,
            terms
                .iter()
                .map(|(c, e)| (ExactRational::from_int(*c), e.clone()))
                .collect(),
        )
    }

    /// The identity function in one variable.
    pub fn coordinate() -> Self {
        PolynomialIntegrand::from_integer_terms(1, &[(1, vec![1])]).expect("valid")
    }

    /// Determinant of the structured 4x4 matrix for a single cubic in
    /// 3-space, expanded in the six coefficient variables q0..q5:
    ///
    /// `q0^2 q5^2 + q2^2 q3^2 - 2 q0 q2 q3 q5 - q0 q1 q4 q5 + q0 q2 q4^2
    ///  + q1^2 q3 q5 - q1 q2 q3 q4`.
    pub fn cubic_det() -> Self {
        PolynomialIntegrand::from_integer_terms(
            6,
            &[
                (1, vec![2, 0, 0, 0, 0, 2]),
                (1, vec![0, 0, 2, 2, 0, 0]),
                (-2, vec![1, 0, 1, 1, 0, 1]),
                (-1, vec![1, 1, 0, 0, 1, 1]),
                (1, vec![1, 0, 1, 0, 2, 0]),
                (1, vec![0, 2, 0, 1, 0, 1]),
                (-1, vec![0, 1, 1, 1, 1, 0]),
            ],
        )
        .expect("valid")
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(ExactRational, Vec<u32>)] {
        &self.terms
    }

    /// Exact value at an integer point.
    pub fn evaluate(&self, point: &[i64]) -> Result<ExactRational> {
        if point.len() != self.nvars {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, integrand has {} variables",
                point.len(),
                self.nvars
            )));
        }
        let mut acc = ExactRational::zero();
        for (c, e) in &self.terms {
            let mut mono = BigInt::one();
            for (&x, &ex) in point.iter().zip(e) {
                mono *= BigInt::from(x).pow(ex);
            }
            acc = &acc + &(c * &ExactRational::from_bigint(mono));
        }
        Ok(acc)
    }
}

/// Normalized Riemann sum of an integrand at one level:
/// `p^{-kn} * sum f(a)` over all `0 <= a_i <= p^n - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct VolkenbornPartial {
    pub level: u32,
    pub normalized_sum: ExactRational,
}

/// Scaled-integer view of an integrand: coefficients multiplied through by
/// the common denominator so point evaluations are plain integers.
struct ClearedIntegrand {
    common_den: BigInt,
    terms: Vec<(BigInt, Vec<u32>)>,
}

fn clear_denominators(f: &PolynomialIntegrand) -> ClearedIntegrand {
    let mut common = BigInt::one();
    for (c, _) in f.terms() {
        common = common.lcm(c.denom());
    }
    let terms = f
        .terms()
        .iter()
        .map(|(c, e)| {
            let scaled = c * &ExactRational::from_bigint(common.clone());
            debug_assert!(scaled.denom().is_one());
            (scaled.numer().clone(), e.clone())
        })
        .collect();
    ClearedIntegrand { common_den: common, terms }
}

/// Upper bound on |sum of f over the whole box| for the cleared integrand.
fn cleared_sum_bound(cleared: &ClearedIntegrand, box_side: u64, points: u64) -> BigInt {
    let side = BigInt::from(box_side.saturating_sub(1));
    let mut per_point = BigInt::zero();
    for (c, e) in &cleared.terms {
        let deg: u32 = e.iter().sum();
        per_point += c.abs() * side.pow(deg);
    }
    per_point * BigInt::from(points)
}

fn decode_point(mut idx: u64, side: u64, out: &mut [u64]) {
    for slot in out.iter_mut() {
        *slot = idx % side;
        idx /= side;
    }
}

fn eval_cleared_i128(terms: &[(i128, Vec<u32>)], point: &[u64]) -> i128 {
    let mut acc = 0i128;
    for (c, e) in terms {
        let mut mono = 1i128;
        for (&x, &ex) in point.iter().zip(e) {
            for _ in 0..ex {
                mono *= x as i128;
            }
        }
        acc += c * mono;
    }
    acc
}

fn eval_cleared_big(terms: &[(BigInt, Vec<u32>)], point: &[u64]) -> BigInt {
    let mut acc = BigInt::zero();
    for (c, e) in terms {
        let mut mono = BigInt::one();
        for (&x, &ex) in point.iter().zip(e) {
            mono *= BigInt::from(x).pow(ex);
        }
        acc += c * mono;
    }
    acc
}

const POINT_CHUNK: u64 = 1 << 14;

/// Evaluates the level-`n` normalized Riemann sum of `f` over `(Z/p^n)^k` by
/// direct enumeration of all `p^{kn}` integer points. The result is exact;
/// enumeration is chunked and merged in fixed order, so it is deterministic
/// under any thread count.
pub fn volkenborn_partial(
    f: &PolynomialIntegrand,
    p: u64,
    n: u32,
    guard: u64,
) -> Result<VolkenbornPartial> {
    if p < 2 {
        return Err(Error::InvalidArgument("p must be at least 2".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    let k = f.nvars() as u64;
    let total = checked_pow(p, k * n as u64, guard)?;
    let side = p.pow(n);

    let cleared = clear_denominators(f);
    let bound = cleared_sum_bound(&cleared, side, total);
    let chunks: Vec<(u64, u64)> = (0..total)
        .step_by(POINT_CHUNK as usize)
        .map(|start| (start, (start + POINT_CHUNK).min(total)))
        .collect();

    let raw: BigInt = if bound < BigInt::from(i128::MAX / 2)
        && cleared.terms.iter().all(|(c, _)| c.abs() < BigInt::from(i128::MAX / 2))
    {
        let small_terms: Vec<(i128, Vec<u32>)> = cleared
            .terms
            .iter()
            .map(|(c, e)| (c.to_i128().expect("bounded coefficient"), e.clone()))
            .collect();
        let partials: Vec<i128> = chunks
            .par_iter()
            .map(|&(start, end)| {
                let mut point = vec![0u64; f.nvars()];
                let mut acc = 0i128;
                for idx in start..end {
                    decode_point(idx, side, &mut point);
                    acc += eval_cleared_i128(&small_terms, &point);
                }
                acc
            })
            .collect();
        partials.into_iter().map(BigInt::from).sum()
    } else {
        let partials: Vec<BigInt> = chunks
            .par_iter()
            .map(|&(start, end)| {
                let mut point = vec![0u64; f.nvars()];
                let mut acc = BigInt::zero();
                for idx in start..end {
                    decode_point(idx, side, &mut point);
                    acc += eval_cleared_big(&cleared.terms, &point);
                }
                acc
            })
            .collect();
        partials.into_iter().sum()
    };

    let den = cleared.common_den * BigInt::from(side).pow(f.nvars() as u32);
    let normalized = ExactRational::new(raw, den)?;
    Ok(VolkenbornPartial {
        level: n,
        normalized_sum: normalized,
    })
}

/// Closed form for the raw (unnormalized) level-`n` sum of the `cubic_det`
/// integrand: `p^{6n} (p^n - 1)^2 (5 p^{2n} + p^n - 4) / 36`.
pub fn cubic_det_raw_formula(p: u64, n: u32) -> ExactRational {
    let pn = ExactRational::p_pow(p, n as i64);
    let p2n = ExactRational::p_pow(p, 2 * n as i64);
    let p6n = ExactRational::p_pow(p, 6 * n as i64);
    let one = ExactRational::one();
    let diff = &pn - &one;
    let inner = &(&(&ExactRational::from_int(5) * &p2n) + &pn) - &ExactRational::from_int(4);
    let num = &(&p6n * &(&diff * &diff)) * &inner;
    num.checked_div(&ExactRational::from_int(36)).expect("nonzero divisor")
}

/// True iff every supplied partial sum is within `p^{-level}` of the target
/// in the p-adic metric. Valuations are computed exactly on rationals; the
/// target's denominator must be coprime to p.
pub fn padic_limit_check(
    partials: &[VolkenbornPartial],
    target: &ExactRational,
    ctx: &PadicContext,
) -> Result<bool> {
    let p = ctx.prime();
    if let Some(v) = target.valuation(p) {
        if v < 0 {
            return Err(Error::NonUnitDenominator(format!(
                "target {target} has p = {p} in its denominator"
            )));
        }
    }
    for part in partials {
        let diff = &part.normalized_sum - target;
        match diff.valuation(p) {
            None => continue, // exact hit
            Some(v) if v >= part.level as i64 => continue,
            Some(_) => return Ok(false),
        }
    }
    Ok(true)
}

fn checked_pow(base: u64, exp: u64, guard: u64) -> Result<u64> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc *= base as u128;
        if acc > guard as u128 {
            return Err(Error::TooLarge(format!(
                "{base}^{exp} points exceed the enumeration guard {guard}"
            )));
        }
    }
    Ok(acc as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::padic_of_rational;

    const GUARD: u64 = 100_000_000;

    fn ratio(n: i64, d: i64) -> ExactRational {
        ExactRational::new(BigInt::from(n), BigInt::from(d)).unwrap()
    }

    #[test]
    fn coordinate_partial_sum() {
        let f = PolynomialIntegrand::coordinate();
        let part = volkenborn_partial(&f, 2, 3, GUARD).unwrap();
        assert_eq!(part.normalized_sum, ratio(7, 2));
        // Distance from the full-integral value -1/2 is |4|_2 = 1/4.
        let diff = &part.normalized_sum - &ratio(-1, 2);
        assert_eq!(diff.valuation(2), Some(2));
    }

    #[test]
    fn constants_are_fixed_points() {
        let c = ratio(-1, 9);
        let f = PolynomialIntegrand::constant(3, c.clone());
        for n in 1..=3 {
            let part = volkenborn_partial(&f, 5, n, GUARD).unwrap();
            assert_eq!(part.normalized_sum, c);
        }
    }

    #[test]
    fn cubic_det_raw_sums() {
        let f = PolynomialIntegrand::cubic_det();
        let cases: [(u64, u32, i64, i64); 5] = [
            (2, 1, 1, 2),       // raw 32 / 2^6
            (2, 2, 20, 1),      // raw 81920 / 2^12
            (2, 3, 441, 1),     // raw 115605504 / 2^18
            (3, 1, 44, 9),      // raw 3564 / 3^6
            (3, 2, 6560, 9),    // raw 387361440 / 3^12
        ];
        for (p, n, num, den) in cases {
            let part = volkenborn_partial(&f, p, n, GUARD).unwrap();
            assert_eq!(part.normalized_sum, ratio(num, den), "(p={p}, n={n})");
            let raw = &part.normalized_sum * &ExactRational::p_pow(p, 6 * n as i64);
            assert_eq!(raw, cubic_det_raw_formula(p, n), "(p={p}, n={n}) raw");
        }
    }

    #[test]
    fn cubic_det_matches_template_determinant() {
        use crate::jacobian::{build_template, DegreeProfile};
        use crate::sampling::SeededStream;
        let ctx = PadicContext::new(3, 3).unwrap();
        let profile = DegreeProfile::new(3, 1, vec![3]).unwrap();
        let template = build_template(&profile).unwrap();
        let f = PolynomialIntegrand::cubic_det();
        let mut stream = SeededStream::new(314);
        for _ in 0..100 {
            let draws: Vec<u64> = (0..6).map(|_| stream.draw_residue_u64(3, 3)).collect();
            let tagged: Vec<_> = draws.iter().map(|&v| ctx.approx_u64(v)).collect();
            let det = template.instantiate(&tagged).unwrap().det_residue().unwrap();
            let point: Vec<i64> = draws.iter().map(|&v| v as i64).collect();
            let exact = f.evaluate(&point).unwrap();
            let reduced = padic_of_rational(&exact, &ctx).unwrap();
            assert_eq!(reduced.residue(), det.residue());
        }
    }

    #[test]
    fn rational_coefficients_and_wide_path() {
        // (1/2) x^2 over Z/9: (0+1+...+64)/9 halved = 34/3.
        let f = PolynomialIntegrand::new(1, vec![(ratio(1, 2), vec![2])]).unwrap();
        let part = volkenborn_partial(&f, 3, 2, GUARD).unwrap();
        assert_eq!(part.normalized_sum, ratio(34, 3));

        // A coefficient far beyond the word-size path.
        let huge = ExactRational::from_bigint(BigInt::from(2).pow(130));
        let f = PolynomialIntegrand::new(1, vec![(huge.clone(), vec![1])]).unwrap();
        let part = volkenborn_partial(&f, 2, 2, GUARD).unwrap();
        assert_eq!(part.normalized_sum, &huge * &ratio(3, 2));
    }

    #[test]
    fn limit_check_examples() {
        let f = PolynomialIntegrand::cubic_det();
        let target = ratio(-1, 9);

        // Literal p^{-n} rate fails at small levels for p = 2 (the true rate
        // carries a constant: see cleared_rate_holds).
        let ctx = PadicContext::new(2, 4).unwrap();
        let partials: Vec<_> = (1..=2)
            .map(|n| volkenborn_partial(&f, 2, n, GUARD).unwrap())
            .collect();
        assert_eq!(padic_limit_check(&partials, &target, &ctx).unwrap(), false);

        // At p = 3 the target -1/9 itself has p in its denominator, which
        // the precondition rejects.
        let ctx3 = PadicContext::new(3, 4).unwrap();
        let partials3: Vec<_> = (1..=2)
            .map(|n| volkenborn_partial(&f, 3, n, GUARD).unwrap())
            .collect();
        assert!(matches!(
            padic_limit_check(&partials3, &target, &ctx3),
            Err(Error::NonUnitDenominator(_))
        ));

        // A constant integrand hits its own limit at every level.
        let cf = PolynomialIntegrand::constant(2, target.clone());
        let ctx = PadicContext::new(7, 2).unwrap();
        let partials: Vec<_> = (1..=2)
            .map(|n| volkenborn_partial(&cf, 7, n, GUARD).unwrap())
            .collect();
        assert!(padic_limit_check(&partials, &target, &ctx).unwrap());

        // f = x does not converge to 0.
        let fx = PolynomialIntegrand::coordinate();
        let ctx = PadicContext::new(2, 4).unwrap();
        let partials = vec![volkenborn_partial(&fx, 2, 3, GUARD).unwrap()];
        assert_eq!(
            padic_limit_check(&partials, &ExactRational::zero(), &ctx).unwrap(),
            false
        );

        // Target with p in the denominator is rejected.
        let ctx = PadicContext::new(3, 2).unwrap();
        assert!(matches!(
            padic_limit_check(&[], &ratio(1, 3), &ctx),
            Err(Error::NonUnitDenominator(_))
        ));
    }

    #[test]
    fn cleared_rate_holds() {
        // 36 * (partial_n + 1/9) has valuation >= n: the sharp convergence
        // statement for the cubic-det integrand.
        let f = PolynomialIntegrand::cubic_det();
        let thirty_six = ExactRational::from_int(36);
        let ninth = ratio(1, 9);
        for (p, max_n) in [(2u64, 3u32), (3, 2)] {
            for n in 1..=max_n {
                let part = volkenborn_partial(&f, p, n, GUARD).unwrap();
                let cleared = &thirty_six * &(&part.normalized_sum + &ninth);
                let v = cleared.valuation(p).expect("nonzero");
                assert!(v >= n as i64, "(p={p}, n={n}): valuation {v}");
                // Equivalent congruence through the truncated ring:
                // 36 * partial = -4 mod p^n.
                let ctx = PadicContext::new(p, n).unwrap();
                let lhs = padic_of_rational(&(&thirty_six * &part.normalized_sum), &ctx).unwrap();
                let rhs = padic_of_rational(&ExactRational::from_int(-4), &ctx).unwrap();
                assert_eq!(lhs.residue(), rhs.residue());
            }
        }
    }

    #[test]
    fn literal_rate_at_an_integral_level() {
        // p = 5, level 1: the partial sum is the integer 56 and the literal
        // p^{-n} bound does hold there.
        let f = PolynomialIntegrand::cubic_det();
        let part = volkenborn_partial(&f, 5, 1, GUARD).unwrap();
        assert_eq!(part.normalized_sum, ExactRational::from_int(56));
        let ctx = PadicContext::new(5, 1).unwrap();
        assert!(padic_limit_check(&[part.clone()], &ratio(-1, 9), &ctx).unwrap());
        let lhs = padic_of_rational(&part.normalized_sum, &ctx).unwrap();
        let rhs = padic_of_rational(&ratio(-1, 9), &ctx).unwrap();
        assert_eq!(lhs.residue(), rhs.residue());
    }

    #[test]
    fn guard_and_validation() {
        let f = PolynomialIntegrand::cubic_det();
        assert!(matches!(
            volkenborn_partial(&f, 2, 5, GUARD),
            Err(Error::TooLarge(_))
        ));
        assert!(matches!(
            volkenborn_partial(&f, 3, 3, GUARD),
            Err(Error::TooLarge(_))
        ));
        assert!(PolynomialIntegrand::new(2, vec![(ratio(1, 1), vec![1])]).is_err());
        assert!(volkenborn_partial(&f, 2, 0, GUARD).is_err());
    }
}
