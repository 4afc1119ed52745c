use num::bigint::BigInt;
use num::ToPrimitive;
use rayon::prelude::*;

use crate::bracket::{BracketedValue, McEstimate};
use crate::error::{Error, Result};
use crate::jacobian::{DegreeProfile, JacobianTemplate, build_template};
use crate::linalg::{det_mod_u64, grassmannian_volume, VolumeTable};
use crate::padic::PadicContext;
use crate::rational::ExactRational;
use crate::sampling::{CoefficientAssignment, SeededStream};

/// Default ceiling on enumeration size (number of tuples visited).
pub const DEFAULT_GUARD: u64 = 100_000_000;

/// Default working precision for Monte Carlo runs: per-sample bracket width
/// p^{-20} is negligible against statistical error.
pub const MC_DEFAULT_PRECISION: u32 = 20;

/// How the determinant expectation is to be computed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MethodSpec {
    Exact { precision: u32 },
    Mc { precision: u32, samples: u64, seed: u64 },
}

/// Determinant expectation produced by one of the two engines.
#[derive(Clone, Debug)]
pub enum DetExpectation {
    Exact(BracketedValue),
    Mc(McEstimate),
}

impl DetExpectation {
    pub fn bracket(&self) -> &BracketedValue {
        match self {
            DetExpectation::Exact(b) => b,
            DetExpectation::Mc(e) => &e.mean_bracket,
        }
    }

    pub fn std_error(&self) -> f64 {
        match self {
            DetExpectation::Exact(_) => 0.0,
            DetExpectation::Mc(e) => e.std_error,
        }
    }
}

/// Expected number of flats for one profile: the measure of the space of
/// flats times the expectation of |det| of the structured Jacobian.
#[derive(Clone, Debug)]
pub struct FlatCountResult {
    pub profile: DegreeProfile,
    pub p: u64,
    pub precision: u32,
    pub grassmannian_factor: ExactRational,
    pub det_expectation: DetExpectation,
    pub expected_count: BracketedValue,
    pub expected_std_error: f64,
}

/// Valuation histogram of determinants: `counts[v]` tuples with valuation
/// exactly v (v < m), `censored` tuples whose determinant vanished mod p^m.
struct ValHistogram {
    counts: Vec<u64>,
    censored: u64,
    total: u64,
}

impl ValHistogram {
    fn new(m: u32) -> Self {
        ValHistogram {
            counts: vec![0; m as usize],
            censored: 0,
            total: 0,
        }
    }

    fn record(&mut self, det_residue: u64, p: u64) {
        self.total += 1;
        if det_residue == 0 {
            self.censored += 1;
            return;
        }
        let mut v = 0usize;
        let mut x = det_residue;
        while x % p == 0 {
            x /= p;
            v += 1;
        }
        self.counts[v] += 1;
    }

    fn merge(&mut self, other: &ValHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.censored += other.censored;
        self.total += other.total;
    }

    /// Bracket for the mean of |det|: the lower end treats censored mass as
    /// zero, the upper end as p^{-m}.
    fn mean_bracket(&self, p: u64, m: u32) -> Result<BracketedValue> {
        let n = ExactRational::from_bigint(BigInt::from(self.total));
        let mut lo = ExactRational::zero();
        for (v, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mass = ExactRational::from_bigint(BigInt::from(c));
            lo = &lo + &(&mass * &ExactRational::p_pow(p, -(v as i64)));
        }
        lo = lo.checked_div(&n).expect("total > 0");
        let censored_mass = ExactRational::from_bigint(BigInt::from(self.censored));
        let hi = &lo
            + &(&censored_mass * &ExactRational::p_pow(p, -(m as i64)))
                .checked_div(&n)
                .expect("total > 0");
        BracketedValue::new(lo, hi)
    }

    /// Standard error of the midpoint estimator (0 when total < 2).
    fn std_error(&self, p: u64, m: u32) -> f64 {
        if self.total < 2 {
            return 0.0;
        }
        let mut sum = 0.0f64;
        let mut sumsq = 0.0f64;
        for (v, &c) in self.counts.iter().enumerate() {
            let x = (p as f64).powi(-(v as i32));
            sum += c as f64 * x;
            sumsq += c as f64 * x * x;
        }
        let xc = 0.5 * (p as f64).powi(-(m as i32));
        sum += self.censored as f64 * xc;
        sumsq += self.censored as f64 * xc * xc;
        let n = self.total as f64;
        let mean = sum / n;
        let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

fn checked_tuple_count(radix: u64, len: u64, guard: u64) -> Result<u64> {
    let mut acc: u128 = 1;
    for _ in 0..len {
        acc *= radix as u128;
        if acc > guard as u128 {
            return Err(Error::TooLarge(format!(
                "enumeration of {radix}^{len} tuples exceeds the guard {guard}"
            )));
        }
    }
    Ok(acc as u64)
}

fn decode_tuple(mut idx: u64, radix: u64, out: &mut [u64]) {
    for slot in out.iter_mut() {
        *slot = idx % radix;
        idx /= radix;
    }
}

const ENUM_CHUNK: u64 = 1 << 14;

/// Exact expectation of |det| over ALL assignments of residues mod p^m to
/// the template variables. The result is a bracket: residues whose
/// determinant vanishes at this precision contribute anywhere in
/// [0, p^{-m}].
pub fn exact_det_expectation(
    t: &JacobianTemplate,
    ctx: &PadicContext,
    guard: u64,
) -> Result<BracketedValue> {
    let p = ctx.prime();
    let m = ctx.precision();
    let modulus = ctx
        .modulus_u64()
        .ok_or_else(|| Error::TooLarge("precision too high for exact enumeration".into()))?;
    let vars = t.var_count() as u64;
    let total = checked_tuple_count(modulus, vars, guard)?;
    let size = t.size();

    let chunks: Vec<(u64, u64)> = (0..total)
        .step_by(ENUM_CHUNK as usize)
        .map(|start| (start, (start + ENUM_CHUNK).min(total)))
        .collect();
    let hist = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut local = ValHistogram::new(m);
            let mut draws = vec![0u64; vars as usize];
            let mut cells = vec![0u64; size * size];
            for idx in start..end {
                decode_tuple(idx, modulus, &mut draws);
                t.instantiate_u64_into(&draws, &mut cells);
                let det = det_mod_u64(&cells, size, modulus);
                local.record(det, p);
            }
            local
        })
        .reduce(
            || ValHistogram::new(m),
            |mut a, b| {
                a.merge(&b);
                a
            },
        );
    debug_assert_eq!(hist.total, total);
    hist.mean_bracket(p, m)
}

const MC_CHUNK: u64 = 4096;

/// Monte Carlo estimate of E|det| over i.i.d. uniform instantiations.
///
/// Samples are drawn in fixed chunks of independent substreams of `stream`,
/// so the estimate depends only on (seed, samples) — not on thread count.
pub fn mc_det_expectation(
    t: &JacobianTemplate,
    ctx: &PadicContext,
    stream: &SeededStream,
    samples: u64,
) -> Result<McEstimate> {
    if samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 samples, got {samples}"
        )));
    }
    let p = ctx.prime();
    let m = ctx.precision();
    if ctx.modulus_u64().is_none() {
        return Err(Error::TooLarge(
            "Monte Carlo path needs p^m to fit a machine word".into(),
        ));
    }
    let vars = t.var_count();
    let size = t.size();

    let nchunks = samples.div_ceil(MC_CHUNK);
    let hist = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let mut local = ValHistogram::new(m);
            let mut chunk_stream = stream.substream(c);
            let mut draws = vec![0u64; vars];
            let mut cells = vec![0u64; size * size];
            let count = (samples - c * MC_CHUNK).min(MC_CHUNK);
            for _ in 0..count {
                for d in draws.iter_mut() {
                    *d = chunk_stream.draw_residue_u64(p, m);
                }
                t.instantiate_u64_into(&draws, &mut cells);
                let det = det_mod_u64(&cells, size, ctx.modulus_u64().expect("checked"));
                local.record(det, p);
            }
            local
        })
        .reduce(
            || ValHistogram::new(m),
            |mut a, b| {
                a.merge(&b);
                a
            },
        );
    debug_assert_eq!(hist.total, samples);
    McEstimate::new(
        hist.mean_bracket(p, m)?,
        hist.std_error(p, m),
        samples,
        stream.seed(),
    )
}

/// Computes the expected number of k-flats on a random complete intersection
/// with the given degree profile: the normalized measure of the flat family
/// times E|det| of the structured Jacobian.
pub fn expected_flats(
    profile: &DegreeProfile,
    p: u64,
    method: &MethodSpec,
    guard: u64,
) -> Result<FlatCountResult> {
    if !profile.check_codim() {
        return Err(Error::InvalidArgument(format!(
            "profile {profile} is not admissible"
        )));
    }
    let template = build_template(profile)?;
    let table = VolumeTable::new(p, profile.n() + 1)?;
    let factor = grassmannian_volume(profile.k(), profile.n(), &table)?;

    let (det, precision) = match method {
        MethodSpec::Exact { precision } => {
            let ctx = PadicContext::new(p, *precision)?;
            (
                DetExpectation::Exact(exact_det_expectation(&template, &ctx, guard)?),
                *precision,
            )
        }
        MethodSpec::Mc {
            precision,
            samples,
            seed,
        } => {
            let ctx = PadicContext::new(p, *precision)?;
            let stream = SeededStream::new(*seed);
            (
                DetExpectation::Mc(mc_det_expectation(&template, &ctx, &stream, *samples)?),
                *precision,
            )
        }
    };

    let expected_count = det.bracket().scale(&factor)?;
    let expected_std_error = det.std_error() * factor.to_f64();
    Ok(FlatCountResult {
        profile: profile.clone(),
        p,
        precision,
        grassmannian_factor: factor,
        det_expectation: det,
        expected_count,
        expected_std_error,
    })
}

/// Reference quantities with known exact values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClosedForm {
    /// Expected point count of a square system (always 1).
    Points { n: u32 },
    /// E|det| of a fully random n-by-n matrix: (p-1)p^n / (p^{n+1}-1).
    DetMatrix { n: u32 },
    /// Expected line count on a random cubic surface:
    /// (p^3-1)(p^2+1) / (p^5-1).
    Cubic,
    /// Expected line count on a random intersection of two quadrics in
    /// 4-space (always 1).
    Quadrics,
    /// Upper bound for expected line counts over all profiles:
    /// 1 / ((1-1/p)(1-1/p^2)).
    LimsupBound,
    /// Lower bound (1-(k+1)/p)^{n-k} for the flat-count expectation.
    LowerBound { k: u32, n: u32 },
}

pub fn closed_form(case: &ClosedForm, p: u64) -> ExactRational {
    let one = ExactRational::one();
    match case {
        ClosedForm::Points { .. } | ClosedForm::Quadrics => one,
        ClosedForm::DetMatrix { n } => {
            let num = &(&ExactRational::p_pow(p, 1) - &one) * &ExactRational::p_pow(p, *n as i64);
            let den = &ExactRational::p_pow(p, *n as i64 + 1) - &one;
            num.checked_div(&den).expect("p >= 2")
        }
        ClosedForm::Cubic => {
            let p3 = &ExactRational::p_pow(p, 3) - &one;
            let p2 = &ExactRational::p_pow(p, 2) + &one;
            let p5 = &ExactRational::p_pow(p, 5) - &one;
            (&p3 * &p2).checked_div(&p5).expect("p >= 2")
        }
        ClosedForm::LimsupBound => {
            let a = &one - &ExactRational::p_pow(p, -1);
            let b = &one - &ExactRational::p_pow(p, -2);
            one.checked_div(&(&a * &b)).expect("p >= 2")
        }
        ClosedForm::LowerBound { k, n } => {
            let base = &one
                - &ExactRational::from_int(*k as i64 + 1)
                    .checked_div(&ExactRational::from_int(p as i64))
                    .expect("p >= 2");
            base.pow((*n - *k) as i32).expect("nonnegative exponent")
        }
    }
}

/// The closed form matching a profile's expected flat count, when one is
/// known: square systems of points, the cubic-surface line count, and the
/// two-quadrics line count.
pub fn reference_closed_form(profile: &DegreeProfile) -> Option<ClosedForm> {
    if profile.k() == 0 && profile.degrees().len() == profile.n() as usize {
        return Some(ClosedForm::Points { n: profile.n() });
    }
    if profile.k() == 1 && profile.n() == 3 && profile.degrees() == [3] {
        return Some(ClosedForm::Cubic);
    }
    if profile.k() == 1 && profile.n() == 4 && profile.degrees() == [2, 2] {
        return Some(ClosedForm::Quadrics);
    }
    None
}

/// Counts common zeros in projective n-space over the residue field at which
/// the n-by-(n+1) Jacobian has full rank n. Such zeros lift uniquely to
/// p-adic zeros, so their count is an empirical stand-in for the expected
/// point count of a random square system.
pub fn smooth_projective_zero_count(system: &[CoefficientAssignment], n: u32) -> Result<u64> {
    if system.len() != n as usize {
        return Err(Error::InvalidArgument(format!(
            "need exactly n = {n} polynomials, got {}",
            system.len()
        )));
    }
    let ctx = system[0].ctx().clone();
    if ctx.precision() != 1 {
        return Err(Error::InvalidArgument(
            "smooth zero counting works over the residue field (m = 1)".into(),
        ));
    }
    for f in system {
        if f.ctx() != &ctx {
            return Err(Error::ContextMismatch(
                "system polynomials must share one context".into(),
            ));
        }
        if f.nvars() != n as usize + 1 {
            return Err(Error::InvalidArgument(format!(
                "polynomial in {} variables cannot cut projective {n}-space",
                f.nvars()
            )));
        }
    }
    let p = ctx.prime();
    // Word-size views of the coefficient tables.
    let tables: Vec<(Vec<u64>, &[Vec<u32>])> = system
        .iter()
        .map(|f| {
            let coeffs: Vec<u64> = f
                .residues()
                .iter()
                .map(|r| r.to_u64().expect("residue mod p fits"))
                .collect();
            (coeffs, f.exponents())
        })
        .collect();
    let nv = n as usize + 1;

    let eval = |coeffs: &[u64], exps: &[Vec<u32>], point: &[u64]| -> u64 {
        let mut acc = 0u64;
        for (c, e) in coeffs.iter().zip(exps) {
            let mut term = *c;
            for (&x, &ex) in point.iter().zip(e) {
                for _ in 0..ex {
                    term = term * x % p;
                }
            }
            acc = (acc + term) % p;
        }
        acc
    };
    let partial = |coeffs: &[u64], exps: &[Vec<u32>], point: &[u64], j: usize| -> u64 {
        let mut acc = 0u64;
        for (c, e) in coeffs.iter().zip(exps) {
            if e[j] == 0 {
                continue;
            }
            let mut term = *c * (e[j] as u64 % p) % p;
            for (i, (&x, &ex)) in point.iter().zip(e).enumerate() {
                let ex = if i == j { ex - 1 } else { ex };
                for _ in 0..ex {
                    term = term * x % p;
                }
            }
            acc = (acc + term) % p;
        }
        acc
    };

    let mut count = 0u64;
    let mut point = vec![0u64; nv];
    // Canonical projective representatives: leading coordinate 1, earlier
    // coordinates 0, later coordinates free.
    for lead in 0..nv {
        let free = nv - lead - 1;
        let total = (p as u128).pow(free as u32);
        let mut idx = 0u128;
        while idx < total {
            for slot in point.iter_mut().take(lead) {
                *slot = 0;
            }
            point[lead] = 1;
            let mut rest = idx;
            for slot in point.iter_mut().skip(lead + 1) {
                *slot = (rest % p as u128) as u64;
                rest /= p as u128;
            }
            idx += 1;

            if tables.iter().any(|(c, e)| eval(c, e, &point) != 0) {
                continue;
            }
            // Jacobian rank over the residue field.
            let mut jac: Vec<u64> = Vec::with_capacity(n as usize * nv);
            for (c, e) in &tables {
                for j in 0..nv {
                    jac.push(partial(c, e, &point, j));
                }
            }
            if matrix_rank_mod_p(&mut jac, n as usize, nv, p) == n as usize {
                count += 1;
            }
        }
    }
    Ok(count)
}

fn matrix_rank_mod_p(entries: &mut [u64], rows: usize, cols: usize, p: u64) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| entries[r * cols + col] % p != 0) else {
            continue;
        };
        for j in 0..cols {
            entries.swap(rank * cols + j, pivot * cols + j);
        }
        let inv = mod_inverse(entries[rank * cols + col], p);
        for r in 0..rows {
            if r == rank {
                continue;
            }
            let factor = entries[r * cols + col] % p;
            if factor == 0 {
                continue;
            }
            let scale = factor * inv % p;
            for j in 0..cols {
                let delta = scale * entries[rank * cols + j] % p;
                entries[r * cols + j] = (entries[r * cols + j] + p * p - delta) % p;
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // Fermat: p is prime and a is a unit.
    let mut result = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigUint;
    use crate::jacobian::build_template;

    const GUARD: u64 = DEFAULT_GUARD;

    fn ratio(n: i64, d: i64) -> ExactRational {
        ExactRational::new(BigInt::from(n), BigInt::from(d)).unwrap()
    }

    fn profile(n: u32, k: u32, degrees: &[u32]) -> DegreeProfile {
        DegreeProfile::new(n, k, degrees.to_vec()).unwrap()
    }

    #[test]
    fn exact_scalar_expectation() {
        // 1x1 template: E|x|_2 over Z/8 brackets to [21/32, 43/64].
        let t = build_template(&profile(1, 0, &[1])).unwrap();
        let ctx = PadicContext::new(2, 3).unwrap();
        let b = exact_det_expectation(&t, &ctx, GUARD).unwrap();
        assert_eq!(b.lo(), &ratio(21, 32));
        assert_eq!(b.hi(), &ratio(43, 64));
        assert!(b.contains(&ratio(2, 3)));
    }

    #[test]
    fn exact_cubic_low_precision() {
        let t = build_template(&profile(3, 1, &[3])).unwrap();
        let ctx = PadicContext::new(2, 1).unwrap();
        let b = exact_det_expectation(&t, &ctx, GUARD).unwrap();
        assert_eq!(b.lo(), &ratio(3, 8)); // 24 of 64 tuples have odd det
        assert_eq!(b.hi(), &ratio(11, 16));
        assert!(b.contains(&ratio(16, 31)));
    }

    #[test]
    fn exact_full_matrix() {
        // Fully random 2x2 matrix over Z/4: histogram 96/72/88 gives
        // [33/64, 77/128], containing 4/7.
        let t = build_template(&profile(2, 0, &[1, 1])).unwrap();
        let ctx = PadicContext::new(2, 2).unwrap();
        let b = exact_det_expectation(&t, &ctx, GUARD).unwrap();
        assert_eq!(b.lo(), &ratio(33, 64));
        assert_eq!(b.hi(), &ratio(77, 128));
        assert!(b.contains(&ratio(4, 7)));
    }

    #[test]
    fn exact_brackets_nest_with_precision() {
        let t = build_template(&profile(3, 1, &[3])).unwrap();
        let reference = ratio(16, 31);
        let mut prev: Option<BracketedValue> = None;
        for m in 1..=3 {
            let ctx = PadicContext::new(2, m).unwrap();
            let b = exact_det_expectation(&t, &ctx, GUARD).unwrap();
            assert!(b.contains(&reference), "m={m}");
            if let Some(outer) = &prev {
                assert!(b.nested_in(outer), "m={m} bracket escaped m={}", m - 1);
            }
            prev = Some(b);
        }
    }

    #[test]
    fn exact_guard() {
        let t = build_template(&profile(3, 1, &[3])).unwrap();
        let ctx = PadicContext::new(2, 5).unwrap();
        assert!(matches!(
            exact_det_expectation(&t, &ctx, 1000),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn mc_matches_exact_brackets() {
        // At the same precision the Monte Carlo mean must sit within a few
        // standard errors of the exact value.
        let t = build_template(&profile(2, 0, &[1, 1])).unwrap();
        let ctx = PadicContext::new(2, 2).unwrap();
        let exact = exact_det_expectation(&t, &ctx, GUARD).unwrap();
        let stream = SeededStream::new(42);
        let est = mc_det_expectation(&t, &ctx, &stream, 40_000).unwrap();
        let diff = (&est.mean_bracket.midpoint() - &exact.midpoint()).to_f64().abs();
        assert!(
            diff <= 4.0 * est.std_error,
            "diff {diff} vs 4se {}",
            4.0 * est.std_error
        );
    }

    #[test]
    fn mc_is_deterministic_and_thread_invariant() {
        let t = build_template(&profile(3, 1, &[3])).unwrap();
        let ctx = PadicContext::new(5, 6).unwrap();
        let stream = SeededStream::new(2718);
        let a = mc_det_expectation(&t, &ctx, &stream, 10_000).unwrap();
        let b = mc_det_expectation(&t, &ctx, &stream, 10_000).unwrap();
        assert_eq!(a.mean_bracket.lo(), b.mean_bracket.lo());
        assert_eq!(a.mean_bracket.hi(), b.mean_bracket.hi());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());

        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| mc_det_expectation(&t, &ctx, &stream, 10_000).unwrap());
        assert_eq!(a.mean_bracket.lo(), single.mean_bracket.lo());
        assert_eq!(a.std_error.to_bits(), single.std_error.to_bits());
    }

    #[test]
    fn mc_sample_floor() {
        let t = build_template(&profile(1, 0, &[1])).unwrap();
        let ctx = PadicContext::new(2, 3).unwrap();
        let stream = SeededStream::new(1);
        assert!(mc_det_expectation(&t, &ctx, &stream, 99).is_err());
    }

    #[test]
    fn kac_rice_assembly() {
        // Cubic at p=2, exact m=3: the line-count bracket is the det bracket
        // scaled by 35/16 and contains 35/31.
        let result = expected_flats(
            &profile(3, 1, &[3]),
            2,
            &MethodSpec::Exact { precision: 3 },
            GUARD,
        )
        .unwrap();
        assert_eq!(result.grassmannian_factor, ratio(35, 16));
        assert!(result.expected_count.contains(&ratio(35, 31)));
        assert_eq!(result.expected_std_error, 0.0);

        let det = result.det_expectation.bracket();
        let rescaled = det.scale(&ratio(35, 16)).unwrap();
        assert_eq!(rescaled.lo(), result.expected_count.lo());
        assert_eq!(rescaled.hi(), result.expected_count.hi());
    }

    #[test]
    fn quadrics_exact_contains_one() {
        let result = expected_flats(
            &profile(4, 1, &[2, 2]),
            2,
            &MethodSpec::Exact { precision: 1 },
            GUARD,
        )
        .unwrap();
        assert!(result.expected_count.contains(&ExactRational::one()));
    }

    #[test]
    fn points_mc_near_one() {
        let result = expected_flats(
            &profile(2, 0, &[2, 2]),
            3,
            &MethodSpec::Mc {
                precision: 10,
                samples: 40_000,
                seed: 7,
            },
            GUARD,
        )
        .unwrap();
        let mid = result.expected_count.midpoint().to_f64();
        assert!(
            (mid - 1.0).abs() <= 4.0 * result.expected_std_error,
            "mid {mid}, se {}",
            result.expected_std_error
        );
    }

    #[test]
    fn inadmissible_profile_rejected() {
        assert!(matches!(
            expected_flats(
                &profile(3, 1, &[2]),
                2,
                &MethodSpec::Exact { precision: 1 },
                GUARD
            ),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn closed_forms() {
        assert_eq!(closed_form(&ClosedForm::Cubic, 2), ratio(35, 31));
        assert_eq!(closed_form(&ClosedForm::DetMatrix { n: 2 }, 2), ratio(4, 7));
        assert_eq!(
            closed_form(&ClosedForm::LowerBound { k: 1, n: 3 }, 5),
            ratio(9, 25)
        );
        assert_eq!(closed_form(&ClosedForm::LimsupBound, 2), ratio(8, 3));
        assert_eq!(closed_form(&ClosedForm::Points { n: 4 }, 7), ratio(1, 1));
        assert_eq!(closed_form(&ClosedForm::Quadrics, 3), ratio(1, 1));
    }

    #[test]
    fn closed_form_trend_and_bounds() {
        // The cubic line-count expectation converges to 1 monotonically from
        // above as p grows, and stays below the limsup bound throughout.
        let primes = [2u64, 3, 5, 7, 11, 13];
        let one = ExactRational::one();
        let mut last_gap: Option<ExactRational> = None;
        for &p in &primes {
            let v = closed_form(&ClosedForm::Cubic, p);
            let gap = (&v - &one).abs();
            if let Some(prev) = &last_gap {
                assert!(gap < *prev, "|cubic - 1| must shrink as p grows");
            }
            let bound = closed_form(&ClosedForm::LimsupBound, p);
            assert!(v <= bound);
            assert!(v >= closed_form(&ClosedForm::LowerBound { k: 1, n: 3 }, p));
            last_gap = Some(gap);
        }
        let tail = closed_form(&ClosedForm::Cubic, 101);
        assert!((tail.to_f64() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn reference_detection() {
        assert_eq!(
            reference_closed_form(&profile(3, 1, &[3])),
            Some(ClosedForm::Cubic)
        );
        assert_eq!(
            reference_closed_form(&profile(4, 1, &[2, 2])),
            Some(ClosedForm::Quadrics)
        );
        assert_eq!(
            reference_closed_form(&profile(3, 0, &[2, 5, 1])),
            Some(ClosedForm::Points { n: 3 })
        );
        assert_eq!(reference_closed_form(&profile(5, 1, &[2, 2])), None);
    }

    #[test]
    fn smooth_zero_count_examples() {
        let ctx = PadicContext::new(5, 1).unwrap();
        let linear = |var: usize| {
            // x_var as a degree-1 form in three variables.
            let exps = crate::sampling::monomials_desc(1, 3);
            let residues: Vec<BigUint> = exps
                .iter()
                .map(|e| if e[var] == 1 { BigUint::from(1u32) } else { BigUint::from(0u32) })
                .collect();
            CoefficientAssignment::from_residues(ctx.clone(), 1, 2, residues).unwrap()
        };
        let count = smooth_projective_zero_count(&[linear(0), linear(1)], 2).unwrap();
        assert_eq!(count, 1);

        // One binary form on the projective line: x0*x1 has two smooth
        // zeros, x0^2 has one zero but it is singular.
        let ctx2 = PadicContext::new(3, 1).unwrap();
        let form = |target: &[u32]| {
            let exps = crate::sampling::monomials_desc(2, 2);
            let residues: Vec<BigUint> = exps
                .iter()
                .map(|e| if e == target { BigUint::from(1u32) } else { BigUint::from(0u32) })
                .collect();
            CoefficientAssignment::from_residues(ctx2.clone(), 2, 1, residues).unwrap()
        };
        assert_eq!(
            smooth_projective_zero_count(&[form(&[1, 1])], 1).unwrap(),
            2
        );
        assert_eq!(
            smooth_projective_zero_count(&[form(&[2, 0])], 1).unwrap(),
            0
        );
    }

    #[test]
    fn hensel_smoke_small() {
        use crate::sampling::sample_polynomial;
        let ctx = PadicContext::new(7, 1).unwrap();
        let mut stream = SeededStream::new(20240801);
        let systems = 4_000u64;
        let mut total = 0u64;
        for _ in 0..systems {
            let f1 = sample_polynomial(2, 2, &ctx, &mut stream).unwrap();
            let f2 = sample_polynomial(2, 2, &ctx, &mut stream).unwrap();
            total += smooth_projective_zero_count(&[f1, f2], 2).unwrap();
        }
        let mean = total as f64 / systems as f64;
        assert!(
            (mean - 1.0).abs() < 0.15,
            "smooth zero mean {mean} strays from 1"
        );
    }
}
