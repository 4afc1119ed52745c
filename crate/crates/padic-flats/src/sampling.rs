use std::collections::HashMap;

use num::{BigUint, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::PadicMatrix;
use crate::padic::{PadicApprox, PadicContext, Valuation};

/// Reproducible counter-based random stream.
///
/// A stream is identified by `(seed, index)`: the same pair always replays
/// the same draws, and distinct indices give statistically independent
/// streams (ChaCha8 keyed by the seed, positioned on its 64-bit stream
/// counter). `substream` derives child indices by a splitmix64-style hash so
/// that nested fan-out (e.g. one stream per Monte Carlo chunk) stays
/// collision-free in practice and independent of thread scheduling.
#[derive(Clone, Debug)]
pub struct SeededStream {
    seed: u64,
    index: u64,
    rng: ChaCha8Rng,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self::with_index(seed, 0)
    }

    pub fn with_index(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        SeededStream { seed, index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Child stream `child` of this stream (same seed, hashed index).
    pub fn substream(&self, child: u64) -> SeededStream {
        Self::with_index(self.seed, mix_index(self.index, child))
    }

    /// One uniform base-p digit.
    fn digit(&mut self, p: u64) -> u64 {
        self.rng.random_range(0..p)
    }

    /// Uniform residue mod p^m as a machine word; requires `p^m < 2^63`.
    ///
    /// Draws m base-p digits, least significant first, so the value at
    /// precision m reduces to the value the same stream state would produce
    /// at any lower precision.
    pub fn draw_residue_u64(&mut self, p: u64, m: u32) -> u64 {
        let mut value = 0u64;
        let mut scale = 1u64;
        for _ in 0..m {
            value += self.digit(p) * scale;
            scale = scale.saturating_mul(p);
        }
        value
    }

    /// Uniform residue mod p^m, arbitrary precision.
    pub fn draw_residue(&mut self, ctx: &PadicContext) -> BigUint {
        if ctx.modulus_u64().is_some() {
            return BigUint::from(self.draw_residue_u64(ctx.prime(), ctx.precision()));
        }
        let p = ctx.prime();
        let p_big = BigUint::from(p);
        let mut value = BigUint::zero();
        let mut scale = num::BigUint::from(1u32);
        for _ in 0..ctx.precision() {
            value += self.digit(p) * &scale;
            scale *= &p_big;
        }
        value
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix_index(parent: u64, child: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ child.wrapping_add(0x9E37_79B9_7F4A_7C15))
}

/// Uniform element of `Z/p^m`, drawn digit by digit (rejection-free).
pub fn sample_uniform(ctx: &PadicContext, stream: &mut SeededStream) -> PadicApprox {
    ctx.approx(stream.draw_residue(ctx))
}

/// All exponent vectors of total degree `deg` in `nvars` variables, in
/// descending lexicographic order. This is the canonical monomial order used
/// for coefficient storage, template rows, and variable pools.
pub fn monomials_desc(deg: u32, nvars: usize) -> Vec<Vec<u32>> {
    assert!(nvars >= 1, "monomials need at least one variable");
    fn rec(deg: u32, nvars: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if nvars == 1 {
            prefix.push(deg);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=deg).rev() {
            prefix.push(first);
            rec(deg - first, nvars - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(deg, nvars, &mut Vec::new(), &mut out);
    out
}

/// Number of monomials of degree `d` in `n + 1` variables: `C(d + n, d)`.
pub fn monomial_count(d: u32, n: u32) -> u64 {
    let mut acc: u128 = 1;
    for i in 1..=d as u128 {
        acc = acc * (n as u128 + i) / i;
    }
    acc as u64
}

/// Coefficients of one homogeneous polynomial of degree `d` in `n + 1`
/// variables over `Z/p^m`, keyed by exponent vector.
///
/// Storage order is descending lexicographic, which also fixes the order in
/// which `sample_polynomial` consumes randomness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientAssignment {
    ctx: PadicContext,
    degree: u32,
    nvars: usize,
    exponents: Vec<Vec<u32>>,
    values: Vec<BigUint>,
    lookup: HashMap<Vec<u32>, usize>,
}

impl CoefficientAssignment {
    /// Builds an assignment from residues listed in descending-lex monomial
    /// order (the order of `monomials_desc(d, n + 1)`).
    pub fn from_residues(ctx: PadicContext, d: u32, n: u32, residues: Vec<BigUint>) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidArgument(
                "polynomials need degree >= 1 and ambient dimension >= 1".into(),
            ));
        }
        let exponents = monomials_desc(d, n as usize + 1);
        if residues.len() != exponents.len() {
            return Err(Error::InvalidArgument(format!(
                "degree {d} in {} variables needs {} coefficients, got {}",
                n + 1,
                exponents.len(),
                residues.len()
            )));
        }
        let modulus = ctx.modulus().clone();
        let values: Vec<BigUint> = residues.into_iter().map(|r| r % &modulus).collect();
        let lookup = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Ok(CoefficientAssignment {
            ctx,
            degree: d,
            nvars: n as usize + 1,
            exponents,
            values,
            lookup,
        })
    }

    pub fn ctx(&self) -> &PadicContext {
        &self.ctx
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Number of variables (`n + 1` for projective n-space).
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Exponent vectors in storage (descending-lex) order.
    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    /// Raw residues in storage order.
    pub fn residues(&self) -> &[BigUint] {
        &self.values
    }

    /// Coefficient of the monomial with exponent vector `alpha`.
    pub fn value(&self, alpha: &[u32]) -> Option<PadicApprox> {
        self.lookup
            .get(alpha)
            .map(|&i| self.ctx.approx(self.values[i].clone()))
    }

    /// Evaluates the polynomial at a residue point (mod p^m).
    pub fn evaluate(&self, point: &[BigUint]) -> Result<PadicApprox> {
        if point.len() != self.nvars {
            return Err(Error::InvalidArgument(format!(
                "evaluation point has {} coordinates, polynomial has {} variables",
                point.len(),
                self.nvars
            )));
        }
        let modulus = self.ctx.modulus();
        let mut acc = BigUint::zero();
        for (alpha, coef) in self.exponents.iter().zip(&self.values) {
            if coef.is_zero() {
                continue;
            }
            let mut term = coef.clone();
            for (x, &e) in point.iter().zip(alpha) {
                if e > 0 {
                    term = term * x.modpow(&BigUint::from(e), modulus) % modulus;
                }
            }
            acc = (acc + term) % modulus;
        }
        Ok(self.ctx.approx(acc))
    }
}

/// Samples all `C(d + n, d)` coefficients of a degree-`d` form on projective
/// n-space, i.i.d. uniform via `sample_uniform`, in descending-lex order.
pub fn sample_polynomial(
    d: u32,
    n: u32,
    ctx: &PadicContext,
    stream: &mut SeededStream,
) -> Result<CoefficientAssignment> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "polynomials need degree >= 1 and ambient dimension >= 1".into(),
        ));
    }
    let count = monomial_count(d, n);
    let residues = (0..count).map(|_| stream.draw_residue(ctx)).collect();
    CoefficientAssignment::from_residues(ctx.clone(), d, n, residues)
}

/// Coefficients of `f(g x)`: exact polynomial substitution of the linear
/// change of variables `g` (rows of `g` give the new expression of each
/// variable) into `f`, mod `p^m`.
pub fn change_variables(c: &CoefficientAssignment, g: &PadicMatrix) -> Result<CoefficientAssignment> {
    if g.ctx() != c.ctx() {
        return Err(Error::ContextMismatch(format!(
            "polynomial over {} but substitution matrix over {}",
            c.ctx(),
            g.ctx()
        )));
    }
    if g.rows() != c.nvars() || g.cols() != c.nvars() {
        return Err(Error::InvalidArgument(format!(
            "substitution matrix must be {0}x{0} for a polynomial in {0} variables",
            c.nvars()
        )));
    }
    let det = g.det_residue()?;
    if det.valuation() != Valuation::Finite(0) {
        return Err(Error::NotInvertible(format!(
            "substitution matrix must be invertible mod {}",
            g.ctx().prime()
        )));
    }

    let ctx = c.ctx().clone();
    let modulus = ctx.modulus().clone();
    let nvars = c.nvars();
    let d = c.degree();

    // Sparse polynomials keyed by exponent vector.
    type Poly = HashMap<Vec<u32>, BigUint>;
    let mul = |a: &Poly, b: &Poly| -> Poly {
        let mut out: Poly = HashMap::new();
        for (ea, ca) in a {
            for (eb, cb) in b {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                let coef = ca * cb % &modulus;
                let cell = out.entry(e).or_insert_with(BigUint::zero);
                *cell = (&*cell + coef) % &modulus;
            }
        }
        out.retain(|_, v| !v.is_zero());
        out
    };

    // Linear form substituted for variable i, and its powers up to d (cached:
    // power j is built once and shared across all monomials needing it).
    let mut power_cache: Vec<Vec<Poly>> = Vec::with_capacity(nvars);
    for i in 0..nvars {
        let mut linear: Poly = HashMap::new();
        for j in 0..nvars {
            let coef = g.entry(i, j).residue().clone();
            if !coef.is_zero() {
                let mut e = vec![0u32; nvars];
                e[j] = 1;
                linear.insert(e, coef);
            }
        }
        let mut powers = Vec::with_capacity(d as usize + 1);
        let mut unit: Poly = HashMap::new();
        unit.insert(vec![0u32; nvars], num::BigUint::from(1u32) % &modulus);
        powers.push(unit);
        for j in 1..=d as usize {
            let next = mul(&powers[j - 1], &linear);
            powers.push(next);
        }
        power_cache.push(powers);
    }

    let mut acc: Poly = HashMap::new();
    for (alpha, coef) in c.exponents().iter().zip(c.residues()) {
        if coef.is_zero() {
            continue;
        }
        let mut term: Poly = HashMap::new();
        term.insert(vec![0u32; nvars], coef.clone());
        for (i, &e) in alpha.iter().enumerate() {
            if e > 0 {
                term = mul(&term, &power_cache[i][e as usize]);
            }
        }
        for (e, v) in term {
            let cell = acc.entry(e).or_insert_with(BigUint::zero);
            *cell = (&*cell + v) % &modulus;
        }
    }

    // Substitution is degree-preserving; read the result back off in
    // canonical order, filling absent monomials with zero.
    let n = (nvars - 1) as u32;
    let exponents = monomials_desc(d, nvars);
    let residues = exponents
        .iter()
        .map(|e| acc.get(e).cloned().unwrap_or_else(BigUint::zero))
        .collect();
    CoefficientAssignment::from_residues(ctx, d, n, residues)
}
