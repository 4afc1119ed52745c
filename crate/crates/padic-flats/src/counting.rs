use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::det_mod_u64;

/// A point of projective space over `Z/p^n` in canonical form.
///
/// Coordinates are residues mod `p^n`, not all zero. Two tuples are the same
/// point when they differ by a unit scalar; the canonical representative is
/// scaled so that the first coordinate of minimal valuation becomes exactly
/// `p^{m1}`. For tuples with a unit coordinate (`m1 = 0`) this is the usual
/// "first unit coordinate equals 1" normalization; tuples whose entries are
/// all divisible by p keep a well-defined class as long as some entry is
/// nonzero mod `p^n`, and the same scaling rule applies.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProjectivePoint {
    p: u64,
    n: u32,
    coords: Vec<u64>,
}

impl ProjectivePoint {
    pub fn new(p: u64, n: u32, coords: Vec<u64>) -> Result<Self> {
        if p < 2 || n == 0 {
            return Err(Error::InvalidArgument(
                "projective points need p >= 2 and n >= 1".into(),
            ));
        }
        if coords.is_empty() {
            return Err(Error::InvalidArgument("empty coordinate tuple".into()));
        }
        let modulus = checked_pow(p, n as u64, u64::MAX)?;
        let mut c: Vec<u64> = coords.iter().map(|&x| x % modulus).collect();
        let m1 = match c.iter().map(|&x| val_capped(x, p, n)).min().unwrap() {
            v if v >= n => {
                return Err(Error::InvalidArgument(
                    "all coordinates vanish at this precision".into(),
                ))
            }
            v => v,
        };
        let lead = c.iter().position(|&x| val_capped(x, p, n) == m1).unwrap();
        let unit = c[lead] / p.pow(m1);
        let w = inv_mod_u64(unit, modulus);
        for x in c.iter_mut() {
            *x = mul_mod(*x, w, modulus);
        }
        debug_assert_eq!(c[lead], p.pow(m1));
        Ok(ProjectivePoint { p, n, coords: c })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    /// Minimal valuation among the coordinates (strictly less than n).
    pub fn min_valuation(&self) -> u32 {
        self.coords
            .iter()
            .map(|&x| val_capped(x, self.p, self.n))
            .min()
            .unwrap()
    }
}

impl fmt::Display for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(" : "))
    }
}

/// Tally of a minor map: how many full-rank stacks land on each projective
/// target. `domain_size` is the number of stacks whose minor tuple is nonzero
/// mod `p^n`; the fiber sizes sum to it.
#[derive(Clone, Debug)]
pub struct MinorMapReport {
    pub p: u64,
    pub n: u32,
    pub fiber_sizes: BTreeMap<ProjectivePoint, u64>,
    pub domain_size: u64,
}

impl MinorMapReport {
    pub fn target_count(&self) -> usize {
        self.fiber_sizes.len()
    }

    pub fn check_mass(&self) -> bool {
        self.fiber_sizes.values().sum::<u64>() == self.domain_size
    }
}

fn val_capped(x: u64, p: u64, cap: u32) -> u32 {
    if x == 0 {
        return cap;
    }
    let mut v = 0;
    let mut x = x;
    while v < cap && x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    (a + m - b) % m
}

/// Inverse of a unit `a` mod `m` by extended gcd.
fn inv_mod_u64(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    assert_eq!(old_r, 1, "inverse of a non-unit");
    old_s.rem_euclid(m as i128) as u64
}

fn checked_pow(base: u64, exp: u64, guard: u64) -> Result<u64> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc *= base as u128;
        if acc > guard as u128 {
            return Err(Error::TooLarge(format!(
                "{base}^{exp} exceeds the enumeration guard {guard}"
            )));
        }
    }
    Ok(acc as u64)
}

/// Runs `f` over all tuples in `(0..radix)^len` in odometer order (first
/// coordinate changes fastest).
pub(crate) fn for_each_tuple(len: usize, radix: u64, mut f: impl FnMut(&[u64])) {
    let mut t = vec![0u64; len];
    loop {
        f(&t);
        let mut i = 0;
        loop {
            if i == len {
                return;
            }
            t[i] += 1;
            if t[i] < radix {
                break;
            }
            t[i] = 0;
            i += 1;
        }
    }
}

/// Brute-force count of n-by-n matrices over `Z/p^m` that are invertible,
/// i.e. whose determinant is a unit. Must equal `p^{(m-1)n^2}` times the
/// invertible count over the residue field.
pub fn count_gl(n: u32, p: u64, m: u32, guard: u64) -> Result<u64> {
    let cells = (n as u64) * (n as u64);
    checked_pow(p, m as u64 * cells, guard)?;
    let modulus = p.pow(m);
    let nn = n as usize;
    let mut count = 0u64;
    let mut reduced = vec![0u64; nn * nn];
    for_each_tuple(nn * nn, modulus, |entries| {
        for (slot, &e) in reduced.iter_mut().zip(entries) {
            *slot = e % p;
        }
        if det_mod_u64(&reduced, nn, p) % p != 0 {
            count += 1;
        }
    });
    Ok(count)
}

/// Closed form for `count_gl`: `p^{(m-1)n^2} * prod_{i=0}^{n-1} (p^n - p^i)`.
pub fn gl_count_formula(n: u32, p: u64, m: u32) -> u64 {
    let cells = (n as u64) * (n as u64);
    let mut acc: u128 = pow_u128(p, (m as u64 - 1) * cells);
    let pn = pow_u128(p, n as u64);
    for i in 0..n as u64 {
        acc *= pn - pow_u128(p, i);
    }
    acc as u64
}

/// Brute-force count of n-by-n matrices over `Z/p^m` whose determinant has
/// valuation exactly `ell` (requires `ell < m` so the level is resolved at
/// this precision). Equals `p^{m n^2}` times the corresponding volume.
pub fn count_det_level(n: u32, p: u64, m: u32, ell: u32, guard: u64) -> Result<u64> {
    if ell >= m {
        return Err(Error::InvalidArgument(format!(
            "level ell = {ell} must be < precision m = {m}"
        )));
    }
    let cells = (n as u64) * (n as u64);
    checked_pow(p, m as u64 * cells, guard)?;
    let modulus = p.pow(m);
    let nn = n as usize;
    let mut count = 0u64;
    for_each_tuple(nn * nn, modulus, |entries| {
        let d = det_mod_u64(entries, nn, modulus);
        if d != 0 && val_capped(d, p, m) == ell {
            count += 1;
        }
    });
    Ok(count)
}

/// Brute-force count of unit triples `(k1, k2, k3)` mod `p^k` satisfying
/// `k2^2 = k1 k3` (a unit triple has at least one coordinate not divisible
/// by p). Closed form: `p^{2k} - p^{2k-2}`.
pub fn count_a(k: u32, p: u64, guard: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidArgument("unit-triple count needs k >= 1".into()));
    }
    checked_pow(p, 3 * k as u64, guard)?;
    let modulus = p.pow(k);
    let mut count = 0u64;
    for_each_tuple(3, modulus, |t| {
        if t.iter().all(|&x| x % p == 0) {
            return;
        }
        let lhs = mul_mod(t[1], t[1], modulus);
        let rhs = mul_mod(t[0], t[2], modulus);
        if lhs == rhs {
            count += 1;
        }
    });
    Ok(count)
}

pub fn a_count_formula(k: u32, p: u64) -> u64 {
    (pow_u128(p, 2 * k as u64) - pow_u128(p, 2 * k as u64 - 2)) as u64
}

/// Brute-force count of unit quadruples `(k1, k2, k3, k4)` mod `p^k`
/// satisfying `k1 k4 = k2 k3`. Closed form:
/// `p^{3k} + p^{3k-1} - p^{3k-2} - p^{3k-3}`.
pub fn count_b(k: u32, p: u64, guard: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidArgument("unit-quadruple count needs k >= 1".into()));
    }
    checked_pow(p, 4 * k as u64, guard)?;
    let modulus = p.pow(k);
    let mut count = 0u64;
    for_each_tuple(4, modulus, |t| {
        if t.iter().all(|&x| x % p == 0) {
            return;
        }
        if mul_mod(t[0], t[3], modulus) == mul_mod(t[1], t[2], modulus) {
            count += 1;
        }
    });
    Ok(count)
}

pub fn b_count_formula(k: u32, p: u64) -> u64 {
    let e = 3 * k as u64;
    (pow_u128(p, e) + pow_u128(p, e - 1) - pow_u128(p, e - 2) - pow_u128(p, e - 3)) as u64
}

/// Brute-force count of 2-by-2 matrices mod `p^n` with determinant divisible
/// by `p^n`. Closed form: `p^{3n} + p^{3n-1} - p^{2n-1}`.
pub fn count_singular_2x2(p: u64, n: u32, guard: u64) -> Result<u64> {
    checked_pow(p, 4 * n as u64, guard)?;
    let modulus = p.pow(n);
    let mut count = 0u64;
    for_each_tuple(4, modulus, |t| {
        if mul_mod(t[0], t[3], modulus) == mul_mod(t[1], t[2], modulus) {
            count += 1;
        }
    });
    Ok(count)
}

pub fn singular_2x2_formula(p: u64, n: u32) -> u64 {
    let e = 3 * n as u64;
    (pow_u128(p, e) + pow_u128(p, e - 1) - pow_u128(p, 2 * n as u64 - 1)) as u64
}

/// Enumerates all 3-by-2 stacks mod `p^n` (row-major entries), maps each
/// full-rank stack through its three 2-by-2 minors
/// `(k1, k2, k3) = (det rows 01, det rows 02, det rows 12)` to a projective
/// point, and tallies the fibers. A stack is full-rank when the minor tuple
/// is nonzero mod `p^n`.
pub fn minor_fibers_3x2(p: u64, n: u32, guard: u64) -> Result<MinorMapReport> {
    checked_pow(p, 6 * n as u64, guard)?;
    let modulus = p.pow(n);
    let mut fibers: BTreeMap<ProjectivePoint, u64> = BTreeMap::new();
    let mut domain = 0u64;
    for_each_tuple(6, modulus, |q| {
        // Rows (q0,q1), (q2,q3), (q4,q5).
        let k1 = sub_mod(mul_mod(q[0], q[3], modulus), mul_mod(q[1], q[2], modulus), modulus);
        let k2 = sub_mod(mul_mod(q[0], q[5], modulus), mul_mod(q[1], q[4], modulus), modulus);
        let k3 = sub_mod(mul_mod(q[2], q[5], modulus), mul_mod(q[3], q[4], modulus), modulus);
        if k1 == 0 && k2 == 0 && k3 == 0 {
            return;
        }
        domain += 1;
        let target = ProjectivePoint::new(p, n, vec![k1, k2, k3]).expect("nonzero tuple");
        *fibers.entry(target).or_insert(0) += 1;
    });
    Ok(MinorMapReport {
        p,
        n,
        fiber_sizes: fibers,
        domain_size: domain,
    })
}

/// Fiber size of the 3-by-2 minor map over a target with minimal coordinate
/// valuation `m1`: `p^{4n-3-m1} (p-1)(p+1)(p^{m1+1}-1)`.
pub fn fiber_formula_3x2(p: u64, n: u32, m1: u32) -> u64 {
    let e = 4 * n as u64 - 3 - m1 as u64;
    let acc = pow_u128(p, e)
        * (p as u128 - 1)
        * (p as u128 + 1)
        * (pow_u128(p, m1 as u64 + 1) - 1);
    acc as u64
}

/// Unsigned 3-by-3 determinant mod `m` of the given rows.
pub(crate) fn det3_mod(rows: [[u64; 3]; 3], m: u64) -> u64 {
    let mm = m as u128;
    let term = |a: u64, b: u64, c: u64| (a as u128 * b as u128 % mm) * c as u128 % mm;
    let pos = (term(rows[0][0], rows[1][1], rows[2][2])
        + term(rows[0][1], rows[1][2], rows[2][0])
        + term(rows[0][2], rows[1][0], rows[2][1]))
        % mm;
    let neg = (term(rows[0][2], rows[1][1], rows[2][0])
        + term(rows[0][0], rows[1][2], rows[2][1])
        + term(rows[0][1], rows[1][0], rows[2][2]))
        % mm;
    ((pos + mm - neg) % mm) as u64
}

/// Enumerates all 4-by-3 stacks mod `p^n` (row-major entries), maps each
/// full-rank stack through its four unsigned 3-by-3 minors — `k_r` deletes
/// row `r` — to a projective point in 3-space, and tallies the fibers.
pub fn minor_fibers_4x3(p: u64, n: u32, guard: u64) -> Result<MinorMapReport> {
    checked_pow(p, 12 * n as u64, guard)?;
    let modulus = p.pow(n);
    let mut fibers: BTreeMap<ProjectivePoint, u64> = BTreeMap::new();
    let mut domain = 0u64;
    for_each_tuple(12, modulus, |q| {
        let row = |r: usize| [q[3 * r], q[3 * r + 1], q[3 * r + 2]];
        let minor = |drop: usize| {
            let kept: Vec<[u64; 3]> = (0..4).filter(|&r| r != drop).map(row).collect();
            det3_mod([kept[0], kept[1], kept[2]], modulus)
        };
        let ks = [minor(0), minor(1), minor(2), minor(3)];
        if ks.iter().all(|&k| k == 0) {
            return;
        }
        domain += 1;
        let target = ProjectivePoint::new(p, n, ks.to_vec()).expect("nonzero tuple");
        *fibers.entry(target).or_insert(0) += 1;
    });
    Ok(MinorMapReport {
        p,
        n,
        fiber_sizes: fibers,
        domain_size: domain,
    })
}

/// Fiber size of the 4-by-3 minor map over a target with minimal coordinate
/// valuation `m1`: `p^{9n-6-m1} (p^3-1)(p^{m1+1}-1)(p^{m1+2}-1)`.
pub fn fiber_formula_4x3(p: u64, n: u32, m1: u32) -> u64 {
    let e = 9 * n as u64 - 6 - m1 as u64;
    let acc = pow_u128(p, e)
        * (pow_u128(p, 3) - 1)
        * (pow_u128(p, m1 as u64 + 1) - 1)
        * (pow_u128(p, m1 as u64 + 2) - 1);
    acc as u64
}

/// Number of residue classes mod `p^m` met by a set of residues given mod
/// `p^{m_source}` (with `m <= m_source`): the minimal number of radius-
/// `p^{-m}` balls covering the set.
pub fn count_balls_cover(p: u64, m_source: u32, residues: &[u64], m: u32) -> Result<u64> {
    if m > m_source {
        return Err(Error::InvalidArgument(format!(
            "target precision m = {m} exceeds source precision {m_source}"
        )));
    }
    let modulus = checked_pow(p, m as u64, u64::MAX)?;
    let mut seen = std::collections::HashSet::new();
    for &r in residues {
        seen.insert(r % modulus);
    }
    Ok(seen.len() as u64)
}

pub(crate) fn pow_u128(base: u64, exp: u64) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc *= base as u128;
    }
    acc
}
