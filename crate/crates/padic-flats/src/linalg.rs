use std::fmt;

use num::{BigUint, One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::padic::{PadicApprox, PadicContext};
use crate::rational::ExactRational;

/// Dense row-major matrix over `Z/p^m`.
///
/// Entries are stored as raw residues; the context is carried once. This
/// keeps the hot paths (determinants of many instantiations) allocation-light
/// while `entry` still hands out tagged values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicMatrix {
    ctx: PadicContext,
    rows: usize,
    cols: usize,
    entries: Vec<BigUint>,
}

impl PadicMatrix {
    /// Builds a matrix from tagged values, checking the shared context.
    pub fn new(ctx: PadicContext, rows: usize, cols: usize, entries: Vec<PadicApprox>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("matrix dimensions must be positive".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        for e in &entries {
            if e.ctx() != &ctx {
                return Err(Error::ContextMismatch(format!(
                    "matrix context is {ctx} but an entry lives in {}",
                    e.ctx()
                )));
            }
        }
        let entries = entries.into_iter().map(|e| e.residue().clone()).collect();
        Ok(PadicMatrix { ctx, rows, cols, entries })
    }

    /// Builds a matrix from raw residues (reduced mod `p^m`).
    pub fn from_residues(ctx: PadicContext, rows: usize, cols: usize, residues: Vec<BigUint>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("matrix dimensions must be positive".into()));
        }
        if residues.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                residues.len()
            )));
        }
        let modulus = ctx.modulus().clone();
        let entries = residues.into_iter().map(|r| r % &modulus).collect();
        Ok(PadicMatrix { ctx, rows, cols, entries })
    }

    pub fn from_u64s(ctx: PadicContext, rows: usize, cols: usize, residues: &[u64]) -> Result<Self> {
        Self::from_residues(ctx, rows, cols, residues.iter().map(|&r| BigUint::from(r)).collect())
    }

    pub fn identity(ctx: PadicContext, n: usize) -> Self {
        let mut entries = vec![BigUint::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigUint::one();
        }
        PadicMatrix { ctx, rows: n, cols: n, entries }
    }

    pub fn ctx(&self) -> &PadicContext {
        &self.ctx
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> PadicApprox {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        self.ctx.approx(self.entries[i * self.cols + j].clone())
    }

    pub fn residues(&self) -> &[BigUint] {
        &self.entries
    }

    fn residue_at(&self, i: usize, j: usize) -> &BigUint {
        &self.entries[i * self.cols + j]
    }

    /// Exact determinant residue mod `p^m`, computed fraction-free.
    ///
    /// Uses a column-subset dynamic program (the division-free analogue of
    /// cofactor expansion), so no pivoting or unit divisions are needed.
    pub fn det_residue(&self) -> Result<PadicApprox> {
        if self.rows != self.cols {
            return Err(Error::InvalidArgument(format!(
                "determinant of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        if let Some(m64) = self.ctx.modulus_u64() {
            let entries: Vec<u64> = self
                .entries
                .iter()
                .map(|e| e.to_u64().expect("residue below a u64 modulus"))
                .collect();
            let d = det_mod_u64(&entries, self.rows, m64);
            return Ok(self.ctx.approx_u64(d));
        }
        Ok(self.ctx.approx(det_mod_big(&self.entries, self.rows, self.ctx.modulus())))
    }

    /// Matrix product (mod `p^m`).
    pub fn matmul(&self, rhs: &PadicMatrix) -> Result<PadicMatrix> {
        if self.ctx != rhs.ctx {
            return Err(Error::ContextMismatch(format!(
                "product of matrices over {} and {}",
                self.ctx, rhs.ctx
            )));
        }
        if self.cols != rhs.rows {
            return Err(Error::InvalidArgument(format!(
                "product of {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let modulus = self.ctx.modulus();
        let mut out = vec![BigUint::zero(); self.rows * rhs.cols];
        for i in 0..self.rows {
            for t in 0..self.cols {
                let a = self.residue_at(i, t);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.residue_at(t, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cell = &mut out[i * rhs.cols + j];
                    *cell = (&*cell + a * b) % modulus;
                }
            }
        }
        Ok(PadicMatrix {
            ctx: self.ctx.clone(),
            rows: self.rows,
            cols: rhs.cols,
            entries: out,
        })
    }

    /// Inverse mod `p^m` of a matrix that is invertible mod `p`.
    pub fn inverse(&self) -> Result<PadicMatrix> {
        if self.rows != self.cols {
            return Err(Error::InvalidArgument("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let modulus = self.ctx.modulus().clone();
        let p = BigUint::from(self.ctx.prime());
        let mut a = self.entries.clone();
        let mut inv = PadicMatrix::identity(self.ctx.clone(), n).entries;
        // Gauss-Jordan with unit pivots: invertibility mod p guarantees a
        // unit somewhere in each remaining column.
        for t in 0..n {
            let pivot = (t..n).find(|&r| !(&a[r * n + t] % &p).is_zero());
            let Some(r) = pivot else {
                return Err(Error::NotInvertible(format!(
                    "matrix is singular mod {}",
                    self.ctx.prime()
                )));
            };
            if r != t {
                for j in 0..n {
                    a.swap(r * n + j, t * n + j);
                    inv.swap(r * n + j, t * n + j);
                }
            }
            let piv_inv = self
                .ctx
                .approx(a[t * n + t].clone())
                .unit_inverse()
                .expect("pivot is a unit")
                .residue()
                .clone();
            for j in 0..n {
                a[t * n + j] = &a[t * n + j] * &piv_inv % &modulus;
                inv[t * n + j] = &inv[t * n + j] * &piv_inv % &modulus;
            }
            for r2 in 0..n {
                if r2 == t {
                    continue;
                }
                let coef = a[r2 * n + t].clone();
                if coef.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let sub_a = &coef * &a[t * n + j] % &modulus;
                    a[r2 * n + j] = (&a[r2 * n + j] + &modulus - sub_a) % &modulus;
                    let sub_i = &coef * &inv[t * n + j] % &modulus;
                    inv[r2 * n + j] = (&inv[r2 * n + j] + &modulus - sub_i) % &modulus;
                }
            }
        }
        Ok(PadicMatrix {
            ctx: self.ctx.clone(),
            rows: n,
            cols: n,
            entries: inv,
        })
    }
}

impl fmt::Display for PadicMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}x{} over {}:", self.rows, self.cols, self.ctx)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.residue_at(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Division-free determinant over `Z/modulus` for word-sized moduli.
///
/// `dp[mask]` is the determinant of the submatrix formed by the first
/// `popcount(mask)` rows and the column set `mask`; the recurrence expands
/// along the last of those rows. O(2^n * n) ring operations.
pub(crate) fn det_mod_u64(entries: &[u64], n: usize, modulus: u64) -> u64 {
    debug_assert!(modulus < (1 << 63));
    debug_assert_eq!(entries.len(), n * n);
    if n == 1 {
        return entries[0] % modulus;
    }
    let full = (1usize << n) - 1;
    let mut dp = vec![0u64; full + 1];
    dp[0] = 1 % modulus;
    for mask in 1..=full {
        let r = (mask.count_ones() - 1) as usize;
        // Expansion along row r: sign of column j is (-1)^(r + index of j in mask).
        let mut sign_negative = r % 2 == 1;
        let mut acc_pos = 0u128;
        let mut acc_neg = 0u128;
        let mut rest = mask;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let a = entries[r * n + j];
            if a != 0 {
                let term = (a as u128 * dp[mask ^ (1 << j)] as u128) % modulus as u128;
                if sign_negative {
                    acc_neg += term;
                } else {
                    acc_pos += term;
                }
            }
            sign_negative = !sign_negative;
        }
        let m = modulus as u128;
        dp[mask] = ((acc_pos % m + m - acc_neg % m) % m) as u64;
    }
    dp[full]
}

/// BigUint twin of `det_mod_u64` for moduli beyond machine words.
pub(crate) fn det_mod_big(entries: &[BigUint], n: usize, modulus: &BigUint) -> BigUint {
    debug_assert_eq!(entries.len(), n * n);
    if n == 1 {
        return &entries[0] % modulus;
    }
    let full = (1usize << n) - 1;
    let mut dp = vec![BigUint::zero(); full + 1];
    dp[0] = BigUint::one() % modulus;
    for mask in 1..=full {
        let r = (mask.count_ones() - 1) as usize;
        let mut sign_negative = r % 2 == 1;
        let mut acc = BigUint::zero();
        let mut borrow = BigUint::zero();
        let mut rest = mask;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let a = &entries[r * n + j];
            if !a.is_zero() {
                let term = a * &dp[mask ^ (1 << j)] % modulus;
                if sign_negative {
                    borrow += term;
                } else {
                    acc += term;
                }
            }
            sign_negative = !sign_negative;
        }
        let borrow = borrow % modulus;
        dp[mask] = (acc + modulus - borrow) % modulus;
    }
    dp.swap_remove(full)
}

/// Diagonalization `M = left * diag(p^{u_1}, ..., p^{u_n}) * right (mod p^m)`
/// with `left`, `right` invertible mod `p` and nondecreasing exponents.
///
/// Only the exponents are canonical; the factors follow the deterministic
/// pivoting rule below so tests can rely on reproducible output.
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub u_exponents: Vec<u32>,
    pub left: PadicMatrix,
    pub right: PadicMatrix,
}

impl SmithDecomposition {
    /// Rebuilds `left * diag(p^u) * right` mod `p^m`.
    pub fn reconstruct(&self) -> Result<PadicMatrix> {
        let ctx = self.left.ctx().clone();
        let n = self.left.rows();
        let mut diag = vec![BigUint::zero(); n * n];
        for (i, &u) in self.u_exponents.iter().enumerate() {
            diag[i * n + i] = BigUint::from(ctx.prime()).pow(u) % ctx.modulus();
        }
        let diag = PadicMatrix::from_residues(ctx, n, n, diag)?;
        self.left.matmul(&diag)?.matmul(&self.right)
    }
}

/// Computes the diagonal form by valuation-pivoted elimination.
///
/// Pivot rule: among the remaining block, pick a minimum-valuation entry,
/// breaking ties by lowest (row, col). The pivot is scaled to exactly
/// `p^{u_t}`, then its row and column are cleared; all elementary operations
/// are mirrored into `left`/`right` as their inverses so the reconstruction
/// congruence holds at every step.
pub fn smith_decompose(matrix: &PadicMatrix) -> Result<SmithDecomposition> {
    if matrix.rows() != matrix.cols() {
        return Err(Error::InvalidArgument(format!(
            "diagonalization of a non-square {}x{} matrix",
            matrix.rows(),
            matrix.cols()
        )));
    }
    let ctx = matrix.ctx().clone();
    let n = matrix.rows();
    let m = ctx.precision();
    let modulus = ctx.modulus().clone();
    let p = BigUint::from(ctx.prime());

    let mut a = matrix.entries.clone();
    let mut left = PadicMatrix::identity(ctx.clone(), n).entries;
    let mut right = PadicMatrix::identity(ctx.clone(), n).entries;

    let val = |x: &BigUint| -> u32 {
        if x.is_zero() {
            return m;
        }
        let mut v = 0;
        let mut n = x.clone();
        while (&n % &p).is_zero() {
            n /= &p;
            v += 1;
        }
        v
    };

    let mut exponents = Vec::with_capacity(n);
    for t in 0..n {
        // Locate the minimum-valuation pivot in the trailing block.
        let mut best: Option<(u32, usize, usize)> = None;
        for r in t..n {
            for c in t..n {
                let v = val(&a[r * n + c]);
                if best.map_or(true, |(bv, _, _)| v < bv) {
                    best = Some((v, r, c));
                }
            }
        }
        let (u_t, pr, pc) = best.expect("nonempty block");
        if u_t >= m {
            // The whole trailing block is 0 mod p^m: the remaining exponents
            // are not determined by the truncation.
            return Err(Error::NotInvertible(format!(
                "trailing block vanishes mod {}^{}: exponents are not determined at this precision",
                ctx.prime(),
                m
            )));
        }
        // Row swap on A is compensated by a column swap on `left`.
        if pr != t {
            for j in 0..n {
                a.swap(pr * n + j, t * n + j);
            }
            for i in 0..n {
                left.swap(i * n + pr, i * n + t);
            }
        }
        // Column swap on A is compensated by a row swap on `right`.
        if pc != t {
            for i in 0..n {
                a.swap(i * n + pc, i * n + t);
            }
            for j in 0..n {
                right.swap(pc * n + j, t * n + j);
            }
        }
        // Normalize the pivot p^{u_t} * w to exactly p^{u_t}: scale row t of A
        // by w^{-1}, and column t of `left` by w.
        let p_pow = p.pow(u_t);
        let w = &a[t * n + t] / &p_pow;
        let w_inv = ctx
            .approx(w.clone())
            .unit_inverse()
            .expect("cofactor of the pivot power is a unit")
            .residue()
            .clone();
        for j in 0..n {
            a[t * n + j] = &a[t * n + j] * &w_inv % &modulus;
        }
        for i in 0..n {
            left[i * n + t] = &left[i * n + t] * &w % &modulus;
        }
        debug_assert_eq!(a[t * n + t], &p_pow % &modulus);
        // Clear below the pivot: row r -= coef * row t on A adds
        // coef * (column r) into column t of `left`.
        for r in (t + 1)..n {
            let entry = a[r * n + t].clone();
            if entry.is_zero() {
                continue;
            }
            let coef = &entry / &p_pow;
            for j in 0..n {
                let sub = &coef * &a[t * n + j] % &modulus;
                a[r * n + j] = (&a[r * n + j] + &modulus - sub) % &modulus;
            }
            for i in 0..n {
                let add = &coef * &left[i * n + r] % &modulus;
                left[i * n + t] = (&left[i * n + t] + add) % &modulus;
            }
        }
        // Clear to the right of the pivot: col c -= coef * col t on A adds
        // coef * (row c) into row t of `right`.
        for c in (t + 1)..n {
            let entry = a[t * n + c].clone();
            if entry.is_zero() {
                continue;
            }
            let coef = &entry / &p_pow;
            for i in 0..n {
                let sub = &coef * &a[i * n + t] % &modulus;
                a[i * n + c] = (&a[i * n + c] + &modulus - sub) % &modulus;
            }
            for j in 0..n {
                let add = &coef * &right[c * n + j] % &modulus;
                right[t * n + j] = (&right[t * n + j] + add) % &modulus;
            }
        }
        exponents.push(u_t);
    }

    debug_assert!(exponents.windows(2).all(|w| w[0] <= w[1]));
    let left = PadicMatrix { ctx: ctx.clone(), rows: n, cols: n, entries: left };
    let right = PadicMatrix { ctx, rows: n, cols: n, entries: right };
    Ok(SmithDecomposition { u_exponents: exponents, left, right })
}

/// Cache of the partial products `pi[k] = (1 - 1/p) * ... * (1 - 1/p^k)`.
///
/// These are the Haar volumes of the invertible matrices and the building
/// blocks of every closed-form volume here. `pi(k)` beyond the cached range
/// is computed on the fly.
#[derive(Clone, Debug)]
pub struct VolumeTable {
    p: u64,
    pi: Vec<ExactRational>,
}

impl VolumeTable {
    pub fn new(p: u64, capacity: u32) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidContext(format!("{p} is not a valid prime base")));
        }
        let mut pi = Vec::with_capacity(capacity as usize + 1);
        pi.push(ExactRational::one());
        for k in 1..=capacity {
            let factor = &ExactRational::one() - &ExactRational::p_pow(p, -(k as i64));
            let prev = pi.last().expect("nonempty").clone();
            pi.push(&prev * &factor);
        }
        Ok(VolumeTable { p, pi })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// `pi_k`, extending past the precomputed range when needed.
    pub fn pi(&self, k: u32) -> ExactRational {
        if let Some(v) = self.pi.get(k as usize) {
            return v.clone();
        }
        let mut acc = self.pi.last().expect("table is never empty").clone();
        for j in self.pi.len() as u32..=k {
            acc = &acc * &(&ExactRational::one() - &ExactRational::p_pow(self.p, -(j as i64)));
        }
        acc
    }
}

/// Haar volume of the invertible n x n matrices over the p-adic integers.
pub fn gl_volume(n: u32, table: &VolumeTable) -> Result<ExactRational> {
    if n == 0 {
        return Err(Error::InvalidArgument("gl_volume needs n >= 1".into()));
    }
    Ok(table.pi(n))
}

/// Haar volume of `{ |det M|_p = p^{-ell} }` among n x n matrices:
/// `pi_n * p^{-ell} * pi_{n+ell-1} / (pi_ell * pi_{n-1})`.
pub fn det_level_volume(n: u32, ell: u32, table: &VolumeTable) -> Result<ExactRational> {
    if n == 0 {
        return Err(Error::InvalidArgument("det_level_volume needs n >= 1".into()));
    }
    let p = table.prime();
    let num = &table.pi(n) * &table.pi(n + ell - 1);
    let den = &table.pi(ell) * &table.pi(n - 1);
    let scaled = &num * &ExactRational::p_pow(p, -(ell as i64));
    scaled.checked_div(&den)
}

/// Total volume of the space of k-flats in projective n-space:
/// `pi_{n+1} / (pi_{k+1} * pi_{n-k})`.
pub fn grassmannian_volume(k: u32, n: u32, table: &VolumeTable) -> Result<ExactRational> {
    if k >= n {
        return Err(Error::InvalidArgument(format!(
            "flat dimension k = {k} must satisfy 0 <= k < n = {n}"
        )));
    }
    let den = &table.pi(k + 1) * &table.pi(n - k);
    table.pi(n + 1).checked_div(&den)
}
