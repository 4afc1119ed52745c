use std::collections::HashMap;
use std::fmt;

use num::{BigUint, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::PadicMatrix;
use crate::padic::{PadicApprox, PadicContext};
use crate::sampling::{monomial_count, monomials_desc};

/// Ambient dimension `n`, flat dimension `k`, and the degrees of the defining
/// forms. A profile is admissible when the restricted coefficient count
/// matches the flat-family codimension: `sum_j C(k + d_j, d_j) = (k+1)(n-k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeProfile {
    n: u32,
    k: u32,
    degrees: Vec<u32>,
}

impl DegreeProfile {
    pub fn new(n: u32, k: u32, degrees: Vec<u32>) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidArgument(format!(
                "flat dimension k = {k} must satisfy 0 <= k < n = {n}"
            )));
        }
        if degrees.is_empty() {
            return Err(Error::InvalidArgument("degree list must be nonempty".into()));
        }
        if degrees.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument("all degrees must be >= 1".into()));
        }
        Ok(DegreeProfile { n, k, degrees })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Side length of the square Jacobian template: `(k+1)(n-k)`.
    pub fn jacobian_size(&self) -> u64 {
        (self.k as u64 + 1) * (self.n - self.k) as u64
    }

    /// Does the codimension identity hold for this profile?
    pub fn check_codim(&self) -> bool {
        let total: u64 = self
            .degrees
            .iter()
            .map(|&d| monomial_count(d, self.k))
            .sum();
        total == self.jacobian_size()
    }
}

impl fmt::Display for DegreeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ds: Vec<String> = self.degrees.iter().map(|d| d.to_string()).collect();
        write!(f, "(n={}, k={}, degrees=[{}])", self.n, self.k, ds.join(","))
    }
}

/// Free-function form of the admissibility check.
pub fn check_codim(profile: &DegreeProfile) -> bool {
    profile.check_codim()
}

/// All admissible degree multisets (as nondecreasing lists) for `(n, k)` with
/// entries bounded by `max_degree`.
pub fn admissible_profiles(n: u32, k: u32, max_degree: u32) -> Vec<DegreeProfile> {
    let target = (k as u64 + 1) * (n - k) as u64;
    let mut out = Vec::new();
    let mut stack: Vec<u32> = Vec::new();
    fn rec(
        n: u32,
        k: u32,
        max_degree: u32,
        min_degree: u32,
        remaining: u64,
        stack: &mut Vec<u32>,
        out: &mut Vec<DegreeProfile>,
    ) {
        if remaining == 0 {
            if !stack.is_empty() {
                out.push(DegreeProfile::new(n, k, stack.clone()).expect("validated"));
            }
            return;
        }
        for d in min_degree..=max_degree {
            let cost = monomial_count(d, k);
            if cost > remaining {
                break;
            }
            stack.push(d);
            rec(n, k, max_degree, d, remaining - cost, stack, out);
            stack.pop();
        }
    }
    rec(n, k, max_degree, 1, target, &mut stack, &mut out);
    out
}

/// One symbolic entry of the template.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TemplateCell {
    Zero,
    /// Index into the template's variable pool.
    Var(usize),
}

/// A distinct random variable of the template: which defining form it comes
/// from (1-based block) and its exponent vector over all `n + 1` coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateVar {
    pub block: usize,
    pub exponent: Vec<u32>,
}

impl TemplateVar {
    /// Rendering used in dumps and golden tests: `x<block>_<multiindex>`,
    /// the multi-index written as concatenated digits (dash-separated if any
    /// exponent exceeds 9).
    pub fn label(&self) -> String {
        let joined = if self.exponent.iter().all(|&e| e <= 9) {
            self.exponent.iter().map(|e| e.to_string()).collect::<String>()
        } else {
            self.exponent
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("-")
        };
        format!("x{}_{}", self.block, joined)
    }
}

/// Symbolic shape of the structured random matrix whose absolute determinant
/// expectation drives the flat count.
///
/// Rows are indexed by (block j, degree-d_j monomial u in the k+1 flat
/// coordinates, descending lex); columns by (outer coordinate s in 1..=n-k
/// major, flat coordinate i in 0..=k minor). The cell at ((j,u),(s,i)) refers
/// to the coefficient variable of block j with exponent u - e_i + e_{k+s}
/// when u_i >= 1 and is zero otherwise. Every variable therefore appears in
/// exactly k+1 cells, one per i, in k+1 distinct rows.
#[derive(Clone, Debug)]
pub struct JacobianTemplate {
    profile: DegreeProfile,
    size: usize,
    cells: Vec<TemplateCell>,
    vars: Vec<TemplateVar>,
}

/// Builds the template for an admissible profile.
///
/// The variable pool is ordered block-major, then outer coordinate, then
/// descending lex on the exponent — the same order in which the variables
/// first appear while scanning the leading row group of each block.
pub fn build_template(profile: &DegreeProfile) -> Result<JacobianTemplate> {
    if !profile.check_codim() {
        return Err(Error::InvalidArgument(format!(
            "profile {profile} is not admissible: coefficient count {} != {}",
            profile
                .degrees()
                .iter()
                .map(|&d| monomial_count(d, profile.k()))
                .sum::<u64>(),
            profile.jacobian_size()
        )));
    }
    let n = profile.n() as usize;
    let kk = profile.k() as usize + 1;
    let outer = n - profile.k() as usize;
    let size = kk * outer;

    let mut vars = Vec::new();
    let mut var_index: HashMap<(usize, Vec<u32>), usize> = HashMap::new();
    for (j, &d) in profile.degrees().iter().enumerate() {
        for s in 1..=outer {
            for head in monomials_desc(d - 1, kk) {
                let mut w = vec![0u32; n + 1];
                w[..kk].copy_from_slice(&head);
                w[kk - 1 + s] += 1;
                var_index.insert((j, w.clone()), vars.len());
                vars.push(TemplateVar { block: j + 1, exponent: w });
            }
        }
    }

    let mut cells = Vec::with_capacity(size * size);
    for (j, &d) in profile.degrees().iter().enumerate() {
        for u in monomials_desc(d, kk) {
            for s in 1..=outer {
                for i in 0..kk {
                    if u[i] >= 1 {
                        let mut w = vec![0u32; n + 1];
                        w[..kk].copy_from_slice(&u);
                        w[i] -= 1;
                        w[kk - 1 + s] += 1;
                        let idx = var_index[&(j, w)];
                        cells.push(TemplateCell::Var(idx));
                    } else {
                        cells.push(TemplateCell::Zero);
                    }
                }
            }
        }
    }
    debug_assert_eq!(cells.len(), size * size);

    Ok(JacobianTemplate {
        profile: profile.clone(),
        size,
        cells,
        vars,
    })
}

impl JacobianTemplate {
    pub fn profile(&self) -> &DegreeProfile {
        &self.profile
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[TemplateVar] {
        &self.vars
    }

    pub fn cells(&self) -> &[TemplateCell] {
        &self.cells
    }

    pub fn cell(&self, row: usize, col: usize) -> TemplateCell {
        assert!(row < self.size && col < self.size, "template index out of range");
        self.cells[row * self.size + col]
    }

    /// Positions `(row, col)` where variable `idx` occurs.
    pub fn occurrences(&self, idx: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.size {
            for c in 0..self.size {
                if self.cells[r * self.size + c] == TemplateCell::Var(idx) {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Fills the template with one tagged value per variable.
    pub fn instantiate(&self, draws: &[PadicApprox]) -> Result<PadicMatrix> {
        if draws.len() != self.vars.len() {
            return Err(Error::InvalidArgument(format!(
                "template has {} variables, got {} draws",
                self.vars.len(),
                draws.len()
            )));
        }
        let Some(first) = draws.first() else {
            return Err(Error::InvalidArgument("template has no variables".into()));
        };
        let ctx = first.ctx().clone();
        for d in draws {
            if d.ctx() != &ctx {
                return Err(Error::ContextMismatch(
                    "instantiation draws must share one context".into(),
                ));
            }
        }
        let residues = self.instantiate_residues(draws, &ctx);
        PadicMatrix::from_residues(ctx, self.size, self.size, residues)
    }

    fn instantiate_residues(&self, draws: &[PadicApprox], _ctx: &PadicContext) -> Vec<BigUint> {
        self.cells
            .iter()
            .map(|c| match c {
                TemplateCell::Zero => BigUint::zero(),
                TemplateCell::Var(i) => draws[*i].residue().clone(),
            })
            .collect()
    }

    /// Word-sized instantiation into a caller-provided buffer (hot path for
    /// the enumeration and Monte Carlo engines).
    pub fn instantiate_u64_into(&self, draws: &[u64], out: &mut [u64]) {
        debug_assert_eq!(draws.len(), self.vars.len());
        debug_assert_eq!(out.len(), self.size * self.size);
        for (slot, c) in out.iter_mut().zip(&self.cells) {
            *slot = match c {
                TemplateCell::Zero => 0,
                TemplateCell::Var(i) => draws[*i],
            };
        }
    }

    /// JSON dump of the shape: variables by label, cells as `"0"` or the
    /// variable label.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<String>> = (0..self.size)
            .map(|r| {
                (0..self.size)
                    .map(|c| match self.cell(r, c) {
                        TemplateCell::Zero => "0".to_string(),
                        TemplateCell::Var(i) => self.vars[i].label(),
                    })
                    .collect()
            })
            .collect();
        json!({
            "n": self.profile.n(),
            "k": self.profile.k(),
            "degrees": self.profile.degrees(),
            "size": self.size,
            "var_count": self.vars.len(),
            "variables": self.vars.iter().map(|v| v.label()).collect::<Vec<_>>(),
            "cells": rows,
        })
    }
}
