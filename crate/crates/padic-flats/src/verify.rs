//! Identity-verification suites: each suite re-derives a family of closed
//! forms by independent brute-force enumeration and reports one record per
//! checked identity, suitable for emission as JSON lines.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use crate::counting::{
    self, a_count_formula, b_count_formula, count_a, count_b, count_det_level, count_gl,
    count_singular_2x2, fiber_formula_3x2, fiber_formula_4x3, gl_count_formula, minor_fibers_3x2,
    minor_fibers_4x3, singular_2x2_formula, MinorMapReport, ProjectivePoint,
};
use crate::error::{Error, Result};
use crate::jacobian::{admissible_profiles, build_template, DegreeProfile};
use crate::linalg::{det_level_volume, det_mod_u64, gl_volume, VolumeTable};
use crate::padic::{is_prime_u64, padic_of_rational, PadicContext};
use crate::rational::ExactRational;
use crate::sampling::SeededStream;
use crate::volkenborn::{cubic_det_raw_formula, volkenborn_partial, PolynomialIntegrand};

/// One verified identity: an independently computed value (`brute`), the
/// closed form it must equal (`formula`), and whether they agreed.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityRecord {
    pub lemma: String,
    pub params: serde_json::Value,
    pub brute: String,
    pub formula: String,
    pub pass: bool,
}

impl IdentityRecord {
    /// Record whose pass flag is literal agreement of the rendered values.
    fn check(lemma: &str, params: serde_json::Value, brute: String, formula: String) -> Self {
        let pass = brute == formula;
        IdentityRecord {
            lemma: lemma.into(),
            params,
            brute,
            formula,
            pass,
        }
    }
}

/// The verification suites exposed on the command line.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Suite {
    Volumes,
    Counts,
    Fibers,
    Jacobian,
    Volkenborn,
    All,
}

impl Suite {
    fn runs(self, which: Suite) -> bool {
        self == Suite::All || self == which
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volumes" => Ok(Suite::Volumes),
            "counts" => Ok(Suite::Counts),
            "fibers" => Ok(Suite::Fibers),
            "jacobian" => Ok(Suite::Jacobian),
            "volkenborn" => Ok(Suite::Volkenborn),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!(
                "unknown suite '{other}' (expected volumes|counts|fibers|jacobian|volkenborn|all)"
            ))),
        }
    }
}

/// Render a rational without the `/1` tail on integers.
fn fmt_rat(r: &ExactRational) -> String {
    if r.denom() == &num::BigInt::from(1) {
        r.numer().to_string()
    } else {
        r.fraction_string()
    }
}

/// Whether `p^e` stays within `guard`.
fn fits(p: u64, e: u64, guard: u64) -> bool {
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc = acc.saturating_mul(p as u128);
        if acc > guard as u128 {
            return false;
        }
    }
    true
}

/// Run every identity in the chosen suite for the given prime (every prime in
/// {2, 3, 5} when `p_filter` is absent), skipping parameter tuples whose
/// enumeration would exceed `guard`.
pub fn run_suite(suite: Suite, p_filter: Option<u64>, guard: u64) -> Result<Vec<IdentityRecord>> {
    if let Some(p) = p_filter {
        if !is_prime_u64(p) {
            return Err(Error::InvalidArgument(format!("{p} is not prime")));
        }
    }
    let primes: Vec<u64> = match p_filter {
        Some(p) => vec![p],
        None => vec![2, 3, 5],
    };
    let mut out = Vec::new();
    if suite.runs(Suite::Volumes) {
        for &p in &primes {
            volumes_suite(p, guard, &mut out)?;
        }
    }
    if suite.runs(Suite::Counts) {
        for &p in &primes {
            counts_suite(p, guard, &mut out)?;
        }
    }
    if suite.runs(Suite::Fibers) {
        for &p in &primes {
            fibers_suite(p, guard, &mut out)?;
        }
    }
    if suite.runs(Suite::Jacobian) {
        jacobian_structure_suite(&mut out)?;
        for &p in &primes {
            jacobian_det_suite(p, &mut out)?;
        }
    }
    if suite.runs(Suite::Volkenborn) {
        for &p in &primes {
            volkenborn_suite(p, guard, &mut out)?;
        }
    }
    Ok(out)
}

/// Matrix counts over Z/p^m against the Haar-volume closed forms.
fn volumes_suite(p: u64, guard: u64, out: &mut Vec<IdentityRecord>) -> Result<()> {
    let table = VolumeTable::new(p, 4)?;
    for n in 1..=2u32 {
        for m in 1..=2u32 {
            if !fits(p, (m * n * n) as u64, guard) {
                continue;
            }
            let total_scale = ExactRational::p_pow(p, (m * n * n) as i64);
            let gl = count_gl(n, p, m, guard)?;
            let vol_side = &gl_volume(n, &table)? * &total_scale;
            out.push(IdentityRecord::check(
                "gl_count_equals_scaled_volume",
                json!({ "p": p, "n": n, "m": m }),
                gl.to_string(),
                fmt_rat(&vol_side),
            ));
            out.push(IdentityRecord::check(
                "gl_count_closed_form",
                json!({ "p": p, "n": n, "m": m }),
                gl.to_string(),
                gl_count_formula(n, p, m).to_string(),
            ));
            let mut level_sum = 0u64;
            for ell in 0..m {
                let level = count_det_level(n, p, m, ell, guard)?;
                level_sum += level;
                let vol_side = &det_level_volume(n, ell, &table)? * &total_scale;
                out.push(IdentityRecord::check(
                    "det_level_count_equals_scaled_volume",
                    json!({ "p": p, "n": n, "m": m, "ell": ell }),
                    level.to_string(),
                    fmt_rat(&vol_side),
                ));
                if ell == 0 {
                    out.push(IdentityRecord::check(
                        "det_level_zero_equals_gl_count",
                        json!({ "p": p, "n": n, "m": m }),
                        level.to_string(),
                        gl.to_string(),
                    ));
                }
            }
            if n == 2 {
                // Levels 0..m-1 plus the det = 0 (mod p^m) class exhaust all
                // 2x2 matrices; the latter is counted by an independent scan.
                let singular = count_singular_2x2(p, m, guard)?;
                out.push(IdentityRecord::check(
                    "det_level_mass_2x2",
                    json!({ "p": p, "m": m }),
                    (level_sum + singular).to_string(),
                    p.pow(4 * m).to_string(),
                ));
            }
        }
    }
    Ok(())
}

/// Unit-tuple and singular-matrix counts against their closed forms.
fn counts_suite(p: u64, guard: u64, out: &mut Vec<IdentityRecord>) -> Result<()> {
    for k in 1..=3u32 {
        if !fits(p, 3 * k as u64, guard) {
            continue;
        }
        out.push(IdentityRecord::check(
            "unit_triple_conic_count",
            json!({ "p": p, "k": k }),
            count_a(k, p, guard)?.to_string(),
            a_count_formula(k, p).to_string(),
        ));
    }
    for k in 1..=2u32 {
        if !fits(p, 4 * k as u64, guard) {
            continue;
        }
        out.push(IdentityRecord::check(
            "unit_quadruple_rank_one_count",
            json!({ "p": p, "k": k }),
            count_b(k, p, guard)?.to_string(),
            b_count_formula(k, p).to_string(),
        ));
    }
    for n in 1..=2u32 {
        if !fits(p, 4 * n as u64, guard) {
            continue;
        }
        out.push(IdentityRecord::check(
            "singular_2x2_count",
            json!({ "p": p, "n": n }),
            count_singular_2x2(p, n, guard)?.to_string(),
            singular_2x2_formula(p, n).to_string(),
        ));
    }
    Ok(())
}

/// Canonical projective points mod p^n on `dim` coordinates, by direct
/// canonicalization of every nonzero tuple.
fn projective_census(p: u64, n: u32, dim: usize) -> usize {
    let modulus = p.pow(n);
    let mut seen: BTreeSet<ProjectivePoint> = BTreeSet::new();
    counting::for_each_tuple(dim, modulus, |tuple| {
        if tuple.iter().any(|&x| x != 0) {
            let pt = ProjectivePoint::new(p, n, tuple.to_vec()).expect("nonzero tuple");
            seen.insert(pt);
        }
    });
    seen.len()
}

fn fiber_records(
    name: &str,
    p: u64,
    n: u32,
    report: &MinorMapReport,
    formula: impl Fn(u32) -> u64,
    out: &mut Vec<IdentityRecord>,
) {
    // Group fibers by the minimal coordinate valuation of the target; the
    // fiber size must be constant on each group and equal the closed form.
    let mut by_m1: BTreeMap<u32, BTreeSet<u64>> = BTreeMap::new();
    for (pt, &size) in &report.fiber_sizes {
        by_m1.entry(pt.min_valuation()).or_default().insert(size);
    }
    for (m1, sizes) in &by_m1 {
        let brute = if sizes.len() == 1 {
            sizes.iter().next().expect("nonempty").to_string()
        } else {
            format!("inconsistent sizes {sizes:?}")
        };
        out.push(IdentityRecord::check(
            &format!("{name}_fiber_size"),
            json!({ "p": p, "n": n, "m1": m1 }),
            brute,
            formula(*m1).to_string(),
        ));
    }
    let fiber_mass: u64 = report.fiber_sizes.values().sum();
    out.push(IdentityRecord::check(
        &format!("{name}_mass"),
        json!({ "p": p, "n": n }),
        fiber_mass.to_string(),
        report.domain_size.to_string(),
    ));
    let dim = report
        .fiber_sizes
        .keys()
        .next()
        .map(|pt| pt.coords().len())
        .unwrap_or(0);
    out.push(IdentityRecord::check(
        &format!("{name}_surjective"),
        json!({ "p": p, "n": n }),
        report.target_count().to_string(),
        projective_census(p, n, dim).to_string(),
    ));
}

/// Minor-map fiber censuses against the closed fiber-size formulas.
fn fibers_suite(p: u64, guard: u64, out: &mut Vec<IdentityRecord>) -> Result<()> {
    for n in 1..=2u32 {
        if !fits(p, 6 * n as u64, guard) {
            continue;
        }
        let report = minor_fibers_3x2(p, n, guard)?;
        fiber_records("minor_map_3x2", p, n, &report, |m1| fiber_formula_3x2(p, n, m1), out);
    }
    for n in 1..=2u32 {
        if !fits(p, 12 * n as u64, guard) {
            continue;
        }
        let report = minor_fibers_4x3(p, n, guard)?;
        fiber_records("minor_map_4x3", p, n, &report, |m1| fiber_formula_4x3(p, n, m1), out);
    }
    Ok(())
}

/// Occurrence structure of every admissible template in a small range: each
/// variable appears exactly k+1 times, all in distinct rows.
fn jacobian_structure_suite(out: &mut Vec<IdentityRecord>) -> Result<()> {
    for n in 1..=4u32 {
        for k in 0..n.min(3) {
            let cap = (2 * n).saturating_sub(3).max(1);
            for profile in admissible_profiles(n, k, cap) {
                let t = build_template(&profile)?;
                let mut counts: BTreeSet<(usize, usize)> = BTreeSet::new();
                for idx in 0..t.var_count() {
                    let occ = t.occurrences(idx);
                    let rows: BTreeSet<usize> = occ.iter().map(|&(r, _)| r).collect();
                    counts.insert((occ.len(), rows.len()));
                }
                let expected = (profile.k() as usize + 1, profile.k() as usize + 1);
                out.push(IdentityRecord::check(
                    "template_occurrence_structure",
                    json!({
                        "n": profile.n(),
                        "k": profile.k(),
                        "degrees": profile.degrees(),
                    }),
                    format!("{counts:?}"),
                    format!("{:?}", BTreeSet::from([expected])),
                ));
            }
        }
    }
    Ok(())
}

fn det3_stack(q: &[u64], rows: [usize; 3], modulus: u64) -> u64 {
    counting::det3_mod(
        [
            [q[3 * rows[0]], q[3 * rows[0] + 1], q[3 * rows[0] + 2]],
            [q[3 * rows[1]], q[3 * rows[1] + 1], q[3 * rows[1] + 2]],
            [q[3 * rows[2]], q[3 * rows[2] + 1], q[3 * rows[2] + 2]],
        ],
        modulus,
    )
}

/// Determinant polynomial identities for the two structured templates, on
/// seeded random instantiations mod p^3.
fn jacobian_det_suite(p: u64, out: &mut Vec<IdentityRecord>) -> Result<()> {
    const DRAWS: usize = 200;
    let m = 3u32;
    let modulus = p.pow(m);

    // 4x4 template of a cubic surface: det = k2^2 - k1 k3 on the pooled
    // coefficients q0..q5 with k1 = q0 q4 - q1 q3, k2 = q0 q5 - q2 q3,
    // k3 = q1 q5 - q2 q4.
    let cubic = build_template(&DegreeProfile::new(3, 1, vec![3])?)?;
    let mut stream = SeededStream::new(0x1DEA);
    let mut buf = vec![0u64; 16];
    let mut matched = 0usize;
    for _ in 0..DRAWS {
        let q: Vec<u64> = (0..6).map(|_| stream.draw_residue_u64(p, m)).collect();
        cubic.instantiate_u64_into(&q, &mut buf);
        let det = det_mod_u64(&buf, 4, modulus);
        let k1 = counting::sub_mod(
            counting::mul_mod(q[0], q[4], modulus),
            counting::mul_mod(q[1], q[3], modulus),
            modulus,
        );
        let k2 = counting::sub_mod(
            counting::mul_mod(q[0], q[5], modulus),
            counting::mul_mod(q[2], q[3], modulus),
            modulus,
        );
        let k3 = counting::sub_mod(
            counting::mul_mod(q[1], q[5], modulus),
            counting::mul_mod(q[2], q[4], modulus),
            modulus,
        );
        let rhs = counting::sub_mod(
            counting::mul_mod(k2, k2, modulus),
            counting::mul_mod(k1, k3, modulus),
            modulus,
        );
        if det == rhs {
            matched += 1;
        }
    }
    out.push(IdentityRecord::check(
        "cubic_template_det_identity",
        json!({ "p": p, "m": m, "draws": DRAWS }),
        format!("{matched}/{DRAWS}"),
        format!("{DRAWS}/{DRAWS}"),
    ));

    // 6x6 template of two quadrics in 4-space: det = k1 k4 - k2 k3 where k_r
    // drops row r of the 4x3 stack with rows (q0,q2,q4), (q1,q3,q5),
    // (q6,q8,q10), (q7,q9,q11).
    let quadrics = build_template(&DegreeProfile::new(4, 1, vec![2, 2])?)?;
    let mut stream = SeededStream::new(0x2DEA);
    let mut buf = vec![0u64; 36];
    let mut matched = 0usize;
    for _ in 0..DRAWS {
        let q: Vec<u64> = (0..12).map(|_| stream.draw_residue_u64(p, m)).collect();
        quadrics.instantiate_u64_into(&q, &mut buf);
        let det = det_mod_u64(&buf, 6, modulus);
        let stack = [
            q[0], q[2], q[4],
            q[1], q[3], q[5],
            q[6], q[8], q[10],
            q[7], q[9], q[11],
        ];
        let minor = |drop: usize| {
            let kept: Vec<usize> = (0..4).filter(|&r| r != drop).collect();
            det3_stack(&stack, [kept[0], kept[1], kept[2]], modulus)
        };
        let (k1, k2, k3, k4) = (minor(0), minor(1), minor(2), minor(3));
        let rhs = counting::sub_mod(
            counting::mul_mod(k1, k4, modulus),
            counting::mul_mod(k2, k3, modulus),
            modulus,
        );
        if det == rhs {
            matched += 1;
        }
    }
    out.push(IdentityRecord::check(
        "quadrics_template_det_identity",
        json!({ "p": p, "m": m, "draws": DRAWS }),
        format!("{matched}/{DRAWS}"),
        format!("{DRAWS}/{DRAWS}"),
    ));
    Ok(())
}

/// Raw-sum closed form and p-adic convergence of the 6-variable determinant
/// integrand, at every level whose enumeration fits the guard.
fn volkenborn_suite(p: u64, guard: u64, out: &mut Vec<IdentityRecord>) -> Result<()> {
    let f = PolynomialIntegrand::cubic_det();
    let thirty_six = ExactRational::from_int(36);
    let minus_four = ExactRational::from_int(-4);
    for n in 1..=3u32 {
        if !fits(p, 6 * n as u64, guard) {
            continue;
        }
        let partial = volkenborn_partial(&f, p, n, guard)?;
        let raw = &partial.normalized_sum * &ExactRational::p_pow(p, 6 * n as i64);
        out.push(IdentityRecord::check(
            "volkenborn_raw_sum_closed_form",
            json!({ "p": p, "level": n }),
            fmt_rat(&raw),
            fmt_rat(&cubic_det_raw_formula(p, n)),
        ));

        // Convergence to -1/9 after clearing the denominator: the integer
        // 36 * partial + 4 must be divisible by p^n.
        let cleared = &(&thirty_six * &partial.normalized_sum) - &minus_four;
        let v = cleared.valuation(p);
        let pass = match v {
            None => true,
            Some(v) => v >= n as i64,
        };
        out.push(IdentityRecord {
            lemma: "volkenborn_convergence_rate".into(),
            params: json!({ "p": p, "level": n }),
            brute: match v {
                None => "exact".into(),
                Some(v) => format!("valuation {v}"),
            },
            formula: format!("valuation >= {n}"),
            pass,
        });

        // Same congruence through the truncated-arithmetic layer.
        let ctx = PadicContext::new(p, n)?;
        let lhs = padic_of_rational(&(&thirty_six * &partial.normalized_sum), &ctx)?;
        let rhs = padic_of_rational(&minus_four, &ctx)?;
        out.push(IdentityRecord::check(
            "volkenborn_truncated_congruence",
            json!({ "p": p, "level": n }),
            lhs.residue().to_string(),
            rhs.residue().to_string(),
        ));
    }
    Ok(())
}
