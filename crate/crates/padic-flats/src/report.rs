//! Machine-readable result records: JSON-line records for expectation and
//! Volkenborn runs, and CSV rows for closed-form prime scans. Rationals are
//! serialized as exact `"num/den"` strings; decimal fields are convenience
//! renderings with 12 significant digits and are lossy.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expectation::{closed_form, reference_closed_form, ClosedForm, DetExpectation, FlatCountResult};
use crate::padic::is_prime_u64;
use crate::rational::ExactRational;
use crate::volkenborn::VolkenbornPartial;

/// One expected-flat-count computation, flattened for emission.
#[derive(Clone, Debug, Serialize)]
pub struct FlatCountRecord {
    pub p: u64,
    pub n: u32,
    pub k: u32,
    pub degrees: Vec<u32>,
    pub precision: u32,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub grassmannian_factor: String,
    pub det_lo: String,
    pub det_hi: String,
    pub expected_lo: String,
    pub expected_hi: String,
    pub expected_lo_decimal: String,
    pub expected_hi_decimal: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_decimal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

/// Flatten a result and, when the profile has a known closed form, attach the
/// reference value and a pass flag: the reference must lie inside the
/// expected-count bracket, or within four standard errors of its midpoint for
/// Monte Carlo runs.
pub fn flat_count_record(result: &FlatCountResult) -> FlatCountRecord {
    let (method, samples, seed, std_error) = match &result.det_expectation {
        DetExpectation::Exact(_) => ("exact".to_string(), None, None, None),
        DetExpectation::Mc(e) => (
            "mc".to_string(),
            Some(e.samples),
            Some(e.seed),
            Some(result.expected_std_error),
        ),
    };
    let reference = reference_closed_form(&result.profile).map(|case| closed_form(&case, result.p));
    let pass = reference.as_ref().map(|r| {
        if result.expected_count.contains(r) {
            return true;
        }
        match std_error {
            Some(se) if se > 0.0 => {
                (result.expected_count.midpoint().to_f64() - r.to_f64()).abs() <= 4.0 * se
            }
            _ => false,
        }
    });
    FlatCountRecord {
        p: result.p,
        n: result.profile.n(),
        k: result.profile.k(),
        degrees: result.profile.degrees().to_vec(),
        precision: result.precision,
        method,
        samples,
        seed,
        grassmannian_factor: result.grassmannian_factor.fraction_string(),
        det_lo: result.det_expectation.bracket().lo().fraction_string(),
        det_hi: result.det_expectation.bracket().hi().fraction_string(),
        expected_lo: result.expected_count.lo().fraction_string(),
        expected_hi: result.expected_count.hi().fraction_string(),
        expected_lo_decimal: result.expected_count.lo().decimal_string(),
        expected_hi_decimal: result.expected_count.hi().decimal_string(),
        expected_std_error: std_error,
        reference: reference.as_ref().map(ExactRational::fraction_string),
        reference_decimal: reference.as_ref().map(ExactRational::decimal_string),
        pass,
    }
}

/// A normalized-sum convergence run against a fixed p-adic target.
#[derive(Clone, Debug, Serialize)]
pub struct VolkenbornRecord {
    pub integrand: String,
    pub p: u64,
    pub levels: Vec<u32>,
    pub partials: Vec<String>,
    pub target: String,
    pub pass: bool,
}

pub fn volkenborn_record(
    integrand: &str,
    p: u64,
    partials: &[VolkenbornPartial],
    target: &ExactRational,
    pass: bool,
) -> VolkenbornRecord {
    VolkenbornRecord {
        integrand: integrand.to_string(),
        p,
        levels: partials.iter().map(|v| v.level).collect(),
        partials: partials
            .iter()
            .map(|v| v.normalized_sum.fraction_string())
            .collect(),
        target: target.fraction_string(),
        pass,
    }
}

/// One row of the closed-form scan table for a single prime.
#[derive(Clone, Debug)]
pub struct ScanRow {
    pub p: u64,
    pub cubic: ExactRational,
    pub quadrics: ExactRational,
    pub lower_bound: ExactRational,
    pub limsup_bound: ExactRational,
}

/// Closed-form table rows for the given primes. The lower bound is the
/// cubic-surface instance (k = 1, n = 3) of the general bound.
pub fn scan_rows(primes: &[u64]) -> Result<Vec<ScanRow>> {
    for &p in primes {
        if !is_prime_u64(p) {
            return Err(Error::InvalidArgument(format!("{p} is not prime")));
        }
    }
    Ok(primes
        .iter()
        .map(|&p| ScanRow {
            p,
            cubic: closed_form(&ClosedForm::Cubic, p),
            quadrics: closed_form(&ClosedForm::Quadrics, p),
            lower_bound: closed_form(&ClosedForm::LowerBound { k: 1, n: 3 }, p),
            limsup_bound: closed_form(&ClosedForm::LimsupBound, p),
        })
        .collect())
}

/// CSV rendering of scan rows (header + one line per prime).
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from(
        "p,cubic,cubic_decimal,quadrics,lower_bound,limsup_bound,limsup_decimal\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.p,
            row.cubic.fraction_string(),
            row.cubic.decimal_string(),
            row.quadrics.fraction_string(),
            row.lower_bound.fraction_string(),
            row.limsup_bound.fraction_string(),
            row.limsup_bound.decimal_string(),
        ));
    }
    out
}

/// Primes in `[lo, hi]`, ascending.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    (lo.max(2)..=hi).filter(|&x| is_prime_u64(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::{expected_flats, MethodSpec, DEFAULT_GUARD};
    use crate::jacobian::DegreeProfile;
    use crate::volkenborn::{volkenborn_partial, PolynomialIntegrand};

    #[test]
    fn exact_cubic_record_carries_reference() {
        let profile = DegreeProfile::new(3, 1, vec![3]).unwrap();
        let result = expected_flats(
            &profile,
            2,
            &MethodSpec::Exact { precision: 2 },
            DEFAULT_GUARD,
        )
        .unwrap();
        let record = flat_count_record(&result);
        assert_eq!(record.method, "exact");
        assert_eq!(record.reference.as_deref(), Some("35/31"));
        assert_eq!(record.pass, Some(true));
        assert_eq!(record.grassmannian_factor, "35/16");
        assert!(record.samples.is_none());
        let line = serde_json::to_string(&record).unwrap();
        assert!(line.contains("\"expected_lo\""));
        assert!(!line.contains("\"samples\""));
    }

    #[test]
    fn mc_points_record_passes_within_four_se() {
        let profile = DegreeProfile::new(2, 0, vec![1, 1]).unwrap();
        let result = expected_flats(
            &profile,
            3,
            &MethodSpec::Mc {
                precision: 12,
                samples: 2000,
                seed: 7,
            },
            DEFAULT_GUARD,
        )
        .unwrap();
        let record = flat_count_record(&result);
        assert_eq!(record.method, "mc");
        assert_eq!(record.samples, Some(2000));
        assert_eq!(record.seed, Some(7));
        assert_eq!(record.reference.as_deref(), Some("1/1"));
        assert_eq!(record.pass, Some(true));
        assert!(record.expected_std_error.unwrap() > 0.0);
    }

    #[test]
    fn unknown_profile_has_no_reference() {
        let profile = DegreeProfile::new(4, 1, vec![1, 3]).unwrap();
        let result = expected_flats(
            &profile,
            2,
            &MethodSpec::Exact { precision: 2 },
            DEFAULT_GUARD,
        )
        .unwrap();
        let record = flat_count_record(&result);
        assert!(record.reference.is_none());
        assert!(record.pass.is_none());
    }

    #[test]
    fn volkenborn_record_round_trips() {
        let f = PolynomialIntegrand::cubic_det();
        let partials: Vec<_> = (1..=2)
            .map(|n| volkenborn_partial(&f, 2, n, DEFAULT_GUARD).unwrap())
            .collect();
        let target = ExactRational::ratio(-1, 9).unwrap();
        let record = volkenborn_record("cubic-det", 2, &partials, &target, false);
        assert_eq!(record.levels, vec![1, 2]);
        assert_eq!(record.partials[0], "1/2");
        assert_eq!(record.target, "-1/9");
        let parsed: serde_json::Value =
            serde_json::from_str(&serde_json::to_string(&record).unwrap()).unwrap();
        assert_eq!(parsed["integrand"], "cubic-det");
    }

    #[test]
    fn scan_rows_and_csv() {
        let primes = primes_in_range(2, 101);
        assert_eq!(primes.len(), 26);
        assert_eq!(primes[0], 2);
        assert_eq!(*primes.last().unwrap(), 101);
        let rows = scan_rows(&primes).unwrap();
        for row in &rows {
            assert!(row.quadrics.is_one());
            assert!(row.cubic <= row.limsup_bound);
            assert!(row.lower_bound <= row.cubic);
        }
        let tail = rows.last().unwrap();
        assert!((tail.cubic.to_f64() - 1.0).abs() < 1e-3);
        let csv = scan_csv(&rows);
        assert!(csv.starts_with("p,cubic,"));
        assert!(csv.contains("2,35/31,"));
        assert_eq!(csv.lines().count(), 27);
    }

    #[test]
    fn composite_scan_entry_rejected() {
        assert!(scan_rows(&[2, 4]).is_err());
    }
}
