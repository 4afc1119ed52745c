//! Python bindings for the padic-flats library: exact rationals, truncated
//! p-adic arithmetic, Jacobian templates, flat-count expectations, Volkenborn
//! partial sums, and the identity-verification suites.

use num_bigint::{BigInt, BigUint};
use pyo3::exceptions::{PyValueError, PyZeroDivisionError};
use pyo3::prelude::*;
use pyo3::pyclass::CompareOp;
use pyo3::types::PyType;

use padic_flats::expectation::{
    closed_form, expected_flats, ClosedForm, MethodSpec, DEFAULT_GUARD,
};
use padic_flats::jacobian::{
    admissible_profiles, build_template, DegreeProfile, JacobianTemplate, TemplateCell,
};
use padic_flats::linalg::{self, VolumeTable};
use padic_flats::padic::{is_prime_u64, padic_of_rational, PadicApprox, PadicContext, Valuation};
use padic_flats::report::flat_count_record;
use padic_flats::verify::{run_suite, Suite};
use padic_flats::volkenborn::{padic_limit_check, volkenborn_partial, PolynomialIntegrand};
use padic_flats::{ExactRational, FlatCountResult};

fn err(e: padic_flats::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Arbitrary-precision rational number with exact arithmetic.
#[pyclass(name = "Rational", frozen)]
#[derive(Clone)]
struct PyRational(ExactRational);

#[pymethods]
impl PyRational {
    #[new]
    #[pyo3(signature = (numer, denom=None))]
    fn new(numer: BigInt, denom: Option<BigInt>) -> PyResult<Self> {
        let denom = denom.unwrap_or_else(|| BigInt::from(1));
        ExactRational::new(numer, denom).map(PyRational).map_err(err)
    }

    /// Parse "a/b" or "a".
    #[classmethod]
    fn parse(_cls: &Bound<'_, PyType>, text: &str) -> PyResult<Self> {
        let (n, d) = match text.split_once('/') {
            Some((n, d)) => (n, d),
            None => (text, "1"),
        };
        let numer: BigInt = n.trim().parse().map_err(|_| {
            PyValueError::new_err(format!("cannot parse numerator from {text:?}"))
        })?;
        let denom: BigInt = d.trim().parse().map_err(|_| {
            PyValueError::new_err(format!("cannot parse denominator from {text:?}"))
        })?;
        ExactRational::new(numer, denom).map(PyRational).map_err(err)
    }

    #[getter]
    fn numer(&self) -> BigInt {
        self.0.numer().clone()
    }

    #[getter]
    fn denom(&self) -> BigInt {
        self.0.denom().clone()
    }

    fn to_float(&self) -> f64 {
        self.0.to_f64()
    }

    /// Decimal rendering with 12 significant digits.
    fn decimal(&self) -> String {
        self.0.decimal_string()
    }

    /// Exponent of `p` in this number, or None for zero.
    fn valuation(&self, p: u64) -> PyResult<Option<i64>> {
        if !is_prime_u64(p) {
            return Err(PyValueError::new_err(format!("{p} is not prime")));
        }
        Ok(self.0.valuation(p))
    }

    /// The p-adic absolute value, as an exact rational.
    fn abs_p(&self, p: u64) -> PyResult<PyRational> {
        if !is_prime_u64(p) {
            return Err(PyValueError::new_err(format!("{p} is not prime")));
        }
        Ok(PyRational(self.0.abs_p(p)))
    }

    fn __str__(&self) -> String {
        self.0.fraction_string()
    }

    fn __repr__(&self) -> String {
        format!("Rational({})", self.0.fraction_string())
    }

    fn __add__(&self, rhs: &PyRational) -> PyRational {
        PyRational(&self.0 + &rhs.0)
    }

    fn __sub__(&self, rhs: &PyRational) -> PyRational {
        PyRational(&self.0 - &rhs.0)
    }

    fn __mul__(&self, rhs: &PyRational) -> PyRational {
        PyRational(&self.0 * &rhs.0)
    }

    fn __truediv__(&self, rhs: &PyRational) -> PyResult<PyRational> {
        self.0
            .checked_div(&rhs.0)
            .map(PyRational)
            .map_err(|_| PyZeroDivisionError::new_err("division by zero"))
    }

    fn __neg__(&self) -> PyRational {
        PyRational(-&self.0)
    }

    fn __abs__(&self) -> PyRational {
        PyRational(self.0.abs())
    }

    fn __richcmp__(&self, rhs: &PyRational, op: CompareOp) -> bool {
        op.matches(self.0.cmp(&rhs.0))
    }

    fn __hash__(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.0.fraction_string().hash(&mut h);
        h.finish()
    }
}

/// Arithmetic context: residues mod p^m for a prime p and precision m >= 1.
#[pyclass(name = "Context", frozen)]
#[derive(Clone)]
struct PyContext(PadicContext);

#[pymethods]
impl PyContext {
    #[new]
    fn new(p: u64, m: u32) -> PyResult<Self> {
        PadicContext::new(p, m).map(PyContext).map_err(err)
    }

    #[getter]
    fn prime(&self) -> u64 {
        self.0.prime()
    }

    #[getter]
    fn precision(&self) -> u32 {
        self.0.precision()
    }

    #[getter]
    fn modulus(&self) -> BigUint {
        self.0.modulus().clone()
    }

    /// The element with the given residue mod p^m.
    fn of(&self, residue: BigUint) -> PyPadic {
        PyPadic(self.0.approx(residue))
    }

    /// Embed a rational with denominator prime to p.
    fn of_rational(&self, x: &PyRational) -> PyResult<PyPadic> {
        padic_of_rational(&x.0, &self.0).map(PyPadic).map_err(err)
    }

    fn zero(&self) -> PyPadic {
        PyPadic(self.0.zero())
    }

    fn one(&self) -> PyPadic {
        PyPadic(self.0.one())
    }

    fn __repr__(&self) -> String {
        format!("Context(p={}, m={})", self.0.prime(), self.0.precision())
    }
}

/// An element known to precision m: a residue mod p^m.
#[pyclass(name = "Padic", frozen)]
#[derive(Clone)]
struct PyPadic(PadicApprox);

#[pymethods]
impl PyPadic {
    #[getter]
    fn residue(&self) -> BigUint {
        self.0.residue().clone()
    }

    #[getter]
    fn prime(&self) -> u64 {
        self.0.ctx().prime()
    }

    #[getter]
    fn precision(&self) -> u32 {
        self.0.ctx().precision()
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// ("finite", v) when the valuation is determined, ("at_least", b) when
    /// only a lower bound is visible at this precision.
    fn valuation(&self) -> (String, u32) {
        match self.0.valuation() {
            Valuation::Finite(v) => ("finite".into(), v),
            Valuation::AtLeast(b) => ("at_least".into(), b),
        }
    }

    /// Bracket [lo, hi] on |x|_p as exact rationals.
    fn abs_bounds(&self) -> (PyRational, PyRational) {
        let b = self.0.abs_p();
        (PyRational(b.lo().clone()), PyRational(b.hi().clone()))
    }

    fn inverse(&self) -> PyResult<PyPadic> {
        self.0.unit_inverse().map(PyPadic).map_err(err)
    }

    fn reduce(&self, m: u32) -> PyResult<PyPadic> {
        self.0.reduce_precision(m).map(PyPadic).map_err(err)
    }

    fn __add__(&self, rhs: &PyPadic) -> PyResult<PyPadic> {
        same_ctx(&self.0, &rhs.0)?;
        Ok(PyPadic(self.0.add(&rhs.0)))
    }

    fn __sub__(&self, rhs: &PyPadic) -> PyResult<PyPadic> {
        same_ctx(&self.0, &rhs.0)?;
        Ok(PyPadic(self.0.sub(&rhs.0)))
    }

    fn __mul__(&self, rhs: &PyPadic) -> PyResult<PyPadic> {
        same_ctx(&self.0, &rhs.0)?;
        Ok(PyPadic(self.0.mul(&rhs.0)))
    }

    fn __neg__(&self) -> PyPadic {
        PyPadic(self.0.neg())
    }

    fn __richcmp__(&self, rhs: &PyPadic, op: CompareOp) -> PyResult<bool> {
        let eq = self.0.ctx().prime() == rhs.0.ctx().prime()
            && self.0.ctx().precision() == rhs.0.ctx().precision()
            && self.0.residue() == rhs.0.residue();
        match op {
            CompareOp::Eq => Ok(eq),
            CompareOp::Ne => Ok(!eq),
            _ => Err(PyValueError::new_err("p-adic elements are not ordered")),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Padic({} mod {}^{})",
            self.0.residue(),
            self.0.ctx().prime(),
            self.0.ctx().precision()
        )
    }
}

fn same_ctx(a: &PadicApprox, b: &PadicApprox) -> PyResult<()> {
    if a.ctx().prime() != b.ctx().prime() || a.ctx().precision() != b.ctx().precision() {
        return Err(PyValueError::new_err(
            "operands live in different contexts",
        ));
    }
    Ok(())
}

/// Shape of one complete-intersection problem: ambient dimension n, flat
/// dimension k, and the degrees of the defining forms.
#[pyclass(name = "Profile", frozen)]
#[derive(Clone)]
struct PyProfile(DegreeProfile);

#[pymethods]
impl PyProfile {
    #[new]
    fn new(n: u32, k: u32, degrees: Vec<u32>) -> PyResult<Self> {
        DegreeProfile::new(n, k, degrees).map(PyProfile).map_err(err)
    }

    #[getter]
    fn n(&self) -> u32 {
        self.0.n()
    }

    #[getter]
    fn k(&self) -> u32 {
        self.0.k()
    }

    #[getter]
    fn degrees(&self) -> Vec<u32> {
        self.0.degrees().to_vec()
    }

    #[getter]
    fn jacobian_size(&self) -> u64 {
        self.0.jacobian_size()
    }

    /// Whether the monomial counts match the Jacobian size, so the square
    /// determinant reduction applies.
    fn admissible(&self) -> bool {
        self.0.check_codim()
    }

    fn __repr__(&self) -> String {
        format!("Profile(n={}, k={}, degrees={:?})", self.0.n(), self.0.k(), self.0.degrees())
    }

    fn __str__(&self) -> String {
        format!("{}", self.0)
    }
}

/// Symbolic shape of the structured random Jacobian for one profile.
#[pyclass(name = "Template", frozen)]
struct PyTemplate(JacobianTemplate);

#[pymethods]
impl PyTemplate {
    #[new]
    fn new(profile: &PyProfile) -> PyResult<Self> {
        build_template(&profile.0).map(PyTemplate).map_err(err)
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    #[getter]
    fn var_count(&self) -> usize {
        self.0.var_count()
    }

    /// Labels of the distinct coefficient variables, in pool order.
    fn labels(&self) -> Vec<String> {
        self.0.vars().iter().map(|v| v.label()).collect()
    }

    /// Variable index at (row, col), or None for a structural zero.
    fn cell(&self, row: usize, col: usize) -> PyResult<Option<usize>> {
        if row >= self.0.size() || col >= self.0.size() {
            return Err(PyValueError::new_err("cell index out of range"));
        }
        Ok(match self.0.cell(row, col) {
            TemplateCell::Zero => None,
            TemplateCell::Var(i) => Some(i),
        })
    }

    /// All (row, col) positions where variable `idx` appears.
    fn occurrences(&self, idx: usize) -> PyResult<Vec<(usize, usize)>> {
        if idx >= self.0.var_count() {
            return Err(PyValueError::new_err("variable index out of range"));
        }
        Ok(self.0.occurrences(idx))
    }

    /// Full structural dump as a JSON string.
    fn to_json(&self) -> String {
        self.0.to_json().to_string()
    }

    /// Determinant of the template instantiated with the given residues.
    fn det(&self, ctx: &PyContext, draws: Vec<u64>) -> PyResult<PyPadic> {
        if draws.len() != self.0.var_count() {
            return Err(PyValueError::new_err(format!(
                "expected {} draws, got {}",
                self.0.var_count(),
                draws.len()
            )));
        }
        let elems: Vec<PadicApprox> = draws.iter().map(|&d| ctx.0.approx_u64(d)).collect();
        let mat = self.0.instantiate(&elems).map_err(err)?;
        mat.det_residue().map(PyPadic).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Template({} x {}, {} variables)",
            self.0.size(),
            self.0.size(),
            self.0.var_count()
        )
    }
}

/// Expected flat count for one profile at one prime.
#[pyclass(name = "FlatCount", frozen)]
struct PyFlatCount(FlatCountResult);

#[pymethods]
impl PyFlatCount {
    #[getter]
    fn p(&self) -> u64 {
        self.0.p
    }

    #[getter]
    fn precision(&self) -> u32 {
        self.0.precision
    }

    #[getter]
    fn profile(&self) -> PyProfile {
        PyProfile(self.0.profile.clone())
    }

    /// Measure of the space of candidate flats.
    #[getter]
    fn grassmannian_factor(&self) -> PyRational {
        PyRational(self.0.grassmannian_factor.clone())
    }

    /// Bracket on the determinant expectation.
    #[getter]
    fn det_bounds(&self) -> (PyRational, PyRational) {
        let b = self.0.det_expectation.bracket();
        (PyRational(b.lo().clone()), PyRational(b.hi().clone()))
    }

    /// Bracket on the expected flat count.
    #[getter]
    fn expected_bounds(&self) -> (PyRational, PyRational) {
        (
            PyRational(self.0.expected_count.lo().clone()),
            PyRational(self.0.expected_count.hi().clone()),
        )
    }

    /// Count-level standard error (0 for the exact engine).
    #[getter]
    fn std_error(&self) -> f64 {
        self.0.expected_std_error
    }

    /// Full report row as a JSON string, including any known reference value.
    fn record_json(&self) -> PyResult<String> {
        serde_json::to_string(&flat_count_record(&self.0))
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        let (lo, hi) = self.expected_bounds();
        format!("FlatCount(p={}, expected in [{}, {}])", self.0.p, lo.0, hi.0)
    }
}

/// Haar measure of the n-by-n matrices with unit determinant scale:
/// prod_{i=1..n} (1 - p^-i).
#[pyfunction]
fn gl_volume(p: u64, n: u32) -> PyResult<PyRational> {
    let table = VolumeTable::new(p, n + 1).map_err(err)?;
    linalg::gl_volume(n, &table).map(PyRational).map_err(err)
}

/// Measure of n-by-n matrices whose determinant has valuation exactly ell.
#[pyfunction]
fn det_level_volume(p: u64, n: u32, ell: u32) -> PyResult<PyRational> {
    let table = VolumeTable::new(p, n + ell + 1).map_err(err)?;
    linalg::det_level_volume(n, ell, &table).map(PyRational).map_err(err)
}

/// Measure of the space of k-flats in projective n-space.
#[pyfunction]
fn grassmannian_volume(p: u64, k: u32, n: u32) -> PyResult<PyRational> {
    let table = VolumeTable::new(p, n + 2).map_err(err)?;
    linalg::grassmannian_volume(k, n, &table).map(PyRational).map_err(err)
}

/// Known closed forms, selected by name:
/// "points", "det-matrix", "cubic", "quadrics", "limsup-bound",
/// "lower-bound". "det-matrix" uses n; "lower-bound" uses k and n.
#[pyfunction]
#[pyo3(signature = (name, p, k=0, n=0))]
fn closed_form_value(name: &str, p: u64, k: u32, n: u32) -> PyResult<PyRational> {
    if !is_prime_u64(p) {
        return Err(PyValueError::new_err(format!("{p} is not prime")));
    }
    let case = match name {
        "points" => ClosedForm::Points { n },
        "det-matrix" => ClosedForm::DetMatrix { n },
        "cubic" => ClosedForm::Cubic,
        "quadrics" => ClosedForm::Quadrics,
        "limsup-bound" => ClosedForm::LimsupBound,
        "lower-bound" => {
            if k >= n {
                return Err(PyValueError::new_err("lower-bound needs k < n"));
            }
            ClosedForm::LowerBound { k, n }
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown closed form {other:?}; expected points, det-matrix, cubic, \
                 quadrics, limsup-bound, or lower-bound"
            )))
        }
    };
    Ok(PyRational(closed_form(&case, p)))
}

/// Expected number of k-flats on a random complete intersection with the
/// given profile, via exact enumeration or Monte Carlo.
#[pyfunction]
#[pyo3(name = "expected_flats", signature = (profile, p, method="exact", precision=None, samples=10_000, seed=0, guard=DEFAULT_GUARD))]
fn expected_flats_py(
    profile: &PyProfile,
    p: u64,
    method: &str,
    precision: Option<u32>,
    samples: u64,
    seed: u64,
    guard: u64,
) -> PyResult<PyFlatCount> {
    let spec = match method {
        "exact" => MethodSpec::Exact {
            precision: precision.unwrap_or(2),
        },
        "mc" => MethodSpec::Mc {
            precision: precision.unwrap_or(20),
            samples,
            seed,
        },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method {other:?}; expected \"exact\" or \"mc\""
            )))
        }
    };
    expected_flats(&profile.0, p, &spec, guard)
        .map(PyFlatCount)
        .map_err(err)
}

/// All profiles with n, k fixed, degrees between 1 and max_degree, and
/// matching monomial counts.
#[pyfunction(name = "admissible_profiles")]
fn admissible_profiles_py(n: u32, k: u32, max_degree: u32) -> Vec<PyProfile> {
    admissible_profiles(n, k, max_degree)
        .into_iter()
        .map(PyProfile)
        .collect()
}

fn integrand_by_name(name: &str) -> PyResult<PolynomialIntegrand> {
    match name {
        "cubic-det" => Ok(PolynomialIntegrand::cubic_det()),
        "coordinate" => Ok(PolynomialIntegrand::coordinate()),
        other => Err(PyValueError::new_err(format!(
            "unknown integrand {other:?}; expected \"cubic-det\" or \"coordinate\""
        ))),
    }
}

/// Normalized Riemann sums of the named integrand at levels 1..=levels,
/// as (level, value) pairs.
#[pyfunction]
#[pyo3(signature = (integrand, p, levels, guard=DEFAULT_GUARD))]
fn volkenborn_partials(
    integrand: &str,
    p: u64,
    levels: u32,
    guard: u64,
) -> PyResult<Vec<(u32, PyRational)>> {
    if !is_prime_u64(p) {
        return Err(PyValueError::new_err(format!("{p} is not prime")));
    }
    let f = integrand_by_name(integrand)?;
    (1..=levels)
        .map(|n| {
            volkenborn_partial(&f, p, n, guard)
                .map(|part| (part.level, PyRational(part.normalized_sum)))
                .map_err(err)
        })
        .collect()
}

/// Whether the partial sums converge p-adically to `target`: each level-n
/// sum must agree with the target mod p^n.
#[pyfunction]
#[pyo3(signature = (integrand, p, levels, target, guard=DEFAULT_GUARD))]
fn volkenborn_limit_check(
    integrand: &str,
    p: u64,
    levels: u32,
    target: &PyRational,
    guard: u64,
) -> PyResult<bool> {
    let f = integrand_by_name(integrand)?;
    let ctx = PadicContext::new(p, levels).map_err(err)?;
    let partials = (1..=levels)
        .map(|n| volkenborn_partial(&f, p, n, guard))
        .collect::<padic_flats::Result<Vec<_>>>()
        .map_err(err)?;
    padic_limit_check(&partials, &target.0, &ctx).map_err(err)
}

/// Run one of the identity-verification suites ("volumes", "counts",
/// "fibers", "jacobian", "volkenborn", "all"), optionally restricted to one
/// prime. Returns the records as a JSON array string.
#[pyfunction]
#[pyo3(signature = (suite="all", p=None, guard=DEFAULT_GUARD))]
fn verify_suite(suite: &str, p: Option<u64>, guard: u64) -> PyResult<String> {
    let parsed: Suite = suite
        .parse()
        .map_err(|_| PyValueError::new_err(format!("unknown suite {suite:?}")))?;
    let records = run_suite(parsed, p, guard).map_err(err)?;
    serde_json::to_string(&records).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Closed-form scan over a list of primes, as CSV text.
#[pyfunction]
fn scan_csv(primes: Vec<u64>) -> PyResult<String> {
    let rows = padic_flats::scan_rows(&primes).map_err(err)?;
    Ok(padic_flats::scan_csv(&rows))
}

#[pyfunction]
fn is_prime(p: u64) -> bool {
    is_prime_u64(p)
}

#[pymodule]
fn padic_flats_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRational>()?;
    m.add_class::<PyContext>()?;
    m.add_class::<PyPadic>()?;
    m.add_class::<PyProfile>()?;
    m.add_class::<PyTemplate>()?;
    m.add_class::<PyFlatCount>()?;
    m.add_function(wrap_pyfunction!(gl_volume, m)?)?;
    m.add_function(wrap_pyfunction!(det_level_volume, m)?)?;
    m.add_function(wrap_pyfunction!(grassmannian_volume, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_value, m)?)?;
    m.add_function(wrap_pyfunction!(expected_flats_py, m)?)?;
    m.add_function(wrap_pyfunction!(admissible_profiles_py, m)?)?;
    m.add_function(wrap_pyfunction!(volkenborn_partials, m)?)?;
    m.add_function(wrap_pyfunction!(volkenborn_limit_check, m)?)?;
    m.add_function(wrap_pyfunction!(verify_suite, m)?)?;
    m.add_function(wrap_pyfunction!(scan_csv, m)?)?;
    m.add_function(wrap_pyfunction!(is_prime, m)?)?;
    m.add("DEFAULT_GUARD", DEFAULT_GUARD)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_names_resolve() {
        assert_eq!(
            closed_form_value("cubic", 2, 0, 0).unwrap().0.fraction_string(),
            "35/31"
        );
        assert!(closed_form_value("nope", 2, 0, 0).is_err());
        assert!(closed_form_value("cubic", 4, 0, 0).is_err());
    }

    #[test]
    fn integrand_names_resolve() {
        assert!(integrand_by_name("cubic-det").is_ok());
        assert!(integrand_by_name("coordinate").is_ok());
        assert!(integrand_by_name("det").is_err());
    }
}
