//! Generators `psi` on the standard simplex and their conjugates.
//!
//! A generator belongs to the admissible class when it is convex and
//! continuous, equals 1 at every vertex, and satisfies the restriction
//! inequality
//!
//! ```text
//! psi(t) >= (1 - t_i) * psi(t_1/(1-t_i), .., 0, .., t_n/(1-t_i))   for t_i < 1.
//! ```
//!
//! Built-in `psi_p` generators are members by construction. Tabulated
//! generators wrap a user function and can only be checked by sampling.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ground::p_norm;

/// Largest arity accepted for tabulated generators.
pub const MAX_TABULATED_ARITY: usize = 8;

/// Largest number of lattice points a conjugate search may visit.
pub const LATTICE_BUDGET: u64 = 20_000_000;

const SIMPLEX_SUM_TOL: f64 = 1e-12;
const DEFAULT_VALIDATION_SEED: u64 = 0x5eed_0f5a_3b1e;

/// A point of the standard simplex with `n >= 2` weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "simplex point needs at least 2 weights, got {}",
                weights.len()
            )));
        }
        if let Some(w) = weights
            .iter()
            .find(|w| !w.is_finite() || **w < -SIMPLEX_SUM_TOL || **w > 1.0 + SIMPLEX_SUM_TOL)
        {
            return Err(Error::InvalidInput(format!("simplex weight {w} outside [0, 1]")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidInput(format!("simplex weights sum to {sum}, not 1")));
        }
        Ok(SimplexPoint(weights.into_iter().map(|w| w.clamp(0.0, 1.0)).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n >= 2, "simplex arity must be >= 2");
        SimplexPoint(vec![1.0 / n as f64; n])
    }

    pub fn vertex(n: usize, i: usize) -> Self {
        assert!(n >= 2 && i < n);
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        SimplexPoint(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

type PsiFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A user-supplied generator evaluated as a black box.
///
/// The function must be safe to call concurrently.
#[derive(Clone)]
pub struct Tabulated {
    arity: usize,
    symmetric: bool,
    label: String,
    func: Arc<PsiFn>,
    /// Breakpoint values when built by [`PsiGenerator::table`].
    table: Option<Vec<f64>>,
}

impl Tabulated {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// A generator: `psi_p` for `p in [1, inf]`, or a tabulated function.
#[derive(Clone)]
pub enum PsiGenerator {
    P(f64),
    Tabulated(Tabulated),
}

impl fmt::Debug for PsiGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiGenerator::P(p) => write!(f, "P({p})"),
            PsiGenerator::Tabulated(t) => write!(
                f,
                "Tabulated({:?}, n={}, symmetric={})",
                t.label, t.arity, t.symmetric
            ),
        }
    }
}

impl PartialEq for PsiGenerator {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (PsiGenerator::P(a), PsiGenerator::P(b)) => a == b,
            (PsiGenerator::Tabulated(a), PsiGenerator::Tabulated(b)) => match (&a.table, &b.table) {
                (Some(x), Some(y)) => x == y,
                _ => Arc::ptr_eq(&a.func, &b.func),
            },
            _ => false,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum PsiRepr {
    P { p: Exponent },
    Table { values: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Exponent {
    Finite(f64),
    Named(String),
}

impl Serialize for PsiGenerator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PsiGenerator::P(p) => {
                let p = if p.is_infinite() {
                    Exponent::Named("inf".into())
                } else {
                    Exponent::Finite(*p)
                };
                PsiRepr::P { p }.serialize(serializer)
            }
            PsiGenerator::Tabulated(Tabulated { table: Some(values), .. }) => {
                PsiRepr::Table { values: values.clone() }.serialize(serializer)
            }
            PsiGenerator::Tabulated(_) => Err(serde::ser::Error::custom(
                "function-backed generators cannot be serialized",
            )),
        }
    }
}

impl<'de> Deserialize<'de> for PsiGenerator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let p = match PsiRepr::deserialize(deserializer)? {
            PsiRepr::P { p } => p,
            PsiRepr::Table { values } => return PsiGenerator::table(values).map_err(serde::de::Error::custom),
        };
        let p = match p {
            Exponent::Finite(p) => p,
            Exponent::Named(s) if s == "inf" || s == "infinity" => f64::INFINITY,
            Exponent::Named(s) => {
                return Err(serde::de::Error::custom(format!(
                    "generator exponent must be a number or \"inf\", got {s:?}"
                )))
            }
        };
        PsiGenerator::p(p).map_err(serde::de::Error::custom)
    }
}

impl PsiGenerator {
    /// `psi_p` with `1 <= p <= inf`.
    pub fn p(p: f64) -> Result<Self> {
        if p >= 1.0 {
            Ok(PsiGenerator::P(p))
        } else {
            Err(Error::InvalidInput(format!("generator needs 1 <= p <= inf, got {p}")))
        }
    }

    pub fn sum() -> Self {
        PsiGenerator::P(1.0)
    }

    pub fn max() -> Self {
        PsiGenerator::P(f64::INFINITY)
    }

    /// Wraps a black-box function on the simplex with arity `2..=8`.
    ///
    /// `symmetric` declares permutation symmetry; validation spot-checks it.
    pub fn tabulated<F>(arity: usize, symmetric: bool, label: &str, func: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if !(2..=MAX_TABULATED_ARITY).contains(&arity) {
            return Err(Error::InvalidInput(format!(
                "tabulated generator arity must lie in 2..={MAX_TABULATED_ARITY}, got {arity}"
            )));
        }
        Ok(PsiGenerator::Tabulated(Tabulated {
            arity,
            symmetric,
            label: label.to_string(),
            func: Arc::new(func),
            table: None,
        }))
    }

    /// Two-anchor generator interpolating `values[k] = psi(1 - k/m, k/m)`,
    /// `m = values.len() - 1`, linearly between breakpoints.
    ///
    /// Both end values must equal 1; the remaining axioms are left to
    /// [`PsiGenerator::validate`].
    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "generator table needs at least 2 finite values".into(),
            ));
        }
        let m = values.len() - 1;
        if (values[0] - 1.0).abs() > 1e-12 || (values[m] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "generator table must start and end at 1, got {} and {}",
                values[0], values[m]
            )));
        }
        let symmetric = (0..=m).all(|k| (values[k] - values[m - k]).abs() <= 1e-12);
        let table = values.clone();
        let func = move |t: &[f64]| {
            let s = t[1].clamp(0.0, 1.0) * m as f64;
            let k = (s.floor() as usize).min(m - 1);
            let w = s - k as f64;
            (1.0 - w) * table[k] + w * table[k + 1]
        };
        Ok(PsiGenerator::Tabulated(Tabulated {
            arity: 2,
            symmetric,
            label: "table".into(),
            func: Arc::new(func),
            table: Some(values),
        }))
    }

    /// Fixed arity of a tabulated generator; `None` for `psi_p`.
    pub fn arity(&self) -> Option<usize> {
        match self {
            PsiGenerator::P(_) => None,
            PsiGenerator::Tabulated(t) => Some(t.arity),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            PsiGenerator::P(_) => true,
            PsiGenerator::Tabulated(t) => t.symmetric,
        }
    }

    pub fn is_strictly_convex(&self) -> bool {
        matches!(*self, PsiGenerator::P(p) if p > 1.0 && p.is_finite())
    }

    /// Exponent of a `psi_p` generator.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            PsiGenerator::P(p) => Some(p),
            PsiGenerator::Tabulated(_) => None,
        }
    }

    pub fn check_arity(&self, n: usize) -> Result<()> {
        match self.arity() {
            Some(a) if a != n => Err(Error::ArityMismatch { expected: a, found: n }),
            _ if n < 2 => Err(Error::InvalidInput(format!("arity must be >= 2, got {n}"))),
            _ => Ok(()),
        }
    }

    /// Raw evaluation without arity or range checks.
    pub(crate) fn raw(&self, t: &[f64]) -> f64 {
        match self {
            PsiGenerator::P(p) if *p == 1.0 => 1.0,
            PsiGenerator::P(p) if p.is_infinite() => t.iter().copied().fold(0.0, f64::max),
            PsiGenerator::P(p) => p_norm(t, *p),
            PsiGenerator::Tabulated(tab) => (tab.func)(t),
        }
    }

    /// `psi(t)`; tabulated values outside `[max(t) - 1e-9, 1 + 1e-9]` are
    /// rejected as membership violations.
    pub fn eval(&self, t: &SimplexPoint) -> Result<f64> {
        self.check_arity(t.arity())?;
        let v = self.raw(t.weights());
        if let PsiGenerator::Tabulated(tab) = self {
            let lo = t.weights().iter().copied().fold(0.0, f64::max);
            let tol = 1e-9;
            if !(v.is_finite() && v >= lo - tol && v <= 1.0 + tol) {
                return Err(Error::MembershipViolation(format!(
                    "generator {:?} returned {v} at {:?}, outside [{lo}, 1]",
                    tab.label,
                    t.weights()
                )));
            }
        }
        Ok(v)
    }

    /// Positively homogeneous extension `S * psi(b / S)`, `S = sum(b)`, for
    /// nonnegative `b`. For `psi_p` this is the `p`-norm of `b`.
    pub(crate) fn homogeneous(&self, b: &[f64]) -> f64 {
        match self {
            PsiGenerator::P(p) if *p == 1.0 => b.iter().sum(),
            PsiGenerator::P(p) if p.is_infinite() => b.iter().copied().fold(0.0, f64::max),
            PsiGenerator::P(p) => p_norm(b, *p),
            PsiGenerator::Tabulated(_) => homogeneous_by_formula(self, b),
        }
    }

    /// The conjugate generator. Closed form for `psi_p`; for tabulated
    /// generators every evaluation runs a lattice search with `grid`.
    pub fn conjugate(&self, grid: usize) -> PsiGenerator {
        match *self {
            PsiGenerator::P(1.0) => PsiGenerator::P(f64::INFINITY),
            PsiGenerator::P(p) if p.is_infinite() => PsiGenerator::P(1.0),
            PsiGenerator::P(p) => PsiGenerator::P(p / (p - 1.0)),
            PsiGenerator::Tabulated(ref tab) => {
                let inner = self.clone();
                let label = format!("conjugate of {}", tab.label);
                let func = move |s: &[f64]| {
                    conjugate_search(&inner, s, grid).map(|c| c.value).unwrap_or(f64::NAN)
                };
                PsiGenerator::Tabulated(Tabulated {
                    arity: tab.arity,
                    symmetric: tab.symmetric,
                    label,
                    func: Arc::new(func),
                    table: None,
                })
            }
        }
    }

    /// `psi*(s) = max_t <t, s> / psi(t)`.
    pub fn conjugate_eval(&self, s: &SimplexPoint, grid: usize) -> Result<f64> {
        self.check_arity(s.arity())?;
        match *self {
            PsiGenerator::P(1.0) => Ok(s.weights().iter().copied().fold(0.0, f64::max)),
            PsiGenerator::P(_) => Ok(self.conjugate(grid).raw(s.weights())),
            PsiGenerator::Tabulated(_) => conjugate_search(self, s.weights(), grid).map(|c| c.value),
        }
    }

    /// Minimizer and minimum of a permutation-symmetric generator on the
    /// simplex of arity `n`: the uniform point.
    pub fn min_symmetric(&self, n: usize) -> Result<(SimplexPoint, f64)> {
        if !self.is_symmetric() {
            return Err(Error::Contract(
                "minimum at the uniform point requires a permutation-symmetric generator".into(),
            ));
        }
        let t = SimplexPoint::uniform(n);
        let v = self.eval(&t)?;
        Ok((t, v))
    }

    /// Samples the membership axioms; see [`ValidationReport`].
    pub fn validate(&self, n: usize, samples: usize, tol: f64) -> Result<ValidationReport> {
        self.validate_seeded(n, samples, tol, DEFAULT_VALIDATION_SEED)
    }

    pub fn validate_seeded(&self, n: usize, samples: usize, tol: f64, seed: u64) -> Result<ValidationReport> {
        self.check_arity(n)?;
        if samples < n + 1 {
            return Err(Error::InvalidInput(format!("validation needs at least n + 1 = {} samples", n + 1)));
        }
        Ok(validate(self, n, samples, tol, seed))
    }
}

fn homogeneous_by_formula(gen: &PsiGenerator, b: &[f64]) -> f64 {
    let s: f64 = b.iter().sum();
    if s < 1e-300 {
        return 0.0;
    }
    let t: Vec<f64> = b.iter().map(|x| x / s).collect();
    s * gen.raw(&t)
}

/// Outcome of one sampled axiom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub passed: bool,
    pub checks: usize,
    /// Largest violation seen (0 when none).
    pub worst_violation: f64,
    pub witness: Option<Vec<f64>>,
}

impl AxiomCheck {
    fn new() -> Self {
        AxiomCheck { passed: true, checks: 0, worst_violation: 0.0, witness: None }
    }

    fn record(&mut self, violation: f64, tol: f64, at: &[f64]) {
        self.checks += 1;
        let violation = if violation.is_nan() { f64::INFINITY } else { violation };
        if violation > tol {
            self.passed = false;
        }
        if violation > self.worst_violation {
            self.worst_violation = violation;
            if violation > tol {
                self.witness = Some(at.to_vec());
            }
        }
    }
}

/// Sampled membership report. Results are "sampled, not certified".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub arity: usize,
    pub vertex_values: AxiomCheck,
    pub midpoint_convexity: AxiomCheck,
    pub restriction_inequality: AxiomCheck,
    pub bounds: AxiomCheck,
    /// Present when the generator declares permutation symmetry.
    pub symmetry: Option<AxiomCheck>,
    /// Empirical Lipschitz constant with respect to the l1 distance.
    pub lipschitz_estimate: f64,
    pub status: &'static str,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.vertex_values.passed
            && self.midpoint_convexity.passed
            && self.restriction_inequality.passed
            && self.bounds.passed
            && self.symmetry.as_ref().is_none_or(|s| s.passed)
    }

    /// Names of the failed axioms.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.vertex_values.passed {
            out.push("vertex_values");
        }
        if !self.midpoint_convexity.passed {
            out.push("midpoint_convexity");
        }
        if !self.restriction_inequality.passed {
            out.push("restriction_inequality");
        }
        if !self.bounds.passed {
            out.push("bounds");
        }
        if self.symmetry.as_ref().is_some_and(|s| !s.passed) {
            out.push("symmetry");
        }
        out
    }
}

/// Random simplex point: uniform on the simplex, with a quarter of the
/// draws pushed onto a face by zeroing one coordinate.
pub(crate) fn random_simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    if rng.random::<f64>() < 0.25 {
        let k = rng.random_range(0..n);
        w[k] = 0.0;
    }
    let s: f64 = w.iter().sum();
    if s == 0.0 {
        w[0] = 1.0;
        return w;
    }
    w.iter().map(|x| x / s).collect()
}

fn validate(gen: &PsiGenerator, n: usize, samples: usize, tol: f64, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertex_values = AxiomCheck::new();
    for i in 0..n {
        let e = SimplexPoint::vertex(n, i);
        vertex_values.record((gen.raw(e.weights()) - 1.0).abs(), tol, e.weights());
    }

    let mut midpoint_convexity = AxiomCheck::new();
    let mut lipschitz: f64 = 0.0;
    for _ in 0..samples {
        let s = random_simplex(&mut rng, n);
        let t = random_simplex(&mut rng, n);
        let m: Vec<f64> = s.iter().zip(&t).map(|(a, b)| 0.5 * (a + b)).collect();
        let (ps, pt) = (gen.raw(&s), gen.raw(&t));
        midpoint_convexity.record(gen.raw(&m) - 0.5 * (ps + pt), tol, &m);
        let dist: f64 = s.iter().zip(&t).map(|(a, b)| (a - b).abs()).sum();
        if dist > 1e-9 {
            lipschitz = lipschitz.max((ps - pt).abs() / dist);
        }
    }

    let mut restriction_inequality = AxiomCheck::new();
    let mut bounds = AxiomCheck::new();
    let mut symmetry = gen.is_symmetric().then(AxiomCheck::new);
    for _ in 0..samples {
        let t = random_simplex(&mut rng, n);
        let v = gen.raw(&t);
        let mx = t.iter().copied().fold(0.0, f64::max);
        bounds.record((mx - v).max(v - 1.0), tol, &t);
        for i in 0..n {
            if t[i] < 1.0 - tol {
                let r: Vec<f64> = t
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| if j == i { 0.0 } else { x / (1.0 - t[i]) })
                    .collect();
                restriction_inequality.record((1.0 - t[i]) * gen.raw(&r) - v, tol, &t);
            }
        }
        if let Some(sym) = symmetry.as_mut() {
            let mut perm = t.clone();
            for k in (1..n).rev() {
                perm.swap(k, rng.random_range(0..=k));
            }
            sym.record((gen.raw(&perm) - v).abs(), tol, &t);
        }
    }

    ValidationReport {
        arity: n,
        vertex_values,
        midpoint_convexity,
        restriction_inequality,
        bounds,
        symmetry,
        lipschitz_estimate: lipschitz,
        status: "sampled, not certified",
    }
}

/// Result of a lattice-plus-polish conjugate search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateSearch {
    /// Best ratio found; a lower bound on the true maximum.
    pub value: f64,
    /// Best ratio on the lattice alone.
    pub lattice_value: f64,
    pub argmax: Vec<f64>,
    /// Heuristic bound on `true - value` from an empirical Lipschitz estimate.
    pub error_bound: f64,
}

/// Number of compositions of `grid` into `n` nonnegative parts.
pub fn lattice_size(n: usize, grid: usize) -> u64 {
    // C(grid + n - 1, n - 1), saturating.
    let mut c: u128 = 1;
    for k in 1..n as u128 {
        c = c * (grid as u128 + k) / k;
        if c > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    c as u64
}

/// Visits every lattice point `k / grid` of the simplex, `k` a composition.
pub(crate) fn for_each_lattice_point(n: usize, grid: usize, mut visit: impl FnMut(&[f64])) {
    let mut k = vec![0usize; n];
    let mut t = vec![0.0; n];
    let h = 1.0 / grid as f64;
    fn rec(pos: usize, left: usize, k: &mut [usize], t: &mut [f64], h: f64, visit: &mut dyn FnMut(&[f64])) {
        let n = k.len();
        if pos == n - 1 {
            k[pos] = left;
            for (ti, &ki) in t.iter_mut().zip(k.iter()) {
                *ti = ki as f64 * h;
            }
            visit(t);
            return;
        }
        for v in 0..=left {
            k[pos] = v;
            rec(pos + 1, left - v, k, t, h, visit);
        }
    }
    rec(0, grid, &mut k, &mut t, h, &mut visit);
}

/// Maximizes `<t, s> / psi(t)` over the simplex for tabulated `psi`.
///
/// `s` may be any nonnegative vector of the right arity; the ratio is linear
/// in `s`, which is how dual product norms reuse this search.
pub fn conjugate_search(gen: &PsiGenerator, s: &[f64], grid: usize) -> Result<ConjugateSearch> {
    let n = s.len();
    gen.check_arity(n)?;
    if grid < 2 {
        return Err(Error::InvalidInput(format!("lattice grid must be >= 2, got {grid}")));
    }
    let size = lattice_size(n, grid);
    if size > LATTICE_BUDGET {
        return Err(Error::Budget(format!(
            "conjugate lattice with n = {n}, grid = {grid} has {size} points (limit {LATTICE_BUDGET})"
        )));
    }
    let mut best = f64::NEG_INFINITY;
    let mut argmax = vec![0.0; n];
    let mut bad: Option<(Vec<f64>, f64)> = None;
    let mut psi_hi: f64 = 0.0;
    for_each_lattice_point(n, grid, |t| {
        let v = gen.raw(t);
        if !(v > 0.0) {
            if bad.is_none() {
                bad = Some((t.to_vec(), v));
            }
            return;
        }
        psi_hi = psi_hi.max(v);
        let r = dot(t, s) / v;
        if r > best {
            best = r;
            argmax.copy_from_slice(t);
        }
    });
    if let Some((t, v)) = bad {
        return Err(Error::MembershipViolation(format!("generator evaluates to {v} <= 0 at {t:?}")));
    }
    let lattice_value = best;
    let (value, argmax) = polish_ratio(gen, s, argmax, best, 1.0 / grid as f64);

    // |grad ratio|_inf <= max(s)/psi_min + max<t,s> L / psi_min^2 with
    // psi_min >= 1/n; a lattice point lies within l1 distance n/grid.
    let smax = s.iter().copied().fold(0.0, f64::max);
    let lip = empirical_lipschitz(gen, n);
    let nf = n as f64;
    let error_bound = (smax * nf + smax * lip * nf * nf) * nf / grid as f64;
    Ok(ConjugateSearch { value, lattice_value, argmax, error_bound })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mass-transfer hill climbing: between pairs of coordinates, and from one
/// coordinate to all others equally (and back), which crosses max-type ridges.
fn polish_ratio(gen: &PsiGenerator, s: &[f64], mut t: Vec<f64>, mut best: f64, mut delta: f64) -> (f64, Vec<f64>) {
    let n = t.len();
    let mut trial = t.clone();
    let mut rounds = 0;
    let share = 1.0 / (n - 1) as f64;
    while delta > 1e-13 && rounds < 10_000 {
        rounds += 1;
        let mut improved = false;
        let mut attempt = |trial: &[f64], t: &mut Vec<f64>, best: &mut f64| {
            let v = gen.raw(trial);
            if v > 0.0 {
                let r = dot(trial, s) / v;
                if r > *best {
                    *best = r;
                    t.copy_from_slice(trial);
                    improved = true;
                }
            }
        };
        for i in 0..n {
            for j in 0..n {
                if i == j || t[j] <= 0.0 {
                    continue;
                }
                let m = delta.min(t[j]);
                trial.copy_from_slice(&t);
                trial[i] += m;
                trial[j] -= m;
                attempt(&trial, &mut t, &mut best);
            }
            if n > 2 {
                if t[i] > 0.0 {
                    let m = delta.min(t[i]);
                    trial.copy_from_slice(&t);
                    for (k, c) in trial.iter_mut().enumerate() {
                        *c += if k == i { -m } else { m * share };
                    }
                    attempt(&trial, &mut t, &mut best);
                }
                let room = (0..n).filter(|&k| k != i).map(|k| t[k]).fold(f64::INFINITY, f64::min);
                if room > 0.0 {
                    let m = delta.min(room / share);
                    trial.copy_from_slice(&t);
                    for (k, c) in trial.iter_mut().enumerate() {
                        *c += if k == i { m } else { -m * share };
                    }
                    attempt(&trial, &mut t, &mut best);
                }
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    (best, t)
}

fn empirical_lipschitz(gen: &PsiGenerator, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_VALIDATION_SEED ^ n as u64);
    let mut lip: f64 = 0.0;
    for _ in 0..256 {
        let s = random_simplex(&mut rng, n);
        let t = random_simplex(&mut rng, n);
        let dist: f64 = s.iter().zip(&t).map(|(a, b)| (a - b).abs()).sum();
        if dist > 1e-9 {
            lip = lip.max((gen.raw(&s) - gen.raw(&t)).abs() / dist);
        }
    }
    lip
}
