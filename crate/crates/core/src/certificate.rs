//! Dual optimality certificates: verification and recovery.
//!
//! A certificate is a candidate minimizer `u` with dual blocks
//! `x*_1, .., x*_n`. Every variant requires `sum_i x*_i = 0`; the general test
//! then asks for unit dual product norm and `sum_i <x*_i, u - v_i> = f(u)`.
//! The sum, max and `p` generators admit blockwise restatements with their
//! own normalization of the dual block norms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::ground::{conjugate_exponent, GroundNorm};
use crate::lp::{LpBuilder, Sense};
use crate::problem::ProblemInstance;
use crate::product::{pairing, ProductVector, DEFAULT_DUAL_GRID};
use crate::psi::PsiGenerator;
use crate::vector::{dot, sgn, Vector};

pub const DEFAULT_CHECK_TOL: f64 = 1e-9;
pub const DEFAULT_RECOVERY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub solution: Vector,
    pub duals: ProductVector,
}

impl Certificate {
    pub fn new(solution: Vector, duals: ProductVector) -> Self {
        Certificate { solution, duals }
    }

    /// Builds from coordinates; panics on malformed literals.
    pub fn from_rows(solution: &[f64], duals: &[&[f64]]) -> Self {
        Certificate { solution: Vector::from_slice(solution), duals: ProductVector::from_rows(duals) }
    }

    pub fn check_shape(&self, prob: &ProblemInstance) -> Result<()> {
        if self.duals.arity() != prob.n() {
            return Err(Error::ArityMismatch { expected: prob.n(), found: self.duals.arity() });
        }
        check_dim(prob.dim(), self.solution.dim())?;
        check_dim(prob.dim(), self.duals.dim())
    }
}

/// Which characterization a report applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    General,
    FermatTorricelli,
    Chebyshev,
    PFermat,
}

impl Theorem {
    /// The specialized characterization matching a generator, if any.
    pub fn for_generator(g: &PsiGenerator) -> Theorem {
        match *g {
            PsiGenerator::P(1.0) => Theorem::FermatTorricelli,
            PsiGenerator::P(p) if p.is_infinite() => Theorem::Chebyshev,
            PsiGenerator::P(_) => Theorem::PFermat,
            PsiGenerator::Tabulated(_) => Theorem::General,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Theorem::General => "general",
            Theorem::FermatTorricelli => "ft",
            Theorem::Chebyshev => "chebyshev",
            Theorem::PFermat => "pft",
        }
    }

    fn normalization(self) -> &'static str {
        match self {
            Theorem::General => "dual product norm = 1",
            Theorem::FermatTorricelli => "max of dual block norms = 1",
            Theorem::Chebyshev => "sum of dual block norms = 1",
            Theorem::PFermat => "sum of q-th powers of dual block norms = 1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub verdict: bool,
    pub theorem: Theorem,
    pub normalization: &'static str,
    pub tol: f64,
    /// Worst residual per condition; the verdict is `all <= tol`.
    pub residuals: BTreeMap<String, f64>,
    /// Per-block residuals of the blockwise conditions.
    pub block_residuals: BTreeMap<String, Vec<f64>>,
    pub warnings: Vec<String>,
}

impl CertificateReport {
    fn new(theorem: Theorem, tol: f64) -> Self {
        CertificateReport {
            verdict: false,
            theorem,
            normalization: theorem.normalization(),
            tol,
            residuals: BTreeMap::new(),
            block_residuals: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    fn scalar(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.to_string(), value);
    }

    fn blocks(&mut self, name: &str, values: Vec<f64>) {
        let worst = values.iter().copied().fold(0.0, f64::max);
        let worst = if values.iter().any(|v| v.is_nan()) { f64::INFINITY } else { worst };
        self.residuals.insert(name.to_string(), worst);
        self.block_residuals.insert(name.to_string(), values);
    }

    fn finish(mut self) -> Self {
        self.verdict = self.residuals.values().all(|&r| r <= self.tol);
        self
    }

    /// Conditions whose residual exceeds the tolerance.
    pub fn violations(&self) -> Vec<&str> {
        self.residuals
            .iter()
            .filter(|(_, &r)| !(r <= self.tol))
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

struct Blocks {
    /// `||u - v_i||`.
    b: Vec<f64>,
    /// `||x*_i||_*`.
    a: Vec<f64>,
    /// `<x*_i, u - v_i>`.
    pair: Vec<f64>,
    f: f64,
    sum_residual: f64,
}

fn blocks(prob: &ProblemInstance, cert: &Certificate) -> Result<Blocks> {
    cert.check_shape(prob)?;
    let g = prob.norm().ground;
    let res = prob.residuals(&cert.solution);
    let b: Vec<f64> = res.iter().map(|r| g.norm(r)).collect();
    let a: Vec<f64> = cert.duals.blocks().iter().map(|x| g.dual_norm(x)).collect();
    let pair = cert.duals.blocks().iter().zip(&res).map(|(x, r)| dot(x, r)).collect();
    let f = prob.objective(&cert.solution);
    let sum_residual = g.dual_norm(&cert.duals.block_sum());
    Ok(Blocks { b, a, pair, f, sum_residual })
}

fn require(prob: &ProblemInstance, theorem: Theorem) -> Result<()> {
    let expected = Theorem::for_generator(&prob.norm().generator);
    if theorem != Theorem::General && theorem != expected {
        return Err(Error::Contract(format!(
            "characterization {} does not apply to generator {:?}",
            theorem.name(),
            prob.norm().generator
        )));
    }
    Ok(())
}

/// Sum condition, unit dual product norm and pairing equal to `f(u)`.
///
/// Tabulated generators are refused unless they pass sampled validation;
/// their dual norm comes from a lattice search.
pub fn check_general(prob: &ProblemInstance, cert: &Certificate, tol: f64) -> Result<CertificateReport> {
    let gen = &prob.norm().generator;
    if let PsiGenerator::Tabulated(_) = gen {
        let report = gen.validate(prob.n(), 4_096, 1e-9)?;
        if !report.passed() {
            return Err(Error::MembershipViolation(format!(
                "generator failed sampled validation: {:?}",
                report.failures()
            )));
        }
    }
    let bl = blocks(prob, cert)?;
    let scale = bl.f.max(1.0);
    let dual = prob.norm().dual_eval(&cert.duals, DEFAULT_DUAL_GRID)?;
    let pr = pairing(&cert.duals, &prob.residual_vector(&cert.solution)?)?;
    let mut rep = CertificateReport::new(Theorem::General, tol);
    rep.scalar("sum", bl.sum_residual);
    rep.scalar("normalization", (dual - 1.0).abs());
    rep.scalar("pairing", (pr - bl.f).abs() / scale);
    Ok(rep.finish())
}

/// Sum generator: `max ||x*_i||_* = 1`, `<x*_i, u - v_i> = ||u - v_i||` and
/// `(||x*_i||_* - 1) ||u - v_i|| = 0`.
pub fn check_fermat_torricelli(prob: &ProblemInstance, cert: &Certificate, tol: f64) -> Result<CertificateReport> {
    require(prob, Theorem::FermatTorricelli)?;
    let bl = blocks(prob, cert)?;
    let s = bl.f.max(1.0);
    let n = prob.n();
    let mut rep = CertificateReport::new(Theorem::FermatTorricelli, tol);
    rep.scalar("sum", bl.sum_residual);
    rep.scalar("normalization", (bl.a.iter().copied().fold(0.0, f64::max) - 1.0).abs());
    rep.blocks("alignment", (0..n).map(|i| (bl.pair[i] - bl.b[i]).abs() / s).collect());
    rep.blocks("complementarity", (0..n).map(|i| ((bl.a[i] - 1.0) * bl.b[i]).abs() / s).collect());
    Ok(rep.finish())
}

/// Max generator: `sum ||x*_i||_* = 1`, blockwise alignment and dual mass
/// only on farthest anchors. Fewer than two nonzero dual blocks is reported
/// as a warning.
pub fn check_chebyshev(prob: &ProblemInstance, cert: &Certificate, tol: f64) -> Result<CertificateReport> {
    require(prob, Theorem::Chebyshev)?;
    let bl = blocks(prob, cert)?;
    let s = bl.f.max(1.0);
    let n = prob.n();
    let m = bl.b.iter().copied().fold(0.0, f64::max);
    let mut rep = CertificateReport::new(Theorem::Chebyshev, tol);
    rep.scalar("sum", bl.sum_residual);
    rep.scalar("normalization", (bl.a.iter().sum::<f64>() - 1.0).abs());
    rep.blocks("alignment", (0..n).map(|i| (bl.pair[i] - bl.a[i] * bl.b[i]).abs() / s).collect());
    rep.blocks("complementarity", (0..n).map(|i| ((bl.b[i] - m) * bl.a[i]).abs() / s).collect());
    let nonzero = bl.a.iter().filter(|&&v| v > tol).count();
    if nonzero < 2 {
        rep.warnings.push(format!(
            "only {nonzero} dual block(s) are nonzero; a valid certificate has at least two"
        ));
    }
    Ok(rep.finish())
}

/// `p` generator: `sum ||x*_i||_*^q = 1`, blockwise alignment and
/// `||x*_i||_*^q = ||u - v_i||^p / sum_j ||u - v_j||^p`.
pub fn check_p_fermat(prob: &ProblemInstance, cert: &Certificate, tol: f64) -> Result<CertificateReport> {
    require(prob, Theorem::PFermat)?;
    let p = prob.norm().generator.exponent().expect("psi_p generator");
    let q = conjugate_exponent(p);
    let bl = blocks(prob, cert)?;
    let s = bl.f.max(1.0);
    let n = prob.n();
    let bmax = bl.b.iter().copied().fold(0.0, f64::max);
    let bp: Vec<f64> = bl.b.iter().map(|v| (v / bmax).powf(p)).collect();
    let sbp: f64 = bp.iter().sum();
    let aq: Vec<f64> = bl.a.iter().map(|v| v.powf(q)).collect();
    let mut rep = CertificateReport::new(Theorem::PFermat, tol);
    rep.scalar("sum", bl.sum_residual);
    rep.scalar("normalization", (aq.iter().sum::<f64>() - 1.0).abs());
    rep.blocks("alignment", (0..n).map(|i| (bl.pair[i] - bl.a[i] * bl.b[i]).abs() / s).collect());
    rep.blocks("proportionality", (0..n).map(|i| (aq[i] - bp[i] / sbp).abs()).collect());
    Ok(rep.finish())
}

/// Runs the requested characterization; `None` picks the one matching the
/// generator.
pub fn check_certificate(
    prob: &ProblemInstance,
    cert: &Certificate,
    theorem: Option<Theorem>,
    tol: f64,
) -> Result<CertificateReport> {
    match theorem.unwrap_or_else(|| Theorem::for_generator(&prob.norm().generator)) {
        Theorem::General => check_general(prob, cert, tol),
        Theorem::FermatTorricelli => check_fermat_torricelli(prob, cert, tol),
        Theorem::Chebyshev => check_chebyshev(prob, cert, tol),
        Theorem::PFermat => check_p_fermat(prob, cert, tol),
    }
}

/// Outcome of [`recover_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Recovery {
    Certified { certificate: Certificate, report: CertificateReport },
    /// No dual vectors fit the optimality conditions within tolerance, so the
    /// candidate is not a minimizer.
    Infeasible { reason: String },
}

impl Recovery {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Recovery::Certified { certificate, .. } => Some(certificate),
            Recovery::Infeasible { .. } => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, Recovery::Certified { .. })
    }
}

/// Reconstructs dual vectors certifying that `u` minimizes the instance.
///
/// Smooth ground norms with the sum or `p` generators have unique duals in
/// closed form. Every other built-in combination is solved as a small linear
/// program over the blockwise subdifferential faces, with the coupling
/// `sum x*_i = 0` relaxed by slacks whose total is minimized. The result is
/// then run through the matching checker at `tol`.
pub fn recover_certificate(prob: &ProblemInstance, u: &Vector, tol: f64) -> Result<Recovery> {
    check_dim(prob.dim(), u.dim())?;
    let gen = &prob.norm().generator;
    let p = gen.exponent().ok_or_else(|| {
        Error::Unsupported("certificate recovery needs a psi_p generator".into())
    })?;
    let ground = prob.norm().ground;
    let duals = if ground.is_smooth() && !p.is_infinite() {
        closed_form_duals(prob, u, p, tol)
    } else {
        lp_duals(prob, u, p, tol)?
    };
    let Some(duals) = duals else {
        return Ok(Recovery::Infeasible {
            reason: "no dual vectors satisfy the blockwise conditions and sum to zero".into(),
        });
    };
    let cert = Certificate::new(u.clone(), ProductVector::new(duals.into_iter().map(Vector::new).collect::<Result<_>>()?)?);
    let report = check_certificate(prob, &cert, None, tol)?;
    if report.verdict {
        Ok(Recovery::Certified { certificate: cert, report })
    } else {
        Ok(Recovery::Infeasible {
            reason: format!("best dual candidate violates {:?}: {:?}", report.violations(), report.residuals),
        })
    }
}

fn zero_block_tol(prob: &ProblemInstance, u: &[f64], tol: f64) -> f64 {
    tol * prob.objective(u).max(1.0)
}

/// Ground-norm gradients scaled by the generator weights. A block sitting
/// on its anchor under the sum generator absorbs the remaining balance.
fn closed_form_duals(prob: &ProblemInstance, u: &[f64], p: f64, tol: f64) -> Option<Vec<Vec<f64>>> {
    let g = prob.norm().ground;
    let res = prob.residuals(u);
    let b: Vec<f64> = res.iter().map(|r| g.norm(r)).collect();
    let zt = zero_block_tol(prob, u, tol);
    let f = prob.objective(u);
    let mut duals: Vec<Vec<f64>> = res
        .iter()
        .zip(&b)
        .map(|(r, &bi)| {
            let w = if p == 1.0 { 1.0 } else { (bi / f).powf(p - 1.0) };
            if p == 1.0 && bi <= zt {
                vec![0.0; r.len()]
            } else {
                g.subgradient(r).into_iter().map(|c| c * w).collect()
            }
        })
        .collect();
    if p == 1.0 {
        if let Some(j) = (0..b.len()).find(|&j| b[j] <= zt) {
            let mut rest = vec![0.0; u.len()];
            for (i, d) in duals.iter().enumerate() {
                if i != j {
                    for (acc, c) in rest.iter_mut().zip(d) {
                        *acc -= c;
                    }
                }
            }
            if g.dual_norm(&rest) > 1.0 + tol {
                return None;
            }
            duals[j] = rest;
        }
    }
    Some(duals)
}

/// Block dual norm: fixed, or an LP variable.
#[derive(Clone, Copy)]
enum Mass {
    Fixed(f64),
    Var(usize),
}

/// Coordinate expression `sum coef * var + constant`.
#[derive(Clone, Default)]
struct Affine {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl Affine {
    fn mass(mass: Mass, coef: f64) -> Affine {
        match mass {
            Mass::Fixed(m) => Affine { terms: vec![], constant: m * coef },
            Mass::Var(v) => Affine { terms: vec![(v, coef)], constant: 0.0 },
        }
    }

    fn var(v: usize) -> Affine {
        Affine { terms: vec![(v, 1.0)], constant: 0.0 }
    }
}

/// Row `sum terms (+ mass * mass_coef) <sense> rhs`.
fn add_row_with_mass(lp: &mut LpBuilder, mut terms: Vec<(usize, f64)>, mass: Mass, mass_coef: f64, sense: Sense, rhs: f64) {
    let rhs = match mass {
        Mass::Fixed(m) => rhs - mass_coef * m,
        Mass::Var(v) => {
            terms.push((v, mass_coef));
            rhs
        }
    };
    lp.add_row(terms, sense, rhs);
}

fn lp_duals(prob: &ProblemInstance, u: &[f64], p: f64, tol: f64) -> Result<Option<Vec<Vec<f64>>>> {
    let g = prob.norm().ground;
    let n = prob.n();
    let d = prob.dim();
    let res = prob.residuals(u);
    let b: Vec<f64> = res.iter().map(|r| g.norm(r)).collect();
    let f = prob.objective(u);
    let zt = zero_block_tol(prob, u, tol);
    let bmax = b.iter().copied().fold(0.0, f64::max);

    let mut lp = LpBuilder::new();
    let masses: Vec<Mass> = if p.is_infinite() {
        let active: Vec<bool> = b.iter().map(|&v| v >= bmax - tol * bmax.max(1.0)).collect();
        let m: Vec<Mass> = active
            .iter()
            .map(|&a| if a { Mass::Var(lp.add_var(0.0, false)) } else { Mass::Fixed(0.0) })
            .collect();
        let terms = m.iter().filter_map(|x| if let Mass::Var(v) = x { Some((*v, 1.0)) } else { None }).collect();
        lp.add_row(terms, Sense::Eq, 1.0);
        m
    } else if p == 1.0 {
        vec![Mass::Fixed(1.0); n]
    } else {
        b.iter().map(|&v| Mass::Fixed((v / f).powf(p - 1.0))).collect()
    };

    let mut exprs: Vec<Vec<Affine>> = Vec::with_capacity(n);
    for i in 0..n {
        let r = &res[i];
        let mass = masses[i];
        if let Mass::Fixed(m) = mass {
            if m == 0.0 {
                exprs.push(vec![Affine::default(); d]);
                continue;
            }
        }
        let mut e = vec![Affine::default(); d];
        if b[i] <= zt {
            // Sits on its anchor: any dual vector of norm at most the mass.
            match g {
                GroundNorm::Max => {
                    let mut total = Vec::new();
                    for ek in e.iter_mut() {
                        let pos = lp.add_var(0.0, false);
                        let neg = lp.add_var(0.0, false);
                        *ek = Affine { terms: vec![(pos, 1.0), (neg, -1.0)], constant: 0.0 };
                        total.push((pos, 1.0));
                        total.push((neg, 1.0));
                    }
                    add_row_with_mass(&mut lp, total, mass, -1.0, Sense::Le, 0.0);
                }
                GroundNorm::Sum => {
                    for ek in e.iter_mut() {
                        let z = lp.add_var(0.0, true);
                        add_row_with_mass(&mut lp, vec![(z, 1.0)], mass, -1.0, Sense::Le, 0.0);
                        add_row_with_mass(&mut lp, vec![(z, -1.0)], mass, -1.0, Sense::Le, 0.0);
                        *ek = Affine::var(z);
                    }
                }
                _ => {
                    // Smooth ground with a zero block only arises for the
                    // max generator, where the block is inactive.
                    return Err(Error::InternalConsistency(
                        "zero block with nonzero mass on a smooth ground norm".into(),
                    ));
                }
            }
        } else {
            match g {
                GroundNorm::Max => {
                    let m = b[i];
                    let mut total = Vec::new();
                    for k in 0..d {
                        if r[k].abs() >= m - tol * m.max(1.0) {
                            let lam = lp.add_var(0.0, false);
                            e[k] = Affine { terms: vec![(lam, sgn(r[k]))], constant: 0.0 };
                            total.push((lam, 1.0));
                        }
                    }
                    add_row_with_mass(&mut lp, total, mass, -1.0, Sense::Eq, 0.0);
                }
                GroundNorm::Sum => {
                    let zero = tol * b[i].max(1.0);
                    for k in 0..d {
                        if r[k].abs() > zero {
                            e[k] = Affine::mass(mass, sgn(r[k]));
                        } else {
                            let z = lp.add_var(0.0, true);
                            add_row_with_mass(&mut lp, vec![(z, 1.0)], mass, -1.0, Sense::Le, 0.0);
                            add_row_with_mass(&mut lp, vec![(z, -1.0)], mass, -1.0, Sense::Le, 0.0);
                            e[k] = Affine::var(z);
                        }
                    }
                }
                _ => {
                    for (ek, gk) in e.iter_mut().zip(g.subgradient(r)) {
                        *ek = Affine::mass(mass, gk);
                    }
                }
            }
        }
        exprs.push(e);
    }

    // Coupling with slacks: sum_i x*_i + e_plus - e_minus = 0.
    for k in 0..d {
        let mut terms = Vec::new();
        let mut constant = 0.0;
        for e in &exprs {
            terms.extend(e[k].terms.iter().copied());
            constant += e[k].constant;
        }
        let ep = lp.add_var(1.0, false);
        let em = lp.add_var(1.0, false);
        terms.push((ep, 1.0));
        terms.push((em, -1.0));
        lp.add_row(terms, Sense::Eq, -constant);
    }

    let Some(sol) = lp.minimize()? else {
        return Ok(None);
    };
    let duals = exprs
        .iter()
        .map(|e| {
            e.iter()
                .map(|a| a.constant + a.terms.iter().map(|&(v, c)| c * sol.values[v]).sum::<f64>())
                .collect()
        })
        .collect();
    Ok(Some(duals))
}
