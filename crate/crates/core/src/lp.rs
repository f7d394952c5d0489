//! Dense two-phase tableau simplex for small linear programs.
//!
//! Standard form: `min c x  s.t.  A x = b, x >= 0`. Dantzig pricing with a
//! switch to Bland's rule once degenerate cycling becomes plausible.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers `y` with `c - A^T y >= 0` and `b y = objective`.
    pub duals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

struct Tableau {
    m: usize,
    /// Columns: structural, then one artificial per row, then the rhs.
    cols: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
    rc: Vec<f64>,
    obj: f64,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.cols + 1;
        let p = self.at(r, j);
        for k in 0..w {
            self.t[r * w + k] /= p;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + j];
            if f != 0.0 {
                for k in 0..w {
                    self.t[i * w + k] -= f * self.t[r * w + k];
                }
                self.t[i * w + j] = 0.0;
            }
        }
        let f = self.rc[j];
        if f != 0.0 {
            for k in 0..self.cols {
                self.rc[k] -= f * self.t[r * w + k];
            }
            self.obj -= f * self.rhs(r);
            self.rc[j] = 0.0;
        }
        self.basis[r] = j;
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.rc = cost.to_vec();
        self.obj = 0.0;
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for k in 0..self.cols {
                    self.rc[k] -= cb * self.at(i, k);
                }
                self.obj -= cb * self.rhs(i);
            }
        }
    }

    /// Runs the simplex loop over columns `0..allowed`. `Ok(false)` means unbounded.
    fn optimize(&mut self, allowed: usize) -> Result<bool> {
        let bland_after = 50 * (self.m + allowed);
        let limit = 200 * (self.m + allowed) + 10_000;
        let scale = self.rc[..allowed].iter().fold(1.0_f64, |a, c| a.max(c.abs()));
        for iter in 0..limit {
            let bland = iter >= bland_after;
            let mut enter = None;
            let mut best = -1e-12 * scale;
            for j in 0..allowed {
                if self.rc[j] < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = self.rc[j];
                }
            }
            let Some(j) = enter else { return Ok(true) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, j);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i).max(0.0) / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((r, best_ratio)) => {
                            let tie = (ratio - best_ratio).abs() <= 1e-12 * best_ratio.max(1.0);
                            if ratio < best_ratio && !tie
                                || tie && (if bland { self.basis[i] < self.basis[r] } else { a > self.at(r, j) })
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else { return Ok(false) };
            self.pivot(r, j);
        }
        Err(Error::Lp(format!("simplex iteration limit {limit} exceeded")))
    }
}

/// Solves `min c x, A x = b, x >= 0` with a dense tableau.
pub fn solve_standard(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpOutcome> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::Lp(format!("inconsistent shapes: {m} rows, {} rhs entries, {n} costs", b.len())));
    }
    if a.iter().flatten().chain(b).chain(c).any(|v| !v.is_finite()) {
        return Err(Error::Lp("non-finite coefficient".into()));
    }
    let cols = n + m;
    let w = cols + 1;
    let mut t = vec![0.0; m * w];
    let mut flipped = vec![false; m];
    for i in 0..m {
        let s = if b[i] < 0.0 { -1.0 } else { 1.0 };
        flipped[i] = s < 0.0;
        for j in 0..n {
            t[i * w + j] = s * a[i][j];
        }
        t[i * w + n + i] = 1.0;
        t[i * w + cols] = s * b[i];
    }
    let mut tab = Tableau { m, cols, t, basis: (n..n + m).collect(), rc: vec![], obj: 0.0 };

    let mut phase1 = vec![0.0; cols];
    phase1[n..].fill(1.0);
    tab.set_costs(&phase1);
    tab.optimize(n)?;
    let bscale = b.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    if -tab.obj > 1e-9 * bscale {
        return Ok(LpOutcome::Infeasible);
    }
    // Drive artificials out of the basis where a structural pivot exists;
    // rows without one are redundant and keep their artificial at zero.
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(j) = (0..n).max_by(|&x, &y| tab.at(r, x).abs().total_cmp(&tab.at(r, y).abs())) {
                if tab.at(r, j).abs() > 1e-9 {
                    tab.pivot(r, j);
                }
            }
        }
    }

    let mut phase2 = c.to_vec();
    phase2.resize(cols, 0.0);
    tab.set_costs(&phase2);
    if !tab.optimize(n)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0; n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    let objective = x.iter().zip(c).map(|(a, b)| a * b).sum();
    // Artificial columns hold B^{-1}; their reduced costs under zero cost are -y.
    let duals = (0..m)
        .map(|i| {
            let y = -tab.rc[n + i];
            if flipped[i] {
                -y
            } else {
                y
            }
        })
        .collect();
    Ok(LpOutcome::Optimal(LpSolution { x, objective, duals }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

type Row = (Vec<(usize, f64)>, Sense, f64);

/// Incremental model with free or nonnegative variables and mixed rows.
#[derive(Debug, Clone, Default)]
pub struct LpBuilder {
    cost: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<Row>,
}

/// Solution of an [`LpBuilder`] model in the builder's own variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, cost: f64, free: bool) -> usize {
        self.cost.push(cost);
        self.free.push(free);
        self.cost.len() - 1
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push((coefs, sense, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    /// Minimizes the model; `None` when infeasible.
    pub fn minimize(&self) -> Result<Option<ModelSolution>> {
        let nv = self.cost.len();
        let mut col_of = Vec::with_capacity(nv);
        let mut c = Vec::new();
        for v in 0..nv {
            col_of.push(c.len());
            c.push(self.cost[v]);
            if self.free[v] {
                c.push(-self.cost[v]);
            }
        }
        let structural = c.len();
        let slacks = self.rows.iter().filter(|r| r.1 != Sense::Eq).count();
        let total = structural + slacks;
        c.resize(total, 0.0);
        let mut a = vec![vec![0.0; total]; self.rows.len()];
        let mut b = Vec::with_capacity(self.rows.len());
        let mut next_slack = structural;
        for (i, (coefs, sense, rhs)) in self.rows.iter().enumerate() {
            for &(v, coef) in coefs {
                if v >= nv {
                    return Err(Error::Lp(format!("row {i} references unknown variable {v}")));
                }
                a[i][col_of[v]] += coef;
                if self.free[v] {
                    a[i][col_of[v] + 1] -= coef;
                }
            }
            match sense {
                Sense::Le => {
                    a[i][next_slack] = 1.0;
                    next_slack += 1;
                }
                Sense::Ge => {
                    a[i][next_slack] = -1.0;
                    next_slack += 1;
                }
                Sense::Eq => {}
            }
            b.push(*rhs);
        }
        match solve_standard(&a, &b, &c)? {
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(Error::Lp("model is unbounded".into())),
            LpOutcome::Optimal(sol) => {
                let values = (0..nv)
                    .map(|v| {
                        let k = col_of[v];
                        if self.free[v] {
                            sol.x[k] - sol.x[k + 1]
                        } else {
                            sol.x[k]
                        }
                    })
                    .collect();
                Ok(Some(ModelSolution { values, objective: sol.objective, duals: sol.duals }))
            }
        }
    }
}
