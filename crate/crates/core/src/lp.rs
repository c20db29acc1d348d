//! Exact rational linear programming and strict separation certificates.
//!
//! Two-phase dense simplex over `BigRational` with Bland's pivoting rule.
//! Variables are free by default; `nonneg` marks sign-restricted columns.

use crate::rat::Rat;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("separation requires a nonempty vertex list")]
    EmptyVertexList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub rel: Relation,
    pub rhs: Rat,
}

impl Constraint {
    pub fn le(coeffs: Vec<Rat>, rhs: Rat) -> Self {
        Constraint {
            coeffs,
            rel: Relation::Le,
            rhs,
        }
    }

    pub fn eq(coeffs: Vec<Rat>, rhs: Rat) -> Self {
        Constraint {
            coeffs,
            rel: Relation::Eq,
            rhs,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<Rat>,
    pub constraints: Vec<Constraint>,
    /// Per-variable sign restriction; `false` means free.
    pub nonneg: Vec<bool>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<Rat>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            nonneg: vec![false; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal {
        point: Vec<Rat>,
        value: Rat,
        /// Dual multipliers per constraint, the retained optimality
        /// certificate: duals . rhs == value, and the dual feasibility
        /// inequalities hold (see `verify_optimal`).
        duals: Vec<Rat>,
    },
    Unbounded {
        point: Vec<Rat>,
        ray: Vec<Rat>,
    },
    Infeasible,
}

struct Tableau {
    rows: Vec<Vec<Rat>>, // m x (n_cols + 1), last entry is rhs
    cost: Vec<Rat>,      // n_cols + 1; reduced costs, last = -objective
    basis: Vec<usize>,
    allowed: Vec<bool>,
    n_cols: usize,
}

enum SimplexEnd {
    Optimal,
    Unbounded { entering: usize },
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = &*v / &p;
        }
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for j in 0..=self.n_cols {
                let delta = &f * &self.rows[r][j];
                self.rows[i][j] = &self.rows[i][j] - delta;
            }
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for j in 0..=self.n_cols {
                let delta = &f * &self.rows[r][j];
                self.cost[j] = &self.cost[j] - delta;
            }
        }
        self.basis[r] = c;
    }

    fn price_out(&mut self, c_vec: &[Rat]) {
        self.cost = c_vec.to_vec();
        self.cost.push(Rat::zero());
        for i in 0..self.rows.len() {
            let cb = self.cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..=self.n_cols {
                let delta = &cb * &self.rows[i][j];
                self.cost[j] = &self.cost[j] - delta;
            }
        }
    }

    /// Bland's rule simplex on the current (min) cost row.
    fn run(&mut self) -> SimplexEnd {
        loop {
            let entering = (0..self.n_cols)
                .find(|&j| self.allowed[j] && self.cost[j] < Rat::zero());
            let Some(col) = entering else {
                return SimplexEnd::Optimal;
            };
            let mut best: Option<(Rat, usize, usize)> = None; // (ratio, basis var, row)
            for i in 0..self.rows.len() {
                if self.rows[i][col] > Rat::zero() {
                    let ratio = &self.rows[i][self.n_cols] / &self.rows[i][col];
                    let replace = match &best {
                        None => true,
                        Some((r, bv, _)) => {
                            ratio < *r || (ratio == *r && self.basis[i] < *bv)
                        }
                    };
                    if replace {
                        best = Some((ratio, self.basis[i], i));
                    }
                }
            }
            match best {
                Some((_, _, row)) => self.pivot(row, col),
                None => return SimplexEnd::Unbounded { entering: col },
            }
        }
    }

    fn std_point(&self) -> Vec<Rat> {
        let mut u = vec![Rat::zero(); self.n_cols];
        for (i, &b) in self.basis.iter().enumerate() {
            u[b] = self.rows[i][self.n_cols].clone();
        }
        u
    }
}

/// Maps original (possibly free) variables to standard-form columns.
struct VarMap {
    cols: Vec<(usize, Option<usize>)>, // (plus col, minus col for free vars)
    n_std: usize,
}

impl VarMap {
    fn build(nonneg: &[bool]) -> Self {
        let mut cols = Vec::with_capacity(nonneg.len());
        let mut next = 0usize;
        for &nn in nonneg {
            if nn {
                cols.push((next, None));
                next += 1;
            } else {
                cols.push((next, Some(next + 1)));
                next += 2;
            }
        }
        VarMap { cols, n_std: next }
    }

    fn recover(&self, u: &[Rat]) -> Vec<Rat> {
        self.cols
            .iter()
            .map(|&(p, m)| match m {
                None => u[p].clone(),
                Some(m) => &u[p] - &u[m],
            })
            .collect()
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    let n = lp.n_vars();
    if lp.nonneg.len() != n {
        return Err(LpError::Malformed("nonneg mask length".into()));
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(LpError::Malformed(format!("constraint {i} width")));
        }
    }
    let minimize = lp.sense == Sense::Minimize;
    let obj: Vec<Rat> = if minimize {
        lp.objective.clone()
    } else {
        lp.objective.iter().map(|c| -c).collect()
    };

    let vmap = VarMap::build(&lp.nonneg);
    let m = lp.constraints.len();
    let n_slack = lp
        .constraints
        .iter()
        .filter(|c| c.rel == Relation::Le)
        .count();
    let n_cols = vmap.n_std + n_slack + m; // + artificials
    let art_start = vmap.n_std + n_slack;

    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut flipped = vec![false; m];
    let mut slack_idx = 0usize;
    for (k, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![Rat::zero(); n_cols + 1];
        for (j, coef) in c.coeffs.iter().enumerate() {
            let (p, mcol) = vmap.cols[j];
            row[p] = coef.clone();
            if let Some(mc) = mcol {
                row[mc] = -coef;
            }
        }
        if c.rel == Relation::Le {
            row[vmap.n_std + slack_idx] = Rat::from_integer(1.into());
            slack_idx += 1;
        }
        row[n_cols] = c.rhs.clone();
        if row[n_cols] < Rat::zero() {
            for v in row.iter_mut() {
                *v = -&*v;
            }
            flipped[k] = true;
        }
        row[art_start + k] = Rat::from_integer(1.into());
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        cost: Vec::new(),
        basis: (art_start..art_start + m).collect(),
        allowed: vec![true; n_cols],
        n_cols,
    };

    // Phase 1: minimize the sum of artificials.
    let mut phase1 = vec![Rat::zero(); n_cols];
    for j in art_start..n_cols {
        phase1[j] = Rat::from_integer(1.into());
    }
    t.price_out(&phase1);
    match t.run() {
        SimplexEnd::Optimal => {}
        SimplexEnd::Unbounded { .. } => unreachable!("phase-1 objective is bounded below"),
    }
    let phase1_val = -t.cost[n_cols].clone();
    if !phase1_val.is_zero() {
        return Ok(LpOutcome::Infeasible);
    }
    // Drive basic artificials out where possible; rows that cannot pivot are
    // redundant and stay basic at level zero.
    for i in 0..m {
        if t.basis[i] >= art_start {
            if let Some(j) = (0..art_start).find(|&j| !t.rows[i][j].is_zero()) {
                t.pivot(i, j);
            }
        }
    }
    for j in art_start..n_cols {
        t.allowed[j] = false;
    }

    // Phase 2.
    let mut c_std = vec![Rat::zero(); n_cols];
    for (j, coef) in obj.iter().enumerate() {
        let (p, mcol) = vmap.cols[j];
        c_std[p] = coef.clone();
        if let Some(mc) = mcol {
            c_std[mc] = -coef;
        }
    }
    t.price_out(&c_std);
    match t.run() {
        SimplexEnd::Optimal => {
            let u = t.std_point();
            let point = vmap.recover(&u);
            let value: Rat = lp
                .objective
                .iter()
                .zip(&point)
                .map(|(c, x)| c * x)
                .sum();
            // Dual of standard-form row i is the negated reduced cost of its
            // artificial column; undo row flips and the max->min negation.
            let mut duals = Vec::with_capacity(m);
            for k in 0..m {
                let mut y = -t.cost[art_start + k].clone();
                if flipped[k] {
                    y = -y;
                }
                if !minimize {
                    y = -y;
                }
                duals.push(y);
            }
            Ok(LpOutcome::Optimal {
                point,
                value,
                duals,
            })
        }
        SimplexEnd::Unbounded { entering } => {
            let u = t.std_point();
            let mut ray_std = vec![Rat::zero(); n_cols];
            ray_std[entering] = Rat::from_integer(1.into());
            for (i, &b) in t.basis.iter().enumerate() {
                ray_std[b] = -t.rows[i][entering].clone();
            }
            Ok(LpOutcome::Unbounded {
                point: vmap.recover(&u),
                ray: vmap.recover(&ray_std),
            })
        }
    }
}

/// Exact re-check of an `Optimal` outcome: primal feasibility, objective
/// value, dual feasibility and strong duality.
pub fn verify_optimal(lp: &LinearProgram, point: &[Rat], value: &Rat, duals: &[Rat]) -> bool {
    // Primal feasibility.
    for c in &lp.constraints {
        let lhs: Rat = c.coeffs.iter().zip(point).map(|(a, x)| a * x).sum();
        let ok = match c.rel {
            Relation::Le => lhs <= c.rhs,
            Relation::Eq => lhs == c.rhs,
        };
        if !ok {
            return false;
        }
    }
    for (j, &nn) in lp.nonneg.iter().enumerate() {
        if nn && point[j] < Rat::zero() {
            return false;
        }
    }
    let obj: Rat = lp.objective.iter().zip(point).map(|(c, x)| c * x).sum();
    if obj != *value {
        return false;
    }
    // Dual feasibility: for Maximize, Le-rows need y >= 0 and A'y >= c
    // (equality on free columns); for Minimize the inequalities reverse.
    let maximize = lp.sense == Sense::Maximize;
    for (k, c) in lp.constraints.iter().enumerate() {
        if c.rel == Relation::Le {
            let ok = if maximize {
                duals[k] >= Rat::zero()
            } else {
                duals[k] <= Rat::zero()
            };
            if !ok {
                return false;
            }
        }
    }
    for j in 0..lp.n_vars() {
        let aty: Rat = lp
            .constraints
            .iter()
            .enumerate()
            .map(|(k, c)| &duals[k] * &c.coeffs[j])
            .sum();
        let cj = &lp.objective[j];
        let ok = if lp.nonneg[j] {
            if maximize {
                aty >= *cj
            } else {
                aty <= *cj
            }
        } else {
            aty == *cj
        };
        if !ok {
            return false;
        }
    }
    let yb: Rat = lp
        .constraints
        .iter()
        .enumerate()
        .map(|(k, c)| &duals[k] * &c.rhs)
        .sum();
    yb == *value
}

/// Weighted dot product used by the atomwise pairing.
pub fn weighted_dot(u: &[Rat], v: &[Rat], weights: &[Rat]) -> Rat {
    u.iter()
        .zip(v)
        .zip(weights)
        .map(|((a, b), w)| a * b * w)
        .sum()
}

#[derive(Debug, Clone)]
pub struct AtomSeparation {
    /// Separating functional in atom coordinates, ||w||_1 = 1.
    pub functional: Vec<Rat>,
    /// Exact gap <x,w> - sup over the set, strictly positive.
    pub margin: Rat,
}

#[derive(Debug, Clone)]
pub enum SeparationOutcome {
    Separated(AtomSeparation),
    NoSeparation,
}

/// Membership of `x` in conv(vertices) + cone(rays) by exact feasibility LP.
pub fn polytope_member(
    x: &[Rat],
    vertices: &[Vec<Rat>],
    rays: &[Vec<Rat>],
) -> Result<bool, LpError> {
    if vertices.is_empty() {
        return Err(LpError::EmptyVertexList);
    }
    let d = x.len();
    let k = vertices.len();
    let l = rays.len();
    let mut lp = LinearProgram::new(Sense::Minimize, vec![Rat::zero(); k + l]);
    lp.nonneg = vec![true; k + l];
    let mut conv = vec![Rat::zero(); k + l];
    for item in conv.iter_mut().take(k) {
        *item = Rat::from_integer(1.into());
    }
    lp.push(Constraint::eq(conv, Rat::from_integer(1.into())));
    for i in 0..d {
        let mut row = Vec::with_capacity(k + l);
        for v in vertices {
            row.push(v[i].clone());
        }
        for r in rays {
            row.push(r[i].clone());
        }
        lp.push(Constraint::eq(row, x[i].clone()));
    }
    Ok(!matches!(solve(&lp)?, LpOutcome::Infeasible))
}

/// Strict separation of a point from conv(vertices) + cone(rays) under the
/// weighted pairing. Finds w maximizing the worst-case gap over the l1 ball;
/// a strictly positive optimum certifies strict separation.
pub fn separate_point_from_atomwise_polytope(
    x: &[Rat],
    vertices: &[Vec<Rat>],
    rays: &[Vec<Rat>],
    weights: &[Rat],
) -> Result<SeparationOutcome, LpError> {
    if vertices.is_empty() {
        return Err(LpError::EmptyVertexList);
    }
    let d = x.len();
    if weights.len() != d || weights.iter().any(|w| *w <= Rat::zero()) {
        return Err(LpError::Malformed("weights must be strictly positive".into()));
    }
    // Variables: w (d free), t (free), a (d nonneg with |w_i| <= a_i).
    let n = 2 * d + 1;
    let t_idx = d;
    let a_start = d + 1;
    let mut obj = vec![Rat::zero(); n];
    obj[t_idx] = Rat::from_integer(1.into());
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    lp.nonneg = vec![false; n];
    for j in a_start..n {
        lp.nonneg[j] = true;
    }
    for v in vertices {
        // t - <x - v, w>_weights <= 0
        let mut row = vec![Rat::zero(); n];
        for i in 0..d {
            row[i] = &weights[i] * &(&v[i] - &x[i]);
        }
        row[t_idx] = Rat::from_integer(1.into());
        lp.push(Constraint::le(row, Rat::zero()));
    }
    for r in rays {
        let mut row = vec![Rat::zero(); n];
        for i in 0..d {
            row[i] = &weights[i] * &r[i];
        }
        lp.push(Constraint::le(row, Rat::zero()));
    }
    for i in 0..d {
        let mut up = vec![Rat::zero(); n];
        up[i] = Rat::from_integer(1.into());
        up[a_start + i] = Rat::from_integer((-1).into());
        lp.push(Constraint::le(up, Rat::zero()));
        let mut lo = vec![Rat::zero(); n];
        lo[i] = Rat::from_integer((-1).into());
        lo[a_start + i] = Rat::from_integer((-1).into());
        lp.push(Constraint::le(lo, Rat::zero()));
    }
    let mut ball = vec![Rat::zero(); n];
    for item in ball.iter_mut().skip(a_start) {
        *item = Rat::from_integer(1.into());
    }
    lp.push(Constraint::le(ball, Rat::from_integer(1.into())));

    match solve(&lp)? {
        LpOutcome::Optimal { point, value, .. } => {
            if value <= Rat::zero() {
                return Ok(SeparationOutcome::NoSeparation);
            }
            let w: Vec<Rat> = point[..d].to_vec();
            let norm: Rat = w.iter().map(crate::rat::abs).sum();
            debug_assert!(norm > Rat::zero());
            let w: Vec<Rat> = w.iter().map(|wi| wi / &norm).collect();
            let x_val = weighted_dot(x, &w, weights);
            let sup = vertices
                .iter()
                .map(|v| weighted_dot(v, &w, weights))
                .max()
                .expect("nonempty vertices");
            let margin = &x_val - &sup;
            debug_assert!(margin > Rat::zero());
            Ok(SeparationOutcome::Separated(AtomSeparation {
                functional: w,
                margin,
            }))
        }
        LpOutcome::Unbounded { .. } => {
            Err(LpError::Malformed("separation LP cannot be unbounded".into()))
        }
        LpOutcome::Infeasible => {
            Err(LpError::Malformed("separation LP cannot be infeasible".into()))
        }
    }
}

/// One closed inequality row `coeffs . v <= rhs` of an atomwise polyhedron.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    pub coeffs: Vec<Rat>,
    pub rhs: Rat,
}

/// Separates a point from a nonempty H-form polyhedron. A violated row is a
/// separator; the margin is sharpened to the exact sup over the polyhedron.
pub fn separate_point_from_atomwise_hrep(
    x: &[Rat],
    rows: &[HalfSpace],
) -> Result<SeparationOutcome, LpError> {
    let mut best: Option<(Rat, usize)> = None;
    for (i, hs) in rows.iter().enumerate() {
        let lhs: Rat = hs.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let violation = &lhs - &hs.rhs;
        if violation > Rat::zero() {
            match &best {
                Some((v, _)) if *v >= violation => {}
                _ => best = Some((violation, i)),
            }
        }
    }
    let Some((_, idx)) = best else {
        return Ok(SeparationOutcome::NoSeparation);
    };
    let a = &rows[idx].coeffs;
    let norm: Rat = a.iter().map(crate::rat::abs).sum();
    if norm.is_zero() {
        return Err(LpError::Malformed("zero separator row".into()));
    }
    let w: Vec<Rat> = a.iter().map(|ai| ai / &norm).collect();
    let x_val: Rat = w.iter().zip(x).map(|(a, v)| a * v).sum();
    // Exact sup of w over the polyhedron.
    let mut lp = LinearProgram::new(Sense::Maximize, w.clone());
    for hs in rows {
        lp.push(Constraint::le(hs.coeffs.clone(), hs.rhs.clone()));
    }
    let sup = match solve(&lp)? {
        LpOutcome::Optimal { value, .. } => value,
        LpOutcome::Unbounded { .. } => {
            return Err(LpError::Malformed("sup along a constraint row is bounded".into()))
        }
        LpOutcome::Infeasible => {
            return Err(LpError::Malformed("separation from an empty polyhedron".into()))
        }
    };
    let margin = &x_val - &sup;
    debug_assert!(margin > Rat::zero());
    Ok(SeparationOutcome::Separated(AtomSeparation {
        functional: w,
        margin,
    }))
}
