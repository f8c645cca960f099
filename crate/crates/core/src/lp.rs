//! Exact linear programming over arbitrary-precision rationals.
//!
//! A dense two-phase simplex with Bland's rule (anti-cycling, deterministic)
//! solves small programs bit-for-bit reproducibly. On top of it sit the two
//! programs attached to an inequality system: the dual (one nonnegative
//! variable per inequality, one equality row per registered variable) whose
//! optimum encodes the intersection-ratio coefficient, and the primal
//! (maximize the negated special variable subject to the system itself).

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::ineq::SliSystem;
use crate::ratio;
use crate::Rational;

/// Constraint sense of one row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
}

/// A linear program: sparse rows over `n` variables, each variable either
/// nonnegative or free.
#[derive(Clone, Debug)]
pub struct LpStandard {
    pub n: usize,
    /// (sparse coefficients, sense, right-hand side) per row.
    pub rows: Vec<(Vec<(usize, Rational)>, Rel, Rational)>,
    /// Dense objective vector of length `n`.
    pub objective: Vec<Rational>,
    pub maximize: bool,
    /// Per variable: `true` for free, `false` for ≥ 0.
    pub free: Vec<bool>,
}

/// A basic feasible solution in the original variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSolution {
    pub values: Vec<Rational>,
    /// Original variables with a basic column, sorted.
    pub basis: Vec<usize>,
    pub objective: Rational,
    pub pivots: u64,
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal(VertexSolution),
    Infeasible,
    Unbounded,
}

struct Tableau {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    basis: Vec<usize>,
    /// Reduced-cost rows with their accumulated objective values; index 0
    /// is the real objective, index 1 (when present) the feasibility one.
    obj: Vec<(Vec<Rational>, Rational)>,
    pivots: u64,
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize) {
        self.pivots += 1;
        let div = self.a[r][e].clone();
        debug_assert!(!div.is_zero());
        if !div.is_one() {
            for x in self.a[r].iter_mut() {
                if !x.is_zero() {
                    *x = &*x / &div;
                }
            }
            self.b[r] = &self.b[r] / &div;
        }
        let prow = self.a[r].clone();
        let pb = self.b[r].clone();
        for r2 in 0..self.a.len() {
            if r2 == r || self.a[r2][e].is_zero() {
                continue;
            }
            let f = self.a[r2][e].clone();
            for (x, p) in self.a[r2].iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x = &*x - &(&f * p);
                }
            }
            self.b[r2] = &self.b[r2] - &(&f * &pb);
        }
        for (cbar, val) in self.obj.iter_mut() {
            if cbar[e].is_zero() {
                continue;
            }
            let f = cbar[e].clone();
            for (x, p) in cbar.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x = &*x - &(&f * p);
                }
            }
            // c·x = val + Σ cbar_j x_j stays invariant: the basic value of
            // the entering column is pb.
            *val = &*val + &(&f * &pb);
        }
        self.basis[r] = e;
    }

    /// Bland's rule: smallest eligible column with negative reduced cost;
    /// min-ratio row, ties by smallest basis variable. Returns false at
    /// optimality, `Err` marker via None ratio = unbounded.
    fn bland_step(&mut self, obj_idx: usize, eligible: usize) -> Result<bool> {
        let enter = (0..eligible).find(|&j| self.obj[obj_idx].0[j].is_negative());
        let Some(e) = enter else {
            return Ok(false);
        };
        let mut pick: Option<(usize, Rational)> = None;
        for r in 0..self.a.len() {
            if !self.a[r][e].is_positive() {
                continue;
            }
            let ratio = &self.b[r] / &self.a[r][e];
            match &pick {
                Some((_, best)) if ratio > *best => {}
                Some((br, best)) if ratio == *best && self.basis[*br] < self.basis[r] => {}
                _ => pick = Some((r, ratio)),
            }
        }
        let Some((r, _)) = pick else {
            return Err(Error::Internal("unbounded pivot column".into()));
        };
        self.pivot(r, e);
        Ok(true)
    }
}

/// Solves the program exactly; the returned vertex is determined by the
/// deterministic pivot order.
pub fn simplex_solve(p: &LpStandard) -> Result<LpOutcome> {
    if p.objective.len() != p.n || p.free.len() != p.n {
        return Err(Error::Internal("objective/bounds length mismatch".into()));
    }
    for (coeffs, _, _) in &p.rows {
        if coeffs.iter().any(|&(j, _)| j >= p.n) {
            return Err(Error::Internal("row column out of range".into()));
        }
    }
    // Standard form: split free variables, add slacks, orient rhs ≥ 0.
    let mut plus = vec![0usize; p.n];
    let mut minus = vec![None; p.n];
    let mut ncols = 0usize;
    for i in 0..p.n {
        plus[i] = ncols;
        ncols += 1;
        if p.free[i] {
            minus[i] = Some(ncols);
            ncols += 1;
        }
    }
    let m = p.rows.len();
    let mut a = vec![Vec::new(); m];
    let mut b = Vec::with_capacity(m);
    let mut slack_of = vec![None; m];
    for (r, (_, rel, _)) in p.rows.iter().enumerate() {
        if *rel == Rel::Le {
            slack_of[r] = Some(ncols);
            ncols += 1;
        }
    }
    let nstruct = ncols;
    for (r, (coeffs, _, rhs)) in p.rows.iter().enumerate() {
        let mut row = vec![Rational::zero(); nstruct];
        for (j, c) in coeffs {
            row[plus[*j]] = &row[plus[*j]] + c;
            if let Some(mc) = minus[*j] {
                row[mc] = &row[mc] - c;
            }
        }
        if let Some(s) = slack_of[r] {
            row[s] = Rational::one();
        }
        let mut rhs = rhs.clone();
        if rhs.is_negative() {
            for x in row.iter_mut() {
                *x = -std::mem::take(x);
            }
            rhs = -rhs;
        }
        a[r] = row;
        b.push(rhs);
    }
    // Minimization objective over standard columns.
    let mut cmin = vec![Rational::zero(); nstruct];
    for i in 0..p.n {
        let c = if p.maximize { -p.objective[i].clone() } else { p.objective[i].clone() };
        cmin[plus[i]] = &cmin[plus[i]] + &c;
        if let Some(mc) = minus[i] {
            cmin[mc] = &cmin[mc] - &c;
        }
    }
    // Initial basis: usable slacks, artificials elsewhere.
    let mut basis = Vec::with_capacity(m);
    let mut art_cols = Vec::new();
    for r in 0..m {
        match slack_of[r] {
            Some(s) if a[r][s].is_one() => basis.push(s),
            _ => {
                let col = ncols + art_cols.len();
                art_cols.push(col);
                basis.push(col);
            }
        }
    }
    let total = ncols + art_cols.len();
    for (r, row) in a.iter_mut().enumerate() {
        row.resize(total, Rational::zero());
        if basis[r] >= ncols {
            row[basis[r]] = Rational::one();
        }
    }
    let mut cbar2 = cmin;
    cbar2.resize(total, Rational::zero());
    let mut cbar1 = vec![Rational::zero(); total];
    for &c in &art_cols {
        cbar1[c] = Rational::one();
    }
    let mut t = Tableau {
        a,
        b,
        basis,
        obj: vec![(cbar2, Rational::zero()), (cbar1, Rational::zero())],
        pivots: 0,
    };
    // Reduce both objective rows against the initial basis.
    for r in 0..m {
        let bv = t.basis[r];
        for oi in 0..t.obj.len() {
            if t.obj[oi].0[bv].is_zero() {
                continue;
            }
            let f = t.obj[oi].0[bv].clone();
            let prow = t.a[r].clone();
            let pb = t.b[r].clone();
            for (x, p_) in t.obj[oi].0.iter_mut().zip(&prow) {
                if !p_.is_zero() {
                    *x = &*x - &(&f * p_);
                }
            }
            t.obj[oi].1 = &t.obj[oi].1 + &(&f * &pb);
        }
    }
    // Phase one: minimize artificial mass; obj[i].1 carries the objective
    // value of the current basic solution.
    if !art_cols.is_empty() {
        while t.bland_step(1, total)? {}
        if !t.obj[1].1.is_zero() {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive artificials out of the basis; all-zero rows are redundant.
        let mut r = 0;
        while r < t.a.len() {
            if t.basis[r] >= ncols {
                match (0..ncols).find(|&j| !t.a[r][j].is_zero()) {
                    Some(j) => t.pivot(r, j),
                    None => {
                        t.a.swap_remove(r);
                        t.b.swap_remove(r);
                        t.basis.swap_remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for row in t.a.iter_mut() {
            row.truncate(ncols);
        }
        for (cbar, _) in t.obj.iter_mut() {
            cbar.truncate(ncols);
        }
    }
    // Phase two.
    loop {
        match t.bland_step(0, ncols) {
            Ok(true) => {}
            Ok(false) => break,
            Err(_) => return Ok(LpOutcome::Unbounded),
        }
    }
    let mut xstd = vec![Rational::zero(); ncols];
    for (r, &bv) in t.basis.iter().enumerate() {
        xstd[bv] = t.b[r].clone();
    }
    let mut values = Vec::with_capacity(p.n);
    for i in 0..p.n {
        let mut v = xstd[plus[i]].clone();
        if let Some(mc) = minus[i] {
            v = &v - &xstd[mc];
        }
        values.push(v);
    }
    let mut orig_basis: Vec<usize> = Vec::new();
    for &bv in &t.basis {
        for i in 0..p.n {
            if plus[i] == bv || minus[i] == Some(bv) {
                orig_basis.push(i);
            }
        }
    }
    orig_basis.sort_unstable();
    orig_basis.dedup();
    let vmin = t.obj[0].1.clone();
    let objective = if p.maximize { -vmin } else { vmin };
    Ok(LpOutcome::Optimal(VertexSolution {
        values,
        basis: orig_basis,
        objective,
        pivots: t.pivots,
    }))
}

/// Dual program of an inequality system: one nonnegative variable per
/// inequality, one equality row per registered variable. Edge-set variable
/// rows have right-hand side 0, the special variable's row −1; the
/// objective collects the inequality right-hand sides.
pub fn dual_of_sli(sys: &SliSystem) -> LpStandard {
    let nvars = sys.m_inq();
    let mut rows: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); sys.n_inq()];
    for (i, row) in sys.rows().iter().enumerate() {
        for &(vi, c) in &row.cols {
            rows[vi].push((i, ratio::int(c)));
        }
    }
    let xs = sys.xs_index();
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(vi, coeffs)| {
            let rhs = if vi == xs { ratio::int(-1) } else { Rational::zero() };
            (coeffs, Rel::Eq, rhs)
        })
        .collect();
    LpStandard {
        n: nvars,
        rows,
        objective: sys.rows().iter().map(|r| ratio::int(r.ineq.rhs)).collect(),
        maximize: false,
        free: vec![false; nvars],
    }
}

/// The primal program: maximize the negated special variable over the
/// system's inequalities, all variables free.
pub fn primal_of_sli(sys: &SliSystem) -> LpStandard {
    let n = sys.n_inq();
    let rows = sys
        .rows()
        .iter()
        .map(|r| {
            let coeffs = r.cols.iter().map(|&(vi, c)| (vi, ratio::int(c))).collect();
            (coeffs, Rel::Le, ratio::int(r.ineq.rhs))
        })
        .collect();
    let mut objective = vec![Rational::zero(); n];
    objective[sys.xs_index()] = ratio::int(-1);
    LpStandard { n, rows, objective, maximize: true, free: vec![true; n] }
}

/// Exact optimum and ratio coefficient extracted from the dual program.
#[derive(Clone, Debug)]
pub struct SigmaLp {
    pub optimum: Rational,
    pub sigma: Rational,
    pub vertex: VertexSolution,
}

/// Solves the dual program and converts its optimum to the ratio
/// coefficient; enforces the hard bounds 1/(m−2) ≤ σ ≤ 1.
pub fn solve_sigma_lp(sys: &SliSystem, brr1: u64) -> Result<SigmaLp> {
    if brr1 == 0 {
        return Err(Error::RankZero);
    }
    let outcome = simplex_solve(&dual_of_sli(sys))?;
    let vertex = match outcome {
        LpOutcome::Optimal(v) => v,
        LpOutcome::Infeasible => {
            return Err(Error::Internal("dual program infeasible".into()))
        }
        LpOutcome::Unbounded => {
            return Err(Error::Internal("dual program unbounded".into()))
        }
    };
    let optimum = vertex.objective.clone();
    let sigma = -&optimum / ratio::int(brr1 as i64);
    let lo = ratio::frac(1, (sys.m() - 2) as i64);
    let hi = ratio::int(1);
    if sigma < lo || sigma > hi {
        return Err(Error::Internal(format!(
            "computed coefficient {sigma} violates the [{lo}, 1] bounds"
        )));
    }
    Ok(SigmaLp { optimum, sigma, vertex })
}

/// The all-zero point with the special variable at 2·brr must satisfy every
/// correctly built system; used as a generator/solver self-test.
pub fn check_primal_feasible_point(sys: &SliSystem, brr1: u64) -> bool {
    let xs = sys.xs_index();
    let xs_val = ratio::int(2 * brr1 as i64);
    sys.rows().iter().all(|row| {
        let lhs: Rational = row
            .cols
            .iter()
            .filter(|&&(vi, _)| vi == xs)
            .map(|&(_, c)| ratio::int(c) * &xs_val)
            .sum();
        lhs <= ratio::int(row.ineq.rhs)
    })
}

/// Independent primal solve of the system.
pub fn solve_primal_sli(sys: &SliSystem) -> Result<VertexSolution> {
    match simplex_solve(&primal_of_sli(sys))? {
        LpOutcome::Optimal(v) => Ok(v),
        LpOutcome::Infeasible => Err(Error::Internal("primal program infeasible".into())),
        LpOutcome::Unbounded => Err(Error::Internal("primal program unbounded".into())),
    }
}

/// Checks strong duality exactly: equal objectives, dual feasibility, and
/// complementary slackness (positive dual weight forces a tight primal
/// row; the dual's own rows are equalities, so the second slackness
/// condition is automatic).
pub fn verify_duality(
    sys: &SliSystem,
    primal: &VertexSolution,
    dual: &VertexSolution,
) -> bool {
    if primal.objective != dual.objective {
        return false;
    }
    if dual.values.len() != sys.m_inq() || primal.values.len() != sys.n_inq() {
        return false;
    }
    if dual.values.iter().any(|y| y.is_negative()) {
        return false;
    }
    // A^T y = c: accumulate per variable.
    let mut col_sums = vec![Rational::zero(); sys.n_inq()];
    for (i, row) in sys.rows().iter().enumerate() {
        if dual.values[i].is_zero() {
            continue;
        }
        for &(vi, c) in &row.cols {
            col_sums[vi] = &col_sums[vi] + &(ratio::int(c) * &dual.values[i]);
        }
    }
    let xs = sys.xs_index();
    for (vi, sum) in col_sums.iter().enumerate() {
        let want = if vi == xs { ratio::int(-1) } else { Rational::zero() };
        if *sum != want {
            return false;
        }
    }
    // y_i > 0 forces row i tight at the primal point.
    for (i, row) in sys.rows().iter().enumerate() {
        if !dual.values[i].is_positive() {
            continue;
        }
        let lhs: Rational = row
            .cols
            .iter()
            .map(|&(vi, c)| ratio::int(c) * &primal.values[vi])
            .sum();
        if lhs != ratio::int(row.ineq.rhs) {
            return false;
        }
    }
    true
}

/// True when the inequality rows supporting the positive components of
/// `dual` are linearly independent (exact Gaussian elimination).
pub fn support_rows_independent(sys: &SliSystem, dual: &VertexSolution) -> bool {
    let support: Vec<usize> = (0..sys.m_inq())
        .filter(|&i| dual.values[i].is_positive())
        .collect();
    let mut mat: Vec<Vec<Rational>> = support
        .iter()
        .map(|&i| {
            let mut row = vec![Rational::zero(); sys.n_inq()];
            for &(vi, c) in &sys.rows()[i].cols {
                row[vi] = ratio::int(c);
            }
            row
        })
        .collect();
    let mut rank = 0usize;
    let cols = sys.n_inq();
    for col in 0..cols {
        let Some(pr) = (rank..mat.len()).find(|&r| !mat[r][col].is_zero()) else {
            continue;
        };
        mat.swap(rank, pr);
        let lead = mat[rank][col].clone();
        for r in 0..mat.len() {
            if r == rank || mat[r][col].is_zero() {
                continue;
            }
            let f = &mat[r][col] / &lead;
            for c in col..cols {
                mat[r][c] = &mat[r][c] - &(&f * &mat[rank][c]);
            }
        }
        rank += 1;
        if rank == mat.len() {
            break;
        }
    }
    rank == support.len()
}
