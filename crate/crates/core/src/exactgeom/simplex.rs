//! Dense two-phase simplex over arbitrary-precision rationals.
//!
//! Internal engine behind [`super::lp_solve`] and the redundancy tests.
//! Works on the standard form `maximize c·x  s.t.  A x {≤,=} b,  x ≥ 0`.
//! All arithmetic is exact; pivoting is deterministic (Dantzig pricing that
//! permanently switches to Bland's rule once pivots stall), so results are
//! reproducible across runs and platforms.

use num_traits::{One, Signed, Zero};

use super::Rational;

/// Relation of one standard-form row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Rel {
    Le,
    Eq,
}

/// A standard-form problem: maximize `objective · x` subject to
/// `rows[i] · x (rel[i]) rhs[i]` and `x ≥ 0`.
pub(crate) struct StandardLp {
    pub rows: Vec<Vec<Rational>>,
    pub rel: Vec<Rel>,
    pub rhs: Vec<Rational>,
    pub objective: Vec<Rational>,
}

pub(crate) enum StdOutcome {
    Optimal { value: Rational, point: Vec<Rational> },
    Unbounded,
    Infeasible,
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_PIVOT_LIMIT: u32 = 40;

/// Hard iteration backstop. Bland's rule guarantees termination, so hitting
/// this indicates a bug rather than a hard instance.
const ITERATION_CAP: u64 = 5_000_000;

struct Tableau {
    /// m x width coefficient matrix (structural, slack, artificial columns).
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    /// Column index that is basic in each row.
    basis: Vec<usize>,
    /// Current reduced costs, one per column.
    obj: Vec<Rational>,
    objval: Rational,
    /// Columns that may never enter the basis (artificials in phase 2).
    banned: Vec<bool>,
    bland: bool,
    degenerate_streak: u32,
    iterations: u64,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col].clone();
        debug_assert!(!piv.is_zero());
        if !piv.is_one() {
            for v in self.rows[row].iter_mut() {
                if !v.is_zero() {
                    *v /= &piv;
                }
            }
            self.rhs[row] /= &piv;
        }
        let width = self.rows[row].len();
        for i in 0..self.rows.len() {
            if i == row || self.rows[i][col].is_zero() {
                continue;
            }
            let f = std::mem::replace(&mut self.rows[i][col], Rational::zero());
            for j in 0..width {
                if j != col && !self.rows[row][j].is_zero() {
                    let t = &self.rows[row][j] * &f;
                    self.rows[i][j] -= t;
                }
            }
            let t = &self.rhs[row] * &f;
            self.rhs[i] -= t;
        }
        if !self.obj[col].is_zero() {
            let f = std::mem::replace(&mut self.obj[col], Rational::zero());
            for j in 0..width {
                if j != col && !self.rows[row][j].is_zero() {
                    let t = &self.rows[row][j] * &f;
                    self.obj[j] -= t;
                }
            }
            let t = &self.rhs[row] * &f;
            self.objval += t;
        }
        self.basis[row] = col;
    }

    /// Rebuild reduced costs for the objective `c` (padded to tableau width)
    /// under the current basis.
    fn load_objective(&mut self, c: &[Rational]) {
        let width = self.obj.len();
        for j in 0..width {
            self.obj[j] = c.get(j).cloned().unwrap_or_else(Rational::zero);
        }
        self.objval = Rational::zero();
        for i in 0..self.rows.len() {
            let cb = self.obj[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..width {
                if !self.rows[i][j].is_zero() {
                    let t = &self.rows[i][j] * &cb;
                    self.obj[j] -= t;
                }
            }
            // Basic column ends at exactly zero reduced cost.
            self.obj[self.basis[i]] = Rational::zero();
            let t = &self.rhs[i] * &cb;
            self.objval += t;
        }
    }

    fn choose_entering(&self) -> Option<usize> {
        if self.bland {
            (0..self.obj.len()).find(|&j| !self.banned[j] && self.obj[j].is_positive())
        } else {
            let mut best: Option<usize> = None;
            for j in 0..self.obj.len() {
                if self.banned[j] || !self.obj[j].is_positive() {
                    continue;
                }
                match best {
                    None => best = Some(j),
                    Some(b) if self.obj[j] > self.obj[b] => best = Some(j),
                    _ => {}
                }
            }
            best
        }
    }

    fn choose_leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, Rational)> = None;
        for i in 0..self.rows.len() {
            if !self.rows[i][col].is_positive() {
                continue;
            }
            let ratio = &self.rhs[i] / &self.rows[i][col];
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    if ratio < br {
                        Some((i, ratio))
                    } else if ratio == br {
                        let better = if self.bland {
                            self.basis[i] < self.basis[bi]
                        } else {
                            i < bi
                        };
                        if better {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    /// Runs the simplex loop on the currently loaded objective.
    /// Returns `false` when the objective is unbounded above.
    fn optimize(&mut self) -> bool {
        loop {
            let Some(col) = self.choose_entering() else {
                return true;
            };
            let Some(row) = self.choose_leaving(col) else {
                return false;
            };
            if self.rhs[row].is_zero() {
                self.degenerate_streak += 1;
                if self.degenerate_streak > DEGENERATE_PIVOT_LIMIT {
                    self.bland = true;
                }
            } else {
                self.degenerate_streak = 0;
            }
            self.iterations += 1;
            assert!(
                self.iterations < ITERATION_CAP,
                "simplex iteration cap exceeded; anti-cycling invariant broken"
            );
            self.pivot(row, col);
        }
    }
}

pub(crate) fn solve_standard(lp: &StandardLp) -> StdOutcome {
    let m = lp.rows.len();
    let n = lp.objective.len();
    debug_assert!(lp.rows.iter().all(|r| r.len() == n));

    // Orient every row so its right-hand side is nonnegative.
    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        Le,
        Ge,
        Eq,
    }
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut rhs: Vec<Rational> = Vec::with_capacity(m);
    let mut kind: Vec<Kind> = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = lp.rows[i].clone();
        let mut b = lp.rhs[i].clone();
        let mut k = match lp.rel[i] {
            Rel::Le => Kind::Le,
            Rel::Eq => Kind::Eq,
        };
        if b.is_negative() {
            for v in row.iter_mut() {
                *v = -std::mem::take(v);
            }
            b = -b;
            k = match k {
                Kind::Le => Kind::Ge,
                Kind::Ge => Kind::Le,
                Kind::Eq => Kind::Eq,
            };
        }
        rows.push(row);
        rhs.push(b);
        kind.push(k);
    }

    let n_slack = kind.iter().filter(|k| matches!(k, Kind::Le | Kind::Ge)).count();
    let n_art = kind.iter().filter(|k| matches!(k, Kind::Ge | Kind::Eq)).count();
    let width = n + n_slack + n_art;
    let art_start = n + n_slack;

    let mut t_rows: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    let mut slack_at = n;
    let mut art_at = art_start;
    for i in 0..m {
        let mut row = vec![Rational::zero(); width];
        row[..n].clone_from_slice(&rows[i]);
        match kind[i] {
            Kind::Le => {
                row[slack_at] = Rational::one();
                basis[i] = slack_at;
                slack_at += 1;
            }
            Kind::Ge => {
                row[slack_at] = -Rational::one();
                slack_at += 1;
                row[art_at] = Rational::one();
                basis[i] = art_at;
                art_at += 1;
            }
            Kind::Eq => {
                row[art_at] = Rational::one();
                basis[i] = art_at;
                art_at += 1;
            }
        }
        t_rows.push(row);
    }

    let mut tab = Tableau {
        rows: t_rows,
        rhs,
        basis,
        obj: vec![Rational::zero(); width],
        objval: Rational::zero(),
        banned: vec![false; width],
        bland: false,
        degenerate_streak: 0,
        iterations: 0,
    };

    if n_art > 0 {
        // Phase 1: maximize minus the sum of artificials.
        let mut c1 = vec![Rational::zero(); width];
        for cell in c1.iter_mut().take(width).skip(art_start) {
            *cell = -Rational::one();
        }
        tab.load_objective(&c1);
        let bounded = tab.optimize();
        debug_assert!(bounded, "phase-1 objective is bounded by construction");
        if tab.objval.is_negative() {
            return StdOutcome::Infeasible;
        }
        // Drive leftover artificials out of the basis; drop rows that are
        // zero on all structural and slack columns (redundant constraints).
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art_start {
                let col = (0..art_start).find(|&j| !tab.rows[i][j].is_zero());
                match col {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.rhs.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for b in tab.banned.iter_mut().take(width).skip(art_start) {
            *b = true;
        }
        tab.bland = false;
        tab.degenerate_streak = 0;
    }

    // Phase 2.
    tab.load_objective(&lp.objective);
    if !tab.optimize() {
        return StdOutcome::Unbounded;
    }

    let mut point = vec![Rational::zero(); n];
    for i in 0..tab.rows.len() {
        if tab.basis[i] < n {
            point[tab.basis[i]] = tab.rhs[i].clone();
        }
    }
    StdOutcome::Optimal { value: tab.objval.clone(), point }
}
