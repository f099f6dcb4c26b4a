//! Exact rational linear systems, Fourier–Motzkin projection, and LP.
//!
//! Everything here is exact: coefficients are arbitrary-precision rationals,
//! the simplex solver pivots without rounding, and redundancy of an
//! inequality is decided by an LP certificate rather than a tolerance.
//! Inequalities are always stored in the form `expr ≤ 0`, equations as
//! `expr = 0`.

mod simplex;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

pub use num_rational::BigRational as Rational;

pub(crate) use simplex::{solve_standard, Rel, StandardLp, StdOutcome};

/// Shorthand for an integer-valued rational.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// Shorthand for the rational `n/d`. Panics when `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Parses `"a/b"`, plain integers, and finite decimal strings (`"0.25"`,
/// `"-3.5"`) into an exact rational. Decimal input is read digit-for-digit,
/// never through floating point.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let fail = || Error::Domain(format!("cannot parse `{s}` as a rational number"));
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| fail())?;
        let d: BigInt = den.trim().parse().map_err(|_| fail())?;
        if d.is_zero() {
            return Err(fail());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int_part, frac_part)) = t.split_once('.') {
        let negative = int_part.trim_start().starts_with('-');
        let int_digits = int_part.trim();
        let int_val: BigInt = if int_digits == "-" || int_digits.is_empty() {
            BigInt::zero()
        } else {
            int_digits.parse().map_err(|_| fail())?
        };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(fail());
        }
        let frac_val: BigInt = frac_part.parse().map_err(|_| fail())?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let mut v = Rational::new(int_val.abs() * &scale + frac_val, scale);
        if negative {
            v = -v;
        }
        return Ok(v);
    }
    let n: BigInt = t.parse().map_err(|_| fail())?;
    Ok(Rational::from_integer(n))
}

/// A linear expression `Σ coeffs[name]·name + constant` over named
/// coordinates. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearExpr {
    pub coeffs: BTreeMap<String, Rational>,
    pub constant: Rational,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an expression from `(coordinate, coefficient)` pairs and a
    /// constant term; zero coefficients are dropped.
    pub fn from_terms<I, S>(terms: I, constant: Rational) -> Self
    where
        I: IntoIterator<Item = (S, Rational)>,
        S: Into<String>,
    {
        let mut e = LinearExpr { coeffs: BTreeMap::new(), constant };
        for (name, c) in terms {
            e.add_term(name.into(), c);
        }
        e
    }

    /// The coefficient of `name` (zero when absent).
    pub fn term(&self, name: &str) -> Rational {
        self.coeffs.get(name).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn set_term(&mut self, name: impl Into<String>, value: Rational) {
        let name = name.into();
        if value.is_zero() {
            self.coeffs.remove(&name);
        } else {
            self.coeffs.insert(name, value);
        }
    }

    pub fn add_term(&mut self, name: impl Into<String>, value: Rational) {
        let name = name.into();
        let new = self.term(&name) + value;
        self.set_term(name, new);
    }

    /// Adds `factor · other` in place.
    pub fn add_scaled(&mut self, other: &LinearExpr, factor: &Rational) {
        if factor.is_zero() {
            return;
        }
        for (name, c) in &other.coeffs {
            self.add_term(name.clone(), c * factor);
        }
        self.constant += &other.constant * factor;
    }

    pub fn scaled(&self, factor: &Rational) -> LinearExpr {
        let mut e = LinearExpr::new();
        e.add_scaled(self, factor);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    /// Evaluates at a point; coordinates missing from `point` count as zero.
    pub fn evaluate(&self, point: &BTreeMap<String, Rational>) -> Rational {
        let mut acc = self.constant.clone();
        for (name, c) in &self.coeffs {
            if let Some(v) = point.get(name) {
                acc += c * v;
            }
        }
        acc
    }

    /// Scales by the unique positive rational that makes every entry
    /// (coefficients and constant) an integer with collective gcd 1.
    pub fn canonicalize(&self) -> Result<LinearExpr> {
        if self.is_zero() {
            return Err(Error::Degenerate(
                "cannot canonicalize the identically zero expression".into(),
            ));
        }
        let mut lcm = BigInt::one();
        let mut visit_den = |v: &Rational| {
            if !v.is_zero() {
                lcm = lcm.lcm(v.denom());
            }
        };
        for v in self.coeffs.values() {
            visit_den(v);
        }
        visit_den(&self.constant);

        let mut gcd = BigInt::zero();
        let mut visit_num = |v: &Rational| {
            if !v.is_zero() {
                let scaled = v.numer() * (&lcm / v.denom());
                gcd = gcd.gcd(&scaled);
            }
        };
        for v in self.coeffs.values() {
            visit_num(v);
        }
        visit_num(&self.constant);

        let factor = Rational::new(lcm, gcd);
        Ok(self.scaled(&factor))
    }

    /// Canonical form for an *equation*: canonicalized, then negated if
    /// necessary so the leading nonzero entry is positive. Both signs of an
    /// equation describe the same constraint, so this gives a dedup key.
    fn canonical_equation(&self) -> Result<LinearExpr> {
        let c = self.canonicalize()?;
        let leading = c
            .coeffs
            .values()
            .next()
            .cloned()
            .unwrap_or_else(|| c.constant.clone());
        if leading.is_negative() {
            Ok(c.scaled(&-Rational::one()))
        } else {
            Ok(c)
        }
    }
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, c) in &self.coeffs {
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let a = c.abs();
            if a.is_one() {
                write!(f, "{name}")?;
            } else {
                write!(f, "{a}·{name}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if !self.constant.is_zero() {
            if self.constant.is_negative() {
                write!(f, " - {}", self.constant.abs())?;
            } else {
                write!(f, " + {}", self.constant)?;
            }
        }
        Ok(())
    }
}

/// A finite system of linear constraints over an ordered coordinate list.
/// Every inequality means `expr ≤ 0`; every equation means `expr = 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearSystem {
    pub coordinates: Vec<String>,
    pub inequalities: Vec<LinearExpr>,
    pub equations: Vec<LinearExpr>,
}

impl LinearSystem {
    pub fn new(coordinates: Vec<String>) -> Self {
        LinearSystem { coordinates, inequalities: Vec::new(), equations: Vec::new() }
    }

    fn check_declared(&self, expr: &LinearExpr) -> Result<()> {
        for name in expr.coeffs.keys() {
            if !self.coordinates.iter().any(|c| c == name) {
                return Err(Error::UnknownCoordinate(name.clone()));
            }
        }
        Ok(())
    }

    pub fn push_inequality(&mut self, expr: LinearExpr) -> Result<()> {
        self.check_declared(&expr)?;
        self.inequalities.push(expr);
        Ok(())
    }

    pub fn push_equation(&mut self, expr: LinearExpr) -> Result<()> {
        self.check_declared(&expr)?;
        self.equations.push(expr);
        Ok(())
    }

    /// True when every constant term in the system is zero, i.e. the
    /// solution set is a cone through the origin.
    pub fn is_homogeneous(&self) -> bool {
        self.inequalities
            .iter()
            .chain(self.equations.iter())
            .all(|e| e.constant.is_zero())
    }

    /// Canonicalizes, deduplicates, and sorts constraints. Inequalities that
    /// hold identically (`0 ≤ 0` or negative constants) are dropped;
    /// an identically false constant row is kept to preserve infeasibility.
    pub fn normalized(&self) -> LinearSystem {
        let mut ineqs = BTreeSet::new();
        for e in &self.inequalities {
            if e.is_zero() {
                continue;
            }
            let c = e.canonicalize().expect("nonzero expression");
            if c.coeffs.is_empty() && !c.constant.is_positive() {
                continue;
            }
            ineqs.insert(c);
        }
        let mut eqs = BTreeSet::new();
        for e in &self.equations {
            if e.is_zero() {
                continue;
            }
            eqs.insert(e.canonical_equation().expect("nonzero expression"));
        }
        LinearSystem {
            coordinates: self.coordinates.clone(),
            inequalities: ineqs.into_iter().collect(),
            equations: eqs.into_iter().collect(),
        }
    }
}

/// See [`LinearExpr::canonicalize`].
pub fn canonicalize(expr: &LinearExpr) -> Result<LinearExpr> {
    expr.canonicalize()
}

/// Eliminates one coordinate by Gaussian substitution (when an equation
/// mentions it) or by pairwise Fourier–Motzkin combination. The returned
/// system's solution set is exactly the projection of the input's.
pub fn fm_eliminate(system: &LinearSystem, coordinate: &str) -> Result<LinearSystem> {
    if !system.coordinates.iter().any(|c| c == coordinate) {
        return Err(Error::UnknownCoordinate(coordinate.into()));
    }
    let mut out = LinearSystem::new(
        system.coordinates.iter().filter(|c| *c != coordinate).cloned().collect(),
    );

    let pivot_idx = system.equations.iter().position(|e| !e.term(coordinate).is_zero());
    if let Some(idx) = pivot_idx {
        let pivot = &system.equations[idx];
        let pc = pivot.term(coordinate);
        let substitute = |expr: &LinearExpr| -> LinearExpr {
            let c = expr.term(coordinate);
            if c.is_zero() {
                return expr.clone();
            }
            let mut e = expr.clone();
            e.add_scaled(pivot, &(-c / &pc));
            e.coeffs.remove(coordinate);
            e
        };
        for (i, e) in system.equations.iter().enumerate() {
            if i != idx {
                out.equations.push(substitute(e));
            }
        }
        for e in &system.inequalities {
            out.inequalities.push(substitute(e));
        }
    } else {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for e in &system.inequalities {
            let c = e.term(coordinate);
            if c.is_positive() {
                pos.push((e, c));
            } else if c.is_negative() {
                neg.push((e, c));
            } else {
                out.inequalities.push(e.clone());
            }
        }
        for (p, pc) in &pos {
            for (n, nc) in &neg {
                // Positive multipliers (-nc) and (pc) cancel the coordinate.
                let mut e = p.scaled(&-nc.clone());
                e.add_scaled(n, pc);
                e.coeffs.remove(coordinate);
                out.inequalities.push(e);
            }
        }
        out.equations = system.equations.clone();
    }
    Ok(out.normalized())
}

/// Optimization direction for [`lp_solve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LPStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

/// Outcome of an exact linear program.
#[derive(Clone, Debug)]
pub struct LPResult {
    pub status: LPStatus,
    /// Optimal objective value, present iff `status == Optimal`.
    pub value: Option<Rational>,
    /// An optimal point, present iff `status == Optimal`. Satisfies every
    /// constraint of the input system exactly.
    pub witness: Option<BTreeMap<String, Rational>>,
}

/// Optimizes a linear objective over the solution set of `system`.
/// Coordinates are unrestricted in sign (internally split into differences
/// of nonnegative variables). Exact and deterministic.
pub fn lp_solve(
    objective: &LinearExpr,
    direction: Direction,
    system: &LinearSystem,
) -> Result<LPResult> {
    system.check_declared(objective).map_err(|_| {
        Error::UnknownCoordinate(format!(
            "objective references a coordinate not declared in the system: {objective}"
        ))
    })?;
    let coords = &system.coordinates;
    let index: BTreeMap<&str, usize> =
        coords.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let n = coords.len();

    // Each free coordinate x becomes x⁺ − x⁻ with x⁺, x⁻ ≥ 0.
    let dense = |expr: &LinearExpr| -> Vec<Rational> {
        let mut row = vec![Rational::zero(); 2 * n];
        for (name, c) in &expr.coeffs {
            let i = index[name.as_str()];
            row[2 * i] = c.clone();
            row[2 * i + 1] = -c.clone();
        }
        row
    };

    let mut rows = Vec::new();
    let mut rel = Vec::new();
    let mut rhs = Vec::new();
    for e in &system.inequalities {
        rows.push(dense(e));
        rel.push(Rel::Le);
        rhs.push(-e.constant.clone());
    }
    for e in &system.equations {
        rows.push(dense(e));
        rel.push(Rel::Eq);
        rhs.push(-e.constant.clone());
    }
    let mut objective_row = dense(objective);
    if direction == Direction::Minimize {
        for v in objective_row.iter_mut() {
            *v = -std::mem::take(v);
        }
    }

    let lp = StandardLp { rows, rel, rhs, objective: objective_row };
    match solve_standard(&lp) {
        StdOutcome::Infeasible => {
            Ok(LPResult { status: LPStatus::Infeasible, value: None, witness: None })
        }
        StdOutcome::Unbounded => {
            Ok(LPResult { status: LPStatus::Unbounded, value: None, witness: None })
        }
        StdOutcome::Optimal { value, point } => {
            let mut witness = BTreeMap::new();
            for (i, name) in coords.iter().enumerate() {
                witness.insert(name.clone(), &point[2 * i] - &point[2 * i + 1]);
            }
            let signed = if direction == Direction::Minimize { -value } else { value };
            let total = signed + &objective.constant;
            debug_assert_eq!(objective.evaluate(&witness), total);
            Ok(LPResult { status: LPStatus::Optimal, value: Some(total), witness: Some(witness) })
        }
    }
}

/// True iff `ineq ≤ 0` holds everywhere on the solution set of `system`
/// (in particular, vacuously true for an infeasible system).
///
/// Homogeneous systems take a dual route: `c·x ≤ 0` is valid on the cone
/// `{A x ≤ 0, E x = 0}` iff `c` is a nonnegative combination of the rows of
/// `A` plus an arbitrary combination of the rows of `E`. General systems use
/// a capped primal LP.
pub fn is_implied(ineq: &LinearExpr, system: &LinearSystem) -> Result<bool> {
    if ineq.constant.is_zero() && system.is_homogeneous() {
        return Ok(cone_membership(
            ineq,
            &system.inequalities,
            &system.equations,
            &system.coordinates,
        ));
    }
    // Capped primal: maximize ineq subject to the system and ineq ≤ 1.
    // The cap removes unboundedness without changing the sign of the max.
    let mut sys = system.clone();
    for name in ineq.coeffs.keys() {
        if !sys.coordinates.iter().any(|c| c == name) {
            sys.coordinates.push(name.clone());
        }
    }
    let mut cap = ineq.clone();
    cap.constant -= Rational::one();
    sys.inequalities.push(cap);
    let res = lp_solve(ineq, Direction::Maximize, &sys)?;
    match res.status {
        LPStatus::Infeasible => Ok(true),
        LPStatus::Optimal => Ok(!res.value.expect("optimal has value").is_positive()),
        LPStatus::Unbounded => Err(Error::Internal(
            "capped implication LP reported unbounded".into(),
        )),
    }
}

/// Farkas certificate search: is `target` a nonnegative combination of
/// `generators` plus a signed combination of `equations`?
fn cone_membership(
    target: &LinearExpr,
    generators: &[LinearExpr],
    equations: &[LinearExpr],
    coordinates: &[String],
) -> bool {
    let mut coords: Vec<&str> = coordinates.iter().map(String::as_str).collect();
    for name in target.coeffs.keys() {
        if !coords.contains(&name.as_str()) {
            coords.push(name);
        }
    }
    let n_gen = generators.len();
    let n_cols = n_gen + 2 * equations.len();
    let mut rows = Vec::with_capacity(coords.len());
    let mut rhs = Vec::with_capacity(coords.len());
    for name in &coords {
        let mut row = vec![Rational::zero(); n_cols];
        for (j, g) in generators.iter().enumerate() {
            row[j] = g.term(name);
        }
        for (j, e) in equations.iter().enumerate() {
            let c = e.term(name);
            row[n_gen + 2 * j] = c.clone();
            row[n_gen + 2 * j + 1] = -c;
        }
        rows.push(row);
        rhs.push(target.term(name));
    }
    let rel = vec![Rel::Eq; coords.len()];
    let lp = StandardLp { rows, rel, rhs, objective: vec![Rational::zero(); n_cols] };
    matches!(solve_standard(&lp), StdOutcome::Optimal { .. })
}

/// Removes every redundant inequality: each surviving inequality strictly
/// tightens the solution set, certified by LP. Duplicates (up to canonical
/// scaling) are merged first. The solution set is unchanged.
pub fn remove_redundant(system: &LinearSystem) -> Result<LinearSystem> {
    let norm = system.normalized();
    // An identically false row makes the set empty; keep just that row.
    if let Some(bad) =
        norm.inequalities.iter().find(|e| e.coeffs.is_empty() && e.constant.is_positive())
    {
        return Ok(LinearSystem {
            coordinates: norm.coordinates.clone(),
            inequalities: vec![bad.clone()],
            equations: Vec::new(),
        });
    }
    // Test complex rows first so the simplest description survives.
    let mut order: Vec<usize> = (0..norm.inequalities.len()).collect();
    order.sort_by_key(|&i| {
        let e = &norm.inequalities[i];
        (usize::MAX - e.coeffs.len(), e.clone())
    });
    let mut removed = vec![false; norm.inequalities.len()];
    for &i in &order {
        let candidate = &norm.inequalities[i];
        let rest = LinearSystem {
            coordinates: norm.coordinates.clone(),
            inequalities: norm
                .inequalities
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i && !removed[*j])
                .map(|(_, e)| e.clone())
                .collect(),
            equations: norm.equations.clone(),
        };
        if is_implied(candidate, &rest)? {
            removed[i] = true;
        }
    }
    Ok(LinearSystem {
        coordinates: norm.coordinates,
        inequalities: norm
            .inequalities
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !removed[*i])
            .map(|(_, e)| e)
            .collect(),
        equations: norm.equations,
    })
}

/// Resource limits for [`project_onto`].
#[derive(Clone, Copy, Debug)]
pub struct ProjectionOptions {
    /// Cap on the number of inequalities held at any point of the run.
    pub max_intermediate: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions { max_intermediate: 50_000 }
    }
}

/// Projects the solution set of `system` onto the coordinates in `keep` by
/// eliminating every other coordinate.
///
/// Pipeline per eliminated coordinate: Gaussian substitution when an
/// equation covers it, otherwise greedy Fourier–Motzkin (the coordinate with
/// the fewest positive×negative pairings goes first) with ancestry-based
/// pruning, canonical deduplication, and an LP redundancy sweep after every
/// step. Output is deterministic: inequalities sorted in canonical order.
pub fn project_onto(
    system: &LinearSystem,
    keep: &[String],
    opts: &ProjectionOptions,
) -> Result<LinearSystem> {
    for k in keep {
        if !system.coordinates.iter().any(|c| c == k) {
            return Err(Error::UnknownCoordinate(k.clone()));
        }
    }
    let keep_set: BTreeSet<&str> = keep.iter().map(String::as_str).collect();
    let mut sys = system.normalized();
    let mut eliminable: Vec<String> = sys
        .coordinates
        .iter()
        .filter(|c| !keep_set.contains(c.as_str()))
        .cloned()
        .collect();

    // Ancestor sets: which original inequalities fed each current row.
    // A row combined at FM step s from more than s+1 ancestors is redundant
    // and is dropped without an LP call.
    let mut hist: Vec<BTreeSet<u32>> =
        (0..sys.inequalities.len()).map(|i| BTreeSet::from([i as u32])).collect();

    // Stage 1: consume equations that mention eliminable coordinates.
    loop {
        let mut used = None;
        'search: for (ei, eq) in sys.equations.iter().enumerate() {
            for coord in eliminable.iter().rev() {
                if !eq.term(coord).is_zero() {
                    used = Some((ei, coord.clone()));
                    break 'search;
                }
            }
        }
        let Some((ei, coord)) = used else { break };
        let pivot = sys.equations.remove(ei);
        let pc = pivot.term(&coord);
        let substitute = |expr: &mut LinearExpr| {
            let c = expr.term(&coord);
            if !c.is_zero() {
                expr.add_scaled(&pivot, &(-c / &pc));
                expr.coeffs.remove(&coord);
            }
        };
        for e in sys.equations.iter_mut() {
            substitute(e);
        }
        for e in sys.inequalities.iter_mut() {
            substitute(e);
        }
        sys.coordinates.retain(|c| *c != coord);
        eliminable.retain(|c| *c != coord);
    }
    dedupe_with_hist(&mut sys, &mut hist);
    redundancy_sweep(&mut sys, &mut hist)?;

    // Stage 2: Fourier–Motzkin for the rest, cheapest coordinate first.
    let mut fm_steps = 0usize;
    while !eliminable.is_empty() {
        let (which, _) = eliminable
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let pos =
                    sys.inequalities.iter().filter(|e| e.term(c).is_positive()).count();
                let neg =
                    sys.inequalities.iter().filter(|e| e.term(c).is_negative()).count();
                (i, pos * neg)
            })
            .min_by_key(|&(i, cost)| (cost, i))
            .expect("nonempty eliminable list");
        let coord = eliminable.remove(which);
        fm_steps += 1;

        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut keep_rows = Vec::new();
        let mut keep_hist = Vec::new();
        for (e, h) in sys.inequalities.iter().zip(hist.iter()) {
            let c = e.term(&coord);
            if c.is_positive() {
                pos.push((e.clone(), c, h.clone()));
            } else if c.is_negative() {
                neg.push((e.clone(), c, h.clone()));
            } else {
                keep_rows.push(e.clone());
                keep_hist.push(h.clone());
            }
        }
        for (p, pc, ph) in &pos {
            for (n, nc, nh) in &neg {
                let ancestry: BTreeSet<u32> = ph.union(nh).cloned().collect();
                if ancestry.len() > fm_steps + 1 {
                    continue;
                }
                let mut e = p.scaled(&-nc.clone());
                e.add_scaled(n, pc);
                e.coeffs.remove(&coord);
                keep_rows.push(e);
                keep_hist.push(ancestry);
            }
        }
        sys.inequalities = keep_rows;
        hist = keep_hist;
        sys.coordinates.retain(|c| *c != coord);
        dedupe_with_hist(&mut sys, &mut hist);
        if sys.inequalities.len() > opts.max_intermediate {
            return Err(Error::ResourceCap(format!(
                "projection produced {} inequalities after eliminating {} coordinate(s) \
                 ({} still pending); cap is {}",
                sys.inequalities.len(),
                fm_steps,
                eliminable.len(),
                opts.max_intermediate
            )));
        }
        redundancy_sweep(&mut sys, &mut hist)?;
    }

    // Deterministic final ordering, original coordinate order preserved.
    let coordinates: Vec<String> =
        system.coordinates.iter().filter(|c| keep_set.contains(c.as_str())).cloned().collect();
    let mut out = LinearSystem {
        coordinates,
        inequalities: sys.inequalities,
        equations: sys.equations,
    };
    out = out.normalized();
    Ok(out)
}

/// Canonicalize + dedupe rows, dropping identically true ones, keeping the
/// ancestry of the first occurrence of each distinct row.
fn dedupe_with_hist(sys: &mut LinearSystem, hist: &mut Vec<BTreeSet<u32>>) {
    let mut seen: BTreeMap<LinearExpr, BTreeSet<u32>> = BTreeMap::new();
    for (e, h) in sys.inequalities.iter().zip(hist.iter()) {
        if e.is_zero() {
            continue;
        }
        let c = e.canonicalize().expect("nonzero expression");
        if c.coeffs.is_empty() && !c.constant.is_positive() {
            continue;
        }
        seen.entry(c).or_insert_with(|| h.clone());
    }
    sys.inequalities = seen.keys().cloned().collect();
    *hist = seen.into_values().collect();
}

/// LP-based redundancy sweep used inside the projection pipeline; keeps the
/// ancestry vector aligned with the surviving rows.
fn redundancy_sweep(sys: &mut LinearSystem, hist: &mut Vec<BTreeSet<u32>>) -> Result<()> {
    let n = sys.inequalities.len();
    if n <= 1 {
        return Ok(());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| {
        let e = &sys.inequalities[i];
        (usize::MAX - e.coeffs.len(), e.clone())
    });
    let mut removed = vec![false; n];
    for &i in &order {
        let candidate = &sys.inequalities[i];
        let rest: Vec<LinearExpr> = sys
            .inequalities
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i && !removed[*j])
            .map(|(_, e)| e.clone())
            .collect();
        let implied = if candidate.constant.is_zero()
            && rest.iter().chain(sys.equations.iter()).all(|e| e.constant.is_zero())
        {
            cone_membership(candidate, &rest, &sys.equations, &sys.coordinates)
        } else {
            let test = LinearSystem {
                coordinates: sys.coordinates.clone(),
                inequalities: rest,
                equations: sys.equations.clone(),
            };
            is_implied(candidate, &test)?
        };
        if implied {
            removed[i] = true;
        }
    }
    let mut kept_rows = Vec::with_capacity(n);
    let mut kept_hist = Vec::with_capacity(n);
    for (i, (e, h)) in sys.inequalities.iter().zip(hist.iter()).enumerate() {
        if !removed[i] {
            kept_rows.push(e.clone());
            kept_hist.push(h.clone());
        }
    }
    sys.inequalities = kept_rows;
    *hist = kept_hist;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expr(terms: &[(&str, i64, i64)], constant: (i64, i64)) -> LinearExpr {
        LinearExpr::from_terms(
            terms.iter().map(|(n, a, b)| (n.to_string(), rat(*a, *b))),
            rat(constant.0, constant.1),
        )
    }

    #[test]
    fn canonicalize_scales_to_coprime_integers() {
        let e = expr(&[("x", 2, 3), ("y", -4, 3)], (0, 1));
        let c = canonicalize(&e).unwrap();
        assert_eq!(c, expr(&[("x", 1, 1), ("y", -2, 1)], (0, 1)));
    }

    #[test]
    fn canonicalize_preserves_sign() {
        let e = expr(&[("x", -5, 1)], (0, 1));
        assert_eq!(canonicalize(&e).unwrap(), expr(&[("x", -1, 1)], (0, 1)));
        let already = expr(&[("x", 1, 1), ("y", 1, 1)], (0, 1));
        assert_eq!(canonicalize(&already).unwrap(), already);
    }

    #[test]
    fn canonicalize_rejects_zero() {
        assert!(matches!(canonicalize(&LinearExpr::new()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn canonicalize_is_scale_invariant() {
        let e = expr(&[("x", 7, 5), ("y", -3, 2)], (1, 4));
        let c1 = canonicalize(&e).unwrap();
        let c2 = canonicalize(&e.scaled(&rat(9, 7))).unwrap();
        assert_eq!(c1, c2);
    }

    fn sys(coords: &[&str], ineqs: Vec<LinearExpr>, eqs: Vec<LinearExpr>) -> LinearSystem {
        let mut s = LinearSystem::new(coords.iter().map(|c| c.to_string()).collect());
        for e in ineqs {
            s.push_inequality(e).unwrap();
        }
        for e in eqs {
            s.push_equation(e).unwrap();
        }
        s
    }

    #[test]
    fn fm_projects_a_segment_to_no_constraints() {
        // {x ≤ 1, −x ≤ 0}: the x-axis segment projects to "everything".
        let s = sys(
            &["x"],
            vec![expr(&[("x", 1, 1)], (-1, 1)), expr(&[("x", -1, 1)], (0, 1))],
            vec![],
        );
        let p = fm_eliminate(&s, "x").unwrap();
        assert!(p.inequalities.is_empty());
        assert!(p.equations.is_empty());
        assert!(p.coordinates.is_empty());
    }

    #[test]
    fn fm_combines_transitively() {
        // {y − x ≤ 0, x − z ≤ 0} eliminate x → {y − z ≤ 0}.
        let s = sys(
            &["x", "y", "z"],
            vec![
                expr(&[("y", 1, 1), ("x", -1, 1)], (0, 1)),
                expr(&[("x", 1, 1), ("z", -1, 1)], (0, 1)),
            ],
            vec![],
        );
        let p = fm_eliminate(&s, "x").unwrap();
        assert_eq!(p.inequalities, vec![expr(&[("y", 1, 1), ("z", -1, 1)], (0, 1))]);
    }

    #[test]
    fn fm_substitutes_equations() {
        // {x − y = 0, x ≤ 3} eliminate x → {y ≤ 3}.
        let s = sys(
            &["x", "y"],
            vec![expr(&[("x", 1, 1)], (-3, 1))],
            vec![expr(&[("x", 1, 1), ("y", -1, 1)], (0, 1))],
        );
        let p = fm_eliminate(&s, "x").unwrap();
        assert_eq!(p.inequalities, vec![expr(&[("y", 1, 1)], (-3, 1))]);
        assert!(p.equations.is_empty());
    }

    #[test]
    fn fm_rejects_undeclared_coordinate() {
        let s = sys(&["x"], vec![], vec![]);
        assert!(matches!(fm_eliminate(&s, "q"), Err(Error::UnknownCoordinate(_))));
    }

    #[test]
    fn lp_finds_bounded_maximum() {
        // max x s.t. {x ≤ 3, −x ≤ 0} → 3.
        let s = sys(
            &["x"],
            vec![expr(&[("x", 1, 1)], (-3, 1)), expr(&[("x", -1, 1)], (0, 1))],
            vec![],
        );
        let r = lp_solve(&expr(&[("x", 1, 1)], (0, 1)), Direction::Maximize, &s).unwrap();
        assert_eq!(r.status, LPStatus::Optimal);
        assert_eq!(r.value.unwrap(), rat_int(3));
        assert_eq!(r.witness.unwrap()["x"], rat_int(3));
    }

    #[test]
    fn lp_sums_two_boxes() {
        // max x+y over the unit square corner system → 2.
        let s = sys(
            &["x", "y"],
            vec![
                expr(&[("x", 1, 1)], (-1, 1)),
                expr(&[("y", 1, 1)], (-1, 1)),
                expr(&[("x", -1, 1)], (0, 1)),
                expr(&[("y", -1, 1)], (0, 1)),
            ],
            vec![],
        );
        let obj = expr(&[("x", 1, 1), ("y", 1, 1)], (0, 1));
        let r = lp_solve(&obj, Direction::Maximize, &s).unwrap();
        assert_eq!(r.status, LPStatus::Optimal);
        assert_eq!(r.value.unwrap(), rat_int(2));
    }

    #[test]
    fn lp_detects_unbounded() {
        let s = sys(&["x"], vec![expr(&[("x", -1, 1)], (0, 1))], vec![]);
        let r = lp_solve(&expr(&[("x", 1, 1)], (0, 1)), Direction::Maximize, &s).unwrap();
        assert_eq!(r.status, LPStatus::Unbounded);
    }

    #[test]
    fn lp_detects_infeasible() {
        let s = sys(
            &["x"],
            vec![expr(&[("x", 1, 1)], (-1, 1)), expr(&[("x", -1, 1)], (2, 1))],
            vec![],
        );
        let r = lp_solve(&expr(&[("x", 1, 1)], (0, 1)), Direction::Maximize, &s).unwrap();
        assert_eq!(r.status, LPStatus::Infeasible);
    }

    #[test]
    fn lp_minimizes_with_equations() {
        // min y s.t. x + y = 2, x ≤ 1 → y = 1 at x = 1.
        let s = sys(
            &["x", "y"],
            vec![expr(&[("x", 1, 1)], (-1, 1))],
            vec![expr(&[("x", 1, 1), ("y", 1, 1)], (-2, 1))],
        );
        let r = lp_solve(&expr(&[("y", 1, 1)], (0, 1)), Direction::Minimize, &s).unwrap();
        assert_eq!(r.status, LPStatus::Optimal);
        assert_eq!(r.value.unwrap(), rat_int(1));
    }

    #[test]
    fn removes_dominated_constraint() {
        // {x ≤ 1, x ≤ 2} → {x ≤ 1}.
        let s = sys(
            &["x"],
            vec![expr(&[("x", 1, 1)], (-1, 1)), expr(&[("x", 1, 1)], (-2, 1))],
            vec![],
        );
        let r = remove_redundant(&s).unwrap();
        assert_eq!(r.inequalities, vec![expr(&[("x", 1, 1)], (-1, 1))]);
    }

    #[test]
    fn removes_implied_sum() {
        // {x ≤ 1, y ≤ 1, x + y ≤ 2} → {x ≤ 1, y ≤ 1}.
        let s = sys(
            &["x", "y"],
            vec![
                expr(&[("x", 1, 1)], (-1, 1)),
                expr(&[("y", 1, 1)], (-1, 1)),
                expr(&[("x", 1, 1), ("y", 1, 1)], (-2, 1)),
            ],
            vec![],
        );
        let r = remove_redundant(&s).unwrap();
        assert_eq!(
            r.inequalities,
            vec![expr(&[("x", 1, 1)], (-1, 1)), expr(&[("y", 1, 1)], (-1, 1))]
        );
    }

    #[test]
    fn remove_redundant_is_idempotent() {
        let s = sys(
            &["x", "y"],
            vec![
                expr(&[("x", 1, 1)], (-1, 1)),
                expr(&[("x", 2, 1)], (-2, 1)),
                expr(&[("x", 1, 2), ("y", 1, 2)], (-1, 1)),
                expr(&[("y", 1, 1)], (-1, 1)),
            ],
            vec![],
        );
        let once = remove_redundant(&s).unwrap();
        let twice = remove_redundant(&once).unwrap();
        assert_eq!(once.inequalities, twice.inequalities);
    }

    #[test]
    fn implication_examples() {
        let strict = sys(&["x"], vec![expr(&[("x", 1, 1)], (1, 1))], vec![]);
        assert!(is_implied(&expr(&[("x", 1, 1)], (0, 1)), &strict).unwrap());
        let loose = sys(&["x"], vec![expr(&[("x", 1, 1)], (-1, 1))], vec![]);
        assert!(!is_implied(&expr(&[("x", 1, 1)], (0, 1)), &loose).unwrap());
    }

    #[test]
    fn implication_on_an_infeasible_system_is_vacuous() {
        let s = sys(
            &["x"],
            vec![expr(&[("x", 1, 1)], (-1, 1)), expr(&[("x", -1, 1)], (2, 1))],
            vec![],
        );
        assert!(is_implied(&expr(&[("x", 1, 1)], (-100, 1)), &s).unwrap());
    }

    #[test]
    fn projection_keeps_only_requested_coordinates() {
        // x ≤ y ≤ z, z ≤ 4, 0 ≤ x projected to {x, z}.
        let s = sys(
            &["x", "y", "z"],
            vec![
                expr(&[("x", 1, 1), ("y", -1, 1)], (0, 1)),
                expr(&[("y", 1, 1), ("z", -1, 1)], (0, 1)),
                expr(&[("z", 1, 1)], (-4, 1)),
                expr(&[("x", -1, 1)], (0, 1)),
            ],
            vec![],
        );
        let p = project_onto(
            &s,
            &["x".to_string(), "z".to_string()],
            &ProjectionOptions::default(),
        )
        .unwrap();
        assert_eq!(p.coordinates, vec!["x".to_string(), "z".to_string()]);
        let want: BTreeSet<LinearExpr> = [
            expr(&[("x", 1, 1), ("z", -1, 1)], (0, 1)),
            expr(&[("z", 1, 1)], (-4, 1)),
            expr(&[("x", -1, 1)], (0, 1)),
        ]
        .into_iter()
        .collect();
        let got: BTreeSet<LinearExpr> = p.inequalities.into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn parses_rationals_from_strings() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(parse_rational("2").unwrap(), rat_int(2));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }
}
