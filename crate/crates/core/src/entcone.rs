//! The Shannon entropy cone over a set of observables, its projection onto
//! the jointly measurable subsets of a marginal scenario, and tools to
//! canonicalize, classify, and evaluate the resulting entropic inequalities.
//!
//! Coordinates are joint entropies `H(S)`, named by the comma-joined member
//! list in observable order (`"A0,B"`); `H(∅) = 0` is never stored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::boxworld::EntropyVector;
use crate::exactgeom::{
    self, is_implied, project_onto, LinearExpr, LinearSystem, ProjectionOptions, Rational,
};
use crate::scenario::{MarginalScenario, SymmetryGroup};
use crate::{Error, Result};

/// One joint-entropy coordinate: a nonempty subset of observables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct EntropyCoordinate {
    pub subset: BTreeSet<String>,
}

impl EntropyCoordinate {
    pub fn name(&self, scenario: &MarginalScenario) -> String {
        scenario.subset_name(&self.subset)
    }

    pub fn from_name(name: &str) -> Self {
        EntropyCoordinate {
            subset: name.split(',').map(|p| p.trim().to_string()).collect(),
        }
    }
}

/// A linear inequality `Σ coeff(S)·H(S) ≤ 0` over joint-entropy coordinates,
/// stored in canonical integer form (collective gcd 1).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct EntropicInequality {
    pub coeffs: BTreeMap<String, Rational>,
}

impl EntropicInequality {
    pub fn from_expr(expr: &LinearExpr) -> Result<Self> {
        if !expr.constant.is_zero() {
            return Err(Error::Shape(
                "entropic inequalities are homogeneous; nonzero constant found".into(),
            ));
        }
        Ok(EntropicInequality { coeffs: expr.canonicalize()?.coeffs })
    }

    pub fn to_expr(&self) -> LinearExpr {
        LinearExpr { coeffs: self.coeffs.clone(), constant: Rational::zero() }
    }

    pub fn coefficient(&self, coordinate: &str) -> Rational {
        self.coeffs.get(coordinate).cloned().unwrap_or_else(Rational::zero)
    }

    /// Builds from `(subset-name, integer coefficient)` pairs.
    pub fn from_named_terms<'a, I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, i64)>,
    {
        let expr = LinearExpr::from_terms(
            terms.into_iter().map(|(n, c)| (n.to_string(), exactgeom::rat_int(c))),
            Rational::zero(),
        );
        Self::from_expr(&expr)
    }

    /// LHS value on an entropy vector; the inequality is satisfied iff the
    /// result is ≤ 0 up to the caller's tolerance.
    pub fn evaluate(&self, entropies: &EntropyVector) -> Result<f64> {
        let mut acc = 0.0;
        for (name, c) in &self.coeffs {
            let h = entropies.get(name).ok_or_else(|| {
                Error::UnknownCoordinate(format!("entropy vector has no coordinate `{name}`"))
            })?;
            acc += rational_to_f64(c) * h;
        }
        Ok(acc)
    }
}

impl fmt::Display for EntropicInequality {
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
                write!(f, "H({name})")?;
            } else {
                write!(f, "{a}·H({name})")?;
            }
        }
        write!(f, " ≤ 0")
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().expect("rational fits in f64")
}

/// An orbit of inequalities under a scenario symmetry group.
#[derive(Clone, Debug)]
pub struct InequalityClass {
    /// Lexicographically minimal member of the orbit.
    pub representative: EntropicInequality,
    pub orbit: Vec<EntropicInequality>,
}

/// All elemental Shannon-cone inequalities over `observables`:
/// `n` monotonicity constraints `H(N∖{i}) ≤ H(N)` and
/// `C(n,2)·2^(n−2)` submodularity constraints
/// `H(S∪{i}) + H(S∪{j}) − H(S∪{i,j}) − H(S) ≥ 0` for `i<j`, `S ⊆ N∖{i,j}`,
/// every one stored as `expr ≤ 0`. Coordinates: all nonempty subsets.
pub fn shannon_cone(observables: &[String]) -> Result<LinearSystem> {
    let n = observables.len();
    if n == 0 || n > 6 {
        return Err(Error::SizeCap(format!(
            "entropy cone supported for 1..=6 observables, got {n}"
        )));
    }
    let name_of = |mask: u32| -> String {
        (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| observables[i].as_str())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut masks: Vec<u32> = (1..(1u32 << n)).collect();
    masks.sort_by_key(|&m| {
        (m.count_ones(), (0..n).filter(|i| m & (1 << i) != 0).collect::<Vec<_>>())
    });
    let mut sys = LinearSystem::new(masks.iter().map(|&m| name_of(m)).collect());

    let full: u32 = (1 << n) - 1;
    let one = exactgeom::rat_int(1);
    for i in 0..n {
        // H(N∖{i}) − H(N) ≤ 0.
        let rest = full & !(1 << i);
        let mut e = LinearExpr::new();
        if rest != 0 {
            e.add_term(name_of(rest), one.clone());
        }
        e.add_term(name_of(full), -one.clone());
        sys.push_inequality(e)?;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let pair = (1u32 << i) | (1 << j);
            let others = full & !pair;
            let mut sub = others;
            loop {
                // −H(S∪{i}) − H(S∪{j}) + H(S∪{i,j}) + H(S) ≤ 0.
                let mut e = LinearExpr::new();
                e.add_term(name_of(sub | (1 << i)), -one.clone());
                e.add_term(name_of(sub | (1 << j)), -one.clone());
                e.add_term(name_of(sub | pair), one.clone());
                if sub != 0 {
                    e.add_term(name_of(sub), one.clone());
                }
                sys.push_inequality(e)?;
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & others;
            }
        }
    }
    Ok(sys)
}

/// Joint-entropy equations expressing the scenario's independence pairs:
/// for each pair `(S,T)` and each nonempty `S′⊆S`, `T′⊆T`, the equation
/// `H(S′∪T′) − H(S′) − H(T′) = 0` (mutual information zero, including all
/// data-processing descendants of the full pair).
pub fn independence_equations(scenario: &MarginalScenario) -> Vec<LinearExpr> {
    let mut out = Vec::new();
    let one = exactgeom::rat_int(1);
    for (s, t) in &scenario.independences {
        let s_subs = nonempty_subsets(s, scenario);
        let t_subs = nonempty_subsets(t, scenario);
        for sp in &s_subs {
            for tp in &t_subs {
                let mut e = LinearExpr::new();
                let union: BTreeSet<String> = sp.union(tp).cloned().collect();
                e.add_term(scenario.subset_name(&union), one.clone());
                e.add_term(scenario.subset_name(sp), -one.clone());
                e.add_term(scenario.subset_name(tp), -one.clone());
                out.push(e);
            }
        }
    }
    out
}

fn nonempty_subsets(set: &BTreeSet<String>, scenario: &MarginalScenario) -> Vec<BTreeSet<String>> {
    let mut members: Vec<&String> = set.iter().collect();
    members.sort_by_key(|o| scenario.index_of(o));
    let m = members.len();
    let mut subs: Vec<BTreeSet<String>> = Vec::new();
    for mask in 1u32..(1 << m) {
        subs.push(
            (0..m)
                .filter(|j| mask & (1 << j) != 0)
                .map(|j| members[j].clone())
                .collect(),
        );
    }
    subs.sort_by_key(|s| scenario.subset_sort_key(s));
    subs
}

/// Result of projecting the Shannon cone onto a scenario's marginal
/// coordinates: surviving equations plus the irredundant facet list, both in
/// canonical form and deterministic order.
#[derive(Clone, Debug)]
pub struct ProjectedCone {
    pub coordinates: Vec<String>,
    pub equations: Vec<LinearExpr>,
    pub facets: Vec<EntropicInequality>,
}

/// Projects the Shannon cone (plus independence equations) of `scenario`
/// onto the joint entropies of its contexts. Facets are reduced to normal
/// form modulo the surviving equations and sorted lexicographically by their
/// coefficient vectors over the marginal coordinate order.
pub fn project(scenario: &MarginalScenario) -> Result<ProjectedCone> {
    project_with_options(scenario, &ProjectionOptions::default())
}

pub fn project_with_options(
    scenario: &MarginalScenario,
    opts: &ProjectionOptions,
) -> Result<ProjectedCone> {
    scenario.validate()?;
    let n = scenario.observables.len();
    if n > 5 {
        return Err(Error::SizeCap(format!(
            "cone projection supported for ≤ 5 observables, got {n}"
        )));
    }
    let mut sys = shannon_cone(&scenario.observables)?;
    for e in independence_equations(scenario) {
        sys.push_equation(e)?;
    }
    let keep: Vec<String> =
        scenario.contexts().iter().map(|c| scenario.subset_name(c)).collect();
    let projected = project_onto(&sys, &keep, opts)?;

    // Coordinate order for presentation: (subset size, observable indices).
    let mut coordinates = keep;
    coordinates.sort_by_key(|name| {
        scenario.subset_sort_key(&EntropyCoordinate::from_name(name).subset)
    });

    let (equations, reduced) =
        reduce_mod_equations(&projected.equations, &projected.inequalities, &coordinates);
    let mut facets: Vec<EntropicInequality> = reduced
        .iter()
        .map(|e| EntropicInequality::from_expr(e).expect("projection returns nonzero rows"))
        .collect();
    facets.sort_by_key(|f| dense_key(&f.to_expr(), &coordinates));
    facets.dedup();
    Ok(ProjectedCone { coordinates, equations, facets })
}

/// Gaussian normal form: brings `equations` to reduced row-echelon form
/// pivoting each on its *largest* coordinate (so high-order joint entropies
/// are rewritten in terms of lower-order ones), then eliminates those pivots
/// from every inequality. Returns (canonical equations, reduced inequalities).
pub fn reduce_mod_equations(
    equations: &[LinearExpr],
    inequalities: &[LinearExpr],
    coordinate_order: &[String],
) -> (Vec<LinearExpr>, Vec<LinearExpr>) {
    let rank_of = |name: &String| {
        coordinate_order.iter().position(|c| c == name).unwrap_or(usize::MAX)
    };
    let mut pivots: Vec<(String, LinearExpr)> = Vec::new();
    let mut work: Vec<LinearExpr> = equations.to_vec();
    loop {
        // Forward pass: take the first equation that is not yet reduced away.
        let Some(pos) = work.iter().position(|e| !e.coeffs.is_empty()) else { break };
        let eq = work.remove(pos);
        let pivot_coord = eq
            .coeffs
            .keys()
            .max_by_key(|name| rank_of(name))
            .expect("nonzero equation")
            .clone();
        let pc = eq.term(&pivot_coord);
        for other in work.iter_mut() {
            let c = other.term(&pivot_coord);
            if !c.is_zero() {
                other.add_scaled(&eq, &(-c / &pc));
                other.coeffs.remove(&pivot_coord);
            }
        }
        // Back-substitute into previously found pivot equations.
        for (_, prev) in pivots.iter_mut() {
            let c = prev.term(&pivot_coord);
            if !c.is_zero() {
                prev.add_scaled(&eq, &(-c / &pc));
                prev.coeffs.remove(&pivot_coord);
                // The scaled addition reintroduces the pivot at zero; the
                // explicit removal above keeps the map clean.
            }
        }
        pivots.push((pivot_coord, eq));
    }
    let reduce = |expr: &LinearExpr| -> LinearExpr {
        let mut e = expr.clone();
        for (coord, eq) in &pivots {
            let c = e.term(coord);
            if !c.is_zero() {
                let pc = eq.term(coord);
                e.add_scaled(eq, &(-c / pc));
                e.coeffs.remove(coord);
            }
        }
        e
    };
    let out_eqs: Vec<LinearExpr> = pivots
        .iter()
        .map(|(_, eq)| {
            let c = eq.canonicalize().expect("pivot equation is nonzero");
            // Sign-normalize: leading coefficient positive.
            if c.coeffs.values().next().map(|v| v.is_negative()).unwrap_or(false) {
                c.scaled(&-Rational::one())
            } else {
                c
            }
        })
        .collect();
    let out_ineqs: Vec<LinearExpr> = inequalities
        .iter()
        .map(reduce)
        .filter(|e| !e.is_zero())
        .map(|e| e.canonicalize().expect("nonzero"))
        .collect();
    (sorted_exprs(out_eqs), out_ineqs)
}

fn sorted_exprs(mut v: Vec<LinearExpr>) -> Vec<LinearExpr> {
    v.sort();
    v.dedup();
    v
}

/// Dense coefficient vector of `expr` over `coordinates`, used as a
/// deterministic lexicographic sort key.
pub fn dense_key(expr: &LinearExpr, coordinates: &[String]) -> Vec<Rational> {
    coordinates.iter().map(|c| expr.term(c)).collect()
}

/// Partitions canonical-form inequalities into orbits of the symmetry group.
/// Orbit members are re-normalized modulo `equations` so that symmetric
/// images land back in the same normal form; the representative is the
/// lexicographically minimal member.
pub fn classify(
    inequalities: &[EntropicInequality],
    group: &SymmetryGroup,
    scenario: &MarginalScenario,
    equations: &[LinearExpr],
) -> Vec<InequalityClass> {
    let coordinates: Vec<String> =
        scenario.contexts().iter().map(|c| scenario.subset_name(c)).collect();
    let mut classes: BTreeMap<Vec<Rational>, InequalityClass> = BTreeMap::new();
    for ineq in inequalities {
        let mut orbit: BTreeMap<Vec<Rational>, EntropicInequality> = BTreeMap::new();
        for element in &group.elements {
            let mapped = permute_inequality(ineq, element, scenario);
            let (_, reduced) =
                reduce_mod_equations(equations, &[mapped.to_expr()], &coordinates);
            let normal = EntropicInequality::from_expr(&reduced[0])
                .expect("permuted inequality stays nonzero");
            orbit.insert(dense_key(&normal.to_expr(), &coordinates), normal);
        }
        let (rep_key, representative) =
            orbit.iter().next().map(|(k, v)| (k.clone(), v.clone())).expect("nonempty orbit");
        classes.entry(rep_key).or_insert_with(|| InequalityClass {
            representative,
            orbit: orbit.values().cloned().collect(),
        });
    }
    classes.into_values().collect()
}

/// Image of an inequality under an observable permutation.
pub fn permute_inequality(
    ineq: &EntropicInequality,
    element: &[usize],
    scenario: &MarginalScenario,
) -> EntropicInequality {
    let mut coeffs: BTreeMap<String, Rational> = BTreeMap::new();
    for (name, c) in &ineq.coeffs {
        let subset = EntropyCoordinate::from_name(name).subset;
        let mapped: BTreeSet<String> = subset
            .iter()
            .map(|o| {
                let i = scenario.index_of(o).expect("declared observable");
                scenario.observables[element[i]].clone()
            })
            .collect();
        coeffs.insert(scenario.subset_name(&mapped), c.clone());
    }
    EntropicInequality { coeffs }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Triviality {
    /// Implied by per-context elemental inequalities (plus marginal
    /// independence equations) alone — holds for every no-signaling box.
    Trivial,
    Nontrivial,
}

/// Decides whether an inequality over marginal coordinates already follows
/// from the elemental inequalities *within* each maximal context plus the
/// independence equations that survive on marginal coordinates. Such
/// inequalities hold for every valid box and carry no noncontextuality
/// content.
pub fn triviality_filter(
    inequality: &EntropicInequality,
    scenario: &MarginalScenario,
) -> Result<Triviality> {
    let coordinates: Vec<String> =
        scenario.contexts().iter().map(|c| scenario.subset_name(c)).collect();
    let mut sys = LinearSystem::new(coordinates.clone());
    let mut seen: BTreeSet<LinearExpr> = BTreeSet::new();
    for ctx in &scenario.maximal_contexts {
        let mut members: Vec<String> = ctx.iter().cloned().collect();
        members.sort_by_key(|o| scenario.index_of(o));
        let cone = shannon_cone(&members)?;
        for e in cone.inequalities {
            if seen.insert(e.canonicalize()?) {
                sys.push_inequality(e)?;
            }
        }
    }
    let coord_set: BTreeSet<&String> = coordinates.iter().collect();
    for e in independence_equations(scenario) {
        if e.coeffs.keys().all(|k| coord_set.contains(k)) {
            sys.push_equation(e)?;
        }
    }
    let implied = is_implied(&inequality.to_expr(), &sys)?;
    Ok(if implied { Triviality::Trivial } else { Triviality::Nontrivial })
}

/// The distinguished-edge cycle inequality for the `n`-cycle scenario
/// (`i` is 1-based): `H(Xi Xi+1) + Σ_{j∉{i,i+1}} H(Xj) − Σ_{j≠i} H(Xj Xj+1) ≤ 0`.
pub fn cycle_facet(n: usize, i: usize) -> Result<EntropicInequality> {
    if n < 3 {
        return Err(Error::Domain("cycle needs n ≥ 3".into()));
    }
    if i < 1 || i > n {
        return Err(Error::Domain(format!("cycle index {i} outside 1..={n}")));
    }
    let scenario = crate::scenario::ncycle(n)?;
    let edge = |j: usize| -> String {
        let a = format!("X{}", j);
        let b = format!("X{}", if j == n { 1 } else { j + 1 });
        let subset: BTreeSet<String> = [a, b].into_iter().collect();
        scenario.subset_name(&subset)
    };
    let mut expr = LinearExpr::new();
    let one = exactgeom::rat_int(1);
    expr.add_term(edge(i), one.clone());
    for j in 1..=n {
        if j != i && j != (i % n) + 1 {
            expr.add_term(format!("X{j}"), one.clone());
        }
        if j != i {
            expr.add_term(edge(j), -one.clone());
        }
    }
    EntropicInequality::from_expr(&expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn elemental_counts_match_formula() {
        assert_eq!(shannon_cone(&names(&["X1", "X2"])).unwrap().inequalities.len(), 3);
        assert_eq!(
            shannon_cone(&names(&["X1", "X2", "X3", "X4"])).unwrap().inequalities.len(),
            28
        );
        assert_eq!(
            shannon_cone(&names(&["X1", "X2", "X3", "X4", "X5"]))
                .unwrap()
                .inequalities
                .len(),
            85
        );
    }

    #[test]
    fn monotonicity_is_implied_by_elementals_on_two_variables() {
        // H(X1) − H(X1X2) ≤ 0 follows from the elemental set.
        let cone = shannon_cone(&names(&["X1", "X2"])).unwrap();
        let target = LinearExpr::from_terms(
            [("X1".to_string(), exactgeom::rat_int(1)),
             ("X1,X2".to_string(), exactgeom::rat_int(-1))],
            Rational::zero(),
        );
        assert!(is_implied(&target, &cone).unwrap());
        // H(X1X2) − H(X1) ≤ 0 does not.
        let reverse = target.scaled(&exactgeom::rat_int(-1));
        assert!(!is_implied(&reverse, &cone).unwrap());
    }

    #[test]
    fn independence_equations_for_bilocality() {
        let s = scenario::bilocality();
        let eqs = independence_equations(&s);
        assert_eq!(eqs.len(), 9);
        // Full pair: H(A0,A1,C0,C1) − H(A0,A1) − H(C0,C1) = 0.
        let full = LinearExpr::from_terms(
            [
                ("A0,A1,C0,C1".to_string(), exactgeom::rat_int(1)),
                ("A0,A1".to_string(), exactgeom::rat_int(-1)),
                ("C0,C1".to_string(), exactgeom::rat_int(-1)),
            ],
            Rational::zero(),
        );
        assert!(eqs.contains(&full));
        // Descendant: H(A0,C1) − H(A0) − H(C1) = 0.
        let desc = LinearExpr::from_terms(
            [
                ("A0,C1".to_string(), exactgeom::rat_int(1)),
                ("A0".to_string(), exactgeom::rat_int(-1)),
                ("C1".to_string(), exactgeom::rat_int(-1)),
            ],
            Rational::zero(),
        );
        assert!(eqs.contains(&desc));
        assert!(independence_equations(&scenario::ncycle(4).unwrap()).is_empty());
    }

    #[test]
    fn single_context_projection_is_identity() {
        let v = serde_json::json!({
            "observables": ["X1", "X2"],
            "maximal_contexts": [["X1", "X2"]],
        });
        let s = MarginalScenario::from_json(&v).unwrap();
        let p = project(&s).unwrap();
        assert!(p.equations.is_empty());
        let want: BTreeSet<EntropicInequality> = shannon_cone(&names(&["X1", "X2"]))
            .unwrap()
            .inequalities
            .iter()
            .map(|e| EntropicInequality::from_expr(e).unwrap())
            .collect();
        let got: BTreeSet<EntropicInequality> = p.facets.into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn triangle_projection_recovers_cycle_facets() {
        let s = scenario::ncycle(3).unwrap();
        let p = project(&s).unwrap();
        assert!(p.equations.is_empty());
        let nontrivial: Vec<&EntropicInequality> = p
            .facets
            .iter()
            .filter(|f| triviality_filter(f, &s).unwrap() == Triviality::Nontrivial)
            .collect();
        let want: BTreeSet<EntropicInequality> =
            (1..=3).map(|i| cycle_facet(3, i).unwrap()).collect();
        let got: BTreeSet<EntropicInequality> =
            nontrivial.into_iter().cloned().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn cycle_facet_matches_hand_expansion() {
        // n=4, i=3: H(X3X4) + H(X1) + H(X2) − H(X1X2) − H(X2X3) − H(X4X1) ≤ 0.
        let f = cycle_facet(4, 3).unwrap();
        let want = EntropicInequality::from_named_terms([
            ("X3,X4", 1),
            ("X1", 1),
            ("X2", 1),
            ("X1,X2", -1),
            ("X2,X3", -1),
            ("X1,X4", -1),
        ])
        .unwrap();
        assert_eq!(f, want);
        assert!(cycle_facet(4, 5).is_err());
    }

    #[test]
    fn classify_groups_cycle_facets_into_one_orbit() {
        let s = scenario::ncycle(3).unwrap();
        let g = scenario::symmetries(&s).unwrap();
        let facets: Vec<EntropicInequality> =
            (1..=3).map(|i| cycle_facet(3, i).unwrap()).collect();
        let classes = classify(&facets, &g, &s, &[]);
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].orbit.len(), 3);
        assert!(classes[0].orbit.contains(&classes[0].representative));
    }

    #[test]
    fn triviality_examples() {
        // Monotonicity inside one context of the CHSH scenario is trivial.
        let b = scenario::bell(2, 2, 2).unwrap();
        let mono =
            EntropicInequality::from_named_terms([("A0", 1), ("A0,B0", -1)]).unwrap();
        assert_eq!(triviality_filter(&mono, &b).unwrap(), Triviality::Trivial);
        // The distinguished-edge 4-cycle inequality is not.
        let s = scenario::ncycle(4).unwrap();
        let facet = cycle_facet(4, 3).unwrap();
        assert_eq!(triviality_filter(&facet, &s).unwrap(), Triviality::Nontrivial);
    }

    #[test]
    fn evaluate_is_zero_on_the_zero_vector() {
        let f = cycle_facet(4, 1).unwrap();
        let mut values = BTreeMap::new();
        for name in f.coeffs.keys() {
            values.insert(name.clone(), 0.0);
        }
        let ev = EntropyVector { values };
        assert_eq!(f.evaluate(&ev).unwrap(), 0.0);
    }

    #[test]
    fn reduce_mod_equations_rewrites_pair_entropies() {
        // Equation H(A0,C0) = H(A0) + H(C0) rewrites the pair coordinate.
        let s = scenario::bilocality();
        let coords: Vec<String> =
            s.contexts().iter().map(|c| s.subset_name(c)).collect();
        let eq = LinearExpr::from_terms(
            [
                ("A0,C0".to_string(), exactgeom::rat_int(1)),
                ("A0".to_string(), exactgeom::rat_int(-1)),
                ("C0".to_string(), exactgeom::rat_int(-1)),
            ],
            Rational::zero(),
        );
        let ineq = LinearExpr::from_terms(
            [("A0,C0".to_string(), exactgeom::rat_int(1)),
             ("A0,B,C0".to_string(), exactgeom::rat_int(-1))],
            Rational::zero(),
        );
        let (eqs, ineqs) = reduce_mod_equations(&[eq], &[ineq], &coords);
        assert_eq!(eqs.len(), 1);
        let want = LinearExpr::from_terms(
            [
                ("A0".to_string(), exactgeom::rat_int(1)),
                ("C0".to_string(), exactgeom::rat_int(1)),
                ("A0,B,C0".to_string(), exactgeom::rat_int(-1)),
            ],
            Rational::zero(),
        );
        assert_eq!(ineqs, vec![want]);
    }
}
