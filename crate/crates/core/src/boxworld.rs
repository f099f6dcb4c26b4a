//! No-signaling boxes (marginal models): named box families, validation of
//! normalization and marginal consistency, entropy vectors, evaluation of the
//! standard correlator and entropic inequalities, detector-inefficiency
//! transforms, and a hidden-variable feasibility LP with certificates.
//!
//! Outcomes are indices `0..cardinality`; for two-outcome ±1 observables the
//! convention is `index = (1 − value)/2`, so index 0 carries value +1.
//! Joint tables are stored per maximal context, flattened in mixed radix over
//! the context members in observable order (last member fastest).

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::entcone::{rational_to_f64, EntropicInequality};
use crate::exactgeom::{
    lp_solve, parse_rational, rat, rat_int, Direction, LPStatus, LinearExpr, LinearSystem,
    Rational,
};
use crate::scenario::{self, MarginalScenario};
use crate::{Error, Result};

/// Absolute tolerance for a float table's total probability.
pub const FLOAT_SUM_TOL: f64 = 1e-12;
/// Most-negative float probability accepted as numerical zero.
pub const FLOAT_NONNEG_TOL: f64 = 1e-12;
/// Overlapping-context marginal agreement tolerance for float boxes.
pub const FLOAT_SHEAF_TOL: f64 = 1e-10;
/// Probabilities at or below this are treated as exact zeros inside entropies.
pub const ENTROPY_FLOOR: f64 = 1e-15;
/// Slack below which the hidden-variable LP counts a float box as exactly
/// representable.
pub const HV_FEASIBILITY_TOL: f64 = 1e-9;
/// Cap on the number of global outcome assignments the feasibility LP accepts.
pub const ASSIGNMENT_CAP: usize = 1_000_000;

/// One context's joint distribution.
#[derive(Clone, Debug, PartialEq)]
pub enum Table {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

impl Table {
    pub fn len(&self) -> usize {
        match self {
            Table::Exact(v) => v.len(),
            Table::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Table::Exact(v) => v.iter().map(rational_to_f64).collect(),
            Table::Float(v) => v.clone(),
        }
    }
}

/// Joint entropies of a box, in bits, keyed by canonical subset name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EntropyVector {
    pub values: BTreeMap<String, f64>,
}

impl EntropyVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

/// A global joint distribution over all observables that reproduces every
/// context table of a box — a witness of noncontextuality.
#[derive(Clone, Debug)]
pub struct HiddenVariableCertificate {
    /// Weight per global outcome assignment, mixed-radix indexed over all
    /// observables in scenario order (last observable fastest).
    pub weights: Vec<f64>,
}

impl HiddenVariableCertificate {
    /// Largest absolute difference between the certificate's marginals and
    /// the box's context tables.
    pub fn marginal_residual(&self, model: &MarginalModel) -> Result<f64> {
        let s = &model.scenario;
        let all: BTreeSet<String> = s.observables.iter().cloned().collect();
        let full_cards = member_cards(s, &s.observables);
        let mut worst: f64 = 0.0;
        for ctx in &s.maximal_contexts {
            let members = sorted_members(s, ctx);
            let keep: Vec<usize> = members
                .iter()
                .map(|m| s.index_of(m).expect("declared observable"))
                .collect();
            let mut marg = vec![0.0; members.iter().map(|m| s.outcome_cardinality[m]).product()];
            for (src, dst) in marginal_map(&full_cards, &keep) {
                marg[dst] += self.weights[src];
            }
            let table = model.table_f64(ctx)?;
            for (a, b) in marg.iter().zip(table.iter()) {
                worst = worst.max((a - b).abs());
            }
        }
        debug_assert_eq!(all.len(), full_cards.len());
        Ok(worst)
    }
}

/// A no-signaling box: one joint distribution per maximal context, subject to
/// normalization and agreement of overlapping marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalModel {
    pub scenario: MarginalScenario,
    /// Keyed by canonical maximal-context name.
    pub tables: BTreeMap<String, Table>,
}

fn sorted_members(scenario: &MarginalScenario, subset: &BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = subset.iter().cloned().collect();
    v.sort_by_key(|o| scenario.index_of(o));
    v
}

fn member_cards(scenario: &MarginalScenario, members: &[String]) -> Vec<usize> {
    members.iter().map(|m| scenario.outcome_cardinality[m]).collect()
}

fn flat_index(tuple: &[usize], cards: &[usize]) -> usize {
    let mut idx = 0;
    for (t, c) in tuple.iter().zip(cards.iter()) {
        idx = idx * c + t;
    }
    idx
}

fn tuple_of(mut idx: usize, cards: &[usize]) -> Vec<usize> {
    let mut t = vec![0; cards.len()];
    for i in (0..cards.len()).rev() {
        t[i] = idx % cards[i];
        idx /= cards[i];
    }
    t
}

/// For each flat index of a table over `cards`, the flat index of its image
/// in the marginal over the positions `keep` (in the given order).
fn marginal_map(cards: &[usize], keep: &[usize]) -> Vec<(usize, usize)> {
    let total: usize = cards.iter().product();
    let kept_cards: Vec<usize> = keep.iter().map(|&k| cards[k]).collect();
    let mut out = Vec::with_capacity(total);
    for src in 0..total {
        let tuple = tuple_of(src, cards);
        let kept: Vec<usize> = keep.iter().map(|&k| tuple[k]).collect();
        out.push((src, flat_index(&kept, &kept_cards)));
    }
    out
}

/// Shannon entropy in bits; probabilities at or below `ENTROPY_FLOOR` are
/// treated as zero.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > ENTROPY_FLOOR {
            h -= p * p.log2();
        }
    }
    h
}

/// Binary entropy h(p) in bits.
pub fn binary_entropy(p: f64) -> f64 {
    shannon_entropy(&[p, 1.0 - p])
}

impl MarginalModel {
    /// Builds and validates a box from per-maximal-context tables.
    pub fn from_tables(
        scenario: MarginalScenario,
        tables: BTreeMap<String, Table>,
    ) -> Result<MarginalModel> {
        let model = MarginalModel { scenario, tables };
        model.validate()?;
        Ok(model)
    }

    pub fn is_exact(&self) -> bool {
        self.tables.values().all(|t| matches!(t, Table::Exact(_)))
    }

    fn table_for(&self, context: &BTreeSet<String>) -> Result<&Table> {
        let name = self.scenario.subset_name(context);
        self.tables
            .get(&name)
            .ok_or_else(|| Error::InvalidBox(format!("missing table for context `{name}`")))
    }

    pub fn table_f64(&self, context: &BTreeSet<String>) -> Result<Vec<f64>> {
        Ok(self.table_for(context)?.to_f64())
    }

    /// Checks normalization, nonnegativity, and the marginal-consistency
    /// (no-signaling) condition across every pair of overlapping contexts.
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let kinds: BTreeSet<bool> = self
            .tables
            .values()
            .map(|t| matches!(t, Table::Exact(_)))
            .collect();
        if kinds.len() > 1 {
            return Err(Error::InvalidBox(
                "tables mix exact and float storage in one box".into(),
            ));
        }
        let context_names: BTreeSet<String> = self
            .scenario
            .maximal_contexts
            .iter()
            .map(|c| self.scenario.subset_name(c))
            .collect();
        for key in self.tables.keys() {
            if !context_names.contains(key) {
                return Err(Error::InvalidBox(format!(
                    "table `{key}` does not name a maximal context"
                )));
            }
        }
        for ctx in &self.scenario.maximal_contexts {
            let members = sorted_members(&self.scenario, ctx);
            let cards = member_cards(&self.scenario, &members);
            let want: usize = cards.iter().product();
            let table = self.table_for(ctx)?;
            if table.len() != want {
                return Err(Error::InvalidBox(format!(
                    "table `{}` has {} entries, expected {want}",
                    self.scenario.subset_name(ctx),
                    table.len()
                )));
            }
            match table {
                Table::Exact(v) => {
                    if v.iter().any(|p| p.is_negative()) {
                        return Err(Error::InvalidBox(format!(
                            "negative probability in `{}`",
                            self.scenario.subset_name(ctx)
                        )));
                    }
                    let sum: Rational = v.iter().cloned().sum();
                    if !sum.is_one() {
                        return Err(Error::InvalidBox(format!(
                            "table `{}` sums to {sum}, expected 1",
                            self.scenario.subset_name(ctx)
                        )));
                    }
                }
                Table::Float(v) => {
                    if v.iter().any(|p| *p < -FLOAT_NONNEG_TOL || !p.is_finite()) {
                        return Err(Error::InvalidBox(format!(
                            "negative or non-finite probability in `{}`",
                            self.scenario.subset_name(ctx)
                        )));
                    }
                    let sum: f64 = v.iter().sum();
                    if (sum - 1.0).abs() > FLOAT_SUM_TOL {
                        return Err(Error::InvalidBox(format!(
                            "table `{}` sums to {sum}, expected 1",
                            self.scenario.subset_name(ctx)
                        )));
                    }
                }
            }
        }
        // Overlap agreement: the shared marginal of every pair of maximal
        // contexts must coincide.
        let contexts = &self.scenario.maximal_contexts;
        for i in 0..contexts.len() {
            for j in (i + 1)..contexts.len() {
                let shared: BTreeSet<String> =
                    contexts[i].intersection(&contexts[j]).cloned().collect();
                if shared.is_empty() {
                    continue;
                }
                if self.is_exact() {
                    let a = self.marginal_exact_from(&contexts[i], &shared)?;
                    let b = self.marginal_exact_from(&contexts[j], &shared)?;
                    if a != b {
                        return Err(Error::InvalidBox(format!(
                            "contexts `{}` and `{}` disagree on `{}`",
                            self.scenario.subset_name(&contexts[i]),
                            self.scenario.subset_name(&contexts[j]),
                            self.scenario.subset_name(&shared)
                        )));
                    }
                } else {
                    let a = self.marginal_from(&contexts[i], &shared)?;
                    let b = self.marginal_from(&contexts[j], &shared)?;
                    let worst = a
                        .iter()
                        .zip(b.iter())
                        .map(|(x, y)| (x - y).abs())
                        .fold(0.0f64, f64::max);
                    if worst > FLOAT_SHEAF_TOL {
                        return Err(Error::InvalidBox(format!(
                            "contexts `{}` and `{}` disagree on `{}` by {worst:.3e}",
                            self.scenario.subset_name(&contexts[i]),
                            self.scenario.subset_name(&contexts[j]),
                            self.scenario.subset_name(&shared)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn positions_in(&self, context: &BTreeSet<String>, subset: &BTreeSet<String>) -> Vec<usize> {
        let members = sorted_members(&self.scenario, context);
        sorted_members(&self.scenario, subset)
            .iter()
            .map(|m| members.iter().position(|x| x == m).expect("subset of context"))
            .collect()
    }

    fn marginal_from(&self, context: &BTreeSet<String>, subset: &BTreeSet<String>) -> Result<Vec<f64>> {
        let members = sorted_members(&self.scenario, context);
        let cards = member_cards(&self.scenario, &members);
        let keep = self.positions_in(context, subset);
        let table = self.table_f64(context)?;
        let size: usize = keep.iter().map(|&k| cards[k]).product();
        let mut out = vec![0.0; size];
        for (src, dst) in marginal_map(&cards, &keep) {
            out[dst] += table[src];
        }
        Ok(out)
    }

    fn marginal_exact_from(
        &self,
        context: &BTreeSet<String>,
        subset: &BTreeSet<String>,
    ) -> Result<Vec<Rational>> {
        let members = sorted_members(&self.scenario, context);
        let cards = member_cards(&self.scenario, &members);
        let keep = self.positions_in(context, subset);
        let Table::Exact(table) = self.table_for(context)? else {
            return Err(Error::InvalidBox("exact marginal requested from float box".into()));
        };
        let size: usize = keep.iter().map(|&k| cards[k]).product();
        let mut out = vec![Rational::zero(); size];
        for (src, dst) in marginal_map(&cards, &keep) {
            out[dst] += table[src].clone();
        }
        Ok(out)
    }

    fn containing_context(&self, subset: &BTreeSet<String>) -> Result<BTreeSet<String>> {
        self.scenario
            .maximal_contexts
            .iter()
            .find(|c| subset.is_subset(c))
            .cloned()
            .ok_or_else(|| {
                Error::UnknownCoordinate(format!(
                    "`{}` is not contained in any context",
                    self.scenario.subset_name(subset)
                ))
            })
    }

    /// Joint distribution of any subset of some context, flattened over the
    /// subset members in observable order.
    pub fn marginal(&self, subset: &BTreeSet<String>) -> Result<Vec<f64>> {
        let ctx = self.containing_context(subset)?;
        self.marginal_from(&ctx, subset)
    }

    pub fn marginal_exact(&self, subset: &BTreeSet<String>) -> Result<Vec<Rational>> {
        let ctx = self.containing_context(subset)?;
        self.marginal_exact_from(&ctx, subset)
    }

    /// Joint Shannon entropies (bits) of every context subset.
    pub fn entropy_vector(&self) -> Result<EntropyVector> {
        let mut values = BTreeMap::new();
        for subset in self.scenario.contexts() {
            let probs = self.marginal(&subset)?;
            values.insert(self.scenario.subset_name(&subset), shannon_entropy(&probs));
        }
        Ok(EntropyVector { values })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut tables = serde_json::Map::new();
        for ctx in &self.scenario.maximal_contexts {
            let name = self.scenario.subset_name(ctx);
            let members = sorted_members(&self.scenario, ctx);
            let cards = member_cards(&self.scenario, &members);
            let mut entries = serde_json::Map::new();
            let table = &self.tables[&name];
            for idx in 0..table.len() {
                let key = tuple_of(idx, &cards)
                    .iter()
                    .map(|t| t.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                let value = match table {
                    Table::Exact(v) => serde_json::Value::String(v[idx].to_string()),
                    Table::Float(v) => serde_json::json!(v[idx]),
                };
                entries.insert(key, value);
            }
            tables.insert(name, serde_json::Value::Object(entries));
        }
        serde_json::json!({ "scenario": self.scenario.to_json(), "tables": tables })
    }

    /// Parses `{"scenario": ..., "tables": {"A0,B0": {"0,0": p, ...}}}`.
    /// Entries may be numbers or exact `"num/den"` / decimal strings; omitted
    /// entries are zero. The box is exact iff every entry is a string.
    pub fn from_json(v: &serde_json::Value) -> Result<MarginalModel> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::InvalidBox("box JSON must be an object".into()))?;
        let scenario = MarginalScenario::from_json(
            obj.get("scenario")
                .ok_or_else(|| Error::InvalidBox("box JSON lacks `scenario`".into()))?,
        )?;
        let tables_json = obj
            .get("tables")
            .and_then(|t| t.as_object())
            .ok_or_else(|| Error::InvalidBox("box JSON lacks `tables` object".into()))?;
        let all_exact = tables_json
            .values()
            .flat_map(|t| t.as_object().into_iter().flat_map(|m| m.values()))
            .all(|e| e.is_string());
        let mut tables = BTreeMap::new();
        for ctx in &scenario.maximal_contexts {
            let name = scenario.subset_name(ctx);
            let entries = tables_json
                .get(&name)
                .and_then(|t| t.as_object())
                .ok_or_else(|| Error::InvalidBox(format!("missing table `{name}`")))?;
            let members = sorted_members(&scenario, ctx);
            let cards = member_cards(&scenario, &members);
            let size: usize = cards.iter().product();
            let mut exact = vec![Rational::zero(); size];
            for (key, value) in entries {
                let tuple: Vec<usize> = key
                    .split(',')
                    .map(|p| {
                        p.trim().parse::<usize>().map_err(|_| {
                            Error::InvalidBox(format!("bad outcome key `{key}` in `{name}`"))
                        })
                    })
                    .collect::<Result<_>>()?;
                if tuple.len() != cards.len()
                    || tuple.iter().zip(cards.iter()).any(|(t, c)| t >= c)
                {
                    return Err(Error::InvalidBox(format!(
                        "outcome key `{key}` out of range in `{name}`"
                    )));
                }
                let r = match value {
                    serde_json::Value::String(s) => parse_rational(s)?,
                    serde_json::Value::Number(n) => {
                        let f = n.as_f64().ok_or_else(|| {
                            Error::InvalidBox(format!("bad number in `{name}`"))
                        })?;
                        Rational::from_float(f).ok_or_else(|| {
                            Error::InvalidBox(format!("non-finite entry in `{name}`"))
                        })?
                    }
                    _ => {
                        return Err(Error::InvalidBox(format!(
                            "entry `{key}` in `{name}` is neither number nor string"
                        )))
                    }
                };
                exact[flat_index(&tuple, &cards)] = r;
            }
            let table = if all_exact {
                Table::Exact(exact)
            } else {
                Table::Float(exact.iter().map(rational_to_f64).collect())
            };
            tables.insert(name, table);
        }
        let extra: Vec<&String> = tables_json
            .keys()
            .filter(|k| !tables.contains_key(*k))
            .collect();
        if !extra.is_empty() {
            return Err(Error::InvalidBox(format!(
                "tables do not name maximal contexts: {extra:?}"
            )));
        }
        MarginalModel::from_tables(scenario, tables)
    }
}

fn pair_set(a: &str, b: &str) -> BTreeSet<String> {
    [a.to_string(), b.to_string()].into_iter().collect()
}

// ---------------------------------------------------------------------------
// Shape probes.

/// Some(n) iff the scenario has observables X1..Xn under the n-cycle context
/// structure (cardinalities are not constrained).
pub fn cycle_size(s: &MarginalScenario) -> Option<usize> {
    let n = s.observables.len();
    if n < 3 {
        return None;
    }
    for (i, o) in s.observables.iter().enumerate() {
        if *o != format!("X{}", i + 1) {
            return None;
        }
    }
    let want: BTreeSet<BTreeSet<String>> = (1..=n)
        .map(|i| pair_set(&format!("X{i}"), &format!("X{}", i % n + 1)))
        .collect();
    let got: BTreeSet<BTreeSet<String>> = s.maximal_contexts.iter().cloned().collect();
    (want == got).then_some(n)
}

/// True iff the scenario is the two-party, two-setting Bell structure
/// A0,A1 × B0,B1 (any outcome counts).
pub fn is_chsh_shape(s: &MarginalScenario) -> bool {
    let want_obs = ["A0", "A1", "B0", "B1"];
    if s.observables.len() != 4 || s.observables.iter().zip(want_obs).any(|(a, b)| a != b) {
        return false;
    }
    let want: BTreeSet<BTreeSet<String>> = [("A0", "B0"), ("A0", "B1"), ("A1", "B0"), ("A1", "B1")]
        .iter()
        .map(|(a, b)| pair_set(a, b))
        .collect();
    let got: BTreeSet<BTreeSet<String>> = s.maximal_contexts.iter().cloned().collect();
    want == got
}

/// True iff the scenario has the two-source structure A0,A1 | B | C0,C1 with
/// the four three-observable contexts (any outcome counts).
pub fn is_bilocality_shape(s: &MarginalScenario) -> bool {
    let want_obs = ["A0", "A1", "B", "C0", "C1"];
    if s.observables.len() != 5 || s.observables.iter().zip(want_obs).any(|(a, b)| a != b) {
        return false;
    }
    let want: BTreeSet<BTreeSet<String>> = [("A0", "C0"), ("A0", "C1"), ("A1", "C0"), ("A1", "C1")]
        .iter()
        .map(|(a, c)| {
            let mut t = pair_set(a, c);
            t.insert("B".to_string());
            t
        })
        .collect();
    let got: BTreeSet<BTreeSet<String>> = s.maximal_contexts.iter().cloned().collect();
    want == got
}

// ---------------------------------------------------------------------------
// Named families.

fn bell2222_box(entry: impl Fn(usize, usize, usize, usize) -> Rational) -> MarginalModel {
    let s = scenario::bell(2, 2, 2).expect("valid shape");
    let mut tables = BTreeMap::new();
    for x in 0..2usize {
        for y in 0..2usize {
            let name = format!("A{x},B{y}");
            let mut t = Vec::with_capacity(4);
            for a in 0..2 {
                for b in 0..2 {
                    t.push(entry(a, b, x, y));
                }
            }
            tables.insert(name, Table::Exact(t));
        }
    }
    MarginalModel::from_tables(s, tables).expect("construction is valid")
}

fn sign(k: usize) -> i64 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// The extremal box with `a⊕b = x·y` and uniform marginals; the unique
/// maximal violator of the CHSH correlator inequality.
pub fn pr() -> MarginalModel {
    bell2222_box(|a, b, x, y| {
        if (a + b) % 2 == x * y {
            rat(1, 2)
        } else {
            Rational::zero()
        }
    })
}

/// Perfect classical correlation: `a = b` uniformly, for every setting pair.
pub fn classical() -> MarginalModel {
    bell2222_box(|a, b, _, _| if a == b { rat(1, 2) } else { Rational::zero() })
}

/// Uniform noise on every context.
pub fn white() -> MarginalModel {
    bell2222_box(|_, _, _, _| rat(1, 4))
}

/// Mixture of the extremal box with uniform noise:
/// `P = ¼·(1 + C·(−1)^{a+b+xy})`. `chsh` equals `4C`.
pub fn isotropic(c: &Rational) -> Result<MarginalModel> {
    if c.is_negative() || c > &Rational::one() {
        return Err(Error::Domain(format!("isotropic parameter {c} outside [0,1]")));
    }
    Ok(bell2222_box(|a, b, x, y| {
        (rat_int(1) + c * rat_int(sign(a + b + x * y))) / rat_int(4)
    }))
}

/// Convex mixture of boxes over a shared scenario; weights must be
/// nonnegative and sum to 1, all parts exact.
pub fn mix(parts: &[(Rational, &MarginalModel)]) -> Result<MarginalModel> {
    let Some(((_, first), rest)) = parts.split_first() else {
        return Err(Error::Domain("mixture needs at least one part".into()));
    };
    let total: Rational = parts.iter().map(|(w, _)| w.clone()).sum();
    if !total.is_one() || parts.iter().any(|(w, _)| w.is_negative()) {
        return Err(Error::Domain("mixture weights must be a probability vector".into()));
    }
    for (_, m) in rest {
        if m.scenario != first.scenario {
            return Err(Error::Shape("mixture parts live on different scenarios".into()));
        }
    }
    let mut tables = BTreeMap::new();
    for ctx in &first.scenario.maximal_contexts {
        let name = first.scenario.subset_name(ctx);
        let mut acc = vec![Rational::zero(); first.tables[&name].len()];
        for (w, m) in parts {
            let Table::Exact(t) = &m.tables[&name] else {
                return Err(Error::InvalidBox("mixture parts must be exact".into()));
            };
            for (dst, p) in acc.iter_mut().zip(t.iter()) {
                *dst += w * p;
            }
        }
        tables.insert(name, Table::Exact(acc));
    }
    MarginalModel::from_tables(first.scenario.clone(), tables)
}

/// Equal mixture of the extremal box with perfect classical correlation; the
/// no-signaling maximizer of the entropic CHSH expression.
pub fn pmax() -> MarginalModel {
    mix(&[(rat(1, 2), &pr()), (rat(1, 2), &classical())]).expect("valid mixture")
}

/// `γ·PR + ξ·classical + (1−γ−ξ)·(PR/2 + white/2)`; the two-parameter slice
/// of the no-signaling polytope used for the distillation scans.
pub fn triangle(gamma: &Rational, xi: &Rational) -> Result<MarginalModel> {
    let rest = Rational::one() - gamma - xi;
    if gamma.is_negative() || xi.is_negative() || rest.is_negative() {
        return Err(Error::Domain(
            "triangle needs γ ≥ 0, ξ ≥ 0, γ + ξ ≤ 1".into(),
        ));
    }
    let noisy = mix(&[(rat(1, 2), &pr()), (rat(1, 2), &white())])?;
    mix(&[(gamma.clone(), &pr()), (xi.clone(), &classical()), (rest, &noisy)])
}

fn bell22d_box(d: usize, entry: impl Fn(usize, usize, usize, usize) -> Rational) -> Result<MarginalModel> {
    if d < 2 {
        return Err(Error::Domain(format!("outcome count {d} below 2")));
    }
    let s = scenario::bell(2, 2, d)?;
    let mut tables = BTreeMap::new();
    for x in 0..2usize {
        for y in 0..2usize {
            let name = format!("A{x},B{y}");
            let mut t = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    t.push(entry(a, b, x, y));
                }
            }
            tables.insert(name, Table::Exact(t));
        }
    }
    MarginalModel::from_tables(s, tables)
}

/// d-outcome generalization of the extremal box: `a − b ≡ x·y (mod d)`.
pub fn pr_d(d: usize) -> Result<MarginalModel> {
    bell22d_box(d, |a, b, x, y| {
        if (a + d - b) % d == (x * y) % d {
            rat(1, d as i64)
        } else {
            Rational::zero()
        }
    })
}

/// d-outcome perfect classical correlation `a = b`.
pub fn classical_d(d: usize) -> Result<MarginalModel> {
    bell22d_box(d, |a, b, _, _| if a == b { rat(1, d as i64) } else { Rational::zero() })
}

/// `ξ·pr_d + (1−ξ)·classical_d`: nonlocal content ξ, entropic CHSH value h(ξ).
pub fn dfamily(xi: &Rational, d: usize) -> Result<MarginalModel> {
    if xi.is_negative() || xi > &Rational::one() {
        return Err(Error::Domain(format!("mixing weight {xi} outside [0,1]")));
    }
    mix(&[
        (xi.clone(), &pr_d(d)?),
        (Rational::one() - xi, &classical_d(d)?),
    ])
}

/// Tripartite two-source box
/// `P(a,b,c|x,z) = ⅛·[1 + ξ(−1)^{a+b+c+xz} + (1−ξ−γ)(−1)^{a+b+c}]`
/// on the A0,A1 | B | C0,C1 scenario; its A–C marginal is uniform for every
/// parameter choice.
pub fn nb(xi: &Rational, gamma: &Rational) -> Result<MarginalModel> {
    let rest = Rational::one() - xi - gamma;
    if xi.is_negative() || gamma.is_negative() || rest.is_negative() {
        return Err(Error::Domain("family needs ξ ≥ 0, γ ≥ 0, ξ + γ ≤ 1".into()));
    }
    let s = scenario::bilocality();
    let mut tables = BTreeMap::new();
    for x in 0..2usize {
        for z in 0..2usize {
            let name = format!("A{x},B,C{z}");
            let mut t = Vec::with_capacity(8);
            for a in 0..2usize {
                for b in 0..2usize {
                    for c in 0..2usize {
                        let v = (rat_int(1)
                            + xi * rat_int(sign(a + b + c + x * z))
                            + rest.clone() * rat_int(sign(a + b + c)))
                            / rat_int(8);
                        t.push(v);
                    }
                }
            }
            tables.insert(name, Table::Exact(t));
        }
    }
    MarginalModel::from_tables(s, tables)
}

/// Builds a box from a CLI-style name: `pr`, `classical` (alias `pc`),
/// `white`, `pmax`, `iso:C`, `triangle:G:XI`, `prd:D`, `classicald:D`,
/// `dfamily:XI:D`, `nb:XI:G`. Numeric parameters accept decimals or `a/b`.
pub fn named_box(name: &str) -> Result<MarginalModel> {
    let parts: Vec<&str> = name.split(':').map(|p| p.trim()).collect();
    let want =
        |k: usize| -> Result<()> {
            if parts.len() == k + 1 {
                Ok(())
            } else {
                Err(Error::Domain(format!(
                    "`{}` takes {k} parameter(s), got {}",
                    parts[0],
                    parts.len() - 1
                )))
            }
        };
    let num = |i: usize| parse_rational(parts[i]);
    let count = |i: usize| -> Result<usize> {
        parts[i]
            .parse::<usize>()
            .map_err(|_| Error::Domain(format!("`{}` is not an outcome count", parts[i])))
    };
    match parts[0].to_ascii_lowercase().as_str() {
        "pr" => want(0).map(|_| pr()),
        "classical" | "pc" => want(0).map(|_| classical()),
        "white" => want(0).map(|_| white()),
        "pmax" => want(0).map(|_| pmax()),
        "iso" => {
            want(1)?;
            isotropic(&num(1)?)
        }
        "triangle" => {
            want(2)?;
            triangle(&num(1)?, &num(2)?)
        }
        "prd" => {
            want(1)?;
            pr_d(count(1)?)
        }
        "classicald" | "classical_d" => {
            want(1)?;
            classical_d(count(1)?)
        }
        "dfamily" => {
            want(2)?;
            dfamily(&num(1)?, count(2)?)
        }
        "nb" => {
            want(2)?;
            nb(&num(1)?, &num(2)?)
        }
        other => Err(Error::Domain(format!("unknown box name `{other}`"))),
    }
}

// ---------------------------------------------------------------------------
// Inequality evaluation.

fn pair_correlator(probs: &[f64]) -> f64 {
    // probs over (a,b) ∈ {0,1}², value convention (−1)^outcome.
    probs[0] - probs[1] - probs[2] + probs[3]
}

/// `⟨A0B0⟩+⟨A0B1⟩+⟨A1B0⟩−⟨A1B1⟩` for a two-outcome CHSH-shaped box.
pub fn chsh(model: &MarginalModel) -> Result<f64> {
    if !is_chsh_shape(&model.scenario) {
        return Err(Error::Shape("CHSH needs the A0,A1 × B0,B1 scenario".into()));
    }
    if model.scenario.outcome_cardinality.values().any(|&c| c != 2) {
        return Err(Error::Shape("CHSH correlators need two-outcome observables".into()));
    }
    let e = |x: usize, y: usize| -> Result<f64> {
        Ok(pair_correlator(&model.marginal(&pair_set(
            &format!("A{x}"),
            &format!("B{y}"),
        ))?))
    };
    Ok(e(0, 0)? + e(0, 1)? + e(1, 0)? - e(1, 1)?)
}

/// Entropic CHSH expression
/// `I(A0:B0)+I(A0:B1)+I(A1:B0)−I(A1:B1)−H(A0)−H(B0)`; positive values
/// witness contextuality regardless of outcome counts.
pub fn chsh_entropic(model: &MarginalModel) -> Result<f64> {
    if !is_chsh_shape(&model.scenario) {
        return Err(Error::Shape("entropic CHSH needs the A0,A1 × B0,B1 scenario".into()));
    }
    let ev = model.entropy_vector()?;
    let h = |n: &str| ev.get(n).expect("context subset present");
    let i = |x: usize, y: usize| {
        h(&format!("A{x}")) + h(&format!("B{y}")) - h(&format!("A{x},B{y}"))
    };
    Ok(i(0, 0) + i(0, 1) + i(1, 0) - i(1, 1) - h("A0") - h("B0"))
}

/// LHS of the distinguished-edge cycle inequality for edge `i` (1-based):
/// `H(XiXi+1) + Σ_{j∉{i,i+1}} H(Xj) − Σ_{j≠i} H(XjXj+1)`.
pub fn ncycle_entropic(model: &MarginalModel, i: usize) -> Result<f64> {
    let Some(n) = cycle_size(&model.scenario) else {
        return Err(Error::Shape("cycle evaluation needs an n-cycle scenario".into()));
    };
    let facet = crate::entcone::cycle_facet(n, i)?;
    facet.evaluate(&model.entropy_vector()?)
}

/// Pentagon correlator `Σ_{i=1..5} ⟨XiXi+1⟩` (indices mod 5); noncontextual
/// boxes satisfy ≥ −3.
pub fn klyachko_k5(model: &MarginalModel) -> Result<f64> {
    if cycle_size(&model.scenario) != Some(5) {
        return Err(Error::Shape("pentagon correlator needs the 5-cycle".into()));
    }
    if model.scenario.outcome_cardinality.values().any(|&c| c != 2) {
        return Err(Error::Shape("pentagon correlator needs two-outcome observables".into()));
    }
    let mut s = 0.0;
    for i in 1..=5usize {
        let j = i % 5 + 1;
        s += pair_correlator(&model.marginal(&pair_set(&format!("X{i}"), &format!("X{j}")))?);
    }
    Ok(s)
}

/// Coordinate names of the two-source inequality table, in presentation
/// order: singletons, A–B and B–C pairs, then the four full contexts.
pub const BILOCAL_COLUMNS: [&str; 13] = [
    "A0", "A1", "B", "C0", "C1", "A0,B", "A1,B", "B,C0", "B,C1", "A0,B,C0", "A0,B,C1", "A1,B,C0",
    "A1,B,C1",
];

/// Coefficient rows of the ten inequality classes over `BILOCAL_COLUMNS`,
/// each understood as `Σ coeff·H ≤ 0`.
pub const BILOCAL_ROWS: [[i64; 13]; 10] = [
    [-1, 0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0, 0, -1, 0, 0, 0],
    [1, 0, 0, 1, 0, 0, 0, 0, 0, -1, 0, 0, 0],
    [0, 0, 1, 0, 0, -1, 0, -1, 0, 1, 0, 0, 0],
    [0, 1, 0, 1, 0, 1, -1, 0, 0, -1, 0, 0, 0],
    [0, 1, 0, 0, 1, 1, -1, 1, -1, -1, 0, 0, 0],
    [1, 0, 0, 1, 0, 0, 0, 0, 0, 0, -1, -1, 1],
    [1, 0, 0, 1, 0, -1, 1, 0, 0, -1, 1, 0, -1],
    [1, 0, 0, 1, 0, -1, 1, -1, 1, 1, -1, -1, 0],
    [0, 0, 0, 0, 0, 1, 0, 1, 0, -1, -1, -1, 1],
];

/// Row `k` (1-based) of the two-source inequality table as an inequality
/// object.
pub fn bilocal_row_inequality(k: usize) -> Result<EntropicInequality> {
    if k < 1 || k > BILOCAL_ROWS.len() {
        return Err(Error::Domain(format!("row {k} outside 1..={}", BILOCAL_ROWS.len())));
    }
    EntropicInequality::from_named_terms(
        BILOCAL_COLUMNS
            .iter()
            .zip(BILOCAL_ROWS[k - 1].iter())
            .filter(|(_, &c)| c != 0)
            .map(|(n, &c)| (*n, c)),
    )
}

/// LHS of row `k` (1-based) of the two-source inequality table.
pub fn bilocal_row(model: &MarginalModel, k: usize) -> Result<f64> {
    if !is_bilocality_shape(&model.scenario) {
        return Err(Error::Shape("row evaluation needs the two-source scenario".into()));
    }
    bilocal_row_inequality(k)?.evaluate(&model.entropy_vector()?)
}

/// Largest deviation of the A–C marginals from the product of their
/// single-observable marginals, over all setting pairs.
pub fn binosig_residual(model: &MarginalModel) -> Result<f64> {
    if !is_bilocality_shape(&model.scenario) {
        return Err(Error::Shape("marginal-independence check needs the two-source scenario".into()));
    }
    let mut worst: f64 = 0.0;
    for x in 0..2 {
        for z in 0..2 {
            let (a_name, c_name) = (format!("A{x}"), format!("C{z}"));
            let ac = model.marginal(&pair_set(&a_name, &c_name))?;
            let a = model.marginal(&[a_name.clone()].into_iter().collect())?;
            let c = model.marginal(&[c_name.clone()].into_iter().collect())?;
            for (ia, pa) in a.iter().enumerate() {
                for (ic, pc) in c.iter().enumerate() {
                    worst = worst.max((ac[ia * c.len() + ic] - pa * pc).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// True iff the box's A–C marginals factorize (within 10⁻¹⁰) — the extra
/// no-signaling-type constraint obeyed by two-independent-source models.
pub fn check_bilocal_marginal(model: &MarginalModel) -> Result<bool> {
    Ok(binosig_residual(model)? <= 1e-10)
}

// ---------------------------------------------------------------------------
// Detector-inefficiency transforms.

fn require_pairwise(s: &MarginalScenario) -> Result<()> {
    if s.maximal_contexts.iter().any(|c| c.len() > 2) {
        return Err(Error::Shape("detector transforms need pairwise contexts".into()));
    }
    Ok(())
}

fn with_noclick_outcome(s: &MarginalScenario) -> MarginalScenario {
    let mut out = s.clone();
    for card in out.outcome_cardinality.values_mut() {
        *card += 1;
    }
    out
}

/// One detector per context: with probability `η` the joint measurement
/// clicks and reports the original outcomes, otherwise both observables
/// report the extra no-click outcome. Pair entropies transform as
/// `H^η = η·H + h(η)`.
pub fn single_detector(model: &MarginalModel, eta: f64) -> Result<MarginalModel> {
    detector_transform(model, eta, false)
}

/// Independent detectors per observable: click pattern weights
/// `η², η(1−η), (1−η)η, (1−η)²`, with the no-click branch marginalized from
/// the original table. Pair entropies transform as
/// `H^η = η²·H(pair) + η(1−η)·[H(first)+H(second)] + 2h(η)`.
pub fn two_detector(model: &MarginalModel, eta: f64) -> Result<MarginalModel> {
    detector_transform(model, eta, true)
}

fn detector_transform(model: &MarginalModel, eta: f64, independent: bool) -> Result<MarginalModel> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("efficiency {eta} outside [0,1]")));
    }
    require_pairwise(&model.scenario)?;
    let s = with_noclick_outcome(&model.scenario);
    let mut tables = BTreeMap::new();
    for ctx in &model.scenario.maximal_contexts {
        let name = model.scenario.subset_name(ctx);
        let members = sorted_members(&model.scenario, ctx);
        let cards = member_cards(&model.scenario, &members);
        let p = model.table_f64(ctx)?;
        let new = match cards.as_slice() {
            [d] => {
                let mut t = vec![0.0; d + 1];
                for a in 0..*d {
                    t[a] = eta * p[a];
                }
                t[*d] = 1.0 - eta;
                t
            }
            [di, dj] => {
                let (di, dj) = (*di, *dj);
                let mut t = vec![0.0; (di + 1) * (dj + 1)];
                let idx = |a: usize, b: usize| a * (dj + 1) + b;
                if independent {
                    for a in 0..di {
                        for b in 0..dj {
                            t[idx(a, b)] = eta * eta * p[a * dj + b];
                        }
                    }
                    for a in 0..di {
                        let row: f64 = (0..dj).map(|b| p[a * dj + b]).sum();
                        t[idx(a, dj)] = eta * (1.0 - eta) * row;
                    }
                    for b in 0..dj {
                        let col: f64 = (0..di).map(|a| p[a * dj + b]).sum();
                        t[idx(di, b)] = (1.0 - eta) * eta * col;
                    }
                    t[idx(di, dj)] = (1.0 - eta) * (1.0 - eta);
                } else {
                    for a in 0..di {
                        for b in 0..dj {
                            t[idx(a, b)] = eta * p[a * dj + b];
                        }
                    }
                    t[idx(di, dj)] = 1.0 - eta;
                }
                t
            }
            _ => unreachable!("pairwise contexts enforced above"),
        };
        tables.insert(name, Table::Float(new));
    }
    MarginalModel::from_tables(s, tables)
}

/// Closed form for a pair entropy after `single_detector`.
pub fn single_detector_pair_entropy(h_pair: f64, eta: f64) -> f64 {
    eta * h_pair + binary_entropy(eta)
}

/// Closed form for a pair entropy after `two_detector`.
pub fn two_detector_pair_entropy(h_pair: f64, h_first: f64, h_second: f64, eta: f64) -> f64 {
    eta * eta * h_pair + eta * (1.0 - eta) * (h_first + h_second) + 2.0 * binary_entropy(eta)
}

// ---------------------------------------------------------------------------
// Hidden-variable feasibility.

/// Decides whether the box admits a global joint distribution over all
/// observables that marginalizes to every context table, by minimizing the
/// largest marginal deviation over candidate joints (an exact LP). Exact
/// boxes are decided exactly; float boxes within `HV_FEASIBILITY_TOL`.
pub fn is_noncontextual(
    model: &MarginalModel,
) -> Result<(bool, Option<HiddenVariableCertificate>)> {
    let s = &model.scenario;
    let full_cards = member_cards(s, &s.observables);
    let assignments: usize = full_cards.iter().product();
    if assignments > ASSIGNMENT_CAP {
        return Err(Error::SizeCap(format!(
            "{assignments} global assignments exceed the feasibility cap {ASSIGNMENT_CAP}"
        )));
    }
    let exact_entry = |ctx: &BTreeSet<String>, idx: usize| -> Result<Rational> {
        Ok(match model.table_for(ctx)? {
            Table::Exact(v) => v[idx].clone(),
            Table::Float(v) => Rational::from_float(v[idx]).ok_or_else(|| {
                Error::InvalidBox("non-finite probability in float table".into())
            })?,
        })
    };

    let gname = |i: usize| format!("g{i}");
    let mut coords: Vec<String> = vec!["t".into()];
    coords.extend((0..assignments).map(gname));
    let mut sys = LinearSystem::new(coords);

    let neg_one = -Rational::one();
    for ctx in &s.maximal_contexts {
        let members = sorted_members(s, ctx);
        let keep: Vec<usize> = members
            .iter()
            .map(|m| s.index_of(m).expect("declared observable"))
            .collect();
        let entries: usize = members.iter().map(|m| s.outcome_cardinality[m]).product();
        let mut sums: Vec<LinearExpr> = vec![LinearExpr::new(); entries];
        for (src, dst) in marginal_map(&full_cards, &keep) {
            sums[dst].add_term(gname(src), Rational::one());
        }
        for (idx, sum) in sums.into_iter().enumerate() {
            let p = exact_entry(ctx, idx)?;
            // sum − p ≤ t   and   p − sum ≤ t.
            let mut upper = sum.clone();
            upper.add_term("t".to_string(), neg_one.clone());
            upper.constant -= &p;
            sys.push_inequality(upper)?;
            let mut lower = sum.scaled(&neg_one);
            lower.add_term("t".to_string(), neg_one.clone());
            lower.constant += &p;
            sys.push_inequality(lower)?;
        }
    }
    let mut total = LinearExpr::new();
    for i in 0..assignments {
        let mut nonneg = LinearExpr::new();
        nonneg.add_term(gname(i), neg_one.clone());
        sys.push_inequality(nonneg)?;
        total.add_term(gname(i), Rational::one());
    }
    total.constant = neg_one.clone();
    sys.push_equation(total)?;

    let mut objective = LinearExpr::new();
    objective.add_term("t".to_string(), Rational::one());
    let res = lp_solve(&objective, Direction::Minimize, &sys)?;
    if res.status != LPStatus::Optimal {
        return Err(Error::Internal("feasibility LP failed to solve".into()));
    }
    let slack = res.value.expect("optimal LP has a value");
    let ok = if model.is_exact() {
        slack.is_zero()
    } else {
        rational_to_f64(&slack) <= HV_FEASIBILITY_TOL
    };
    if !ok {
        return Ok((false, None));
    }
    let witness = res.witness.expect("optimal LP has a witness");
    let weights: Vec<f64> = (0..assignments)
        .map(|i| witness.get(&gname(i)).map(rational_to_f64).unwrap_or(0.0))
        .collect();
    Ok((true, Some(HiddenVariableCertificate { weights })))
}

// ---------------------------------------------------------------------------
// Random samplers.

/// Samples a noncontextual box by drawing a global joint distribution
/// uniformly from the probability simplex and marginalizing it to every
/// context.
pub fn random_noncontextual<R: Rng>(scenario: &MarginalScenario, rng: &mut R) -> Result<MarginalModel> {
    scenario.validate()?;
    let full_cards = member_cards(scenario, &scenario.observables);
    let assignments: usize = full_cards.iter().product();
    if assignments > ASSIGNMENT_CAP {
        return Err(Error::SizeCap(format!(
            "{assignments} global assignments exceed the sampling cap {ASSIGNMENT_CAP}"
        )));
    }
    // Exponential spacings give a uniform Dirichlet(1,…,1) draw.
    let mut weights: Vec<f64> = (0..assignments)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    certificate_to_box(scenario, &HiddenVariableCertificate { weights })
}

/// Materializes a certificate's marginals as a (float) box.
pub fn certificate_to_box(
    scenario: &MarginalScenario,
    certificate: &HiddenVariableCertificate,
) -> Result<MarginalModel> {
    let full_cards = member_cards(scenario, &scenario.observables);
    let mut tables = BTreeMap::new();
    for ctx in &scenario.maximal_contexts {
        let members = sorted_members(scenario, ctx);
        let keep: Vec<usize> = members
            .iter()
            .map(|m| scenario.index_of(m).expect("declared observable"))
            .collect();
        let entries: usize = members.iter().map(|m| scenario.outcome_cardinality[m]).product();
        let mut t = vec![0.0; entries];
        for (src, dst) in marginal_map(&full_cards, &keep) {
            t[dst] += certificate.weights[src];
        }
        tables.insert(scenario.subset_name(ctx), Table::Float(t));
    }
    MarginalModel::from_tables(scenario.clone(), tables)
}

/// Samples a two-outcome no-signaling CHSH box uniformly over the correlator
/// parameterization (marginal and correlator expectations in [−1,1]),
/// rejecting parameter draws that produce negative probabilities.
pub fn random_nosignaling_chsh<R: Rng>(rng: &mut R) -> MarginalModel {
    loop {
        let ma: [f64; 2] = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        let mb: [f64; 2] = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        let mut cc = [[0.0f64; 2]; 2];
        for row in cc.iter_mut() {
            for c in row.iter_mut() {
                *c = rng.gen_range(-1.0..=1.0);
            }
        }
        let entry = |a: usize, b: usize, x: usize, y: usize| -> f64 {
            let sa = if a == 0 { 1.0 } else { -1.0 };
            let sb = if b == 0 { 1.0 } else { -1.0 };
            0.25 * (1.0 + sa * ma[x] + sb * mb[y] + sa * sb * cc[x][y])
        };
        let mut ok = true;
        'check: for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        if entry(a, b, x, y) < 0.0 {
                            ok = false;
                            break 'check;
                        }
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        let s = scenario::bell(2, 2, 2).expect("valid shape");
        let mut tables = BTreeMap::new();
        for x in 0..2usize {
            for y in 0..2usize {
                let t: Vec<f64> = (0..4).map(|i| entry(i / 2, i % 2, x, y)).collect();
                tables.insert(format!("A{x},B{y}"), Table::Float(t));
            }
        }
        return MarginalModel::from_tables(s, tables).expect("construction is valid");
    }
}

/// Samples a two-independent-source tripartite box: finite hidden variables
/// λ₁, λ₂ with independent random distributions, deterministic responses
/// a(x|λ₁), b(λ₁,λ₂), c(z|λ₂).
pub fn random_bilocal<R: Rng>(rng: &mut R) -> MarginalModel {
    const L: usize = 4;
    let simplex = |rng: &mut R| -> Vec<f64> {
        let mut w: Vec<f64> = (0..L).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let t: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= t);
        w
    };
    let p1 = simplex(rng);
    let p2 = simplex(rng);
    let a_resp: Vec<[usize; 2]> = (0..L).map(|_| [rng.gen_range(0..2), rng.gen_range(0..2)]).collect();
    let c_resp: Vec<[usize; 2]> = (0..L).map(|_| [rng.gen_range(0..2), rng.gen_range(0..2)]).collect();
    let mut b_resp = vec![[0usize; L]; L];
    for row in b_resp.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.gen_range(0..2);
        }
    }
    let s = scenario::bilocality();
    let mut tables = BTreeMap::new();
    for x in 0..2usize {
        for z in 0..2usize {
            let mut t = vec![0.0; 8];
            for (l1, w1) in p1.iter().enumerate() {
                for (l2, w2) in p2.iter().enumerate() {
                    let a = a_resp[l1][x];
                    let b = b_resp[l1][l2];
                    let c = c_resp[l2][z];
                    t[a * 4 + b * 2 + c] += w1 * w2;
                }
            }
            tables.insert(format!("A{x},B,C{z}"), Table::Float(t));
        }
    }
    MarginalModel::from_tables(s, tables).expect("construction is valid")
}

/// Reindexes the CHSH scenario onto the 4-cycle X1=A0, X2=B0, X3=A1, X4=B1,
/// so that the distinguished edge i=3 reproduces the entropic CHSH value.
pub fn chsh_to_cycle(model: &MarginalModel) -> Result<MarginalModel> {
    if !is_chsh_shape(&model.scenario) {
        return Err(Error::Shape("cycle reindexing needs the A0,A1 × B0,B1 scenario".into()));
    }
    let float = !model.is_exact();
    let mut s = scenario::ncycle(4)?;
    let names = ["A0", "B0", "A1", "B1"];
    for (i, n) in names.iter().enumerate() {
        let card = model.scenario.outcome_cardinality[*n];
        *s.outcome_cardinality.get_mut(&format!("X{}", i + 1)).expect("cycle observable") = card;
    }
    // Cycle edges and their CHSH pre-images: (X1,X2)=(A0,B0), (X2,X3)=(B0,A1)
    // transposed from (A1,B0), (X3,X4)=(A1,B1), (X1,X4)=(A0,B1).
    let edges: [(usize, usize, usize, usize, bool); 4] = [
        (1, 2, 0, 0, false),
        (2, 3, 1, 0, true),
        (3, 4, 1, 1, false),
        (1, 4, 0, 1, false),
    ];
    let mut tables = BTreeMap::new();
    for (u, v, x, y, transpose) in edges {
        let ctx = pair_set(&format!("A{x}"), &format!("B{y}"));
        let da = model.scenario.outcome_cardinality[&format!("A{x}")];
        let db = model.scenario.outcome_cardinality[&format!("B{y}")];
        let name = s.subset_name(&pair_set(&format!("X{u}"), &format!("X{v}")));
        if float {
            let src = model.table_f64(&ctx)?;
            let mut t = vec![0.0; da * db];
            for a in 0..da {
                for b in 0..db {
                    let dst = if transpose { b * da + a } else { a * db + b };
                    t[dst] = src[a * db + b];
                }
            }
            tables.insert(name, Table::Float(t));
        } else {
            let src = model.marginal_exact(&ctx)?;
            let mut t = vec![Rational::zero(); da * db];
            for a in 0..da {
                for b in 0..db {
                    let dst = if transpose { b * da + a } else { a * db + b };
                    t[dst] = src[a * db + b].clone();
                }
            }
            tables.insert(name, Table::Exact(t));
        }
    }
    MarginalModel::from_tables(s, tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TIGHT: f64 = 1e-12;

    #[test]
    fn named_boxes_validate_and_score_chsh() {
        assert_eq!(chsh(&pr()).unwrap(), 4.0);
        assert_eq!(chsh(&classical()).unwrap(), 2.0);
        assert_eq!(chsh(&white()).unwrap(), 0.0);
        assert!((chsh(&pmax()).unwrap() - 3.0).abs() < TIGHT);
        assert!((chsh(&isotropic(&rat(4, 5)).unwrap()).unwrap() - 3.2).abs() < TIGHT);
        assert!(isotropic(&rat(6, 5)).is_err());
        assert!(triangle(&rat(1, 2), &rat(2, 3)).is_err());
    }

    #[test]
    fn entropic_chsh_landmarks() {
        assert!((chsh_entropic(&pmax()).unwrap() - 1.0).abs() < TIGHT);
        assert!(chsh_entropic(&pr()).unwrap().abs() < TIGHT);
        assert!(chsh_entropic(&classical()).unwrap().abs() < TIGHT);
        // Closed form 2(1 − h((1+C)/2)) − 2 on a few parameters.
        for c in [0.0, 0.3, 0.9, 1.0] {
            let m = isotropic(&Rational::from_float(c).unwrap()).unwrap();
            let want = 2.0 * (1.0 - binary_entropy((1.0 + c) / 2.0)) - 2.0;
            assert!((chsh_entropic(&m).unwrap() - want).abs() < 1e-9, "C={c}");
        }
    }

    #[test]
    fn dfamily_entropic_value_is_binary_entropy_of_weight() {
        for d in [2usize, 3, 5] {
            let m = dfamily(&rat(3, 10), d).unwrap();
            assert!((chsh_entropic(&m).unwrap() - binary_entropy(0.3)).abs() < 1e-9);
        }
    }

    #[test]
    fn entropy_vector_landmarks() {
        let ev = white().entropy_vector().unwrap();
        assert!((ev.get("A0,B0").unwrap() - 2.0).abs() < TIGHT);
        assert!((ev.get("A0").unwrap() - 1.0).abs() < TIGHT);
        // A deterministic box has all entropies zero.
        let s = scenario::bell(2, 2, 2).unwrap();
        let mut tables = BTreeMap::new();
        for x in 0..2 {
            for y in 0..2 {
                let mut t = vec![Rational::zero(); 4];
                t[0] = Rational::one();
                tables.insert(format!("A{x},B{y}"), Table::Exact(t));
            }
        }
        let det = MarginalModel::from_tables(s, tables).unwrap();
        assert!(det.entropy_vector().unwrap().values.values().all(|h| *h == 0.0));
    }

    #[test]
    fn sheaf_violation_is_rejected() {
        let mut bad = pr();
        // Skew one table's A0 marginal.
        bad.tables.insert(
            "A0,B0".into(),
            Table::Exact(vec![rat(3, 4), Rational::zero(), Rational::zero(), rat(1, 4)]),
        );
        assert!(matches!(bad.validate(), Err(Error::InvalidBox(_))));
    }

    #[test]
    fn cycle_reindexing_preserves_entropic_chsh() {
        for m in [pmax(), pr(), isotropic(&rat(1, 2)).unwrap()] {
            let cyc = chsh_to_cycle(&m).unwrap();
            let want = chsh_entropic(&m).unwrap();
            let got = ncycle_entropic(&cyc, 3).unwrap();
            assert!((got - want).abs() < TIGHT);
        }
    }

    #[test]
    fn pentagon_correlator_on_deterministic_box() {
        let s = scenario::ncycle(5).unwrap();
        let mut tables = BTreeMap::new();
        for c in &s.maximal_contexts {
            let mut t = vec![Rational::zero(); 4];
            t[0] = Rational::one();
            tables.insert(s.subset_name(c), Table::Exact(t));
        }
        let det = MarginalModel::from_tables(s, tables).unwrap();
        assert_eq!(klyachko_k5(&det).unwrap(), 5.0);
        assert!(ncycle_entropic(&det, 1).unwrap() <= 0.0);
    }

    #[test]
    fn two_source_family_landmarks() {
        let m = nb(&rat(1, 20), &rat(1, 20)).unwrap();
        assert_eq!(binosig_residual(&m).unwrap(), 0.0);
        assert!(check_bilocal_marginal(&m).unwrap());
        let r7 = bilocal_row(&m, 7).unwrap();
        assert!(r7 > 0.04 && r7 < 0.055, "row 7 = {r7}");
        // A fully correlated tripartite box does not factorize on A–C.
        let s = scenario::bilocality();
        let mut tables = BTreeMap::new();
        for c in &s.maximal_contexts {
            let mut t = vec![Rational::zero(); 8];
            t[0] = rat(1, 2);
            t[7] = rat(1, 2);
            tables.insert(s.subset_name(c), Table::Exact(t));
        }
        let ghz = MarginalModel::from_tables(s, tables).unwrap();
        assert!(!check_bilocal_marginal(&ghz).unwrap());
        // Row 7 of the coefficient table spells the documented inequality.
        let row7 = bilocal_row_inequality(7).unwrap();
        let want = EntropicInequality::from_named_terms([
            ("A0", 1),
            ("C0", 1),
            ("A0,B,C1", -1),
            ("A1,B,C0", -1),
            ("A1,B,C1", 1),
        ])
        .unwrap();
        assert_eq!(row7, want);
    }

    #[test]
    fn detector_transforms_match_closed_forms() {
        let m = isotropic(&rat(9, 10)).unwrap();
        let ctx = pair_set("A0", "B0");
        let base = shannon_entropy(&m.marginal(&ctx).unwrap());
        let ha = shannon_entropy(&m.marginal(&["A0".to_string()].into_iter().collect()).unwrap());
        let hb = shannon_entropy(&m.marginal(&["B0".to_string()].into_iter().collect()).unwrap());
        for eta in [0.0, 0.3, 0.77, 1.0] {
            let single = single_detector(&m, eta).unwrap();
            let hs = shannon_entropy(&single.marginal(&ctx).unwrap());
            assert!((hs - single_detector_pair_entropy(base, eta)).abs() < TIGHT);
            let two = two_detector(&m, eta).unwrap();
            let ht = shannon_entropy(&two.marginal(&ctx).unwrap());
            assert!((ht - two_detector_pair_entropy(base, ha, hb, eta)).abs() < TIGHT);
            // Both transforms share the single-observable marginals.
            let sa = single.marginal(&["A0".to_string()].into_iter().collect()).unwrap();
            let ta = two.marginal(&["A0".to_string()].into_iter().collect()).unwrap();
            for (p, q) in sa.iter().zip(ta.iter()) {
                assert!((p - q).abs() < TIGHT);
            }
        }
        // η = 1 is the identity on the original outcomes (new table is 3×3
        // with the no-click row and column at zero).
        let id = single_detector(&m, 1.0).unwrap();
        let got = id.marginal(&ctx).unwrap();
        let want = m.marginal(&ctx).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((got[a * 3 + b] - want[a * 2 + b]).abs() < TIGHT);
            }
        }
        assert!(got[8].abs() < TIGHT);
    }

    #[test]
    fn single_detector_scales_cycle_value_linearly() {
        let s = scenario::ncycle(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_noncontextual(&s, &mut rng).unwrap();
        let base = ncycle_entropic(&m, 2).unwrap();
        for eta in [0.2, 0.6, 0.95] {
            let t = single_detector(&m, eta).unwrap();
            assert!((ncycle_entropic(&t, 2).unwrap() - eta * base).abs() < TIGHT);
        }
    }

    #[test]
    fn feasibility_lp_separates_boxes() {
        let (ok, cert) = is_noncontextual(&classical()).unwrap();
        assert!(ok);
        assert!(cert.unwrap().marginal_residual(&classical()).unwrap() <= 1e-9);
        assert!(!is_noncontextual(&pr()).unwrap().0);
        assert!(!is_noncontextual(&pmax()).unwrap().0);
        assert!(is_noncontextual(&white()).unwrap().0);
    }

    #[test]
    fn random_noncontextual_boxes_stay_inside_the_classical_region() {
        let s = scenario::bell(2, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = random_noncontextual(&s, &mut rng).unwrap();
            assert!(chsh_entropic(&m).unwrap() <= 1e-9);
            assert!(chsh(&m).unwrap() <= 2.0 + 1e-9);
            assert!(is_noncontextual(&m).unwrap().0);
        }
    }

    #[test]
    fn random_nosignaling_boxes_respect_the_entropic_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = random_nosignaling_chsh(&mut rng);
            assert!(chsh_entropic(&m).unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn random_bilocal_boxes_satisfy_all_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..25 {
            let m = random_bilocal(&mut rng);
            assert!(check_bilocal_marginal(&m).unwrap());
            for k in 1..=10 {
                assert!(bilocal_row(&m, k).unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn json_roundtrip_preserves_exact_tables() {
        let m = pmax();
        let v = m.to_json();
        let back = MarginalModel::from_json(&v).unwrap();
        assert_eq!(m, back);
        assert!(back.is_exact());
        // Sparse decimal-string input with omitted zeros.
        let j = serde_json::json!({
            "scenario": scenario::bell(2, 2, 2).unwrap().to_json(),
            "tables": {
                "A0,B0": {"0,0": "0.5", "1,1": "0.5"},
                "A0,B1": {"0,0": "0.5", "1,1": "0.5"},
                "A1,B0": {"0,0": "0.5", "1,1": "0.5"},
                "A1,B1": {"0,1": "0.5", "1,0": "0.5"},
            },
        });
        let prbox = MarginalModel::from_json(&j).unwrap();
        assert_eq!(prbox, pr());
    }

    #[test]
    fn outcome_relabeling_keeps_entropies() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = scenario::ncycle(3).unwrap();
        let m = random_noncontextual(&s, &mut rng).unwrap();
        // Flip the outcome labels of X1 in both contexts that contain it.
        let mut flipped = m.clone();
        for ctx in &m.scenario.maximal_contexts {
            if !ctx.contains("X1") {
                continue;
            }
            let name = m.scenario.subset_name(ctx);
            let members = sorted_members(&m.scenario, ctx);
            let pos = members.iter().position(|o| o == "X1").unwrap();
            let cards = member_cards(&m.scenario, &members);
            let src = m.table_f64(ctx).unwrap();
            let mut dst = vec![0.0; src.len()];
            for (i, p) in src.iter().enumerate() {
                let mut t = tuple_of(i, &cards);
                t[pos] = 1 - t[pos];
                dst[flat_index(&t, &cards)] = *p;
            }
            flipped.tables.insert(name, Table::Float(dst));
        }
        flipped.validate().unwrap();
        let a = m.entropy_vector().unwrap();
        let b = flipped.entropy_vector().unwrap();
        for (k, v) in &a.values {
            assert!((v - b.get(k).unwrap()).abs() < TIGHT, "H({k})");
        }
    }
}
