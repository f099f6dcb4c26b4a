//! Marginal scenarios: which observables exist, which subsets of them are
//! jointly measurable (contexts), how many outcomes each has, and which
//! groups of observables are assumed mutually independent.
//!
//! A scenario is stored by its *maximal* contexts; the full context family
//! is their downward closure, so down-closure holds by construction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A marginal scenario.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginalScenario {
    /// Ordered observable names; this order fixes coordinate and table
    /// orderings everywhere downstream.
    pub observables: Vec<String>,
    /// Antichain of maximal jointly measurable subsets.
    pub maximal_contexts: Vec<BTreeSet<String>>,
    pub outcome_cardinality: BTreeMap<String, usize>,
    /// Pairs of disjoint observable sets asserted mutually independent.
    pub independences: Vec<(BTreeSet<String>, BTreeSet<String>)>,
}

impl MarginalScenario {
    pub fn validate(&self) -> Result<()> {
        let all: BTreeSet<&str> = self.observables.iter().map(String::as_str).collect();
        if all.len() != self.observables.len() {
            return Err(Error::Shape("duplicate observable names".into()));
        }
        for ctx in &self.maximal_contexts {
            if ctx.is_empty() {
                return Err(Error::Shape("empty maximal context".into()));
            }
            for o in ctx {
                if !all.contains(o.as_str()) {
                    return Err(Error::Shape(format!("context uses unknown observable `{o}`")));
                }
            }
        }
        for o in &self.observables {
            if !self.maximal_contexts.iter().any(|c| c.contains(o)) {
                return Err(Error::Shape(format!("observable `{o}` appears in no context")));
            }
            match self.outcome_cardinality.get(o) {
                Some(k) if *k >= 2 => {}
                Some(k) => {
                    return Err(Error::Shape(format!(
                        "observable `{o}` has outcome cardinality {k}, need ≥ 2"
                    )))
                }
                None => {
                    return Err(Error::Shape(format!(
                        "observable `{o}` has no outcome cardinality"
                    )))
                }
            }
        }
        for (s, t) in &self.independences {
            if s.is_empty() || t.is_empty() {
                return Err(Error::Shape("independence pair with empty side".into()));
            }
            if s.intersection(t).next().is_some() {
                return Err(Error::Shape("independence pair is not disjoint".into()));
            }
            for o in s.iter().chain(t.iter()) {
                if !all.contains(o.as_str()) {
                    return Err(Error::Shape(format!(
                        "independence uses unknown observable `{o}`"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.observables.iter().position(|o| o == name)
    }

    /// True when `subset` is jointly measurable, i.e. contained in some
    /// maximal context.
    pub fn is_context(&self, subset: &BTreeSet<String>) -> bool {
        !subset.is_empty() && self.maximal_contexts.iter().any(|c| subset.is_subset(c))
    }

    /// Every nonempty context, i.e. the downward closure of the maximal
    /// contexts, in deterministic (size, observable-order) order.
    pub fn contexts(&self) -> Vec<BTreeSet<String>> {
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for ctx in &self.maximal_contexts {
            let idx: Vec<usize> =
                ctx.iter().map(|o| self.index_of(o).expect("validated")).collect();
            let m = idx.len();
            for mask in 1u32..(1 << m) {
                let mut sub: Vec<usize> = Vec::new();
                for (j, &i) in idx.iter().enumerate() {
                    if mask & (1 << j) != 0 {
                        sub.push(i);
                    }
                }
                sub.sort_unstable();
                seen.insert(sub);
            }
        }
        let mut list: Vec<Vec<usize>> = seen.into_iter().collect();
        list.sort_by_key(|s| (s.len(), s.clone()));
        list.into_iter()
            .map(|s| s.into_iter().map(|i| self.observables[i].clone()).collect())
            .collect()
    }

    /// Canonical coordinate name of a subset: members joined by commas in
    /// observable order (`"A0,B,C1"`).
    pub fn subset_name(&self, subset: &BTreeSet<String>) -> String {
        let mut idx: Vec<usize> = subset
            .iter()
            .map(|o| self.index_of(o).expect("subset uses declared observables"))
            .collect();
        idx.sort_unstable();
        idx.iter().map(|&i| self.observables[i].as_str()).collect::<Vec<_>>().join(",")
    }

    /// Sort key ordering subsets by (size, observable indices).
    pub fn subset_sort_key(&self, subset: &BTreeSet<String>) -> (usize, Vec<usize>) {
        let mut idx: Vec<usize> = subset
            .iter()
            .map(|o| self.index_of(o).expect("subset uses declared observables"))
            .collect();
        idx.sort_unstable();
        (idx.len(), idx)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ScenarioJson::from(self)).expect("scenario serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<MarginalScenario> {
        let raw: ScenarioJson = serde_json::from_value(v.clone())?;
        let s = raw.into_scenario();
        s.validate()?;
        Ok(s)
    }
}

/// Serialized scenario layout. Cardinalities default to 2 when omitted;
/// non-maximal contexts in the input are absorbed into the closure.
#[derive(Serialize, Deserialize)]
struct ScenarioJson {
    observables: Vec<String>,
    maximal_contexts: Vec<Vec<String>>,
    #[serde(default)]
    cardinalities: BTreeMap<String, usize>,
    #[serde(default)]
    independences: Vec<[Vec<String>; 2]>,
}

impl From<&MarginalScenario> for ScenarioJson {
    fn from(s: &MarginalScenario) -> Self {
        ScenarioJson {
            observables: s.observables.clone(),
            maximal_contexts: s
                .maximal_contexts
                .iter()
                .map(|c| {
                    let mut v: Vec<String> = c.iter().cloned().collect();
                    v.sort_by_key(|o| s.index_of(o));
                    v
                })
                .collect(),
            cardinalities: s.outcome_cardinality.clone(),
            independences: s
                .independences
                .iter()
                .map(|(a, b)| {
                    [a.iter().cloned().collect::<Vec<_>>(), b.iter().cloned().collect()]
                })
                .collect(),
        }
    }
}

impl ScenarioJson {
    fn into_scenario(self) -> MarginalScenario {
        let mut contexts: Vec<BTreeSet<String>> = self
            .maximal_contexts
            .into_iter()
            .map(|c| c.into_iter().collect::<BTreeSet<_>>())
            .collect();
        // Keep only maximal members, first occurrence order.
        let mut maximal: Vec<BTreeSet<String>> = Vec::new();
        for c in contexts.drain(..) {
            if maximal.iter().any(|m| c.is_subset(m)) {
                continue;
            }
            maximal.retain(|m| !m.is_subset(&c));
            maximal.push(c);
        }
        let mut cards = self.cardinalities;
        for o in &self.observables {
            cards.entry(o.clone()).or_insert(2);
        }
        MarginalScenario {
            observables: self.observables,
            maximal_contexts: maximal,
            outcome_cardinality: cards,
            independences: self
                .independences
                .into_iter()
                .map(|[a, b]| (a.into_iter().collect(), b.into_iter().collect()))
                .collect(),
        }
    }
}

/// The `n`-cycle scenario: observables `X1..Xn`, binary outcomes, maximal
/// contexts `{Xi, Xi+1}` cyclically.
pub fn ncycle(n: usize) -> Result<MarginalScenario> {
    if n < 3 {
        return Err(Error::Domain(format!("cycle needs at least 3 observables, got {n}")));
    }
    let observables: Vec<String> = (1..=n).map(|i| format!("X{i}")).collect();
    let maximal_contexts = (0..n)
        .map(|i| {
            [observables[i].clone(), observables[(i + 1) % n].clone()]
                .into_iter()
                .collect::<BTreeSet<_>>()
        })
        .collect();
    let outcome_cardinality =
        observables.iter().map(|o| (o.clone(), 2usize)).collect();
    let s = MarginalScenario {
        observables,
        maximal_contexts,
        outcome_cardinality,
        independences: Vec::new(),
    };
    s.validate()?;
    Ok(s)
}

/// A Bell scenario: `parties` parties with `settings` observables each and
/// `outcomes` outcomes per observable. Observables of one party are never
/// jointly measurable; one observable per party always is.
pub fn bell(parties: usize, settings: usize, outcomes: usize) -> Result<MarginalScenario> {
    if parties < 1 || settings < 2 || outcomes < 2 {
        return Err(Error::Domain(format!(
            "need parties ≥ 1, settings ≥ 2, outcomes ≥ 2; got ({parties},{settings},{outcomes})"
        )));
    }
    if parties > 26 {
        return Err(Error::Domain("at most 26 parties supported".into()));
    }
    let mut observables = Vec::new();
    for p in 0..parties {
        let letter = (b'A' + p as u8) as char;
        for s in 0..settings {
            observables.push(format!("{letter}{s}"));
        }
    }
    let mut maximal_contexts = Vec::new();
    let mut choice = vec![0usize; parties];
    loop {
        let ctx: BTreeSet<String> = (0..parties)
            .map(|p| observables[p * settings + choice[p]].clone())
            .collect();
        maximal_contexts.push(ctx);
        let mut p = parties;
        loop {
            if p == 0 {
                break;
            }
            p -= 1;
            choice[p] += 1;
            if choice[p] < settings {
                break;
            }
            choice[p] = 0;
            if p == 0 {
                p = usize::MAX;
                break;
            }
        }
        if p == usize::MAX {
            break;
        }
    }
    let outcome_cardinality = observables.iter().map(|o| (o.clone(), outcomes)).collect();
    let s = MarginalScenario {
        observables,
        maximal_contexts,
        outcome_cardinality,
        independences: Vec::new(),
    };
    s.validate()?;
    Ok(s)
}

/// The two-source swap scenario: observables `A0, A1, B, C0, C1`, maximal
/// contexts `{Ax, B, Cz}`, and the independence assumption that the `A`-side
/// observables are jointly independent of the `C`-side ones.
pub fn bilocality() -> MarginalScenario {
    let observables: Vec<String> =
        ["A0", "A1", "B", "C0", "C1"].iter().map(|s| s.to_string()).collect();
    let mut maximal_contexts = Vec::new();
    for x in 0..2 {
        for z in 0..2 {
            maximal_contexts.push(
                [format!("A{x}"), "B".to_string(), format!("C{z}")]
                    .into_iter()
                    .collect::<BTreeSet<_>>(),
            );
        }
    }
    let outcome_cardinality = observables.iter().map(|o| (o.clone(), 2usize)).collect();
    MarginalScenario {
        observables,
        maximal_contexts,
        outcome_cardinality,
        independences: vec![(
            ["A0".to_string(), "A1".to_string()].into_iter().collect(),
            ["C0".to_string(), "C1".to_string()].into_iter().collect(),
        )],
    }
}

/// A group of observable permutations preserving the scenario structure.
/// Each element maps observable index `i` to `perm[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryGroup {
    pub elements: Vec<Vec<usize>>,
}

impl SymmetryGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Image of a subset of observables under one group element.
    pub fn map_subset(
        &self,
        element: &[usize],
        subset: &BTreeSet<String>,
        scenario: &MarginalScenario,
    ) -> BTreeSet<String> {
        subset
            .iter()
            .map(|o| {
                let i = scenario.index_of(o).expect("subset uses declared observables");
                scenario.observables[element[i]].clone()
            })
            .collect()
    }
}

/// Enumerates the full group of observable permutations that map contexts to
/// contexts, preserve outcome cardinalities, and preserve the independence
/// structure. Brute force over all permutations; intended for small `n`.
pub fn symmetries(scenario: &MarginalScenario) -> Result<SymmetryGroup> {
    let n = scenario.observables.len();
    if n > 8 {
        return Err(Error::SizeCap(format!(
            "symmetry search enumerates {n}! permutations; supported for ≤ 8 observables"
        )));
    }
    let ctx_set: BTreeSet<BTreeSet<usize>> = scenario
        .maximal_contexts
        .iter()
        .map(|c| c.iter().map(|o| scenario.index_of(o).expect("validated")).collect())
        .collect();
    let indep_set: BTreeSet<BTreeSet<BTreeSet<usize>>> = scenario
        .independences
        .iter()
        .map(|(a, b)| {
            let a: BTreeSet<usize> =
                a.iter().map(|o| scenario.index_of(o).expect("validated")).collect();
            let b: BTreeSet<usize> =
                b.iter().map(|o| scenario.index_of(o).expect("validated")).collect();
            [a, b].into_iter().collect()
        })
        .collect();
    let card: Vec<usize> = scenario
        .observables
        .iter()
        .map(|o| scenario.outcome_cardinality[o])
        .collect();

    let mut elements = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |p: &[usize]| {
        if (0..n).any(|i| card[i] != card[p[i]]) {
            return;
        }
        let mapped_ctx: BTreeSet<BTreeSet<usize>> = ctx_set
            .iter()
            .map(|c| c.iter().map(|&i| p[i]).collect())
            .collect();
        if mapped_ctx != ctx_set {
            return;
        }
        let mapped_indep: BTreeSet<BTreeSet<BTreeSet<usize>>> = indep_set
            .iter()
            .map(|pair| {
                pair.iter()
                    .map(|side| side.iter().map(|&i| p[i]).collect::<BTreeSet<usize>>())
                    .collect()
            })
            .collect();
        if mapped_indep != indep_set {
            return;
        }
        elements.push(p.to_vec());
    });
    elements.sort();
    Ok(SymmetryGroup { elements })
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ncycle_has_cyclic_pair_contexts() {
        let s = ncycle(3).unwrap();
        assert_eq!(s.observables, vec!["X1", "X2", "X3"]);
        let want: BTreeSet<BTreeSet<String>> = [
            ["X1", "X2"],
            ["X2", "X3"],
            ["X1", "X3"],
        ]
        .iter()
        .map(|c| c.iter().map(|s| s.to_string()).collect())
        .collect();
        let got: BTreeSet<BTreeSet<String>> = s.maximal_contexts.iter().cloned().collect();
        assert_eq!(got, want);
        assert!(ncycle(2).is_err());
    }

    #[test]
    fn ncycle5_contexts_count() {
        let s = ncycle(5).unwrap();
        assert_eq!(s.maximal_contexts.len(), 5);
        // 5 singletons + 5 edges.
        assert_eq!(s.contexts().len(), 10);
    }

    #[test]
    fn bell_2222_matches_ncycle4_structure() {
        let b = bell(2, 2, 2).unwrap();
        assert_eq!(b.observables, vec!["A0", "A1", "B0", "B1"]);
        assert_eq!(b.maximal_contexts.len(), 4);
        // Explicit bijection A0→X1, B0→X2, A1→X3, B1→X4 maps the context
        // family of bell(2,2,2) onto the 4-cycle's.
        let c = ncycle(4).unwrap();
        let rename = |o: &str| match o {
            "A0" => "X1",
            "B0" => "X2",
            "A1" => "X3",
            "B1" => "X4",
            _ => unreachable!(),
        };
        let mapped: BTreeSet<BTreeSet<String>> = b
            .maximal_contexts
            .iter()
            .map(|ctx| ctx.iter().map(|o| rename(o).to_string()).collect())
            .collect();
        let cycle: BTreeSet<BTreeSet<String>> = c.maximal_contexts.iter().cloned().collect();
        assert_eq!(mapped, cycle);
    }

    #[test]
    fn bell_generates_product_contexts() {
        let b = bell(3, 2, 2).unwrap();
        assert_eq!(b.observables.len(), 6);
        assert_eq!(b.maximal_contexts.len(), 8);
        assert!(b.maximal_contexts.iter().all(|c| c.len() == 3));
        let d = bell(2, 2, 4).unwrap();
        assert!(d.outcome_cardinality.values().all(|&k| k == 4));
    }

    #[test]
    fn bilocality_counts_and_independence() {
        let s = bilocality();
        s.validate().unwrap();
        assert_eq!(s.maximal_contexts.len(), 4);
        // 5 singletons + 8 pairs + 4 triples.
        let ctxs = s.contexts();
        assert_eq!(ctxs.len(), 17);
        assert_eq!(ctxs.iter().filter(|c| c.len() == 1).count(), 5);
        assert_eq!(ctxs.iter().filter(|c| c.len() == 2).count(), 8);
        assert_eq!(ctxs.iter().filter(|c| c.len() == 3).count(), 4);
        assert_eq!(s.independences.len(), 1);
        // {A0, C1} is a context; {A0, A1} is not.
        let ac: BTreeSet<String> = ["A0".into(), "C1".into()].into_iter().collect();
        assert!(s.is_context(&ac));
        let aa: BTreeSet<String> = ["A0".into(), "A1".into()].into_iter().collect();
        assert!(!s.is_context(&aa));
    }

    #[test]
    fn symmetry_groups_have_expected_orders() {
        assert_eq!(symmetries(&ncycle(5).unwrap()).unwrap().order(), 10);
        assert_eq!(symmetries(&ncycle(4).unwrap()).unwrap().order(), 8);
        assert_eq!(symmetries(&bilocality()).unwrap().order(), 8);
    }

    #[test]
    fn symmetry_group_is_closed_and_contains_identity() {
        let s = bilocality();
        let g = symmetries(&s).unwrap();
        let n = s.observables.len();
        let id: Vec<usize> = (0..n).collect();
        assert!(g.elements.contains(&id));
        for a in &g.elements {
            // Inverse present.
            let mut inv = vec![0usize; n];
            for i in 0..n {
                inv[a[i]] = i;
            }
            assert!(g.elements.contains(&inv));
            for b in &g.elements {
                let composed: Vec<usize> = (0..n).map(|i| a[b[i]]).collect();
                assert!(g.elements.contains(&composed));
            }
        }
    }

    #[test]
    fn json_roundtrip_preserves_scenario() {
        let s = bilocality();
        let v = s.to_json();
        let back = MarginalScenario::from_json(&v).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn json_load_absorbs_non_maximal_contexts() {
        let v = serde_json::json!({
            "observables": ["X1", "X2", "X3"],
            "maximal_contexts": [["X1"], ["X1", "X2"], ["X2", "X3"], ["X1", "X3"]],
        });
        let s = MarginalScenario::from_json(&v).unwrap();
        assert_eq!(s.maximal_contexts.len(), 3);
        assert!(s.outcome_cardinality.values().all(|&k| k == 2));
    }

    #[test]
    fn subset_names_follow_observable_order() {
        let s = bilocality();
        let sub: BTreeSet<String> = ["C0".into(), "A1".into(), "B".into()].into_iter().collect();
        assert_eq!(s.subset_name(&sub), "A1,B,C0");
        assert_eq!(s.subset_sort_key(&sub), (3, vec![1, 2, 3]));
    }
}
