//! Two-copy wirings of bipartite two-setting boxes, the minimal
//! nonlocal-content decomposition (an exact linear program over local
//! deterministic strategies), and grid scans over box families.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::boxworld::{self, MarginalModel, Table};
use crate::entcone::rational_to_f64;
use crate::exactgeom::{solve_standard, Rational, Rel, StandardLp, StdOutcome};
use crate::scenario;
use crate::{Error, Result};

/// Reconstruction residual allowed for a nonlocal-content decomposition.
pub const DECOMPOSITION_TOL: f64 = 1e-9;
/// Largest number of local deterministic strategies the content LP accepts.
pub const DETERMINISTIC_CAP: usize = 10_000;

/// One party's half of a two-copy wiring over a `settings`-setting,
/// `outcomes`-outcome box: the first copy receives `f1[x]`, the second
/// `f2[x][a1]`, and the final outcome is `g[x][a1][a2]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartyWiring {
    pub settings: usize,
    pub outcomes: usize,
    pub f1: Vec<usize>,
    pub f2: Vec<Vec<usize>>,
    pub g: Vec<Vec<Vec<usize>>>,
}

impl PartyWiring {
    pub fn validate(&self) -> Result<()> {
        let (s, d) = (self.settings, self.outcomes);
        let shape_err = |what: &str| Error::Shape(format!("wiring map {what} has wrong shape"));
        if self.f1.len() != s {
            return Err(shape_err("f1"));
        }
        if self.f2.len() != s || self.f2.iter().any(|row| row.len() != d) {
            return Err(shape_err("f2"));
        }
        if self.g.len() != s
            || self.g.iter().any(|m| m.len() != d || m.iter().any(|row| row.len() != d))
        {
            return Err(shape_err("g"));
        }
        if self.f1.iter().any(|&x| x >= s) || self.f2.iter().flatten().any(|&x| x >= s) {
            return Err(Error::Domain("wiring maps a setting out of range".into()));
        }
        if self.g.iter().flatten().flatten().any(|&a| a >= d) {
            return Err(Error::Domain("wiring maps an outcome out of range".into()));
        }
        Ok(())
    }
}

/// A two-copy wiring: both copies of a bipartite box are consumed locally,
/// each party feeding its second copy based on its first outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wiring {
    pub a: PartyWiring,
    pub b: PartyWiring,
}

impl Wiring {
    pub fn validate(&self) -> Result<()> {
        self.a.validate()?;
        self.b.validate()?;
        if self.a.settings != self.b.settings || self.a.outcomes != self.b.outcomes {
            return Err(Error::Shape("party wirings disagree on alphabets".into()));
        }
        Ok(())
    }
}

fn party_from_closures(
    settings: usize,
    outcomes: usize,
    f1: impl Fn(usize) -> usize,
    f2: impl Fn(usize, usize) -> usize,
    g: impl Fn(usize, usize, usize) -> usize,
) -> PartyWiring {
    PartyWiring {
        settings,
        outcomes,
        f1: (0..settings).map(&f1).collect(),
        f2: (0..settings).map(|x| (0..outcomes).map(|a1| f2(x, a1)).collect()).collect(),
        g: (0..settings)
            .map(|x| {
                (0..outcomes)
                    .map(|a1| (0..outcomes).map(|a2| g(x, a1, a2)).collect())
                    .collect()
            })
            .collect(),
    }
}

/// Both copies get the original input; the final outcome is the XOR of the
/// two copy outcomes. Symmetric between the parties.
pub fn foster_wiring() -> Wiring {
    let party = party_from_closures(2, 2, |x| x, |x, _| x, |_, a1, a2| a1 ^ a2);
    Wiring { a: party.clone(), b: party }
}

/// The asymmetric two-copy wiring: the first party re-inputs x ⊕ a₁ ⊕ 1 into
/// its second copy, the second party queries its first copy at 1 and its
/// second at y·b₁; both negate the XOR of their copy outcomes.
pub fn cavalcanti_wiring() -> Wiring {
    Wiring {
        a: party_from_closures(2, 2, |x| x, |x, a1| x ^ a1 ^ 1, |_, a1, a2| a1 ^ a2 ^ 1),
        b: party_from_closures(2, 2, |_| 1, |y, b1| y * b1, |_, b1, b2| b1 ^ b2 ^ 1),
    }
}

/// d-outcome wiring: second input is x·a₁ mod 2, final outcome a₁+a₂ mod d.
/// Symmetric between the parties.
pub fn generalized_wiring(d: usize) -> Result<Wiring> {
    if d < 2 {
        return Err(Error::Domain(format!("outcome alphabet must have d ≥ 2, got {d}")));
    }
    let party =
        party_from_closures(2, d, |x| x, |x, a1| (x * a1) % 2, |_, a1, a2| (a1 + a2) % d);
    Ok(Wiring { a: party.clone(), b: party })
}

/// Looks up a wiring by name: `foster`, `cavalcanti`, or `generalized:D`.
pub fn wiring_library(name: &str) -> Result<Wiring> {
    match name {
        "foster" => Ok(foster_wiring()),
        "cavalcanti" => Ok(cavalcanti_wiring()),
        _ => {
            if let Some(d) = name.strip_prefix("generalized:") {
                let d: usize = d
                    .parse()
                    .map_err(|_| Error::Domain(format!("bad outcome count in `{name}`")))?;
                generalized_wiring(d)
            } else {
                Err(Error::Domain(format!("unknown wiring `{name}`")))
            }
        }
    }
}

/// Some(d) iff the model is a two-setting bipartite box with d outcomes per
/// observable (the shape wirings and the content LP operate on).
pub fn bipartite_outcomes(model: &MarginalModel) -> Option<usize> {
    let s = &model.scenario;
    let d = *s.outcome_cardinality.get("A0")?;
    match scenario::bell(2, 2, d) {
        Ok(reference) => (*s == reference).then_some(d),
        Err(_) => None,
    }
}

fn wire_kernel<T>(first: &[Vec<T>], second: &[Vec<T>], w: &Wiring, d: usize) -> Vec<Vec<T>>
where
    T: Zero + Clone + std::ops::Mul<Output = T> + std::ops::AddAssign,
{
    let mut out = vec![vec![T::zero(); d * d]; 4];
    for x in 0..2 {
        for y in 0..2 {
            let t1 = &first[w.a.f1[x] * 2 + w.b.f1[y]];
            for a1 in 0..d {
                for b1 in 0..d {
                    let p1 = t1[a1 * d + b1].clone();
                    if p1.is_zero() {
                        continue;
                    }
                    let t2 = &second[w.a.f2[x][a1] * 2 + w.b.f2[y][b1]];
                    for a2 in 0..d {
                        for b2 in 0..d {
                            let a = w.a.g[x][a1][a2];
                            let b = w.b.g[y][b1][b2];
                            out[x * 2 + y][a * d + b] +=
                                p1.clone() * t2[a2 * d + b2].clone();
                        }
                    }
                }
            }
        }
    }
    out
}

/// Feeds two copies of `model` through `wiring` and returns the resulting
/// box on the same scenario. Exact boxes stay exact.
pub fn wire(model: &MarginalModel, wiring: &Wiring) -> Result<MarginalModel> {
    wiring.validate()?;
    let Some(d) = bipartite_outcomes(model) else {
        return Err(Error::Shape(
            "wiring needs a two-setting bipartite box (A0,A1,B0,B1)".into(),
        ));
    };
    if wiring.a.outcomes != d {
        return Err(Error::Shape(format!(
            "wiring is over {} outcomes but the box has {d}",
            wiring.a.outcomes
        )));
    }
    let context = |x: usize, y: usize| {
        [format!("A{x}"), format!("B{y}")].into_iter().collect::<std::collections::BTreeSet<_>>()
    };
    let names: Vec<String> = (0..2)
        .flat_map(|x| (0..2).map(move |y| format!("A{x},B{y}")))
        .collect();
    let tables: BTreeMap<String, Table> = if model.is_exact() {
        let mut flat = Vec::with_capacity(4);
        for x in 0..2 {
            for y in 0..2 {
                flat.push(model.marginal_exact(&context(x, y))?);
            }
        }
        let wired = wire_kernel(&flat, &flat, wiring, d);
        names.iter().cloned().zip(wired.into_iter().map(Table::Exact)).collect()
    } else {
        let mut flat = Vec::with_capacity(4);
        for x in 0..2 {
            for y in 0..2 {
                flat.push(model.marginal(&context(x, y))?);
            }
        }
        let wired = wire_kernel(&flat, &flat, wiring, d);
        names.iter().cloned().zip(wired.into_iter().map(Table::Float)).collect()
    };
    MarginalModel::from_tables(model.scenario.clone(), tables)
}

/// The local deterministic box that answers setting x with fa[x] and y with
/// fb[y].
pub fn deterministic_box(d: usize, fa: &[usize; 2], fb: &[usize; 2]) -> Result<MarginalModel> {
    if fa.iter().chain(fb.iter()).any(|&o| o >= d) {
        return Err(Error::Domain("deterministic outcome out of range".into()));
    }
    let mut tables = BTreeMap::new();
    for x in 0..2 {
        for y in 0..2 {
            let mut t = vec![Rational::zero(); d * d];
            t[fa[x] * d + fb[y]] = Rational::from_integer(1.into());
            tables.insert(format!("A{x},B{y}"), Table::Exact(t));
        }
    }
    MarginalModel::from_tables(scenario::bell(2, 2, d)?, tables)
}

/// All d⁴ local deterministic strategies as (fa, fb) pairs, ordered
/// lexicographically by (fa(0), fa(1), fb(0), fb(1)).
pub fn deterministic_strategies(d: usize) -> Vec<([usize; 2], [usize; 2])> {
    let mut out = Vec::with_capacity(d * d * d * d);
    for fa0 in 0..d {
        for fa1 in 0..d {
            for fb0 in 0..d {
                for fb1 in 0..d {
                    out.push(([fa0, fa1], [fb0, fb1]));
                }
            }
        }
    }
    out
}

/// A minimal-nonlocal-weight split P = (1−q)·P_local + q·P_rest.
#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Minimal weight of the non-local part.
    pub q: f64,
    /// Raw weights over [`deterministic_strategies`] order; they sum to 1−q.
    pub local_weights: Vec<f64>,
    /// The residual box carrying weight q. For q = 0 — and, on float inputs,
    /// for any q below [`DECOMPOSITION_TOL`] — this is the uniform box (it
    /// enters the mixture with negligible weight).
    pub nonlocal_part: MarginalModel,
}

impl Decomposition {
    /// Largest entrywise deviation of Σ w_k·D_k + q·nonlocal from `model`.
    pub fn reconstruction_residual(&self, model: &MarginalModel) -> Result<f64> {
        let Some(d) = bipartite_outcomes(model) else {
            return Err(Error::Shape("reconstruction needs a two-setting bipartite box".into()));
        };
        let strategies = deterministic_strategies(d);
        let mut worst: f64 = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                let ctx = [format!("A{x}"), format!("B{y}")].into_iter().collect();
                let target = model.marginal(&ctx)?;
                let rest = self.nonlocal_part.marginal(&ctx)?;
                for a in 0..d {
                    for b in 0..d {
                        let mut got = self.q * rest[a * d + b];
                        for (w, (fa, fb)) in self.local_weights.iter().zip(&strategies) {
                            if fa[x] == a && fb[y] == b {
                                got += w;
                            }
                        }
                        worst = worst.max((got - target[a * d + b]).abs());
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// Splits a box into a maximal local part and a minimal non-local rest by
/// solving (exactly, over rationals) the linear program
/// maximize Σw subject to Σ w_k·D_k ≤ P entrywise, w ≥ 0.
pub fn nonlocal_content(model: &MarginalModel) -> Result<Decomposition> {
    let Some(d) = bipartite_outcomes(model) else {
        return Err(Error::Shape(
            "nonlocal content needs a two-setting bipartite box (A0,A1,B0,B1)".into(),
        ));
    };
    let strategies = deterministic_strategies(d);
    if strategies.len() > DETERMINISTIC_CAP {
        return Err(Error::SizeCap(format!(
            "{} deterministic strategies exceed the cap of {DETERMINISTIC_CAP}",
            strategies.len()
        )));
    }

    // Exact entries: floats are converted digit-exactly and each context is
    // renormalized to exact total mass 1 (float tables only sum to 1 up to
    // rounding, which would otherwise let the LP optimum drift past 1). The
    // LP itself is always solved over rationals.
    let mut entries: Vec<Vec<Rational>> = Vec::with_capacity(4);
    for x in 0..2 {
        for y in 0..2 {
            let ctx = [format!("A{x}"), format!("B{y}")].into_iter().collect();
            entries.push(if model.is_exact() {
                model.marginal_exact(&ctx)?
            } else {
                let mut t: Vec<Rational> = model
                    .marginal(&ctx)?
                    .iter()
                    .map(|&p| Rational::from_float(p).expect("finite probability"))
                    .collect();
                let total: Rational = t.iter().cloned().sum();
                if !total.is_positive() {
                    return Err(Error::InvalidBox(format!("table `A{x},B{y}` has no mass")));
                }
                for v in t.iter_mut() {
                    *v /= &total;
                }
                t
            });
        }
    }

    let n = strategies.len();
    let mut rows = Vec::with_capacity(4 * d * d);
    let mut rhs = Vec::with_capacity(4 * d * d);
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..d {
                for b in 0..d {
                    let mut row = vec![Rational::zero(); n];
                    for (k, (fa, fb)) in strategies.iter().enumerate() {
                        if fa[x] == a && fb[y] == b {
                            row[k] = Rational::from_integer(1.into());
                        }
                    }
                    rows.push(row);
                    rhs.push(entries[x * 2 + y][a * d + b].clone());
                }
            }
        }
    }
    let lp = StandardLp {
        rows,
        rel: vec![Rel::Le; 4 * d * d],
        rhs,
        objective: vec![Rational::from_integer(1.into()); n],
    };
    let (weight, point) = match solve_standard(&lp) {
        StdOutcome::Optimal { value, point } => (value, point),
        StdOutcome::Unbounded => {
            return Err(Error::Internal("content LP cannot be unbounded".into()))
        }
        StdOutcome::Infeasible => {
            return Err(Error::Internal("content LP with w=0 feasible reported infeasible".into()))
        }
    };

    let q_exact = Rational::from_integer(1.into()) - &weight;
    // Residual box: (P − Σ w_k D_k) / q, or the uniform box when q = 0. For
    // float inputs the residual is a float box (the exact lift carries the
    // input's rounding noise, so exact-table validation could never accept
    // it), and any q below the reconstruction tolerance is treated as zero:
    // dividing noise-sized mass by a noise-sized q would produce garbage
    // entries while the uniform stand-in costs at most q in reconstruction.
    let negligible = if model.is_exact() {
        q_exact.is_zero()
    } else {
        rational_to_f64(&q_exact) <= DECOMPOSITION_TOL
    };
    let nonlocal_part = if negligible {
        uniform_box(d)?
    } else {
        let mut tables = BTreeMap::new();
        for x in 0..2 {
            for y in 0..2 {
                let mut t = entries[x * 2 + y].clone();
                for (k, (fa, fb)) in strategies.iter().enumerate() {
                    if point[k].is_zero() {
                        continue;
                    }
                    t[fa[x] * d + fb[y]] -= &point[k];
                }
                for v in t.iter_mut() {
                    *v /= &q_exact;
                }
                let name = format!("A{x},B{y}");
                if model.is_exact() {
                    tables.insert(name, Table::Exact(t));
                } else {
                    tables.insert(name, Table::Float(t.iter().map(rational_to_f64).collect()));
                }
            }
        }
        MarginalModel::from_tables(scenario::bell(2, 2, d)?, tables)?
    };

    Ok(Decomposition {
        q: rational_to_f64(&q_exact),
        local_weights: point.iter().map(rational_to_f64).collect(),
        nonlocal_part,
    })
}

fn uniform_box(d: usize) -> Result<MarginalModel> {
    let mut tables = BTreeMap::new();
    let cell = Rational::new(1.into(), (d as i64 * d as i64).into());
    for x in 0..2 {
        for y in 0..2 {
            tables.insert(format!("A{x},B{y}"), Table::Exact(vec![cell.clone(); d * d]));
        }
    }
    MarginalModel::from_tables(scenario::bell(2, 2, d)?, tables)
}

/// Change in nonlocal content from wiring two copies of the box together:
/// q(wired) − q(original). Positive values mean the wiring distills.
pub fn distillation_gain(model: &MarginalModel, wiring: &Wiring) -> Result<f64> {
    let wired = wire(model, wiring)?;
    Ok(nonlocal_content(&wired)?.q - nonlocal_content(model)?.q)
}

/// A metric a scan can evaluate on each grid box.
pub enum Metric {
    Chsh,
    ChshEntropic,
    NonlocalContent,
    DistillationGain(Wiring),
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Chsh => "chsh",
            Metric::ChshEntropic => "chsh_entropic",
            Metric::NonlocalContent => "nonlocal_content",
            Metric::DistillationGain(_) => "distillation_gain",
        }
    }

    pub fn evaluate(&self, model: &MarginalModel) -> Result<f64> {
        match self {
            Metric::Chsh => boxworld::chsh(model),
            Metric::ChshEntropic => boxworld::chsh_entropic(model),
            Metric::NonlocalContent => Ok(nonlocal_content(model)?.q),
            Metric::DistillationGain(w) => distillation_gain(model, w),
        }
    }
}

/// One scan row: the grid parameters followed by one value per metric.
#[derive(Clone, Debug)]
pub struct ScanRow {
    pub params: Vec<f64>,
    pub values: Vec<f64>,
}

/// Evaluates every metric on every (parameters, box) pair, preserving input
/// order. An empty grid yields an empty table.
pub fn scan(points: &[(Vec<f64>, MarginalModel)], metrics: &[Metric]) -> Result<Vec<ScanRow>> {
    points
        .iter()
        .map(|(params, model)| {
            let values = metrics
                .iter()
                .map(|m| m.evaluate(model))
                .collect::<Result<Vec<f64>>>()?;
            Ok(ScanRow { params: params.clone(), values })
        })
        .collect()
}
