//! The inequality system attached to a core graph.
//!
//! Every choice of edge subsets grouped around same-type vertices (an
//! *admissible tuple*) yields one linear inequality over variables indexed by
//! (letter, edge set) pairs plus one special variable. The resulting system
//! drives the exact LP computation of the intersection-ratio coefficient, and
//! vertices of a second graph map into it via edge preimages of the fiber
//! product.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{UmGraph, VType};
use crate::pullback::ProductGraph;
use crate::words::Letter;

/// LP variable: either a letter together with a nonempty set of stored edges
/// carrying that letter, or the special slack-like variable. The derived
/// order puts all edge-set variables before the special one.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    X { letter: Letter, edges: BTreeSet<usize> },
    Xs,
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::X { letter, edges } => {
                write!(f, "x{}", letter.0)?;
                for e in edges {
                    write!(f, ".{e}")?;
                }
                Ok(())
            }
            VarId::Xs => write!(f, "xs"),
        }
    }
}

/// An m-tuple of stored-edge sets over a fixed graph; the j-th set holds
/// label-(j+1) edges. Valid tuples have a nonempty union and no selected
/// edge alone at its side-`side` endpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissibleTuple {
    side: VType,
    sets: Vec<BTreeSet<usize>>,
}

impl AdmissibleTuple {
    /// Validates labels, the nonempty union, and the class-size condition.
    pub fn new(y1: &UmGraph, side: VType, sets: Vec<BTreeSet<usize>>) -> Result<AdmissibleTuple> {
        if sets.len() != y1.m() as usize {
            return Err(Error::NotAdmissible(format!(
                "expected {} sets, got {}",
                y1.m(),
                sets.len()
            )));
        }
        let mut union = BTreeSet::new();
        for (slot, set) in sets.iter().enumerate() {
            for &e in set {
                if e >= y1.edge_count() {
                    return Err(Error::UnknownEdge(e));
                }
                let label = y1.edge(e).label.0 as usize;
                if label != slot + 1 {
                    return Err(Error::NotAdmissible(format!(
                        "edge {e} carries label a{label} but sits in the a{} slot",
                        slot + 1
                    )));
                }
                union.insert(e);
            }
        }
        if union.is_empty() {
            return Err(Error::NotAdmissible("empty tuple".into()));
        }
        for class in relation_classes(y1, &union, side)? {
            if class.len() < 2 {
                return Err(Error::NotAdmissible(format!(
                    "edge {} is alone at its side-{} endpoint",
                    class[0],
                    side.as_u8()
                )));
            }
        }
        Ok(AdmissibleTuple { side, sets })
    }

    pub fn side(&self) -> VType {
        self.side
    }

    pub fn sets(&self) -> &[BTreeSet<usize>] {
        &self.sets
    }

    /// Number of nonempty sets in the tuple.
    pub fn k(&self) -> u32 {
        self.sets.iter().filter(|s| !s.is_empty()).count() as u32
    }

    /// All selected edges, across letters.
    pub fn selected(&self) -> BTreeSet<usize> {
        self.sets.iter().flatten().copied().collect()
    }

    /// Reassembles a tuple from already-validated parts (deserialization).
    pub(crate) fn from_parts(side: VType, sets: Vec<BTreeSet<usize>>) -> AdmissibleTuple {
        AdmissibleTuple { side, sets }
    }

    /// Stable text form used for row names: nonempty sets as
    /// `a<j>.<id>.<id>…` joined by `_`.
    pub fn encode(&self) -> String {
        let mut parts = Vec::new();
        for (slot, set) in self.sets.iter().enumerate() {
            if set.is_empty() {
                continue;
            }
            let mut part = format!("a{}", slot + 1);
            for e in set {
                part.push('.');
                part.push_str(&e.to_string());
            }
            parts.push(part);
        }
        parts.join("_")
    }
}

impl PartialOrd for AdmissibleTuple {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AdmissibleTuple {
    /// Side first, then number of nonempty sets, then the sets themselves:
    /// the deterministic system order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.side
            .cmp(&other.side)
            .then_with(|| self.k().cmp(&other.k()))
            .then_with(|| self.sets.cmp(&other.sets))
    }
}

/// Groups `edges` by their side-`side` endpoint; classes come out ordered by
/// endpoint id, members by edge id.
pub fn relation_classes(
    y1: &UmGraph,
    edges: &BTreeSet<usize>,
    side: VType,
) -> Result<Vec<Vec<usize>>> {
    let mut by_vertex: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &e in edges {
        if e >= y1.edge_count() {
            return Err(Error::UnknownEdge(e));
        }
        by_vertex.entry(y1.endpoint(e, side)).or_default().push(e);
    }
    Ok(by_vertex.into_values().collect())
}

/// Sum of (class size − 2) over the endpoint classes of the tuple's edges.
pub fn n_value(y1: &UmGraph, t: &AdmissibleTuple) -> u64 {
    relation_classes(y1, &t.selected(), t.side())
        .expect("tuple edges validated at construction")
        .iter()
        .map(|c| (c.len() - 2) as u64)
        .sum()
}

/// A single inequality `Σ coeff·var ≤ rhs` together with its generating
/// tuple. Edge-set variables all carry −1 (side one) or +1 (side two); the
/// special variable carries −(k−2) and is omitted when k = 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inequality {
    pub side: VType,
    pub k: u32,
    pub rhs: i64,
    pub coeffs: BTreeMap<VarId, i64>,
    pub tuple: AdmissibleTuple,
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (var, &c) in &self.coeffs {
            let sign = if c < 0 { "-" } else { "+" };
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {sign} ")?;
            }
            if c.abs() != 1 {
                write!(f, "{} ", c.abs())?;
            }
            write!(f, "{var}")?;
        }
        write!(f, " <= {}", self.rhs)
    }
}

/// Builds the inequality of an admissible tuple.
pub fn inequality_of(y1: &UmGraph, tuple: &AdmissibleTuple) -> Inequality {
    let sign = match tuple.side() {
        VType::One => -1,
        VType::Two => 1,
    };
    let mut coeffs = BTreeMap::new();
    for (slot, set) in tuple.sets().iter().enumerate() {
        if set.is_empty() {
            continue;
        }
        coeffs.insert(
            VarId::X { letter: Letter((slot + 1) as u32), edges: set.clone() },
            sign,
        );
    }
    let k = tuple.k();
    if k > 2 {
        coeffs.insert(VarId::Xs, -((k - 2) as i64));
    }
    Inequality {
        side: tuple.side(),
        k,
        rhs: -(n_value(y1, tuple) as i64),
        coeffs,
        tuple: tuple.clone(),
    }
}

/// Yields every admissible tuple of the given side exactly once, sorted.
///
/// A tuple is equivalent to a choice, per side-`side` vertex, of a star
/// subset of size ≠ 1 (not all empty): the endpoint classes are exactly the
/// chosen nonempty subsets. The enumerator walks these choices with an
/// odometer and cross-checks the count Π(2^deg − deg) − 1.
pub fn enumerate_admissible(y1: &UmGraph, side: VType) -> Result<Vec<AdmissibleTuple>> {
    y1.check_immersed()?;
    y1.check_core()?;
    if y1.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let m = y1.m() as usize;
    let verts = y1.vertices_of_type(side);
    let mut menus: Vec<Vec<Vec<usize>>> = Vec::with_capacity(verts.len());
    for &v in &verts {
        let star = y1.edges_at(v);
        if star.len() >= 32 {
            return Err(Error::Internal(format!(
                "vertex degree {} too large to enumerate",
                star.len()
            )));
        }
        let mut subs = Vec::new();
        for mask in 0u32..(1u32 << star.len()) {
            if mask.count_ones() == 1 {
                continue;
            }
            subs.push(
                (0..star.len())
                    .filter(|b| mask >> b & 1 == 1)
                    .map(|b| star[b])
                    .collect::<Vec<usize>>(),
            );
        }
        menus.push(subs);
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; menus.len()];
    'odometer: loop {
        if idx.iter().enumerate().any(|(vi, &s)| !menus[vi][s].is_empty()) {
            let mut sets = vec![BTreeSet::new(); m];
            for (vi, &s) in idx.iter().enumerate() {
                for &e in &menus[vi][s] {
                    sets[(y1.edge(e).label.0 - 1) as usize].insert(e);
                }
            }
            out.push(AdmissibleTuple { side, sets });
        }
        for p in 0..idx.len() {
            idx[p] += 1;
            if idx[p] < menus[p].len() {
                continue 'odometer;
            }
            idx[p] = 0;
        }
        break;
    }
    if let Some(expected) = menus
        .iter()
        .try_fold(1u128, |acc, subs| acc.checked_mul(subs.len() as u128))
    {
        debug_assert_eq!(out.len() as u128 + 1, expected);
    }
    out.sort();
    Ok(out)
}

/// One row of a built system: the inequality plus its sparse column form
/// over the variable registry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliRow {
    pub ineq: Inequality,
    /// (variable index, coefficient), sorted by index.
    pub cols: Vec<(usize, i64)>,
}

/// The full ordered inequality system of a core graph with positive reduced
/// rank, with a lazily collected variable registry (only variables that
/// occur are registered; the special variable sorts last).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliSystem {
    m: u32,
    vars: Vec<VarId>,
    pub(crate) rows: Vec<SliRow>,
}

impl SliSystem {
    /// Reassembles a system from already-validated parts (deserialization).
    pub(crate) fn from_parts(m: u32, vars: Vec<VarId>, rows: Vec<SliRow>) -> SliSystem {
        SliSystem { m, vars, rows }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Number of inequalities.
    pub fn m_inq(&self) -> usize {
        self.rows.len()
    }

    /// Number of registered variables.
    pub fn n_inq(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn rows(&self) -> &[SliRow] {
        &self.rows
    }

    pub fn var_index(&self, var: &VarId) -> Option<usize> {
        self.vars.binary_search(var).ok()
    }

    /// Registry slot of the special variable (always present: a graph of
    /// positive reduced rank has a vertex of degree ≥ 3, whose full-star
    /// tuple uses it).
    pub fn xs_index(&self) -> usize {
        debug_assert_eq!(self.vars.last(), Some(&VarId::Xs));
        self.vars.len() - 1
    }

    /// Row index of the inequality generated by `t`, if present.
    pub fn index_of(&self, t: &AdmissibleTuple) -> Option<usize> {
        self.rows.binary_search_by(|r| r.ineq.tuple.cmp(t)).ok()
    }
}

/// Builds the system of all admissible-tuple inequalities of `y1`, sorted by
/// (side, nonempty-set count, tuple), with a deterministic registry.
pub fn build_sli(y1: &UmGraph) -> Result<SliSystem> {
    if y1.reduced_rank()? == 0 {
        return Err(Error::RankZero);
    }
    let mut tuples = enumerate_admissible(y1, VType::One)?;
    tuples.extend(enumerate_admissible(y1, VType::Two)?);
    let ineqs: Vec<Inequality> = tuples.iter().map(|t| inequality_of(y1, t)).collect();
    let mut var_set = BTreeSet::new();
    for q in &ineqs {
        var_set.extend(q.coeffs.keys().cloned());
    }
    let vars: Vec<VarId> = var_set.into_iter().collect();
    let rows = ineqs
        .into_iter()
        .map(|ineq| {
            let cols = ineq
                .coeffs
                .iter()
                .map(|(v, &c)| {
                    (
                        vars.binary_search(v).expect("registry covers all variables"),
                        c,
                    )
                })
                .collect();
            SliRow { ineq, cols }
        })
        .collect();
    let sys = SliSystem { m: y1.m(), vars, rows };
    debug_assert!(sys.rows.windows(2).all(|w| w[0].ineq.tuple < w[1].ineq.tuple));
    debug_assert_eq!(sys.vars.last(), Some(&VarId::Xs));
    // Ceiling on the variable count: a core graph carries at most |E|/2
    // same-label edges (each such edge owns a distinct degree->=2 type-1
    // vertex), so at most m(2^{|E|/2} - 1) edge-set variables can exist.
    debug_assert!(
        y1.edge_count() > 120
            || sys.n_inq() as u128
                <= y1.m() as u128 * ((1u128 << (y1.edge_count() / 2)) - 1) + 1
    );
    Ok(sys)
}

/// The admissible tuple attached to vertex `u` of `y2` by the product `p` of
/// (`y1`, `y2`): per incident edge of `u`, the full edge preimage in the
/// product core pushed to `y1`. Fails when some incident edge is uncovered.
pub fn vertex_tuple(
    y1: &UmGraph,
    y2: &UmGraph,
    p: &ProductGraph,
    u: usize,
) -> Result<AdmissibleTuple> {
    let side = y2.vtype(u);
    let mut sets = vec![BTreeSet::new(); y1.m() as usize];
    let star = y2.edges_at(u);
    if star.is_empty() {
        return Err(Error::NotCovered(format!(
            "vertex {u} of the second graph has no incident edges"
        )));
    }
    for &f in &star {
        let slot = (y2.edge(f).label.0 - 1) as usize;
        let mut any = false;
        for &(e1, e2) in p.emap() {
            if e2 == f {
                sets[slot].insert(e1);
                any = true;
            }
        }
        if !any {
            return Err(Error::NotCovered(format!(
                "edge {f} of the second graph has no preimage in the product core"
            )));
        }
    }
    AdmissibleTuple::new(y1, side, sets)
}

/// Index of the inequality instance attached to vertex `u` of `y2`.
pub fn inq_vertex(
    sys: &SliSystem,
    y1: &UmGraph,
    y2: &UmGraph,
    p: &ProductGraph,
    u: usize,
) -> Result<usize> {
    let tuple = vertex_tuple(y1, y2, p, u)?;
    sys.index_of(&tuple).ok_or_else(|| {
        Error::Internal("vertex tuple missing from the inequality system".into())
    })
}
