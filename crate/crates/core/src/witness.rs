//! Extremal witness construction.
//!
//! An optimal vertex of the dual program scales to an integer multiset of
//! inequalities. Pairing up the letter slots of that multiset yields a
//! concrete immersed core graph whose pullback against the original graph
//! attains the computed ratio coefficient exactly — an independent,
//! purely combinatorial certificate for the solver's output.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{UmGraph, VType};
use crate::ineq::{build_sli, inq_vertex, SliSystem, VarId};
use crate::lp::{check_primal_feasible_point, solve_sigma_lp, VertexSolution};
use crate::pullback::pullback_core;
use crate::ratio;
use crate::words::Letter;
use crate::Rational;

/// Nonnegative integer multiplicities over the rows of an inequality
/// system, validated to be nonzero and letter-slot balanced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IneqMultiset {
    counts: Vec<u64>,
}

impl IneqMultiset {
    /// Validates multiplicities against `sys`: the vector must be nonzero
    /// and, for every edge-set variable, the negative (side-one) and
    /// positive (side-two) slot totals must agree.
    pub fn new(sys: &SliSystem, counts: Vec<u64>) -> Result<IneqMultiset> {
        if counts.len() != sys.m_inq() {
            return Err(Error::Internal(format!(
                "multiset length {} does not match the system's {} inequalities",
                counts.len(),
                sys.m_inq()
            )));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::ZeroVector);
        }
        let xs = sys.xs_index();
        let mut neg = vec![0u64; sys.n_inq()];
        let mut pos = vec![0u64; sys.n_inq()];
        for (i, row) in sys.rows().iter().enumerate() {
            if counts[i] == 0 {
                continue;
            }
            for &(vi, c) in &row.cols {
                if vi == xs {
                    continue;
                }
                debug_assert!(c == 1 || c == -1);
                if c < 0 {
                    neg[vi] += counts[i];
                } else {
                    pos[vi] += counts[i];
                }
            }
        }
        for vi in 0..sys.n_inq() {
            if neg[vi] != pos[vi] {
                let VarId::X { letter, edges } = &sys.vars()[vi] else {
                    unreachable!("only edge-set variables carry unit coefficients");
                };
                return Err(Error::UnbalancedMultiset {
                    letter: letter.0,
                    edges: edges.iter().copied().collect(),
                    neg: neg[vi] as usize,
                    pos: pos[vi] as usize,
                });
            }
        }
        Ok(IneqMultiset { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total weight Σ ℓ_i (k_i − 2); twice the reduced rank of any graph
    /// realizing the multiset.
    pub fn capacity(&self, sys: &SliSystem) -> u64 {
        sys.rows()
            .iter()
            .zip(&self.counts)
            .map(|(row, &c)| c * (row.ineq.k as u64 - 2))
            .sum()
    }

    /// The multiplicities normalized by the capacity constant: a point of
    /// the dual program's feasible polyhedron. Inverse to
    /// [`multiset_from_vertex`] on multisets with coprime entries.
    pub fn normalized(&self, sys: &SliSystem) -> Result<Vec<Rational>> {
        let cap = self.capacity(sys);
        if cap == 0 {
            return Err(Error::DegenerateMultiset);
        }
        let cap = ratio::int(cap as i64);
        Ok(self
            .counts
            .iter()
            .map(|&c| ratio::int(c as i64) / &cap)
            .collect())
    }

    /// Right-hand-side total normalized by the capacity constant. For a
    /// multiset extracted from an optimal dual vertex this equals the
    /// ratio coefficient times the reduced rank of the original graph.
    pub fn value(&self, sys: &SliSystem) -> Result<Rational> {
        let cap = self.capacity(sys);
        if cap == 0 {
            return Err(Error::DegenerateMultiset);
        }
        let rhs_total: i128 = sys
            .rows()
            .iter()
            .zip(&self.counts)
            .map(|(row, &c)| row.ineq.rhs as i128 * c as i128)
            .sum();
        let num = Rational::from(BigInt::from(-rhs_total));
        Ok(num / ratio::int(cap as i64))
    }
}

/// Clears denominators of a nonnegative rational vector: returns the
/// multiset ℓ = L·y together with the scale L (the denominators' lcm).
pub fn multiset_from_vertex(
    sys: &SliSystem,
    vertex: &VertexSolution,
) -> Result<(IneqMultiset, u64)> {
    let mut scale = BigInt::one();
    for y in &vertex.values {
        scale = scale.lcm(y.denom());
    }
    let mut counts = Vec::with_capacity(vertex.values.len());
    for y in &vertex.values {
        let v = (y * Rational::from(scale.clone())).to_integer();
        let c = v.to_u64().ok_or_else(|| {
            Error::Internal(format!("multiset entry {v} does not fit in 64 bits"))
        })?;
        counts.push(c);
    }
    let scale = scale
        .to_u64()
        .ok_or_else(|| Error::Internal(format!("scale {scale} does not fit in 64 bits")))?;
    Ok((IneqMultiset::new(sys, counts)?, scale))
}

/// Reads the multiset of a candidate graph directly: one inequality
/// instance per vertex, extracted from the pullback against `y1`.
pub fn inq_multiset(sys: &SliSystem, y1: &UmGraph, y2: &UmGraph) -> Result<IneqMultiset> {
    y2.check_immersed()?;
    y2.check_core()?;
    if y2.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let p = pullback_core(y1, y2)?;
    let mut counts = vec![0u64; sys.m_inq()];
    for u in y2.vertices() {
        counts[inq_vertex(sys, y1, y2, &p, u)?] += 1;
    }
    IneqMultiset::new(sys, counts)
}

/// Builds a graph realizing the multiset: one vertex per inequality
/// instance, one edge per matched pair of letter slots (first-to-first).
pub fn realize(sys: &SliSystem, y1: &UmGraph, q: &IneqMultiset) -> Result<UmGraph> {
    realize_seeded(sys, y1, q, None)
}

/// Like [`realize`] but with a seeded shuffle of every slot list before
/// pairing; any pairing yields a valid realization, which this exposes
/// for testing.
pub fn realize_seeded(
    sys: &SliSystem,
    y1: &UmGraph,
    q: &IneqMultiset,
    seed: Option<u64>,
) -> Result<UmGraph> {
    if q.capacity(sys) == 0 {
        return Err(Error::DegenerateMultiset);
    }
    let mut g = UmGraph::new(y1.m())?;
    type SlotKey = (u32, Vec<usize>);
    let mut slots: BTreeMap<SlotKey, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, row) in sys.rows().iter().enumerate() {
        for _ in 0..q.counts[i] {
            let side = row.ineq.side;
            let v = g.add_vertex(side);
            for (slot, set) in row.ineq.tuple.sets().iter().enumerate() {
                if set.is_empty() {
                    continue;
                }
                let key = (slot as u32 + 1, set.iter().copied().collect());
                let entry = slots.entry(key).or_default();
                match side {
                    VType::One => entry.0.push(v),
                    VType::Two => entry.1.push(v),
                }
            }
        }
    }
    if let Some(s) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        for (ones, twos) in slots.values_mut() {
            ones.shuffle(&mut rng);
            twos.shuffle(&mut rng);
        }
    }
    for ((letter, _), (ones, twos)) in slots {
        if ones.len() != twos.len() {
            return Err(Error::Internal(
                "balanced multiset produced unequal slot lists".into(),
            ));
        }
        for (v1, v2) in ones.into_iter().zip(twos) {
            g.add_edge(v1, v2, Letter(letter))?;
        }
    }
    debug_assert!(g.is_immersed());
    debug_assert!(g.is_core());
    Ok(g)
}

/// Conservative form of the a-priori witness size ceiling: the bit length
/// of the witness's oriented edge count must stay below
/// 2^(s/2) · m² for `s` stored edges in the original graph.
pub fn within_size_bound(y1: &UmGraph, y2: &UmGraph) -> bool {
    let bits = BigUint::from(y2.oriented_edge_count()).bits();
    let m = BigUint::from(y1.m());
    let cap = (BigUint::one() << (y1.edge_count() / 2)) * &m * &m;
    BigUint::from(bits) <= cap
}

/// Everything produced on the way from a core graph to its verified
/// extremal witness.
#[derive(Clone, Debug)]
pub struct WitnessReport {
    pub sigma: Rational,
    pub optimum: Rational,
    /// Denominator-clearing scale applied to the optimal dual vertex.
    pub scale: u64,
    pub multiset: IneqMultiset,
    pub graph: UmGraph,
    pub witness_brr: u64,
    pub product_brr: u64,
    pub connected: bool,
    pub size_ok: bool,
    pub lp_pivots: u64,
    pub m_inq: usize,
    pub n_inq: usize,
}

/// Full certificate pipeline: solve the dual program, scale its optimal
/// vertex to a multiset, realize the multiset as a graph, and verify by
/// direct pullback that the graph attains the coefficient exactly.
pub fn compute_witness(y1: &UmGraph) -> Result<WitnessReport> {
    y1.check_immersed()?;
    y1.check_core()?;
    if !y1.is_connected() {
        return Err(Error::NotConnected);
    }
    let brr1 = y1.reduced_rank()?;
    if brr1 == 0 {
        return Err(Error::RankZero);
    }
    let sys = build_sli(y1)?;
    if !check_primal_feasible_point(&sys, brr1) {
        return Err(Error::Internal(
            "canonical feasible point violates the generated system".into(),
        ));
    }
    let lp = solve_sigma_lp(&sys, brr1)?;
    let (multiset, scale) = multiset_from_vertex(&sys, &lp.vertex)?;
    let graph = realize(&sys, y1, &multiset)?;
    let witness_brr = graph.reduced_rank()?;
    // Re-reading the witness through the fiber product gives back a valid
    // multiset, but not always the defining one: the canonical min-degree-2
    // subgraph of the product always survives coring, and extra product
    // edges sometimes survive alongside it, enlarging the per-edge fibers.
    // Both directions of the optimality argument still pin the numbers
    // down, so the read-back must be another optimum of the same program:
    // capacity twice the witness rank and the same normalized value.
    let back = inq_multiset(&sys, y1, &graph)?;
    if back.capacity(&sys) != 2 * witness_brr {
        return Err(Error::Internal(format!(
            "read-back multiset capacity {} does not match twice the witness rank {witness_brr}",
            back.capacity(&sys)
        )));
    }
    if back.value(&sys)? != multiset.value(&sys)? {
        return Err(Error::Internal(
            "read-back multiset is not optimal: its value differs from the solved optimum".into(),
        ));
    }
    let product_brr = pullback_core(y1, &graph)?.graph().reduced_rank()?;
    let expect = &lp.sigma * ratio::int(brr1 as i64) * ratio::int(witness_brr as i64);
    if expect != ratio::int(product_brr as i64) {
        return Err(Error::Internal(format!(
            "witness fails the exact ratio identity: pullback rank {product_brr}, expected {expect}"
        )));
    }
    let connected = graph.is_connected();
    let size_ok = within_size_bound(y1, &graph);
    Ok(WitnessReport {
        sigma: lp.sigma,
        optimum: lp.optimum,
        scale,
        multiset,
        graph,
        witness_brr,
        product_brr,
        connected,
        size_ok,
        lp_pivots: lp.vertex.pivots,
        m_inq: sys.m_inq(),
        n_inq: sys.n_inq(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::stallings_graph;
    use crate::ratio::{frac, int};
    use crate::words::Word;

    fn core_of(list: &[&str], m: u32) -> UmGraph {
        let words: Vec<Word> = list.iter().map(|s| Word::parse(s).unwrap()).collect();
        stallings_graph(&words, m).unwrap().graph.core()
    }

    #[test]
    fn ambient_three_witness() {
        let u3 = UmGraph::ambient(3).unwrap();
        let sys = build_sli(&u3).unwrap();
        let rep = compute_witness(&u3).unwrap();
        assert_eq!(rep.sigma, int(1));
        // Structure dictated by the multiset: one vertex per instance, one
        // edge per matched slot pair, rank = half the capacity.
        let total: u64 = rep.multiset.counts().iter().sum();
        assert_eq!(rep.graph.vertex_count() as u64, total);
        assert_eq!(rep.witness_brr, rep.multiset.capacity(&sys) / 2);
        assert_eq!(rep.product_brr, rep.witness_brr);
        assert!(rep.connected);
        assert!(rep.size_ok);
        assert_eq!(rep.multiset.value(&sys).unwrap(), int(1));
    }

    #[test]
    fn ambient_family_witnesses() {
        for m in 3u32..=5 {
            let g = UmGraph::ambient(m).unwrap();
            let rep = compute_witness(&g).unwrap();
            assert_eq!(rep.sigma, frac(1, (m - 2) as i64), "m={m}");
            assert!(rep.size_ok, "m={m}");
            let sys = build_sli(&g).unwrap();
            let brr1 = g.reduced_rank().unwrap();
            assert_eq!(
                rep.multiset.value(&sys).unwrap(),
                rep.sigma.clone() * int(brr1 as i64),
                "m={m}"
            );
        }
    }

    #[test]
    fn squares_subgroup_attains_one() {
        let y1 = core_of(&["x1 x1", "x2 x2", "x1 x2 x1 x2"], 3);
        assert_eq!(y1.reduced_rank().unwrap(), 2);
        let rep = compute_witness(&y1).unwrap();
        assert_eq!(rep.sigma, int(1));
        assert_eq!(rep.product_brr, 2 * rep.witness_brr);
        assert!(rep.size_ok);
    }

    #[test]
    fn unbalanced_multiset_is_rejected() {
        let u3 = UmGraph::ambient(3).unwrap();
        let sys = build_sli(&u3).unwrap();
        let mut counts = vec![0u64; sys.m_inq()];
        counts[3] = 1; // lone full-star instance on side one
        match IneqMultiset::new(&sys, counts) {
            Err(Error::UnbalancedMultiset { letter, neg, pos, .. }) => {
                assert_eq!(letter, 1);
                assert_eq!((neg, pos), (1, 0));
            }
            other => panic!("expected unbalanced error, got {other:?}"),
        }
    }

    #[test]
    fn normalization_round_trips() {
        let u3 = UmGraph::ambient(3).unwrap();
        let sys = build_sli(&u3).unwrap();
        // The matched pair of full-star instances normalizes to +1/2 on each.
        let full1 = sys.rows().iter().position(|r| r.ineq.k == 3 && r.ineq.side == VType::One);
        let full2 = sys.rows().iter().position(|r| r.ineq.k == 3 && r.ineq.side == VType::Two);
        let mut counts = vec![0u64; sys.m_inq()];
        counts[full1.unwrap()] = 1;
        counts[full2.unwrap()] = 1;
        let q = IneqMultiset::new(&sys, counts.clone()).unwrap();
        let y = q.normalized(&sys).unwrap();
        for (i, v) in y.iter().enumerate() {
            let expect = if counts[i] == 1 { frac(1, 2) } else { int(0) };
            assert_eq!(*v, expect, "coordinate {i}");
        }
        // Coprime multisets survive the vertex -> multiset -> vertex loop.
        let vertex = VertexSolution { values: y, basis: vec![], objective: int(0), pivots: 0 };
        let (back, scale) = multiset_from_vertex(&sys, &vertex).unwrap();
        assert_eq!(back, q);
        assert_eq!(scale, 2);
        // And solved vertices survive the opposite loop.
        let lp = solve_sigma_lp(&sys, u3.reduced_rank().unwrap()).unwrap();
        let (q2, _) = multiset_from_vertex(&sys, &lp.vertex).unwrap();
        assert_eq!(q2.normalized(&sys).unwrap(), lp.vertex.values);
    }

    #[test]
    fn zero_and_degenerate_multisets() {
        let u3 = UmGraph::ambient(3).unwrap();
        let sys = build_sli(&u3).unwrap();
        assert!(matches!(
            IneqMultiset::new(&sys, vec![0; sys.m_inq()]),
            Err(Error::ZeroVector)
        ));
        // A matched pair of two-letter instances is balanced but carries no
        // capacity: its graph would be a plain cycle.
        let mut counts = vec![0u64; sys.m_inq()];
        counts[0] = 1;
        counts[4] = 1;
        let q = IneqMultiset::new(&sys, counts).unwrap();
        assert_eq!(q.capacity(&sys), 0);
        assert!(matches!(q.value(&sys), Err(Error::DegenerateMultiset)));
        assert!(matches!(
            realize(&sys, &u3, &q),
            Err(Error::DegenerateMultiset)
        ));
    }

    #[test]
    fn scaled_multisets_realize_disjoint_copies() {
        let u3 = UmGraph::ambient(3).unwrap();
        let sys = build_sli(&u3).unwrap();
        let rep = compute_witness(&u3).unwrap();
        let tripled: Vec<u64> = rep.multiset.counts().iter().map(|c| c * 3).collect();
        let q3 = IneqMultiset::new(&sys, tripled).unwrap();
        assert_eq!(q3.value(&sys).unwrap(), rep.multiset.value(&sys).unwrap());
        let g = realize(&sys, &u3, &q3).unwrap();
        assert_eq!(g.vertex_count(), 3 * rep.graph.vertex_count());
        assert_eq!(g.edge_count(), 3 * rep.graph.edge_count());
        assert!(!g.is_connected());
        assert_eq!(inq_multiset(&sys, &u3, &g).unwrap(), q3);
        // The ratio identity survives disconnected witnesses.
        let w = pullback_core(&u3, &g).unwrap().graph().reduced_rank().unwrap();
        assert_eq!(w, 3 * rep.product_brr);
    }

    #[test]
    fn pairing_choice_does_not_matter() {
        let g = UmGraph::ambient(4).unwrap();
        let sys = build_sli(&g).unwrap();
        let brr1 = g.reduced_rank().unwrap();
        let lp = solve_sigma_lp(&sys, brr1).unwrap();
        let (q, _) = multiset_from_vertex(&sys, &lp.vertex).unwrap();
        for seed in [1u64, 7, 42] {
            let w = realize_seeded(&sys, &g, &q, Some(seed)).unwrap();
            assert_eq!(inq_multiset(&sys, &g, &w).unwrap(), q, "seed {seed}");
            let wb = w.reduced_rank().unwrap();
            let pb = pullback_core(&g, &w).unwrap().graph().reduced_rank().unwrap();
            assert_eq!(
                ratio::int(pb as i64),
                &lp.sigma * int(brr1 as i64) * int(wb as i64),
                "seed {seed}"
            );
        }
    }
}
