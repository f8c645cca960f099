//! End-to-end pipelines: from generating words to verified reports, plus
//! the quotient search, the brute-force enumeration oracle, and seeded
//! random corpora for self-checks.

use std::collections::{HashSet, VecDeque};
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::{stallings_graph, BasedGraph, UmGraph, VType};
use crate::ineq::build_sli;
use crate::lp::solve_sigma_lp;
use crate::pullback::{components, pullback_core};
use crate::ratio;
use crate::witness::{compute_witness, WitnessReport};
use crate::words::{Gen, Word};
use crate::Rational;

/// Folded based graph of the subgroup generated by `words` inside the
/// rank-(m−1) free group presented on `m` ambient edges.
pub fn prepare_based(words: &[Word], m: u32) -> Result<BasedGraph> {
    stallings_graph(words, m)
}

/// Connected core graph of the subgroup; rejects the trivial and cyclic
/// cases, for which the ratio coefficient is undefined.
pub fn prepare_core(words: &[Word], m: u32) -> Result<UmGraph> {
    let based = stallings_graph(words, m)?;
    let core = based.graph.core();
    if core.is_empty() || core.reduced_rank()? == 0 {
        return Err(Error::RankZero);
    }
    Ok(core)
}

/// Headline numbers of a full solve: the coefficient, the program size,
/// and the verified witness.
#[derive(Clone, Debug)]
pub struct SigmaReport {
    pub m: u32,
    pub vertices: usize,
    pub edges: usize,
    pub brr: u64,
    pub sigma: Rational,
    pub optimum: Rational,
    pub m_inq: usize,
    pub n_inq: usize,
    pub lp_pivots: u64,
    pub witness_vertices: usize,
    pub witness_edges: usize,
    pub witness_brr: u64,
    pub witness_connected: bool,
    pub witness_size_ok: bool,
    pub product_brr: u64,
    pub millis: u128,
}

impl SigmaReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "m": self.m,
            "vertices": self.vertices,
            "edges": self.edges,
            "reduced_rank": self.brr,
            "sigma": self.sigma.to_string(),
            "lp": {
                "optimum": self.optimum.to_string(),
                "inequalities": self.m_inq,
                "variables": self.n_inq,
                "pivots": self.lp_pivots,
            },
            "witness": {
                "vertices": self.witness_vertices,
                "edges": self.witness_edges,
                "reduced_rank": self.witness_brr,
                "connected": self.witness_connected,
                "size_bound_ok": self.witness_size_ok,
                "pullback_reduced_rank": self.product_brr,
            },
            "millis": self.millis,
        })
    }
}

/// Solves and fully verifies one core graph.
pub fn sigma_report(core: &UmGraph) -> Result<(SigmaReport, WitnessReport)> {
    let t0 = Instant::now();
    let rep = compute_witness(core)?;
    let out = SigmaReport {
        m: core.m(),
        vertices: core.vertex_count(),
        edges: core.edge_count(),
        brr: core.reduced_rank()?,
        sigma: rep.sigma.clone(),
        optimum: rep.optimum.clone(),
        m_inq: rep.m_inq,
        n_inq: rep.n_inq,
        lp_pivots: rep.lp_pivots,
        witness_vertices: rep.graph.vertex_count(),
        witness_edges: rep.graph.edge_count(),
        witness_brr: rep.witness_brr,
        witness_connected: rep.connected,
        witness_size_ok: rep.size_ok,
        product_brr: rep.product_brr,
        millis: t0.elapsed().as_millis(),
    };
    Ok((out, rep))
}

/// σ·brr ≤ 1 test; a subgroup with this property cannot lose rank inside
/// any overgroup intersection.
#[derive(Clone, Debug)]
pub struct InertReport {
    pub sigma: Rational,
    pub brr: u64,
    pub product: Rational,
    pub strongly_inert: bool,
}

impl InertReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "sigma": self.sigma.to_string(),
            "reduced_rank": self.brr,
            "sigma_times_rank": self.product.to_string(),
            "strongly_inert": self.strongly_inert,
        })
    }
}

pub fn strongly_inert(core: &UmGraph) -> Result<InertReport> {
    core.check_immersed()?;
    core.check_core()?;
    if !core.is_connected() {
        return Err(Error::NotConnected);
    }
    let brr = core.reduced_rank()?;
    if brr == 0 {
        return Err(Error::RankZero);
    }
    let sys = build_sli(core)?;
    let lp = solve_sigma_lp(&sys, brr)?;
    let product = &lp.sigma * ratio::int(brr as i64);
    let strongly_inert = product <= ratio::int(1);
    Ok(InertReport { sigma: lp.sigma, brr, product, strongly_inert })
}

/// Result of the exhaustive quotient search.
#[derive(Clone, Debug)]
pub struct CompressedReport {
    pub compressed: bool,
    pub brr: u64,
    /// A quotient graph of strictly smaller reduced rank, when one exists.
    pub counterexample: Option<UmGraph>,
    /// Distinct quotients visited.
    pub checked: usize,
}

impl CompressedReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "compressed": self.compressed,
            "reduced_rank": self.brr,
            "quotients_checked": self.checked,
            "counterexample": self
                .counterexample
                .as_ref()
                .map(|g| crate::io::graph_to_json(g, None)),
        })
    }
}

/// Decides whether every overgroup has reduced rank at least as large, by
/// breadth-first search over all quotients of the core graph.
///
/// Every surjective label-preserving map onto an immersed graph factors as
/// a chain of single vertex identifications followed by folding, so the
/// search is exhaustive. Quotients of a core graph stay core (folding a
/// graph whose vertices all have distinct-label stars never drops a
/// degree below 2), hence their reduced rank is plain edges − vertices.
pub fn is_compressed(core: &UmGraph) -> Result<CompressedReport> {
    core.check_immersed()?;
    core.check_core()?;
    if core.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let brr0 = core.reduced_rank()?;
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(core.canonical_code());
    queue.push_back(core.clone());
    let mut checked = 1usize;
    while let Some(g) = queue.pop_front() {
        let vs: Vec<usize> = g.vertices().collect();
        for (ai, &u) in vs.iter().enumerate() {
            for &v in &vs[ai + 1..] {
                if g.vtype(u) != g.vtype(v) {
                    continue;
                }
                let (q, _) = g.merge_vertices(u, v)?.folded();
                if !seen.insert(q.canonical_code()) {
                    continue;
                }
                checked += 1;
                debug_assert!(q.is_immersed() && q.is_core());
                if q.reduced_rank()? < brr0 {
                    return Ok(CompressedReport {
                        compressed: false,
                        brr: brr0,
                        counterexample: Some(q),
                        checked,
                    });
                }
                queue.push_back(q);
            }
        }
    }
    Ok(CompressedReport { compressed: true, brr: brr0, counterexample: None, checked })
}

/// Intersection bound check for one pair of core graphs: the pullback's
/// reduced rank against the product of the two ranks, both the sharp and
/// the doubled classical bound.
#[derive(Clone, Debug)]
pub struct ShncReport {
    pub brr1: u64,
    pub brr2: u64,
    pub product_brr: u64,
    pub holds: bool,
    pub weak_holds: bool,
}

impl ShncReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "reduced_rank_1": self.brr1,
            "reduced_rank_2": self.brr2,
            "pullback_reduced_rank": self.product_brr,
            "sharp_bound_holds": self.holds,
            "doubled_bound_holds": self.weak_holds,
        })
    }
}

pub fn shnc_check(y1: &UmGraph, y2: &UmGraph) -> Result<ShncReport> {
    for g in [y1, y2] {
        g.check_immersed()?;
        g.check_core()?;
    }
    let brr1 = y1.reduced_rank()?;
    let brr2 = y2.reduced_rank()?;
    let product_brr = pullback_core(y1, y2)?.graph().reduced_rank()?;
    Ok(ShncReport {
        brr1,
        brr2,
        product_brr,
        holds: product_brr <= brr1 * brr2,
        weak_holds: product_brr <= 2 * brr1 * brr2,
    })
}

/// Brute-force enumeration result over all candidate partner graphs.
#[derive(Clone, Debug)]
pub struct OracleReport {
    /// Largest pullback ratio over every enumerated partner.
    pub max_ratio: Rational,
    /// A partner attaining it.
    pub best: Option<UmGraph>,
    pub graphs_checked: u64,
    /// Largest single-component ratio: a heuristic lower bound reachable
    /// by one double coset alone.
    pub component_bound: Rational,
}

impl OracleReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "max_ratio": self.max_ratio.to_string(),
            "graphs_checked": self.graphs_checked,
            "component_bound": self.component_bound.to_string(),
            "best": self.best.as_ref().map(|g| crate::io::graph_to_json(g, None)),
        })
    }
}

fn partial_matchings(v1: usize, v2: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(
        i: usize,
        v1: usize,
        v2: usize,
        used: &mut [bool],
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if i == v1 {
            out.push(cur.clone());
            return;
        }
        rec(i + 1, v1, v2, used, cur, out);
        for j in 0..v2 {
            if used[j] {
                continue;
            }
            used[j] = true;
            cur.push((i, j));
            rec(i + 1, v1, v2, used, cur, out);
            cur.pop();
            used[j] = false;
        }
    }
    let mut out = Vec::new();
    rec(0, v1, v2, &mut vec![false; v2], &mut Vec::new(), &mut out);
    out
}

fn enumerate_split(
    m: u32,
    v1: usize,
    v2: usize,
    sink: &mut impl FnMut(&UmGraph),
) {
    let mats = partial_matchings(v1, v2);
    let mut deg1 = vec![0u32; v1];
    let mut deg2 = vec![0u32; v2];
    let mut chosen: Vec<usize> = Vec::with_capacity(m as usize);
    fn rec(
        label: u32,
        m: u32,
        mats: &[Vec<(usize, usize)>],
        deg1: &mut [u32],
        deg2: &mut [u32],
        chosen: &mut Vec<usize>,
        sink: &mut impl FnMut(&UmGraph),
    ) {
        let remaining = m - label;
        // Each remaining label adds at most one edge per vertex.
        if deg1.iter().chain(deg2.iter()).any(|&d| 2 - (d.min(2)) > remaining) {
            return;
        }
        if label == m {
            let mut g = UmGraph::new(m).expect("validated earlier");
            for _ in 0..deg1.len() {
                g.add_vertex(VType::One);
            }
            let off: Vec<usize> = (0..deg2.len()).map(|_| g.add_vertex(VType::Two)).collect();
            for (li, &mi) in chosen.iter().enumerate() {
                for &(a, b) in &mats[mi] {
                    g.add_edge(a, off[b], crate::words::Letter(li as u32 + 1))
                        .expect("matching edges are valid");
                }
            }
            sink(&g);
            return;
        }
        for (mi, mat) in mats.iter().enumerate() {
            for &(a, b) in mat {
                deg1[a] += 1;
                deg2[b] += 1;
            }
            chosen.push(mi);
            rec(label + 1, m, mats, deg1, deg2, chosen, sink);
            chosen.pop();
            for &(a, b) in mat {
                deg1[a] -= 1;
                deg2[b] -= 1;
            }
        }
    }
    rec(0, m, &mats, &mut deg1, &mut deg2, &mut chosen, sink);
}

/// Independent check of the solver: enumerates every connected immersed
/// core partner graph with at most `max_vertices` vertices (up to
/// isomorphism) and takes the exact maximum of the pullback ratio. The
/// maximum over *all* partners is the coefficient, so the result is a
/// lower bound that must never exceed the solved value.
pub fn oracle_enumerate(y1: &UmGraph, max_vertices: usize) -> Result<OracleReport> {
    if max_vertices < 2 {
        return Err(Error::BoundTooSmall(max_vertices));
    }
    y1.check_immersed()?;
    y1.check_core()?;
    if !y1.is_connected() {
        return Err(Error::NotConnected);
    }
    let brr1 = y1.reduced_rank()?;
    if brr1 == 0 {
        return Err(Error::RankZero);
    }
    let m = y1.m();
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut max_ratio = Rational::from_integer(0.into());
    let mut component_bound = max_ratio.clone();
    let mut best: Option<UmGraph> = None;
    let mut graphs_checked = 0u64;
    let mut failure: Option<Error> = None;
    for v1 in 1..max_vertices {
        for v2 in 1..=(max_vertices - v1) {
            enumerate_split(m, v1, v2, &mut |cand| {
                if failure.is_some() || !cand.is_connected() {
                    return;
                }
                let brr2 = cand.edge_count() as u64 - cand.vertex_count() as u64;
                if brr2 == 0 || !seen.insert(cand.canonical_code()) {
                    return;
                }
                graphs_checked += 1;
                let p = match pullback_core(y1, cand) {
                    Ok(p) => p,
                    Err(e) => {
                        failure = Some(e);
                        return;
                    }
                };
                let denom = ratio::int((brr1 * brr2) as i64);
                let brr_w = match p.graph().reduced_rank() {
                    Ok(b) => b,
                    Err(e) => {
                        failure = Some(e);
                        return;
                    }
                };
                let ratio_all = ratio::int(brr_w as i64) / &denom;
                if ratio_all > max_ratio {
                    max_ratio = ratio_all;
                    best = Some(cand.clone());
                }
                for comp in components(&p) {
                    let r = ratio::int(comp.brr as i64) / &denom;
                    if r > component_bound {
                        component_bound = r;
                    }
                }
            });
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(OracleReport { max_ratio, best, graphs_checked, component_bound })
}

/// Uniformly random reduced word of length 1..=`max_len` over the rank-n
/// free group's standard generators.
fn random_word(rng: &mut ChaCha8Rng, rank: u32, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len);
    let mut gens: Vec<Gen> = Vec::with_capacity(len);
    while gens.len() < len {
        let g = Gen::new(rng.gen_range(1..=rank), rng.gen_bool(0.5));
        if gens.last().is_some_and(|&p| p == g.inv()) {
            continue;
        }
        gens.push(g);
    }
    Word::new(gens)
}

/// Deterministic random word list for a given seed.
pub fn random_words(rng: &mut ChaCha8Rng, count: usize, rank: u32, max_len: usize) -> Vec<Word> {
    (0..count).map(|_| random_word(rng, rank, max_len)).collect()
}

/// Random noncyclic subgroup, returned as its connected core graph.
pub fn random_subgroup_core(
    rng: &mut ChaCha8Rng,
    m: u32,
    max_words: usize,
    max_len: usize,
) -> Result<UmGraph> {
    debug_assert!(max_words >= 2);
    for _ in 0..10_000 {
        let count = rng.gen_range(2..=max_words);
        let words = random_words(rng, count, m - 1, max_len);
        match prepare_core(&words, m) {
            Ok(core) => return Ok(core),
            Err(Error::RankZero) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Internal(
        "random generator failed to produce a noncyclic subgroup".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{frac, int};
    use rand::SeedableRng;

    fn words(list: &[&str]) -> Vec<Word> {
        list.iter().map(|s| Word::parse(s).unwrap()).collect()
    }

    #[test]
    fn trivial_and_cyclic_inputs_are_rejected() {
        assert!(matches!(
            prepare_core(&words(&["x1 x1^-1"]), 3),
            Err(Error::RankZero)
        ));
        assert!(matches!(
            prepare_core(&words(&["x1 x2"]), 3),
            Err(Error::RankZero)
        ));
        // The based graph is still available for such inputs.
        assert!(prepare_based(&words(&["x1 x2"]), 3).is_ok());
    }

    #[test]
    fn squares_subgroup_full_report() {
        let core = prepare_core(&words(&["x1 x1", "x2 x2", "x1 x2 x1 x2"]), 3).unwrap();
        let (rep, _) = sigma_report(&core).unwrap();
        assert_eq!(rep.sigma, int(1));
        assert_eq!(rep.brr, 2);
        assert_eq!(rep.product_brr, 2 * rep.witness_brr);
        let j = rep.to_json();
        assert_eq!(j["sigma"], "1");
        assert_eq!(j["reduced_rank"], 2);
    }

    #[test]
    fn inertness_flags() {
        let free2 = prepare_core(&words(&["x1", "x2"]), 3).unwrap();
        assert!(strongly_inert(&free2).unwrap().strongly_inert);
        let squares = prepare_core(&words(&["x1 x1", "x2 x2", "x1 x2 x1 x2"]), 3).unwrap();
        let rep = strongly_inert(&squares).unwrap();
        assert!(!rep.strongly_inert);
        assert_eq!(rep.product, int(2));
    }

    #[test]
    fn compression_flags() {
        // Rank above the ambient free group's is an immediate obstruction.
        let squares = prepare_core(&words(&["x1 x1", "x2 x2", "x1 x2 x1 x2"]), 3).unwrap();
        let rep = is_compressed(&squares).unwrap();
        assert!(!rep.compressed);
        let cex = rep.counterexample.unwrap();
        assert!(cex.reduced_rank().unwrap() < 2);

        // Two-vertex graphs have no identifications at all.
        let free2 = prepare_core(&words(&["x1", "x2"]), 3).unwrap();
        let rep = is_compressed(&free2).unwrap();
        assert!(rep.compressed);
        assert_eq!(rep.checked, 1);

        // A rank-1 subgroup is compressed; the search actually explores here.
        let sq1 = prepare_core(&words(&["x1 x1", "x2"]), 3).unwrap();
        let rep = is_compressed(&sq1).unwrap();
        assert!(rep.compressed);
        assert!(rep.checked > 1);

        let sub3 = prepare_core(&words(&["x1", "x2"]), 4).unwrap();
        assert!(is_compressed(&sub3).unwrap().compressed);
    }

    #[test]
    fn oracle_matches_solver_on_ambient_graphs() {
        let u3 = UmGraph::ambient(3).unwrap();
        let rep = oracle_enumerate(&u3, 4).unwrap();
        assert_eq!(rep.max_ratio, int(1));
        assert!(rep.best.is_some());
        assert!(rep.graphs_checked > 0);
        assert!(rep.component_bound <= rep.max_ratio);

        let u4 = UmGraph::ambient(4).unwrap();
        let rep = oracle_enumerate(&u4, 4).unwrap();
        assert_eq!(rep.max_ratio, frac(1, 2));
    }

    #[test]
    fn oracle_rejects_tiny_bounds() {
        let u3 = UmGraph::ambient(3).unwrap();
        assert!(matches!(oracle_enumerate(&u3, 1), Err(Error::BoundTooSmall(1))));
    }

    #[test]
    fn intersection_bound_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = random_subgroup_core(&mut rng, 3, 3, 5).unwrap();
            let b = random_subgroup_core(&mut rng, 3, 3, 5).unwrap();
            let rep = shnc_check(&a, &b).unwrap();
            assert!(rep.holds);
            assert!(rep.weak_holds);
        }
    }

    #[test]
    fn random_corpus_is_deterministic() {
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let w1 = random_words(&mut r1, 4, 2, 6);
        let w2 = random_words(&mut r2, 4, 2, 6);
        assert_eq!(w1, w2);
        assert!(w1.iter().all(|w| w.is_reduced() && !w.is_empty()));
    }
}
