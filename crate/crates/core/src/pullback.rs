//! Fiber products of labeled graphs and intersection ranks.
//!
//! The product of two graphs over the same ambient graph has a vertex for
//! every same-type vertex pair and an edge for every same-label edge pair.
//! Its core computes everything about how the two represented subgroups
//! intersect: components correspond to double cosets whose conjugated
//! intersection is nontrivial, and the component's reduced rank is the
//! reduced rank of that intersection.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{BasedGraph, UmGraph};
use crate::words::{loop_to_word, reduce_path, Step, Word};

/// Core of a fiber product, remembering where vertices and edges came from.
#[derive(Clone, Debug)]
pub struct ProductGraph {
    graph: UmGraph,
    vmap: Vec<(usize, usize)>,
    emap: Vec<(usize, usize)>,
}

impl ProductGraph {
    pub fn graph(&self) -> &UmGraph {
        &self.graph
    }

    /// For each product vertex, the originating pair (left, right).
    pub fn vmap(&self) -> &[(usize, usize)] {
        &self.vmap
    }

    /// For each product edge, the originating pair (left, right).
    pub fn emap(&self) -> &[(usize, usize)] {
        &self.emap
    }
}

/// Per-component data of a product core.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentReport {
    pub brr: u64,
    pub vertices: usize,
    pub edges: usize,
    /// Originating pair of the smallest vertex in the component.
    pub base_pair: (usize, usize),
    /// Double-coset representative `t`, when computed against based graphs.
    pub coset_word: Option<Word>,
    /// A nontrivial element of `H1 ∩ t H2 t^-1`, certifying that the
    /// conjugated intersection is nontrivial.
    pub intersection_word: Option<Word>,
}

fn full_product(y1: &UmGraph, y2: &UmGraph) -> (UmGraph, Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let mut g = UmGraph::new(y1.m()).expect("m validated by caller");
    let mut vmap = Vec::new();
    let mut index = vec![vec![usize::MAX; y2.vertex_count()]; y1.vertex_count()];
    for v1 in y1.vertices() {
        for v2 in y2.vertices() {
            if y1.vtype(v1) == y2.vtype(v2) {
                index[v1][v2] = g.add_vertex(y1.vtype(v1));
                vmap.push((v1, v2));
            }
        }
    }
    let mut emap = Vec::new();
    for (i1, e1) in y1.edges().iter().enumerate() {
        for (i2, e2) in y2.edges().iter().enumerate() {
            if e1.label == e2.label {
                g.add_edge(index[e1.from][e2.from], index[e1.to][e2.to], e1.label)
                    .expect("product endpoints are valid by construction");
                emap.push((i1, i2));
            }
        }
    }
    (g, vmap, emap)
}

/// Core of the fiber product of two immersed graphs over the same ambient
/// graph.
pub fn pullback_core(y1: &UmGraph, y2: &UmGraph) -> Result<ProductGraph> {
    if y1.m() != y2.m() {
        return Err(Error::MismatchedAmbient(y1.m(), y2.m()));
    }
    y1.check_immersed()?;
    y2.check_immersed()?;
    let (full, vmap_full, emap_full) = full_product(y1, y2);
    let (core, vmap_core, emap_core) = full.core_with_map();
    let mut vmap = vec![(0, 0); core.vertex_count()];
    for (old, new) in vmap_core.iter().enumerate() {
        if let Some(n) = new {
            vmap[*n] = vmap_full[old];
        }
    }
    let mut emap = vec![(0, 0); core.edge_count()];
    for (old, new) in emap_core.iter().enumerate() {
        if let Some(n) = new {
            emap[*n] = emap_full[old];
        }
    }
    Ok(ProductGraph { graph: core, vmap, emap })
}

/// Components of a product core with their ranks and sizes.
pub fn components(p: &ProductGraph) -> Vec<ComponentReport> {
    let comps = p.graph.components();
    let mut edge_comp_count = vec![0usize; comps.len()];
    let mut comp_of = vec![usize::MAX; p.graph.vertex_count()];
    for (ci, members) in comps.iter().enumerate() {
        for &v in members {
            comp_of[v] = ci;
        }
    }
    for e in p.graph.edges() {
        edge_comp_count[comp_of[e.from]] += 1;
    }
    comps
        .iter()
        .enumerate()
        .map(|(ci, members)| ComponentReport {
            brr: (edge_comp_count[ci] - members.len()) as u64,
            vertices: members.len(),
            edges: edge_comp_count[ci],
            base_pair: p.vmap[members[0]],
            coset_word: None,
            intersection_word: None,
        })
        .collect()
}

/// A reduced, nontrivial closed path at `at`, using only edges flagged in
/// `allowed`: the fundamental cycle of some non-tree edge of a breadth-first
/// spanning tree. Requires the allowed subgraph around `at` to contain a
/// cycle through its component, which holds for every core component.
fn fundamental_cycle(g: &UmGraph, allowed: &[bool], at: usize) -> Option<Vec<Step>> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.vertex_count()];
    for (i, e) in g.edges().iter().enumerate() {
        if allowed[i] {
            adj[e.from].push((i, e.to));
            adj[e.to].push((i, e.from));
        }
    }
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; g.vertex_count()];
    let mut seen = vec![false; g.vertex_count()];
    let mut tree_edge = vec![false; g.edge_count()];
    seen[at] = true;
    let mut queue = VecDeque::from([at]);
    while let Some(v) = queue.pop_front() {
        for &(e, u) in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                tree_edge[e] = true;
                prev[u] = Some((v, e));
                queue.push_back(u);
            }
        }
    }
    let tree_path = |mut v: usize| -> Vec<Step> {
        let mut steps = Vec::new();
        while let Some((p, e)) = prev[v] {
            let rec = g.edge(e);
            steps.push(Step { label: rec.label, forward: rec.from == p });
            v = p;
        }
        steps.reverse();
        steps
    };
    for (i, e) in g.edges().iter().enumerate() {
        if allowed[i] && !tree_edge[i] && seen[e.from] {
            let mut steps = tree_path(e.from);
            steps.push(Step { label: e.label, forward: true });
            let back = tree_path(e.to);
            steps.extend(back.iter().rev().map(|s| s.inv()));
            let reduced = reduce_path(&steps);
            debug_assert!(!reduced.is_empty());
            return Some(reduced);
        }
    }
    None
}

/// Reduced rank of the intersection pattern: the total reduced rank of the
/// product core. Symmetric in its arguments.
pub fn generalized_reduced_rank(y1: &UmGraph, y2: &UmGraph) -> Result<u64> {
    y1.check_core()?;
    y2.check_core()?;
    pullback_core(y1, y2)?.graph.reduced_rank()
}

/// Breadth-first path between two vertices, as ambient steps; neighbor order
/// follows edge ids, so the result is deterministic.
fn bfs_path(g: &UmGraph, from: usize, to: usize) -> Option<Vec<Step>> {
    if from == to {
        return Some(Vec::new());
    }
    let mut adj: Vec<Vec<(usize, Step)>> = vec![Vec::new(); g.vertex_count()];
    for e in g.edges() {
        adj[e.from].push((e.to, Step { label: e.label, forward: true }));
        adj[e.to].push((e.from, Step { label: e.label, forward: false }));
    }
    let mut prev: Vec<Option<(usize, Step)>> = vec![None; g.vertex_count()];
    let mut seen = vec![false; g.vertex_count()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        for &(u, step) in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                prev[u] = Some((v, step));
                if u == to {
                    let mut steps = Vec::new();
                    let mut cur = to;
                    while cur != from {
                        let (p, s) = prev[cur].unwrap();
                        steps.push(s);
                        cur = p;
                    }
                    steps.reverse();
                    return Some(steps);
                }
                queue.push_back(u);
            }
        }
    }
    None
}

/// Component table of the product of two based graphs. Every component whose
/// core is nonempty gets a double-coset representative word `t`: conjugating
/// the second subgroup by `t` meets the first one nontrivially, and distinct
/// components give distinct double cosets.
pub fn component_table(y1: &BasedGraph, y2: &BasedGraph) -> Result<Vec<ComponentReport>> {
    if y1.graph.m() != y2.graph.m() {
        return Err(Error::MismatchedAmbient(y1.graph.m(), y2.graph.m()));
    }
    let m = y1.graph.m();
    y1.graph.check_immersed()?;
    y2.graph.check_immersed()?;
    let (full, vmap_full, _) = full_product(&y1.graph, &y2.graph);
    let (_, vmap_core, emap_core) = full.core_with_map();
    let comps = full.components();
    let mut comp_of = vec![usize::MAX; full.vertex_count()];
    for (ci, members) in comps.iter().enumerate() {
        for &v in members {
            comp_of[v] = ci;
        }
    }
    let mut core_vertices = vec![0usize; comps.len()];
    let mut core_edges = vec![0usize; comps.len()];
    for (v, mapped) in vmap_core.iter().enumerate() {
        if mapped.is_some() {
            core_vertices[comp_of[v]] += 1;
        }
    }
    for (e, mapped) in emap_core.iter().enumerate() {
        if mapped.is_some() {
            core_edges[comp_of[full.edge(e).from]] += 1;
        }
    }
    let base_pair_vertex = vmap_full
        .iter()
        .position(|&(a, b)| (a, b) == (y1.base, y2.base));
    let core_flags: Vec<bool> = emap_core.iter().map(|e| e.is_some()).collect();
    let mut out = Vec::new();
    for (ci, members) in comps.iter().enumerate() {
        if core_vertices[ci] == 0 {
            continue;
        }
        let brr = (core_edges[ci] - core_vertices[ci]) as u64;
        // Representative: the base pair when it sits in this component,
        // otherwise the smallest vertex whose core survives.
        let rep = match base_pair_vertex {
            Some(bp) if comp_of[bp] == ci => bp,
            _ => *members
                .iter()
                .find(|&&v| vmap_core[v].is_some())
                .expect("component has core vertices"),
        };
        let (u1, u2) = vmap_full[rep];
        let p1 = bfs_path(&y1.graph, y1.base, u1).ok_or(Error::NotConnected)?;
        let p2 = bfs_path(&y2.graph, y2.base, u2).ok_or(Error::NotConnected)?;
        let mut steps = p1.clone();
        steps.extend(p2.iter().rev().map(|s| s.inv()));
        let word = loop_to_word(&reduce_path(&steps), m)?;
        // Certificate: walk from the representative to a core vertex, go
        // around a cycle of the core part, and come back; conjugated by the
        // path from the first base this is a nontrivial element of
        // H1 ∩ t H2 t^-1.
        let x0 = *members
            .iter()
            .find(|&&v| vmap_core[v].is_some())
            .expect("component has core vertices");
        let s1 = bfs_path(&full, rep, x0).expect("same component");
        let cycle = fundamental_cycle(&full, &core_flags, x0)
            .ok_or_else(|| Error::Internal("core component without a cycle".into()))?;
        let mut cert = p1.clone();
        cert.extend(&s1);
        cert.extend(&cycle);
        cert.extend(s1.iter().rev().map(|s| s.inv()));
        cert.extend(p1.iter().rev().map(|s| s.inv()));
        let hword = loop_to_word(&reduce_path(&cert), m)?;
        out.push(ComponentReport {
            brr,
            vertices: core_vertices[ci],
            edges: core_edges[ci],
            base_pair: (u1, u2),
            coset_word: Some(word),
            intersection_word: Some(hword),
        });
    }
    Ok(out)
}

/// Double-coset representatives of components with positive reduced rank.
pub fn double_coset_reps(y1: &BasedGraph, y2: &BasedGraph) -> Result<Vec<Word>> {
    Ok(component_table(y1, y2)?
        .into_iter()
        .filter(|c| c.brr > 0)
        .map(|c| c.coset_word.expect("component_table fills words"))
        .collect())
}

/// True when the product core covers all of `y2` (every vertex and edge of
/// `y2` has a preimage).
pub fn covers(y1: &UmGraph, y2: &UmGraph) -> Result<bool> {
    let p = pullback_core(y1, y2)?;
    let mut v_hit = vec![false; y2.vertex_count()];
    let mut e_hit = vec![false; y2.edge_count()];
    for &(_, v2) in p.vmap() {
        v_hit[v2] = true;
    }
    for &(_, e2) in p.emap() {
        e_hit[e2] = true;
    }
    Ok(v_hit.iter().all(|&b| b) && e_hit.iter().all(|&b| b))
}

/// Shrinks `y2` to the largest core subgraph fully covered by its product
/// with `y1`; `None` when nothing survives. The result, if any, satisfies
/// [`covers`] against `y1`.
pub fn covered_restriction(y1: &UmGraph, y2: &UmGraph) -> Result<Option<UmGraph>> {
    let mut cur = y2.core();
    loop {
        if cur.is_empty() {
            return Ok(None);
        }
        let p = pullback_core(y1, &cur)?;
        let mut keep_v = vec![false; cur.vertex_count()];
        let mut keep_e = vec![false; cur.edge_count()];
        for &(_, v2) in p.vmap() {
            keep_v[v2] = true;
        }
        for &(_, e2) in p.emap() {
            keep_e[e2] = true;
        }
        if keep_v.iter().all(|&b| b) && keep_e.iter().all(|&b| b) {
            return Ok(Some(cur));
        }
        let (g, _, _) = cur.retain(&keep_v, &keep_e);
        cur = g.core();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::stallings_graph;
    use crate::words::Word;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn subgroup(list: &[&str], m: u32) -> BasedGraph {
        let words: Vec<Word> = list.iter().map(|s| w(s)).collect();
        stallings_graph(&words, m).unwrap()
    }

    #[test]
    fn disjoint_loops_have_empty_product_core() {
        let y1 = subgroup(&["x1"], 3);
        let y2 = subgroup(&["x2"], 3);
        let p = pullback_core(&y1.graph, &y2.graph).unwrap();
        assert!(p.graph().is_empty());
        assert_eq!(generalized_reduced_rank(&y1.graph, &y2.graph).unwrap(), 0);
    }

    #[test]
    fn ambient_product_with_itself_is_diagonal() {
        let u3 = UmGraph::ambient(3).unwrap();
        let p = pullback_core(&u3, &u3).unwrap();
        assert_eq!(p.graph().canonical_code(), u3.canonical_code());
        let comps = components(&p);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].brr, 1);
        assert_eq!(comps[0].vertices, 2);
        assert_eq!(comps[0].edges, 3);
    }

    #[test]
    fn product_with_ambient_is_identity() {
        let y = subgroup(&["x1 x2", "x2 x1"], 3);
        let core = y.graph.core();
        let u3 = UmGraph::ambient(3).unwrap();
        let p = pullback_core(&core, &u3).unwrap();
        assert_eq!(p.graph().canonical_code(), core.canonical_code());
    }

    #[test]
    fn basis_subgroups_meeting_in_rank_zero() {
        let y1 = subgroup(&["x1", "x2"], 4);
        let y2 = subgroup(&["x1", "x3"], 4);
        assert_eq!(generalized_reduced_rank(&y1.graph, &y2.graph).unwrap(), 0);
    }

    #[test]
    fn rank_is_symmetric() {
        let y1 = subgroup(&["x1 x1", "x2"], 3);
        let y2 = subgroup(&["x1", "x2 x2"], 3);
        let r12 = generalized_reduced_rank(&y1.graph.core(), &y2.graph.core()).unwrap();
        let r21 = generalized_reduced_rank(&y2.graph.core(), &y1.graph.core()).unwrap();
        assert_eq!(r12, r21);
    }

    #[test]
    fn mismatched_ambient_is_rejected() {
        let y1 = subgroup(&["x1"], 3);
        let y2 = subgroup(&["x1"], 4);
        assert!(matches!(
            pullback_core(&y1.graph, &y2.graph),
            Err(Error::MismatchedAmbient(3, 4))
        ));
    }

    #[test]
    fn diagonal_coset_is_trivial_word() {
        let y = subgroup(&["x1 x1", "x2"], 3);
        let reps = double_coset_reps(&y, &y).unwrap();
        assert!(reps.contains(&Word::empty()));
        // Every representative conjugate meets the subgroup nontrivially;
        // check the diagonal entry is the identity coset.
        let table = component_table(&y, &y).unwrap();
        let diagonal = table
            .iter()
            .find(|c| c.coset_word.as_ref() == Some(&Word::empty()))
            .expect("diagonal component present");
        assert_eq!(diagonal.brr, 1);
    }

    #[test]
    fn coset_words_give_nontrivial_conjugated_intersections() {
        let pairs = [
            (vec!["x1 x1", "x2"], vec!["x1 x1", "x2 x1"], 3u32),
            (vec!["x1", "x2 x2"], vec!["x2", "x1 x2 x1^-1"], 3),
            (vec!["x1 x2 x3"], vec!["x2 x3 x1"], 4),
            (vec!["x1 x1", "x2 x2", "x1 x2"], vec!["x1", "x2"], 3),
        ];
        for (g1, g2, m) in &pairs {
            let y1 = subgroup(g1, *m);
            let y2 = subgroup(g2, *m);
            let table = component_table(&y1, &y2).unwrap();
            assert!(!table.is_empty(), "{g1:?} vs {g2:?} share no component");
            let mut seen_words = Vec::new();
            for comp in &table {
                let t = comp.coset_word.as_ref().unwrap();
                let h = comp.intersection_word.as_ref().unwrap();
                // The certificate is a nontrivial member of H1 ∩ t H2 t^-1.
                assert!(!h.is_empty());
                assert!(y1.accepts(h).unwrap(), "h={h} outside H1");
                let conj = t.inverse().concat(h).concat(t);
                assert!(y2.accepts(&conj).unwrap(), "t^-1 h t={conj} outside H2");
                assert!(!seen_words.contains(&t), "duplicate coset representative");
                seen_words.push(t);
            }
        }
    }

    #[test]
    fn covered_restriction_reaches_surjective_pair() {
        let y1 = subgroup(&["x1 x1", "x2"], 3).graph.core();
        let y2 = subgroup(&["x1", "x2 x2"], 3).graph.core();
        match covered_restriction(&y1, &y2).unwrap() {
            Some(r) => {
                assert!(covers(&y1, &r).unwrap());
                assert!(r.is_core());
            }
            None => {
                // Then even the full pair shares nothing.
                assert_eq!(generalized_reduced_rank(&y1, &y2).unwrap(), 0);
            }
        }
        // Restricting the ambient graph against anything immersed covers.
        let u3 = UmGraph::ambient(3).unwrap();
        let r = covered_restriction(&y1, &u3).unwrap().unwrap();
        assert!(covers(&y1, &r).unwrap());
    }
}
