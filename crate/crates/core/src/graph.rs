//! Bipartite labeled graphs over the two-vertex ambient graph, with folding,
//! Stallings-style subgroup graphs, cores, and reduced ranks.
//!
//! A graph here carries a parameter `m >= 3`. Vertices have type 1 or type 2;
//! every stored edge joins a type-1 vertex to a type-2 vertex and carries a
//! label in `1..=m`. Stored edges stand for both orientations, so the oriented
//! edge count is twice the stored count. A graph is *immersed* when no vertex
//! has two incident edges with the same label, and a *core* when no vertex has
//! degree 0 or 1.

use std::collections::{HashMap, VecDeque};

use num_rational::BigRational;
use num_traits::FromPrimitive;

use crate::error::{Error, Result};
use crate::words::{word_to_loop, Letter, Word};

/// Vertex type: which ambient vertex the vertex maps to.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum VType {
    One,
    Two,
}

impl VType {
    pub fn as_u8(self) -> u8 {
        match self {
            VType::One => 1,
            VType::Two => 2,
        }
    }

    pub fn from_u8(v: u8) -> Option<VType> {
        match v {
            1 => Some(VType::One),
            2 => Some(VType::Two),
            _ => None,
        }
    }
}

/// Stored edge: always directed from its type-1 endpoint to its type-2
/// endpoint.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EdgeRec {
    pub from: usize,
    pub to: usize,
    pub label: Letter,
}

/// A finite graph over the ambient graph with `m` edges.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UmGraph {
    m: u32,
    vtypes: Vec<VType>,
    edges: Vec<EdgeRec>,
}

impl UmGraph {
    pub fn new(m: u32) -> Result<UmGraph> {
        if m < 3 {
            return Err(Error::AmbientTooSmall(m));
        }
        Ok(UmGraph { m, vtypes: Vec::new(), edges: Vec::new() })
    }

    /// The ambient graph itself: one vertex of each type, one edge per label.
    pub fn ambient(m: u32) -> Result<UmGraph> {
        let mut g = UmGraph::new(m)?;
        let one = g.add_vertex(VType::One);
        let two = g.add_vertex(VType::Two);
        for j in 1..=m {
            g.add_edge(one, two, Letter(j))?;
        }
        Ok(g)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn vertex_count(&self) -> usize {
        self.vtypes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Oriented edge count: both directions of every stored edge.
    pub fn oriented_edge_count(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vtypes.is_empty()
    }

    pub fn vtype(&self, v: usize) -> VType {
        self.vtypes[v]
    }

    pub fn edge(&self, e: usize) -> EdgeRec {
        self.edges[e]
    }

    pub fn edges(&self) -> &[EdgeRec] {
        &self.edges
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        0..self.vtypes.len()
    }

    pub fn vertices_of_type(&self, t: VType) -> Vec<usize> {
        self.vertices().filter(|&v| self.vtypes[v] == t).collect()
    }

    pub fn add_vertex(&mut self, t: VType) -> usize {
        self.vtypes.push(t);
        self.vtypes.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize, label: Letter) -> Result<usize> {
        if from >= self.vtypes.len() {
            return Err(Error::UnknownVertex(from));
        }
        if to >= self.vtypes.len() {
            return Err(Error::UnknownVertex(to));
        }
        if self.vtypes[from] != VType::One || self.vtypes[to] != VType::Two {
            return Err(Error::InvalidGraph(format!(
                "edge {from}->{to} must join a type-1 vertex to a type-2 vertex"
            )));
        }
        if label.0 == 0 || label.0 > self.m {
            return Err(Error::InvalidGraph(format!(
                "edge label {} out of range 1..={}",
                label.0, self.m
            )));
        }
        self.edges.push(EdgeRec { from, to, label });
        Ok(self.edges.len() - 1)
    }

    /// Ids of stored edges incident to `v`, in id order.
    pub fn edges_at(&self, v: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].from == v || self.edges[e].to == v)
            .collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.from == v || e.to == v).count()
    }

    fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.vtypes.len()];
        for e in &self.edges {
            deg[e.from] += 1;
            deg[e.to] += 1;
        }
        deg
    }

    /// Ids of stored edges with the given label, in id order.
    pub fn edges_with_label(&self, label: Letter) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].label == label).collect()
    }

    /// The endpoint of edge `e` on the side of vertex type `t`.
    pub fn endpoint(&self, e: usize, t: VType) -> usize {
        match t {
            VType::One => self.edges[e].from,
            VType::Two => self.edges[e].to,
        }
    }

    /// Checks that no vertex carries two same-label edges on the same side.
    pub fn check_immersed(&self) -> Result<()> {
        let mut seen: HashMap<(usize, u32), ()> = HashMap::new();
        for e in &self.edges {
            for (v, side) in [(e.from, 1u8), (e.to, 2u8)] {
                if seen.insert((v, e.label.0 * 2 + side as u32), ()).is_some() {
                    return Err(Error::NotImmersed { vertex: v, side, label: e.label.0 });
                }
            }
        }
        Ok(())
    }

    pub fn is_immersed(&self) -> bool {
        self.check_immersed().is_ok()
    }

    /// Keeps the flagged vertices and the flagged edges whose endpoints both
    /// survive; returns the new graph plus vertex and edge translation maps.
    pub fn retain(
        &self,
        keep_v: &[bool],
        keep_e: &[bool],
    ) -> (UmGraph, Vec<Option<usize>>, Vec<Option<usize>>) {
        let mut vmap = vec![None; self.vtypes.len()];
        let mut g = UmGraph { m: self.m, vtypes: Vec::new(), edges: Vec::new() };
        for v in 0..self.vtypes.len() {
            if keep_v[v] {
                vmap[v] = Some(g.add_vertex(self.vtypes[v]));
            }
        }
        let mut emap = vec![None; self.edges.len()];
        for (i, e) in self.edges.iter().enumerate() {
            if keep_e[i] && keep_v[e.from] && keep_v[e.to] {
                emap[i] = Some(g.edges.len());
                g.edges.push(EdgeRec {
                    from: vmap[e.from].unwrap(),
                    to: vmap[e.to].unwrap(),
                    label: e.label,
                });
            }
        }
        (g, vmap, emap)
    }

    /// Iteratively deletes degree-0 and degree-1 vertices (with incident
    /// edges) until every remaining vertex has degree at least 2. Returns the
    /// pruned graph plus translation maps.
    pub fn core_with_map(&self) -> (UmGraph, Vec<Option<usize>>, Vec<Option<usize>>) {
        let mut keep_v = vec![true; self.vtypes.len()];
        let mut keep_e = vec![true; self.edges.len()];
        loop {
            let mut deg = vec![0usize; self.vtypes.len()];
            for (i, e) in self.edges.iter().enumerate() {
                if keep_e[i] && keep_v[e.from] && keep_v[e.to] {
                    deg[e.from] += 1;
                    deg[e.to] += 1;
                }
            }
            let mut changed = false;
            for v in 0..self.vtypes.len() {
                if keep_v[v] && deg[v] <= 1 {
                    keep_v[v] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            for (i, e) in self.edges.iter().enumerate() {
                if keep_e[i] && (!keep_v[e.from] || !keep_v[e.to]) {
                    keep_e[i] = false;
                }
            }
        }
        self.retain(&keep_v, &keep_e)
    }

    pub fn core(&self) -> UmGraph {
        self.core_with_map().0
    }

    /// True when no vertex has degree 0 or 1; the empty graph counts.
    pub fn is_core(&self) -> bool {
        self.check_core().is_ok()
    }

    pub fn check_core(&self) -> Result<()> {
        match self.degrees().iter().position(|&d| d <= 1) {
            Some(v) => Err(Error::NotCore(v)),
            None => Ok(()),
        }
    }

    /// Reduced rank: sum over components of max(rank - 1, 0). Defined for
    /// graphs that equal their core, where it is just `edges - vertices`.
    pub fn reduced_rank(&self) -> Result<u64> {
        self.check_core()?;
        debug_assert!(self.edges.len() >= self.vtypes.len() || self.is_empty());
        Ok((self.edges.len() - self.vtypes.len()) as u64)
    }

    /// Reduced rank concentrated on one vertex type:
    /// `(1/2) * sum over type-t vertices of (deg - 2)`. The two sides add up
    /// to the reduced rank.
    pub fn brr_side(&self, t: VType) -> Result<BigRational> {
        self.check_core()?;
        let deg = self.degrees();
        let total: i64 = self
            .vertices()
            .filter(|&v| self.vtypes[v] == t)
            .map(|v| deg[v] as i64 - 2)
            .sum();
        Ok(BigRational::from_i64(total).unwrap() / BigRational::from_i64(2).unwrap())
    }

    /// Connected components as sorted vertex lists, ordered by smallest
    /// member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.vtypes.len()];
        for e in &self.edges {
            adj[e.from].push(e.to);
            adj[e.to].push(e.from);
        }
        let mut comp = vec![usize::MAX; self.vtypes.len()];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for s in 0..self.vtypes.len() {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &u in &adj[v] {
                    if comp[u] == usize::MAX {
                        comp[u] = id;
                        members.push(u);
                        queue.push_back(u);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Copy of the graph with vertices and edges renumbered by the given
    /// permutations (`vperm[old] = new`).
    pub fn permuted(&self, vperm: &[usize], eperm: &[usize]) -> UmGraph {
        let mut vtypes = vec![VType::One; self.vtypes.len()];
        for (old, &new) in vperm.iter().enumerate() {
            vtypes[new] = self.vtypes[old];
        }
        let mut edges = vec![EdgeRec { from: 0, to: 0, label: Letter(0) }; self.edges.len()];
        for (old, &new) in eperm.iter().enumerate() {
            let e = self.edges[old];
            edges[new] = EdgeRec { from: vperm[e.from], to: vperm[e.to], label: e.label };
        }
        UmGraph { m: self.m, vtypes, edges }
    }

    /// Quotient by identifying vertices `u` and `v` of equal type (no folding
    /// applied).
    pub fn merge_vertices(&self, u: usize, v: usize) -> Result<UmGraph> {
        if u >= self.vtypes.len() {
            return Err(Error::UnknownVertex(u));
        }
        if v >= self.vtypes.len() {
            return Err(Error::UnknownVertex(v));
        }
        if self.vtypes[u] != self.vtypes[v] {
            return Err(Error::InvalidGraph(format!(
                "cannot identify vertices {u} and {v} of different types"
            )));
        }
        let (lo, hi) = (u.min(v), u.max(v));
        let mut g = UmGraph { m: self.m, vtypes: Vec::new(), edges: Vec::new() };
        let mut vmap = vec![0usize; self.vtypes.len()];
        for w in 0..self.vtypes.len() {
            if w == hi {
                continue;
            }
            vmap[w] = g.add_vertex(self.vtypes[w]);
        }
        vmap[hi] = vmap[lo];
        for e in &self.edges {
            g.edges.push(EdgeRec { from: vmap[e.from], to: vmap[e.to], label: e.label });
        }
        Ok(g)
    }

    /// Folds until immersed: while two same-label edges share an endpoint,
    /// identify their far endpoints and merge the edges. Returns the folded
    /// graph and the vertex translation map.
    pub fn folded(&self) -> (UmGraph, Vec<usize>) {
        let mut dsu = Dsu::new(self.vtypes.len());
        let mut live: Vec<bool> = vec![true; self.edges.len()];
        loop {
            let mut changed = false;
            let mut by_from: HashMap<(usize, u32), usize> = HashMap::new();
            let mut by_to: HashMap<(usize, u32), usize> = HashMap::new();
            for i in 0..self.edges.len() {
                if !live[i] {
                    continue;
                }
                let e = self.edges[i];
                let (f, t) = (dsu.find(e.from), dsu.find(e.to));
                if let Some(&j) = by_from.get(&(f, e.label.0)) {
                    let other = dsu.find(self.edges[j].to);
                    if other != t {
                        dsu.union(other, t);
                    }
                    live[i] = false;
                    changed = true;
                    continue;
                }
                if let Some(&j) = by_to.get(&(t, e.label.0)) {
                    let other = dsu.find(self.edges[j].from);
                    if other != f {
                        dsu.union(other, f);
                    }
                    live[i] = false;
                    changed = true;
                    continue;
                }
                by_from.insert((f, e.label.0), i);
                by_to.insert((t, e.label.0), i);
            }
            if !changed {
                break;
            }
        }
        let mut vmap = vec![usize::MAX; self.vtypes.len()];
        let mut g = UmGraph { m: self.m, vtypes: Vec::new(), edges: Vec::new() };
        for v in 0..self.vtypes.len() {
            let root = dsu.find(v);
            if vmap[root] == usize::MAX {
                vmap[root] = g.add_vertex(self.vtypes[root]);
            }
            vmap[v] = vmap[root];
        }
        for (i, e) in self.edges.iter().enumerate() {
            if live[i] {
                g.edges.push(EdgeRec { from: vmap[e.from], to: vmap[e.to], label: e.label });
            }
        }
        debug_assert!(g.is_immersed());
        (g, vmap)
    }

    /// Isomorphism-invariant byte code: two graphs get equal codes exactly
    /// when a label- and type-preserving isomorphism exists between them.
    ///
    /// Immersed graphs use a deterministic traversal (each vertex has at most
    /// one edge per label, so a breadth-first walk from a fixed start is
    /// canonical; take the minimum over starts). Non-immersed graphs fall
    /// back to a backtracking minimization over vertex orders, which is only
    /// meant for the small transient graphs that exist before folding.
    pub fn canonical_code(&self) -> Vec<u8> {
        let comps = self.components();
        let mut codes: Vec<Vec<u32>> = if self.is_immersed() {
            comps.iter().map(|c| self.component_code_immersed(c)).collect()
        } else {
            comps.iter().map(|c| self.component_code_general(c)).collect()
        };
        codes.sort();
        let mut tokens: Vec<u32> = vec![
            self.m,
            self.vtypes.len() as u32,
            self.edges.len() as u32,
            codes.len() as u32,
        ];
        for c in codes {
            tokens.push(c.len() as u32);
            tokens.extend(c);
        }
        tokens.iter().flat_map(|t| t.to_be_bytes()).collect()
    }

    fn adjacency(&self) -> Vec<Vec<(u32, usize)>> {
        let mut adj: Vec<Vec<(u32, usize)>> = vec![Vec::new(); self.vtypes.len()];
        for e in &self.edges {
            adj[e.from].push((e.label.0, e.to));
            adj[e.to].push((e.label.0, e.from));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    fn component_code_immersed(&self, comp: &[usize]) -> Vec<u32> {
        let adj = self.adjacency();
        let mut best: Option<Vec<u32>> = None;
        for &start in comp {
            let mut idx: HashMap<usize, u32> = HashMap::new();
            let mut order = vec![start];
            idx.insert(start, 0);
            let mut code: Vec<u32> = Vec::new();
            let mut head = 0;
            while head < order.len() {
                let v = order[head];
                head += 1;
                code.push(self.vtypes[v].as_u8() as u32);
                code.push(adj[v].len() as u32);
                for &(label, u) in &adj[v] {
                    let ui = *idx.entry(u).or_insert_with(|| {
                        order.push(u);
                        (order.len() - 1) as u32
                    });
                    code.push(label);
                    code.push(ui);
                }
            }
            if best.as_ref().is_none_or(|b| code < *b) {
                best = Some(code);
            }
        }
        best.unwrap_or_default()
    }

    fn component_code_general(&self, comp: &[usize]) -> Vec<u32> {
        // Minimum adjacency encoding over all vertex orders of the component,
        // with prefix pruning. Each edge is encoded at its later endpoint as
        // (label, earlier position), so the full code determines the graph.
        let adj = self.adjacency();
        let mut best: Option<Vec<u32>> = None;
        let mut pos: HashMap<usize, u32> = HashMap::new();
        let mut chosen: Vec<usize> = Vec::new();
        let mut prefix: Vec<u32> = Vec::new();
        let mut lens: Vec<usize> = Vec::new();
        fn rec(
            g: &UmGraph,
            adj: &[Vec<(u32, usize)>],
            comp: &[usize],
            pos: &mut HashMap<usize, u32>,
            chosen: &mut Vec<usize>,
            prefix: &mut Vec<u32>,
            lens: &mut Vec<usize>,
            best: &mut Option<Vec<u32>>,
        ) {
            if chosen.len() == comp.len() {
                if best.as_ref().is_none_or(|b| *prefix < *b) {
                    *best = Some(prefix.clone());
                }
                return;
            }
            for &v in comp {
                if pos.contains_key(&v) {
                    continue;
                }
                let mut tokens: Vec<u32> = vec![g.vtypes[v].as_u8() as u32, adj[v].len() as u32];
                let mut back: Vec<(u32, u32)> = adj[v]
                    .iter()
                    .filter_map(|&(label, u)| pos.get(&u).map(|&p| (label, p)))
                    .collect();
                back.sort_unstable();
                tokens.push(back.len() as u32);
                for (label, p) in back {
                    tokens.push(label);
                    tokens.push(p);
                }
                let old_len = prefix.len();
                prefix.extend(&tokens);
                // Prune: a strictly larger prefix can never become minimal.
                let viable = match best.as_ref() {
                    Some(b) => {
                        let upto = prefix.len().min(b.len());
                        prefix[..upto] <= b[..upto]
                    }
                    None => true,
                };
                if viable {
                    pos.insert(v, chosen.len() as u32);
                    chosen.push(v);
                    lens.push(old_len);
                    rec(g, adj, comp, pos, chosen, prefix, lens, best);
                    lens.pop();
                    chosen.pop();
                    pos.remove(&v);
                }
                prefix.truncate(old_len);
            }
        }
        rec(self, &adj, comp, &mut pos, &mut chosen, &mut prefix, &mut lens, &mut best);
        best.unwrap_or_default()
    }
}

/// Union-find over vertex ids.
struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, v: usize) -> usize {
        if self.parent[v] != v {
            let root = self.find(self.parent[v]);
            self.parent[v] = root;
        }
        self.parent[v]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller id wins, keeping compaction deterministic.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// A graph with a marked base vertex, as produced for a concrete subgroup.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BasedGraph {
    pub graph: UmGraph,
    pub base: usize,
}

impl BasedGraph {
    /// Folds the underlying graph, tracking the base.
    pub fn folded(&self) -> BasedGraph {
        let (graph, vmap) = self.graph.folded();
        BasedGraph { graph, base: vmap[self.base] }
    }

    /// Does `word` trace a closed path at the base? Requires an immersed
    /// graph; membership in the represented subgroup is exactly this.
    pub fn accepts(&self, word: &Word) -> Result<bool> {
        self.graph.check_immersed()?;
        let steps = word_to_loop(word, self.graph.m())?;
        let mut fwd: HashMap<(usize, u32), usize> = HashMap::new();
        let mut bwd: HashMap<(usize, u32), usize> = HashMap::new();
        for e in self.graph.edges() {
            fwd.insert((e.from, e.label.0), e.to);
            bwd.insert((e.to, e.label.0), e.from);
        }
        let mut cur = self.base;
        for s in steps {
            let next = if s.forward {
                fwd.get(&(cur, s.label.0))
            } else {
                bwd.get(&(cur, s.label.0))
            };
            match next {
                Some(&v) => cur = v,
                None => return Ok(false),
            }
        }
        Ok(cur == self.base)
    }
}

/// Builds the subgroup graph of `<words>` inside the rank-(m-1) free group:
/// wedge the translated loops at a base vertex, then fold.
pub fn stallings_graph(words: &[Word], m: u32) -> Result<BasedGraph> {
    let mut g = UmGraph::new(m)?;
    let base = g.add_vertex(VType::One);
    for word in words {
        let steps = word_to_loop(word, m)?;
        if steps.is_empty() {
            continue;
        }
        let mut cur = base;
        let pairs = steps.len() / 2;
        for (i, pair) in steps.chunks(2).enumerate() {
            let two = g.add_vertex(VType::Two);
            g.add_edge(cur, two, pair[0].label)?;
            let next = if i + 1 == pairs { base } else { g.add_vertex(VType::One) };
            g.add_edge(next, two, pair[1].label)?;
            cur = next;
        }
    }
    Ok(BasedGraph { graph: g, base }.folded())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::Gen;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn words(list: &[&str]) -> Vec<Word> {
        list.iter().map(|s| w(s)).collect()
    }

    #[test]
    fn ambient_graph_shape() {
        let u3 = UmGraph::ambient(3).unwrap();
        assert_eq!(u3.vertex_count(), 2);
        assert_eq!(u3.edge_count(), 3);
        assert_eq!(u3.oriented_edge_count(), 6);
        assert!(u3.is_immersed());
        assert!(u3.is_core());
        assert_eq!(u3.reduced_rank().unwrap(), 1);
        assert!(UmGraph::ambient(2).is_err());
    }

    #[test]
    fn ambient_rank_is_m_minus_2() {
        for m in 3..=6 {
            assert_eq!(UmGraph::ambient(m).unwrap().reduced_rank().unwrap(), (m - 2) as u64);
        }
    }

    #[test]
    fn side_ranks_add_up() {
        let u3 = UmGraph::ambient(3).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(u3.brr_side(VType::One).unwrap(), half);
        assert_eq!(u3.brr_side(VType::Two).unwrap(), half);
    }

    #[test]
    fn immersion_detects_label_clash() {
        let mut g = UmGraph::new(3).unwrap();
        let a = g.add_vertex(VType::One);
        let b = g.add_vertex(VType::Two);
        let c = g.add_vertex(VType::Two);
        g.add_edge(a, b, Letter(1)).unwrap();
        g.add_edge(a, c, Letter(1)).unwrap();
        assert!(matches!(
            g.check_immersed(),
            Err(Error::NotImmersed { vertex, side: 1, label: 1 }) if vertex == a
        ));
        let (folded, vmap) = g.folded();
        assert!(folded.is_immersed());
        assert_eq!(folded.vertex_count(), 2);
        assert_eq!(folded.edge_count(), 1);
        assert_eq!(vmap[b], vmap[c]);
    }

    #[test]
    fn core_prunes_hanging_trees() {
        // A 2-cycle with a pendant path hanging off it.
        let mut g = UmGraph::new(3).unwrap();
        let v = g.add_vertex(VType::One);
        let t = g.add_vertex(VType::Two);
        g.add_edge(v, t, Letter(1)).unwrap();
        g.add_edge(v, t, Letter(2)).unwrap();
        let leaf2 = g.add_vertex(VType::Two);
        let leaf1 = g.add_vertex(VType::One);
        g.add_edge(v, leaf2, Letter(3)).unwrap();
        g.add_edge(leaf1, leaf2, Letter(1)).unwrap();
        let core = g.core();
        assert_eq!(core.vertex_count(), 2);
        assert_eq!(core.edge_count(), 2);
        assert_eq!(core.reduced_rank().unwrap(), 0);
        // Idempotent.
        assert_eq!(core.core(), core);
        // The original graph is not its own core.
        assert!(g.check_core().is_err());
        assert!(g.reduced_rank().is_err());
    }

    #[test]
    fn core_of_empty_and_trees_is_empty() {
        let mut g = UmGraph::new(3).unwrap();
        assert!(g.core().is_empty());
        let a = g.add_vertex(VType::One);
        let b = g.add_vertex(VType::Two);
        g.add_edge(a, b, Letter(2)).unwrap();
        assert!(g.core().is_empty());
        assert_eq!(g.core().reduced_rank().unwrap(), 0);
    }

    #[test]
    fn stallings_graph_of_single_generator() {
        let y = stallings_graph(&words(&["x1"]), 3).unwrap();
        assert_eq!(y.graph.vertex_count(), 2);
        assert_eq!(y.graph.edge_count(), 2);
        let mut labels: Vec<u32> = y.graph.edges().iter().map(|e| e.label.0).collect();
        labels.sort_unstable();
        assert_eq!(labels, vec![1, 3]);
        assert!(y.accepts(&w("x1")).unwrap());
        assert!(y.accepts(&w("x1 x1")).unwrap());
        assert!(y.accepts(&w("x1^-1")).unwrap());
        assert!(!y.accepts(&w("x2")).unwrap());
        assert!(!y.accepts(&w("x1 x2")).unwrap());
        assert!(y.accepts(&Word::empty()).unwrap());
    }

    #[test]
    fn stallings_graph_of_full_basis_is_ambient() {
        let y = stallings_graph(&words(&["x1", "x2"]), 3).unwrap();
        assert_eq!(y.graph.canonical_code(), UmGraph::ambient(3).unwrap().canonical_code());
        // Everything in the rank-2 free group is accepted.
        for s in ["x1 x2", "x2^-1 x1 x2 x1^-1", "x1 x1 x2^-1"] {
            assert!(y.accepts(&w(s)).unwrap());
        }
    }

    #[test]
    fn stallings_graph_with_no_words_is_single_vertex() {
        let y = stallings_graph(&[], 4).unwrap();
        assert_eq!(y.graph.vertex_count(), 1);
        assert_eq!(y.graph.edge_count(), 0);
        assert!(y.accepts(&Word::empty()).unwrap());
        assert!(!y.accepts(&w("x1")).unwrap());
    }

    #[test]
    fn stallings_graph_handles_conjugated_generators() {
        // x1 x2 x1^-1 folds into a loop with a tail; the base keeps degree 1.
        let y = stallings_graph(&words(&["x1 x2 x1^-1"]), 3).unwrap();
        assert!(y.accepts(&w("x1 x2 x1^-1")).unwrap());
        assert!(y.accepts(&w("x1 x2 x2 x1^-1")).unwrap());
        assert!(!y.accepts(&w("x2")).unwrap());
        let core = y.graph.core();
        assert_eq!(core.reduced_rank().unwrap(), 0);
        assert!(core.vertex_count() < y.graph.vertex_count());
    }

    #[test]
    fn folding_is_confluent_under_relabeling() {
        // Fold the same wedge presented in several vertex/edge orders; all
        // results must be isomorphic.
        let base_words = words(&["x1 x2", "x2 x1", "x1 x1"]);
        let reference = stallings_graph(&base_words, 3).unwrap().graph;
        let ref_code = reference.canonical_code();
        // Build the unfolded wedge manually, permute, then fold.
        let mut g = UmGraph::new(3).unwrap();
        let base = g.add_vertex(VType::One);
        for word in &base_words {
            let steps = word_to_loop(word, 3).unwrap();
            let mut cur = base;
            let pairs = steps.len() / 2;
            for (i, pair) in steps.chunks(2).enumerate() {
                let two = g.add_vertex(VType::Two);
                g.add_edge(cur, two, pair[0].label).unwrap();
                let next = if i + 1 == pairs { base } else { g.add_vertex(VType::One) };
                g.add_edge(next, two, pair[1].label).unwrap();
                cur = next;
            }
        }
        let n = g.vertex_count();
        let e = g.edge_count();
        let mut vperm: Vec<usize> = (0..n).collect();
        let mut eperm: Vec<usize> = (0..e).collect();
        // A handful of deterministic shuffles.
        for round in 1..6 {
            vperm.rotate_left(round % n.max(1));
            eperm.rotate_left((round * 3) % e.max(1));
            let permuted = g.permuted(&vperm, &eperm);
            let (folded, _) = permuted.folded();
            assert_eq!(folded.core().canonical_code(), ref_code.clone());
        }
    }

    #[test]
    fn canonical_code_separates_and_identifies() {
        let u3 = UmGraph::ambient(3).unwrap();
        // Relabeled copy: swap the two vertices and reverse edge order.
        let copy = u3.permuted(&[1, 0], &[2, 1, 0]);
        assert_eq!(u3.canonical_code(), copy.canonical_code());
        // A 2-cycle is different.
        let mut two_cycle = UmGraph::new(3).unwrap();
        let a = two_cycle.add_vertex(VType::One);
        let b = two_cycle.add_vertex(VType::Two);
        two_cycle.add_edge(a, b, Letter(1)).unwrap();
        two_cycle.add_edge(a, b, Letter(2)).unwrap();
        assert_ne!(u3.canonical_code(), two_cycle.canonical_code());
        // Same shape, different labels: also different.
        let mut other = UmGraph::new(3).unwrap();
        let a = other.add_vertex(VType::One);
        let b = other.add_vertex(VType::Two);
        other.add_edge(a, b, Letter(1)).unwrap();
        other.add_edge(a, b, Letter(3)).unwrap();
        assert_ne!(two_cycle.canonical_code(), other.canonical_code());
    }

    #[test]
    fn canonical_code_ignores_component_order() {
        let mut g1 = UmGraph::new(4).unwrap();
        let a = g1.add_vertex(VType::One);
        let b = g1.add_vertex(VType::Two);
        g1.add_edge(a, b, Letter(1)).unwrap();
        g1.add_edge(a, b, Letter(2)).unwrap();
        let c = g1.add_vertex(VType::One);
        let d = g1.add_vertex(VType::Two);
        g1.add_edge(c, d, Letter(3)).unwrap();
        g1.add_edge(c, d, Letter(4)).unwrap();

        let mut g2 = UmGraph::new(4).unwrap();
        let c = g2.add_vertex(VType::One);
        let d = g2.add_vertex(VType::Two);
        g2.add_edge(c, d, Letter(3)).unwrap();
        g2.add_edge(c, d, Letter(4)).unwrap();
        let a = g2.add_vertex(VType::One);
        let b = g2.add_vertex(VType::Two);
        g2.add_edge(a, b, Letter(1)).unwrap();
        g2.add_edge(a, b, Letter(2)).unwrap();

        assert_eq!(g1.canonical_code(), g2.canonical_code());
    }

    #[test]
    fn canonical_code_on_non_immersed_graphs() {
        // Two parallel same-label edges (not immersed) vs distinct labels.
        let mut g1 = UmGraph::new(3).unwrap();
        let a = g1.add_vertex(VType::One);
        let b = g1.add_vertex(VType::Two);
        g1.add_edge(a, b, Letter(1)).unwrap();
        g1.add_edge(a, b, Letter(1)).unwrap();
        let copy = g1.permuted(&[1, 0], &[1, 0]);
        assert_eq!(g1.canonical_code(), copy.canonical_code());
        let mut g2 = UmGraph::new(3).unwrap();
        let a = g2.add_vertex(VType::One);
        let b = g2.add_vertex(VType::Two);
        g2.add_edge(a, b, Letter(1)).unwrap();
        g2.add_edge(a, b, Letter(2)).unwrap();
        assert_ne!(g1.canonical_code(), g2.canonical_code());
    }

    #[test]
    fn merge_vertices_respects_types() {
        let mut g = UmGraph::new(3).unwrap();
        let a = g.add_vertex(VType::One);
        let b = g.add_vertex(VType::Two);
        let c = g.add_vertex(VType::One);
        g.add_edge(a, b, Letter(1)).unwrap();
        g.add_edge(c, b, Letter(2)).unwrap();
        assert!(g.merge_vertices(a, b).is_err());
        let merged = g.merge_vertices(a, c).unwrap();
        assert_eq!(merged.vertex_count(), 2);
        assert_eq!(merged.edge_count(), 2);
    }

    #[test]
    fn membership_brute_force_cross_check() {
        // Ground truth: breadth-first closure of products of the generators,
        // kept within a generous length ball.
        let gens = words(&["x1 x1", "x2 x1^-1"]);
        let y = stallings_graph(&gens, 3).unwrap();
        let cap = 14usize;
        let mut seen: std::collections::HashSet<Word> = std::collections::HashSet::new();
        let mut queue: VecDeque<Word> = VecDeque::from([Word::empty()]);
        seen.insert(Word::empty());
        while let Some(cur) = queue.pop_front() {
            for g in &gens {
                for cand in [cur.concat(g), cur.concat(&g.inverse())] {
                    if cand.len() <= cap && seen.insert(cand.clone()) {
                        queue.push_back(cand);
                    }
                }
            }
        }
        // Every product found must be accepted.
        for h in &seen {
            assert!(y.accepts(h).unwrap(), "product {h} rejected");
        }
        // Exhaustively compare short words against the closure.
        let mut all_words: Vec<Word> = vec![Word::empty()];
        let alphabet = [
            Gen::new(1, false),
            Gen::new(1, true),
            Gen::new(2, false),
            Gen::new(2, true),
        ];
        let mut frontier = vec![Word::empty()];
        for _ in 0..6 {
            let mut next = Vec::new();
            for base in &frontier {
                for &g in &alphabet {
                    let cand = Word::new(
                        base.gens.iter().copied().chain([g]).collect::<Vec<_>>(),
                    );
                    if cand.is_reduced() {
                        next.push(cand);
                    }
                }
            }
            all_words.extend(next.iter().cloned());
            frontier = next;
        }
        for word in &all_words {
            assert_eq!(
                y.accepts(word).unwrap(),
                seen.contains(word),
                "membership mismatch for {word}"
            );
        }
    }
}
