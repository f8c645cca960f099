//! File formats: word lists, JSON graphs, DOT rendering, and a plain-text
//! export of the inequality system that parses back bit-for-bit.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{UmGraph, VType};
use crate::ineq::{AdmissibleTuple, SliRow, SliSystem, VarId};
use crate::words::{Letter, Word};

/// Parses a word list: one word per line, blank lines and `#` comments
/// ignored.
pub fn words_from_str(s: &str) -> Result<Vec<Word>> {
    let mut out = Vec::new();
    for (ln, line) in s.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let w = Word::parse(line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?;
        out.push(w);
    }
    if out.is_empty() {
        return Err(Error::Parse("no words found in input".into()));
    }
    Ok(out)
}

pub fn read_words_file(path: &Path) -> Result<Vec<Word>> {
    words_from_str(&std::fs::read_to_string(path)?)
}

#[derive(Serialize, Deserialize)]
struct VertexRec {
    id: usize,
    #[serde(rename = "type")]
    vtype: u8,
}

#[derive(Serialize, Deserialize)]
struct EdgeFileRec {
    id: usize,
    from: usize,
    to: usize,
    label: u32,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    m: u32,
    vertices: Vec<VertexRec>,
    edges: Vec<EdgeFileRec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<usize>,
}

/// Serializes a graph; vertex and edge ids are the in-memory indices.
pub fn graph_to_json(g: &UmGraph, base: Option<usize>) -> serde_json::Value {
    let file = GraphFile {
        m: g.m(),
        vertices: g
            .vertices()
            .map(|v| VertexRec { id: v, vtype: g.vtype(v).as_u8() })
            .collect(),
        edges: g
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| EdgeFileRec { id: i, from: e.from, to: e.to, label: e.label.0 })
            .collect(),
        base,
    };
    serde_json::to_value(file).expect("graph serialization cannot fail")
}

/// Deserializes a graph; arbitrary ids are accepted and compacted in id
/// order. Returns the graph and the translated base vertex, if any.
pub fn graph_from_json_str(s: &str) -> Result<(UmGraph, Option<usize>)> {
    let file: GraphFile =
        serde_json::from_str(s).map_err(|e| Error::InvalidGraph(e.to_string()))?;
    let mut g = UmGraph::new(file.m)?;
    let mut vmap = BTreeMap::new();
    let mut verts = file.vertices;
    verts.sort_by_key(|v| v.id);
    for v in &verts {
        let t = VType::from_u8(v.vtype).ok_or_else(|| {
            Error::InvalidGraph(format!("vertex {} has type {}, expected 1 or 2", v.id, v.vtype))
        })?;
        if vmap.insert(v.id, g.add_vertex(t)).is_some() {
            return Err(Error::InvalidGraph(format!("duplicate vertex id {}", v.id)));
        }
    }
    let mut edges = file.edges;
    edges.sort_by_key(|e| e.id);
    let mut seen = BTreeSet::new();
    for e in &edges {
        if !seen.insert(e.id) {
            return Err(Error::InvalidGraph(format!("duplicate edge id {}", e.id)));
        }
        let from = *vmap.get(&e.from).ok_or_else(|| {
            Error::InvalidGraph(format!("edge {} refers to unknown vertex {}", e.id, e.from))
        })?;
        let to = *vmap.get(&e.to).ok_or_else(|| {
            Error::InvalidGraph(format!("edge {} refers to unknown vertex {}", e.id, e.to))
        })?;
        g.add_edge(from, to, Letter(e.label))?;
    }
    let base = match file.base {
        None => None,
        Some(b) => Some(*vmap.get(&b).ok_or_else(|| {
            Error::InvalidGraph(format!("base refers to unknown vertex {b}"))
        })?),
    };
    Ok((g, base))
}

pub fn read_graph_file(path: &Path) -> Result<(UmGraph, Option<usize>)> {
    graph_from_json_str(&std::fs::read_to_string(path)?)
}

/// GraphViz rendering: type-1 vertices as circles, type-2 as boxes, the
/// base vertex doubled, edges labeled `a<j>`.
pub fn dot_string(g: &UmGraph, base: Option<usize>) -> String {
    let mut s = String::from("digraph subgroup_graph {\n  rankdir=LR;\n");
    for v in g.vertices() {
        let shape = match g.vtype(v) {
            VType::One => "circle",
            VType::Two => "box",
        };
        let extra = if base == Some(v) { ", peripheries=2" } else { "" };
        s.push_str(&format!("  v{v} [shape={shape}{extra}];\n"));
    }
    for e in g.edges() {
        s.push_str(&format!("  v{} -> v{} [label=\"a{}\"];\n", e.from, e.to, e.label.0));
    }
    s.push_str("}\n");
    s
}

fn render_terms(coeffs: &BTreeMap<VarId, i64>) -> String {
    let mut s = String::new();
    for (var, &c) in coeffs {
        if !s.is_empty() {
            s.push(' ');
        }
        s.push(if c < 0 { '-' } else { '+' });
        s.push(' ');
        if c.abs() != 1 {
            s.push_str(&c.abs().to_string());
            s.push(' ');
        }
        s.push_str(&var.to_string());
    }
    s
}

/// Renders the system in LP text form: a maximization of the negated
/// special variable over the named inequality rows, all variables free.
pub fn lp_text(sys: &SliSystem) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "\\ inequality system over ambient edge count m = {}\n",
        sys.m()
    ));
    s.push_str("Maximize\n obj: - xs\nSubject To\n");
    for row in sys.rows() {
        let prefix = match row.ineq.side {
            VType::One => "s1",
            VType::Two => "s2",
        };
        s.push_str(&format!(
            " {}_{}: {} <= {}\n",
            prefix,
            row.ineq.tuple.encode(),
            render_terms(&row.ineq.coeffs),
            row.ineq.rhs
        ));
    }
    s.push_str("Bounds\n");
    for var in sys.vars() {
        s.push_str(&format!(" {var} free\n"));
    }
    s.push_str("End\n");
    s
}

fn parse_var(tok: &str) -> Option<VarId> {
    if tok == "xs" {
        return Some(VarId::Xs);
    }
    let rest = tok.strip_prefix('x')?;
    let mut it = rest.split('.');
    let letter: u32 = it.next()?.parse().ok()?;
    let mut edges = BTreeSet::new();
    for p in it {
        edges.insert(p.parse().ok()?);
    }
    if edges.is_empty() {
        return None;
    }
    Some(VarId::X { letter: Letter(letter), edges })
}

fn decode_row_name(name: &str, m: u32) -> Result<AdmissibleTuple> {
    let bad = || Error::Parse(format!("malformed row name {name:?}"));
    let (side, rest) = if let Some(r) = name.strip_prefix("s1_") {
        (VType::One, r)
    } else if let Some(r) = name.strip_prefix("s2_") {
        (VType::Two, r)
    } else {
        return Err(bad());
    };
    let mut sets = vec![BTreeSet::new(); m as usize];
    for part in rest.split('_') {
        let body = part.strip_prefix('a').ok_or_else(bad)?;
        let mut it = body.split('.');
        let j: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if j == 0 || j > m as usize {
            return Err(bad());
        }
        for id in it {
            sets[j - 1].insert(id.parse().map_err(|_| bad())?);
        }
        if sets[j - 1].is_empty() {
            return Err(bad());
        }
    }
    Ok(AdmissibleTuple::from_parts(side, sets))
}

fn parse_terms(tokens: &[&str]) -> Result<BTreeMap<VarId, i64>> {
    let mut out = BTreeMap::new();
    let mut i = 0;
    while i < tokens.len() {
        let sign = match tokens[i] {
            "+" => 1i64,
            "-" => -1,
            other => return Err(Error::Parse(format!("expected sign, found {other:?}"))),
        };
        i += 1;
        let mut mag = 1i64;
        if let Some(tok) = tokens.get(i) {
            if let Ok(v) = tok.parse::<i64>() {
                mag = v;
                i += 1;
            }
        }
        let tok = tokens
            .get(i)
            .ok_or_else(|| Error::Parse("dangling coefficient at end of row".into()))?;
        let var = parse_var(tok)
            .ok_or_else(|| Error::Parse(format!("malformed variable {tok:?}")))?;
        if out.insert(var, sign * mag).is_some() {
            return Err(Error::Parse(format!("variable {tok} repeated in one row")));
        }
        i += 1;
    }
    Ok(out)
}

/// Parses the LP text form back into the identical system. Row names carry
/// the generating tuples; coefficients are cross-checked against them.
pub fn parse_lp_text(s: &str) -> Result<SliSystem> {
    #[derive(PartialEq)]
    enum Sec {
        Preamble,
        Objective,
        Rows,
        Bounds,
        Done,
    }
    let mut sec = Sec::Preamble;
    let mut m: Option<u32> = None;
    let mut raw_rows: Vec<(String, BTreeMap<VarId, i64>, i64)> = Vec::new();
    let mut vars: Vec<VarId> = Vec::new();
    for line in s.lines() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(c) = t.strip_prefix('\\') {
            if let Some((_, tail)) = c.split_once("m =") {
                m = Some(
                    tail.trim()
                        .parse()
                        .map_err(|_| Error::Parse("malformed ambient edge count".into()))?,
                );
            }
            continue;
        }
        match t {
            "Maximize" => {
                sec = Sec::Objective;
                continue;
            }
            "Subject To" => {
                sec = Sec::Rows;
                continue;
            }
            "Bounds" => {
                sec = Sec::Bounds;
                continue;
            }
            "End" => {
                sec = Sec::Done;
                continue;
            }
            _ => {}
        }
        match sec {
            Sec::Objective => {
                if t != "obj: - xs" {
                    return Err(Error::Parse(format!("unsupported objective {t:?}")));
                }
            }
            Sec::Rows => {
                let (name, body) = t
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("row without name: {t:?}")))?;
                let tokens: Vec<&str> = body.split_whitespace().collect();
                let rel = tokens
                    .iter()
                    .position(|&x| x == "<=")
                    .ok_or_else(|| Error::Parse(format!("row {name} lacks <=")))?;
                let rhs: i64 = tokens
                    .get(rel + 1)
                    .filter(|_| rel + 2 == tokens.len())
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("row {name} has a malformed rhs")))?;
                let coeffs = parse_terms(&tokens[..rel])?;
                raw_rows.push((name.trim().to_string(), coeffs, rhs));
            }
            Sec::Bounds => {
                let (v, kind) = t
                    .split_once(' ')
                    .ok_or_else(|| Error::Parse(format!("malformed bound {t:?}")))?;
                if kind.trim() != "free" {
                    return Err(Error::Parse(format!("unsupported bound {t:?}")));
                }
                let var = parse_var(v)
                    .ok_or_else(|| Error::Parse(format!("malformed variable {v:?}")))?;
                vars.push(var);
            }
            Sec::Preamble | Sec::Done => {
                return Err(Error::Parse(format!("unexpected line {t:?}")));
            }
        }
    }
    if sec != Sec::Done {
        return Err(Error::Parse("missing End marker".into()));
    }
    let m = m.ok_or_else(|| Error::Parse("missing ambient edge count comment".into()))?;
    if vars.is_empty() || vars.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parse("bound variables not strictly sorted".into()));
    }
    if *vars.last().unwrap() != VarId::Xs {
        return Err(Error::Parse("special variable missing from bounds".into()));
    }
    let mut rows = Vec::with_capacity(raw_rows.len());
    for (name, coeffs, rhs) in raw_rows {
        let tuple = decode_row_name(&name, m)?;
        let k = tuple.k();
        // The name determines every coefficient; reject inconsistent rows.
        let sign = match tuple.side() {
            VType::One => -1i64,
            VType::Two => 1,
        };
        let mut expect = BTreeMap::new();
        for (slot, set) in tuple.sets().iter().enumerate() {
            if set.is_empty() {
                continue;
            }
            expect.insert(
                VarId::X { letter: Letter((slot + 1) as u32), edges: set.clone() },
                sign,
            );
        }
        if k > 2 {
            expect.insert(VarId::Xs, -((k - 2) as i64));
        }
        if expect != coeffs {
            return Err(Error::Parse(format!(
                "row {name} has coefficients inconsistent with its name"
            )));
        }
        let mut cols = Vec::with_capacity(coeffs.len());
        for (var, c) in &coeffs {
            let vi = vars
                .binary_search(var)
                .map_err(|_| Error::Parse(format!("row {name} uses unbound variable {var}")))?;
            cols.push((vi, *c));
        }
        cols.sort_unstable_by_key(|&(vi, _)| vi);
        let ineq = crate::ineq::Inequality { side: tuple.side(), k, rhs, coeffs, tuple };
        rows.push(SliRow { ineq, cols });
    }
    Ok(SliSystem::from_parts(m, vars, rows))
}

pub fn read_lp_file(path: &Path) -> Result<SliSystem> {
    parse_lp_text(&std::fs::read_to_string(path)?)
}
