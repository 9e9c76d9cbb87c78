//! Finite graphs treated as discrete behaviors over integer time: a node is a
//! state observable for zero steps, an edge is one step, and a length-`n`
//! section is a path of `n` edges. Restriction takes subpaths; gluing
//! concatenates paths that share an endpoint germ, and is always unique.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    UnknownNode(String),
    UnknownEdge(String),
    BadIncidence { edge: String, detail: String },
    GermMismatch { left: String, right: String },
    OutOfRange { what: &'static str },
    NotReflexive,
    Codomain,
    SizeCap { cap: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::UnknownNode(n) => write!(f, "unknown node {n:?}"),
            GraphError::UnknownEdge(e) => write!(f, "unknown edge {e:?}"),
            GraphError::BadIncidence { edge, detail } => {
                write!(f, "edge {edge:?} has bad incidence: {detail}")
            }
            GraphError::GermMismatch { left, right } => {
                write!(f, "cannot glue: right germ {left:?} differs from left germ {right:?}")
            }
            GraphError::OutOfRange { what } => write!(f, "{what} out of range"),
            GraphError::NotReflexive => write!(f, "graph has no reflexive structure"),
            GraphError::Codomain => write!(f, "maps do not share a codomain"),
            GraphError::SizeCap { cap } => {
                write!(f, "structure exceeds the search cap of {cap} nodes")
            }
        }
    }
}

impl std::error::Error for GraphError {}

/// An edge with named endpoints given by node indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub name: String,
    pub src: usize,
    pub tgt: usize,
}

/// Finite (multi)graph with ordered nodes and edges. `refl`, when present,
/// picks a distinguished loop at every node; it is what a zero-length dwell
/// looks like as a jump.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Graph {
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
    pub refl: Option<Vec<usize>>,
}

impl Graph {
    pub fn new(nodes: Vec<String>, edges: Vec<(String, usize, usize)>) -> Self {
        Graph {
            nodes,
            edges: edges
                .into_iter()
                .map(|(name, src, tgt)| Edge { name, src, tgt })
                .collect(),
            refl: None,
        }
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.name == name)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        for e in &self.edges {
            if e.src >= self.nodes.len() || e.tgt >= self.nodes.len() {
                return Err(GraphError::BadIncidence {
                    edge: e.name.clone(),
                    detail: "endpoint index out of bounds".into(),
                });
            }
        }
        if let Some(r) = &self.refl {
            if r.len() != self.nodes.len() {
                return Err(GraphError::NotReflexive);
            }
            for (v, &e) in r.iter().enumerate() {
                let edge = self.edges.get(e).ok_or(GraphError::NotReflexive)?;
                if edge.src != v || edge.tgt != v {
                    return Err(GraphError::BadIncidence {
                        edge: edge.name.clone(),
                        detail: "reflexive edge is not a loop at its node".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn refl_edge(&self, node: usize) -> Result<usize, GraphError> {
        self.refl
            .as_ref()
            .map(|r| r[node])
            .ok_or(GraphError::NotReflexive)
    }

    pub fn is_refl_edge(&self, edge: usize) -> bool {
        match &self.refl {
            Some(r) => r[self.edges[edge].src] == edge && self.edges[edge].src == self.edges[edge].tgt,
            None => false,
        }
    }

    /// Adds a fresh distinguished loop at every node. Used to present plain
    /// transition data in a setting where dwelling must always be possible.
    pub fn free_reflexive(&self) -> Graph {
        assert!(self.refl.is_none(), "graph is already reflexive");
        let mut edges = self.edges.clone();
        let mut refl = Vec::with_capacity(self.nodes.len());
        for (v, name) in self.nodes.iter().enumerate() {
            refl.push(edges.len());
            edges.push(Edge { name: format!("refl:{name}"), src: v, tgt: v });
        }
        Graph { nodes: self.nodes.clone(), edges, refl: Some(refl) }
    }

    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.src == node)
            .map(|(i, _)| i)
    }
}

/// A length-`n` behavior: `n + 1` node indices joined by `n` edge indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Section {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
}

impl Section {
    pub fn at_node(v: usize) -> Section {
        Section { nodes: vec![v], edges: vec![] }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Left endpoint germ.
    pub fn dom_germ(&self) -> usize {
        self.nodes[0]
    }

    /// Right endpoint germ.
    pub fn cod_germ(&self) -> usize {
        *self.nodes.last().unwrap()
    }

    pub fn validate(&self, g: &Graph) -> Result<(), GraphError> {
        if self.nodes.len() != self.edges.len() + 1 {
            return Err(GraphError::OutOfRange { what: "section shape" });
        }
        for (i, &e) in self.edges.iter().enumerate() {
            let edge = g.edges.get(e).ok_or_else(|| GraphError::UnknownEdge(format!("#{e}")))?;
            if edge.src != self.nodes[i] || edge.tgt != self.nodes[i + 1] {
                return Err(GraphError::BadIncidence {
                    edge: edge.name.clone(),
                    detail: "section nodes disagree with edge endpoints".into(),
                });
            }
        }
        Ok(())
    }
}

/// All length-`n` sections of `g`, in lexicographic order of their edge lists.
pub fn paths(g: &Graph, n: usize) -> Vec<Section> {
    if n == 0 {
        return (0..g.nodes.len()).map(Section::at_node).collect();
    }
    let mut out = Vec::new();
    let mut stack: Vec<Section> = (0..g.nodes.len()).map(Section::at_node).collect();
    // Depth-first in edge-index order keeps the output deterministic.
    fn extend(g: &Graph, sec: &Section, n: usize, out: &mut Vec<Section>) {
        if sec.len() == n {
            out.push(sec.clone());
            return;
        }
        let v = sec.cod_germ();
        for (i, e) in g.edges.iter().enumerate() {
            if e.src == v {
                let mut next = sec.clone();
                next.edges.push(i);
                next.nodes.push(e.tgt);
                extend(g, &next, n, out);
            }
        }
    }
    for s in stack.drain(..) {
        extend(g, &s, n, &mut out);
    }
    out
}

/// The subpath over `[p, p + n']`.
pub fn restrict_section(x: &Section, p: usize, n_prime: usize) -> Result<Section, GraphError> {
    if p + n_prime > x.len() {
        return Err(GraphError::OutOfRange { what: "restriction window" });
    }
    Ok(Section {
        nodes: x.nodes[p..=p + n_prime].to_vec(),
        edges: x.edges[p..p + n_prime].to_vec(),
    })
}

/// Concatenation. Defined exactly when the right germ of `x1` is the left
/// germ of `x2`, and then unique.
pub fn glue_sections(g: &Graph, x1: &Section, x2: &Section) -> Result<Section, GraphError> {
    if x1.cod_germ() != x2.dom_germ() {
        return Err(GraphError::GermMismatch {
            left: g.nodes[x1.cod_germ()].clone(),
            right: g.nodes[x2.dom_germ()].clone(),
        });
    }
    let mut nodes = x1.nodes.clone();
    nodes.extend_from_slice(&x2.nodes[1..]);
    let mut edges = x1.edges.clone();
    edges.extend_from_slice(&x2.edges);
    Ok(Section { nodes, edges })
}

/// A map of graphs: node and edge assignments commuting with `src` and `tgt`
/// (and with `refl` when both sides carry it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphHom {
    pub dom: Graph,
    pub cod: Graph,
    pub node_map: Vec<usize>,
    pub edge_map: Vec<usize>,
}

impl GraphHom {
    pub fn identity(g: &Graph) -> GraphHom {
        GraphHom {
            dom: g.clone(),
            cod: g.clone(),
            node_map: (0..g.nodes.len()).collect(),
            edge_map: (0..g.edges.len()).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.node_map.len() != self.dom.nodes.len() || self.edge_map.len() != self.dom.edges.len() {
            return Err(GraphError::OutOfRange { what: "hom arity" });
        }
        for (i, e) in self.dom.edges.iter().enumerate() {
            let img = self
                .cod
                .edges
                .get(self.edge_map[i])
                .ok_or_else(|| GraphError::UnknownEdge(format!("#{}", self.edge_map[i])))?;
            if img.src != self.node_map[e.src] || img.tgt != self.node_map[e.tgt] {
                return Err(GraphError::BadIncidence {
                    edge: e.name.clone(),
                    detail: "image edge endpoints disagree with mapped endpoints".into(),
                });
            }
        }
        if let (Some(rd), Some(rc)) = (&self.dom.refl, &self.cod.refl) {
            for (v, &e) in rd.iter().enumerate() {
                if self.edge_map[e] != rc[self.node_map[v]] {
                    return Err(GraphError::BadIncidence {
                        edge: self.dom.edges[e].name.clone(),
                        detail: "reflexive edge not sent to reflexive edge".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn compose(&self, inner: &GraphHom) -> Result<GraphHom, GraphError> {
        if inner.cod != self.dom {
            return Err(GraphError::Codomain);
        }
        Ok(GraphHom {
            dom: inner.dom.clone(),
            cod: self.cod.clone(),
            node_map: inner.node_map.iter().map(|&v| self.node_map[v]).collect(),
            edge_map: inner.edge_map.iter().map(|&e| self.edge_map[e]).collect(),
        })
    }

    pub fn apply_section(&self, x: &Section) -> Section {
        Section {
            nodes: x.nodes.iter().map(|&v| self.node_map[v]).collect(),
            edges: x.edges.iter().map(|&e| self.edge_map[e]).collect(),
        }
    }

    pub fn is_bijective(&self) -> bool {
        let mut nseen = vec![false; self.cod.nodes.len()];
        for &v in &self.node_map {
            if nseen[v] {
                return false;
            }
            nseen[v] = true;
        }
        let mut eseen = vec![false; self.cod.edges.len()];
        for &e in &self.edge_map {
            if eseen[e] {
                return false;
            }
            eseen[e] = true;
        }
        nseen.iter().all(|&b| b) && eseen.iter().all(|&b| b)
    }

    pub fn inverse(&self) -> Option<GraphHom> {
        if !self.is_bijective() {
            return None;
        }
        let mut node_map = vec![0; self.cod.nodes.len()];
        for (v, &w) in self.node_map.iter().enumerate() {
            node_map[w] = v;
        }
        let mut edge_map = vec![0; self.cod.edges.len()];
        for (e, &d) in self.edge_map.iter().enumerate() {
            edge_map[d] = e;
        }
        Some(GraphHom { dom: self.cod.clone(), cod: self.dom.clone(), node_map, edge_map })
    }
}

fn tuple_name(parts: &[&str]) -> String {
    let mut s = String::from("(");
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(p);
    }
    s.push(')');
    s
}

/// Row-major index of a tuple with the given per-factor sizes.
pub fn tuple_index(sizes: &[usize], idx: &[usize]) -> usize {
    let mut acc = 0;
    for (s, i) in sizes.iter().zip(idx) {
        acc = acc * s + i;
    }
    acc
}

/// Inverse of [`tuple_index`].
pub fn untuple_index(sizes: &[usize], mut flat: usize) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for k in (0..sizes.len()).rev() {
        out[k] = flat % sizes[k];
        flat /= sizes[k];
    }
    out
}

fn all_tuples(sizes: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = sizes.iter().product();
    (0..total).map(|f| untuple_index(sizes, f)).collect()
}

/// Pointwise product with projections. The empty product is the terminal
/// graph: one node, one loop. A single-factor product is the factor itself
/// with the identity projection. The product of reflexive graphs is
/// reflexive.
pub fn product(factors: &[&Graph]) -> (Graph, Vec<GraphHom>) {
    if factors.len() == 1 {
        return (factors[0].clone(), vec![GraphHom::identity(factors[0])]);
    }
    let nsizes: Vec<usize> = factors.iter().map(|g| g.nodes.len()).collect();
    let esizes: Vec<usize> = factors.iter().map(|g| g.edges.len()).collect();
    let nodes: Vec<String> = all_tuples(&nsizes)
        .iter()
        .map(|t| {
            let parts: Vec<&str> = t.iter().zip(factors).map(|(&i, g)| g.nodes[i].as_str()).collect();
            tuple_name(&parts)
        })
        .collect();
    let edges: Vec<Edge> = all_tuples(&esizes)
        .iter()
        .map(|t| {
            let parts: Vec<&str> = t.iter().zip(factors).map(|(&i, g)| g.edges[i].name.as_str()).collect();
            let src = tuple_index(&nsizes, &t.iter().zip(factors).map(|(&i, g)| g.edges[i].src).collect::<Vec<_>>());
            let tgt = tuple_index(&nsizes, &t.iter().zip(factors).map(|(&i, g)| g.edges[i].tgt).collect::<Vec<_>>());
            Edge { name: tuple_name(&parts), src, tgt }
        })
        .collect();
    let refl = if factors.iter().all(|g| g.refl.is_some()) {
        Some(
            all_tuples(&nsizes)
                .iter()
                .map(|t| {
                    let comp: Vec<usize> = t
                        .iter()
                        .zip(factors)
                        .map(|(&v, g)| g.refl.as_ref().unwrap()[v])
                        .collect();
                    tuple_index(&esizes, &comp)
                })
                .collect(),
        )
    } else {
        None
    };
    let prod = Graph { nodes, edges, refl };
    let projections = (0..factors.len())
        .map(|k| {
            let node_map = all_tuples(&nsizes).iter().map(|t| t[k]).collect();
            let edge_map = all_tuples(&esizes).iter().map(|t| t[k]).collect();
            GraphHom { dom: prod.clone(), cod: factors[k].clone(), node_map, edge_map }
        })
        .collect();
    (prod, projections)
}

/// The section of a product graph whose projections are the given per-factor
/// sections. All factors must agree in length.
pub fn product_section(factors: &[&Graph], secs: &[&Section]) -> Section {
    assert_eq!(factors.len(), secs.len());
    if factors.len() == 1 {
        return secs[0].clone();
    }
    let nsizes: Vec<usize> = factors.iter().map(|g| g.nodes.len()).collect();
    let esizes: Vec<usize> = factors.iter().map(|g| g.edges.len()).collect();
    let n = secs.first().map(|s| s.len()).unwrap_or(0);
    assert!(secs.iter().all(|s| s.len() == n), "section lengths differ");
    let nodes = (0..=n)
        .map(|i| tuple_index(&nsizes, &secs.iter().map(|s| s.nodes[i]).collect::<Vec<_>>()))
        .collect();
    let edges = (0..n)
        .map(|i| tuple_index(&esizes, &secs.iter().map(|s| s.edges[i]).collect::<Vec<_>>()))
        .collect();
    Section { nodes, edges }
}

/// Pointwise pullback of `f` and `g` along their shared codomain, with the
/// two projection legs.
pub fn pullback(f: &GraphHom, g: &GraphHom) -> Result<(Graph, GraphHom, GraphHom), GraphError> {
    if f.cod != g.cod {
        return Err(GraphError::Codomain);
    }
    let mut nodes = Vec::new();
    let mut npairs = Vec::new();
    for (a, an) in f.dom.nodes.iter().enumerate() {
        for (b, bn) in g.dom.nodes.iter().enumerate() {
            if f.node_map[a] == g.node_map[b] {
                npairs.push((a, b));
                nodes.push(tuple_name(&[an, bn]));
            }
        }
    }
    let nindex: BTreeMap<(usize, usize), usize> =
        npairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut edges = Vec::new();
    let mut epairs = Vec::new();
    for (a, ae) in f.dom.edges.iter().enumerate() {
        for (b, be) in g.dom.edges.iter().enumerate() {
            if f.edge_map[a] == g.edge_map[b] {
                epairs.push((a, b));
                edges.push(Edge {
                    name: tuple_name(&[&ae.name, &be.name]),
                    src: nindex[&(ae.src, be.src)],
                    tgt: nindex[&(ae.tgt, be.tgt)],
                });
            }
        }
    }
    let refl = if f.dom.refl.is_some() && g.dom.refl.is_some() {
        let eindex: BTreeMap<(usize, usize), usize> =
            epairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let rf = f.dom.refl.as_ref().unwrap();
        let rg = g.dom.refl.as_ref().unwrap();
        Some(npairs.iter().map(|&(a, b)| eindex[&(rf[a], rg[b])]).collect())
    } else {
        None
    };
    let pb = Graph { nodes, edges, refl };
    let leg_f = GraphHom {
        dom: pb.clone(),
        cod: f.dom.clone(),
        node_map: npairs.iter().map(|&(a, _)| a).collect(),
        edge_map: epairs.iter().map(|&(a, _)| a).collect(),
    };
    let leg_g = GraphHom {
        dom: pb.clone(),
        cod: g.dom.clone(),
        node_map: npairs.iter().map(|&(_, b)| b).collect(),
        edge_map: epairs.iter().map(|&(_, b)| b).collect(),
    };
    Ok((pb, leg_f, leg_g))
}

/// `k`-step extension: nodes are length-`k` sections, edges length-`k+1`
/// sections, endpoints the left and right length-`k` restrictions. Returns
/// the graph with its left and right restriction maps back to `g`.
pub fn extension(g: &Graph, k: usize) -> (Graph, GraphHom, GraphHom) {
    if k == 0 {
        return (g.clone(), GraphHom::identity(g), GraphHom::identity(g));
    }
    let node_paths = paths(g, k);
    let edge_paths = paths(g, k + 1);
    let nindex: BTreeMap<&Section, usize> =
        node_paths.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let path_name = |s: &Section| -> String {
        let mut out = String::new();
        for (i, &e) in s.edges.iter().enumerate() {
            if i > 0 {
                out.push('|');
            }
            out.push_str(&g.edges[e].name);
        }
        if s.edges.is_empty() {
            out.push_str(&g.nodes[s.nodes[0]]);
        }
        out
    };
    let nodes: Vec<String> = node_paths.iter().map(&path_name).collect();
    let mut edges = Vec::new();
    for ep in &edge_paths {
        let left = restrict_section(ep, 0, k).unwrap();
        let right = restrict_section(ep, 1, k).unwrap();
        edges.push(Edge { name: path_name(ep), src: nindex[&left], tgt: nindex[&right] });
    }
    let ext = Graph { nodes, edges, refl: None };
    let lambda = GraphHom {
        dom: ext.clone(),
        cod: g.clone(),
        node_map: node_paths.iter().map(|s| s.nodes[0]).collect(),
        edge_map: edge_paths.iter().map(|s| s.edges[0]).collect(),
    };
    let rho = GraphHom {
        dom: ext.clone(),
        cod: g.clone(),
        node_map: node_paths.iter().map(|s| *s.nodes.last().unwrap()).collect(),
        edge_map: edge_paths.iter().map(|s| *s.edges.last().unwrap()).collect(),
    };
    (ext, lambda, rho)
}

/// Complete graph on `symbols`: every ordered pair is an edge; reflexive via
/// the diagonal. Length-`n` sections are exactly `(n+1)`-tuples of symbols.
pub fn complete(symbols: &[&str]) -> Graph {
    let nodes: Vec<String> = symbols.iter().map(|s| s.to_string()).collect();
    let n = nodes.len();
    let mut edges = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            edges.push(Edge { name: tuple_name(&[&nodes[a], &nodes[b]]), src: a, tgt: b });
        }
    }
    let refl = Some((0..n).map(|a| a * n + a).collect());
    Graph { nodes, edges, refl }
}

/// One node carrying a loop per symbol. Length-`n` sections are `n`-tuples.
pub fn loops(symbols: &[&str]) -> Graph {
    let edges = symbols
        .iter()
        .map(|s| Edge { name: s.to_string(), src: 0, tgt: 0 })
        .collect();
    Graph { nodes: vec!["*".into()], edges, refl: None }
}

/// [`loops`] with the given symbol as the distinguished dwell loop.
pub fn loops_reflexive(symbols: &[&str], unit: usize) -> Graph {
    let mut g = loops(symbols);
    g.refl = Some(vec![unit]);
    g
}

/// One node per symbol, each with exactly one loop: the constant behaviors.
pub fn constant(symbols: &[&str]) -> Graph {
    let nodes: Vec<String> = symbols.iter().map(|s| s.to_string()).collect();
    let edges = nodes
        .iter()
        .enumerate()
        .map(|(i, s)| Edge { name: s.clone(), src: i, tgt: i })
        .collect();
    let refl = Some((0..nodes.len()).collect());
    Graph { nodes, edges, refl }
}

/// One node, one loop.
pub fn terminal() -> Graph {
    product(&[]).0
}

pub fn empty() -> Graph {
    Graph { nodes: vec![], edges: vec![], refl: Some(vec![]) }
}

/// Loops of `g`: the pairs `(node, loop edge at it)`, i.e. the constant
/// sections, one for every length.
pub fn loop_edges(g: &Graph) -> Vec<usize> {
    g.edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.src == e.tgt)
        .map(|(i, _)| i)
        .collect()
}

/// Exact isomorphism search by backtracking over node bijections. Returns
/// `Err(SizeCap)` above the cap; names are ignored, only incidence counts.
pub fn isomorphic(a: &Graph, b: &Graph, cap: usize) -> Result<bool, GraphError> {
    if a.nodes.len() != b.nodes.len() || a.edges.len() != b.edges.len() {
        return Ok(false);
    }
    if a.nodes.len() > cap {
        return Err(GraphError::SizeCap { cap });
    }
    // Edge multiset between each node pair must match under the bijection.
    let count = |g: &Graph, s: usize, t: usize| g.edges.iter().filter(|e| e.src == s && e.tgt == t).count();
    let n = a.nodes.len();
    let mut assign: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; n];
    fn go(
        a: &Graph,
        b: &Graph,
        count: &dyn Fn(&Graph, usize, usize) -> usize,
        assign: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        v: usize,
    ) -> bool {
        let n = assign.len();
        if v == n {
            return true;
        }
        'cand: for w in 0..n {
            if used[w] {
                continue;
            }
            for u in 0..v {
                let x = assign[u].unwrap();
                if count(a, v, u) != count(b, w, x)
                    || count(a, u, v) != count(b, x, w)
                {
                    continue 'cand;
                }
            }
            if count(a, v, v) != count(b, w, w) {
                continue 'cand;
            }
            assign[v] = Some(w);
            used[w] = true;
            if go(a, b, count, assign, used, v + 1) {
                return true;
            }
            assign[v] = None;
            used[w] = false;
        }
        false
    }
    Ok(go(a, b, &count, &mut assign, &mut used, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arrow() -> Graph {
        Graph::new(vec!["u".into(), "v".into()], vec![("e".into(), 0, 1)])
    }

    #[test]
    fn paths_of_single_edge() {
        let g = arrow();
        assert_eq!(paths(&g, 0).len(), 2);
        assert_eq!(paths(&g, 1).len(), 1);
        assert_eq!(paths(&g, 2).len(), 0);
    }

    #[test]
    fn complete_counts() {
        let k = complete(&["a", "b"]);
        assert_eq!(k.nodes.len(), 2);
        assert_eq!(k.edges.len(), 4);
        for n in 0..4 {
            assert_eq!(paths(&k, n).len(), 2usize.pow(n as u32 + 1));
        }
    }

    #[test]
    fn loop_counts() {
        let l = loops(&["x", "y"]);
        assert_eq!(l.nodes.len(), 1);
        assert_eq!(l.edges.len(), 2);
        for n in 0..5 {
            assert_eq!(paths(&l, n).len(), 2usize.pow(n as u32));
        }
    }

    #[test]
    fn constant_counts() {
        let c = constant(&["a", "b", "c"]);
        for n in 0..4 {
            assert_eq!(paths(&c, n).len(), 3);
        }
    }

    #[test]
    fn restrict_full_is_identity() {
        let k = complete(&["a", "b"]);
        for x in paths(&k, 3) {
            assert_eq!(restrict_section(&x, 0, 3).unwrap(), x);
        }
    }

    #[test]
    fn glue_then_restrict_recovers_halves() {
        let k = complete(&["a", "b"]);
        for x1 in paths(&k, 2) {
            for x2 in paths(&k, 2) {
                if x1.cod_germ() != x2.dom_germ() {
                    assert!(glue_sections(&k, &x1, &x2).is_err());
                    continue;
                }
                let glued = glue_sections(&k, &x1, &x2).unwrap();
                assert_eq!(restrict_section(&glued, 0, 2).unwrap(), x1);
                assert_eq!(restrict_section(&glued, 2, 2).unwrap(), x2);
            }
        }
    }

    #[test]
    fn extension_of_single_edge() {
        let (e1, _, _) = extension(&arrow(), 1);
        assert_eq!(e1.nodes.len(), 1);
        assert_eq!(e1.edges.len(), 0);
    }

    #[test]
    fn extension_zero_is_identity() {
        let g = complete(&["a", "b"]);
        let (e0, l, r) = extension(&g, 0);
        assert_eq!(e0, g);
        assert_eq!(l, GraphHom::identity(&g));
        assert_eq!(r, GraphHom::identity(&g));
    }

    #[test]
    fn extension_maps_are_homs() {
        for g in [complete(&["a", "b"]), constant(&["a", "b"]), arrow()] {
            for k in 0..=3 {
                let (_, l, r) = extension(&g, k);
                l.validate().unwrap();
                r.validate().unwrap();
            }
        }
    }

    #[test]
    fn iterated_extension_is_double_extension() {
        let g = complete(&["a", "b"]);
        let (e1, _, _) = extension(&g, 1);
        let (e11, _, _) = extension(&e1, 1);
        let (e2, _, _) = extension(&g, 2);
        assert!(isomorphic(&e11, &e2, 10).unwrap());
    }

    #[test]
    fn product_with_terminal() {
        let g = complete(&["a", "b"]);
        let t = terminal();
        let (p, _) = product(&[&g, &t]);
        assert!(isomorphic(&p, &g, 8).unwrap());
    }

    #[test]
    fn pullback_of_identities() {
        let g = complete(&["a", "b"]);
        let id = GraphHom::identity(&g);
        let (pb, l1, l2) = pullback(&id, &id).unwrap();
        assert_eq!(pb.nodes.len(), g.nodes.len());
        assert_eq!(pb.edges.len(), g.edges.len());
        l1.validate().unwrap();
        l2.validate().unwrap();
    }

    #[test]
    fn pullback_counts_match_brute_force() {
        let c = constant(&["x", "y"]);
        let k = complete(&["x", "y"]);
        // fold: constant -> complete by node identity.
        let f = GraphHom {
            dom: c.clone(),
            cod: k.clone(),
            node_map: vec![0, 1],
            edge_map: vec![0, 3],
        };
        f.validate().unwrap();
        let (pb, _, _) = pullback(&f, &f).unwrap();
        let expect: usize = (0..2)
            .flat_map(|a| (0..2).map(move |b| (a, b)))
            .filter(|&(a, b)| a == b)
            .count();
        assert_eq!(pb.nodes.len(), expect);
    }

    #[test]
    fn terminal_is_constant_one() {
        assert!(isomorphic(&terminal(), &constant(&["z"]), 4).unwrap());
    }
}
