//! Machines presented as spans: a state object with one map to the product
//! of input ports and one to the product of output ports. Wiring such
//! machines together is a pullback: the composite state keeps exactly those
//! (environment, state) pairs whose wires agree. The same construction runs
//! over finite sets or over graphs; over graphs it also supports the
//! verdicts that matter for execution, namely whether every input step can
//! be followed (total), followed in at most one way (deterministic), and
//! whether the machine can always keep its current output for one more step
//! (inertial).

use crate::graph::{self, loop_edges, paths, Graph, GraphError, GraphHom, Section};
use crate::moore::{input_tuples, MooreMachine};
use crate::wiring::{Feed, PortType, WiringDiagram, WiringError};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum SpanError {
    PortMismatch(String),
    Unsupported(String),
    Graph(GraphError),
    Wiring(WiringError),
}

impl fmt::Display for SpanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpanError::PortMismatch(m) => write!(f, "port mismatch: {m}"),
            SpanError::Unsupported(m) => write!(f, "unsupported: {m}"),
            SpanError::Graph(e) => write!(f, "{e}"),
            SpanError::Wiring(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SpanError {}

impl From<GraphError> for SpanError {
    fn from(e: GraphError) -> Self {
        SpanError::Graph(e)
    }
}

impl From<WiringError> for SpanError {
    fn from(e: WiringError) -> Self {
        SpanError::Wiring(e)
    }
}

/// The ambient world machines live in: objects, maps, finite products and
/// pullbacks. Two instances ship: [`FinSetUniverse`] and [`GraphUniverse`].
pub trait Universe {
    type Obj: Clone + PartialEq + fmt::Debug;
    type Mor: Clone + PartialEq + fmt::Debug;

    fn dom(&self, f: &Self::Mor) -> Self::Obj;
    fn cod(&self, f: &Self::Mor) -> Self::Obj;
    fn identity(&self, o: &Self::Obj) -> Self::Mor;
    /// `g` after `f`.
    fn compose(&self, g: &Self::Mor, f: &Self::Mor) -> Result<Self::Mor, SpanError>;
    /// Product with projections. Empty: terminal object. One factor: the
    /// factor itself with the identity projection.
    fn product(&self, os: &[&Self::Obj]) -> (Self::Obj, Vec<Self::Mor>);
    /// The map into `product(cods of parts)` whose projections are `parts`.
    fn tuple(&self, dom: &Self::Obj, parts: &[&Self::Mor]) -> Result<Self::Mor, SpanError>;
    fn pullback(&self, f: &Self::Mor, g: &Self::Mor)
        -> Result<(Self::Obj, Self::Mor, Self::Mor), SpanError>;
    /// The object a port of this type carries in this universe.
    fn port_object(&self, ty: &PortType) -> Result<Self::Obj, SpanError>;
    fn is_iso(&self, f: &Self::Mor) -> bool;
    /// Whether two spans over identical feet are isomorphic, by search.
    fn span_iso_search(
        &self,
        a: (&Self::Obj, &Self::Mor, &Self::Mor),
        b: (&Self::Obj, &Self::Mor, &Self::Mor),
    ) -> Result<bool, SpanError>;
}

/// A machine in universe `U`. Invariant: `in_map` goes from `state` to the
/// product of the input port objects (in declaration order), `out_map` to
/// the product of the output port objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Machine<U: Universe> {
    pub in_ports: Vec<(String, U::Obj)>,
    pub out_ports: Vec<(String, U::Obj)>,
    pub state: U::Obj,
    pub in_map: U::Mor,
    pub out_map: U::Mor,
}

fn port_objs<U: Universe>(ports: &[(String, U::Obj)]) -> Vec<&U::Obj> {
    ports.iter().map(|(_, o)| o).collect()
}

impl<U: Universe> Machine<U> {
    pub fn validate(&self, u: &U) -> Result<(), SpanError> {
        let (a, _) = u.product(&port_objs::<U>(&self.in_ports));
        let (b, _) = u.product(&port_objs::<U>(&self.out_ports));
        if u.dom(&self.in_map) != self.state || u.dom(&self.out_map) != self.state {
            return Err(SpanError::PortMismatch("maps must start at the state object".into()));
        }
        if u.cod(&self.in_map) != a {
            return Err(SpanError::PortMismatch("input map codomain".into()));
        }
        if u.cod(&self.out_map) != b {
            return Err(SpanError::PortMismatch("output map codomain".into()));
        }
        Ok(())
    }

    pub fn interface(&self, u: &U, label: &str, ty_of: &dyn Fn(&U::Obj) -> PortType) -> crate::wiring::Interface {
        let _ = u;
        let mut b = crate::wiring::Interface::new(label);
        for (name, o) in &self.in_ports {
            b = b.input(name, ty_of(o));
        }
        for (name, o) in &self.out_ports {
            b = b.output(name, ty_of(o));
        }
        b
    }
}

/// A rewired machine together with the pullback legs it was built from:
/// `env` lands in `product([product(outer inputs), product(old outputs)])`,
/// `to_state` in the old state. Tests use the legs to build canonical
/// comparison maps; execution only needs `machine`.
#[derive(Debug, Clone)]
pub struct Rewired<U: Universe> {
    pub machine: Machine<U>,
    pub env: U::Mor,
    pub to_state: U::Mor,
}

fn check_machine_ports<U: Universe>(
    u: &U,
    ports: &[(String, U::Obj)],
    box_ports: &[crate::wiring::Port],
) -> Result<(), SpanError> {
    if ports.len() != box_ports.len() {
        return Err(SpanError::PortMismatch(format!(
            "{} machine ports for {} box ports",
            ports.len(),
            box_ports.len()
        )));
    }
    for ((name, o), p) in ports.iter().zip(box_ports) {
        if *name != p.name {
            return Err(SpanError::PortMismatch(format!("{name:?} vs {:?}", p.name)));
        }
        if u.port_object(&p.ty)? != *o {
            return Err(SpanError::PortMismatch(format!("object of port {name:?}")));
        }
    }
    Ok(())
}

/// Fills a wiring diagram with a span machine. The new state is the pullback
/// of `(inputs routed from environment, outputs)` against the machine's own
/// span: a composite state is an (environment, state) pair that agrees on
/// every wire, including feedback wires.
pub fn rewire<U: Universe>(
    u: &U,
    wd: &WiringDiagram,
    m: &Machine<U>,
) -> Result<Rewired<U>, SpanError> {
    let report = wd.validate();
    if !report.ok() {
        return Err(SpanError::Wiring(WiringError::Invalid(report)));
    }
    check_machine_ports(u, &m.in_ports, &wd.inner.inputs)?;
    check_machine_ports(u, &m.out_ports, &wd.inner.outputs)?;

    let outer_in: Vec<(String, U::Obj)> = wd
        .outer
        .inputs
        .iter()
        .map(|p| Ok((p.name.clone(), u.port_object(&p.ty)?)))
        .collect::<Result<_, SpanError>>()?;
    let outer_out: Vec<(String, U::Obj)> = wd
        .outer
        .outputs
        .iter()
        .map(|p| Ok((p.name.clone(), u.port_object(&p.ty)?)))
        .collect::<Result<_, SpanError>>()?;

    let (b, b_projs) = u.product(&port_objs::<U>(&m.out_ports));
    let (yin, yin_projs) = u.product(&port_objs::<U>(&outer_in));
    let (env_obj, p_projs) = u.product(&[&yin, &b]);
    let p_yin = &p_projs[0];
    let p_b = &p_projs[1];

    let mut routed_in: Vec<U::Mor> = Vec::new();
    for (name, _) in &m.in_ports {
        let feed = wd.feed.get(name).expect("validated");
        let mor = match feed {
            Feed::FromOuter(q) => {
                let j = outer_in.iter().position(|(n, _)| n == q).expect("validated");
                u.compose(&yin_projs[j], p_yin)?
            }
            Feed::FromInner(q) => {
                let j = m.out_ports.iter().position(|(n, _)| n == q).ok_or_else(|| {
                    SpanError::PortMismatch(format!("feed from unknown output {q:?}"))
                })?;
                u.compose(&b_projs[j], p_b)?
            }
        };
        routed_in.push(mor);
    }
    let route = u.tuple(&env_obj, &routed_in.iter().collect::<Vec<_>>())?;

    let env_pair = u.tuple(&env_obj, &[&route, p_b])?;
    let span_pair = u.tuple(&m.state, &[&m.in_map, &m.out_map])?;
    let (t, env, to_state) = u.pullback(&env_pair, &span_pair)?;

    let q_in = u.compose(p_yin, &env)?;
    let mut routed_out: Vec<U::Mor> = Vec::new();
    for port in &wd.outer.outputs {
        let q = wd.read.get(&port.name).expect("validated");
        let j = m.out_ports.iter().position(|(n, _)| n == q).ok_or_else(|| {
            SpanError::PortMismatch(format!("read from unknown output {q:?}"))
        })?;
        routed_out.push(b_projs[j].clone());
    }
    let out_route = u.tuple(&b, &routed_out.iter().collect::<Vec<_>>())?;
    let q_out = u.compose(&out_route, &u.compose(&m.out_map, &to_state)?)?;

    let machine = Machine {
        in_ports: outer_in,
        out_ports: outer_out,
        state: t,
        in_map: q_in,
        out_map: q_out,
    };
    machine.validate(u)?;
    Ok(Rewired { machine, env, to_state })
}

/// Machines side by side: state is the product, ports are concatenated with
/// `prefix.` on the names.
pub fn tensor_all<U: Universe>(
    u: &U,
    parts: &[(&str, &Machine<U>)],
) -> Result<Machine<U>, SpanError> {
    let states: Vec<&U::Obj> = parts.iter().map(|(_, m)| &m.state).collect();
    let (s, s_projs) = u.product(&states);
    let mut in_ports = Vec::new();
    let mut out_ports = Vec::new();
    let mut in_comps = Vec::new();
    let mut out_comps = Vec::new();
    for (k, (prefix, m)) in parts.iter().enumerate() {
        let (_, a_projs) = u.product(&port_objs::<U>(&m.in_ports));
        let (_, b_projs) = u.product(&port_objs::<U>(&m.out_ports));
        let to_part_in = u.compose(&m.in_map, &s_projs[k])?;
        let to_part_out = u.compose(&m.out_map, &s_projs[k])?;
        for (j, (name, o)) in m.in_ports.iter().enumerate() {
            in_ports.push((format!("{prefix}.{name}"), o.clone()));
            in_comps.push(u.compose(&a_projs[j], &to_part_in)?);
        }
        for (j, (name, o)) in m.out_ports.iter().enumerate() {
            out_ports.push((format!("{prefix}.{name}"), o.clone()));
            out_comps.push(u.compose(&b_projs[j], &to_part_out)?);
        }
    }
    let in_map = u.tuple(&s, &in_comps.iter().collect::<Vec<_>>())?;
    let out_map = u.tuple(&s, &out_comps.iter().collect::<Vec<_>>())?;
    let m = Machine { in_ports, out_ports, state: s, in_map, out_map };
    m.validate(u)?;
    Ok(m)
}

/// Whether two machines over the same ports are isomorphic as spans: a
/// structure bijection on states commuting with both maps. Pass a candidate
/// map to check it; pass nothing to search.
pub fn span_isomorphic<U: Universe>(
    u: &U,
    m1: &Machine<U>,
    m2: &Machine<U>,
    witness: Option<&U::Mor>,
) -> Result<bool, SpanError> {
    if m1.in_ports != m2.in_ports || m1.out_ports != m2.out_ports {
        return Ok(false);
    }
    match witness {
        Some(w) => {
            if u.dom(w) != m1.state || u.cod(w) != m2.state || !u.is_iso(w) {
                return Ok(false);
            }
            Ok(u.compose(&m2.in_map, w)? == m1.in_map && u.compose(&m2.out_map, w)? == m1.out_map)
        }
        None => u.span_iso_search(
            (&m1.state, &m1.in_map, &m1.out_map),
            (&m2.state, &m2.in_map, &m2.out_map),
        ),
    }
}

// ---------------------------------------------------------------------------
// Finite sets.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinSet {
    pub elems: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinMor {
    pub dom: FinSet,
    pub cod: FinSet,
    pub map: Vec<usize>,
}

impl FinMor {
    pub fn validate(&self) -> Result<(), SpanError> {
        if self.map.len() != self.dom.elems.len() || self.map.iter().any(|&i| i >= self.cod.elems.len()) {
            return Err(SpanError::PortMismatch("map out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FinSetUniverse;

impl Universe for FinSetUniverse {
    type Obj = FinSet;
    type Mor = FinMor;

    fn dom(&self, f: &FinMor) -> FinSet {
        f.dom.clone()
    }

    fn cod(&self, f: &FinMor) -> FinSet {
        f.cod.clone()
    }

    fn identity(&self, o: &FinSet) -> FinMor {
        FinMor { dom: o.clone(), cod: o.clone(), map: (0..o.elems.len()).collect() }
    }

    fn compose(&self, g: &FinMor, f: &FinMor) -> Result<FinMor, SpanError> {
        if f.cod != g.dom {
            return Err(SpanError::PortMismatch("composition endpoints".into()));
        }
        Ok(FinMor {
            dom: f.dom.clone(),
            cod: g.cod.clone(),
            map: f.map.iter().map(|&i| g.map[i]).collect(),
        })
    }

    fn product(&self, os: &[&FinSet]) -> (FinSet, Vec<FinMor>) {
        if os.len() == 1 {
            return (os[0].clone(), vec![self.identity(os[0])]);
        }
        let sizes: Vec<usize> = os.iter().map(|o| o.elems.len()).collect();
        let total: usize = sizes.iter().product();
        let mut elems = Vec::with_capacity(total);
        for flat in 0..total {
            let idx = graph::untuple_index(&sizes, flat);
            let parts: Vec<&str> = idx.iter().zip(os).map(|(&i, o)| o.elems[i].as_str()).collect();
            elems.push(format!("({})", parts.join(",")));
        }
        let prod = FinSet { elems };
        let projs = (0..os.len())
            .map(|k| FinMor {
                dom: prod.clone(),
                cod: os[k].clone(),
                map: (0..total).map(|flat| graph::untuple_index(&sizes, flat)[k]).collect(),
            })
            .collect();
        (prod, projs)
    }

    fn tuple(&self, dom: &FinSet, parts: &[&FinMor]) -> Result<FinMor, SpanError> {
        for p in parts {
            if p.dom != *dom {
                return Err(SpanError::PortMismatch("tuple component domain".into()));
            }
        }
        if parts.len() == 1 {
            return Ok(parts[0].clone());
        }
        let cods: Vec<&FinSet> = parts.iter().map(|p| &p.cod).collect();
        let (prod, _) = self.product(&cods);
        let sizes: Vec<usize> = cods.iter().map(|o| o.elems.len()).collect();
        let map = (0..dom.elems.len())
            .map(|x| {
                let idx: Vec<usize> = parts.iter().map(|p| p.map[x]).collect();
                graph::tuple_index(&sizes, &idx)
            })
            .collect();
        Ok(FinMor { dom: dom.clone(), cod: prod, map })
    }

    fn pullback(&self, f: &FinMor, g: &FinMor) -> Result<(FinSet, FinMor, FinMor), SpanError> {
        if f.cod != g.cod {
            return Err(SpanError::PortMismatch("pullback codomains".into()));
        }
        let mut elems = Vec::new();
        let mut pairs = Vec::new();
        for (a, an) in f.dom.elems.iter().enumerate() {
            for (b, bn) in g.dom.elems.iter().enumerate() {
                if f.map[a] == g.map[b] {
                    pairs.push((a, b));
                    elems.push(format!("({an},{bn})"));
                }
            }
        }
        let pb = FinSet { elems };
        let leg_f = FinMor {
            dom: pb.clone(),
            cod: f.dom.clone(),
            map: pairs.iter().map(|&(a, _)| a).collect(),
        };
        let leg_g = FinMor {
            dom: pb.clone(),
            cod: g.dom.clone(),
            map: pairs.iter().map(|&(_, b)| b).collect(),
        };
        Ok((pb, leg_f, leg_g))
    }

    fn port_object(&self, ty: &PortType) -> Result<FinSet, SpanError> {
        match ty {
            PortType::Finite(sym) => Ok(FinSet { elems: sym.clone() }),
            // A behavior port seen through constant sections: its loops.
            PortType::Behavior(g) => Ok(FinSet {
                elems: loop_edges(g).iter().map(|&e| g.edges[e].name.clone()).collect(),
            }),
            PortType::Euclidean(_) => {
                Err(SpanError::Unsupported("euclidean port in a finite universe".into()))
            }
        }
    }

    fn is_iso(&self, f: &FinMor) -> bool {
        if f.dom.elems.len() != f.cod.elems.len() {
            return false;
        }
        let mut seen = vec![false; f.cod.elems.len()];
        for &i in &f.map {
            if seen[i] {
                return false;
            }
            seen[i] = true;
        }
        true
    }

    fn span_iso_search(
        &self,
        a: (&FinSet, &FinMor, &FinMor),
        b: (&FinSet, &FinMor, &FinMor),
    ) -> Result<bool, SpanError> {
        // With both legs fixed, elements only need matching in-out
        // fingerprints; count multiplicities on each side.
        let fp = |s: &FinSet, i: &FinMor, o: &FinMor| {
            let mut m: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            for x in 0..s.elems.len() {
                *m.entry((i.map[x], o.map[x])).or_insert(0) += 1;
            }
            m
        };
        Ok(fp(a.0, a.1, a.2) == fp(b.0, b.1, b.2))
    }
}

// ---------------------------------------------------------------------------
// Graphs.

#[derive(Debug, Clone, Copy, Default)]
pub struct GraphUniverse;

impl Universe for GraphUniverse {
    type Obj = Graph;
    type Mor = GraphHom;

    fn dom(&self, f: &GraphHom) -> Graph {
        f.dom.clone()
    }

    fn cod(&self, f: &GraphHom) -> Graph {
        f.cod.clone()
    }

    fn identity(&self, o: &Graph) -> GraphHom {
        GraphHom::identity(o)
    }

    fn compose(&self, g: &GraphHom, f: &GraphHom) -> Result<GraphHom, SpanError> {
        Ok(g.compose(f)?)
    }

    fn product(&self, os: &[&Graph]) -> (Graph, Vec<GraphHom>) {
        graph::product(os)
    }

    fn tuple(&self, dom: &Graph, parts: &[&GraphHom]) -> Result<GraphHom, SpanError> {
        for p in parts {
            if p.dom != *dom {
                return Err(SpanError::PortMismatch("tuple component domain".into()));
            }
        }
        if parts.len() == 1 {
            return Ok(parts[0].clone());
        }
        let cods: Vec<&Graph> = parts.iter().map(|p| &p.cod).collect();
        let (prod, _) = graph::product(&cods);
        let nsizes: Vec<usize> = cods.iter().map(|g| g.nodes.len()).collect();
        let esizes: Vec<usize> = cods.iter().map(|g| g.edges.len()).collect();
        let node_map = (0..dom.nodes.len())
            .map(|v| {
                graph::tuple_index(&nsizes, &parts.iter().map(|p| p.node_map[v]).collect::<Vec<_>>())
            })
            .collect();
        let edge_map = (0..dom.edges.len())
            .map(|e| {
                graph::tuple_index(&esizes, &parts.iter().map(|p| p.edge_map[e]).collect::<Vec<_>>())
            })
            .collect();
        Ok(GraphHom { dom: dom.clone(), cod: prod, node_map, edge_map })
    }

    fn pullback(&self, f: &GraphHom, g: &GraphHom) -> Result<(Graph, GraphHom, GraphHom), SpanError> {
        Ok(graph::pullback(f, g)?)
    }

    fn port_object(&self, ty: &PortType) -> Result<Graph, SpanError> {
        match ty {
            PortType::Behavior(g) => Ok(g.clone()),
            // Plain symbols seen as behaviors: any symbol can follow any.
            PortType::Finite(sym) => {
                Ok(graph::complete(&sym.iter().map(|s| s.as_str()).collect::<Vec<_>>()))
            }
            PortType::Euclidean(_) => {
                Err(SpanError::Unsupported("euclidean port in a graph universe".into()))
            }
        }
    }

    fn is_iso(&self, f: &GraphHom) -> bool {
        f.is_bijective()
    }

    fn span_iso_search(
        &self,
        a: (&Graph, &GraphHom, &GraphHom),
        b: (&Graph, &GraphHom, &GraphHom),
    ) -> Result<bool, SpanError> {
        Ok(graph_span_iso(a, b))
    }
}

/// Backtracking search for a span isomorphism over graphs: a node bijection
/// compatible with both legs, under which the edge counts per (source,
/// target, leg images) bucket agree.
fn graph_span_iso(
    a: (&Graph, &GraphHom, &GraphHom),
    b: (&Graph, &GraphHom, &GraphHom),
) -> bool {
    let (ga, _, _) = a;
    let (gb, _, _) = b;
    if ga.nodes.len() != gb.nodes.len() || ga.edges.len() != gb.edges.len() {
        return false;
    }
    let n = ga.nodes.len();
    let mut assign: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; n];

    fn buckets(
        g: &Graph,
        i: &GraphHom,
        o: &GraphHom,
        perm: &dyn Fn(usize) -> usize,
    ) -> BTreeMap<(usize, usize, usize, usize), usize> {
        let mut m = BTreeMap::new();
        for (e, edge) in g.edges.iter().enumerate() {
            *m.entry((perm(edge.src), perm(edge.tgt), i.edge_map[e], o.edge_map[e]))
                .or_insert(0) += 1;
        }
        m
    }

    fn go(
        a: (&Graph, &GraphHom, &GraphHom),
        b: (&Graph, &GraphHom, &GraphHom),
        assign: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        v: usize,
    ) -> bool {
        let (ga, ia, oa) = a;
        let (gb, ib, ob) = b;
        let n = assign.len();
        if v == n {
            let ba = buckets(ga, ia, oa, &|x| assign[x].unwrap());
            let bb = buckets(gb, ib, ob, &|x| x);
            return ba == bb;
        }
        for w in 0..n {
            if used[w] || ia.node_map[v] != ib.node_map[w] || oa.node_map[v] != ob.node_map[w] {
                continue;
            }
            assign[v] = Some(w);
            used[w] = true;
            if go(a, b, assign, used, v + 1) {
                return true;
            }
            assign[v] = None;
            used[w] = false;
        }
        false
    }

    go(a, b, &mut assign, &mut used, 0)
}

/// Builds the map `dom -> cod` determined by matching leg fingerprints:
/// node `v` goes to the unique node agreeing with it under every leg pair,
/// and likewise for edges. Returns `None` when a match is missing or
/// ambiguous. This is how canonical comparison isos are constructed: both
/// sides of a law come with projections to the same data.
pub fn hom_by_legs(
    dom: &Graph,
    cod: &Graph,
    leg_pairs: &[(&GraphHom, &GraphHom)],
) -> Option<GraphHom> {
    let mut node_lookup: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for w in 0..cod.nodes.len() {
        let key: Vec<usize> = leg_pairs.iter().map(|(_, g)| g.node_map[w]).collect();
        node_lookup.entry(key).or_default().push(w);
    }
    let mut node_map = Vec::with_capacity(dom.nodes.len());
    for v in 0..dom.nodes.len() {
        let key: Vec<usize> = leg_pairs.iter().map(|(f, _)| f.node_map[v]).collect();
        match node_lookup.get(&key) {
            Some(ws) if ws.len() == 1 => node_map.push(ws[0]),
            _ => return None,
        }
    }
    let mut edge_lookup: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for w in 0..cod.edges.len() {
        let key: Vec<usize> = leg_pairs.iter().map(|(_, g)| g.edge_map[w]).collect();
        edge_lookup.entry(key).or_default().push(w);
    }
    let mut edge_map = Vec::with_capacity(dom.edges.len());
    for e in 0..dom.edges.len() {
        let key: Vec<usize> = leg_pairs.iter().map(|(f, _)| f.edge_map[e]).collect();
        match edge_lookup.get(&key) {
            Some(ws) if ws.len() == 1 => edge_map.push(ws[0]),
            _ => return None,
        }
    }
    let hom = GraphHom { dom: dom.clone(), cod: cod.clone(), node_map, edge_map };
    hom.validate().ok()?;
    Some(hom)
}

// ---------------------------------------------------------------------------
// Verdicts for graph machines.

/// The two execution questions, each asked at two depths. The step-level
/// answer compares length-`depth` state behaviors against (input behavior,
/// start germ) pairs: `total` when every pair is realized, `deterministic`
/// when at most once. The germ-level answer asks the same of states over
/// input germs alone. A machine can pass one reading and fail the other;
/// both are reported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdVerdict {
    pub depth: usize,
    pub total: bool,
    pub deterministic: bool,
    pub germ_total: bool,
    pub germ_deterministic: bool,
    pub missing: Option<String>,
    pub collision: Option<String>,
    pub germ_missing: Option<String>,
    pub germ_collision: Option<String>,
}

impl TdVerdict {
    /// The step-level reading: every input behavior can be followed from
    /// every compatible start, in exactly one way. The germ flags are a
    /// coarser diagnostic and legitimately disagree; a delay, for instance,
    /// passes here while many states share an input germ.
    pub fn passes(&self) -> bool {
        self.total && self.deterministic
    }
}

/// Computes the verdict at the given depth (depth 1 is canonical; higher
/// depths must agree, which the tests check).
pub fn total_deterministic(m: &Machine<GraphUniverse>, depth: usize) -> Result<TdVerdict, SpanError> {
    assert!(depth >= 1);
    let u = GraphUniverse;
    m.validate(&u)?;
    let a = m.in_map.cod.clone();
    let s = &m.in_map.dom;

    // Germ level: node map coverage.
    let mut node_hits: Vec<Vec<usize>> = vec![vec![]; a.nodes.len()];
    for v in 0..s.nodes.len() {
        node_hits[m.in_map.node_map[v]].push(v);
    }
    let germ_missing = node_hits
        .iter()
        .position(|h| h.is_empty())
        .map(|i| format!("no state over input germ {:?}", a.nodes[i]));
    let germ_collision = node_hits
        .iter()
        .enumerate()
        .find(|(_, h)| h.len() > 1)
        .map(|(i, h)| {
            format!(
                "states {:?} and {:?} share input germ {:?}",
                s.nodes[h[0]], s.nodes[h[1]], a.nodes[i]
            )
        });

    // Step level at `depth`: behaviors against (input behavior, start germ).
    let mut hits: BTreeMap<(Section, usize), Vec<Section>> = BTreeMap::new();
    for apath in paths(&a, depth) {
        for v in 0..s.nodes.len() {
            if m.in_map.node_map[v] == apath.dom_germ() {
                hits.insert((apath.clone(), v), vec![]);
            }
        }
    }
    for spath in paths(s, depth) {
        let img = m.in_map.apply_section(&spath);
        hits.get_mut(&(img, spath.dom_germ()))
            .expect("image starts at the mapped germ")
            .push(spath);
    }
    let show = |sec: &Section, g: &Graph| -> String {
        if sec.edges.is_empty() {
            g.nodes[sec.nodes[0]].clone()
        } else {
            sec.edges.iter().map(|&e| g.edges[e].name.as_str()).collect::<Vec<_>>().join("|")
        }
    };
    let missing = hits
        .iter()
        .find(|(_, v)| v.is_empty())
        .map(|((ap, v), _)| {
            format!(
                "no run over input behavior {:?} from state {:?}",
                show(ap, &a),
                s.nodes[*v]
            )
        });
    let collision = hits
        .iter()
        .find(|(_, v)| v.len() > 1)
        .map(|((ap, _), v)| {
            format!(
                "runs {:?} and {:?} both lie over {:?}",
                show(&v[0], s),
                show(&v[1], s),
                show(ap, &a)
            )
        });

    Ok(TdVerdict {
        depth,
        total: missing.is_none(),
        deterministic: collision.is_none(),
        germ_total: germ_missing.is_none(),
        germ_deterministic: germ_collision.is_none(),
        missing,
        collision,
        germ_missing,
        germ_collision,
    })
}

/// Independent reading of the same verdict: for every state node and every
/// input edge leaving its input germ, count lifts. Total means always at
/// least one, deterministic at most one. Must agree with
/// [`total_deterministic`] at depth 1 whenever the germ level passes.
pub fn unique_lift_verdict(m: &Machine<GraphUniverse>) -> (bool, bool) {
    let s = &m.in_map.dom;
    let a = &m.in_map.cod;
    let mut total = true;
    let mut det = true;
    for v in 0..s.nodes.len() {
        for (ae, aedge) in a.edges.iter().enumerate() {
            if aedge.src != m.in_map.node_map[v] {
                continue;
            }
            let count = s
                .edges
                .iter()
                .enumerate()
                .filter(|(e, edge)| edge.src == v && m.in_map.edge_map[*e] == ae)
                .count();
            if count == 0 {
                total = false;
            }
            if count > 1 {
                det = false;
            }
        }
    }
    (total, det)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InertiaFailure {
    /// Two steps out of one state publish different outputs, so the state
    /// does not determine which output to hold.
    ConflictingSteps { state: String, out1: String, out2: String },
    /// A state with no outgoing step sits over an output germ that no
    /// output edge leaves: nothing to hold.
    StuckGerm { state: String },
}

impl fmt::Display for InertiaFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InertiaFailure::ConflictingSteps { state, out1, out2 } => write!(
                f,
                "state {state:?} steps with outputs {out1:?} and {out2:?}; cannot commit to one"
            ),
            InertiaFailure::StuckGerm { state } => {
                write!(f, "state {state:?} has no step and its output germ has no continuation")
            }
        }
    }
}

/// A machine is inertial when its output map lifts through the one-step
/// extension of the output object: every state commits to a next output
/// edge consistent with all its steps. Returns the lift (state graph into
/// the extension graph) or the reason none exists.
pub fn inertial_lift(m: &Machine<GraphUniverse>) -> Result<GraphHom, InertiaFailure> {
    let s = &m.out_map.dom;
    let b = m.out_map.cod.clone();
    let (ext, lambda, _rho) = graph::extension(&b, 1);
    // Ext node index by underlying output edge.
    let mut by_edge = vec![usize::MAX; b.edges.len()];
    for (i, _) in ext.nodes.iter().enumerate() {
        // Ext_1 nodes enumerate length-1 paths in paths() order.
        by_edge[paths(&b, 1)[i].edges[0]] = i;
    }
    let mut ext_edge_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, p2) in paths(&b, 2).iter().enumerate() {
        ext_edge_index.insert((p2.edges[0], p2.edges[1]), i);
    }

    let mut assigned: Vec<Option<usize>> = vec![None; s.nodes.len()];
    for (e, edge) in s.edges.iter().enumerate() {
        let out = m.out_map.edge_map[e];
        match assigned[edge.src] {
            None => assigned[edge.src] = Some(out),
            Some(prev) if prev == out => {}
            Some(prev) => {
                return Err(InertiaFailure::ConflictingSteps {
                    state: s.nodes[edge.src].clone(),
                    out1: b.edges[prev].name.clone(),
                    out2: b.edges[out].name.clone(),
                })
            }
        }
    }
    let mut node_map = Vec::with_capacity(s.nodes.len());
    for v in 0..s.nodes.len() {
        let be = match assigned[v] {
            Some(be) => be,
            None => {
                let germ = m.out_map.node_map[v];
                match b.edges.iter().position(|e| e.src == germ) {
                    Some(be) => be,
                    None => return Err(InertiaFailure::StuckGerm { state: s.nodes[v].clone() }),
                }
            }
        };
        node_map.push(by_edge[be]);
    }
    let edge_map = s
        .edges
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let first = m.out_map.edge_map[e];
            let second_node = node_map[edge.tgt];
            let second = paths(&b, 1)[second_node].edges[0];
            ext_edge_index[&(first, second)]
        })
        .collect();
    let lift = GraphHom { dom: s.clone(), cod: ext.clone(), node_map, edge_map };
    debug_assert!(lift.validate().is_ok());
    debug_assert_eq!(lambda.compose(&lift).unwrap(), m.out_map);
    Ok(lift)
}

// ---------------------------------------------------------------------------
// Constructions of graph machines.

/// The span form of a finite state machine. State nodes are (input tuple,
/// state) pairs indexed `tuple_index * |states| + state_index`; an edge
/// `(x0, s0) -> (x1, update(x0, s0))` exists for every next tuple `x1`. The
/// input leg reads off the tuple, the output leg shows `readout` along the
/// step. Always total, deterministic, and inertial.
pub fn unroll_moore(m: &MooreMachine) -> Result<Machine<GraphUniverse>, SpanError> {
    let u = GraphUniverse;
    let in_ports: Vec<(String, Graph)> = m
        .inputs
        .iter()
        .map(|(name, sym)| {
            (name.clone(), graph::complete(&sym.iter().map(|s| s.as_str()).collect::<Vec<_>>()))
        })
        .collect();
    let out_ports: Vec<(String, Graph)> = m
        .outputs
        .iter()
        .map(|(name, sym)| {
            (name.clone(), graph::complete(&sym.iter().map(|s| s.as_str()).collect::<Vec<_>>()))
        })
        .collect();
    let tuples = input_tuples(&m.inputs);
    let nstates = m.states.len();
    let tuple_idx: BTreeMap<&Vec<String>, usize> =
        tuples.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let state_idx: BTreeMap<&String, usize> =
        m.states.iter().enumerate().map(|(i, s)| (s, i)).collect();

    let mut nodes = Vec::new();
    for t in &tuples {
        for s in &m.states {
            nodes.push(format!("({}|{s})", t.join(",")));
        }
    }
    let mut edges = Vec::new();
    let mut edge_data = Vec::new();
    for (ti, t) in tuples.iter().enumerate() {
        for (si, s) in m.states.iter().enumerate() {
            let next = m
                .step(t, s)
                .map_err(|e| SpanError::PortMismatch(e.to_string()))?;
            let ni = state_idx[&next];
            for (t1i, t1) in tuples.iter().enumerate() {
                edges.push(graph::Edge {
                    name: format!("({}|{s}=>{})", t.join(","), t1.join(",")),
                    src: ti * nstates + si,
                    tgt: t1i * nstates + ni,
                });
                edge_data.push((ti, si, t1i, ni));
            }
        }
    }
    let state = Graph { nodes, edges, refl: None };

    let (a, _) = u.product(&port_objs::<GraphUniverse>(&in_ports));
    let (b, _) = u.product(&port_objs::<GraphUniverse>(&out_ports));

    // Indices in the port products: nodes are symbol tuples row-major, edges
    // pair tuples row-major; both match `input_tuples` order.
    let in_sizes: Vec<usize> = m.inputs.iter().map(|(_, s)| s.len()).collect();
    let out_sizes: Vec<usize> = m.outputs.iter().map(|(_, s)| s.len()).collect();
    let sym_idx = |sym: &[(String, Vec<String>)], t: &[String]| -> Vec<usize> {
        sym.iter().zip(t).map(|((_, alphabet), v)| alphabet.iter().position(|x| x == v).unwrap()).collect()
    };
    let a_node = |t: &Vec<String>| graph::tuple_index(&in_sizes, &sym_idx(&m.inputs, t));
    // Edge of a product of complete graphs: per-port edge index is
    // src_sym * |alphabet| + tgt_sym.
    let a_edge = |t0: &Vec<String>, t1: &Vec<String>| {
        let i0 = sym_idx(&m.inputs, t0);
        let i1 = sym_idx(&m.inputs, t1);
        let per: Vec<usize> = i0
            .iter()
            .zip(&i1)
            .zip(&in_sizes)
            .map(|((a0, a1), n)| a0 * n + a1)
            .collect();
        graph::tuple_index(&in_sizes.iter().map(|n| n * n).collect::<Vec<_>>(), &per)
    };
    let b_node = |s: &str| {
        graph::tuple_index(&out_sizes, &sym_idx(&m.outputs, &m.readout[s]))
    };
    let b_edge = |s0: &str, s1: &str| {
        let i0 = sym_idx(&m.outputs, &m.readout[s0]);
        let i1 = sym_idx(&m.outputs, &m.readout[s1]);
        let per: Vec<usize> = i0
            .iter()
            .zip(&i1)
            .zip(&out_sizes)
            .map(|((a0, a1), n)| a0 * n + a1)
            .collect();
        graph::tuple_index(&out_sizes.iter().map(|n| n * n).collect::<Vec<_>>(), &per)
    };

    let mut in_node_map = Vec::with_capacity(state.nodes.len());
    let mut out_node_map = Vec::with_capacity(state.nodes.len());
    for t in &tuples {
        for s in &m.states {
            in_node_map.push(a_node(t));
            out_node_map.push(b_node(s));
        }
    }
    let mut in_edge_map = Vec::with_capacity(state.edges.len());
    let mut out_edge_map = Vec::with_capacity(state.edges.len());
    for &(ti, si, t1i, ni) in &edge_data {
        in_edge_map.push(a_edge(&tuples[ti], &tuples[t1i]));
        out_edge_map.push(b_edge(&m.states[si], &m.states[ni]));
    }
    let _ = tuple_idx;
    let in_map = GraphHom { dom: state.clone(), cod: a, node_map: in_node_map, edge_map: in_edge_map };
    let out_map = GraphHom { dom: state.clone(), cod: b, node_map: out_node_map, edge_map: out_edge_map };
    in_map.validate()?;
    out_map.validate()?;
    let machine = Machine { in_ports, out_ports, state, in_map, out_map };
    machine.validate(&u)?;
    Ok(machine)
}

/// The one-step delay on behaviors of `g`: state is the one-step extension,
/// input reads the newer end, output the older. Total and deterministic for
/// every `g`, and inertial.
pub fn delay_machine(g: &Graph) -> Machine<GraphUniverse> {
    let (ext, lambda, rho) = graph::extension(g, 1);
    Machine {
        in_ports: vec![("in".into(), g.clone())],
        out_ports: vec![("out".into(), g.clone())],
        state: ext,
        in_map: rho,
        out_map: lambda,
    }
}

/// The machine that relays behaviors of `g` unchanged: the state is `g`
/// itself and both legs are the identity.
pub fn identity_machine(g: &Graph) -> Machine<GraphUniverse> {
    Machine {
        in_ports: vec![("in".into(), g.clone())],
        out_ports: vec![("out".into(), g.clone())],
        state: g.clone(),
        in_map: GraphHom::identity(g),
        out_map: GraphHom::identity(g),
    }
}

/// Functors from finite sets to graphs, used to transport set machines into
/// behavior machines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionFunctor {
    /// Symbols where any value may follow any value: the complete graph.
    /// Behaviors are tuples of symbols.
    Complete,
    /// Symbols as instantaneous events on a single anonymous node: loops.
    /// Behaviors are event sequences.
    Loops,
}

impl SectionFunctor {
    pub fn on_object(&self, s: &FinSet) -> Graph {
        let names: Vec<&str> = s.elems.iter().map(|e| e.as_str()).collect();
        match self {
            SectionFunctor::Complete => graph::complete(&names),
            SectionFunctor::Loops => graph::loops(&names),
        }
    }

    pub fn on_map(&self, f: &FinMor) -> GraphHom {
        let dom = self.on_object(&f.dom);
        let cod = self.on_object(&f.cod);
        match self {
            SectionFunctor::Complete => {
                let n = f.cod.elems.len();
                let edge_map = (0..dom.edges.len())
                    .map(|e| {
                        let a = e / f.dom.elems.len();
                        let b = e % f.dom.elems.len();
                        f.map[a] * n + f.map[b]
                    })
                    .collect();
                GraphHom { dom, cod, node_map: f.map.clone(), edge_map }
            }
            SectionFunctor::Loops => GraphHom {
                dom,
                cod,
                node_map: vec![0],
                edge_map: f.map.clone(),
            },
        }
    }

    /// Canonical iso from the functor applied to a product of sets onto the
    /// product of the functor applied to each factor. Needed because port
    /// products are taken after transport.
    pub fn distribute(&self, factors: &[&FinSet]) -> GraphHom {
        let su = FinSetUniverse;
        let (prod_set, _) = su.product(&factors.to_vec());
        let dom = self.on_object(&prod_set);
        let gu = GraphUniverse;
        let images: Vec<Graph> = factors.iter().map(|s| self.on_object(s)).collect();
        let (cod, _) = gu.product(&images.iter().collect::<Vec<_>>());
        let sizes: Vec<usize> = factors.iter().map(|s| s.elems.len()).collect();
        match self {
            SectionFunctor::Complete => {
                let esizes: Vec<usize> = sizes.iter().map(|n| n * n).collect();
                let total: usize = sizes.iter().product();
                let node_map = (0..total).collect();
                let edge_map = (0..total * total)
                    .map(|e| {
                        let x = graph::untuple_index(&sizes, e / total);
                        let y = graph::untuple_index(&sizes, e % total);
                        let per: Vec<usize> =
                            x.iter().zip(&y).zip(&sizes).map(|((a, b), n)| a * n + b).collect();
                        graph::tuple_index(&esizes, &per)
                    })
                    .collect();
                GraphHom { dom, cod, node_map, edge_map }
            }
            SectionFunctor::Loops => {
                let total: usize = sizes.iter().product();
                GraphHom { dom, cod, node_map: vec![0], edge_map: (0..total).collect() }
            }
        }
    }
}

/// Transports a finite-set machine to a graph machine along a functor,
/// port by port.
pub fn map_machine(
    functor: SectionFunctor,
    m: &Machine<FinSetUniverse>,
) -> Result<Machine<GraphUniverse>, SpanError> {
    let gu = GraphUniverse;
    let in_ports: Vec<(String, Graph)> = m
        .in_ports
        .iter()
        .map(|(n, o)| (n.clone(), functor.on_object(o)))
        .collect();
    let out_ports: Vec<(String, Graph)> = m
        .out_ports
        .iter()
        .map(|(n, o)| (n.clone(), functor.on_object(o)))
        .collect();
    let in_factors: Vec<&FinSet> = m.in_ports.iter().map(|(_, o)| o).collect();
    let out_factors: Vec<&FinSet> = m.out_ports.iter().map(|(_, o)| o).collect();
    let in_map = gu.compose(&functor.distribute(&in_factors), &functor.on_map(&m.in_map))?;
    let out_map = gu.compose(&functor.distribute(&out_factors), &functor.on_map(&m.out_map))?;
    let machine = Machine {
        in_ports,
        out_ports,
        state: functor.on_object(&m.state),
        in_map,
        out_map,
    };
    machine.validate(&gu)?;
    Ok(machine)
}

/// The constant behaviors of a graph machine: states that loop while ports
/// hold a looping value. A finite-set machine over the loop sets of the
/// ports; composition commutes with taking steady states.
pub fn steady_states(m: &Machine<GraphUniverse>) -> Result<Machine<FinSetUniverse>, SpanError> {
    let su = FinSetUniverse;
    let gu = GraphUniverse;
    let loops_of = |g: &Graph| -> (FinSet, Vec<usize>) {
        let le = loop_edges(g);
        (FinSet { elems: le.iter().map(|&e| g.edges[e].name.clone()).collect() }, le)
    };
    let in_ports: Vec<(String, FinSet)> = m
        .in_ports
        .iter()
        .map(|(n, g)| (n.clone(), loops_of(g).0))
        .collect();
    let out_ports: Vec<(String, FinSet)> = m
        .out_ports
        .iter()
        .map(|(n, g)| (n.clone(), loops_of(g).0))
        .collect();
    let (state, state_loops) = loops_of(&m.state);

    let build = |ports: &[(String, Graph)], map: &GraphHom| -> Result<FinMor, SpanError> {
        let graphs: Vec<&Graph> = ports.iter().map(|(_, g)| g).collect();
        let (_, projs) = gu.product(&graphs);
        let per_port: Vec<(Vec<usize>, BTreeMap<usize, usize>)> = graphs
            .iter()
            .map(|g| {
                let le = loop_edges(g);
                let rev: BTreeMap<usize, usize> = le.iter().enumerate().map(|(i, &e)| (e, i)).collect();
                (le, rev)
            })
            .collect();
        let sizes: Vec<usize> = per_port.iter().map(|(le, _)| le.len()).collect();
        let sets: Vec<FinSet> = ports.iter().map(|(_, g)| loops_of(g).0).collect();
        let (cod, _) = su.product(&sets.iter().collect::<Vec<_>>());
        let mapped = state_loops
            .iter()
            .map(|&e| {
                let img = map.edge_map[e];
                let comps: Vec<usize> = projs
                    .iter()
                    .zip(&per_port)
                    .map(|(proj, (_, rev))| rev[&proj.edge_map[img]])
                    .collect();
                graph::tuple_index(&sizes, &comps)
            })
            .collect();
        Ok(FinMor { dom: state.clone(), cod, map: mapped })
    };
    let machine = Machine {
        in_map: build(&m.in_ports, &m.in_map)?,
        out_map: build(&m.out_ports, &m.out_map)?,
        in_ports,
        out_ports,
        state,
    };
    machine.validate(&su)?;
    Ok(machine)
}
