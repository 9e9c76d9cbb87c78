//! Resolution: from a parsed description to library objects. A system file
//! declares port types, boxes, a list of wiring stages, machine bindings,
//! contract bindings, and a run configuration. Everything except the run
//! configuration is resolved and validated here, so a spec that survives
//! [`resolve`] has every reference resolved and every binding matching its
//! box's port types; errors point at the offending line and column.

use std::collections::{BTreeMap, BTreeSet};

use wirebox::contract::{self, Contract};
use wirebox::graph::{self, Graph, GraphHom};
use wirebox::moore::{self, MooreMachine};
use wirebox::span::{self, GraphUniverse, Machine, Universe};
use wirebox::timed::{self, TimedMachine};
use wirebox::wiring::{
    flatten, Feed, Flattened, Interface, Port, PortType, WiringDiagram, WiringTree,
};

use crate::format::{Diag, Val};

/// A fully resolved system description.
#[derive(Debug)]
pub struct SystemSpec {
    pub types: BTreeMap<String, PortType>,
    pub boxes: Vec<(String, Interface)>,
    pub roots: Vec<RootSystem>,
    pub machines: BTreeMap<String, MachineBinding>,
    pub contracts: BTreeMap<String, ContractBinding>,
    pub run: Option<Val>,
}

/// One wired composite: the outermost box of a chain of stages, with the
/// flattened diagram from the tensor of its leaf boxes.
#[derive(Debug)]
pub struct RootSystem {
    pub outer: String,
    pub flat: Flattened,
    /// Leaf box labels, in tensor order.
    pub leaves: Vec<String>,
    /// Per leaf, the prefix its port names carry inside `flat.diagram.inner`.
    pub prefixes: Vec<String>,
}

#[derive(Debug)]
pub enum MachineBinding {
    Moore(MooreMachine),
    Span(Machine<GraphUniverse>),
    Timed(TimedMachine),
}

impl MachineBinding {
    pub fn kind(&self) -> &'static str {
        match self {
            MachineBinding::Moore(_) => "moore",
            MachineBinding::Span(_) => "span",
            MachineBinding::Timed(_) => "timed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractKind {
    TwoTrues,
    Behavior,
}

#[derive(Debug)]
pub struct ContractBinding {
    pub kind: ContractKind,
    pub horizon: usize,
}

impl ContractKind {
    pub fn name(&self) -> &'static str {
        match self {
            ContractKind::TwoTrues => "two_trues",
            ContractKind::Behavior => "behavior",
        }
    }
}

impl SystemSpec {
    pub fn box_iface(&self, label: &str) -> Option<&Interface> {
        self.boxes.iter().find(|(l, _)| l == label).map(|(_, i)| i)
    }

    /// The single root, for commands that run one system.
    pub fn single_root(&self) -> Result<&RootSystem, Diag> {
        match self.roots.len() {
            1 => Ok(&self.roots[0]),
            n => Err(Diag::new(
                1,
                1,
                format!("this command runs one system, but the wiring builds {n} of them"),
            )),
        }
    }

    /// Every leaf of the root with its binding; a missing binding is an
    /// input error.
    pub fn leaf_bindings<'a>(
        &'a self,
        root: &'a RootSystem,
    ) -> Result<Vec<(&'a str, &'a str, &'a MachineBinding)>, Diag> {
        let mut out = Vec::new();
        for (label, prefix) in root.leaves.iter().zip(&root.prefixes) {
            let b = self.machines.get(label).ok_or_else(|| {
                Diag::new(1, 1, format!("box {label:?} has no machine binding"))
            })?;
            out.push((label.as_str(), prefix.as_str(), b));
        }
        Ok(out)
    }

    /// The machine of a box as a graph span, unrolling finite machines.
    /// `None` for timed bindings.
    pub fn span_view(&self, label: &str) -> Option<Machine<GraphUniverse>> {
        match self.machines.get(label)? {
            MachineBinding::Span(m) => Some(m.clone()),
            MachineBinding::Moore(m) => Some(span::unroll_moore(m).expect("validated binding")),
            MachineBinding::Timed(_) => None,
        }
    }
}

/// A short printable form of a port type.
pub fn type_summary(ty: &PortType) -> String {
    match ty {
        PortType::Finite(s) => format!("finite({})", s.len()),
        PortType::Euclidean(d) => format!("euclidean({d})"),
        PortType::Behavior(g) => format!("graph({} nodes, {} edges)", g.nodes.len(), g.edges.len()),
    }
}

// ---------------------------------------------------------------------------
// Small readers.

fn str_list(v: &Val) -> Result<Vec<String>, Diag> {
    v.as_list()?.iter().map(|x| x.as_str().map(String::from)).collect()
}

fn resolve_symbols(v: &Val) -> Result<Vec<String>, Diag> {
    match (v.get("symbols"), v.get("range")) {
        (Some(s), None) => {
            let syms = str_list(s)?;
            if syms.is_empty() {
                return Err(s.err("a type needs at least one symbol"));
            }
            let mut seen = BTreeSet::new();
            for x in &syms {
                if !seen.insert(x) {
                    return Err(s.err(format!("duplicate symbol {x:?}")));
                }
            }
            Ok(syms)
        }
        (None, Some(r)) => {
            let hi = r.as_int()?;
            if hi < 0 {
                return Err(r.err("range must be non-negative"));
            }
            Ok((0..=hi).map(|i| i.to_string()).collect())
        }
        (Some(_), Some(r)) => Err(r.err("give either symbols or range, not both")),
        (None, None) => Err(v.err("the type needs symbols [...] or range N")),
    }
}

fn refs(names: &[String]) -> Vec<&str> {
    names.iter().map(|s| s.as_str()).collect()
}

/// The ledger alphabet used by storage machines of the given capacity: the
/// product of a credit component and a debit component, each one node with a
/// loop per amount.
pub fn ledger_graph(names: &[String]) -> Graph {
    let credit = graph::loops_reflexive(&refs(names), 0);
    let debit = graph::loops_reflexive(&refs(names), 0);
    graph::product(&[&credit, &debit]).0
}

fn resolve_type(v: &Val) -> Result<PortType, Diag> {
    match &v.kind {
        crate::format::Kind::List(_) => {
            let syms = str_list(v)?;
            if syms.is_empty() {
                return Err(v.err("a finite type needs at least one symbol"));
            }
            Ok(PortType::Finite(syms))
        }
        crate::format::Kind::Rec(_) => {
            v.check_fields(&["kind", "symbols", "range", "unit", "nodes", "edges", "reflexive"])?;
            let kind = v.field("kind")?;
            match kind.as_str()? {
                "complete" => Ok(PortType::Behavior(graph::complete(&refs(&resolve_symbols(v)?)))),
                "constant" => Ok(PortType::Behavior(graph::constant(&refs(&resolve_symbols(v)?)))),
                "loops" => {
                    let syms = resolve_symbols(v)?;
                    let unit = match v.get("unit") {
                        None => 0,
                        Some(u) => {
                            let name = u.as_str()?;
                            syms.iter().position(|s| s == name).ok_or_else(|| {
                                u.err(format!("unit {name:?} is not one of the symbols"))
                            })?
                        }
                    };
                    Ok(PortType::Behavior(graph::loops_reflexive(&refs(&syms), unit)))
                }
                "ledger" => Ok(PortType::Behavior(ledger_graph(&resolve_symbols(v)?))),
                "graph" => {
                    let nodes = str_list(v.field("nodes")?)?;
                    let mut edges = Vec::new();
                    for e in v.field("edges")?.as_list()? {
                        e.check_fields(&["name", "from", "to"])?;
                        let name = e.field("name")?.as_str()?.to_string();
                        let node = |f: &Val| -> Result<usize, Diag> {
                            let n = f.as_str()?;
                            nodes.iter().position(|x| x == n).ok_or_else(|| {
                                f.err(format!("unknown node {n:?}"))
                            })
                        };
                        edges.push((name, node(e.field("from")?)?, node(e.field("to")?)?));
                    }
                    let mut g = Graph::new(nodes, edges);
                    match v.get("reflexive").map(|r| r.as_str()).transpose()? {
                        None | Some("none") => {}
                        Some("free") => g = g.free_reflexive(),
                        Some(other) => {
                            return Err(v
                                .get("reflexive")
                                .unwrap()
                                .err(format!("reflexive is \"free\" or \"none\", not {other:?}")))
                        }
                    }
                    g.validate().map_err(|e| v.err(format!("bad graph: {e}")))?;
                    Ok(PortType::Behavior(g))
                }
                other => Err(kind.err(format!(
                    "unknown type kind {other:?}; expected complete, constant, loops, ledger, or graph"
                ))),
            }
        }
        _ => Err(v.err("a type is a sequence of symbols or a record with a kind")),
    }
}

fn plain_name(v: &Val, what: &str) -> Result<String, Diag> {
    let s = v.as_str()?;
    if s.is_empty() || s.contains('.') {
        return Err(v.err(format!("{what} must be non-empty and contain no '.'")));
    }
    Ok(s.to_string())
}

fn resolve_ports(
    v: &Val,
    types: &BTreeMap<String, PortType>,
) -> Result<Vec<Port>, Diag> {
    let mut out: Vec<Port> = Vec::new();
    for p in v.as_list()? {
        p.check_fields(&["name", "type"])?;
        let name = plain_name(p.field("name")?, "a port name")?;
        if out.iter().any(|q| q.name == name) {
            return Err(p.err(format!("duplicate port {name:?}")));
        }
        let tv = p.field("type")?;
        let tname = tv.as_str()?;
        let ty = types
            .get(tname)
            .ok_or_else(|| tv.err(format!("unknown type {tname:?}")))?
            .clone();
        out.push(Port { name, ty });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Wiring.

struct Stage {
    inner: Vec<String>,
    outer: String,
    diagram: WiringDiagram,
}

fn port_in<'a>(iface: &'a Interface, name: &str) -> Option<&'a Port> {
    iface.inputs.iter().find(|p| p.name == name)
}

fn port_out<'a>(iface: &'a Interface, name: &str) -> Option<&'a Port> {
    iface.outputs.iter().find(|p| p.name == name)
}

fn names(ports: &[Port]) -> String {
    if ports.is_empty() {
        return "(none)".into();
    }
    ports.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn resolve_stage(
    v: &Val,
    boxes: &[(String, Interface)],
) -> Result<Stage, Diag> {
    v.check_fields(&["inner", "outer", "feed", "read"])?;
    let iface_of = |label: &Val| -> Result<Interface, Diag> {
        let name = label.as_str()?;
        boxes
            .iter()
            .find(|(l, _)| l == name)
            .map(|(_, i)| i.clone())
            .ok_or_else(|| label.err(format!("unknown box {name:?}")))
    };

    let inner_val = v.field("inner")?;
    let mut inner_labels = Vec::new();
    let mut inner_ifaces = Vec::new();
    for l in inner_val.as_list()? {
        let iface = iface_of(l)?;
        if inner_labels.contains(&iface.label) {
            return Err(l.err(format!("box {:?} appears twice in this stage", iface.label)));
        }
        inner_labels.push(iface.label.clone());
        inner_ifaces.push(iface);
    }
    if inner_labels.is_empty() {
        return Err(inner_val.err("a stage wires at least one box"));
    }
    let inner =
        Interface::tensor_all(&inner_ifaces.iter().collect::<Vec<_>>()).map_err(|e| v.err(e))?;
    let outer_val = v.field("outer")?;
    let outer = iface_of(outer_val)?;
    if inner_labels.contains(&outer.label) {
        return Err(outer_val.err(format!(
            "box {:?} cannot be wired into itself in one stage",
            outer.label
        )));
    }

    let mut feed = BTreeMap::new();
    if let Some(fv) = v.get("feed") {
        for (k, src) in fv.as_rec()? {
            let target = port_in(&inner, &k.name).ok_or_else(|| {
                Diag::new(
                    k.line,
                    k.col,
                    format!(
                        "unknown inner input port {:?}; the inner tensor has inputs: {}",
                        k.name,
                        names(&inner.inputs)
                    ),
                )
            })?;
            src.check_fields(&["outer", "inner"])?;
            let (fed, src_port) = match (src.get("outer"), src.get("inner")) {
                (Some(o), None) => {
                    let name = o.as_str()?;
                    let p = port_in(&outer, name).ok_or_else(|| {
                        o.err(format!(
                            "unknown outer input port {:?}; box {:?} has inputs: {}",
                            name,
                            outer.label,
                            names(&outer.inputs)
                        ))
                    })?;
                    (Feed::FromOuter(name.to_string()), p)
                }
                (None, Some(i)) => {
                    let name = i.as_str()?;
                    let p = port_out(&inner, name).ok_or_else(|| {
                        i.err(format!(
                            "unknown inner output port {:?}; the inner tensor has outputs: {}",
                            name,
                            names(&inner.outputs)
                        ))
                    })?;
                    (Feed::FromInner(name.to_string()), p)
                }
                _ => {
                    return Err(src.err("a feed names exactly one source: outer \"port\" or inner \"box.port\""))
                }
            };
            if src_port.ty != target.ty {
                return Err(src.err(format!(
                    "type mismatch: {:?} carries {}, but the source carries {}",
                    k.name,
                    type_summary(&target.ty),
                    type_summary(&src_port.ty)
                )));
            }
            feed.insert(k.name.clone(), fed);
        }
    }
    for p in &inner.inputs {
        if !feed.contains_key(&p.name) {
            return Err(v.err(format!("inner input {:?} is never fed", p.name)));
        }
    }

    let mut read = BTreeMap::new();
    if let Some(rv) = v.get("read") {
        for (k, src) in rv.as_rec()? {
            let target = port_out(&outer, &k.name).ok_or_else(|| {
                Diag::new(
                    k.line,
                    k.col,
                    format!(
                        "unknown outer output port {:?}; box {:?} has outputs: {}",
                        k.name,
                        outer.label,
                        names(&outer.outputs)
                    ),
                )
            })?;
            let name = src.as_str()?;
            let p = port_out(&inner, name).ok_or_else(|| {
                src.err(format!(
                    "unknown inner output port {:?}; the inner tensor has outputs: {}",
                    name,
                    names(&inner.outputs)
                ))
            })?;
            if p.ty != target.ty {
                return Err(src.err(format!(
                    "type mismatch: {:?} carries {}, but {:?} carries {}",
                    k.name,
                    type_summary(&target.ty),
                    name,
                    type_summary(&p.ty)
                )));
            }
            read.insert(k.name.clone(), name.to_string());
        }
    }
    for p in &outer.outputs {
        if !read.contains_key(&p.name) {
            return Err(v.err(format!("outer output {:?} is never read", p.name)));
        }
    }

    let diagram = WiringDiagram { inner, outer: outer.clone(), feed, read };
    let report = diagram.validate();
    if !report.ok() {
        return Err(v.err(format!("invalid wiring: {report}")));
    }
    Ok(Stage { inner: inner_labels, outer: outer.label, diagram })
}

// ---------------------------------------------------------------------------
// Machine bindings.

fn finite_syms<'a>(iface: &'a Interface, p: &'a Port, at: &Val) -> Result<&'a [String], Diag> {
    match &p.ty {
        PortType::Finite(s) => Ok(s),
        other => Err(at.err(format!(
            "port {:?} of box {:?} is {}, but this machine kind needs finite ports",
            p.name,
            iface.label,
            type_summary(other)
        ))),
    }
}

fn behavior_graph<'a>(iface: &'a Interface, p: &'a Port, at: &Val) -> Result<&'a Graph, Diag> {
    match &p.ty {
        PortType::Behavior(g) => Ok(g),
        other => Err(at.err(format!(
            "port {:?} of box {:?} is {}, but this machine kind needs behavior ports",
            p.name,
            iface.label,
            type_summary(other)
        ))),
    }
}

fn resolve_moore(v: &Val, iface: &Interface) -> Result<MooreMachine, Diag> {
    let inputs: Vec<(String, Vec<String>)> = iface
        .inputs
        .iter()
        .map(|p| Ok((p.name.clone(), finite_syms(iface, p, v)?.to_vec())))
        .collect::<Result<_, Diag>>()?;
    let outputs: Vec<(String, Vec<String>)> = iface
        .outputs
        .iter()
        .map(|p| Ok((p.name.clone(), finite_syms(iface, p, v)?.to_vec())))
        .collect::<Result<_, Diag>>()?;
    let states = str_list(v.field("states")?)?;
    if states.is_empty() {
        return Err(v.field("states")?.err("a machine needs at least one state"));
    }
    let state_of = |f: &Val| -> Result<String, Diag> {
        let s = f.as_str()?;
        if !states.iter().any(|x| x == s) {
            return Err(f.err(format!("unknown state {s:?}")));
        }
        Ok(s.to_string())
    };

    let mut update = BTreeMap::new();
    for e in v.field("update")?.as_list()? {
        e.check_fields(&["input", "state", "next"])?;
        let iv = e.field("input")?;
        let tuple = str_list(iv)?;
        if tuple.len() != inputs.len() {
            return Err(iv.err(format!(
                "the input tuple has {} entries, but the box has {} input ports",
                tuple.len(),
                inputs.len()
            )));
        }
        for (x, (name, sym)) in tuple.iter().zip(&inputs) {
            if !sym.contains(x) {
                return Err(iv.err(format!("symbol {x:?} is not in the alphabet of port {name:?}")));
            }
        }
        let s = state_of(e.field("state")?)?;
        let next = state_of(e.field("next")?)?;
        if update.insert((tuple, s.clone()), next).is_some() {
            return Err(e.err(format!("duplicate update entry for state {s:?}")));
        }
    }
    for x in moore::input_tuples(&inputs) {
        for s in &states {
            if !update.contains_key(&(x.clone(), s.clone())) {
                return Err(v.field("update")?.err(format!(
                    "the update table misses input {x:?} in state {s:?}"
                )));
            }
        }
    }

    let mut readout = BTreeMap::new();
    for e in v.field("readout")?.as_list()? {
        e.check_fields(&["state", "output"])?;
        let s = state_of(e.field("state")?)?;
        let ov = e.field("output")?;
        let tuple = str_list(ov)?;
        if tuple.len() != outputs.len() {
            return Err(ov.err(format!(
                "the output tuple has {} entries, but the box has {} output ports",
                tuple.len(),
                outputs.len()
            )));
        }
        for (x, (name, sym)) in tuple.iter().zip(&outputs) {
            if !sym.contains(x) {
                return Err(ov.err(format!("symbol {x:?} is not in the alphabet of port {name:?}")));
            }
        }
        if readout.insert(s.clone(), tuple).is_some() {
            return Err(e.err(format!("duplicate readout entry for state {s:?}")));
        }
    }
    for s in &states {
        if !readout.contains_key(s) {
            return Err(v.field("readout")?.err(format!("state {s:?} has no readout")));
        }
    }

    let m = MooreMachine { inputs, outputs, states, update, readout };
    m.validate().map_err(|e| v.err(format!("invalid machine: {e}")))?;
    Ok(m)
}

fn resolve_span_hom(
    state: &Graph,
    iface: &Interface,
    p: &Port,
    map_val: &Val,
) -> Result<GraphHom, Diag> {
    let g = behavior_graph(iface, p, map_val)?;
    map_val.check_fields(&["nodes", "edges"])?;
    let nv = map_val.field("nodes")?;
    let node_names = str_list(nv)?;
    if node_names.len() != state.nodes.len() {
        return Err(nv.err(format!(
            "the node map lists {} images, but the state graph has {} nodes",
            node_names.len(),
            state.nodes.len()
        )));
    }
    let node_map = node_names
        .iter()
        .map(|n| {
            g.node_index(n).ok_or_else(|| {
                nv.err(format!("unknown node {:?} in the type of port {:?}", n, p.name))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ev = map_val.field("edges")?;
    let edge_names = str_list(ev)?;
    if edge_names.len() != state.edges.len() {
        return Err(ev.err(format!(
            "the edge map lists {} images, but the state graph has {} edges",
            edge_names.len(),
            state.edges.len()
        )));
    }
    let edge_map = edge_names
        .iter()
        .map(|n| {
            g.edge_index(n).ok_or_else(|| {
                ev.err(format!("unknown edge {:?} in the type of port {:?}", n, p.name))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let hom = GraphHom { dom: state.clone(), cod: g.clone(), node_map, edge_map };
    hom.validate().map_err(|e| map_val.err(format!("the map for port {:?} is not a graph map: {e}", p.name)))?;
    Ok(hom)
}

fn tuple_side(
    u: &GraphUniverse,
    state: &Graph,
    iface: &Interface,
    ports: &[Port],
    maps_val: Option<&Val>,
    side: &str,
    at: &Val,
) -> Result<(Vec<(String, Graph)>, GraphHom), Diag> {
    let empty = Vec::new();
    let given = match maps_val {
        Some(mv) => mv.as_rec()?,
        None => empty.as_slice(),
    };
    for (k, _) in given {
        if !ports.iter().any(|p| p.name == k.name) {
            return Err(Diag::new(
                k.line,
                k.col,
                format!(
                    "unknown {side} port {:?}; box {:?} has {side} ports: {}",
                    k.name,
                    iface.label,
                    names(ports)
                ),
            ));
        }
    }
    let mut port_objs = Vec::new();
    let mut homs = Vec::new();
    for p in ports {
        let mv = given.iter().find(|(k, _)| k.name == p.name).map(|(_, v)| v).ok_or_else(|| {
            at.err(format!("the binding gives no {side} map for port {:?}", p.name))
        })?;
        let hom = resolve_span_hom(state, iface, p, mv)?;
        port_objs.push((p.name.clone(), hom.cod.clone()));
        homs.push(hom);
    }
    let map = u
        .tuple(state, &homs.iter().collect::<Vec<_>>())
        .map_err(|e| at.err(format!("invalid machine: {e}")))?;
    Ok((port_objs, map))
}

fn resolve_span(
    v: &Val,
    iface: &Interface,
    types: &BTreeMap<String, PortType>,
) -> Result<Machine<GraphUniverse>, Diag> {
    let sv = v.field("state")?;
    let state_ty = match &sv.kind {
        crate::format::Kind::Str(name) => types
            .get(name)
            .cloned()
            .ok_or_else(|| sv.err(format!("unknown type {name:?}")))?,
        _ => resolve_type(sv)?,
    };
    let state = match state_ty {
        PortType::Behavior(g) => g,
        other => {
            return Err(sv.err(format!("the state must be a behavior graph, not {}", type_summary(&other))))
        }
    };
    let u = GraphUniverse;
    let (in_ports, in_map) =
        tuple_side(&u, &state, iface, &iface.inputs, v.get("in"), "input", v)?;
    let (out_ports, out_map) =
        tuple_side(&u, &state, iface, &iface.outputs, v.get("out"), "output", v)?;
    let m = Machine { in_ports, out_ports, state, in_map, out_map };
    m.validate(&u).map_err(|e| v.err(format!("invalid machine: {e}")))?;
    Ok(m)
}

fn single_in_out<'a>(iface: &'a Interface, at: &Val) -> Result<(&'a Port, &'a Port), Diag> {
    if iface.inputs.len() != 1 || iface.outputs.len() != 1 {
        return Err(at.err(format!(
            "box {:?} has {} inputs and {} outputs, but this machine kind needs exactly one of each",
            iface.label,
            iface.inputs.len(),
            iface.outputs.len()
        )));
    }
    Ok((&iface.inputs[0], &iface.outputs[0]))
}

fn resolve_binding(
    v: &Val,
    iface: &Interface,
    types: &BTreeMap<String, PortType>,
) -> Result<MachineBinding, Diag> {
    let kind = v.field("kind")?;
    match kind.as_str()? {
        "moore" => {
            v.check_fields(&["kind", "states", "update", "readout"])?;
            Ok(MachineBinding::Moore(resolve_moore(v, iface)?))
        }
        "span" => {
            v.check_fields(&["kind", "state", "in", "out"])?;
            Ok(MachineBinding::Span(resolve_span(v, iface, types)?))
        }
        "delay" => {
            v.check_fields(&["kind"])?;
            let (pin, pout) = single_in_out(iface, v)?;
            let g = behavior_graph(iface, pin, v)?;
            let h = behavior_graph(iface, pout, v)?;
            if g != h {
                return Err(v.err(
                    "a delay needs its input and output ports to carry the same graph",
                ));
            }
            let mut m = span::delay_machine(g);
            m.in_ports[0].0 = pin.name.clone();
            m.out_ports[0].0 = pout.name.clone();
            Ok(MachineBinding::Span(m))
        }
        "storage" => {
            v.check_fields(&["kind", "cap"])?;
            let cv = v.field("cap")?;
            let cap = cv.as_int()?;
            if cap < 1 {
                return Err(cv.err("the capacity must be at least 1"));
            }
            let m = timed::storage_machine(cap as u64);
            let (pin, pout) = single_in_out(iface, v)?;
            if behavior_graph(iface, pin, v)? != &m.input {
                return Err(v.err(format!(
                    "port {:?} must carry the ledger type of capacity {cap} (kind \"ledger\", range {cap})",
                    pin.name
                )));
            }
            if behavior_graph(iface, pout, v)? != &m.output {
                return Err(v.err(format!(
                    "port {:?} must carry the complete graph over the balances (kind \"complete\", range {cap})",
                    pout.name
                )));
            }
            Ok(MachineBinding::Timed(m))
        }
        other => Err(kind.err(format!(
            "unknown machine kind {other:?}; expected moore, span, delay, or storage"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Contract bindings.

/// Builds the contract a binding names, at the given horizon, against the
/// box's machine viewed as a graph span. Port names follow the machine.
pub fn build_contract(
    kind: ContractKind,
    horizon: usize,
    m: &Machine<GraphUniverse>,
) -> Result<Contract, String> {
    match kind {
        ContractKind::Behavior => Ok(contract::behavior_contract(m, horizon)),
        ContractKind::TwoTrues => {
            let mut c = contract::two_trues(horizon);
            if !m.in_ports.is_empty() {
                return Err(format!(
                    "two_trues constrains a source with no inputs, but the machine has {} input ports",
                    m.in_ports.len()
                ));
            }
            if m.out_ports.len() != 1 {
                return Err(format!(
                    "two_trues constrains one output port, but the machine has {}",
                    m.out_ports.len()
                ));
            }
            if m.out_ports[0].1 != c.out_ports[0].1 {
                return Err(
                    "two_trues needs the output to carry the complete graph over F and T".into(),
                );
            }
            c.out_ports[0].0 = m.out_ports[0].0.clone();
            Ok(c)
        }
    }
}

fn resolve_contract(v: &Val, spec: &SystemSpec, label: &str) -> Result<ContractBinding, Diag> {
    v.check_fields(&["kind", "horizon"])?;
    let kv = v.field("kind")?;
    let kind = match kv.as_str()? {
        "two_trues" => ContractKind::TwoTrues,
        "behavior" => ContractKind::Behavior,
        other => {
            return Err(kv.err(format!(
                "unknown contract kind {other:?}; expected two_trues or behavior"
            )))
        }
    };
    let horizon = v.field("horizon")?.as_usize()?;
    let m = spec.span_view(label).ok_or_else(|| {
        v.err(format!("box {label:?} has no span or moore machine to hold a contract to"))
    })?;
    build_contract(kind, horizon, &m).map_err(|e| v.err(e))?;
    Ok(ContractBinding { kind, horizon })
}

// ---------------------------------------------------------------------------
// The whole file.

pub fn resolve(v: &Val) -> Result<SystemSpec, Diag> {
    v.check_fields(&["types", "boxes", "wiring", "machines", "contracts", "run"])?;

    let mut types = BTreeMap::new();
    if let Some(tv) = v.get("types") {
        for (k, decl) in tv.as_rec()? {
            types.insert(k.name.clone(), resolve_type(decl)?);
        }
    }

    let mut boxes: Vec<(String, Interface)> = Vec::new();
    for (k, decl) in v.field("boxes")?.as_rec()? {
        if k.name.is_empty() || k.name.contains('.') {
            return Err(Diag::new(k.line, k.col, "a box label must be non-empty and contain no '.'"));
        }
        decl.check_fields(&["inputs", "outputs"])?;
        let inputs = match decl.get("inputs") {
            Some(pv) => resolve_ports(pv, &types)?,
            None => vec![],
        };
        let outputs = match decl.get("outputs") {
            Some(pv) => resolve_ports(pv, &types)?,
            None => vec![],
        };
        boxes.push((k.name.clone(), Interface { label: k.name.clone(), inputs, outputs }));
    }

    let wv = v.field("wiring")?;
    let stage_vals: Vec<&Val> = match &wv.kind {
        crate::format::Kind::Rec(_) => vec![wv],
        _ => wv.as_list()?.iter().collect(),
    };
    if stage_vals.is_empty() {
        return Err(wv.err("the wiring needs at least one stage"));
    }
    let mut trees: BTreeMap<String, WiringTree> = boxes
        .iter()
        .map(|(l, i)| (l.clone(), WiringTree::Leaf(i.clone())))
        .collect();
    let mut consumed: BTreeSet<String> = BTreeSet::new();
    let mut produced: Vec<String> = Vec::new();
    for sv in &stage_vals {
        let stage = resolve_stage(sv, &boxes)?;
        let mut parts = Vec::new();
        for label in &stage.inner {
            if consumed.contains(label) {
                return Err(sv.err(format!("box {label:?} is already wired into an earlier stage")));
            }
            consumed.insert(label.clone());
            parts.push(trees[label].clone());
        }
        if produced.contains(&stage.outer) {
            return Err(sv.err(format!("two stages produce box {:?}", stage.outer)));
        }
        if consumed.contains(&stage.outer) {
            return Err(sv.err(format!(
                "box {:?} was already wired as an input, so no stage may produce it",
                stage.outer
            )));
        }
        trees.insert(
            stage.outer.clone(),
            WiringTree::Wire(Box::new(WiringTree::Tensor(parts)), stage.diagram),
        );
        produced.push(stage.outer);
    }

    let mut roots = Vec::new();
    for outer in &produced {
        if consumed.contains(outer) {
            continue;
        }
        let flat = flatten(&trees[outer]).map_err(|e| wv.err(format!("invalid wiring: {e}")))?;
        let leaves: Vec<String> = flat.leaves.iter().map(|i| i.label.clone()).collect();
        let prefixes: Vec<String> = flat
            .leaves
            .iter()
            .enumerate()
            .map(|(k, leaf)| {
                flat.origin
                    .iter()
                    .find(|(_, (i, _))| *i == k)
                    .map(|(name, (_, orig))| name[..name.len() - orig.len() - 1].to_string())
                    .unwrap_or_else(|| leaf.label.clone())
            })
            .collect();
        roots.push(RootSystem { outer: outer.clone(), flat, leaves, prefixes });
    }
    if roots.is_empty() {
        return Err(wv.err("the wiring stages form a cycle of boxes with no outermost system"));
    }

    let mut spec = SystemSpec {
        types,
        boxes,
        roots,
        machines: BTreeMap::new(),
        contracts: BTreeMap::new(),
        run: None,
    };

    if let Some(mv) = v.get("machines") {
        for (k, decl) in mv.as_rec()? {
            let iface = spec
                .box_iface(&k.name)
                .ok_or_else(|| Diag::new(k.line, k.col, format!("unknown box {:?}", k.name)))?
                .clone();
            if produced.contains(&k.name) {
                return Err(Diag::new(
                    k.line,
                    k.col,
                    format!(
                        "box {:?} is produced by a wiring stage; its machine is composed, not bound",
                        k.name
                    ),
                ));
            }
            let b = resolve_binding(decl, &iface, &spec.types)?;
            spec.machines.insert(k.name.clone(), b);
        }
    }

    if let Some(cv) = v.get("contracts") {
        for (k, decl) in cv.as_rec()? {
            if spec.box_iface(&k.name).is_none() {
                return Err(Diag::new(k.line, k.col, format!("unknown box {:?}", k.name)));
            }
            let b = resolve_contract(decl, &spec, &k.name)?;
            spec.contracts.insert(k.name.clone(), b);
        }
    }

    if let Some(rv) = v.get("run") {
        rv.check_fields(&["init", "inputs", "signal", "steps", "horizon"])?;
        spec.run = Some(rv.clone());
    }

    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    fn minimal() -> &'static str {
        r#"
types { bit ["0" "1"] }
boxes {
  A {inputs [{name "in" type "bit"}] outputs [{name "out" type "bit"}]}
  S {inputs [{name "in" type "bit"}] outputs [{name "out" type "bit"}]}
}
wiring [
  {inner ["A"] outer "S" feed {A.in {outer "in"}} read {out "A.out"}}
]
machines {
  A {kind "moore" states ["0" "1"]
     update [
       {input ["0"] state "0" next "0"} {input ["1"] state "0" next "1"}
       {input ["0"] state "1" next "0"} {input ["1"] state "1" next "1"}
     ]
     readout [{state "0" output ["0"]} {state "1" output ["1"]}]}
}
"#
    }

    #[test]
    fn a_minimal_file_resolves_to_one_wired_box() {
        let spec = resolve(&parse(minimal()).unwrap()).expect("resolves");
        assert_eq!(spec.roots.len(), 1);
        assert_eq!(spec.roots[0].leaves, ["A"]);
        assert_eq!(spec.roots[0].prefixes, ["A"]);
        assert!(matches!(spec.machines["A"], MachineBinding::Moore(_)));
        let flat = &spec.roots[0].flat;
        assert_eq!(flat.diagram.outer.label, "S");
        assert_eq!(flat.diagram.inner.inputs[0].name, "A.in");
    }

    #[test]
    fn dangling_ports_are_named_in_the_diagnostic() {
        let text = minimal().replace("read {out \"A.out\"}", "read {out \"A.out9\"}");
        let d = resolve(&parse(&text).unwrap()).unwrap_err();
        assert!(d.msg.contains("A.out9"), "{}", d.msg);
        assert!(d.line > 0);
        let text = minimal().replace("feed {A.in {outer \"in\"}}", "feed {A.input {outer \"in\"}}");
        let d = resolve(&parse(&text).unwrap()).unwrap_err();
        assert!(d.msg.contains("A.input"), "{}", d.msg);
    }

    #[test]
    fn type_mismatches_point_at_the_feed() {
        let text = minimal().replace(
            "types { bit [\"0\" \"1\"] }",
            "types { bit [\"0\" \"1\"] tri [\"a\" \"b\" \"c\"] }",
        );
        let text = text.replace(
            "S {inputs [{name \"in\" type \"bit\"}]",
            "S {inputs [{name \"in\" type \"tri\"}]",
        );
        let d = resolve(&parse(&text).unwrap()).unwrap_err();
        assert!(d.msg.contains("type mismatch"), "{}", d.msg);
    }

    #[test]
    fn incomplete_update_tables_are_rejected() {
        let text = minimal().replace("{input [\"1\"] state \"1\" next \"1\"}", "");
        let d = resolve(&parse(&text).unwrap()).unwrap_err();
        assert!(d.msg.contains("misses input"), "{}", d.msg);
    }

    #[test]
    fn the_ledger_type_matches_the_storage_machine() {
        let names: Vec<String> = (0..=8).map(|i| i.to_string()).collect();
        let m = timed::storage_machine(8);
        assert_eq!(ledger_graph(&names), m.input);
        assert_eq!(graph::complete(&refs(&names)), m.output);
    }
}
