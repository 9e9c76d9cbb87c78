//! Shared randomized generators for the integration suites. Everything is
//! seeded: a failing case reproduces from the seed printed by the harness.
#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use wirebox::graph::{Graph, GraphHom};
use wirebox::moore::{self, input_tuples, MooreMachine};
use wirebox::ode::{OdeMachine, Poly};
use wirebox::span::{self, GraphUniverse, Machine};
use wirebox::wiring::{Feed, Interface, PortType, Value, WiringDiagram};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Brute-force check of the gluing axiom on `g` for all splits of windows up
/// to `max_len`: a germ-compatible pair of sections over the halves is the
/// restriction of exactly one whole section (the glued one), and a
/// germ-incompatible pair is the restriction of none.
pub fn check_gluing_exact(g: &Graph, max_len: usize) {
    use wirebox::graph::{glue_sections, paths, restrict_section, Section};
    for n1 in 0..=max_len {
        for n2 in 0..=(max_len - n1) {
            let mut by_halves: BTreeMap<(Section, Section), Vec<Section>> = BTreeMap::new();
            for x in paths(g, n1 + n2) {
                let key = (
                    restrict_section(&x, 0, n1).unwrap(),
                    restrict_section(&x, n1, n2).unwrap(),
                );
                by_halves.entry(key).or_default().push(x);
            }
            for x1 in paths(g, n1) {
                for x2 in paths(g, n2) {
                    let found = by_halves.get(&(x1.clone(), x2.clone()));
                    if x1.cod_germ() == x2.dom_germ() {
                        let glued = glue_sections(g, &x1, &x2).expect("compatible halves glue");
                        glued.validate(g).expect("glued section is a real path");
                        let found = found.expect("existence: some whole section restricts back");
                        assert_eq!(
                            found.len(),
                            1,
                            "uniqueness failed over ({n1},{n2}) in {:?}",
                            g.nodes
                        );
                        assert_eq!(found[0], glued, "the unique section is the glued one");
                    } else {
                        assert!(
                            glue_sections(g, &x1, &x2).is_err(),
                            "germ-incompatible halves must not glue"
                        );
                        assert!(
                            found.is_none(),
                            "no whole section may restrict to incompatible halves"
                        );
                    }
                }
            }
        }
    }
}

/// A small pool of alphabets; ports sharing an alphabet can be wired.
pub fn alphabet(r: &mut impl Rng, max_symbols: usize) -> Vec<String> {
    const POOL: &[&[&str]] = &[
        &["0", "1"],
        &["a", "b", "c"],
        &["w", "x", "y", "z"],
    ];
    loop {
        let a = POOL[r.gen_range(0..POOL.len())];
        if a.len() <= max_symbols {
            return a.iter().map(|s| s.to_string()).collect();
        }
    }
}

pub fn random_moore(
    r: &mut impl Rng,
    max_ports: usize,
    max_symbols: usize,
    max_states: usize,
) -> MooreMachine {
    let n_in = r.gen_range(1..=max_ports);
    let n_out = r.gen_range(1..=max_ports);
    let inputs: Vec<(String, Vec<String>)> =
        (0..n_in).map(|i| (format!("in{i}"), alphabet(r, max_symbols))).collect();
    let outputs: Vec<(String, Vec<String>)> =
        (0..n_out).map(|i| (format!("out{i}"), alphabet(r, max_symbols))).collect();
    let n_states = r.gen_range(1..=max_states);
    let states: Vec<String> = (0..n_states).map(|i| format!("s{i}")).collect();
    let mut update = BTreeMap::new();
    for t in input_tuples(&inputs) {
        for s in &states {
            update.insert((t.clone(), s.clone()), states[r.gen_range(0..n_states)].clone());
        }
    }
    let mut readout = BTreeMap::new();
    for s in &states {
        readout.insert(
            s.clone(),
            outputs
                .iter()
                .map(|(_, sym)| sym[r.gen_range(0..sym.len())].clone())
                .collect(),
        );
    }
    let m = MooreMachine { inputs, outputs, states, update, readout };
    m.validate().expect("generated machine is well formed");
    m
}

/// A random wiring diagram presenting the given box inside a fresh outer
/// box. Every inner input is fed (from a type-matching inner output, or a
/// fresh or shared outer input); outer outputs sample the inner outputs.
/// Always valid by construction.
pub fn random_wiring_over(
    r: &mut impl Rng,
    inner: &Interface,
    outer_label: &str,
) -> WiringDiagram {
    let mut outer = Interface::new(outer_label);
    let mut feeds: Vec<(String, Feed)> = Vec::new();
    let mut outer_in: Vec<(String, PortType)> = Vec::new();
    for p in &inner.inputs {
        let loops: Vec<&str> = inner
            .outputs
            .iter()
            .filter(|o| o.ty == p.ty)
            .map(|o| o.name.as_str())
            .collect();
        if !loops.is_empty() && r.gen_bool(0.5) {
            feeds.push((p.name.clone(), Feed::FromInner(loops[r.gen_range(0..loops.len())].into())));
            continue;
        }
        let reusable: Vec<&str> = outer_in
            .iter()
            .filter(|(_, ty)| *ty == p.ty)
            .map(|(n, _)| n.as_str())
            .collect();
        let source = if !reusable.is_empty() && r.gen_bool(0.34) {
            reusable[r.gen_range(0..reusable.len())].to_string()
        } else {
            let name = format!("u{}", outer_in.len());
            outer_in.push((name.clone(), p.ty.clone()));
            name
        };
        feeds.push((p.name.clone(), Feed::FromOuter(source)));
    }
    for (name, ty) in &outer_in {
        outer = outer.input(name, ty.clone());
    }
    let mut reads: Vec<(String, String)> = Vec::new();
    let mut k = 0;
    for o in &inner.outputs {
        if r.gen_bool(0.7) {
            reads.push((format!("v{k}"), o.name.clone()));
            outer = outer.output(&format!("v{k}"), o.ty.clone());
            k += 1;
        }
    }
    if !inner.outputs.is_empty() && r.gen_bool(0.3) {
        let o = &inner.outputs[r.gen_range(0..inner.outputs.len())];
        reads.push((format!("v{k}"), o.name.clone()));
        outer = outer.output(&format!("v{k}"), o.ty.clone());
    }
    let mut wd = WiringDiagram::new(inner.clone(), outer);
    for (p, f) in feeds {
        wd.feed.insert(p, f);
    }
    for (z, o) in reads {
        wd.read.insert(z, o);
    }
    let report = wd.validate();
    assert!(report.ok(), "generator produced an invalid diagram: {report:?}");
    wd
}

/// A network instance for the message-passing oracle: up to `max_boxes`
/// machines, a wiring over their tensor, a random outer input sequence, and
/// per-part initial states.
pub struct Network {
    pub parts: Vec<MooreMachine>,
    pub labels: Vec<String>,
    pub wd: WiringDiagram,
    pub inputs: Vec<Vec<String>>,
    pub init: Vec<usize>,
}

pub fn random_network(r: &mut impl Rng, max_boxes: usize, steps: usize) -> Network {
    let n = r.gen_range(1..=max_boxes);
    let parts: Vec<MooreMachine> = (0..n).map(|_| random_moore(r, 2, 4, 4)).collect();
    let labels: Vec<String> = (0..n).map(|i| format!("B{i}")).collect();
    let interfaces: Vec<Interface> = parts
        .iter()
        .zip(&labels)
        .map(|(m, l)| m.interface(l))
        .collect();
    let inner = Interface::tensor_all(&interfaces.iter().collect::<Vec<_>>()).unwrap();
    let wd = random_wiring_over(r, &inner, "net");
    let inputs = (0..steps)
        .map(|_| {
            wd.outer
                .inputs
                .iter()
                .map(|p| match &p.ty {
                    PortType::Finite(sym) => sym[r.gen_range(0..sym.len())].clone(),
                    _ => unreachable!("finite networks"),
                })
                .collect()
        })
        .collect();
    let init = parts.iter().map(|m| r.gen_range(0..m.states.len())).collect();
    Network { parts, labels, wd, inputs, init }
}

impl Network {
    pub fn part_refs(&self) -> Vec<(&str, &MooreMachine)> {
        self.labels
            .iter()
            .map(|l| l.as_str())
            .zip(self.parts.iter())
            .collect()
    }

    pub fn init_names(&self) -> Vec<&str> {
        self.parts
            .iter()
            .zip(&self.init)
            .map(|(m, &i)| m.states[i].as_str())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// ODE generators.

pub fn random_poly(r: &mut impl Rng, vars: usize, max_deg: u32) -> Poly {
    let mut p = Poly::zero(vars);
    for _ in 0..r.gen_range(1..=4) {
        let mut exp = vec![0u32; vars];
        let mut budget = r.gen_range(0..=max_deg);
        while budget > 0 && vars > 0 {
            exp[r.gen_range(0..vars)] += 1;
            budget -= 1;
        }
        let coeff = r.gen_range(-8..=8) as f64 / 4.0;
        p = p.add(&Poly { vars, terms: [(exp, coeff)].into() });
    }
    p
}

pub fn random_ode(r: &mut impl Rng) -> OdeMachine {
    let n_in = r.gen_range(1..=2);
    let n_out = r.gen_range(1..=2);
    let inputs: Vec<(String, usize)> = (0..n_in).map(|i| (format!("in{i}"), 1)).collect();
    let outputs: Vec<(String, usize)> = (0..n_out).map(|i| (format!("out{i}"), 1)).collect();
    let state_dim = r.gen_range(1..=2);
    let field = (0..state_dim).map(|_| random_poly(r, n_in + state_dim, 3)).collect();
    let readout = (0..n_out).map(|_| random_poly(r, state_dim, 3)).collect();
    OdeMachine::from_polys(inputs, outputs, state_dim, field, readout).unwrap()
}

// ---------------------------------------------------------------------------
// Graph generators.

pub fn random_graph(r: &mut impl Rng, max_nodes: usize, max_extra_edges: usize) -> Graph {
    let n = r.gen_range(1..=max_nodes);
    let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let n_edges = r.gen_range(0..=max_extra_edges);
    let edges = (0..n_edges)
        .map(|i| (format!("e{i}"), r.gen_range(0..n), r.gen_range(0..n)))
        .collect();
    Graph::new(nodes, edges)
}

// ---------------------------------------------------------------------------
// Graph-span machine generators and the unroll naturality witness.

/// The box a graph machine fills, with behavior-typed ports.
pub fn span_interface(m: &Machine<GraphUniverse>, label: &str) -> Interface {
    let mut b = Interface::new(label);
    for (name, g) in &m.in_ports {
        b = b.input(name, PortType::Behavior(g.clone()));
    }
    for (name, g) in &m.out_ports {
        b = b.output(name, PortType::Behavior(g.clone()));
    }
    b
}

/// A random deterministic inertial graph machine. The bool says whether the
/// machine was kept step-total (h-surjective); pruned machines lose
/// totality but stay deterministic and inertial.
pub fn random_span_machine(r: &mut impl Rng) -> (Machine<GraphUniverse>, bool) {
    let u = GraphUniverse;
    match r.gen_range(0..4) {
        0 => (span::unroll_moore(&random_moore(r, 2, 3, 3)).unwrap(), true),
        1 => {
            let names: Vec<String> = alphabet(r, 4);
            let g = wirebox::graph::complete(&names.iter().map(|s| s.as_str()).collect::<Vec<_>>());
            (span::delay_machine(&g), true)
        }
        2 => {
            let a = span::unroll_moore(&random_moore(r, 1, 2, 2)).unwrap();
            let b = span::unroll_moore(&random_moore(r, 1, 2, 2)).unwrap();
            (span::tensor_all(&u, &[("l", &a), ("r", &b)]).unwrap(), true)
        }
        _ => {
            let mut m = span::unroll_moore(&random_moore(r, 2, 3, 3)).unwrap();
            let total = m.state.edges.len();
            let keep: Vec<bool> = (0..total).map(|_| r.gen_bool(0.7)).collect();
            if keep.iter().all(|&k| k) {
                return (m, true);
            }
            let mut old_to_new = vec![usize::MAX; total];
            let mut edges = Vec::new();
            for (i, e) in m.state.edges.iter().enumerate() {
                if keep[i] {
                    old_to_new[i] = edges.len();
                    edges.push(e.clone());
                }
            }
            let prune = |h: &GraphHom, st: &Graph| GraphHom {
                dom: st.clone(),
                cod: h.cod.clone(),
                node_map: h.node_map.clone(),
                edge_map: h
                    .edge_map
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| keep[*i])
                    .map(|(_, &img)| img)
                    .collect(),
            };
            let state = Graph { nodes: m.state.nodes.clone(), edges, refl: None };
            m.in_map = prune(&m.in_map, &state);
            m.out_map = prune(&m.out_map, &state);
            m.state = state;
            m.validate(&u).unwrap();
            (m, false)
        }
    }
}

/// A random dwell-and-jump trace on a reflexive graph: every node has its
/// distinguished loop, so entering and leaving jumps always exist.
pub fn random_timed_trace(r: &mut impl Rng, g: &Graph) -> wirebox::timed::TimedTrace {
    use num_rational::Rational64;
    let mut into = vec![Vec::new(); g.nodes.len()];
    let mut outof = vec![Vec::new(); g.nodes.len()];
    for (i, e) in g.edges.iter().enumerate() {
        into[e.tgt].push(i);
        outof[e.src].push(i);
    }
    let v0 = r.gen_range(0..g.nodes.len());
    let start = g.edges[into[v0][r.gen_range(0..into[v0].len())]].name.clone();
    let nsegs = r.gen_range(1..=4);
    let mut segments = Vec::new();
    let mut jumps = Vec::new();
    let mut cur = v0;
    for i in 0..nsegs {
        let dur = Rational64::new(r.gen_range(1..=3), r.gen_range(1..=4));
        segments.push((g.nodes[cur].clone(), dur));
        if i + 1 < nsegs {
            let e = outof[cur][r.gen_range(0..outof[cur].len())];
            jumps.push(g.edges[e].name.clone());
            cur = g.edges[e].tgt;
        }
    }
    let end = g.edges[outof[cur][r.gen_range(0..outof[cur].len())]].name.clone();
    let t = wirebox::timed::TimedTrace { start, segments, jumps, end };
    t.validate(g).unwrap();
    t
}

/// Like [`random_span_machine`] but bounded small, for tests that combine
/// several machines and would otherwise blow up the product state graph.
pub fn random_small_span_machine(r: &mut impl Rng) -> (Machine<GraphUniverse>, bool) {
    match r.gen_range(0..3) {
        0 => (span::unroll_moore(&random_moore(r, 1, 2, 2)).unwrap(), true),
        1 => {
            let names: Vec<String> = alphabet(r, 3);
            let g = wirebox::graph::complete(&names.iter().map(|s| s.as_str()).collect::<Vec<_>>());
            (span::delay_machine(&g), true)
        }
        _ => {
            // A pruned small unroll: loop until pruning actually removes
            // something so the flag is honest.
            loop {
                let (m, total) = random_span_machine_pruned(r, 1, 2, 2);
                if !total {
                    return (m, false);
                }
            }
        }
    }
}

fn random_span_machine_pruned(
    r: &mut impl Rng,
    max_ports: usize,
    max_symbols: usize,
    max_states: usize,
) -> (Machine<GraphUniverse>, bool) {
    let u = GraphUniverse;
    let mut m = span::unroll_moore(&random_moore(r, max_ports, max_symbols, max_states)).unwrap();
    let total = m.state.edges.len();
    let keep: Vec<bool> = (0..total).map(|_| r.gen_bool(0.7)).collect();
    if keep.iter().all(|&k| k) {
        return (m, true);
    }
    let mut edges = Vec::new();
    for (i, e) in m.state.edges.iter().enumerate() {
        if keep[i] {
            edges.push(e.clone());
        }
    }
    let prune = |h: &GraphHom, st: &Graph| GraphHom {
        dom: st.clone(),
        cod: h.cod.clone(),
        node_map: h.node_map.clone(),
        edge_map: h
            .edge_map
            .iter()
            .enumerate()
            .filter(|(i, _)| keep[*i])
            .map(|(_, &img)| img)
            .collect(),
    };
    let state = Graph { nodes: m.state.nodes.clone(), edges, refl: None };
    m.in_map = prune(&m.in_map, &state);
    m.out_map = prune(&m.out_map, &state);
    m.state = state;
    m.validate(&u).unwrap();
    (m, false)
}

/// Checks the realization naturality square on one (machine, diagram) pair
/// by building the canonical witness explicitly: interconnecting the state
/// machine and then unrolling gives the same span as unrolling first and
/// interconnecting the graph machine, with the evident bijection between
/// (environment, state) descriptions. Panics with context on failure.
pub fn check_unroll_naturality(m: &MooreMachine, wd: &WiringDiagram) {
    let u = GraphUniverse;
    let composed = moore::rewire(wd, m).expect("moore rewire");
    let lhs = span::unroll_moore(&composed).expect("unroll of composite");
    let unrolled = span::unroll_moore(m).expect("unroll");
    let rewired = span::rewire(&u, wd, &unrolled).expect("span rewire");
    let rhs = &rewired.machine;

    // Index helpers. Node/edge orders of unrolled machines and product
    // graphs are row-major over the declared port order.
    let y_tuples = input_tuples(&composed.inputs);
    let x_tuples = input_tuples(&m.inputs);
    let x_pos: BTreeMap<&Vec<String>, usize> =
        x_tuples.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let nstates = m.states.len();

    let out_sizes: Vec<usize> = m.outputs.iter().map(|(_, sym)| sym.len()).collect();
    let b_node = |s: &str| {
        let idx: Vec<usize> = m
            .outputs
            .iter()
            .zip(&m.readout[s])
            .map(|((_, sym), v)| sym.iter().position(|x| x == v).unwrap())
            .collect();
        wirebox::graph::tuple_index(&out_sizes, &idx)
    };
    let b_edge = |s0: &str, s1: &str| {
        let i0: Vec<usize> = m
            .outputs
            .iter()
            .zip(&m.readout[s0])
            .map(|((_, sym), v)| sym.iter().position(|x| x == v).unwrap())
            .collect();
        let i1: Vec<usize> = m
            .outputs
            .iter()
            .zip(&m.readout[s1])
            .map(|((_, sym), v)| sym.iter().position(|x| x == v).unwrap())
            .collect();
        let per: Vec<usize> =
            i0.iter().zip(&i1).zip(&out_sizes).map(|((a, b), n)| a * n + b).collect();
        wirebox::graph::tuple_index(&out_sizes.iter().map(|n| n * n).collect::<Vec<_>>(), &per)
    };
    let in_sizes: Vec<usize> = composed.inputs.iter().map(|(_, sym)| sym.len()).collect();
    let y_edge = |t0: &[String], t1: &[String]| {
        let idx = |t: &[String]| -> Vec<usize> {
            composed
                .inputs
                .iter()
                .zip(t)
                .map(|((_, sym), v)| sym.iter().position(|x| x == v).unwrap())
                .collect()
        };
        let (i0, i1) = (idx(t0), idx(t1));
        let per: Vec<usize> =
            i0.iter().zip(&i1).zip(&in_sizes).map(|((a, b), n)| a * n + b).collect();
        wirebox::graph::tuple_index(&in_sizes.iter().map(|n| n * n).collect::<Vec<_>>(), &per)
    };

    // The environment object is the binary product (outer inputs) x
    // (inner outputs): indices split as env = y * |b| + b.
    let b_nodes: usize = out_sizes.iter().product();
    let b_edges: usize = out_sizes.iter().map(|n| n * n).product();

    let route = |y: &[String], s: &str| -> Vec<String> {
        let outer_in: BTreeMap<String, Value> = composed
            .inputs
            .iter()
            .zip(y)
            .map(|((name, _), v)| (name.clone(), Value::Symbol(v.clone())))
            .collect();
        let inner_out: BTreeMap<String, Value> = m
            .outputs
            .iter()
            .zip(&m.readout[s])
            .map(|((name, _), v)| (name.clone(), Value::Symbol(v.clone())))
            .collect();
        let routed = wd.route_inputs(&outer_in, &inner_out).expect("routing");
        m.inputs
            .iter()
            .map(|(name, _)| match &routed[name] {
                Value::Symbol(v) => v.clone(),
                Value::Vector(_) => unreachable!("finite ports"),
            })
            .collect()
    };

    // Node map of the canonical witness.
    let find_node = |p_idx: usize, s_idx: usize| -> usize {
        (0..rhs.state.nodes.len())
            .find(|&n| rewired.env.node_map[n] == p_idx && rewired.to_state.node_map[n] == s_idx)
            .expect("naturality: composite state node exists")
    };
    let find_edge = |p_idx: usize, s_idx: usize| -> usize {
        (0..rhs.state.edges.len())
            .find(|&e| rewired.env.edge_map[e] == p_idx && rewired.to_state.edge_map[e] == s_idx)
            .expect("naturality: composite state edge exists")
    };

    let mut node_map = Vec::with_capacity(lhs.state.nodes.len());
    for (yi, y) in y_tuples.iter().enumerate() {
        for (si, s) in m.states.iter().enumerate() {
            let p_idx = yi * b_nodes + b_node(s);
            let x = route(y, s);
            let sigma = x_pos[&x] * nstates + si;
            node_map.push(find_node(p_idx, sigma));
        }
    }
    let mut edge_map = Vec::with_capacity(lhs.state.edges.len());
    for y0 in &y_tuples {
        for (si, s) in m.states.iter().enumerate() {
            let s1 = &composed.update[&(y0.clone(), composed.states[si].clone())];
            for y1 in &y_tuples {
                let p_edge = y_edge(y0, y1) * b_edges + b_edge(s, s1);
                let x0 = route(y0, s);
                let x1 = route(y1, s1);
                let sigma_edge =
                    (x_pos[&x0] * nstates + si) * x_tuples.len() + x_pos[&x1];
                edge_map.push(find_edge(p_edge, sigma_edge));
            }
        }
    }

    let witness = GraphHom { dom: lhs.state.clone(), cod: rhs.state.clone(), node_map, edge_map };
    witness.validate().expect("canonical witness is a graph map");
    assert!(
        span::span_isomorphic(&u, &lhs, rhs, Some(&witness)).expect("span comparison"),
        "naturality square does not commute"
    );
}
