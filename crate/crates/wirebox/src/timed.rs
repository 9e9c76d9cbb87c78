//! Real-time behaviors over a reflexive graph: dwell on a node for a
//! positive rational duration, jump along an edge, repeat. A trace carries a
//! jump on each boundary, so restriction at an interior point inserts the
//! node's distinguished loop, and gluing demands the shared boundary jump to
//! be the same edge, not merely the same node. Machines relate a state graph
//! to an input and an output alphabet; execution threads a state trace over
//! a given input trace, erroring when no step (or more than one) fits.

use crate::graph::{Graph, GraphError, GraphHom};
use num_rational::Rational64;
use num_traits::Zero;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ExecError {
    Trace(GraphError),
    UnknownName { kind: &'static str, name: String },
    BadShape(String),
    /// No step fits at the given time into the run.
    NoRun { time: Rational64 },
    /// Two different runs fit, first diverging at the given time.
    Ambiguous { time: Rational64 },
    HistoryLength { expected: Rational64, found: Rational64 },
}

impl fmt::Display for ExecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExecError::Trace(e) => write!(f, "bad trace: {e}"),
            ExecError::UnknownName { kind, name } => write!(f, "unknown {kind} {name:?}"),
            ExecError::BadShape(m) => write!(f, "{m}"),
            ExecError::NoRun { time } => write!(f, "no enabled step at time {time}"),
            ExecError::Ambiguous { time } => {
                write!(f, "more than one run; first divergence at time {time}")
            }
            ExecError::HistoryLength { expected, found } => {
                write!(f, "history must have length {expected}, found {found}")
            }
        }
    }
}

impl std::error::Error for ExecError {}

impl From<GraphError> for ExecError {
    fn from(e: GraphError) -> Self {
        ExecError::Trace(e)
    }
}

/// A behavior over a window `[0, len]`: a jump on each boundary, dwell
/// segments with positive durations, and the interior jumps between them. A
/// zero-length trace is a single jump (`start == end`, no segments).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedTrace {
    pub start: String,
    pub segments: Vec<(String, Rational64)>,
    pub jumps: Vec<String>,
    pub end: String,
}

impl TimedTrace {
    pub fn instant(jump: &str) -> TimedTrace {
        TimedTrace { start: jump.into(), segments: vec![], jumps: vec![], end: jump.into() }
    }

    pub fn len(&self) -> Rational64 {
        self.segments.iter().map(|(_, d)| *d).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn validate(&self, g: &Graph) -> Result<(), ExecError> {
        let edge = |name: &String| {
            g.edge_index(name)
                .ok_or_else(|| ExecError::UnknownName { kind: "jump", name: name.clone() })
        };
        let node = |name: &String| {
            g.node_index(name)
                .ok_or_else(|| ExecError::UnknownName { kind: "value", name: name.clone() })
        };
        let start = edge(&self.start)?;
        let end = edge(&self.end)?;
        if self.segments.is_empty() {
            if self.start != self.end {
                return Err(ExecError::BadShape(
                    "zero-length trace must be a single jump".into(),
                ));
            }
            if !self.jumps.is_empty() {
                return Err(ExecError::BadShape("jumps without segments".into()));
            }
            return Ok(());
        }
        if self.jumps.len() + 1 != self.segments.len() {
            return Err(ExecError::BadShape(
                "need exactly one interior jump between consecutive segments".into(),
            ));
        }
        for (name, d) in &self.segments {
            node(name)?;
            if *d <= Rational64::zero() {
                return Err(ExecError::BadShape(format!("segment at {name:?} has zero duration")));
            }
        }
        let seg_node = |i: usize| g.node_index(&self.segments[i].0).unwrap();
        if g.edges[start].tgt != seg_node(0) {
            return Err(ExecError::BadShape("start jump does not land on the first segment".into()));
        }
        for (i, j) in self.jumps.iter().enumerate() {
            let je = edge(j)?;
            if g.edges[je].src != seg_node(i) || g.edges[je].tgt != seg_node(i + 1) {
                return Err(ExecError::BadShape(format!("jump {j:?} does not match its segments")));
            }
        }
        if g.edges[end].src != seg_node(self.segments.len() - 1) {
            return Err(ExecError::BadShape("end jump does not leave the last segment".into()));
        }
        Ok(())
    }

    /// Erases interior jumps that are the distinguished loop of their node,
    /// merging the adjacent dwell segments. Boundary jumps stay. Two traces
    /// describe the same behavior exactly when they normalize equal.
    pub fn normalize(&self, g: &Graph) -> Result<TimedTrace, ExecError> {
        self.validate(g)?;
        if self.segments.is_empty() {
            return Ok(self.clone());
        }
        let mut segments = vec![self.segments[0].clone()];
        let mut jumps = Vec::new();
        for (i, j) in self.jumps.iter().enumerate() {
            let je = g.edge_index(j).unwrap();
            if g.is_refl_edge(je) {
                segments.last_mut().unwrap().1 += self.segments[i + 1].1;
            } else {
                jumps.push(j.clone());
                segments.push(self.segments[i + 1].clone());
            }
        }
        Ok(TimedTrace { start: self.start.clone(), segments, jumps, end: self.end.clone() })
    }

    /// The behavior over `[p, p + new_len]`. Cuts at a jump keep that jump
    /// as the new boundary; cuts inside a segment use the node's
    /// distinguished loop, which requires `g` to be reflexive.
    pub fn restrict(
        &self,
        g: &Graph,
        p: Rational64,
        new_len: Rational64,
    ) -> Result<TimedTrace, ExecError> {
        self.validate(g)?;
        if p < Rational64::zero() || new_len < Rational64::zero() || p + new_len > self.len() {
            return Err(ExecError::BadShape("restriction window out of range".into()));
        }
        // Boundary events: (time, jump name) for start, interior, end.
        let mut events = vec![(Rational64::zero(), self.start.clone())];
        let mut t = Rational64::zero();
        for (i, (_, d)) in self.segments.iter().enumerate() {
            t += *d;
            let name = if i + 1 < self.segments.len() {
                self.jumps[i].clone()
            } else {
                self.end.clone()
            };
            events.push((t, name));
        }
        // The dwell node active strictly between events i and i+1.
        let node_at = |i: usize| self.segments[i].0.clone();

        let boundary = |time: Rational64| -> Result<String, ExecError> {
            for (et, name) in &events {
                if *et == time {
                    return Ok(name.clone());
                }
            }
            // Inside segment i: the cut is the distinguished loop.
            let mut acc = Rational64::zero();
            for (i, (_, d)) in self.segments.iter().enumerate() {
                if time < acc + *d {
                    let v = g.node_index(&node_at(i)).unwrap();
                    let loop_edge = g.refl_edge(v)?;
                    return Ok(g.edges[loop_edge].name.clone());
                }
                acc += *d;
            }
            unreachable!("time inside the window");
        };

        let start = boundary(p)?;
        let end = boundary(p + new_len)?;
        if new_len.is_zero() {
            return Ok(TimedTrace { start: start.clone(), segments: vec![], jumps: vec![], end: start });
        }
        // Collect segments overlapping (p, p + new_len) with clipped
        // durations, and the interior jumps falling strictly inside.
        let mut segments = Vec::new();
        let mut jumps = Vec::new();
        let mut acc = Rational64::zero();
        for (i, (name, d)) in self.segments.iter().enumerate() {
            let s0 = acc;
            let s1 = acc + *d;
            acc = s1;
            let lo = if s0 > p { s0 } else { p };
            let hi = if s1 < p + new_len { s1 } else { p + new_len };
            if lo < hi {
                segments.push((name.clone(), hi - lo));
                if i + 1 < self.segments.len() && s1 > p && s1 < p + new_len {
                    jumps.push(self.jumps[i].clone());
                }
            }
        }
        Ok(TimedTrace { start, segments, jumps, end })
    }

    /// Concatenation. The right boundary jump of `self` must be the same
    /// edge as the left boundary jump of `next`; node agreement alone is
    /// not enough, because the overlap of the two windows is a jump.
    pub fn glue(&self, g: &Graph, next: &TimedTrace) -> Result<TimedTrace, ExecError> {
        self.validate(g)?;
        next.validate(g)?;
        if self.end != next.start {
            return Err(ExecError::Trace(GraphError::GermMismatch {
                left: self.end.clone(),
                right: next.start.clone(),
            }));
        }
        if self.segments.is_empty() {
            return Ok(next.clone());
        }
        if next.segments.is_empty() {
            return Ok(self.clone());
        }
        let mut segments = self.segments.clone();
        segments.extend(next.segments.iter().cloned());
        let mut jumps = self.jumps.clone();
        jumps.push(self.end.clone());
        jumps.extend(next.jumps.iter().cloned());
        Ok(TimedTrace { start: self.start.clone(), segments, jumps, end: next.end.clone() })
    }
}

/// Pushes a trace along a graph map: values and jumps are renamed by the
/// hom, durations are untouched.
pub fn apply_hom(h: &GraphHom, t: &TimedTrace) -> Result<TimedTrace, ExecError> {
    let edge = |name: &String| -> Result<String, ExecError> {
        let i = h
            .dom
            .edge_index(name)
            .ok_or_else(|| ExecError::UnknownName { kind: "jump", name: name.clone() })?;
        Ok(h.cod.edges[h.edge_map[i]].name.clone())
    };
    let node = |name: &String| -> Result<String, ExecError> {
        let i = h
            .dom
            .node_index(name)
            .ok_or_else(|| ExecError::UnknownName { kind: "value", name: name.clone() })?;
        Ok(h.cod.nodes[h.node_map[i]].clone())
    };
    Ok(TimedTrace {
        start: edge(&t.start)?,
        segments: t
            .segments
            .iter()
            .map(|(n, d)| Ok((node(n)?, *d)))
            .collect::<Result<_, ExecError>>()?,
        jumps: t.jumps.iter().map(&edge).collect::<Result<_, ExecError>>()?,
        end: edge(&t.end)?,
    })
}

/// A timed machine: a reflexive state graph related to a reflexive input
/// alphabet (what the machine must follow) and a reflexive output alphabet
/// (what it shows). Dwelling in a state dwells on its alphabet germs, so
/// both maps must preserve the distinguished loops.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedMachine {
    pub state: Graph,
    pub input: Graph,
    pub output: Graph,
    pub read: GraphHom,
    pub show: GraphHom,
}

impl TimedMachine {
    pub fn new(state: Graph, read: GraphHom, show: GraphHom) -> Result<TimedMachine, ExecError> {
        let m = TimedMachine {
            input: read.cod.clone(),
            output: show.cod.clone(),
            state,
            read,
            show,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ExecError> {
        for g in [&self.state, &self.input, &self.output] {
            g.validate()?;
            if g.refl.is_none() {
                return Err(ExecError::BadShape("timed machines need reflexive graphs".into()));
            }
        }
        if self.read.dom != self.state || self.show.dom != self.state {
            return Err(ExecError::BadShape("machine maps must start at the state graph".into()));
        }
        if self.read.cod != self.input || self.show.cod != self.output {
            return Err(ExecError::BadShape("machine maps must land in the alphabets".into()));
        }
        self.read.validate()?;
        self.show.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub state: TimedTrace,
    pub output: TimedTrace,
}

/// One run candidate: the state edges chosen at each boundary event, and the
/// dwell nodes between them.
#[derive(Debug, Clone, PartialEq)]
struct Run {
    edges: Vec<usize>,
}

/// Threads a state trace over the input trace, starting from the state
/// `init` at the left edge of the window (the source of the first jump).
/// The state trace must project to the input trace edge for edge and value
/// for value; exactly one such trace may exist, otherwise the failure tells
/// when the run got stuck or ambiguous.
pub fn execute(m: &TimedMachine, input: &TimedTrace, init: &str) -> Result<Execution, ExecError> {
    m.validate()?;
    input.validate(&m.input)?;
    let v0 = m
        .state
        .node_index(init)
        .ok_or_else(|| ExecError::UnknownName { kind: "state", name: init.into() })?;
    let in_edge = |name: &String| m.input.edge_index(name).unwrap();
    let in_node = |name: &String| m.input.node_index(name).unwrap();

    // The observable sequence: jump labels at event times, dwell values
    // between them.
    let mut jump_labels = vec![in_edge(&input.start)];
    for j in &input.jumps {
        jump_labels.push(in_edge(j));
    }
    if !input.segments.is_empty() {
        jump_labels.push(in_edge(&input.end));
    }
    let dwell_values: Vec<usize> = input.segments.iter().map(|(n, _)| in_node(n)).collect();
    let mut event_times = vec![Rational64::zero()];
    let mut t = Rational64::zero();
    for (_, d) in &input.segments {
        t += *d;
        event_times.push(t);
    }

    // Depth-first over jump choices; collect up to two full runs and track
    // the deepest point reached for the error message.
    let mut runs: Vec<Run> = Vec::new();
    let mut deepest = 0usize;
    let mut stack: Vec<(usize, usize, Vec<usize>)> = Vec::new(); // (depth, node, chosen)
    // Depth d chooses the jump at event d; node is the current dwell node
    // before that jump (or the initial germ).
    stack.push((0, v0, vec![]));
    while let Some((depth, node, chosen)) = stack.pop() {
        if runs.len() >= 2 {
            break;
        }
        if depth == jump_labels.len() {
            runs.push(Run { edges: chosen });
            continue;
        }
        deepest = deepest.max(depth);
        let want = jump_labels[depth];
        for (e, edge) in m.state.edges.iter().enumerate() {
            if edge.src != node || m.read.edge_map[e] != want {
                continue;
            }
            // The landing node must dwell on the next segment's value, when
            // there is one.
            if depth < dwell_values.len() && m.read.node_map[edge.tgt] != dwell_values[depth] {
                continue;
            }
            let mut c = chosen.clone();
            c.push(e);
            stack.push((depth + 1, edge.tgt, c));
        }
    }

    match runs.len() {
        0 => Err(ExecError::NoRun { time: event_times[deepest.min(event_times.len() - 1)] }),
        1 => {
            let run = &runs[0];
            let interior = if run.edges.len() >= 2 { &run.edges[1..run.edges.len() - 1] } else { &[] };
            let state_trace = TimedTrace {
                start: m.state.edges[run.edges[0]].name.clone(),
                segments: input
                    .segments
                    .iter()
                    .enumerate()
                    .map(|(i, (_, d))| {
                        (m.state.nodes[m.state.edges[run.edges[i]].tgt].clone(), *d)
                    })
                    .collect(),
                jumps: interior.iter().map(|&e| m.state.edges[e].name.clone()).collect(),
                end: m.state.edges[*run.edges.last().unwrap()].name.clone(),
            };
            debug_assert!(state_trace.validate(&m.state).is_ok());
            debug_assert_eq!(apply_hom(&m.read, &state_trace).unwrap(), *input);
            let output = apply_hom(&m.show, &state_trace)?;
            Ok(Execution { state: state_trace, output })
        }
        _ => {
            let a = &runs[0].edges;
            let b = &runs[1].edges;
            let div = a.iter().zip(b).position(|(x, y)| x != y).unwrap_or(0);
            Err(ExecError::Ambiguous { time: event_times[div.min(event_times.len() - 1)] })
        }
    }
}

/// Output of the pure delay by `eps` on behaviors of `g`: the history (a
/// trace of length exactly `eps`, ending in the input's start jump) is
/// replayed first, so `output(t) = input(t - eps)` over the whole window.
pub fn delay_output(
    g: &Graph,
    eps: Rational64,
    history: &TimedTrace,
    input: &TimedTrace,
) -> Result<TimedTrace, ExecError> {
    if history.len() != eps {
        return Err(ExecError::HistoryLength { expected: eps, found: history.len() });
    }
    let glued = history.glue(g, input)?;
    glued.restrict(g, Rational64::zero(), input.len())
}

// ---------------------------------------------------------------------------
// Builtin machines.

/// Saturating addition table on `0..=cap`, used to make the balance monoid
/// finite. Below the cap it is ordinary addition.
fn sat(cap: u64, a: u64, b: u64) -> u64 {
    (a + b).min(cap)
}

/// A storage cell over the balances `0..=cap`. The state graph has a node
/// per balance and an edge named `(c,b,d)` for every credit `c`, retained
/// balance `b`, debit `d`: it starts at balance `b + d` and ends at `c + b`.
/// The input alphabet pairs credit and debit events; the output shows the
/// balance. A debit exceeding the balance has no edge, so the executor
/// reports it instead of inventing money.
pub fn storage_machine(cap: u64) -> TimedMachine {
    let n = (cap + 1) as usize;
    let names: Vec<String> = (0..=cap).map(|i| i.to_string()).collect();
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();

    let nodes = names.clone();
    let mut edges = Vec::with_capacity(n * n * n);
    for c in 0..=cap {
        for b in 0..=cap {
            for d in 0..=cap {
                edges.push(crate::graph::Edge {
                    name: format!("({c},{b},{d})"),
                    src: sat(cap, b, d) as usize,
                    tgt: sat(cap, c, b) as usize,
                });
            }
        }
    }
    // refl(b) = (0, b, 0) at index (0 * n + b) * n + 0.
    let refl = Some((0..n).map(|b| b * n).collect());
    let state = Graph { nodes, edges, refl };

    let credit = crate::graph::loops_reflexive(&name_refs, 0);
    let debit = crate::graph::loops_reflexive(&name_refs, 0);
    let (input, _) = crate::graph::product(&[&credit, &debit]);
    let mut read_edges = Vec::with_capacity(n * n * n);
    for c in 0..n {
        for _b in 0..n {
            for d in 0..n {
                read_edges.push(c * n + d);
            }
        }
    }
    let read = GraphHom {
        dom: state.clone(),
        cod: input.clone(),
        node_map: vec![0; n],
        edge_map: read_edges,
    };

    let output = crate::graph::complete(&name_refs);
    let mut show_edges = Vec::with_capacity(n * n * n);
    for c in 0..=cap {
        for b in 0..=cap {
            for d in 0..=cap {
                show_edges.push((sat(cap, b, d) as usize) * n + sat(cap, c, b) as usize);
            }
        }
    }
    let show = GraphHom {
        dom: state.clone(),
        cod: output.clone(),
        node_map: (0..n).collect(),
        edge_map: show_edges,
    };

    TimedMachine { state, input, output, read, show }
}

/// A labelled transition system as a timed machine. `transitions` lists
/// `(label, state, next state)`; pairs absent from the list are simply not
/// enabled, which makes the machine partial. States dwell freely (a fresh
/// distinguished loop is added everywhere); each transition is an
/// instantaneous labelled jump; the output shows `outputs[state]`.
pub fn lts_machine(
    labels: &[&str],
    states: &[&str],
    transitions: &[(usize, usize, usize)],
    outputs: &[usize],
    omega: &[&str],
) -> Result<TimedMachine, ExecError> {
    if outputs.len() != states.len() {
        return Err(ExecError::BadShape("one output symbol per state".into()));
    }
    let base = Graph::new(
        states.iter().map(|s| s.to_string()).collect(),
        transitions
            .iter()
            .enumerate()
            .map(|(i, &(l, s, t))| (format!("{}:{}#{i}", labels[l], states[s]), s, t))
            .collect(),
    );
    let state = base.free_reflexive();
    let input = crate::graph::loops(labels).free_reflexive();
    // Transition edges keep their label; distinguished loops read the
    // distinguished input loop.
    let mut read_edges: Vec<usize> = transitions.iter().map(|&(l, _, _)| l).collect();
    read_edges.extend(states.iter().map(|_| labels.len()));
    let read = GraphHom {
        dom: state.clone(),
        cod: input.clone(),
        node_map: vec![0; states.len()],
        edge_map: read_edges,
    };
    let output = crate::graph::complete(omega);
    let k = omega.len();
    let mut show_edges: Vec<usize> = transitions
        .iter()
        .map(|&(_, s, t)| outputs[s] * k + outputs[t])
        .collect();
    show_edges.extend(outputs.iter().map(|&o| o * k + o));
    let show = GraphHom {
        dom: state.clone(),
        cod: output.clone(),
        node_map: outputs.to_vec(),
        edge_map: show_edges,
    };
    TimedMachine::new(state, read, show)
}

/// Every `(label, state)` pair missing a transition gets a self-loop, the
/// standard way to make a partial transition system total.
pub fn totalize(
    labels_len: usize,
    states_len: usize,
    transitions: &[(usize, usize, usize)],
) -> Vec<(usize, usize, usize)> {
    let mut out = transitions.to_vec();
    for l in 0..labels_len {
        for s in 0..states_len {
            if !transitions.iter().any(|&(tl, ts, _)| tl == l && ts == s) {
                out.push((l, s, s));
            }
        }
    }
    out
}

/// An `m`-way switch over `alphabet`: the state remembers a selector and one
/// held value per position; the output shows the selected value. Both the
/// selector and all the values may be rewritten at every jump, so the input
/// alphabet is the product of a selector component with `m` value
/// components, and the machine follows it totally and deterministically.
pub fn switch_machine(m: usize, alphabet: &[&str]) -> TimedMachine {
    use crate::span::{FinSet, FinSetUniverse, SectionFunctor, Universe};
    assert!(m >= 1);
    let su = FinSetUniverse;
    let sel = FinSet { elems: (1..=m).map(|i| i.to_string()).collect() };
    let val = FinSet { elems: alphabet.iter().map(|s| s.to_string()).collect() };
    let mut factors: Vec<&FinSet> = vec![&sel];
    let vals: Vec<&FinSet> = (0..m).map(|_| &val).collect();
    factors.extend(vals);
    let (state_set, _) = su.product(&factors);
    // read: the complete graph on selector-value tuples, mapped by the
    // canonical distribution onto the product of complete components.
    let read = SectionFunctor::Complete.distribute(&factors);
    let state = read.dom.clone();
    let input = read.cod.clone();
    let output = crate::graph::complete(alphabet);
    let a = alphabet.len();
    let nstates = state_set.elems.len();
    let sizes: Vec<usize> = std::iter::once(m).chain(std::iter::repeat(a).take(m)).collect();
    let selected = |flat: usize| -> usize {
        let idx = crate::graph::untuple_index(&sizes, flat);
        idx[1 + idx[0]]
    };
    let show = GraphHom {
        dom: state.clone(),
        cod: output.clone(),
        node_map: (0..nstates).map(selected).collect(),
        edge_map: (0..nstates * nstates)
            .map(|e| selected(e / nstates) * a + selected(e % nstates))
            .collect(),
    };
    TimedMachine { state, input, output, read, show }
}

/// A machine built from explicit graph data: dwell anywhere the state graph
/// allows, follow `read`, publish `show`.
pub fn rw_machine(read: GraphHom, show: GraphHom) -> Result<TimedMachine, ExecError> {
    if read.dom != show.dom {
        return Err(ExecError::BadShape("read and show must share the state graph".into()));
    }
    TimedMachine::new(read.dom.clone(), read, show)
}

/// Lists the names of all balances, credits, and jump labels the storage
/// machine uses, to build input traces without reconstructing the naming
/// scheme by hand. The jump label for credit `c` and debit `d` is returned
/// by `storage_jump`.
pub fn storage_jump(c: u64, d: u64) -> String {
    format!("({c},{d})")
}
