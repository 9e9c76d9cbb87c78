//! Finite state machines that read a tuple of input symbols, update total
//! deterministic state, and expose outputs that depend on the state alone.
//! Because outputs never see the current input, feedback loops in a wiring
//! are well defined: this file proves it operationally by simulating a wired
//! network two ways (one composite machine vs. message passing) and insisting
//! on equal traces.

use crate::wiring::{PortType, Value, WiringDiagram, WiringError};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum MooreError {
    MissingUpdate { input: Vec<String>, state: String },
    MissingReadout { state: String },
    UnknownState(String),
    UnknownSymbol { port: String, symbol: String },
    PortMismatch(String),
    Wiring(WiringError),
}

impl fmt::Display for MooreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MooreError::MissingUpdate { input, state } => {
                write!(f, "no update entry for input {input:?} in state {state:?}")
            }
            MooreError::MissingReadout { state } => write!(f, "no readout for state {state:?}"),
            MooreError::UnknownState(s) => write!(f, "unknown state {s:?}"),
            MooreError::UnknownSymbol { port, symbol } => {
                write!(f, "symbol {symbol:?} not in the alphabet of port {port:?}")
            }
            MooreError::PortMismatch(msg) => write!(f, "port mismatch: {msg}"),
            MooreError::Wiring(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for MooreError {}

impl From<WiringError> for MooreError {
    fn from(e: WiringError) -> Self {
        MooreError::Wiring(e)
    }
}

/// A machine over named finite-alphabet ports. Input tuples are ordered by
/// port declaration; `update` must be total over tuples x states.
#[derive(Debug, Clone, PartialEq)]
pub struct MooreMachine {
    pub inputs: Vec<(String, Vec<String>)>,
    pub outputs: Vec<(String, Vec<String>)>,
    pub states: Vec<String>,
    pub update: BTreeMap<(Vec<String>, String), String>,
    pub readout: BTreeMap<String, Vec<String>>,
}

/// Cartesian product of the alphabets, row-major in port order. An empty
/// port list yields the single empty tuple.
pub fn input_tuples(ports: &[(String, Vec<String>)]) -> Vec<Vec<String>> {
    let mut out = vec![vec![]];
    for (_, sym) in ports {
        let mut next = Vec::with_capacity(out.len() * sym.len());
        for t in &out {
            for s in sym {
                let mut t2 = t.clone();
                t2.push(s.clone());
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

impl MooreMachine {
    pub fn validate(&self) -> Result<(), MooreError> {
        for s in &self.states {
            let r = self
                .readout
                .get(s)
                .ok_or_else(|| MooreError::MissingReadout { state: s.clone() })?;
            if r.len() != self.outputs.len() {
                return Err(MooreError::PortMismatch(format!(
                    "readout of {s:?} has {} components for {} output ports",
                    r.len(),
                    self.outputs.len()
                )));
            }
            for (v, (port, sym)) in r.iter().zip(&self.outputs) {
                if !sym.contains(v) {
                    return Err(MooreError::UnknownSymbol { port: port.clone(), symbol: v.clone() });
                }
            }
            for x in input_tuples(&self.inputs) {
                let next = self
                    .update
                    .get(&(x.clone(), s.clone()))
                    .ok_or_else(|| MooreError::MissingUpdate { input: x.clone(), state: s.clone() })?;
                if !self.states.contains(next) {
                    return Err(MooreError::UnknownState(next.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn step(&self, input: &[String], state: &str) -> Result<String, MooreError> {
        self.update
            .get(&(input.to_vec(), state.to_string()))
            .cloned()
            .ok_or_else(|| MooreError::MissingUpdate { input: input.to_vec(), state: state.into() })
    }

    pub fn observe(&self, state: &str) -> Result<Vec<String>, MooreError> {
        self.readout
            .get(state)
            .cloned()
            .ok_or_else(|| MooreError::MissingReadout { state: state.into() })
    }

    /// The box this machine fills. `label` is arbitrary; ports and alphabets
    /// come from the machine.
    pub fn interface(&self, label: &str) -> crate::wiring::Interface {
        let mut b = crate::wiring::Interface::new(label);
        for (name, sym) in &self.inputs {
            b = b.input(name, PortType::Finite(sym.clone()));
        }
        for (name, sym) in &self.outputs {
            b = b.output(name, PortType::Finite(sym.clone()));
        }
        b
    }
}

/// A run: `states` and `outputs` each hold one more entry than the input
/// stream, because the initial state is observed before any input arrives.
#[derive(Debug, Clone, PartialEq)]
pub struct MooreTrace {
    pub states: Vec<String>,
    pub outputs: Vec<Vec<String>>,
}

pub fn run(m: &MooreMachine, inputs: &[Vec<String>], init: &str) -> Result<MooreTrace, MooreError> {
    if !m.states.contains(&init.to_string()) {
        return Err(MooreError::UnknownState(init.into()));
    }
    let mut states = vec![init.to_string()];
    let mut outputs = vec![m.observe(init)?];
    let mut s = init.to_string();
    for x in inputs {
        s = m.step(x, &s)?;
        outputs.push(m.observe(&s)?);
        states.push(s.clone());
    }
    Ok(MooreTrace { states, outputs })
}

fn ports_match(
    ports: &[(String, Vec<String>)],
    box_ports: &[crate::wiring::Port],
) -> Result<(), MooreError> {
    if ports.len() != box_ports.len() {
        return Err(MooreError::PortMismatch(format!(
            "{} machine ports for {} box ports",
            ports.len(),
            box_ports.len()
        )));
    }
    for ((name, sym), p) in ports.iter().zip(box_ports) {
        if *name != p.name {
            return Err(MooreError::PortMismatch(format!("{name:?} vs {:?}", p.name)));
        }
        match &p.ty {
            PortType::Finite(s) if s == sym => {}
            other => {
                return Err(MooreError::PortMismatch(format!(
                    "port {name:?} expects alphabet {sym:?}, box has {other:?}"
                )))
            }
        }
    }
    Ok(())
}

/// Fills a wiring diagram with a machine on its inner box, producing the
/// machine presented on the outer box. States are untouched; each new input
/// tuple is routed to the old ports with the old outputs supplying the wires
/// fed back inside.
pub fn rewire(wd: &WiringDiagram, m: &MooreMachine) -> Result<MooreMachine, MooreError> {
    let report = wd.validate();
    if !report.ok() {
        return Err(MooreError::Wiring(WiringError::Invalid(report)));
    }
    ports_match(&m.inputs, &wd.inner.inputs)?;
    ports_match(&m.outputs, &wd.inner.outputs)?;
    let outer_inputs: Vec<(String, Vec<String>)> = wd
        .outer
        .inputs
        .iter()
        .map(|p| match &p.ty {
            PortType::Finite(sym) => Ok((p.name.clone(), sym.clone())),
            other => Err(MooreError::PortMismatch(format!(
                "outer port {:?} is {other:?}, not finite",
                p.name
            ))),
        })
        .collect::<Result<_, _>>()?;
    let outer_outputs: Vec<(String, Vec<String>)> = wd
        .outer
        .outputs
        .iter()
        .map(|p| match &p.ty {
            PortType::Finite(sym) => Ok((p.name.clone(), sym.clone())),
            other => Err(MooreError::PortMismatch(format!(
                "outer port {:?} is {other:?}, not finite",
                p.name
            ))),
        })
        .collect::<Result<_, _>>()?;

    let mut update = BTreeMap::new();
    let mut readout = BTreeMap::new();
    for s in &m.states {
        let inner_out: BTreeMap<String, Value> = m
            .outputs
            .iter()
            .zip(m.observe(s)?)
            .map(|((name, _), v)| (name.clone(), Value::Symbol(v)))
            .collect();
        let routed_out = wd.route_outputs(&inner_out)?;
        readout.insert(
            s.clone(),
            outer_outputs
                .iter()
                .map(|(name, _)| match &routed_out[name] {
                    Value::Symbol(v) => v.clone(),
                    Value::Vector(_) => unreachable!("finite ports carry symbols"),
                })
                .collect(),
        );
        for y in input_tuples(&outer_inputs) {
            let outer_in: BTreeMap<String, Value> = outer_inputs
                .iter()
                .zip(&y)
                .map(|((name, _), v)| (name.clone(), Value::Symbol(v.clone())))
                .collect();
            let routed = wd.route_inputs(&outer_in, &inner_out)?;
            let x: Vec<String> = m
                .inputs
                .iter()
                .map(|(name, _)| match &routed[name] {
                    Value::Symbol(v) => v.clone(),
                    Value::Vector(_) => unreachable!("finite ports carry symbols"),
                })
                .collect();
            update.insert((y.clone(), s.clone()), m.step(&x, s)?);
        }
    }
    Ok(MooreMachine {
        inputs: outer_inputs,
        outputs: outer_outputs,
        states: m.states.clone(),
        update,
        readout,
    })
}

fn tuple_state(parts: &[&str]) -> String {
    format!("({})", parts.join(","))
}

/// Disjoint machines running side by side. Port names gain `prefix.`, states
/// become tuples; no interaction happens until a wiring introduces it.
pub fn tensor_all(parts: &[(&str, &MooreMachine)]) -> MooreMachine {
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (prefix, m) in parts {
        for (name, sym) in &m.inputs {
            inputs.push((format!("{prefix}.{name}"), sym.clone()));
        }
        for (name, sym) in &m.outputs {
            outputs.push((format!("{prefix}.{name}"), sym.clone()));
        }
    }
    let mut states = vec![Vec::<String>::new()];
    for (_, m) in parts {
        let mut next = Vec::new();
        for t in &states {
            for s in &m.states {
                let mut t2 = t.clone();
                t2.push(s.clone());
                next.push(t2);
            }
        }
        states = next;
    }
    let state_names: Vec<String> = states
        .iter()
        .map(|t| tuple_state(&t.iter().map(|s| s.as_str()).collect::<Vec<_>>()))
        .collect();
    let mut update = BTreeMap::new();
    let mut readout = BTreeMap::new();
    for (t, name) in states.iter().zip(&state_names) {
        let mut r = Vec::new();
        for ((_, m), s) in parts.iter().zip(t) {
            r.extend(m.readout[s].iter().cloned());
        }
        readout.insert(name.clone(), r);
        for x in input_tuples(&inputs) {
            let mut offset = 0;
            let mut next = Vec::new();
            for ((_, m), s) in parts.iter().zip(t) {
                let k = m.inputs.len();
                let xi = x[offset..offset + k].to_vec();
                offset += k;
                next.push(m.update[&(xi, s.clone())].clone());
            }
            update.insert(
                (x, name.clone()),
                tuple_state(&next.iter().map(|s| s.as_str()).collect::<Vec<_>>()),
            );
        }
    }
    MooreMachine { inputs, outputs, states: state_names, update, readout }
}

/// Runs a wired network by message passing, never forming the composite
/// machine: each step reads every part's outputs, routes wires, then steps
/// every part at once. The trace must match running the rewired tensor.
pub fn simulate_network(
    parts: &[(&str, &MooreMachine)],
    wd: &WiringDiagram,
    inputs: &[Vec<String>],
    init: &[&str],
) -> Result<MooreTrace, MooreError> {
    if parts.len() != init.len() {
        return Err(MooreError::PortMismatch("one initial state per part".into()));
    }
    let report = wd.validate();
    if !report.ok() {
        return Err(MooreError::Wiring(WiringError::Invalid(report)));
    }
    let mut states: Vec<String> = init.iter().map(|s| s.to_string()).collect();
    for ((_, m), s) in parts.iter().zip(&states) {
        if !m.states.contains(s) {
            return Err(MooreError::UnknownState(s.clone()));
        }
    }
    let observe_all = |states: &[String]| -> Result<BTreeMap<String, Value>, MooreError> {
        let mut out = BTreeMap::new();
        for ((prefix, m), s) in parts.iter().zip(states) {
            for ((name, _), v) in m.outputs.iter().zip(m.observe(s)?) {
                out.insert(format!("{prefix}.{name}"), Value::Symbol(v));
            }
        }
        Ok(out)
    };
    let outer_output_row = |inner_out: &BTreeMap<String, Value>| -> Result<Vec<String>, MooreError> {
        let routed = wd.route_outputs(inner_out)?;
        Ok(wd
            .outer
            .outputs
            .iter()
            .map(|p| match &routed[&p.name] {
                Value::Symbol(v) => v.clone(),
                Value::Vector(_) => unreachable!("finite ports carry symbols"),
            })
            .collect())
    };
    let joint = |states: &[String]| {
        tuple_state(&states.iter().map(|s| s.as_str()).collect::<Vec<_>>())
    };
    let mut trace = MooreTrace { states: vec![joint(&states)], outputs: vec![] };
    trace.outputs.push(outer_output_row(&observe_all(&states)?)?);
    for y in inputs {
        if y.len() != wd.outer.inputs.len() {
            return Err(MooreError::PortMismatch("input row width".into()));
        }
        let outer_in: BTreeMap<String, Value> = wd
            .outer
            .inputs
            .iter()
            .zip(y)
            .map(|(p, v)| (p.name.clone(), Value::Symbol(v.clone())))
            .collect();
        let inner_out = observe_all(&states)?;
        let routed = wd.route_inputs(&outer_in, &inner_out)?;
        let mut next = Vec::with_capacity(states.len());
        for ((prefix, m), s) in parts.iter().zip(&states) {
            let x: Vec<String> = m
                .inputs
                .iter()
                .map(|(name, _)| match &routed[&format!("{prefix}.{name}")] {
                    Value::Symbol(v) => v.clone(),
                    Value::Vector(_) => unreachable!("finite ports carry symbols"),
                })
                .collect();
            next.push(m.step(&x, s)?);
        }
        states = next;
        trace.states.push(joint(&states));
        trace.outputs.push(outer_output_row(&observe_all(&states)?)?);
    }
    Ok(trace)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::wiring::{Interface, WiringDiagram};

    fn bits() -> Vec<String> {
        vec!["0".into(), "1".into()]
    }

    /// One-step delay: state is the last input, readout shows it.
    pub fn delay_bit() -> MooreMachine {
        let mut update = BTreeMap::new();
        let mut readout = BTreeMap::new();
        for s in ["0", "1"] {
            readout.insert(s.to_string(), vec![s.to_string()]);
            for x in ["0", "1"] {
                update.insert((vec![x.to_string()], s.to_string()), x.to_string());
            }
        }
        MooreMachine {
            inputs: vec![("a".into(), bits())],
            outputs: vec![("b".into(), bits())],
            states: bits(),
            update,
            readout,
        }
    }

    #[test]
    fn delay_shifts_by_one() {
        let m = delay_bit();
        m.validate().unwrap();
        let t = run(&m, &[vec!["1".into()], vec!["0".into()], vec!["1".into()]], "0").unwrap();
        let shown: Vec<&str> = t.outputs.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(shown, ["0", "1", "0", "1"]);
    }

    #[test]
    fn series_of_two_delays_shifts_by_two() {
        let d1 = delay_bit();
        let d2 = delay_bit();
        let joint = tensor_all(&[("m1", &d1), ("m2", &d2)]);
        joint.validate().unwrap();
        let inner = Interface::tensor_all(&[&d1.interface("m1"), &d2.interface("m2")]).unwrap();
        let outer = Interface::new("y")
            .input("in", crate::wiring::PortType::Finite(bits()))
            .output("out", crate::wiring::PortType::Finite(bits()));
        let wd = WiringDiagram::new(inner, outer)
            .feed_from_outer("m1.a", "in")
            .feed_from_inner("m2.a", "m1.b")
            .read_from("out", "m2.b");
        assert!(wd.validate().ok());
        let m = rewire(&wd, &joint).unwrap();
        m.validate().unwrap();
        let ins: Vec<Vec<String>> = ["1", "0", "0", "1"].iter().map(|x| vec![x.to_string()]).collect();
        let t = run(&m, &ins, "(0,0)").unwrap();
        let shown: Vec<&str> = t.outputs.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(shown, ["0", "0", "1", "0", "0"]);
    }

    #[test]
    fn feedback_without_input_oscillates() {
        // Invert the delayed bit and feed it back; readout flips each step.
        let mut update = BTreeMap::new();
        let mut readout = BTreeMap::new();
        for s in ["0", "1"] {
            let flip = if s == "0" { "1" } else { "0" };
            readout.insert(s.to_string(), vec![flip.to_string()]);
            for x in ["0", "1"] {
                update.insert((vec![x.to_string()], s.to_string()), x.to_string());
            }
        }
        let m = MooreMachine {
            inputs: vec![("a".into(), bits())],
            outputs: vec![("b".into(), bits())],
            states: bits(),
            update,
            readout,
        };
        let outer = Interface::new("y").output("o", crate::wiring::PortType::Finite(bits()));
        let wd = WiringDiagram::new(m.interface("x"), outer)
            .feed_from_inner("a", "b")
            .read_from("o", "b");
        let closed = rewire(&wd, &m).unwrap();
        assert!(closed.inputs.is_empty());
        let t = run(&closed, &[vec![], vec![], vec![]], "0").unwrap();
        let shown: Vec<&str> = t.outputs.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(shown, ["1", "0", "1", "0"]);
    }

    #[test]
    fn network_oracle_matches_composite() {
        let d1 = delay_bit();
        let d2 = delay_bit();
        let inner = Interface::tensor_all(&[&d1.interface("m1"), &d2.interface("m2")]).unwrap();
        let outer = Interface::new("y")
            .input("in", crate::wiring::PortType::Finite(bits()))
            .output("out", crate::wiring::PortType::Finite(bits()));
        // Cross-feedback: m1 drives m2, m2 drives nothing but the output;
        // m1 reads the outer input.
        let wd = WiringDiagram::new(inner, outer)
            .feed_from_outer("m1.a", "in")
            .feed_from_inner("m2.a", "m1.b")
            .read_from("out", "m2.b");
        let joint = tensor_all(&[("m1", &d1), ("m2", &d2)]);
        let composite = rewire(&wd, &joint).unwrap();
        let ins: Vec<Vec<String>> = ["1", "1", "0", "1", "0"]
            .iter()
            .map(|x| vec![x.to_string()])
            .collect();
        let direct = run(&composite, &ins, "(0,0)").unwrap();
        let oracle = simulate_network(&[("m1", &d1), ("m2", &d2)], &wd, &ins, &["0", "0"]).unwrap();
        assert_eq!(direct.outputs, oracle.outputs);
        assert_eq!(direct.states, oracle.states);
    }
}
