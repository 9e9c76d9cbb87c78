//! Boxes with typed ports and the wiring diagrams that interconnect them.
//!
//! A diagram `X -> Y` says how a compound box `Y` is assembled from an inner
//! box `X` (usually a tensor of several parts): every inner input is fed by
//! exactly one inner output or outer input, and every outer output reads
//! exactly one inner output. Feedback is just an inner output feeding an
//! inner input; no acyclicity is assumed anywhere.

use crate::graph::Graph;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// What flows on a port: a finite symbol set, a Euclidean coordinate block,
/// or a graph of admissible behaviors.
#[derive(Debug, Clone, PartialEq)]
pub enum PortType {
    Finite(Vec<String>),
    Euclidean(usize),
    Behavior(Graph),
}

impl PortType {
    fn describe(&self) -> String {
        match self {
            PortType::Finite(sym) => format!("finite({})", sym.len()),
            PortType::Euclidean(d) => format!("euclidean({d})"),
            PortType::Behavior(g) => format!("behavior({} nodes)", g.nodes.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub name: String,
    pub ty: PortType,
}

/// A box: ordered, named, typed input and output ports. Port order is the
/// declaration order and fixes the coordinate order of every product taken
/// over the ports.
#[derive(Debug, Clone, PartialEq)]
pub struct Interface {
    pub label: String,
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
}

impl Interface {
    pub fn new(label: &str) -> Interface {
        Interface { label: label.into(), inputs: vec![], outputs: vec![] }
    }

    pub fn input(mut self, name: &str, ty: PortType) -> Interface {
        self.inputs.push(Port { name: name.into(), ty });
        self
    }

    pub fn output(mut self, name: &str, ty: PortType) -> Interface {
        self.outputs.push(Port { name: name.into(), ty });
        self
    }

    /// The empty box: tensor unit.
    pub fn unit() -> Interface {
        Interface::new("I")
    }

    pub fn input_port(&self, name: &str) -> Option<&Port> {
        self.inputs.iter().find(|p| p.name == name)
    }

    pub fn output_port(&self, name: &str) -> Option<&Port> {
        self.outputs.iter().find(|p| p.name == name)
    }

    pub fn validate(&self) -> Result<(), String> {
        for side in [&self.inputs, &self.outputs] {
            let mut seen = BTreeSet::new();
            for p in side {
                if !seen.insert(&p.name) {
                    return Err(format!("duplicate port name {:?} on box {:?}", p.name, self.label));
                }
                if let PortType::Finite(sym) = &p.ty {
                    let uniq: BTreeSet<_> = sym.iter().collect();
                    if uniq.len() != sym.len() {
                        return Err(format!("port {:?} repeats a symbol", p.name));
                    }
                }
            }
        }
        Ok(())
    }

    /// Disjoint union of boxes. Ports are namespaced `label.port` so the
    /// result is unambiguous; labels must be distinct.
    pub fn tensor_all(parts: &[&Interface]) -> Result<Interface, String> {
        let mut labels = BTreeSet::new();
        for p in parts {
            if !labels.insert(&p.label) {
                return Err(format!("duplicate box label {:?} under tensor", p.label));
            }
        }
        let mut out = Interface::new(&parts.iter().map(|p| p.label.as_str()).collect::<Vec<_>>().join("+"));
        for part in parts {
            for p in &part.inputs {
                out.inputs.push(Port { name: format!("{}.{}", part.label, p.name), ty: p.ty.clone() });
            }
            for p in &part.outputs {
                out.outputs.push(Port { name: format!("{}.{}", part.label, p.name), ty: p.ty.clone() });
            }
        }
        Ok(out)
    }
}

/// Where an inner input draws its value from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Feed {
    FromOuter(String),
    FromInner(String),
}

/// A wiring diagram `inner -> outer`. `feed` assigns each inner input port a
/// source; `read` assigns each outer output port the inner output it copies.
#[derive(Debug, Clone, PartialEq)]
pub struct WiringDiagram {
    pub inner: Interface,
    pub outer: Interface,
    pub feed: BTreeMap<String, Feed>,
    pub read: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WiringIssue {
    BadBox(String),
    UnfedInput { port: String },
    UnknownPort { port: String, context: &'static str },
    TypeMismatch { port: String, expected: String, found: String },
    UnreadOutput { port: String },
}

impl fmt::Display for WiringIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WiringIssue::BadBox(msg) => write!(f, "{msg}"),
            WiringIssue::UnfedInput { port } => write!(f, "inner input {port:?} is not fed"),
            WiringIssue::UnknownPort { port, context } => write!(f, "{context} refers to unknown port {port:?}"),
            WiringIssue::TypeMismatch { port, expected, found } => {
                write!(f, "port {port:?} expects {expected} but is wired to {found}")
            }
            WiringIssue::UnreadOutput { port } => write!(f, "outer output {port:?} reads nothing"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<WiringIssue>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            write!(f, "ok")
        } else {
            for (i, issue) in self.issues.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{issue}")?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WiringError {
    Invalid(ValidationReport),
    InterfaceMismatch { expected: String, found: String },
    NoSuchValue(String),
}

impl fmt::Display for WiringError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WiringError::Invalid(r) => write!(f, "invalid wiring: {r}"),
            WiringError::InterfaceMismatch { expected, found } => {
                write!(f, "interface mismatch: expected {expected}, found {found}")
            }
            WiringError::NoSuchValue(p) => write!(f, "no value supplied for port {p:?}"),
        }
    }
}

impl std::error::Error for WiringError {}

impl WiringDiagram {
    pub fn new(inner: Interface, outer: Interface) -> WiringDiagram {
        WiringDiagram { inner, outer, feed: BTreeMap::new(), read: BTreeMap::new() }
    }

    pub fn feed_from_outer(mut self, inner_in: &str, outer_in: &str) -> WiringDiagram {
        self.feed.insert(inner_in.into(), Feed::FromOuter(outer_in.into()));
        self
    }

    pub fn feed_from_inner(mut self, inner_in: &str, inner_out: &str) -> WiringDiagram {
        self.feed.insert(inner_in.into(), Feed::FromInner(inner_out.into()));
        self
    }

    pub fn read_from(mut self, outer_out: &str, inner_out: &str) -> WiringDiagram {
        self.read.insert(outer_out.into(), inner_out.into());
        self
    }

    /// The diagram that presents `x` as itself: pass inputs through, read
    /// outputs off directly.
    pub fn identity(x: &Interface) -> WiringDiagram {
        let mut wd = WiringDiagram::new(x.clone(), x.clone());
        for p in &x.inputs {
            wd.feed.insert(p.name.clone(), Feed::FromOuter(p.name.clone()));
        }
        for p in &x.outputs {
            wd.read.insert(p.name.clone(), p.name.clone());
        }
        wd
    }

    /// Totality and type check. Every inner input must be fed exactly once
    /// by a port of equal type; every outer output must read an inner
    /// output of equal type.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        for b in [&self.inner, &self.outer] {
            if let Err(msg) = b.validate() {
                issues.push(WiringIssue::BadBox(msg));
            }
        }
        for p in &self.inner.inputs {
            match self.feed.get(&p.name) {
                None => issues.push(WiringIssue::UnfedInput { port: p.name.clone() }),
                Some(f) => {
                    let src_ty = match f {
                        Feed::FromOuter(o) => self.outer.input_port(o).map(|q| &q.ty),
                        Feed::FromInner(o) => self.inner.output_port(o).map(|q| &q.ty),
                    };
                    match src_ty {
                        None => issues.push(WiringIssue::UnknownPort {
                            port: match f {
                                Feed::FromOuter(o) | Feed::FromInner(o) => o.clone(),
                            },
                            context: "feed",
                        }),
                        Some(t) if *t != p.ty => issues.push(WiringIssue::TypeMismatch {
                            port: p.name.clone(),
                            expected: p.ty.describe(),
                            found: t.describe(),
                        }),
                        Some(_) => {}
                    }
                }
            }
        }
        for name in self.feed.keys() {
            if self.inner.input_port(name).is_none() {
                issues.push(WiringIssue::UnknownPort { port: name.clone(), context: "feed key" });
            }
        }
        for p in &self.outer.outputs {
            match self.read.get(&p.name) {
                None => issues.push(WiringIssue::UnreadOutput { port: p.name.clone() }),
                Some(o) => match self.inner.output_port(o) {
                    None => issues.push(WiringIssue::UnknownPort { port: o.clone(), context: "read" }),
                    Some(q) if q.ty != p.ty => issues.push(WiringIssue::TypeMismatch {
                        port: p.name.clone(),
                        expected: p.ty.describe(),
                        found: q.ty.describe(),
                    }),
                    Some(_) => {}
                },
            }
        }
        for name in self.read.keys() {
            if self.outer.output_port(name).is_none() {
                issues.push(WiringIssue::UnknownPort { port: name.clone(), context: "read key" });
            }
        }
        ValidationReport { issues }
    }

    /// Pasting: given `self: X -> Y` and `next: Y -> Z`, the single diagram
    /// `X -> Z` obtained by chasing each wire through the middle layer.
    pub fn then(&self, next: &WiringDiagram) -> Result<WiringDiagram, WiringError> {
        if self.outer != next.inner {
            return Err(WiringError::InterfaceMismatch {
                expected: self.outer.label.clone(),
                found: next.inner.label.clone(),
            });
        }
        let mut feed = BTreeMap::new();
        for p in &self.inner.inputs {
            let f = self.feed.get(&p.name).ok_or_else(|| {
                WiringError::Invalid(self.validate())
            })?;
            let resolved = match f {
                Feed::FromInner(xo) => Feed::FromInner(xo.clone()),
                Feed::FromOuter(y) => match next.feed.get(y).ok_or_else(|| WiringError::Invalid(next.validate()))? {
                    Feed::FromInner(yo) => Feed::FromInner(
                        self.read.get(yo).ok_or_else(|| WiringError::Invalid(self.validate()))?.clone(),
                    ),
                    Feed::FromOuter(z) => Feed::FromOuter(z.clone()),
                },
            };
            feed.insert(p.name.clone(), resolved);
        }
        let mut read = BTreeMap::new();
        for p in &next.outer.outputs {
            let yo = next.read.get(&p.name).ok_or_else(|| WiringError::Invalid(next.validate()))?;
            let xo = self.read.get(yo).ok_or_else(|| WiringError::Invalid(self.validate()))?;
            read.insert(p.name.clone(), xo.clone());
        }
        Ok(WiringDiagram { inner: self.inner.clone(), outer: next.outer.clone(), feed, read })
    }

    /// Side-by-side diagrams, with `label.port` namespacing on both layers.
    pub fn tensor_all(parts: &[&WiringDiagram]) -> Result<WiringDiagram, WiringError> {
        let inner = Interface::tensor_all(&parts.iter().map(|w| &w.inner).collect::<Vec<_>>())
            .map_err(|m| WiringError::Invalid(ValidationReport { issues: vec![WiringIssue::BadBox(m)] }))?;
        let outer = Interface::tensor_all(&parts.iter().map(|w| &w.outer).collect::<Vec<_>>())
            .map_err(|m| WiringError::Invalid(ValidationReport { issues: vec![WiringIssue::BadBox(m)] }))?;
        let mut feed = BTreeMap::new();
        let mut read = BTreeMap::new();
        for w in parts {
            let il = &w.inner.label;
            let ol = &w.outer.label;
            for (k, f) in &w.feed {
                let rf = match f {
                    Feed::FromOuter(o) => Feed::FromOuter(format!("{ol}.{o}")),
                    Feed::FromInner(o) => Feed::FromInner(format!("{il}.{o}")),
                };
                feed.insert(format!("{il}.{k}"), rf);
            }
            for (k, o) in &w.read {
                read.insert(format!("{ol}.{k}"), format!("{il}.{o}"));
            }
        }
        Ok(WiringDiagram { inner, outer, feed, read })
    }

    /// Values for the inner inputs, given outer input values and the inner
    /// outputs currently showing. Both maps are keyed by port name.
    pub fn route_inputs(
        &self,
        outer_in: &BTreeMap<String, Value>,
        inner_out: &BTreeMap<String, Value>,
    ) -> Result<BTreeMap<String, Value>, WiringError> {
        let mut out = BTreeMap::new();
        for p in &self.inner.inputs {
            let f = self
                .feed
                .get(&p.name)
                .ok_or_else(|| WiringError::NoSuchValue(p.name.clone()))?;
            let v = match f {
                Feed::FromOuter(o) => outer_in.get(o),
                Feed::FromInner(o) => inner_out.get(o),
            }
            .ok_or_else(|| WiringError::NoSuchValue(p.name.clone()))?;
            out.insert(p.name.clone(), v.clone());
        }
        Ok(out)
    }

    /// Values for the outer outputs, given the inner outputs.
    pub fn route_outputs(
        &self,
        inner_out: &BTreeMap<String, Value>,
    ) -> Result<BTreeMap<String, Value>, WiringError> {
        let mut out = BTreeMap::new();
        for p in &self.outer.outputs {
            let o = self
                .read
                .get(&p.name)
                .ok_or_else(|| WiringError::NoSuchValue(p.name.clone()))?;
            let v = inner_out
                .get(o)
                .ok_or_else(|| WiringError::NoSuchValue(o.clone()))?;
            out.insert(p.name.clone(), v.clone());
        }
        Ok(out)
    }
}

/// A value on a port.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Symbol(String),
    Vector(Vec<f64>),
}

impl Value {
    pub fn matches(&self, ty: &PortType) -> bool {
        match (self, ty) {
            (Value::Symbol(s), PortType::Finite(sym)) => sym.iter().any(|x| x == s),
            (Value::Vector(v), PortType::Euclidean(d)) => v.len() == *d,
            _ => false,
        }
    }
}

/// A nested assembly: leaves are boxes, `Tensor` places siblings side by
/// side, `Wire` applies a diagram whose inner box is the subtree's outer
/// interface.
#[derive(Debug, Clone)]
pub enum WiringTree {
    Leaf(Interface),
    Tensor(Vec<WiringTree>),
    Wire(Box<WiringTree>, WiringDiagram),
}

/// A flattened assembly: one diagram from the tensor of all leaf boxes to
/// the outermost interface, plus, for every port of that tensor, which leaf
/// and original port it came from.
#[derive(Debug, Clone)]
pub struct Flattened {
    pub diagram: WiringDiagram,
    pub leaves: Vec<Interface>,
    pub origin: BTreeMap<String, (usize, String)>,
}

/// Collapses nesting: the result routes every wire end-to-end, so composing
/// leaf machines with `diagram` agrees with composing stage by stage.
pub fn flatten(tree: &WiringTree) -> Result<Flattened, WiringError> {
    match tree {
        WiringTree::Leaf(x) => {
            let mut origin = BTreeMap::new();
            for p in x.inputs.iter().chain(&x.outputs) {
                origin.insert(p.name.clone(), (0, p.name.clone()));
            }
            Ok(Flattened { diagram: WiringDiagram::identity(x), leaves: vec![x.clone()], origin })
        }
        WiringTree::Tensor(parts) => {
            let flats = parts.iter().map(flatten).collect::<Result<Vec<_>, _>>()?;
            let diagram =
                WiringDiagram::tensor_all(&flats.iter().map(|f| &f.diagram).collect::<Vec<_>>())?;
            let mut leaves = Vec::new();
            let mut origin = BTreeMap::new();
            for f in &flats {
                let offset = leaves.len();
                let label = &f.diagram.inner.label;
                for (port, (leaf, orig)) in &f.origin {
                    origin.insert(format!("{label}.{port}"), (leaf + offset, orig.clone()));
                }
                leaves.extend(f.leaves.iter().cloned());
            }
            Ok(Flattened { diagram, leaves, origin })
        }
        WiringTree::Wire(sub, wd) => {
            let f = flatten(sub)?;
            if f.diagram.outer != wd.inner {
                return Err(WiringError::InterfaceMismatch {
                    expected: f.diagram.outer.label.clone(),
                    found: wd.inner.label.clone(),
                });
            }
            Ok(Flattened { diagram: f.diagram.then(wd)?, leaves: f.leaves, origin: f.origin })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bit() -> PortType {
        PortType::Finite(vec!["0".into(), "1".into()])
    }

    fn pair_box(label: &str) -> Interface {
        Interface::new(label).input("a", bit()).output("b", bit())
    }

    #[test]
    fn identity_validates() {
        let x = pair_box("x");
        assert!(WiringDiagram::identity(&x).validate().ok());
    }

    #[test]
    fn unfed_input_is_reported() {
        let x = pair_box("x");
        let y = Interface::new("y").output("o", bit());
        let wd = WiringDiagram::new(x, y).read_from("o", "b");
        let report = wd.validate();
        assert!(!report.ok());
        assert!(matches!(report.issues[0], WiringIssue::UnfedInput { .. }));
    }

    #[test]
    fn type_mismatch_is_reported() {
        let x = Interface::new("x")
            .input("a", bit())
            .output("b", PortType::Finite(vec!["p".into(), "q".into(), "r".into()]));
        let y = Interface::new("y").output("o", bit());
        let wd = WiringDiagram::new(x, y)
            .feed_from_inner("a", "b")
            .read_from("o", "b");
        let report = wd.validate();
        assert_eq!(report.issues.len(), 2);
    }

    #[test]
    fn identity_is_unit_for_pasting() {
        let x = pair_box("x");
        let y = Interface::new("y").input("p", bit()).output("q", bit());
        let wd = WiringDiagram::new(x.clone(), y.clone())
            .feed_from_outer("a", "p")
            .read_from("q", "b");
        let left = WiringDiagram::identity(&x).then(&wd).unwrap();
        let right = wd.then(&WiringDiagram::identity(&y)).unwrap();
        assert_eq!(left, wd);
        assert_eq!(right, wd);
    }

    #[test]
    fn feedback_resolves_through_pasting() {
        // x's input eats x's own output after one pasting step.
        let x = pair_box("x");
        let y = Interface::new("y").output("o", bit());
        let z = Interface::new("z").output("w", bit());
        let close = WiringDiagram::new(x, y.clone())
            .feed_from_inner("a", "b")
            .read_from("o", "b");
        let relabel = WiringDiagram::new(y, z).read_from("w", "o");
        let total = close.then(&relabel).unwrap();
        assert!(total.validate().ok());
        assert_eq!(total.feed["a"], Feed::FromInner("b".into()));
        assert_eq!(total.read["w"], "b");
    }

    #[test]
    fn flatten_two_stage_matches_single_chase() {
        let x = pair_box("x");
        let y = Interface::new("y").input("p", bit()).output("q", bit());
        let z = Interface::new("z").input("u", bit()).output("v", bit());
        let first = WiringDiagram::new(x.clone(), y.clone())
            .feed_from_outer("a", "p")
            .read_from("q", "b");
        let second = WiringDiagram::new(y, z)
            .feed_from_outer("p", "u")
            .read_from("v", "q");
        let tree = WiringTree::Wire(
            Box::new(WiringTree::Wire(Box::new(WiringTree::Leaf(x)), first.clone())),
            second.clone(),
        );
        let flat = flatten(&tree).unwrap();
        assert_eq!(flat.diagram, first.then(&second).unwrap());
        assert_eq!(flat.origin["a"], (0, "a".into()));
    }

    #[test]
    fn routing_follows_feeds() {
        let x = Interface::new("x").input("a", bit()).input("c", bit()).output("b", bit());
        let y = Interface::new("y").input("p", bit()).output("q", bit());
        let wd = WiringDiagram::new(x, y)
            .feed_from_outer("a", "p")
            .feed_from_inner("c", "b")
            .read_from("q", "b");
        let outer: BTreeMap<_, _> = [("p".to_string(), Value::Symbol("0".into()))].into();
        let inner: BTreeMap<_, _> = [("b".to_string(), Value::Symbol("1".into()))].into();
        let routed = wd.route_inputs(&outer, &inner).unwrap();
        assert_eq!(routed["a"], Value::Symbol("0".into()));
        assert_eq!(routed["c"], Value::Symbol("1".into()));
        let out = wd.route_outputs(&inner).unwrap();
        assert_eq!(out["q"], Value::Symbol("1".into()));
    }
}
