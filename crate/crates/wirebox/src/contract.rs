//! Safety contracts on machines with graph-shaped ports. A contract fixes,
//! for every observation length up to a horizon, which pairs of input and
//! output behaviors are allowed. The only structural demand is closure
//! under restriction: any window cut out of an allowed observation must be
//! allowed too. Gluing is deliberately not required, so a contract can
//! forbid long observations whose pieces are individually fine, which is
//! what makes bounded-response properties expressible.

use crate::graph::{self, paths, product, product_section, restrict_section, Graph, Section};
use crate::span::{rewire as rewire_machine, GraphUniverse, Machine, SpanError, Universe};
use crate::wiring::{Feed, WiringDiagram};
use std::collections::BTreeSet;
use std::fmt;

pub const DEFAULT_HORIZON: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum ContractError {
    PortMismatch(String),
    BadSection(String),
    Span(SpanError),
    Unsatisfied { length: usize, detail: String },
}

impl fmt::Display for ContractError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContractError::PortMismatch(m) => write!(f, "port mismatch: {m}"),
            ContractError::BadSection(m) => write!(f, "bad section: {m}"),
            ContractError::Span(e) => write!(f, "{e}"),
            ContractError::Unsatisfied { length, detail } => {
                write!(f, "machine violates the contract at length {length}: {detail}")
            }
        }
    }
}

impl std::error::Error for ContractError {}

impl From<SpanError> for ContractError {
    fn from(e: SpanError) -> Self {
        ContractError::Span(e)
    }
}

/// Allowed observations per length. `allowed[n]` holds pairs of a section
/// of the input port product and a section of the output port product,
/// both of length `n`; indices run `0..=horizon`. Beyond the horizon the
/// contract says nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Contract {
    pub horizon: usize,
    pub in_ports: Vec<(String, Graph)>,
    pub out_ports: Vec<(String, Graph)>,
    pub allowed: Vec<BTreeSet<(Section, Section)>>,
}

fn port_graphs(ports: &[(String, Graph)]) -> Vec<&Graph> {
    ports.iter().map(|(_, g)| g).collect()
}

/// The unique length-`n` section of an empty product of ports, which is a
/// one-node, one-loop graph.
fn unit_section(n: usize) -> Section {
    Section { nodes: vec![0; n + 1], edges: vec![0; n] }
}

/// [`product_section`] extended to the empty port list, where the length
/// can no longer be read off the factors.
fn assemble(graphs: &[&Graph], secs: &[&Section], n: usize) -> Section {
    if graphs.is_empty() {
        unit_section(n)
    } else {
        product_section(graphs, secs)
    }
}

impl Contract {
    pub fn in_product(&self) -> (Graph, Vec<graph::GraphHom>) {
        product(&port_graphs(&self.in_ports))
    }

    pub fn out_product(&self) -> (Graph, Vec<graph::GraphHom>) {
        product(&port_graphs(&self.out_ports))
    }

    /// The contract admitting every observation: the weakest one.
    pub fn full(
        in_ports: Vec<(String, Graph)>,
        out_ports: Vec<(String, Graph)>,
        horizon: usize,
    ) -> Contract {
        Contract::from_predicate(in_ports, out_ports, horizon, |_, _, _| true)
    }

    /// Tabulates a predicate over all observation pairs up to the horizon,
    /// then prunes it to its largest restriction-closed subcontract: a pair
    /// survives only when every shorter window of it is also allowed.
    pub fn from_predicate(
        in_ports: Vec<(String, Graph)>,
        out_ports: Vec<(String, Graph)>,
        horizon: usize,
        pred: impl Fn(usize, &Section, &Section) -> bool,
    ) -> Contract {
        let (in_prod, _) = product(&port_graphs(&in_ports));
        let (out_prod, _) = product(&port_graphs(&out_ports));
        let allowed = (0..=horizon)
            .map(|n| {
                let ins = paths(&in_prod, n);
                let outs = paths(&out_prod, n);
                let mut set = BTreeSet::new();
                for i in &ins {
                    for o in &outs {
                        if pred(n, i, o) {
                            set.insert((i.clone(), o.clone()));
                        }
                    }
                }
                set
            })
            .collect();
        Contract { horizon, in_ports, out_ports, allowed }.restriction_closure()
    }

    pub fn allows(&self, ins: &Section, outs: &Section) -> bool {
        let n = ins.len();
        if n != outs.len() {
            return false;
        }
        if n > self.horizon {
            return true;
        }
        self.allowed[n].contains(&(ins.clone(), outs.clone()))
    }

    /// Whether every window of every allowed pair is allowed. The two
    /// one-step-shorter windows generate all of them.
    pub fn is_restriction_closed(&self) -> bool {
        for n in 1..=self.horizon {
            for (i, o) in &self.allowed[n] {
                for p in [0usize, 1] {
                    let fi = restrict_section(i, p, n - 1).unwrap();
                    let fo = restrict_section(o, p, n - 1).unwrap();
                    if !self.allowed[n - 1].contains(&(fi, fo)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// The largest restriction-closed contract inside this one. A single
    /// pass in order of length suffices: pruning at length `n` only
    /// consults length `n - 1`, which is already final.
    pub fn restriction_closure(&self) -> Contract {
        let mut allowed: Vec<BTreeSet<(Section, Section)>> = Vec::with_capacity(self.horizon + 1);
        allowed.push(self.allowed[0].clone());
        for n in 1..=self.horizon {
            let keep: BTreeSet<(Section, Section)> = self.allowed[n]
                .iter()
                .filter(|(i, o)| {
                    [0usize, 1].iter().all(|&p| {
                        let fi = restrict_section(i, p, n - 1).unwrap();
                        let fo = restrict_section(o, p, n - 1).unwrap();
                        allowed[n - 1].contains(&(fi, fo))
                    })
                })
                .cloned()
                .collect();
            allowed.push(keep);
        }
        let c = Contract {
            horizon: self.horizon,
            in_ports: self.in_ports.clone(),
            out_ports: self.out_ports.clone(),
            allowed,
        };
        debug_assert!(c.is_restriction_closed());
        c
    }

    /// Interconnects the contract along a wiring diagram. An observation of
    /// the outer box is allowed when some allowed inner observation routes
    /// to it: the inner inputs read back from the inner outputs and the
    /// outer inputs exactly as the diagram feeds them, and the outer
    /// outputs copy the inner outputs the diagram reads.
    pub fn rewire(&self, wd: &WiringDiagram) -> Result<Contract, ContractError> {
        let u = GraphUniverse;
        // The diagram's inner box must present exactly our ports.
        let check = |ports: &[(String, Graph)],
                     side: &[crate::wiring::Port]|
         -> Result<(), ContractError> {
            if ports.len() != side.len() {
                return Err(ContractError::PortMismatch("port count differs".into()));
            }
            for ((name, g), port) in ports.iter().zip(side) {
                if *name != port.name {
                    return Err(ContractError::PortMismatch(format!(
                        "expected port {name:?}, found {:?}",
                        port.name
                    )));
                }
                let pg = u.port_object(&port.ty)?;
                if pg != *g {
                    return Err(ContractError::PortMismatch(format!(
                        "port {name:?} carries a different behavior graph"
                    )));
                }
            }
            Ok(())
        };
        check(&self.in_ports, &wd.inner.inputs)?;
        check(&self.out_ports, &wd.inner.outputs)?;

        let outer_in: Vec<(String, Graph)> = wd
            .outer
            .inputs
            .iter()
            .map(|p| Ok((p.name.clone(), u.port_object(&p.ty)?)))
            .collect::<Result<_, ContractError>>()?;
        let outer_out: Vec<(String, Graph)> = wd
            .outer
            .outputs
            .iter()
            .map(|p| Ok((p.name.clone(), u.port_object(&p.ty)?)))
            .collect::<Result<_, ContractError>>()?;

        let (_, in_projs) = self.in_product();
        let (_, out_projs) = self.out_product();
        let out_index = |name: &str| self.out_ports.iter().position(|(n, _)| n == name);

        let outer_in_graphs: Vec<&Graph> = outer_in.iter().map(|(_, g)| g).collect();
        let outer_out_graphs: Vec<&Graph> = outer_out.iter().map(|(_, g)| g).collect();

        let mut allowed: Vec<BTreeSet<(Section, Section)>> = Vec::with_capacity(self.horizon + 1);
        for n in 0..=self.horizon {
            let mut set = BTreeSet::new();
            'pairs: for (a, b) in &self.allowed[n] {
                // Per inner input: what the diagram says it must carry.
                // Feeds from inner outputs constrain (a, b) directly; feeds
                // from outer inputs pin components of the outer section.
                let mut pinned: Vec<Option<Section>> = vec![None; outer_in.len()];
                for (k, port) in wd.inner.inputs.iter().enumerate() {
                    let a_k = in_projs[k].apply_section(a);
                    let feed = wd.feed.get(&port.name).ok_or_else(|| {
                        ContractError::PortMismatch(format!("unfed inner input {:?}", port.name))
                    })?;
                    match feed {
                        Feed::FromInner(o) => {
                            let j = out_index(o).ok_or_else(|| {
                                ContractError::PortMismatch(format!("unknown inner output {o:?}"))
                            })?;
                            if out_projs[j].apply_section(b) != a_k {
                                continue 'pairs;
                            }
                        }
                        Feed::FromOuter(q) => {
                            let qi = outer_in
                                .iter()
                                .position(|(name, _)| name == q)
                                .ok_or_else(|| {
                                    ContractError::PortMismatch(format!(
                                        "unknown outer input {q:?}"
                                    ))
                                })?;
                            match &pinned[qi] {
                                Some(existing) if *existing != a_k => continue 'pairs,
                                Some(_) => {}
                                None => pinned[qi] = Some(a_k),
                            }
                        }
                    }
                }
                // Outer outputs copy inner outputs.
                let out_secs: Vec<Section> = wd
                    .outer
                    .outputs
                    .iter()
                    .map(|p| {
                        let o = wd.read.get(&p.name).ok_or_else(|| {
                            ContractError::PortMismatch(format!("unread outer output {:?}", p.name))
                        })?;
                        let j = out_index(o).ok_or_else(|| {
                            ContractError::PortMismatch(format!("unknown inner output {o:?}"))
                        })?;
                        Ok(out_projs[j].apply_section(b))
                    })
                    .collect::<Result<_, ContractError>>()?;
                let y_out =
                    assemble(&outer_out_graphs, &out_secs.iter().collect::<Vec<_>>(), n);
                // Unread outer inputs range over everything.
                let choices: Vec<Vec<Section>> = pinned
                    .iter()
                    .enumerate()
                    .map(|(qi, p)| match p {
                        Some(s) => vec![s.clone()],
                        None => paths(outer_in_graphs[qi], n),
                    })
                    .collect();
                for combo in cartesian(&choices) {
                    let y_in = assemble(&outer_in_graphs, &combo.iter().collect::<Vec<_>>(), n);
                    set.insert((y_in, y_out.clone()));
                }
            }
            allowed.push(set);
        }
        let c = Contract {
            horizon: self.horizon,
            in_ports: outer_in,
            out_ports: outer_out,
            allowed,
        };
        debug_assert!(c.is_restriction_closed());
        Ok(c)
    }

    /// Side-by-side product of contracts. Port names get the given prefix,
    /// as for machines; an observation of the whole is allowed exactly when
    /// each part's share is.
    pub fn tensor(parts: &[(&str, &Contract)]) -> Result<Contract, ContractError> {
        let mut labels = BTreeSet::new();
        for (l, _) in parts {
            if l.is_empty() || !labels.insert(*l) {
                return Err(ContractError::PortMismatch(format!(
                    "tensor labels must be distinct and nonempty, got {l:?}"
                )));
            }
        }
        let horizon = parts.iter().map(|(_, c)| c.horizon).min().unwrap_or(DEFAULT_HORIZON);
        let prefix = |l: &str, ports: &[(String, Graph)]| -> Vec<(String, Graph)> {
            ports.iter().map(|(n, g)| (format!("{l}.{n}"), g.clone())).collect()
        };
        let mut in_ports = Vec::new();
        let mut out_ports = Vec::new();
        for (l, c) in parts {
            in_ports.extend(prefix(l, &c.in_ports));
            out_ports.extend(prefix(l, &c.out_ports));
        }
        let in_graphs: Vec<&Graph> = in_ports.iter().map(|(_, g)| g).collect();
        let out_graphs: Vec<&Graph> = out_ports.iter().map(|(_, g)| g).collect();
        let projections: Vec<_> =
            parts.iter().map(|(_, c)| (c.in_product().1, c.out_product().1)).collect();
        let mut allowed = Vec::with_capacity(horizon + 1);
        for n in 0..=horizon {
            let mut set = BTreeSet::new();
            let per_part: Vec<Vec<&(Section, Section)>> =
                parts.iter().map(|(_, c)| c.allowed[n].iter().collect()).collect();
            for combo in cartesian(&per_part) {
                let mut in_secs: Vec<Section> = Vec::new();
                let mut out_secs: Vec<Section> = Vec::new();
                for ((projs_in, projs_out), pair) in projections.iter().zip(&combo) {
                    in_secs.extend(projs_in.iter().map(|pr| pr.apply_section(&pair.0)));
                    out_secs.extend(projs_out.iter().map(|pr| pr.apply_section(&pair.1)));
                }
                set.insert((
                    assemble(&in_graphs, &in_secs.iter().collect::<Vec<_>>(), n),
                    assemble(&out_graphs, &out_secs.iter().collect::<Vec<_>>(), n),
                ));
            }
            allowed.push(set);
        }
        Ok(Contract { horizon, in_ports, out_ports, allowed })
    }
}

fn cartesian<T: Clone>(choices: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![vec![]];
    for c in choices {
        let mut next = Vec::with_capacity(out.len() * c.len());
        for prefix in &out {
            for item in c {
                let mut row = prefix.clone();
                row.push(item.clone());
                next.push(row);
            }
        }
        out = next;
    }
    out
}

/// The exact observable behavior of a machine, as a contract: at each
/// length, the pairs its state sections project to. Windows of runs are
/// runs, so this is restriction-closed by construction.
pub fn behavior_contract(m: &Machine<GraphUniverse>, horizon: usize) -> Contract {
    let allowed: Vec<BTreeSet<(Section, Section)>> = (0..=horizon)
        .map(|n| {
            paths(&m.state, n)
                .iter()
                .map(|s| (m.in_map.apply_section(s), m.out_map.apply_section(s)))
                .collect()
        })
        .collect();
    let c = Contract {
        horizon,
        in_ports: m.in_ports.clone(),
        out_ports: m.out_ports.clone(),
        allowed,
    };
    debug_assert!(c.is_restriction_closed());
    c
}

/// Checks every run of the machine against the contract, up to the
/// contract's horizon. `None` means the machine satisfies it; otherwise
/// the shortest offending state section comes back as a witness.
pub fn machine_satisfies(
    m: &Machine<GraphUniverse>,
    c: &Contract,
) -> Result<Option<(usize, Section)>, ContractError> {
    if m.in_ports != c.in_ports || m.out_ports != c.out_ports {
        return Err(ContractError::PortMismatch(
            "machine and contract must agree on ports".into(),
        ));
    }
    for n in 0..=c.horizon {
        for s in paths(&m.state, n) {
            let pair = (m.in_map.apply_section(&s), m.out_map.apply_section(&s));
            if !c.allowed[n].contains(&pair) {
                return Ok(Some((n, s)));
            }
        }
    }
    Ok(None)
}

/// A machine bundled with a contract it provably satisfies. Interconnection
/// rewires both halves and re-establishes the guarantee, which is the point:
/// satisfaction survives wiring, so contracts can be checked part by part.
#[derive(Debug, Clone)]
pub struct Contracted {
    pub machine: Machine<GraphUniverse>,
    pub contract: Contract,
}

impl Contracted {
    pub fn new(machine: Machine<GraphUniverse>, contract: Contract) -> Result<Self, ContractError> {
        if let Some((length, s)) = machine_satisfies(&machine, &contract)? {
            return Err(ContractError::Unsatisfied {
                length,
                detail: format!("state section {s:?}"),
            });
        }
        Ok(Contracted { machine, contract })
    }

    pub fn rewire(&self, wd: &WiringDiagram) -> Result<Contracted, ContractError> {
        let u = GraphUniverse;
        let rewired = rewire_machine(&u, wd, &self.machine)?;
        let contract = self.contract.rewire(wd)?;
        Contracted::new(rewired.machine, contract)
    }
}

/// Boolean outputs where sustained truth is a fault: an observation is
/// rejected when two consecutive `T` values are followed by five more, that
/// is, seven in a row. The shortest rejected window has length six, so all
/// shorter observations are allowed.
pub fn two_trues(horizon: usize) -> Contract {
    let out = graph::complete(&["F", "T"]);
    let t = out.node_index("T").unwrap();
    Contract::from_predicate(
        vec![],
        vec![("out".into(), out.clone())],
        horizon,
        move |n, _ins, outs| {
            !(0..n.saturating_sub(5)).any(|i| {
                outs.nodes[i] == t && (i + 1..=i + 6).all(|j| outs.nodes[j] == t)
            })
        },
    )
}
