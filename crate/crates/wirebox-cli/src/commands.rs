//! The four commands: compose, simulate, check, contract. The commands only
//! parse, dispatch to the library, and render; every number and verdict they
//! print is reproducible by direct library calls.
//!
//! Reports come out in the same text format the descriptions use, so they
//! parse back. Traces come out as tables: first column `t`, one column per
//! boundary output port, one row per step or per dwell segment.

use std::path::{Path, PathBuf};

use num_rational::Rational64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use wirebox::contract::{machine_satisfies, Contract};
use wirebox::graph::{tuple_index, Graph, GraphHom};
use wirebox::moore::{self, MooreMachine};
use wirebox::span::{self, inertial_lift, total_deterministic, GraphUniverse, Machine};
use wirebox::timed::{self, TimedTrace};
use wirebox::wiring::{Feed, Interface, Port, WiringDiagram};

use crate::format::{
    parse, serialize, vbool, vint, vlist, vrec, vrec_owned, vstr, Diag, Val,
};
use crate::model::{
    build_contract, resolve, type_summary, MachineBinding, RootSystem, SystemSpec,
};

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Compose,
    Simulate,
    Check,
    Contract,
}

pub struct Opts {
    pub steps: Option<usize>,
    pub horizon: Option<i64>,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

/// Runs a command against a description file. The primary output goes to
/// `--out` or stdout; diagnostics go to stderr. Returns the exit code:
/// 0 success or all checks pass, 1 a check or contract failed (the report
/// is still written), 2 the input could not be read, parsed, or resolved.
pub fn run(cmd: Command, file: &Path, opts: &Opts) -> i32 {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return 2;
        }
    };
    let outcome = (|| -> Result<(String, i32), Diag> {
        let v = parse(&text)?;
        let spec = resolve(&v)?;
        match cmd {
            Command::Compose => compose(&spec, opts),
            Command::Simulate => simulate(&spec, opts),
            Command::Check => check(&spec, opts),
            Command::Contract => contract_cmd(&spec, opts),
        }
    })();
    match outcome {
        Err(d) => {
            eprintln!("error: {}:{d}", file.display());
            2
        }
        Ok((output, code)) => {
            if let Some(path) = &opts.out {
                if let Err(e) = std::fs::write(path, output) {
                    eprintln!("error: {}: {e}", path.display());
                    return 2;
                }
            } else {
                print!("{output}");
            }
            code
        }
    }
}

fn internal(e: impl std::fmt::Display) -> Diag {
    Diag::new(1, 1, format!("composition failed: {e}"))
}

// ---------------------------------------------------------------------------
// Rendering library objects back into the text format.

fn rat_str(r: Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn str_vals(xs: &[String]) -> Val {
    vlist(xs.iter().map(|s| vstr(s.clone())).collect())
}

fn ports_val(ports: &[Port]) -> Val {
    vlist(
        ports
            .iter()
            .map(|p| vrec(vec![("name", vstr(p.name.clone())), ("type", vstr(type_summary(&p.ty)))]))
            .collect(),
    )
}

fn iface_val(i: &Interface) -> Val {
    vrec(vec![
        ("label", vstr(i.label.clone())),
        ("inputs", ports_val(&i.inputs)),
        ("outputs", ports_val(&i.outputs)),
    ])
}

fn diagram_val(wd: &WiringDiagram) -> Val {
    let feed = wd
        .feed
        .iter()
        .map(|(k, f)| {
            let v = match f {
                Feed::FromOuter(p) => vrec(vec![("outer", vstr(p.clone()))]),
                Feed::FromInner(p) => vrec(vec![("inner", vstr(p.clone()))]),
            };
            (k.clone(), v)
        })
        .collect();
    let read = wd.read.iter().map(|(k, p)| (k.clone(), vstr(p.clone()))).collect();
    vrec(vec![
        ("inner", iface_val(&wd.inner)),
        ("outer", iface_val(&wd.outer)),
        ("feed", vrec_owned(feed)),
        ("read", vrec_owned(read)),
    ])
}

fn moore_val(m: &MooreMachine) -> Val {
    let io = |ports: &[(String, Vec<String>)]| {
        vlist(
            ports
                .iter()
                .map(|(n, sym)| vrec(vec![("name", vstr(n.clone())), ("symbols", str_vals(sym))]))
                .collect(),
        )
    };
    let update = m
        .update
        .iter()
        .map(|((x, s), next)| {
            vrec(vec![
                ("input", str_vals(x)),
                ("state", vstr(s.clone())),
                ("next", vstr(next.clone())),
            ])
        })
        .collect();
    let readout = m
        .readout
        .iter()
        .map(|(s, out)| vrec(vec![("state", vstr(s.clone())), ("output", str_vals(out))]))
        .collect();
    vrec(vec![
        ("kind", vstr("moore")),
        ("inputs", io(&m.inputs)),
        ("outputs", io(&m.outputs)),
        ("states", str_vals(&m.states)),
        ("update", vlist(update)),
        ("readout", vlist(readout)),
    ])
}

fn graph_val(g: &Graph) -> Val {
    let edges = g
        .edges
        .iter()
        .map(|e| {
            vrec(vec![
                ("name", vstr(e.name.clone())),
                ("from", vstr(g.nodes[e.src].clone())),
                ("to", vstr(g.nodes[e.tgt].clone())),
            ])
        })
        .collect();
    let mut fields = vec![
        ("nodes", str_vals(&g.nodes)),
        ("edges", vlist(edges)),
    ];
    if let Some(refl) = &g.refl {
        fields.push((
            "reflexive",
            vlist(refl.iter().map(|&e| vstr(g.edges[e].name.clone())).collect()),
        ));
    }
    vrec(fields)
}

fn hom_val(h: &GraphHom) -> Val {
    vrec(vec![
        ("nodes", vlist(h.node_map.iter().map(|&v| vstr(h.cod.nodes[v].clone())).collect())),
        ("edges", vlist(h.edge_map.iter().map(|&e| vstr(h.cod.edges[e].name.clone())).collect())),
    ])
}

fn span_ports_val(ports: &[(String, Graph)]) -> Val {
    vlist(
        ports
            .iter()
            .map(|(n, g)| {
                vrec(vec![
                    ("name", vstr(n.clone())),
                    ("type", vstr(format!("graph({} nodes, {} edges)", g.nodes.len(), g.edges.len()))),
                ])
            })
            .collect(),
    )
}

fn span_machine_val(m: &Machine<GraphUniverse>) -> Val {
    vrec(vec![
        ("kind", vstr("span")),
        ("state", graph_val(&m.state)),
        ("inputs", span_ports_val(&m.in_ports)),
        ("outputs", span_ports_val(&m.out_ports)),
        ("in", hom_val(&m.in_map)),
        ("out", hom_val(&m.out_map)),
    ])
}

/// A recognizable description of a state object.
fn shape(g: &Graph) -> String {
    if g.nodes.is_empty() {
        return "empty".into();
    }
    let all_loops = g.edges.iter().all(|e| e.src == e.tgt);
    if all_loops && g.edges.len() == g.nodes.len() {
        let mut per_node = vec![0usize; g.nodes.len()];
        for e in &g.edges {
            per_node[e.src] += 1;
        }
        if per_node.iter().all(|&c| c == 1) {
            return format!("constant({})", g.nodes.len());
        }
    }
    format!("graph({} nodes, {} edges)", g.nodes.len(), g.edges.len())
}

// ---------------------------------------------------------------------------
// Composites.

fn moore_parts<'a>(
    bindings: &'a [(&'a str, &'a str, &'a MachineBinding)],
) -> Option<Vec<(&'a str, &'a MooreMachine)>> {
    bindings
        .iter()
        .map(|(_, prefix, b)| match b {
            MachineBinding::Moore(m) => Some((*prefix, m)),
            _ => None,
        })
        .collect()
}

fn span_composite(spec: &SystemSpec, root: &RootSystem) -> Result<Machine<GraphUniverse>, Diag> {
    let u = GraphUniverse;
    let mut views = Vec::new();
    for label in &root.leaves {
        let m = spec.span_view(label).ok_or_else(|| {
            Diag::new(1, 1, format!("box {label:?} binds a timed machine, which has no span composite"))
        })?;
        views.push(m);
    }
    let parts: Vec<(&str, &Machine<GraphUniverse>)> = root
        .prefixes
        .iter()
        .map(|p| p.as_str())
        .zip(views.iter())
        .collect();
    let tensored = span::tensor_all(&u, &parts).map_err(internal)?;
    let rewired = span::rewire(&u, &root.flat.diagram, &tensored).map_err(internal)?;
    Ok(rewired.machine)
}

fn compose(spec: &SystemSpec, _opts: &Opts) -> Result<(String, i32), Diag> {
    let mut entries = Vec::new();
    for root in &spec.roots {
        let mut fields = vec![("diagram", diagram_val(&root.flat.diagram))];
        if root.leaves.iter().all(|l| spec.machines.contains_key(l)) {
            let bindings = spec.leaf_bindings(root)?;
            if let Some(parts) = moore_parts(&bindings) {
                let tensored = moore::tensor_all(&parts);
                let m = moore::rewire(&root.flat.diagram, &tensored).map_err(internal)?;
                fields.push(("machine", moore_val(&m)));
            } else if bindings.iter().all(|(_, _, b)| !matches!(b, MachineBinding::Timed(_))) {
                fields.push(("machine", span_machine_val(&span_composite(spec, root)?)));
            }
        }
        entries.push((root.outer.clone(), vrec(fields)));
    }
    Ok((serialize(&vrec_owned(entries)), 0))
}

// ---------------------------------------------------------------------------
// Simulation.

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let mut s = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            if i + 1 == cells.len() {
                s.push_str(cell);
            } else {
                s.push_str(&format!("{cell:<width$}", width = widths[i]));
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&header.to_vec());
    for row in rows {
        line(row);
    }
    out
}

fn run_block(spec: &SystemSpec) -> Result<&Val, Diag> {
    spec.run
        .as_ref()
        .ok_or_else(|| Diag::new(1, 1, "this command needs a run block in the description"))
}

fn run_steps(run: &Val, opts: &Opts) -> Result<Option<usize>, Diag> {
    match (opts.steps, run.get("steps")) {
        (Some(n), _) => Ok(Some(n)),
        (None, Some(v)) => Ok(Some(v.as_usize()?)),
        (None, None) => Ok(None),
    }
}

fn run_horizon(run: &Val, opts: &Opts) -> Result<Option<i64>, Diag> {
    match (opts.horizon, run.get("horizon")) {
        (Some(h), _) => Ok(Some(h)),
        (None, Some(v)) => Ok(Some(v.as_int()?)),
        (None, None) => Ok(None),
    }
}

fn init_state<'a>(run: &'a Val, label: &str) -> Result<&'a str, Diag> {
    run.field("init")?.field(label)?.as_str()
}

fn simulate(spec: &SystemSpec, opts: &Opts) -> Result<(String, i32), Diag> {
    let root = spec.single_root()?;
    let bindings = spec.leaf_bindings(root)?;
    let run = run_block(spec)?;
    if bindings.iter().any(|(_, _, b)| matches!(b, MachineBinding::Timed(_))) {
        if bindings.len() != 1 {
            return Err(Diag::new(1, 1, "timed simulation runs a single box fed from the boundary"));
        }
        let (label, prefix, b) = bindings[0];
        let m = match b {
            MachineBinding::Timed(m) => m,
            _ => unreachable!(),
        };
        return simulate_timed(spec, root, label, prefix, m, run, opts);
    }
    if let Some(parts) = moore_parts(&bindings) {
        return simulate_moore(root, &parts, run, opts);
    }
    Err(Diag::new(
        1,
        1,
        "span machines denote sets of behaviors, not input-driven runs; simulate runs moore or timed systems",
    ))
}

fn simulate_moore(
    root: &RootSystem,
    parts: &[(&str, &MooreMachine)],
    run: &Val,
    opts: &Opts,
) -> Result<(String, i32), Diag> {
    let outer = &root.flat.diagram.outer;
    let mut init = Vec::new();
    for label in &root.leaves {
        init.push(init_state(run, label)?);
    }

    let rows_val = run.field("inputs")?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for row in rows_val.as_list()? {
        let port_names: Vec<&str> = outer.inputs.iter().map(|p| p.name.as_str()).collect();
        row.check_fields(&port_names)?;
        let mut tuple = Vec::new();
        for p in &outer.inputs {
            let sv = row.field(&p.name)?;
            let sym = sv.as_str()?;
            match &p.ty {
                wirebox::wiring::PortType::Finite(alphabet) if alphabet.iter().any(|a| a == sym) => {}
                wirebox::wiring::PortType::Finite(_) => {
                    return Err(sv.err(format!(
                        "symbol {sym:?} is not in the alphabet of port {:?}",
                        p.name
                    )))
                }
                other => {
                    return Err(sv.err(format!(
                        "port {:?} is {}, not finite",
                        p.name,
                        type_summary(other)
                    )))
                }
            }
            tuple.push(sym.to_string());
        }
        rows.push(tuple);
    }
    if let Some(steps) = run_steps(run, opts)? {
        if steps > rows.len() {
            return Err(rows_val.err(format!(
                "run.inputs provides {} steps, but {steps} were requested",
                rows.len()
            )));
        }
        rows.truncate(steps);
    }

    let trace = moore::simulate_network(parts, &root.flat.diagram, &rows, &init)
        .map_err(|e| Diag::new(1, 1, format!("simulation failed: {e}")))?;

    let mut header = vec!["t".to_string()];
    header.extend(outer.outputs.iter().map(|p| format!("{}.{}", outer.label, p.name)));
    let table_rows: Vec<Vec<String>> = trace
        .outputs
        .iter()
        .enumerate()
        .map(|(t, out)| {
            let mut row = vec![t.to_string()];
            row.extend(out.iter().cloned());
            row
        })
        .collect();
    Ok((table(&header, &table_rows), 0))
}

fn parse_rational(v: &Val) -> Result<Rational64, Diag> {
    let s = v.as_str()?;
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let numer: i64 = n.trim().parse().map_err(|_| v.err(format!("bad rational {s:?}")))?;
    let denom: i64 = d.trim().parse().map_err(|_| v.err(format!("bad rational {s:?}")))?;
    if denom == 0 {
        return Err(v.err("a rational needs a nonzero denominator"));
    }
    Ok(Rational64::new(numer, denom))
}

fn resolve_signal(v: &Val, g: &Graph) -> Result<TimedTrace, Diag> {
    v.check_fields(&["start", "segments", "jumps", "end"])?;
    let edge = |f: &Val| -> Result<String, Diag> {
        let name = f.as_str()?;
        g.edge_index(name)
            .ok_or_else(|| f.err(format!("unknown jump {name:?} in the input alphabet")))?;
        Ok(name.to_string())
    };
    let start = edge(v.field("start")?)?;
    let end = edge(v.field("end")?)?;
    let mut segments = Vec::new();
    for seg in v.field("segments")?.as_list()? {
        seg.check_fields(&["value", "for"])?;
        let nv = seg.field("value")?;
        let name = nv.as_str()?;
        g.node_index(name)
            .ok_or_else(|| nv.err(format!("unknown value {name:?} in the input alphabet")))?;
        let dur = parse_rational(seg.field("for")?)?;
        if dur <= Rational64::from_integer(0) {
            return Err(seg.field("for")?.err("a dwell must last a positive time"));
        }
        segments.push((name.to_string(), dur));
    }
    let jumps = match v.get("jumps") {
        Some(jv) => jv.as_list()?.iter().map(edge).collect::<Result<Vec<_>, _>>()?,
        None => vec![],
    };
    let t = TimedTrace { start, segments, jumps, end };
    t.validate(g).map_err(|e| v.err(format!("bad signal: {e}")))?;
    Ok(t)
}

fn simulate_timed(
    spec: &SystemSpec,
    root: &RootSystem,
    label: &str,
    prefix: &str,
    m: &timed::TimedMachine,
    run: &Val,
    opts: &Opts,
) -> Result<(String, i32), Diag> {
    let iface = spec.box_iface(label).expect("leaf");
    let outer = &root.flat.diagram.outer;
    for p in &iface.inputs {
        let inner_name = format!("{prefix}.{}", p.name);
        match root.flat.diagram.feed.get(&inner_name) {
            Some(Feed::FromOuter(_)) => {}
            _ => {
                return Err(Diag::new(
                    1,
                    1,
                    format!(
                        "timed simulation feeds {inner_name:?} straight from the boundary; feedback needs the span machinery"
                    ),
                ))
            }
        }
    }
    let init = init_state(run, label)?;
    let mut signal = resolve_signal(run.field("signal")?, &m.input)?;
    if let Some(h) = run_horizon(run, opts)? {
        if h < 0 {
            return Err(Diag::new(1, 1, "the horizon must be non-negative"));
        }
        let h = Rational64::from_integer(h);
        if h < signal.len() {
            signal = signal
                .restrict(&m.input, Rational64::from_integer(0), h)
                .map_err(|e| Diag::new(1, 1, format!("restricting the signal failed: {e}")))?;
        }
    }

    let execution = match timed::execute(m, &signal, init) {
        Ok(e) => e,
        Err(e) => {
            let report = vrec(vec![(
                "simulation",
                vrec(vec![("ok", vbool(false)), ("error", vstr(e.to_string()))]),
            )]);
            return Ok((serialize(&report), 1));
        }
    };

    let mut header = vec!["t".to_string()];
    header.extend(outer.outputs.iter().map(|p| format!("{}.{}", outer.label, p.name)));
    let mut rows = Vec::new();
    let mut t = Rational64::from_integer(0);
    for (node, dur) in &execution.output.segments {
        let mut row = vec![rat_str(t)];
        for _ in &outer.outputs {
            row.push(node.clone());
        }
        rows.push(row);
        t += dur;
    }
    Ok((table(&header, &rows), 0))
}

// ---------------------------------------------------------------------------
// Checking.

fn verdict_val(m: &Machine<GraphUniverse>, depth: usize, failed: &mut bool) -> Val {
    let mut fields = Vec::new();
    match total_deterministic(m, depth) {
        Ok(v) => {
            if !v.passes() {
                *failed = true;
            }
            let mut step = vec![
                ("depth", vint(v.depth as i64)),
                ("total", vbool(v.total)),
                ("deterministic", vbool(v.deterministic)),
                ("passes", vbool(v.passes())),
            ];
            if let Some(w) = &v.missing {
                step.push(("missing", vstr(w.clone())));
            }
            if let Some(w) = &v.collision {
                step.push(("collision", vstr(w.clone())));
            }
            let mut germ = vec![
                ("total", vbool(v.germ_total)),
                ("deterministic", vbool(v.germ_deterministic)),
            ];
            if let Some(w) = &v.germ_missing {
                germ.push(("missing", vstr(w.clone())));
            }
            if let Some(w) = &v.germ_collision {
                germ.push(("collision", vstr(w.clone())));
            }
            fields.push(("step", vrec(step)));
            fields.push(("germ", vrec(germ)));
        }
        Err(e) => {
            *failed = true;
            fields.push(("error", vstr(e.to_string())));
        }
    }
    match inertial_lift(m) {
        Ok(_) => fields.push(("inertial", vbool(true))),
        Err(e) => {
            *failed = true;
            fields.push(("inertial", vbool(false)));
            fields.push(("inertia_failure", vstr(e.to_string())));
        }
    }
    vrec(fields)
}

fn oracle_probe(
    parts: &[(&str, &MooreMachine)],
    wd: &WiringDiagram,
    composite: &MooreMachine,
    steps: usize,
    cases: usize,
    seed: u64,
) -> Result<bool, Diag> {
    let mut r = StdRng::seed_from_u64(seed);
    let sizes: Vec<usize> = parts.iter().map(|(_, m)| m.states.len()).collect();
    for _ in 0..cases {
        let idx: Vec<usize> = sizes.iter().map(|&n| r.gen_range(0..n)).collect();
        let init: Vec<&str> = parts
            .iter()
            .zip(&idx)
            .map(|((_, m), &i)| m.states[i].as_str())
            .collect();
        let joint = &composite.states[tuple_index(&sizes, &idx)];
        let inputs: Vec<Vec<String>> = (0..steps)
            .map(|_| {
                wd.outer
                    .inputs
                    .iter()
                    .map(|p| match &p.ty {
                        wirebox::wiring::PortType::Finite(sym) => {
                            sym[r.gen_range(0..sym.len())].clone()
                        }
                        _ => unreachable!("moore ports are finite"),
                    })
                    .collect()
            })
            .collect();
        let live = moore::simulate_network(parts, wd, &inputs, &init)
            .map_err(|e| Diag::new(1, 1, format!("oracle run failed: {e}")))?;
        let composed = moore::run(composite, &inputs, joint)
            .map_err(|e| Diag::new(1, 1, format!("composite run failed: {e}")))?;
        if live.outputs != composed.outputs {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check(spec: &SystemSpec, opts: &Opts) -> Result<(String, i32), Diag> {
    let depth = opts.steps.unwrap_or(1).max(1);
    let mut failed = false;

    let mut machine_entries = Vec::new();
    for (label, binding) in &spec.machines {
        let val = match binding {
            MachineBinding::Moore(m) => {
                let unrolled = span::unroll_moore(m).map_err(internal)?;
                vrec(vec![
                    ("kind", vstr("moore")),
                    ("verdict", verdict_val(&unrolled, depth, &mut failed)),
                ])
            }
            MachineBinding::Span(m) => vrec(vec![
                ("kind", vstr("span")),
                ("verdict", verdict_val(m, depth, &mut failed)),
            ]),
            MachineBinding::Timed(m) => {
                let ok = m.validate().is_ok();
                if !ok {
                    failed = true;
                }
                vrec(vec![
                    ("kind", vstr("timed")),
                    ("wellformed", vbool(ok)),
                    ("note", vstr("timed machines are checked by execution")),
                ])
            }
        };
        machine_entries.push((label.clone(), val));
    }

    let mut composite_entries = Vec::new();
    for root in &spec.roots {
        let all_bound = root.leaves.iter().all(|l| spec.machines.contains_key(l));
        if !all_bound {
            composite_entries.push((
                root.outer.clone(),
                vrec(vec![("composed", vbool(false)), ("note", vstr("no machine bindings"))]),
            ));
            continue;
        }
        let bindings = spec.leaf_bindings(root)?;
        if bindings.iter().any(|(_, _, b)| matches!(b, MachineBinding::Timed(_))) {
            composite_entries.push((
                root.outer.clone(),
                vrec(vec![
                    ("composed", vbool(false)),
                    ("note", vstr("timed machines are checked by execution")),
                ]),
            ));
            continue;
        }
        let m = span_composite(spec, root)?;
        let mut fields = vec![
            ("composed", vbool(true)),
            ("state", vrec(vec![
                ("nodes", vint(m.state.nodes.len() as i64)),
                ("edges", vint(m.state.edges.len() as i64)),
                ("shape", vstr(shape(&m.state))),
            ])),
            ("verdict", verdict_val(&m, depth, &mut failed)),
        ];
        if let Some(parts) = moore_parts(&bindings) {
            let tensored = moore::tensor_all(&parts);
            let composite = moore::rewire(&root.flat.diagram, &tensored).map_err(internal)?;
            let steps = opts.steps.unwrap_or(10);
            let cases = 20;
            let agree =
                oracle_probe(&parts, &root.flat.diagram, &composite, steps, cases, opts.seed)?;
            if !agree {
                failed = true;
            }
            fields.push((
                "oracle",
                vrec(vec![
                    ("cases", vint(cases as i64)),
                    ("steps", vint(steps as i64)),
                    ("seed", vint(opts.seed as i64)),
                    ("agree", vbool(agree)),
                ]),
            ));
        }
        composite_entries.push((root.outer.clone(), vrec(fields)));
    }

    let report = vrec(vec![
        ("machines", vrec_owned(machine_entries)),
        ("composites", vrec_owned(composite_entries)),
        ("ok", vbool(!failed)),
    ]);
    Ok((serialize(&report), if failed { 1 } else { 0 }))
}

// ---------------------------------------------------------------------------
// Contracts.

fn contract_summary(c: &Contract) -> Val {
    vrec(vec![
        ("horizon", vint(c.horizon as i64)),
        ("inputs", vlist(c.in_ports.iter().map(|(n, _)| vstr(n.clone())).collect())),
        ("outputs", vlist(c.out_ports.iter().map(|(n, _)| vstr(n.clone())).collect())),
        ("allowed", vlist(c.allowed.iter().map(|s| vint(s.len() as i64)).collect())),
    ])
}

fn contract_cmd(spec: &SystemSpec, opts: &Opts) -> Result<(String, i32), Diag> {
    if spec.contracts.is_empty() {
        return Err(Diag::new(1, 1, "the description binds no contracts"));
    }
    let horizon_override = match opts.horizon {
        Some(h) if h < 0 => return Err(Diag::new(1, 1, "the horizon must be non-negative")),
        Some(h) => Some(h as usize),
        None => None,
    };
    let mut failed = false;

    let mut binding_entries = Vec::new();
    let mut built: Vec<(String, Contract)> = Vec::new();
    for (label, cb) in &spec.contracts {
        let horizon = horizon_override.unwrap_or(cb.horizon);
        let m = spec.span_view(label).expect("validated at resolution");
        let c = build_contract(cb.kind, horizon, &m).map_err(|e| Diag::new(1, 1, e))?;
        let mut fields = vec![
            ("kind", vstr(cb.kind.name())),
            ("contract", contract_summary(&c)),
        ];
        match machine_satisfies(&m, &c).map_err(internal)? {
            None => fields.push(("satisfied", vbool(true))),
            Some((length, witness)) => {
                failed = true;
                fields.push(("satisfied", vbool(false)));
                let states: Vec<Val> = witness
                    .nodes
                    .iter()
                    .map(|&v| vstr(m.state.nodes[v].clone()))
                    .collect();
                let outs = m.out_map.apply_section(&witness);
                let shown: Vec<Val> = outs
                    .nodes
                    .iter()
                    .map(|&v| vstr(m.out_map.cod.nodes[v].clone()))
                    .collect();
                fields.push((
                    "violation",
                    vrec(vec![
                        ("length", vint(length as i64)),
                        ("states", vlist(states)),
                        ("outputs", vlist(shown)),
                    ]),
                ));
            }
        }
        binding_entries.push((label.clone(), vrec(fields)));
        built.push((label.clone(), c));
    }

    let mut composed_entries = Vec::new();
    for root in &spec.roots {
        if !root.leaves.iter().all(|l| spec.contracts.contains_key(l)) {
            continue;
        }
        let parts: Vec<(&str, &Contract)> = root
            .leaves
            .iter()
            .zip(&root.prefixes)
            .map(|(label, prefix)| {
                let c = &built.iter().find(|(l, _)| l == label).expect("built above").1;
                (prefix.as_str(), c)
            })
            .collect();
        let tensored = Contract::tensor(&parts).map_err(internal)?;
        let composed = tensored.rewire(&root.flat.diagram).map_err(internal)?;
        composed_entries.push((root.outer.clone(), contract_summary(&composed)));
    }

    let mut report = vec![("bindings", vrec_owned(binding_entries))];
    if !composed_entries.is_empty() {
        report.push(("composed", vrec_owned(composed_entries)));
    }
    report.push(("ok", vbool(!failed)));
    Ok((serialize(&vrec(report)), if failed { 1 } else { 0 }))
}
