//! Machines whose state flows along a vector field driven by Euclidean
//! inputs. Wiring such machines together substitutes readouts into fields
//! coordinate by coordinate; discretizing with an Euler step commutes with
//! that substitution on the nose, because both orders produce the same
//! arithmetic expression.

use crate::wiring::{Feed, PortType, WiringDiagram, WiringError};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub type Field = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type Readout = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    PortMismatch(String),
    Arity { expected: usize, found: usize },
    Wiring(WiringError),
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OdeError::PortMismatch(m) => write!(f, "port mismatch: {m}"),
            OdeError::Arity { expected, found } => {
                write!(f, "expected {expected} coordinates, found {found}")
            }
            OdeError::Wiring(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for OdeError {}

impl From<WiringError> for OdeError {
    fn from(e: WiringError) -> Self {
        OdeError::Wiring(e)
    }
}

/// Multivariate polynomial with `vars` variables. Used where a field must be
/// composed symbolically, so that discretize-then-wire and wire-then-
/// discretize can be compared as expressions, not just sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub vars: usize,
    pub terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(vars: usize) -> Poly {
        Poly { vars, terms: BTreeMap::new() }
    }

    pub fn constant(vars: usize, c: f64) -> Poly {
        let mut p = Poly::zero(vars);
        if c != 0.0 {
            p.terms.insert(vec![0; vars], c);
        }
        p
    }

    pub fn var(vars: usize, i: usize) -> Poly {
        assert!(i < vars);
        let mut exp = vec![0; vars];
        exp[i] = 1;
        Poly { vars, terms: [(exp, 1.0)].into() }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.vars, other.vars);
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            let entry = terms.entry(e.clone()).or_insert(0.0);
            *entry += c;
            if *entry == 0.0 {
                terms.remove(e);
            }
        }
        Poly { vars: self.vars, terms }
    }

    pub fn scale(&self, k: f64) -> Poly {
        if k == 0.0 {
            return Poly::zero(self.vars);
        }
        Poly {
            vars: self.vars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.vars, other.vars);
        let mut out = Poly::zero(self.vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                let entry = out.terms.entry(e).or_insert(0.0);
                *entry += c1 * c2;
            }
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn eval(&self, xs: &[f64]) -> f64 {
        assert_eq!(xs.len(), self.vars);
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = *c;
            for (x, &k) in xs.iter().zip(e) {
                t *= x.powi(k as i32);
            }
            acc += t;
        }
        acc
    }

    /// Substitution: replace variable `i` by `args[i]`. All `args` share a
    /// variable count, which becomes the result's.
    pub fn compose(&self, args: &[Poly]) -> Poly {
        assert_eq!(args.len(), self.vars);
        let vars = args.first().map(|p| p.vars).unwrap_or(0);
        let mut out = Poly::zero(vars);
        for (e, c) in &self.terms {
            let mut term = Poly::constant(vars, *c);
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    term = term.mul(&args[i]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }
}

/// A continuous-time machine: inputs and outputs are blocks of coordinates,
/// the state derivative is `field(input, state)`, outputs read the state
/// alone. The optional polynomial forms, when present, must agree with the
/// closures (variables: all input coordinates, then all state coordinates).
#[derive(Clone)]
pub struct OdeMachine {
    pub inputs: Vec<(String, usize)>,
    pub outputs: Vec<(String, usize)>,
    pub state_dim: usize,
    pub field: Field,
    pub readout: Readout,
    pub field_poly: Option<Vec<Poly>>,
    pub readout_poly: Option<Vec<Poly>>,
}

impl fmt::Debug for OdeMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeMachine")
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .field("state_dim", &self.state_dim)
            .field("field_poly", &self.field_poly)
            .field("readout_poly", &self.readout_poly)
            .finish_non_exhaustive()
    }
}

pub fn total_dim(ports: &[(String, usize)]) -> usize {
    ports.iter().map(|(_, d)| d).sum()
}

fn port_offsets(ports: &[(String, usize)]) -> BTreeMap<&str, (usize, usize)> {
    let mut out = BTreeMap::new();
    let mut off = 0;
    for (name, d) in ports {
        out.insert(name.as_str(), (off, *d));
        off += d;
    }
    out
}

impl OdeMachine {
    /// Builds both the closures and the symbolic form from polynomial data.
    pub fn from_polys(
        inputs: Vec<(String, usize)>,
        outputs: Vec<(String, usize)>,
        state_dim: usize,
        field: Vec<Poly>,
        readout: Vec<Poly>,
    ) -> Result<OdeMachine, OdeError> {
        let in_dim = total_dim(&inputs);
        let out_dim = total_dim(&outputs);
        if field.len() != state_dim {
            return Err(OdeError::Arity { expected: state_dim, found: field.len() });
        }
        if readout.len() != out_dim {
            return Err(OdeError::Arity { expected: out_dim, found: readout.len() });
        }
        for p in &field {
            if p.vars != in_dim + state_dim {
                return Err(OdeError::Arity { expected: in_dim + state_dim, found: p.vars });
            }
        }
        for p in &readout {
            if p.vars != state_dim {
                return Err(OdeError::Arity { expected: state_dim, found: p.vars });
            }
        }
        let fp = field.clone();
        let rp = readout.clone();
        let field_fn: Field = Arc::new(move |x, s| {
            let mut xs = x.to_vec();
            xs.extend_from_slice(s);
            fp.iter().map(|p| p.eval(&xs)).collect()
        });
        let readout_fn: Readout = Arc::new(move |s| rp.iter().map(|p| p.eval(s)).collect());
        Ok(OdeMachine {
            inputs,
            outputs,
            state_dim,
            field: field_fn,
            readout: readout_fn,
            field_poly: Some(field),
            readout_poly: Some(readout),
        })
    }

    pub fn interface(&self, label: &str) -> crate::wiring::Interface {
        let mut b = crate::wiring::Interface::new(label);
        for (name, d) in &self.inputs {
            b = b.input(name, PortType::Euclidean(*d));
        }
        for (name, d) in &self.outputs {
            b = b.output(name, PortType::Euclidean(*d));
        }
        b
    }
}

fn euclidean_ports(
    ports: &[crate::wiring::Port],
    side: &str,
) -> Result<Vec<(String, usize)>, OdeError> {
    ports
        .iter()
        .map(|p| match p.ty {
            PortType::Euclidean(d) => Ok((p.name.clone(), d)),
            _ => Err(OdeError::PortMismatch(format!("{side} port {:?} is not euclidean", p.name))),
        })
        .collect()
}

fn check_ports(m: &[(String, usize)], b: &[crate::wiring::Port]) -> Result<(), OdeError> {
    if m.len() != b.len() {
        return Err(OdeError::PortMismatch(format!("{} ports vs {}", m.len(), b.len())));
    }
    for ((name, d), p) in m.iter().zip(b) {
        if *name != p.name || p.ty != PortType::Euclidean(*d) {
            return Err(OdeError::PortMismatch(format!("{name:?} vs {:?}", p.name)));
        }
    }
    Ok(())
}

/// Coordinate-routing plan shared by the continuous and discretized rewire:
/// for every inner input coordinate, where its value comes from.
#[derive(Debug, Clone)]
enum CoordSource {
    Outer(usize),
    ReadoutCoord(usize),
}

fn routing_plan(
    wd: &WiringDiagram,
    inner_in: &[(String, usize)],
    inner_out: &[(String, usize)],
) -> Result<(Vec<CoordSource>, Vec<usize>, usize, usize), OdeError> {
    let report = wd.validate();
    if !report.ok() {
        return Err(OdeError::Wiring(WiringError::Invalid(report)));
    }
    let outer_in = euclidean_ports(&wd.outer.inputs, "outer input")?;
    let outer_out = euclidean_ports(&wd.outer.outputs, "outer output")?;
    let outer_in_off = port_offsets(&outer_in);
    let inner_out_off = port_offsets(inner_out);
    let mut plan = Vec::new();
    for (name, d) in inner_in {
        let feed = wd
            .feed
            .get(name)
            .ok_or_else(|| OdeError::PortMismatch(format!("inner input {name:?} unfed")))?;
        match feed {
            Feed::FromOuter(p) => {
                let (off, pd) = outer_in_off[p.as_str()];
                debug_assert_eq!(pd, *d);
                for i in 0..*d {
                    plan.push(CoordSource::Outer(off + i));
                }
            }
            Feed::FromInner(q) => {
                let (off, pd) = inner_out_off[q.as_str()];
                debug_assert_eq!(pd, *d);
                for i in 0..*d {
                    plan.push(CoordSource::ReadoutCoord(off + i));
                }
            }
        }
    }
    let mut out_plan = Vec::new();
    for p in &wd.outer.outputs {
        let q = &wd.read[&p.name];
        let (off, d) = inner_out_off[q.as_str()];
        for i in 0..d {
            out_plan.push(off + i);
        }
    }
    Ok((plan, out_plan, total_dim(&outer_in), total_dim(&outer_out)))
}

/// Fills a wiring diagram with a continuous machine: wires fed from inner
/// outputs read the current readout, so the composite field substitutes
/// readout coordinates into the original field.
pub fn rewire(wd: &WiringDiagram, m: &OdeMachine) -> Result<OdeMachine, OdeError> {
    check_ports(&m.inputs, &wd.inner.inputs)?;
    check_ports(&m.outputs, &wd.inner.outputs)?;
    let (plan, out_plan, _outer_in_dim, _) = routing_plan(wd, &m.inputs, &m.outputs)?;
    let outer_in = euclidean_ports(&wd.outer.inputs, "outer input")?;
    let outer_out = euclidean_ports(&wd.outer.outputs, "outer output")?;

    let field0 = m.field.clone();
    let rdt0 = m.readout.clone();
    let plan_f = plan.clone();
    let field: Field = Arc::new(move |y: &[f64], s: &[f64]| {
        let r = rdt0(s);
        let x: Vec<f64> = plan_f
            .iter()
            .map(|src| match src {
                CoordSource::Outer(i) => y[*i],
                CoordSource::ReadoutCoord(i) => r[*i],
            })
            .collect();
        field0(&x, s)
    });
    let rdt1 = m.readout.clone();
    let out_plan_r = out_plan.clone();
    let readout: Readout = Arc::new(move |s: &[f64]| {
        let r = rdt1(s);
        out_plan_r.iter().map(|&i| r[i]).collect()
    });

    let outer_in_dim = total_dim(&outer_in);
    let field_poly = match (&m.field_poly, &m.readout_poly) {
        (Some(fp), Some(rp)) => {
            let vars = outer_in_dim + m.state_dim;
            // Arguments for substitution into the old field's variables:
            // first the routed input coordinates, then the (shifted) states.
            let mut args: Vec<Poly> = plan
                .iter()
                .map(|src| match src {
                    CoordSource::Outer(i) => Poly::var(vars, *i),
                    CoordSource::ReadoutCoord(i) => rp[*i].compose(
                        &(0..m.state_dim)
                            .map(|k| Poly::var(vars, outer_in_dim + k))
                            .collect::<Vec<_>>(),
                    ),
                })
                .collect();
            args.extend((0..m.state_dim).map(|k| Poly::var(vars, outer_in_dim + k)));
            Some(fp.iter().map(|p| p.compose(&args)).collect())
        }
        _ => None,
    };
    let readout_poly = m
        .readout_poly
        .as_ref()
        .map(|rp| out_plan.iter().map(|&i| rp[i].clone()).collect());

    Ok(OdeMachine {
        inputs: outer_in,
        outputs: outer_out,
        state_dim: m.state_dim,
        field,
        readout,
        field_poly,
        readout_poly,
    })
}

/// A discrete-step machine on Euclidean coordinates: what an ODE machine
/// becomes after fixing a step size.
#[derive(Clone)]
pub struct StepMachine {
    pub inputs: Vec<(String, usize)>,
    pub outputs: Vec<(String, usize)>,
    pub state_dim: usize,
    pub update: Field,
    pub readout: Readout,
}

/// Forward Euler at step `eps`: `update(x, s) = s + eps * field(x, s)`.
pub fn euler(m: &OdeMachine, eps: f64) -> StepMachine {
    let field = m.field.clone();
    let update: Field = Arc::new(move |x, s| {
        field(x, s).iter().zip(s).map(|(d, v)| v + eps * d).collect()
    });
    StepMachine {
        inputs: m.inputs.clone(),
        outputs: m.outputs.clone(),
        state_dim: m.state_dim,
        update,
        readout: m.readout.clone(),
    }
}

/// Fills a wiring diagram with a step machine, mirroring [`rewire`] exactly:
/// the two paths around the square (discretize then wire, wire then
/// discretize) evaluate the same floating point expression.
pub fn rewire_step(wd: &WiringDiagram, m: &StepMachine) -> Result<StepMachine, OdeError> {
    check_ports(&m.inputs, &wd.inner.inputs)?;
    check_ports(&m.outputs, &wd.inner.outputs)?;
    let (plan, out_plan, _, _) = routing_plan(wd, &m.inputs, &m.outputs)?;
    let outer_in = euclidean_ports(&wd.outer.inputs, "outer input")?;
    let outer_out = euclidean_ports(&wd.outer.outputs, "outer output")?;
    let upd0 = m.update.clone();
    let rdt0 = m.readout.clone();
    let update: Field = Arc::new(move |y: &[f64], s: &[f64]| {
        let r = rdt0(s);
        let x: Vec<f64> = plan
            .iter()
            .map(|src| match src {
                CoordSource::Outer(i) => y[*i],
                CoordSource::ReadoutCoord(i) => r[*i],
            })
            .collect();
        upd0(&x, s)
    });
    let rdt1 = m.readout.clone();
    let readout: Readout = Arc::new(move |s: &[f64]| {
        let r = rdt1(s);
        out_plan.iter().map(|&i| r[i]).collect()
    });
    Ok(StepMachine {
        inputs: outer_in,
        outputs: outer_out,
        state_dim: m.state_dim,
        update,
        readout,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Euler,
    Rk4,
}

/// Magnitude past which a trajectory counts as blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// First time the state magnitude crossed [`BLOWUP_THRESHOLD`] (or went
    /// non-finite), with the magnitude seen there. Integration stops there.
    pub blowup: Option<(f64, f64)>,
}

fn advance(
    f: &Field,
    input: &dyn Fn(f64) -> Vec<f64>,
    t: f64,
    y: &[f64],
    h: f64,
    method: Method,
) -> Vec<f64> {
    match method {
        Method::Euler => {
            let k = f(&input(t), y);
            y.iter().zip(&k).map(|(v, d)| v + h * d).collect()
        }
        Method::Rk4 => {
            let k1 = f(&input(t), y);
            let y2: Vec<f64> = y.iter().zip(&k1).map(|(v, d)| v + 0.5 * h * d).collect();
            let k2 = f(&input(t + 0.5 * h), &y2);
            let y3: Vec<f64> = y.iter().zip(&k2).map(|(v, d)| v + 0.5 * h * d).collect();
            let k3 = f(&input(t + 0.5 * h), &y3);
            let y4: Vec<f64> = y.iter().zip(&k3).map(|(v, d)| v + h * d).collect();
            let k4 = f(&input(t + h), &y4);
            y.iter()
                .enumerate()
                .map(|(i, v)| v + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    }
}

fn magnitude(y: &[f64]) -> f64 {
    y.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// One grid step, bisected wherever the state grows more than five percent
/// within a sub-step. Solutions changing slowly relative to the grid never
/// trigger the refinement, so the run is a plain fixed-step method; near a
/// finite-time singularity the sub-steps shrink with the distance to it,
/// keeping the trajectory accurate up to the threshold crossing. Returns the
/// end state, or the blow-up point.
fn guarded_step(
    f: &Field,
    input: &dyn Fn(f64) -> Vec<f64>,
    t: f64,
    y: &[f64],
    h: f64,
    method: Method,
    depth: u32,
) -> Result<Vec<f64>, (f64, f64)> {
    let y1 = advance(f, input, t, y, h, method);
    let m0 = magnitude(y);
    let m1 = magnitude(&y1);
    let violent = !m1.is_finite() || m1 > 1.05 * m0.max(1.0);
    if violent && depth > 0 {
        let half = 0.5 * h;
        let mid = guarded_step(f, input, t, y, half, method, depth - 1)?;
        let mm = magnitude(&mid);
        if !mm.is_finite() || mm > BLOWUP_THRESHOLD {
            return Err((t + half, mm));
        }
        return guarded_step(f, input, t + half, &mid, half, method, depth - 1);
    }
    if !m1.is_finite() || m1 > BLOWUP_THRESHOLD {
        return Err((t + h, m1));
    }
    Ok(y1)
}

/// Fixed-grid integration of `field` driven by `input`, from `t0` to `t1`.
/// Samples land on the grid `t0 + k * step`; a finite-time singularity shows
/// up as `blowup` (with a bisection-localized crossing time) rather than as
/// NaN spam.
pub fn integrate(
    m: &OdeMachine,
    input: &dyn Fn(f64) -> Vec<f64>,
    init: &[f64],
    t0: f64,
    t1: f64,
    step: f64,
    method: Method,
) -> Trajectory {
    assert!(step > 0.0 && t1 > t0);
    assert_eq!(init.len(), m.state_dim);
    let mut times = vec![t0];
    let mut states = vec![init.to_vec()];
    let mut blowup = None;
    let mut t = t0;
    let mut y = init.to_vec();
    while t < t1 - step * 0.5 {
        match guarded_step(&m.field, input, t, &y, step, method, 48) {
            Ok(next) => {
                t += step;
                y = next;
                times.push(t);
                states.push(y.clone());
            }
            Err((tb, mag)) => {
                times.push(tb);
                blowup = Some((tb, mag));
                break;
            }
        }
    }
    Trajectory { times, states, blowup }
}

/// Largest residual of a candidate solution `y` on `[t0, t1]`: compares the
/// centered difference quotient of `y` at `n` interior sample points against
/// the field. Exact for polynomial candidates of degree at most two.
pub fn solution_residual(
    m: &OdeMachine,
    input: &dyn Fn(f64) -> Vec<f64>,
    candidate: &dyn Fn(f64) -> Vec<f64>,
    t0: f64,
    t1: f64,
    n: usize,
    h: f64,
) -> f64 {
    assert!(n >= 1 && h > 0.0);
    let mut worst = 0.0f64;
    for i in 0..n {
        let t = t0 + (t1 - t0) * (i as f64 + 0.5) / n as f64;
        let yp = candidate(t + h);
        let ym = candidate(t - h);
        let y = candidate(t);
        let fv = (m.field)(&input(t), &y);
        for k in 0..m.state_dim {
            let diff = (yp[k] - ym[k]) / (2.0 * h);
            worst = worst.max((diff - fv[k]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wiring::{Interface, WiringDiagram};

    fn square_field() -> OdeMachine {
        // One closed state, no inputs: s' = s^2.
        let field = vec![Poly::var(1, 0).mul(&Poly::var(1, 0))];
        OdeMachine::from_polys(vec![], vec![("y".into(), 1)], 1, field, vec![Poly::var(1, 0)])
            .unwrap()
    }

    #[test]
    fn poly_compose_matches_eval() {
        // p(x0, x1) = x0^2 + 3 x1; substitute x0 = u + v, x1 = u v.
        let p = Poly::var(2, 0)
            .mul(&Poly::var(2, 0))
            .add(&Poly::var(2, 1).scale(3.0));
        let u_plus_v = Poly::var(2, 0).add(&Poly::var(2, 1));
        let uv = Poly::var(2, 0).mul(&Poly::var(2, 1));
        let q = p.compose(&[u_plus_v, uv]);
        for (u, v) in [(0.5, -1.25), (2.0, 3.0), (0.0, 0.0)] {
            assert_eq!(q.eval(&[u, v]), (u + v) * (u + v) + 3.0 * (u * v));
        }
    }

    #[test]
    fn square_field_blows_up_before_one() {
        let m = square_field();
        let traj = integrate(&m, &|_| vec![], &[1.0], 0.0, 1.2, 1e-4, Method::Rk4);
        let (t, mag) = traj.blowup.expect("must blow up");
        assert!(t < 1.0, "blow-up at {t}");
        assert!(mag > BLOWUP_THRESHOLD);
    }

    #[test]
    fn square_field_tracks_exact_solution() {
        let m = square_field();
        let traj = integrate(&m, &|_| vec![], &[1.0], 0.0, 0.9, 1e-4, Method::Rk4);
        let last = traj.states.last().unwrap()[0];
        assert!((last - 10.0).abs() / 10.0 < 0.05, "got {last}");
        assert!(traj.blowup.is_none());
    }

    #[test]
    fn quadratic_candidates_pass_residual_check() {
        // s' = 2 sqrt(|s|): both s = 0 and s = (t - a)^2 solve it.
        let field: Field = Arc::new(|_x: &[f64], s: &[f64]| vec![2.0 * s[0].abs().sqrt()]);
        let m = OdeMachine {
            inputs: vec![],
            outputs: vec![("y".into(), 1)],
            state_dim: 1,
            field,
            readout: Arc::new(|s: &[f64]| s.to_vec()),
            field_poly: None,
            readout_poly: None,
        };
        let a = 0.25;
        let zero = solution_residual(&m, &|_| vec![], &|_| vec![0.0], 0.0, a, 100, 1e-3);
        assert!(zero <= 1e-6, "zero branch residual {zero}");
        let parab = solution_residual(
            &m,
            &|_| vec![],
            &|t| vec![(t - a) * (t - a)],
            a,
            a + 1.0,
            100,
            1e-3,
        );
        assert!(parab <= 1e-6, "parabola residual {parab}");
    }

    #[test]
    fn euler_step_commutes_with_feedback_wiring() {
        // s' = x, readout s; feed the readout back as the input.
        let m = OdeMachine::from_polys(
            vec![("x".into(), 1)],
            vec![("o".into(), 1)],
            1,
            vec![Poly::var(2, 0)],
            vec![Poly::var(1, 0).scale(2.0)],
        )
        .unwrap();
        let outer = Interface::new("y").output("z", PortType::Euclidean(1));
        let wd = WiringDiagram::new(m.interface("x"), outer)
            .feed_from_inner("x", "o")
            .read_from("z", "o");
        let eps = 0.125;
        let a = euler(&rewire(&wd, &m).unwrap(), eps);
        let b = rewire_step(&wd, &euler(&m, eps)).unwrap();
        for s in [-2.0, 0.0, 0.7, 31.25] {
            assert_eq!((a.update)(&[], &[s]), (b.update)(&[], &[s]));
            assert_eq!((a.readout)(&[s]), (b.readout)(&[s]));
        }
    }

    #[test]
    fn rewired_polynomial_form_matches_closure() {
        let m = OdeMachine::from_polys(
            vec![("x".into(), 1)],
            vec![("o".into(), 1)],
            1,
            vec![Poly::var(2, 0).mul(&Poly::var(2, 1)).add(&Poly::constant(2, 1.0))],
            vec![Poly::var(1, 0).mul(&Poly::var(1, 0))],
        )
        .unwrap();
        let outer = Interface::new("y").output("z", PortType::Euclidean(1));
        let wd = WiringDiagram::new(m.interface("x"), outer)
            .feed_from_inner("x", "o")
            .read_from("z", "o");
        let g = rewire(&wd, &m).unwrap();
        let fp = g.field_poly.as_ref().unwrap();
        for s in [-1.5, 0.0, 2.25] {
            assert_eq!(fp[0].eval(&[s]), (g.field)(&[], &[s])[0]);
        }
        // Substituted symbolically: s^2 * s + 1.
        assert_eq!(fp[0].eval(&[2.0]), 9.0);
    }
}
