//! Laws of behaviors over real time: sampled windows restrict functorially,
//! dwell-and-jump traces normalize idempotently and glue back after cutting,
//! executor runs are genuine lifts of their input, and the delay shifts its
//! input by exactly its lag.

mod common;

use common::{random_graph, rng};
use num_rational::Rational64;
use num_traits::Signed;
use rand::prelude::*;
use wirebox::graph::{complete, paths, Graph};
use wirebox::phased::{sample_length, PhasedSection};
use wirebox::timed::{apply_hom, delay_output, execute, lts_machine, totalize, TimedTrace};

fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

/// A random rational in [0, max], exact (24ths of the range).
fn rq(r: &mut impl Rng, max: Rational64) -> Rational64 {
    max * q(r.gen_range(0..=24), 24)
}

fn refl_name(g: &Graph, node: &str) -> String {
    let v = g.node_index(node).unwrap();
    g.edges[g.refl_edge(v).unwrap()].name.clone()
}

fn random_trace(r: &mut impl Rng, g: &Graph) -> TimedTrace {
    common::random_timed_trace(r, g)
}

fn reflexive_test_graph(r: &mut impl Rng) -> Graph {
    random_graph(r, 4, 6).free_reflexive()
}

#[test]
fn sampled_window_restriction_is_functorial() {
    // Restricting a sampled window twice lands on the same carrier path and
    // phase as restricting once, for random rational offsets and lengths.
    let g = complete(&["a", "b", "c"]);
    let mut r = rng(0x5A3B);
    for case in 0..500 {
        let phase = q(r.gen_range(0..12), 12);
        let ell = q(r.gen_range(0..=40), 8);
        let n = sample_length(phase, ell);
        let all = paths(&g, n);
        let path = all[r.gen_range(0..all.len())].clone();
        let sec = PhasedSection { phase, ell, path };
        sec.validate(&g).unwrap();
        let p1 = rq(&mut r, ell);
        let l1 = rq(&mut r, ell - p1);
        let p2 = rq(&mut r, l1);
        let l2 = rq(&mut r, l1 - p2);
        let twice = sec.restrict_at(p1, l1).unwrap().restrict_at(p2, l2).unwrap();
        let once = sec.restrict_at(p1 + p2, l2).unwrap();
        assert_eq!(twice, once, "case {case}: p1={p1} l1={l1} p2={p2} l2={l2}");
    }
}

#[test]
fn trace_restriction_is_functorial() {
    let mut r = rng(0x7FAC);
    for case in 0..200 {
        let g = reflexive_test_graph(&mut r);
        let t = random_trace(&mut r, &g);
        let len = t.len();
        let p1 = rq(&mut r, len);
        let l1 = rq(&mut r, len - p1);
        let p2 = rq(&mut r, l1);
        let l2 = rq(&mut r, l1 - p2);
        let twice = t.restrict(&g, p1, l1).unwrap().restrict(&g, p2, l2).unwrap();
        let once = t.restrict(&g, p1 + p2, l2).unwrap();
        assert_eq!(twice, once, "case {case}: p1={p1} l1={l1} p2={p2} l2={l2}");
    }
}

#[test]
fn normalization_is_idempotent_and_preserves_shape() {
    let mut r = rng(0x1DE9);
    for _ in 0..200 {
        let g = reflexive_test_graph(&mut r);
        let t = random_trace(&mut r, &g);
        let n1 = t.normalize(&g).unwrap();
        assert_eq!(n1.normalize(&g).unwrap(), n1);
        assert_eq!(n1.len(), t.len());
        assert_eq!(n1.start, t.start);
        assert_eq!(n1.end, t.end);
    }
}

#[test]
fn cutting_and_gluing_are_inverse_up_to_normalization() {
    let mut r = rng(0x6C0E);
    for case in 0..200 {
        let g = reflexive_test_graph(&mut r);
        let t = random_trace(&mut r, &g);
        let c = rq(&mut r, t.len());
        let a = t.restrict(&g, q(0, 1), c).unwrap();
        let b = t.restrict(&g, c, t.len() - c).unwrap();
        let glued = a.glue(&g, &b).unwrap();
        assert_eq!(
            glued.normalize(&g).unwrap(),
            t.normalize(&g).unwrap(),
            "case {case}: cut at {c}"
        );
    }
}

#[test]
fn executor_runs_lie_over_their_input() {
    // Random total transition systems: the run's state trace must project to
    // the input trace on the nose, and the published output must be the
    // image of the state trace.
    let mut r = rng(0x50FD);
    for _ in 0..60 {
        let nl = r.gen_range(1..=3);
        let ns = r.gen_range(1..=3);
        let labels: Vec<String> = (0..nl).map(|i| format!("l{i}")).collect();
        let states: Vec<String> = (0..ns).map(|i| format!("s{i}")).collect();
        let mut base = Vec::new();
        for l in 0..nl {
            for s in 0..ns {
                if r.gen_bool(0.5) {
                    base.push((l, s, r.gen_range(0..ns)));
                }
            }
        }
        let trans = totalize(nl, ns, &base);
        let outputs: Vec<usize> = (0..ns).map(|_| r.gen_range(0..2)).collect();
        let m = lts_machine(
            &labels.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            &states.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            &trans,
            &outputs,
            &["lo", "hi"],
        )
        .unwrap();
        let word: Vec<String> =
            (0..r.gen_range(1..=5)).map(|_| labels[r.gen_range(0..nl)].clone()).collect();
        let input = TimedTrace {
            start: refl_name(&m.input, "*"),
            segments: vec![("*".to_string(), q(1, 1)); word.len() + 1],
            jumps: word,
            end: refl_name(&m.input, "*"),
        };
        let init = states[r.gen_range(0..ns)].clone();
        let run = execute(&m, &input, &init).unwrap();
        run.state.validate(&m.state).unwrap();
        assert_eq!(apply_hom(&m.read, &run.state).unwrap(), input);
        assert_eq!(apply_hom(&m.show, &run.state).unwrap(), run.output);
        assert_eq!(run.state.segments[0].0, init);
    }
}

#[test]
fn delayed_output_is_the_input_shifted_by_the_lag() {
    let mut r = rng(0xDE1A);
    for case in 0..150 {
        let g = reflexive_test_graph(&mut r);
        let t = random_trace(&mut r, &g);
        let len = t.len();
        // Keep the lag under half the window so both comparisons below have
        // room: the output is only as long as the input half.
        let eps = rq(&mut r, len * q(1, 2) - q(1, 12)) + q(1, 24);
        assert!(eps > q(0, 1) && eps < len * q(1, 2));
        let history = t.restrict(&g, q(0, 1), eps).unwrap();
        let input = t.restrict(&g, eps, len - eps).unwrap();
        let out = delay_output(&g, eps, &history, &input).unwrap();
        assert_eq!(out.len(), input.len(), "case {case}");
        // The first `eps` of the output replays the history...
        assert_eq!(
            out.restrict(&g, q(0, 1), eps).unwrap().normalize(&g).unwrap(),
            history.normalize(&g).unwrap(),
            "case {case}"
        );
        // ...and from `eps` on, output(t) = input(t - eps).
        let tail = (len - eps) - eps;
        if !tail.is_negative() {
            assert_eq!(
                out.restrict(&g, eps, tail).unwrap().normalize(&g).unwrap(),
                input.restrict(&g, q(0, 1), tail).unwrap().normalize(&g).unwrap(),
                "case {case}"
            );
        }
    }
}
