//! Category and monoidal laws for wiring diagrams on randomized instances:
//! composition is associative and unital on the nose, tensor satisfies
//! interchange, and flattening a nested assembly agrees with composing
//! stage by stage.

mod common;

use common::{alphabet, random_wiring_over, rng};
use rand::prelude::*;
use wirebox::wiring::{flatten, Interface, PortType, WiringDiagram, WiringTree};

fn random_interface(r: &mut impl Rng, label: &str) -> Interface {
    let mut b = Interface::new(label);
    for i in 0..r.gen_range(0..=3) {
        b = b.input(&format!("p{i}"), PortType::Finite(alphabet(r, 4)));
    }
    for i in 0..r.gen_range(0..=3) {
        b = b.output(&format!("q{i}"), PortType::Finite(alphabet(r, 4)));
    }
    b
}

#[test]
fn composition_is_associative_on_random_triples() {
    let mut r = rng(0xA550C);
    for case in 0..300 {
        let x = random_interface(&mut r, "X");
        let phi = random_wiring_over(&mut r, &x, "Y");
        let psi = random_wiring_over(&mut r, &phi.outer, "Z");
        let omega = random_wiring_over(&mut r, &psi.outer, "W");
        let left = phi.then(&psi).unwrap().then(&omega).unwrap();
        let right = phi.then(&psi.then(&omega).unwrap()).unwrap();
        assert_eq!(left, right, "case {case}");
        assert!(left.validate().ok(), "case {case}");
    }
}

#[test]
fn identity_diagrams_are_units() {
    let mut r = rng(0x1D);
    for case in 0..300 {
        let x = random_interface(&mut r, "X");
        let phi = random_wiring_over(&mut r, &x, "Y");
        let id_x = WiringDiagram::identity(&x);
        let id_y = WiringDiagram::identity(&phi.outer);
        assert_eq!(id_x.then(&phi).unwrap(), phi, "case {case}: left unit");
        assert_eq!(phi.then(&id_y).unwrap(), phi, "case {case}: right unit");
    }
}

#[test]
fn tensor_satisfies_interchange() {
    let mut r = rng(0x1E7C);
    for case in 0..200 {
        let x1 = random_interface(&mut r, "X1");
        let x2 = random_interface(&mut r, "X2");
        let phi1 = random_wiring_over(&mut r, &x1, "Y1");
        let phi2 = random_wiring_over(&mut r, &x2, "Y2");
        let psi1 = random_wiring_over(&mut r, &phi1.outer, "Z1");
        let psi2 = random_wiring_over(&mut r, &phi2.outer, "Z2");
        let seq_then_tensor = WiringDiagram::tensor_all(&[
            &phi1.then(&psi1).unwrap(),
            &phi2.then(&psi2).unwrap(),
        ])
        .unwrap();
        let tensor_then_seq = WiringDiagram::tensor_all(&[&phi1, &phi2])
            .unwrap()
            .then(&WiringDiagram::tensor_all(&[&psi1, &psi2]).unwrap())
            .unwrap();
        assert_eq!(seq_then_tensor, tensor_then_seq, "case {case}");
    }
}

#[test]
fn tensor_unit_is_the_empty_box() {
    let i = Interface::unit();
    assert!(i.inputs.is_empty() && i.outputs.is_empty());
    let id = WiringDiagram::identity(&i);
    assert_eq!(id.then(&id).unwrap(), id);
}

#[test]
fn flatten_agrees_with_stagewise_composition() {
    let mut r = rng(0xF1A7);
    for case in 0..100 {
        // Two leaves, tensored, wired twice.
        let x1 = random_interface(&mut r, "X1");
        let x2 = random_interface(&mut r, "X2");
        let tensored =
            Interface::tensor_all(&[&x1, &x2]).expect("distinct labels");
        let phi = random_wiring_over(&mut r, &tensored, "Y");
        let psi = random_wiring_over(&mut r, &phi.outer, "Z");
        let tree = WiringTree::Wire(
            Box::new(WiringTree::Wire(
                Box::new(WiringTree::Tensor(vec![
                    WiringTree::Leaf(x1.clone()),
                    WiringTree::Leaf(x2.clone()),
                ])),
                phi.clone(),
            )),
            psi.clone(),
        );
        let flat = flatten(&tree).unwrap();
        assert_eq!(flat.leaves.len(), 2, "case {case}");
        // The flattened diagram equals identity-then-phi-then-psi, which is
        // phi-then-psi by the unit law.
        assert_eq!(flat.diagram, phi.then(&psi).unwrap(), "case {case}");
        // Origins point back into the leaves by name.
        for (port, (leaf, orig)) in &flat.origin {
            let leaf_box = [&x1, &x2][*leaf];
            assert!(
                leaf_box.input_port(orig).is_some() || leaf_box.output_port(orig).is_some(),
                "case {case}: origin {port} -> {orig} missing"
            );
        }
    }
}
