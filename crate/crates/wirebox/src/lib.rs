//! Machines wired into diagrams.
//!
//! The pieces: boxes with typed ports and wiring diagrams between them
//! ([`wiring`]); finite state machines filling those boxes ([`moore`]);
//! continuous-time machines given by vector fields ([`ode`]); graphs as
//! discrete behaviors with restriction and gluing ([`graph`], [`phased`]);
//! machines presented as spans with totality, determinism, and inertia
//! checks ([`span`]); timed traces with dwell durations and their executors
//! ([`timed`]); and safety contracts closed under restriction
//! ([`contract`]).
//!
//! Everything composes along wiring diagrams, and composition commutes with
//! simulation: that equation is the load-bearing wall, and the test suite
//! checks it against brute-force oracles rather than trusting the algebra.

pub mod contract;
pub mod graph;
pub mod moore;
pub mod ode;
pub mod phased;
pub mod span;
pub mod timed;
pub mod wiring;
