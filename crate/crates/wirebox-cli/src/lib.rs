//! Command-line front end for the wirebox library.
//!
//! A system lives in one description file: port types, boxes, a wiring
//! forest, machine bindings, optional contracts, and an optional run block.
//! The binary exposes four commands over such files:
//!
//! - `compose` flattens the wiring and prints the composite interface and,
//!   when every box is bound, the composite machine.
//! - `simulate` drives a composite with the inputs from the run block and
//!   prints a trace table.
//! - `check` reports totality, determinism, and inertia verdicts for each
//!   machine and each composite.
//! - `contract` checks machines against their bound contracts and composes
//!   the contracts along the wiring.
//!
//! The CLI adds no semantics of its own; every printed value is reproducible
//! by direct library calls.

pub mod commands;
pub mod format;
pub mod model;
