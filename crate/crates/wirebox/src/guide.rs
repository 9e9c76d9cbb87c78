//! The user guide, one module per chapter. Each chapter's code blocks run
//! as doc-tests, so the book in `book/` cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/wiring.md")]
pub mod wiring {}

#[doc = include_str!("../../../book/src/moore.md")]
pub mod moore {}

#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}

#[doc = include_str!("../../../book/src/machines.md")]
pub mod machines {}

#[doc = include_str!("../../../book/src/ode.md")]
pub mod ode {}

#[doc = include_str!("../../../book/src/timed.md")]
pub mod timed {}

#[doc = include_str!("../../../book/src/contracts.md")]
pub mod contracts {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
