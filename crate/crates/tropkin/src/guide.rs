//! Doc-test bridge for the book: every fenced Rust snippet in `book/src/`
//! runs under `cargo test --doc`, which keeps the guide in sync with the
//! crate.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/model-files.md")]
mod model_files {}

#[doc = include_str!("../../../book/src/renormalization.md")]
mod renormalization {}

#[doc = include_str!("../../../book/src/tropicalization.md")]
mod tropicalization {}

#[doc = include_str!("../../../book/src/equilibration.md")]
mod equilibration {}

#[doc = include_str!("../../../book/src/simulation.md")]
mod simulation {}

#[doc = include_str!("../../../book/src/cell-cycle.md")]
mod cell_cycle {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
