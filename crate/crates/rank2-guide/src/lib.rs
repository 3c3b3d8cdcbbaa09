// mdbook cannot run Rust examples against workspace crates, so each chapter
// is pulled in as a module doc and `cargo test --doc` runs the snippets.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod chapter0 {}

#[doc = include_str!("../../../book/src/elliptic.md")]
pub mod chapter1 {}

#[doc = include_str!("../../../book/src/diffop.md")]
pub mod chapter2 {}

#[doc = include_str!("../../../book/src/construction.md")]
pub mod chapter3 {}

#[doc = include_str!("../../../book/src/baker.md")]
pub mod chapter4 {}

#[doc = include_str!("../../../book/src/flows.md")]
pub mod chapter5 {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod chapter6 {}
