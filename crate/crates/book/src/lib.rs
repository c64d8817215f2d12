//! Compiles and runs every code sample in the guide under `book/src` as a
//! doc-test, so the book cannot drift from the library.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}

#[doc = include_str!("../../../book/src/qubit.md")]
pub mod qubit {}

#[doc = include_str!("../../../book/src/channel.md")]
pub mod channel {}

#[doc = include_str!("../../../book/src/protocol.md")]
pub mod protocol {}

#[doc = include_str!("../../../book/src/estimation.md")]
pub mod estimation {}

#[doc = include_str!("../../../book/src/fisher.md")]
pub mod fisher {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
