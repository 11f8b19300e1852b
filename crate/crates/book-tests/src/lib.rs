//! Keeps the guide honest: every chapter under `book/src/` is attached to a
//! module as its doc comment, so `cargo test` compiles and runs each
//! ` ```rust ` snippet in the book against the current library. A snippet
//! that drifts from the API, or asserts something the code no longer does,
//! fails the build. One module per chapter keeps failures attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/noise-model.md")]
pub mod noise_model {}

#[doc = include_str!("../../../book/src/channel.md")]
pub mod channel {}

#[doc = include_str!("../../../book/src/fisher.md")]
pub mod fisher {}

#[doc = include_str!("../../../book/src/sequential.md")]
pub mod sequential {}

#[doc = include_str!("../../../book/src/architectures.md")]
pub mod architectures {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
