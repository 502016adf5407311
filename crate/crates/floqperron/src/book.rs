//! Compiles the guide's code snippets as doctests (`cargo test --doc`),
//! keeping the book in `book/` in lockstep with the library. One module per
//! chapter so a failing snippet names its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/spectra.md")]
mod spectra {}

#[doc = include_str!("../../../book/src/averaging.md")]
mod averaging {}

#[doc = include_str!("../../../book/src/floquet-ode.md")]
mod floquet_ode {}

#[doc = include_str!("../../../book/src/discrete.md")]
mod discrete {}

#[doc = include_str!("../../../book/src/cell-cycle.md")]
mod cell_cycle {}

#[doc = include_str!("../../../book/src/sweeps.md")]
mod sweeps {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
