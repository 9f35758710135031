//! Random covering of the discrete torus `Z/nZ` by arcs with random lengths, and
//! the Mandelbrot–Shepp covering of the circle it converges to.
//!
//! * [`tails`]: radius laws `f(r) = P(R >= r)` and their partial sums.
//! * [`engine`]: the cover-time simulator and exact vacancy probabilities.
//! * [`shepp`]: truncated Poisson configurations on the circle, their vacant set
//!   and the two lattice projections.
//! * [`stats`]: empirical distributions, KS distances, reference laws and a
//!   Galton–Watson simulator.
//! * [`experiments`]: phase presets and reproducible CSV/JSON output.
//!
//! ```
//! use covering::{engine::run_to_cover, tails::TailFunction};
//!
//! let tail: TailFunction = "geom:0.5".parse().unwrap();
//! let run = run_to_cover(&tail, 1_000, 7).unwrap();
//! assert!(run.tau >= 1 && run.time > 0.0);
//! ```

pub mod engine;
pub mod error;
pub mod experiments;
pub mod rng;
pub mod shepp;
pub mod stats;
pub mod tails;

pub use error::{Error, Result};
pub use rng::derive_seed;
pub use tails::TailFunction;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tails.md")]
    mod tails {}
    #[doc = include_str!("../../../book/src/torus.md")]
    mod torus {}
    #[doc = include_str!("../../../book/src/phases.md")]
    mod phases {}
    #[doc = include_str!("../../../book/src/circle.md")]
    mod circle {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
