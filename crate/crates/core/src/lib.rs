//! Boolean polynomial minimization through a quartic-penalty gradient flow.
//!
//! A polynomial over `{0,1}^n` is rewritten over `{-1,1}^n`, relaxed with the
//! penalty `(1/4ε) Σ (v_i² - 1)² + (c/2) ‖v‖²`, and driven to a steady state by
//! one of three time-stepping schemes. The [`oracle`] module supplies exact
//! answers for small instances and the [`harness`] module runs seeded
//! experiments end to end.

pub mod harness;
pub mod integrators;
pub mod model;
pub mod oracle;
pub mod polynomial;
pub mod rng;
pub mod scalar;
