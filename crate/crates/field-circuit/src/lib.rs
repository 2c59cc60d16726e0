//! Transient field-circuit simulation of a transformer feeding a diode
//! bridge rectifier.
//!
//! The circuit is written in modified nodal analysis, the transformer as a
//! 2D magnetostatic finite element model with Brauer reluctivity, and both
//! are coupled through winding functions into one DAE. Implicit Euler and
//! Newton's method advance the monolithic system in time.
//!
//! * [`netlist`], [`diode`]: circuit topology and the Shockley diode
//! * [`mesh`], [`fem`], [`brauer`]: geometry, P1 assembly, reluctivity
//! * [`coupled`], [`linsolve`]: residual, Jacobian and bordered band solver
//! * [`transient`]: time stepping
//! * [`model`]: the benchmark as a parametric model for collocation
//! * [`variants`]: linear test configurations with closed-form behaviour

pub mod brauer;
pub mod coupled;
pub mod diode;
pub mod error;
pub mod fem;
pub mod linsolve;
pub mod mesh;
pub mod model;
pub mod netlist;
pub mod transient;
pub mod variants;
