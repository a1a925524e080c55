//! Quantum modulo `(2^n + 1)` adders.
//!
//! Builds the four adder designs QMA1–QMA4 as reversible/dynamic gate lists,
//! checks them against brute-force arithmetic, tallies their resources, and
//! measures their error under a stochastic bit-flip noise model.
//!
//! ```
//! use qma_core::builders::{build_qma, AdderVariant};
//! use qma_core::analyzer::analyze;
//!
//! let built = build_qma(AdderVariant::Qma2, 4).unwrap();
//! let report = analyze(&built.circuit);
//! assert_eq!((report.width, report.cnot_count, report.toffoli_count), (16, 25, 14));
//! ```

pub mod analyzer;
pub mod builders;
pub mod circuit;
pub mod metrics;
pub mod oracle;
pub mod qasm;
pub mod sim;
pub mod verify;

pub use analyzer::{analyze, ResourceReport};
pub use builders::{build_qma, AdderVariant, BuiltAdder, RegisterLayout};
pub use circuit::{Circuit, Gate, GateKind, Wire};
pub use sim::{BasisState, NoiseModel, ResetModel};
