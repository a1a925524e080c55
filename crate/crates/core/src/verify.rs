//! Exhaustive comparison of an adder circuit against the reference arithmetic.

use serde::Serialize;
use thiserror::Error;

use crate::builders::{RegisterLayout, Role};
use crate::circuit::Circuit;
use crate::oracle::{self, ModAddInstance};
use crate::sim::{run_exact, BasisState, SimError};

/// First input on which a circuit disagrees with the reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub n: u32,
    pub a: u128,
    pub b: u128,
    pub role: Role,
    pub expected: u128,
    pub got: u128,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("mismatch at n={} a={} b={}: {:?} register expected {} got {}", .0.n, .0.a, .0.b, .0.role, .0.expected, .0.got)]
    Mismatch(Counterexample),
    #[error("layout covers {layout} wires, circuit has {circuit}")]
    WidthMismatch { layout: usize, circuit: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Runs every valid `(a, b)` through `circuit` and checks the modulo sum, the
/// regular sum and, when the layout says so, the restored `b` register.
/// Returns the number of inputs checked.
pub fn verify_layout(circuit: &Circuit, layout: &RegisterLayout) -> Result<u64, VerifyError> {
    if layout.width() != circuit.width() {
        return Err(VerifyError::WidthMismatch {
            layout: layout.width(),
            circuit: circuit.width(),
        });
    }
    let n = layout.n;
    let mut checked = 0;
    for (a, b) in oracle::valid_inputs(n) {
        let inst = ModAddInstance::new(n, a, b).expect("valid input");
        let mut state = BasisState::zeros(circuit.width());
        state.write(&layout.a_wires, a);
        state.write(&layout.b_wires, b);
        let out = run_exact(circuit, &state)?;
        let mut checks = vec![(Role::Mod, oracle::mod_add_plus_one(&inst)), (Role::Sum, a + b)];
        if layout.preserved_roles.contains(&Role::B) {
            checks.push((Role::B, b));
        }
        for (role, expected) in checks {
            let got = out.read(layout.wires(role));
            if got != expected {
                return Err(VerifyError::Mismatch(Counterexample {
                    n,
                    a,
                    b,
                    role,
                    expected,
                    got,
                }));
            }
        }
        checked += 1;
    }
    Ok(checked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_qma, AdderVariant};
    use crate::circuit::Gate;

    #[test]
    fn built_adders_pass() {
        for v in AdderVariant::ALL {
            let built = build_qma(v, 1).unwrap();
            assert_eq!(verify_layout(&built.circuit, &built.layout), Ok(9));
        }
    }

    #[test]
    fn corrupted_adder_reports_first_counterexample() {
        let built = build_qma(AdderVariant::Qma2, 2).unwrap();
        let mut bad = built.circuit.clone();
        bad.append(Gate::x(built.layout.mod_wires[0])).unwrap();
        let err = verify_layout(&bad, &built.layout).unwrap_err();
        // (0 + 0 + 1) mod 5 = 1, with the low bit flipped reads 0.
        assert_eq!(
            err,
            VerifyError::Mismatch(Counterexample {
                n: 2,
                a: 0,
                b: 0,
                role: Role::Mod,
                expected: 1,
                got: 0
            })
        );
    }

    #[test]
    fn width_mismatch() {
        let built = build_qma(AdderVariant::Qma3, 2).unwrap();
        let narrow = Circuit::new(3, "x");
        assert!(matches!(
            verify_layout(&narrow, &built.layout),
            Err(VerifyError::WidthMismatch { circuit: 3, .. })
        ));
    }
}
