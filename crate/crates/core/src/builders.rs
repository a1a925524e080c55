//! Gadget and adder constructors.
//!
//! Every adder takes `a` and `b` as `(n+1)`-bit registers and produces the
//! regular sum `a + b` on `n+2` wires together with the modulo sum
//! `(a + b + 1) mod (2^n + 1)` on `n+1` wires:
//!
//! 1. a ripple adder writes `a + b` over the `a` register, with the carry-out
//!    on its own wire, and reverse-computes `b`;
//! 2. a NOR gadget computes `!(s[n+1] | s[n])` onto a zero wire;
//! 3. that bit is added to `s[0..n] ++ [s[n+1]]` (bit `n` skipped by wiring).
//!
//! QMA1 uses a second ripple adder for step 3, QMA2 a half-adder increment.
//! QMA3 resets the spent `b` register and runs steps 2 and 3 on it; QMA4 is
//! QMA3 with every reset doubled.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, Wire};
use crate::oracle::MAX_N;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error("n must be >= 1")]
    InvalidN,
    #[error("n = {0} exceeds the supported maximum {MAX_N}")]
    NTooLarge(u32),
    #[error("register length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("ripple adder needs at least 2 bits, got {0}")]
    TooNarrow(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdderVariant {
    Qma1,
    Qma2,
    Qma3,
    Qma4,
}

impl AdderVariant {
    pub const ALL: [AdderVariant; 4] = [
        AdderVariant::Qma1,
        AdderVariant::Qma2,
        AdderVariant::Qma3,
        AdderVariant::Qma4,
    ];

    /// Reset-free variants.
    pub fn is_static(self) -> bool {
        matches!(self, AdderVariant::Qma1 | AdderVariant::Qma2)
    }
}

impl fmt::Display for AdderVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdderVariant::Qma1 => "QMA1",
            AdderVariant::Qma2 => "QMA2",
            AdderVariant::Qma3 => "QMA3",
            AdderVariant::Qma4 => "QMA4",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown adder variant `{0}` (expected qma1..qma4)")]
pub struct UnknownVariant(pub String);

impl FromStr for AdderVariant {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "qma1" | "1" => Ok(AdderVariant::Qma1),
            "qma2" | "2" => Ok(AdderVariant::Qma2),
            "qma3" | "3" => Ok(AdderVariant::Qma3),
            "qma4" | "4" => Ok(AdderVariant::Qma4),
            _ => Err(UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    A,
    B,
    Sum,
    Mod,
}

/// Which wires carry which values. `a_wires`/`b_wires` are read at the start,
/// `sum_wires`/`mod_wires` at the end; both lists are LSB first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    pub n: u32,
    pub a_wires: Vec<Wire>,
    pub b_wires: Vec<Wire>,
    pub sum_wires: Vec<Wire>,
    pub mod_wires: Vec<Wire>,
    /// Wires that start in |0⟩ (everything outside `a` and `b`).
    pub ancilla_wires: Vec<Wire>,
    /// Roles whose wires hold their documented value once the circuit ends.
    pub preserved_roles: BTreeSet<Role>,
}

impl RegisterLayout {
    pub fn width(&self) -> usize {
        self.a_wires.len() + self.b_wires.len() + self.ancilla_wires.len()
    }

    pub fn wires(&self, role: Role) -> &[Wire] {
        match role {
            Role::A => &self.a_wires,
            Role::B => &self.b_wires,
            Role::Sum => &self.sum_wires,
            Role::Mod => &self.mod_wires,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltAdder {
    pub circuit: Circuit,
    pub layout: RegisterLayout,
    pub variant: AdderVariant,
}

fn check_distinct(wires: &[Wire]) -> Result<(), BuildError> {
    let mut seen = BTreeSet::new();
    for &w in wires {
        if !seen.insert(w) {
            return Err(CircuitError::DuplicateOperand { wire: w }.into());
        }
    }
    Ok(())
}

/// `target ← !(x | y)` for a zero target: one Toffoli between two pairs of
/// NOT gates on the controls.
pub fn build_nor_gadget(x: Wire, y: Wire, target: Wire) -> Result<Vec<Gate>, BuildError> {
    check_distinct(&[x, y, target])?;
    Ok(vec![
        Gate::x(x),
        Gate::x(y),
        Gate::ccx(x, y, target),
        Gate::x(x),
        Gate::x(y),
    ])
}

/// Ancilla-free ripple-carry adder without input carry.
///
/// `|a⟩|b⟩|0⟩ → |(a+b) mod 2^w⟩|b⟩|carry⟩` where `w = a.len()`. Uses
/// `2w - 1` Toffoli and `5(w - 1)` CNOT gates. The carry chain is built inside
/// the `b` register and unwound again, so `b` comes back unchanged.
pub fn build_full_adder(a: &[Wire], b: &[Wire], carry_out: Wire) -> Result<Vec<Gate>, BuildError> {
    let w = a.len();
    if b.len() != w {
        return Err(BuildError::LengthMismatch {
            expected: w,
            got: b.len(),
        });
    }
    if w < 2 {
        return Err(BuildError::TooNarrow(w));
    }
    let mut all: Vec<Wire> = a.iter().chain(b).copied().collect();
    all.push(carry_out);
    check_distinct(&all)?;

    let mut g = Vec::with_capacity(7 * w);
    for i in 1..w {
        g.push(Gate::cx(b[i], a[i]));
    }
    g.push(Gate::cx(b[w - 1], carry_out));
    for i in (1..w - 1).rev() {
        g.push(Gate::cx(b[i], b[i + 1]));
    }
    for i in 0..w - 1 {
        g.push(Gate::ccx(a[i], b[i], b[i + 1]));
    }
    g.push(Gate::ccx(a[w - 1], b[w - 1], carry_out));
    for i in (1..w).rev() {
        g.push(Gate::cx(b[i], a[i]));
        g.push(Gate::ccx(a[i - 1], b[i - 1], b[i]));
    }
    for i in 1..w - 1 {
        g.push(Gate::cx(b[i], b[i + 1]));
    }
    for i in 0..w {
        g.push(Gate::cx(b[i], a[i]));
    }
    Ok(g)
}

/// Adds the single bit on `c_wire` to the value on `v`.
///
/// The result `(v + c) mod 2^w` ends up on `[c_wire, fresh...]`, LSB first;
/// `v` is left untouched. Each carry is written to the next fresh wire
/// before the current wire is turned into its sum bit.
pub fn build_half_adder_increment(v: &[Wire], c_wire: Wire, fresh: &[Wire]) -> Result<Vec<Gate>, BuildError> {
    let w = v.len();
    if w == 0 {
        return Err(BuildError::TooNarrow(0));
    }
    if fresh.len() != w - 1 {
        return Err(BuildError::LengthMismatch {
            expected: w - 1,
            got: fresh.len(),
        });
    }
    let mut all: Vec<Wire> = v.to_vec();
    all.push(c_wire);
    all.extend_from_slice(fresh);
    check_distinct(&all)?;

    let mut g = Vec::with_capacity(2 * w);
    let mut carry = c_wire;
    for i in 0..w - 1 {
        g.push(Gate::ccx(v[i], carry, fresh[i]));
        g.push(Gate::cx(v[i], carry));
        carry = fresh[i];
    }
    g.push(Gate::cx(v[w - 1], carry));
    Ok(g)
}

/// Builds one of the four modulo `2^n + 1` adders.
pub fn build_qma(variant: AdderVariant, n: u32) -> Result<BuiltAdder, BuildError> {
    if n == 0 {
        return Err(BuildError::InvalidN);
    }
    if n > MAX_N {
        return Err(BuildError::NTooLarge(n));
    }
    let w = n as usize + 1;
    let a: Vec<Wire> = (0..w).collect();
    let b: Vec<Wire> = (w..2 * w).collect();
    let carry = 2 * w;

    let mut sum_wires = a.clone();
    sum_wires.push(carry);
    // s[0..n] followed by s[n+1]
    let mut sum_prime: Vec<Wire> = a[..w - 1].to_vec();
    sum_prime.push(carry);

    let first_stage = build_full_adder(&a, &b, carry)?;
    let nor_inputs = (a[w - 1], carry);

    let (width, mod_wires, gates) = match variant {
        AdderVariant::Qma1 => {
            let z: Vec<Wire> = (2 * w + 1..3 * w + 1).collect();
            let msb = 3 * w + 1;
            let mut gates = first_stage;
            gates.extend(build_nor_gadget(nor_inputs.0, nor_inputs.1, z[0])?);
            gates.extend(build_full_adder(&z, &sum_prime, msb)?);
            (3 * w + 2, z, gates)
        }
        AdderVariant::Qma2 => {
            let m: Vec<Wire> = (2 * w + 1..3 * w + 1).collect();
            let mut gates = first_stage;
            gates.extend(build_nor_gadget(nor_inputs.0, nor_inputs.1, m[0])?);
            gates.extend(build_half_adder_increment(&sum_prime, m[0], &m[1..])?);
            (3 * w + 1, m, gates)
        }
        AdderVariant::Qma3 | AdderVariant::Qma4 => {
            let resets_per_wire = if variant == AdderVariant::Qma4 { 2 } else { 1 };
            let mut gates = first_stage;
            for &wire in &b {
                for _ in 0..resets_per_wire {
                    gates.push(Gate::reset(wire));
                }
            }
            gates.extend(build_nor_gadget(nor_inputs.0, nor_inputs.1, b[0])?);
            gates.extend(build_half_adder_increment(&sum_prime, b[0], &b[1..])?);
            // One wire beyond a, b and the carry keeps the register count at
            // 2n+4; no gate acts on it.
            (2 * w + 2, b.clone(), gates)
        }
    };

    let mut circuit = Circuit::new(width, format!("{variant} n={n}"));
    circuit.extend(gates)?;

    let preserved_roles = if variant.is_static() {
        [Role::B, Role::Sum, Role::Mod].into_iter().collect()
    } else {
        [Role::Sum, Role::Mod].into_iter().collect()
    };
    let layout = RegisterLayout {
        n,
        a_wires: a,
        b_wires: b,
        sum_wires,
        mod_wires,
        ancilla_wires: (2 * w..width).collect(),
        preserved_roles,
    };
    Ok(BuiltAdder {
        circuit,
        layout,
        variant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;
    use crate::sim::{run_exact, BasisState};

    fn run_gates(width: usize, gates: Vec<Gate>, init: &[(Wire, bool)]) -> BasisState {
        let mut c = Circuit::new(width, "t");
        c.extend(gates).unwrap();
        let mut s = BasisState::zeros(width);
        for &(w, v) in init {
            s.set(w, v);
        }
        run_exact(&c, &s).unwrap()
    }

    #[test]
    fn nor_truth_table() {
        for (x, y) in [(false, false), (true, false), (false, true), (true, true)] {
            let out = run_gates(3, build_nor_gadget(0, 1, 2).unwrap(), &[(0, x), (1, y)]);
            assert_eq!(out.get(2), !(x || y));
            assert_eq!((out.get(0), out.get(1)), (x, y));
        }
        let g = build_nor_gadget(0, 1, 2).unwrap();
        assert_eq!(g.iter().filter(|g| g.kind() == GateKind::Toffoli).count(), 1);
        assert_eq!(g.iter().filter(|g| g.kind() == GateKind::X).count(), 4);
        assert!(matches!(build_nor_gadget(0, 0, 2), Err(BuildError::Circuit(_))));
    }

    fn adder_run(w: usize, a: u128, b: u128) -> (u128, u128, bool) {
        let aw: Vec<Wire> = (0..w).collect();
        let bw: Vec<Wire> = (w..2 * w).collect();
        let mut c = Circuit::new(2 * w + 1, "fa");
        c.extend(build_full_adder(&aw, &bw, 2 * w).unwrap()).unwrap();
        let mut s = BasisState::zeros(2 * w + 1);
        s.write(&aw, a);
        s.write(&bw, b);
        let out = run_exact(&c, &s).unwrap();
        (out.read(&aw), out.read(&bw), out.get(2 * w))
    }

    #[test]
    fn full_adder_examples() {
        assert_eq!(adder_run(5, 1, 1), (2, 1, false));
        assert_eq!(adder_run(5, 16, 16), (0, 16, true));
    }

    #[test]
    fn full_adder_exhaustive_w3() {
        for a in 0..8 {
            for b in 0..8 {
                let (s, b_out, c) = adder_run(3, a, b);
                assert_eq!(s | (u128::from(c) << 3), a + b);
                assert_eq!(b_out, b);
            }
        }
    }

    #[test]
    fn full_adder_gate_counts() {
        for w in 2..10 {
            let aw: Vec<Wire> = (0..w).collect();
            let bw: Vec<Wire> = (w..2 * w).collect();
            let g = build_full_adder(&aw, &bw, 2 * w).unwrap();
            let tof = g.iter().filter(|g| g.kind() == GateKind::Toffoli).count();
            let cx = g.iter().filter(|g| g.kind() == GateKind::Cnot).count();
            assert_eq!((tof, cx), (2 * w - 1, 5 * (w - 1)));
        }
    }

    #[test]
    fn full_adder_rejects_bad_registers() {
        assert_eq!(
            build_full_adder(&[0, 1], &[2], 3).unwrap_err(),
            BuildError::LengthMismatch { expected: 2, got: 1 }
        );
        assert!(matches!(build_full_adder(&[0, 1], &[1, 2], 3), Err(BuildError::Circuit(_))));
        assert_eq!(build_full_adder(&[0], &[1], 2).unwrap_err(), BuildError::TooNarrow(1));
    }

    fn increment_run(w: usize, v: u128, c: bool) -> (u128, u128) {
        let vw: Vec<Wire> = (0..w).collect();
        let cw = w;
        let fresh: Vec<Wire> = (w + 1..2 * w).collect();
        let mut circ = Circuit::new(2 * w, "ha");
        circ.extend(build_half_adder_increment(&vw, cw, &fresh).unwrap()).unwrap();
        let mut s = BasisState::zeros(2 * w);
        s.write(&vw, v);
        s.set(cw, c);
        let out = run_exact(&circ, &s).unwrap();
        let mut m_wires = vec![cw];
        m_wires.extend(&fresh);
        (out.read(&m_wires), out.read(&vw))
    }

    #[test]
    fn increment_examples() {
        assert_eq!(increment_run(5, 12, true), (13, 12));
        assert_eq!(increment_run(5, 7, false), (7, 7));
    }

    #[test]
    fn increment_exhaustive_w4() {
        for v in 0..16 {
            for c in [false, true] {
                assert_eq!(increment_run(4, v, c), ((v + u128::from(c)) % 16, v));
            }
        }
    }

    #[test]
    fn increment_gate_counts() {
        let g = build_half_adder_increment(&[0, 1, 2, 3, 4], 5, &[6, 7, 8, 9]).unwrap();
        assert_eq!(g.iter().filter(|g| g.kind() == GateKind::Toffoli).count(), 4);
        assert_eq!(g.iter().filter(|g| g.kind() == GateKind::Cnot).count(), 5);
        assert_eq!(
            build_half_adder_increment(&[0, 1, 2], 3, &[4]).unwrap_err(),
            BuildError::LengthMismatch { expected: 2, got: 1 }
        );
    }

    #[test]
    fn qma_rejects_n_zero() {
        assert_eq!(build_qma(AdderVariant::Qma1, 0).unwrap_err(), BuildError::InvalidN);
    }

    #[test]
    fn qma2_n1_exhaustive() {
        let built = build_qma(AdderVariant::Qma2, 1).unwrap();
        for a in 0..=2u128 {
            for b in 0..=2u128 {
                let mut s = BasisState::zeros(built.circuit.width());
                s.write(&built.layout.a_wires, a);
                s.write(&built.layout.b_wires, b);
                let out = run_exact(&built.circuit, &s).unwrap();
                assert_eq!(out.read(&built.layout.mod_wires), (a + b + 1) % 3);
                assert_eq!(out.read(&built.layout.sum_wires), a + b);
            }
        }
    }

    #[test]
    fn layout_covers_every_wire() {
        for v in AdderVariant::ALL {
            for n in 1..=5 {
                let built = build_qma(v, n).unwrap();
                let l = &built.layout;
                assert_eq!(l.width(), built.circuit.width());
                let mut all: Vec<Wire> = l.a_wires.iter().chain(&l.b_wires).chain(&l.ancilla_wires).copied().collect();
                all.sort();
                assert_eq!(all, (0..built.circuit.width()).collect::<Vec<_>>());
                assert!(l.sum_wires.iter().all(|w| !l.mod_wires.contains(w)));
                assert_eq!(l.mod_wires.len(), n as usize + 1);
                assert_eq!(l.sum_wires.len(), n as usize + 2);
            }
        }
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("QMA3".parse::<AdderVariant>().unwrap(), AdderVariant::Qma3);
        assert_eq!("qma1".parse::<AdderVariant>().unwrap(), AdderVariant::Qma1);
        assert!("qma5".parse::<AdderVariant>().is_err());
    }
}
