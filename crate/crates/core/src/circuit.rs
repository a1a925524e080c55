//! Gate-level IR for reversible circuits over `{X, CNOT, Toffoli, Reset}`.
//!
//! A [`Circuit`] is an ordered gate list over a fixed number of wires. Depth is
//! defined by the greedy as-soon-as-possible schedule computed in
//! [`Circuit::layering`]; per-kind depth ([`Circuit::depth_by_kind`]) is the
//! largest number of gates of one kind along any dependency chain.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a circuit wire (qubit).
pub type Wire = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("operand q[{wire}] out of range for a {width}-wire circuit")]
    OperandOutOfRange { wire: Wire, width: usize },
    #[error("duplicate operand q[{wire}]")]
    DuplicateOperand { wire: Wire },
    #[error("{kind} takes {expected} operand(s), got {got}")]
    ArityMismatch {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    X,
    Cnot,
    Toffoli,
    Reset,
}

impl GateKind {
    pub const ALL: [GateKind; 4] = [GateKind::X, GateKind::Cnot, GateKind::Toffoli, GateKind::Reset];

    pub fn arity(self) -> usize {
        match self {
            GateKind::X | GateKind::Reset => 1,
            GateKind::Cnot => 2,
            GateKind::Toffoli => 3,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateKind::X => "X",
            GateKind::Cnot => "CNOT",
            GateKind::Toffoli => "TOFFOLI",
            GateKind::Reset => "RESET",
        })
    }
}

/// A single gate. Operands are ordered controls first, target last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gate {
    kind: GateKind,
    wires: [Wire; 3],
}

impl Gate {
    /// Builds a gate from a kind and operand list, checking arity and
    /// distinctness. Range is checked when the gate is appended to a circuit.
    pub fn new(kind: GateKind, operands: &[Wire]) -> Result<Self, CircuitError> {
        if operands.len() != kind.arity() {
            return Err(CircuitError::ArityMismatch {
                kind,
                expected: kind.arity(),
                got: operands.len(),
            });
        }
        let mut wires = [0; 3];
        wires[..operands.len()].copy_from_slice(operands);
        let gate = Gate { kind, wires };
        gate.check_distinct()?;
        Ok(gate)
    }

    pub fn x(target: Wire) -> Self {
        Gate {
            kind: GateKind::X,
            wires: [target, 0, 0],
        }
    }

    pub fn cx(control: Wire, target: Wire) -> Self {
        Gate {
            kind: GateKind::Cnot,
            wires: [control, target, 0],
        }
    }

    pub fn ccx(c0: Wire, c1: Wire, target: Wire) -> Self {
        Gate {
            kind: GateKind::Toffoli,
            wires: [c0, c1, target],
        }
    }

    pub fn reset(target: Wire) -> Self {
        Gate {
            kind: GateKind::Reset,
            wires: [target, 0, 0],
        }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn operands(&self) -> &[Wire] {
        &self.wires[..self.kind.arity()]
    }

    /// The wire this gate writes.
    pub fn target(&self) -> Wire {
        self.wires[self.kind.arity() - 1]
    }

    fn check_distinct(&self) -> Result<(), CircuitError> {
        let ops = self.operands();
        for (i, &w) in ops.iter().enumerate() {
            if ops[..i].contains(&w) {
                return Err(CircuitError::DuplicateOperand { wire: w });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind)?;
        for (i, w) in self.operands().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{w}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
    label: String,
}

impl Circuit {
    pub fn new(width: usize, label: impl Into<String>) -> Self {
        Circuit {
            width,
            gates: Vec::new(),
            label: label.into(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Appends a gate after validating its operands against this circuit.
    pub fn append(&mut self, gate: Gate) -> Result<&mut Self, CircuitError> {
        for &w in gate.operands() {
            if w >= self.width {
                return Err(CircuitError::OperandOutOfRange {
                    wire: w,
                    width: self.width,
                });
            }
        }
        gate.check_distinct()?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend<I: IntoIterator<Item = Gate>>(&mut self, gates: I) -> Result<&mut Self, CircuitError> {
        for g in gates {
            self.append(g)?;
        }
        Ok(self)
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    pub fn has_resets(&self) -> bool {
        self.gates.iter().any(|g| g.kind == GateKind::Reset)
    }

    /// Greedy ASAP schedule: every gate lands one layer after the latest
    /// earlier gate sharing a wire with it.
    pub fn layering(&self) -> Layering {
        let mut frontier = vec![0usize; self.width];
        let mut assignment = Vec::with_capacity(self.gates.len());
        let mut layers: Vec<Vec<usize>> = Vec::new();
        for (idx, gate) in self.gates.iter().enumerate() {
            let layer = gate.operands().iter().map(|&w| frontier[w]).max().unwrap_or(0);
            for &w in gate.operands() {
                frontier[w] = layer + 1;
            }
            if layer == layers.len() {
                layers.push(Vec::new());
            }
            layers[layer].push(idx);
            assignment.push(layer);
        }
        Layering { layers, assignment }
    }

    pub fn depth(&self) -> usize {
        self.layering().depth()
    }

    /// Largest number of `kind` gates on any dependency chain.
    ///
    /// Every gate propagates ordering along its wires; only gates of `kind`
    /// add to the count. For a circuit made only of `kind` gates this equals
    /// [`Circuit::depth`].
    pub fn depth_by_kind(&self, kind: GateKind) -> usize {
        let mut level = vec![0usize; self.width];
        let mut depth = 0;
        for gate in &self.gates {
            let base = gate.operands().iter().map(|&w| level[w]).max().unwrap_or(0);
            let next = base + usize::from(gate.kind == kind);
            for &w in gate.operands() {
                level[w] = next;
            }
            depth = depth.max(next);
        }
        depth
    }

    /// Depth of the subcircuit holding only `kind` gates, scheduled on its own.
    pub fn filtered_depth(&self, kind: GateKind) -> usize {
        let mut sub = Circuit::new(self.width, "");
        sub.gates = self.gates.iter().copied().filter(|g| g.kind == kind).collect();
        sub.depth()
    }
}

/// ASAP layer assignment for a circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layering {
    /// Gate indices per layer, in sequence order within each layer.
    pub layers: Vec<Vec<usize>>,
    /// Layer index of each gate.
    pub assignment: Vec<usize>,
}

impl Layering {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}
