//! Classical reference arithmetic for modulo `2^n + 1` addition.
//!
//! Operands live in the valid domain `0 ..= 2^n`. Values are carried in `u128`,
//! which covers every exponent up to [`MAX_N`].

use serde::Serialize;
use thiserror::Error;

/// Largest supported exponent; `a + b + 1` must fit in a `u128`.
pub const MAX_N: u32 = 126;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("n must be in 1..={MAX_N}, got {0}")]
    InvalidN(u32),
    #[error("operand {value} outside 0..=2^{n}")]
    DomainError { n: u32, value: u128 },
}

/// One modular addition problem with validated operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ModAddInstance {
    n: u32,
    a: u128,
    b: u128,
}

impl ModAddInstance {
    pub fn new(n: u32, a: u128, b: u128) -> Result<Self, OracleError> {
        if n == 0 || n > MAX_N {
            return Err(OracleError::InvalidN(n));
        }
        let top = 1u128 << n;
        for value in [a, b] {
            if value > top {
                return Err(OracleError::DomainError { n, value });
            }
        }
        Ok(ModAddInstance { n, a, b })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn a(&self) -> u128 {
        self.a
    }

    pub fn b(&self) -> u128 {
        self.b
    }

    pub fn modulus(&self) -> u128 {
        modulus(self.n)
    }
}

/// `2^n + 1`.
pub fn modulus(n: u32) -> u128 {
    (1u128 << n) + 1
}

/// `(a + b + 1) mod (2^n + 1)`, the function every adder variant computes.
pub fn mod_add_plus_one(inst: &ModAddInstance) -> u128 {
    (inst.a + inst.b + 1) % inst.modulus()
}

/// Modulo `2^n + 1` addition written out as the three-case definition.
pub fn mod_add(inst: &ModAddInstance) -> u128 {
    let m = inst.modulus();
    let s = inst.a + inst.b;
    match s.cmp(&m) {
        std::cmp::Ordering::Less => s,
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Greater => s % m,
    }
}

/// Maps `a` to `a - 1 (mod 2^n + 1)`, so that
/// `mod_add(a, b) == mod_add_plus_one(decrement(a), b)`.
pub fn decrement(n: u32, a: u128) -> u128 {
    (a + (1u128 << n)) % modulus(n)
}

/// Bit-level breakdown of `a + b` used by the adder circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    /// Full sum `a + b` (n+2 bits).
    pub sum: u128,
    /// `(a + b) mod 2^n`.
    pub low: u128,
    /// Bit `n+1` of the sum.
    pub s_np1: bool,
    /// Bit `n` of the sum.
    pub s_n: bool,
    /// `!(s_np1 | s_n)`.
    pub nor_bit: bool,
    /// Sum with bit `n` dropped and bit `n+1` moved into its place.
    pub sum_prime: u128,
    pub modulo_sum: u128,
}

pub fn decompose(inst: &ModAddInstance) -> Decomposition {
    let n = inst.n;
    let sum = inst.a + inst.b;
    let low = sum & ((1u128 << n) - 1);
    let s_n = (sum >> n) & 1 == 1;
    let s_np1 = (sum >> (n + 1)) & 1 == 1;
    let nor_bit = !(s_np1 || s_n);
    let sum_prime = low | (u128::from(s_np1) << n);
    Decomposition {
        sum,
        low,
        s_np1,
        s_n,
        nor_bit,
        sum_prime,
        modulo_sum: sum_prime + u128::from(nor_bit),
    }
}

/// All valid `(a, b)` pairs for exponent `n`, row-major in `a`.
pub fn valid_inputs(n: u32) -> impl Iterator<Item = (u128, u128)> {
    let top = 1u128 << n;
    (0..=top).flat_map(move |a| (0..=top).map(move |b| (a, b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: u32, a: u128, b: u128) -> ModAddInstance {
        ModAddInstance::new(n, a, b).unwrap()
    }

    #[test]
    fn plus_one_examples() {
        assert_eq!(mod_add_plus_one(&inst(4, 0, 0)), 1);
        assert_eq!(mod_add_plus_one(&inst(4, 16, 16)), 16);
        assert_eq!(mod_add_plus_one(&inst(4, 10, 6)), 0);
    }

    #[test]
    fn mod_add_branches() {
        assert_eq!(mod_add(&inst(4, 3, 4)), 7);
        assert_eq!(mod_add(&inst(4, 16, 1)), 0);
        assert_eq!(mod_add(&inst(4, 16, 5)), 4);
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&inst(4, 5, 7));
        assert_eq!((d.sum, d.low, d.s_np1, d.s_n, d.nor_bit, d.modulo_sum), (12, 12, false, false, true, 13));
        let d = decompose(&inst(4, 10, 6));
        assert_eq!((d.sum, d.low, d.s_np1, d.s_n, d.nor_bit, d.modulo_sum), (16, 0, false, true, false, 0));
        let d = decompose(&inst(4, 16, 16));
        assert_eq!((d.sum, d.low, d.s_np1, d.s_n, d.nor_bit, d.modulo_sum), (32, 0, true, false, false, 16));
    }

    #[test]
    fn domain_errors() {
        assert_eq!(
            ModAddInstance::new(4, 17, 0).unwrap_err(),
            OracleError::DomainError { n: 4, value: 17 }
        );
        assert_eq!(ModAddInstance::new(0, 0, 0).unwrap_err(), OracleError::InvalidN(0));
        assert!(ModAddInstance::new(30, 1 << 30, 1 << 30).is_ok());
    }

    #[test]
    fn decrement_converts_between_conventions() {
        for n in 1..=6 {
            for (a, b) in valid_inputs(n) {
                let plain = mod_add(&inst(n, a, b));
                let shifted = mod_add_plus_one(&inst(n, decrement(n, a), b));
                assert_eq!(plain, shifted, "n={n} a={a} b={b}");
            }
        }
    }

    #[test]
    fn valid_input_count() {
        assert_eq!(valid_inputs(1).count(), 9);
        assert_eq!(valid_inputs(4).count(), 289);
    }
}
