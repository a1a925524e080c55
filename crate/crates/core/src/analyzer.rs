//! Resource accounting: gate tallies, per-kind depth, width and figure of merit.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::circuit::{Circuit, GateKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResourceReport {
    pub width: usize,
    pub cnot_count: usize,
    pub toffoli_count: usize,
    pub x_count: usize,
    pub reset_count: usize,
    pub cnot_depth: usize,
    pub toffoli_depth: usize,
    pub total_depth: usize,
    /// `width * toffoli_depth`
    pub fom: usize,
}

pub fn analyze(circuit: &Circuit) -> ResourceReport {
    let toffoli_depth = circuit.depth_by_kind(GateKind::Toffoli);
    ResourceReport {
        width: circuit.width(),
        cnot_count: circuit.count(GateKind::Cnot),
        toffoli_count: circuit.count(GateKind::Toffoli),
        x_count: circuit.count(GateKind::X),
        reset_count: circuit.count(GateKind::Reset),
        cnot_depth: circuit.depth_by_kind(GateKind::Cnot),
        toffoli_depth,
        total_depth: circuit.depth(),
        fom: circuit.width() * toffoli_depth,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompareError {
    #[error("no reports to compare")]
    EmptyInput,
    #[error("baseline index {index} out of range for {len} reports")]
    BadBaseline { index: usize, len: usize },
}

/// A percentage with two decimals, or undefined when the baseline is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Percent {
    /// Hundredths of a percent.
    Hundredths(i64),
    Undefined,
}

impl Percent {
    /// `100 * (base - value) / base`, rounded half-to-even at two decimals.
    pub fn reduction(base: u128, value: u128) -> Percent {
        if base == 0 {
            return Percent::Undefined;
        }
        let num = 10_000 * (base as i128 - value as i128);
        Percent::Hundredths(round_half_even(num, base as i128))
    }

    pub fn as_f64(self) -> Option<f64> {
        match self {
            Percent::Hundredths(h) => Some(h as f64 / 100.0),
            Percent::Undefined => None,
        }
    }
}

impl std::fmt::Display for Percent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Percent::Hundredths(h) => {
                let sign = if h < 0 { "-" } else { "" };
                write!(f, "{sign}{}.{:02}", h.unsigned_abs() / 100, h.unsigned_abs() % 100)
            }
            Percent::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.as_f64() {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("undefined"),
        }
    }
}

/// `num / den` rounded to the nearest integer, ties to even. `den > 0`.
pub fn round_half_even(num: i128, den: i128) -> i64 {
    debug_assert!(den > 0);
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    let twice = 2 * r;
    let q = if twice > den || (twice == den && q % 2 != 0) { q + 1 } else { q };
    q as i64
}

/// Percentage reduction of each field against the baseline report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReportDelta {
    pub width: Percent,
    pub cnot_count: Percent,
    pub toffoli_count: Percent,
    pub x_count: Percent,
    pub reset_count: Percent,
    pub cnot_depth: Percent,
    pub toffoli_depth: Percent,
    pub total_depth: Percent,
    pub fom: Percent,
}

pub fn compare(reports: &[ResourceReport], baseline: usize) -> Result<Vec<ReportDelta>, CompareError> {
    if reports.is_empty() {
        return Err(CompareError::EmptyInput);
    }
    let base = reports.get(baseline).ok_or(CompareError::BadBaseline {
        index: baseline,
        len: reports.len(),
    })?;
    let d = |b: usize, v: usize| Percent::reduction(b as u128, v as u128);
    Ok(reports
        .iter()
        .map(|r| ReportDelta {
            width: d(base.width, r.width),
            cnot_count: d(base.cnot_count, r.cnot_count),
            toffoli_count: d(base.toffoli_count, r.toffoli_count),
            x_count: d(base.x_count, r.x_count),
            reset_count: d(base.reset_count, r.reset_count),
            cnot_depth: d(base.cnot_depth, r.cnot_depth),
            toffoli_depth: d(base.toffoli_depth, r.toffoli_depth),
            total_depth: d(base.total_depth, r.total_depth),
            fom: d(base.fom, r.fom),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_qma, AdderVariant};

    #[test]
    fn empty_circuit_reports_zero() {
        let r = analyze(&Circuit::new(5, "empty"));
        assert_eq!(r.width, 5);
        assert_eq!((r.cnot_count, r.toffoli_count, r.x_count, r.reset_count), (0, 0, 0, 0));
        assert_eq!((r.cnot_depth, r.toffoli_depth, r.total_depth, r.fom), (0, 0, 0, 0));
    }

    #[test]
    fn fom_examples_n4() {
        let q1 = analyze(&build_qma(AdderVariant::Qma1, 4).unwrap().circuit);
        let q2 = analyze(&build_qma(AdderVariant::Qma2, 4).unwrap().circuit);
        assert_eq!(q1.fom, 323);
        assert_eq!(q2.fom, 224);
        assert_eq!(Percent::reduction(323, 224), Percent::Hundredths(3065));
    }

    #[test]
    fn rounding_is_half_even() {
        assert_eq!(round_half_even(5, 2), 2);
        assert_eq!(round_half_even(7, 2), 4);
        assert_eq!(round_half_even(-5, 2), -2);
        assert_eq!(round_half_even(11, 4), 3);
        assert_eq!(Percent::reduction(19, 14).to_string(), "26.32");
        assert_eq!(Percent::reduction(8, 9).to_string(), "-12.50");
        assert_eq!(Percent::reduction(0, 3), Percent::Undefined);
    }

    #[test]
    fn identical_reports_have_zero_deltas() {
        let r = analyze(&build_qma(AdderVariant::Qma3, 2).unwrap().circuit);
        let deltas = compare(&[r, r], 0).unwrap();
        assert_eq!(deltas[1].cnot_count, Percent::Hundredths(0));
        assert_eq!(deltas[1].fom, Percent::Hundredths(0));
        // QMA3 vs itself: x and reset baselines are nonzero, so defined.
        assert_eq!(deltas[1].reset_count, Percent::Hundredths(0));
    }

    #[test]
    fn compare_errors() {
        assert_eq!(compare(&[], 0), Err(CompareError::EmptyInput));
        let r = analyze(&Circuit::new(1, ""));
        assert_eq!(compare(&[r], 2), Err(CompareError::BadBaseline { index: 2, len: 1 }));
        assert_eq!(compare(&[r], 0).unwrap()[0].fom, Percent::Undefined);
    }
}
