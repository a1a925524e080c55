//! Error-distance metrics and the noisy experiment harness.
//!
//! For every scored input the harness runs the adder under the noise model,
//! takes the most frequent modulo-sum readout and measures its distance from
//! the ideal value. MED and NMED are kept as exact rationals.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::analyzer::{analyze, round_half_even, Percent, ResourceReport};
use crate::builders::{build_qma, AdderVariant, BuildError};
use crate::oracle::{self, ModAddInstance};
use crate::sim::{most_frequent, BasisState, NoiseModel, NoisyProgram, ShotHistogram, SimError};

pub type Rational = Ratio<u128>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no error distances to aggregate")]
    EmptyInput,
    #[error("s_max must be >= 1")]
    InvalidSMax,
    #[error("no variants requested")]
    NoVariants,
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub fn error_distance(ideal: u128, observed: u128) -> u128 {
    ideal.abs_diff(observed)
}

/// Exact `(MED, NMED)` for a list of error distances.
pub fn aggregate(eds: &[u128], s_max: u128) -> Result<(Rational, Rational), MetricsError> {
    if eds.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if s_max == 0 {
        return Err(MetricsError::InvalidSMax);
    }
    let med = Rational::new(eds.iter().sum(), eds.len() as u128);
    let nmed = med / s_max;
    Ok((med, nmed))
}

/// Reference the observed modulo sum is scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdealConvention {
    /// Encode `a` as is; ideal is `(a + b + 1) mod (2^n + 1)`.
    #[default]
    PlusOne,
    /// Encode `a - 1 (mod 2^n + 1)`; ideal is `(a + b) mod (2^n + 1)`.
    PreDecrement,
}

impl FromStr for IdealConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plus-one" => Ok(IdealConvention::PlusOne),
            "pre-decrement" => Ok(IdealConvention::PreDecrement),
            other => Err(format!(
                "unknown ideal convention `{other}` (expected plus-one or pre-decrement)"
            )),
        }
    }
}

impl fmt::Display for IdealConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdealConvention::PlusOne => "plus-one",
            IdealConvention::PreDecrement => "pre-decrement",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ExperimentOptions {
    pub ideal: IdealConvention,
    /// Run every `(n+1)`-bit input pair; out-of-domain rows are left unscored.
    pub full_basis: bool,
    /// Also score the regular-sum register against the encoded `a + b`.
    pub score_sum: bool,
}

/// Outcome for a single `(a, b)` input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputRow {
    pub a: u128,
    pub b: u128,
    /// `None` for out-of-domain inputs in full-basis mode.
    pub ideal: Option<u128>,
    pub observed: u128,
    pub ed: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_observed: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_ed: Option<u128>,
}

/// Rational rendered both as a decimal and as an exact `num/den` string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactValue(pub Rational);

impl ExactValue {
    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl Serialize for ExactValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ExactValue", 2)?;
        st.serialize_field("value", &self.to_f64())?;
        st.serialize_field("exact", &format!("{}/{}", self.0.numer(), self.0.denom()))?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumScore {
    pub med: ExactValue,
    pub nmed: ExactValue,
    pub s_max: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub variant: AdderVariant,
    pub n: u32,
    pub noise: NoiseModel,
    pub shots: u64,
    pub seed: u64,
    pub options: ExperimentOptions,
    /// Number of scored inputs.
    pub n_inputs: usize,
    pub s_max: u128,
    pub med: ExactValue,
    pub nmed: ExactValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_score: Option<SumScore>,
    pub per_input: Vec<InputRow>,
}

impl ErrorReport {
    pub fn nmed(&self) -> Rational {
        self.nmed.0
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed used for the shots of one input; a function of `(seed, a, b)` only.
pub fn input_seed(seed: u64, a: u128, b: u128) -> u64 {
    let mut h = splitmix64(seed);
    for part in [a as u64, (a >> 64) as u64, b as u64, (b >> 64) as u64] {
        h = splitmix64(h ^ part);
    }
    h
}

fn marginal_mode(hist: &ShotHistogram, shift: u32, width: u32) -> Result<u128, SimError> {
    let mask = if width >= 128 { u128::MAX } else { (1u128 << width) - 1 };
    let mut marginal = ShotHistogram {
        counts: Default::default(),
        shots: hist.shots,
        seed: hist.seed,
    };
    for (&k, &v) in &hist.counts {
        *marginal.counts.entry((k >> shift) & mask).or_insert(0) += v;
    }
    most_frequent(&marginal)
}

/// Runs one adder over its input domain under `noise` and scores it.
pub fn run_experiment(
    variant: AdderVariant,
    n: u32,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
    options: &ExperimentOptions,
) -> Result<ErrorReport, MetricsError> {
    let built = build_qma(variant, n)?;
    let layout = &built.layout;
    let program = NoisyProgram::compile(&built.circuit, noise)?;
    if shots == 0 {
        return Err(SimError::InvalidShots.into());
    }

    let mod_width = layout.mod_wires.len() as u32;
    let sum_width = layout.sum_wires.len() as u32;
    let mut readout = layout.mod_wires.clone();
    readout.extend(&layout.sum_wires);

    let valid_top = 1u128 << n;
    let bit_top = (1u128 << (n + 1)) - 1;
    let top = if options.full_basis { bit_top } else { valid_top };
    let inputs: Vec<(u128, u128)> = (0..=top).flat_map(|a| (0..=top).map(move |b| (a, b))).collect();

    let rows: Vec<InputRow> = inputs
        .par_iter()
        .map(|&(a, b)| -> Result<InputRow, MetricsError> {
            let in_domain = a <= valid_top && b <= valid_top;
            let (encoded_a, ideal) = if in_domain {
                let inst = ModAddInstance::new(n, a, b).expect("in-domain instance");
                match options.ideal {
                    IdealConvention::PlusOne => (a, Some(oracle::mod_add_plus_one(&inst))),
                    IdealConvention::PreDecrement => (oracle::decrement(n, a), Some(oracle::mod_add(&inst))),
                }
            } else {
                (a, None)
            };
            let mut state = BasisState::zeros(built.circuit.width());
            state.write(&layout.a_wires, encoded_a);
            state.write(&layout.b_wires, b);
            let hist = program.sample(&state, shots, input_seed(seed, a, b), &readout)?;
            let observed = marginal_mode(&hist, 0, mod_width)?;
            let (sum_observed, sum_ed) = if options.score_sum {
                let s = marginal_mode(&hist, mod_width, sum_width)?;
                (Some(s), in_domain.then(|| error_distance(encoded_a + b, s)))
            } else {
                (None, None)
            };
            Ok(InputRow {
                a,
                b,
                ideal,
                observed,
                ed: ideal.map(|i| error_distance(i, observed)),
                sum_observed,
                sum_ed,
            })
        })
        .collect::<Result<_, _>>()?;

    let eds: Vec<u128> = rows.iter().filter_map(|r| r.ed).collect();
    let (med, nmed) = aggregate(&eds, valid_top)?;
    let sum_score = if options.score_sum {
        let sum_eds: Vec<u128> = rows.iter().filter_map(|r| r.sum_ed).collect();
        let s_max = 2 * valid_top;
        let (med, nmed) = aggregate(&sum_eds, s_max)?;
        Some(SumScore {
            med: ExactValue(med),
            nmed: ExactValue(nmed),
            s_max,
        })
    } else {
        None
    };

    Ok(ErrorReport {
        variant,
        n,
        noise: *noise,
        shots,
        seed,
        options: *options,
        n_inputs: eds.len(),
        s_max: valid_top,
        med: ExactValue(med),
        nmed: ExactValue(nmed),
        sum_score,
        per_input: rows,
    })
}

/// `100 * (base - value) / base` for exact rationals.
pub fn rational_drop(base: Rational, value: Rational) -> Percent {
    if *base.numer() == 0 {
        return Percent::Undefined;
    }
    let (bn, bd) = (*base.numer() as i128, *base.denom() as i128);
    let (vn, vd) = (*value.numer() as i128, *value.denom() as i128);
    // (bn/bd - vn/vd) / (bn/bd) = (bn*vd - vn*bd) / (bn*vd)
    let exact = || -> Option<i64> {
        let den = bn.checked_mul(vd)?;
        let num = den.checked_sub(vn.checked_mul(bd)?)?.checked_mul(10_000)?;
        Some(round_half_even(num, den))
    };
    match exact() {
        Some(h) => Percent::Hundredths(h),
        None => {
            let b = bn as f64 / bd as f64;
            let v = vn as f64 / vd as f64;
            Percent::Hundredths((10_000.0 * (b - v) / b).round() as i64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variant: AdderVariant,
    pub n: u32,
    pub resources: ResourceReport,
    pub med: ExactValue,
    pub nmed: ExactValue,
    /// NMED reduction relative to the first row.
    pub nmed_drop: Percent,
    /// FOM reduction relative to the first row.
    pub fom_drop: Percent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<ErrorReport>,
}

/// Runs each variant and joins the error and resource figures into one table.
pub fn run_sweep(
    variants: &[AdderVariant],
    n: u32,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
    options: &ExperimentOptions,
) -> Result<SweepTable, MetricsError> {
    if variants.is_empty() {
        return Err(MetricsError::NoVariants);
    }
    let mut reports = Vec::with_capacity(variants.len());
    let mut resources = Vec::with_capacity(variants.len());
    for &v in variants {
        reports.push(run_experiment(v, n, noise, shots, seed, options)?);
        resources.push(analyze(&build_qma(v, n)?.circuit));
    }
    let base_nmed = reports[0].nmed();
    let base_fom = resources[0].fom;
    let rows = reports
        .iter()
        .zip(&resources)
        .map(|(r, res)| SweepRow {
            variant: r.variant,
            n,
            resources: *res,
            med: r.med,
            nmed: r.nmed,
            nmed_drop: rational_drop(base_nmed, r.nmed()),
            fom_drop: Percent::reduction(base_fom as u128, res.fom as u128),
        })
        .collect();
    Ok(SweepTable { rows, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_distance_examples() {
        assert_eq!(error_distance(13, 13), 0);
        assert_eq!(error_distance(13, 9), 4);
        assert_eq!(error_distance(0, 16), 16);
    }

    #[test]
    fn aggregate_examples() {
        let (med, nmed) = aggregate(&[0, 0, 0], 16).unwrap();
        assert_eq!((med, nmed), (Rational::from_integer(0), Rational::from_integer(0)));
        let (med, nmed) = aggregate(&[4, 0, 2], 16).unwrap();
        assert_eq!(med, Rational::from_integer(2));
        assert_eq!(nmed, Rational::new(1, 8));
        let (med, nmed) = aggregate(&[16; 289], 16).unwrap();
        assert_eq!((med, nmed), (Rational::from_integer(16), Rational::from_integer(1)));
        assert_eq!(aggregate(&[], 16), Err(MetricsError::EmptyInput));
        assert_eq!(aggregate(&[1], 0), Err(MetricsError::InvalidSMax));
    }

    #[test]
    fn noiseless_experiment_is_exact() {
        for v in AdderVariant::ALL {
            let r = run_experiment(v, 2, &NoiseModel::zero(), 10, 1, &ExperimentOptions::default()).unwrap();
            assert_eq!(r.n_inputs, 25);
            assert_eq!(r.nmed(), Rational::from_integer(0));
        }
    }

    #[test]
    fn pre_decrement_convention_is_also_exact() {
        let opts = ExperimentOptions {
            ideal: IdealConvention::PreDecrement,
            score_sum: true,
            ..Default::default()
        };
        let r = run_experiment(AdderVariant::Qma2, 3, &NoiseModel::zero(), 5, 1, &opts).unwrap();
        assert_eq!(r.nmed(), Rational::from_integer(0));
        assert_eq!(r.sum_score.unwrap().nmed.0, Rational::from_integer(0));
        let row = r.per_input.iter().find(|row| row.a == 3 && row.b == 4).unwrap();
        assert_eq!(row.ideal, Some(7));
    }

    #[test]
    fn full_basis_leaves_out_of_domain_unscored() {
        let opts = ExperimentOptions {
            full_basis: true,
            ..Default::default()
        };
        let r = run_experiment(AdderVariant::Qma1, 1, &NoiseModel::zero(), 3, 1, &opts).unwrap();
        assert_eq!(r.per_input.len(), 16);
        assert_eq!(r.n_inputs, 9);
        assert!(r.per_input.iter().filter(|row| row.a == 3).all(|row| row.ed.is_none()));
    }

    #[test]
    fn rational_drop_matches_reduction() {
        // 0.1213 / 0.6513 = 0.186243...
        let base = Rational::new(6513, 10_000);
        let v = Rational::new(53, 100);
        assert_eq!(rational_drop(base, v), Percent::Hundredths(1862));
        assert_eq!(rational_drop(Rational::new(1, 2), Rational::new(3, 8)), Percent::Hundredths(2500));
        assert_eq!(rational_drop(Rational::new(1, 3), Rational::new(1, 3)), Percent::Hundredths(0));
        assert_eq!(rational_drop(Rational::from_integer(0), v), Percent::Undefined);
    }

    #[test]
    fn sweep_without_noise() {
        let t = run_sweep(&AdderVariant::ALL, 4, &NoiseModel::zero(), 5, 1, &Default::default()).unwrap();
        let foms: Vec<usize> = t.rows.iter().map(|r| r.resources.fom).collect();
        assert_eq!(foms, vec![323, 224, 168, 168]);
        assert!(t.rows.iter().all(|r| r.nmed_drop == Percent::Undefined));
        let single = run_sweep(&[AdderVariant::Qma2], 1, &NoiseModel::zero(), 5, 1, &Default::default()).unwrap();
        assert_eq!(single.rows.len(), 1);
        assert_eq!(run_sweep(&[], 1, &NoiseModel::zero(), 5, 1, &Default::default()), Err(MetricsError::NoVariants));
    }
}
