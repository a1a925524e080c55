//! Exact and Monte Carlo evaluation of circuits on computational basis states.
//!
//! Every gate in the IR permutes basis states and every readout is in the
//! computational basis, so a bit-flip channel is the only noise that can be
//! observed. Shots run in blocks of 64; each block draws its noise from a
//! ChaCha8 stream selected by `(seed, block index)`, which makes histograms
//! independent of how blocks are split across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind, Wire};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("state has {got} bits, circuit has {expected} wires")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{name} = {value} outside [0, 0.5)")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("consecutive reset count must be >= 1")]
    InvalidResetCount,
    #[error("shots must be >= 1")]
    InvalidShots,
    #[error("readout wire q[{wire}] out of range for {width} wires")]
    ReadoutOutOfRange { wire: Wire, width: usize },
    #[error("readout of {0} wires does not fit in 128 bits")]
    ReadoutTooWide(usize),
    #[error("histogram is empty")]
    EmptyHistogram,
}

/// A computational basis state, one bit per wire.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BasisState {
    words: Vec<u64>,
    len: usize,
}

impl BasisState {
    pub fn zeros(len: usize) -> Self {
        BasisState {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, wire: Wire) -> bool {
        (self.words[wire / 64] >> (wire % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, wire: Wire, value: bool) {
        let mask = 1u64 << (wire % 64);
        if value {
            self.words[wire / 64] |= mask;
        } else {
            self.words[wire / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, wire: Wire) {
        self.words[wire / 64] ^= 1u64 << (wire % 64);
    }

    /// Reads `wires` as an unsigned integer, `wires[0]` being the LSB.
    pub fn read(&self, wires: &[Wire]) -> u128 {
        debug_assert!(wires.len() <= 128);
        wires
            .iter()
            .enumerate()
            .fold(0u128, |acc, (i, &w)| acc | (u128::from(self.get(w)) << i))
    }

    /// Writes the low `wires.len()` bits of `value`, `wires[0]` being the LSB.
    pub fn write(&mut self, wires: &[Wire], value: u128) {
        for (i, &w) in wires.iter().enumerate() {
            self.set(w, i < 128 && (value >> i) & 1 == 1);
        }
    }

    #[inline]
    fn apply(&mut self, gate: &Gate) {
        let ops = gate.operands();
        match gate.kind() {
            GateKind::X => self.flip(ops[0]),
            GateKind::Cnot => {
                if self.get(ops[0]) {
                    self.flip(ops[1]);
                }
            }
            GateKind::Toffoli => {
                if self.get(ops[0]) && self.get(ops[1]) {
                    self.flip(ops[2]);
                }
            }
            GateKind::Reset => self.set(ops[0], false),
        }
    }
}

impl fmt::Debug for BasisState {
    /// Wire 0 printed first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        f.write_str("⟩")
    }
}

/// Applies every gate in order to a copy of `input`.
pub fn run_exact(circuit: &Circuit, input: &BasisState) -> Result<BasisState, SimError> {
    if input.len() != circuit.width() {
        return Err(SimError::LengthMismatch {
            expected: circuit.width(),
            got: input.len(),
        });
    }
    let mut state = input.clone();
    for gate in circuit.gates() {
        state.apply(gate);
    }
    Ok(state)
}

fn check_probability(name: &'static str, value: f64) -> Result<(), SimError> {
    if (0.0..0.5).contains(&value) {
        Ok(())
    } else {
        Err(SimError::InvalidProbability { name, value })
    }
}

/// Probability that `k` back-to-back resets, each leaving |1⟩ with
/// probability `delta`, still leave |1⟩: `δ^k / (δ^k + (1-δ)^k)`.
pub fn effective_reset_error(delta: f64, k: u32) -> Result<f64, SimError> {
    check_probability("delta", delta)?;
    if k == 0 {
        return Err(SimError::InvalidResetCount);
    }
    let one = delta.powi(k as i32);
    let zero = (1.0 - delta).powi(k as i32);
    Ok(one / (one + zero))
}

/// How back-to-back resets on one wire combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResetModel {
    /// A run of `k` resets acts as one reset with error
    /// [`effective_reset_error`]`(δ, k)`.
    #[default]
    Purify,
    /// Each reset prepares |0⟩ afresh with error `δ`.
    Independent,
}

impl FromStr for ResetModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "purify" => Ok(ResetModel::Purify),
            "independent" => Ok(ResetModel::Independent),
            other => Err(format!("unknown reset model `{other}` (expected purify or independent)")),
        }
    }
}

/// Bit-flip noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Flip probability on the wire of an X gate.
    pub p_x: f64,
    /// Flip probability on each wire of a CNOT.
    pub p_cnot: f64,
    /// Flip probability on each wire of a Toffoli.
    pub p_toffoli: f64,
    /// Flip probability per wire per layer in which the wire is idle.
    pub p_idle: f64,
    /// Probability that a single reset leaves |1⟩.
    pub delta_reset: f64,
    pub reset_model: ResetModel,
}

impl NoiseModel {
    pub const fn zero() -> Self {
        NoiseModel {
            p_x: 0.0,
            p_cnot: 0.0,
            p_toffoli: 0.0,
            p_idle: 0.0,
            delta_reset: 0.0,
            reset_model: ResetModel::Purify,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        check_probability("p_x", self.p_x)?;
        check_probability("p_cnot", self.p_cnot)?;
        check_probability("p_toffoli", self.p_toffoli)?;
        check_probability("p_idle", self.p_idle)?;
        check_probability("delta_reset", self.delta_reset)
    }

    pub fn is_zero(&self) -> bool {
        self.p_x == 0.0 && self.p_cnot == 0.0 && self.p_toffoli == 0.0 && self.p_idle == 0.0 && self.delta_reset == 0.0
    }

    fn gate_flip(&self, kind: GateKind) -> f64 {
        match kind {
            GateKind::X => self.p_x,
            GateKind::Cnot => self.p_cnot,
            GateKind::Toffoli => self.p_toffoli,
            GateKind::Reset => 0.0,
        }
    }
}

/// Strong enough that the most frequent outcome is often wrong at n = 4,
/// which is what makes variants distinguishable by NMED.
impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            p_x: 0.005,
            p_cnot: 0.02,
            p_toffoli: 0.03,
            p_idle: 0.025,
            delta_reset: 0.2,
            reset_model: ResetModel::Purify,
        }
    }
}

/// Outcome counts over the readout wires. Keys are the readout value with
/// `readout[0]` as the LSB.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShotHistogram {
    pub counts: BTreeMap<u128, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl ShotHistogram {
    fn merge(mut self, other: ShotHistogram) -> ShotHistogram {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
        self.shots += other.shots;
        self
    }
}

/// Outcome with the highest count; ties go to the smallest value.
pub fn most_frequent(hist: &ShotHistogram) -> Result<u128, SimError> {
    // BTreeMap iterates in ascending key order, so the first maximum wins.
    let mut best: Option<(u128, u64)> = None;
    for (&k, &v) in &hist.counts {
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k).ok_or(SimError::EmptyHistogram)
}

#[derive(Debug, Clone, Copy)]
enum Step {
    X(Wire),
    Cnot(Wire, Wire),
    Toffoli(Wire, Wire, Wire),
    Reset(Wire),
    /// XOR the next noise mask into the wire.
    Flip(Wire),
}

/// A circuit flattened into layer order with noise sites attached.
///
/// Shots are simulated 64 at a time: each wire is a `u64` whose bit `j` is
/// that wire in lane `j`. Every `Flip` step is a noise site. Per block of 64
/// shots the flips of all sites sharing a probability are drawn by geometric
/// skipping, so the cost scales with the number of flips rather than the
/// number of sites.
#[derive(Debug, Clone)]
pub struct NoisyProgram {
    width: usize,
    steps: Vec<Step>,
    n_sites: usize,
    /// `(ln(1 - p), sites with flip probability p)`.
    classes: Vec<(f64, Vec<u32>)>,
}

/// Shots per block; one lane per bit of a `u64`.
const LANES: u64 = 64;
/// Blocks per parallel work item.
const BLOCKS_PER_TASK: u64 = 256;

impl NoisyProgram {
    pub fn compile(circuit: &Circuit, noise: &NoiseModel) -> Result<Self, SimError> {
        noise.validate()?;
        let gates = circuit.gates();

        // Length of the reset run each gate starts (0 for continuations and
        // non-reset gates).
        let mut run_len = vec![0u32; gates.len()];
        let mut last_on_wire: Vec<Option<usize>> = vec![None; circuit.width()];
        let mut run_head: Vec<usize> = vec![usize::MAX; gates.len()];
        for (idx, g) in gates.iter().enumerate() {
            if g.kind() == GateKind::Reset {
                let w = g.target();
                let head = match last_on_wire[w] {
                    Some(prev) if gates[prev].kind() == GateKind::Reset => run_head[prev],
                    _ => idx,
                };
                run_head[idx] = head;
                run_len[head] += 1;
            }
            for &w in g.operands() {
                last_on_wire[w] = Some(idx);
            }
        }

        let mut steps = Vec::new();
        let mut by_prob: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
        let mut n_sites = 0u32;
        let mut flip = |steps: &mut Vec<Step>, wire: Wire, p: f64| {
            if p > 0.0 {
                steps.push(Step::Flip(wire));
                by_prob.entry(p.to_bits()).or_default().push(n_sites);
                n_sites += 1;
            }
        };

        let layering = circuit.layering();
        let mut touched = vec![false; circuit.width()];
        for layer in &layering.layers {
            touched.iter_mut().for_each(|t| *t = false);
            for &idx in layer {
                let g = gates[idx];
                let ops = g.operands();
                for &w in ops {
                    touched[w] = true;
                }
                match g.kind() {
                    GateKind::Reset => {
                        let p = match noise.reset_model {
                            ResetModel::Independent => noise.delta_reset,
                            ResetModel::Purify if run_head[idx] == idx => {
                                effective_reset_error(noise.delta_reset, run_len[idx])?
                            }
                            // Absorbed into the run's first reset.
                            ResetModel::Purify => continue,
                        };
                        steps.push(Step::Reset(ops[0]));
                        flip(&mut steps, ops[0], p);
                    }
                    kind => {
                        steps.push(match kind {
                            GateKind::X => Step::X(ops[0]),
                            GateKind::Cnot => Step::Cnot(ops[0], ops[1]),
                            _ => Step::Toffoli(ops[0], ops[1], ops[2]),
                        });
                        for &w in ops {
                            flip(&mut steps, w, noise.gate_flip(kind));
                        }
                    }
                }
            }
            for (w, &t) in touched.iter().enumerate() {
                if !t {
                    flip(&mut steps, w, noise.p_idle);
                }
            }
        }
        Ok(NoisyProgram {
            width: circuit.width(),
            steps,
            n_sites: n_sites as usize,
            classes: by_prob
                .into_iter()
                .map(|(bits, sites)| ((-f64::from_bits(bits)).ln_1p(), sites))
                .collect(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of places a bit flip can be injected.
    pub fn noise_sites(&self) -> usize {
        self.n_sites
    }

    /// Draws the flip masks of one block into `masks`.
    fn draw_masks(&self, masks: &mut [u64], rng: &mut ChaCha8Rng) {
        masks.iter_mut().for_each(|m| *m = 0);
        for (ln_q, sites) in &self.classes {
            let cells = sites.len() as u64 * LANES;
            let mut pos = 0u64;
            loop {
                // Uniform in (0, 1].
                let u = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
                let skip = (u.ln() / ln_q) as u64;
                pos = pos.saturating_add(skip);
                if pos >= cells {
                    break;
                }
                masks[sites[(pos / LANES) as usize] as usize] |= 1 << (pos % LANES);
                pos += 1;
            }
        }
    }

    /// Runs one block of 64 lanes, every lane starting from `input`.
    fn run_block(&self, input: &BasisState, masks: &[u64], state: &mut [u64]) {
        for (w, s) in state.iter_mut().enumerate() {
            *s = if input.get(w) { !0 } else { 0 };
        }
        let mut site = 0;
        for step in &self.steps {
            match *step {
                Step::X(t) => state[t] = !state[t],
                Step::Cnot(c, t) => state[t] ^= state[c],
                Step::Toffoli(a, b, t) => state[t] ^= state[a] & state[b],
                Step::Reset(w) => state[w] = 0,
                Step::Flip(w) => {
                    state[w] ^= masks[site];
                    site += 1;
                }
            }
        }
    }

    fn sample_blocks(&self, input: &BasisState, blocks: std::ops::Range<u64>, shots: u64, seed: u64, readout: &[Wire]) -> ShotHistogram {
        let mut counts = BTreeMap::new();
        let mut masks = vec![0u64; self.n_sites];
        let mut state = vec![0u64; self.width];
        let mut total = 0;
        for block in blocks {
            let mut rng = block_rng(seed, block);
            self.draw_masks(&mut masks, &mut rng);
            self.run_block(input, &masks, &mut state);
            let lanes = (shots - block * LANES).min(LANES);
            for lane in 0..lanes {
                let value = readout
                    .iter()
                    .enumerate()
                    .fold(0u128, |acc, (i, &w)| acc | (u128::from((state[w] >> lane) & 1 == 1) << i));
                *counts.entry(value).or_insert(0) += 1;
            }
            total += lanes;
        }
        ShotHistogram {
            counts,
            shots: total,
            seed,
        }
    }

    /// Samples `shots` noisy executions starting from `input`.
    pub fn sample(&self, input: &BasisState, shots: u64, seed: u64, readout: &[Wire]) -> Result<ShotHistogram, SimError> {
        if input.len() != self.width {
            return Err(SimError::LengthMismatch {
                expected: self.width,
                got: input.len(),
            });
        }
        if shots == 0 {
            return Err(SimError::InvalidShots);
        }
        if readout.len() > 128 {
            return Err(SimError::ReadoutTooWide(readout.len()));
        }
        if let Some(&wire) = readout.iter().find(|&&w| w >= self.width) {
            return Err(SimError::ReadoutOutOfRange { wire, width: self.width });
        }

        if self.n_sites == 0 {
            let mut hist = self.sample_blocks(input, 0..1, 1, seed, readout);
            hist.counts.values_mut().for_each(|c| *c = shots);
            hist.shots = shots;
            return Ok(hist);
        }

        let blocks = shots.div_ceil(LANES);
        if blocks <= BLOCKS_PER_TASK {
            return Ok(self.sample_blocks(input, 0..blocks, shots, seed, readout));
        }
        let empty = ShotHistogram {
            counts: BTreeMap::new(),
            shots: 0,
            seed,
        };
        Ok((0..blocks.div_ceil(BLOCKS_PER_TASK))
            .into_par_iter()
            .map(|t| {
                let range = t * BLOCKS_PER_TASK..((t + 1) * BLOCKS_PER_TASK).min(blocks);
                self.sample_blocks(input, range, shots, seed, readout)
            })
            .reduce(|| empty.clone(), ShotHistogram::merge))
    }
}

/// Random stream for one block of 64 shots: ChaCha8 keyed by `seed`, stream
/// id `block`. Shot `s` is lane `s % 64` of block `s / 64`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Monte Carlo execution of `circuit` under `noise`, histogrammed over the
/// `readout` wires.
pub fn run_noisy(
    circuit: &Circuit,
    input: &BasisState,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
    readout: &[Wire],
) -> Result<ShotHistogram, SimError> {
    if input.len() != circuit.width() {
        return Err(SimError::LengthMismatch {
            expected: circuit.width(),
            got: input.len(),
        });
    }
    NoisyProgram::compile(circuit, noise)?.sample(input, shots, seed, readout)
}
