use qma_core::builders::{build_qma, AdderVariant, BuiltAdder};
use qma_core::metrics::{input_seed, run_experiment, run_sweep, ExperimentOptions};
use qma_core::oracle::{self, ModAddInstance};
use qma_core::sim::{effective_reset_error, run_noisy, BasisState, NoisyProgram};
use qma_core::{Circuit, Gate, NoiseModel, ResetModel};

/// Shots whose modulo-sum readout is wrong, summed over every valid input.
fn wrong_shots(built: &BuiltAdder, noise: &NoiseModel, shots: u64, seed: u64) -> u64 {
    let program = NoisyProgram::compile(&built.circuit, noise).unwrap();
    let layout = &built.layout;
    let mut wrong = 0;
    for (a, b) in oracle::valid_inputs(layout.n) {
        let ideal = oracle::mod_add_plus_one(&ModAddInstance::new(layout.n, a, b).unwrap());
        let mut s = BasisState::zeros(built.circuit.width());
        s.write(&layout.a_wires, a);
        s.write(&layout.b_wires, b);
        let h = program.sample(&s, shots, input_seed(seed, a, b), &layout.mod_wires).unwrap();
        wrong += h.counts.iter().filter(|(&k, _)| k != ideal).map(|(_, &c)| c).sum::<u64>();
    }
    wrong
}

#[test]
fn reset_runs_follow_purification_law() {
    let shots = 200_000u64;
    for delta in [0.05, 0.1, 0.2] {
        for k in 1..=3 {
            let mut c = Circuit::new(1, "resets");
            c.append(Gate::x(0)).unwrap();
            for _ in 0..k {
                c.append(Gate::reset(0)).unwrap();
            }
            let noise = NoiseModel {
                delta_reset: delta,
                ..NoiseModel::zero()
            };
            let h = run_noisy(&c, &BasisState::zeros(1), &noise, shots, 17, &[0]).unwrap();
            let freq = h.counts.get(&1).copied().unwrap_or(0) as f64 / shots as f64;
            let p = effective_reset_error(delta, k).unwrap();
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * sigma + 1e-12, "δ={delta} k={k}: {freq} vs {p}");
        }
    }
}

#[test]
fn more_noise_means_more_wrong_shots() {
    let built = build_qma(AdderVariant::Qma2, 2).unwrap();
    let mut last = 0;
    for p in [0.0, 0.01, 0.03, 0.1] {
        let noise = NoiseModel {
            p_toffoli: p,
            p_cnot: p,
            ..NoiseModel::zero()
        };
        let w = wrong_shots(&built, &noise, 2000, 3);
        assert!(p == 0.0 && w == 0 || w > last, "p={p}: {w} <= {last}");
        last = w;
    }
}

#[test]
fn reset_only_noise_spares_static_adders_and_favours_doubled_resets() {
    let noise = NoiseModel {
        delta_reset: 0.2,
        ..NoiseModel::zero()
    };
    let opts = ExperimentOptions::default();
    for v in [AdderVariant::Qma1, AdderVariant::Qma2] {
        let r = run_experiment(v, 4, &noise, 1000, 7, &opts).unwrap();
        assert_eq!(*r.nmed().numer(), 0);
    }
    let q3 = wrong_shots(&build_qma(AdderVariant::Qma3, 4).unwrap(), &noise, 1000, 7);
    let q4 = wrong_shots(&build_qma(AdderVariant::Qma4, 4).unwrap(), &noise, 1000, 7);
    // Five wires at δ = 0.2 versus δ² / (δ² + (1-δ)²) ≈ 0.0588.
    let expect3 = 1.0 - 0.8f64.powi(5);
    let expect4 = 1.0 - (1.0 - 0.04 / 0.68f64).powi(5);
    let total = 289.0 * 1000.0;
    assert!((q3 as f64 / total - expect3).abs() < 0.01, "{q3}");
    assert!((q4 as f64 / total - expect4).abs() < 0.01, "{q4}");
    assert!(q4 < q3);
}

#[test]
fn independent_resets_gain_nothing_from_doubling() {
    let noise = NoiseModel {
        delta_reset: 0.2,
        reset_model: ResetModel::Independent,
        ..NoiseModel::zero()
    };
    let q3 = wrong_shots(&build_qma(AdderVariant::Qma3, 3).unwrap(), &noise, 2000, 5) as f64;
    let q4 = wrong_shots(&build_qma(AdderVariant::Qma4, 3).unwrap(), &noise, 2000, 5) as f64;
    assert!((q3 - q4).abs() / q3 < 0.03, "{q3} {q4}");
}

fn shot_count_drift(noise: &NoiseModel, v: AdderVariant) -> f64 {
    let opts = ExperimentOptions::default();
    let lo = run_experiment(v, 4, noise, 1_000, 7, &opts).unwrap().nmed.to_f64();
    let hi = run_experiment(v, 4, noise, 10_000, 7, &opts).unwrap().nmed.to_f64();
    (lo - hi).abs()
}

#[test]
fn nmed_is_stable_in_shot_count_when_outcomes_are_peaked() {
    let noise = NoiseModel {
        p_x: 0.0005,
        p_cnot: 0.005,
        p_toffoli: 0.02,
        p_idle: 0.001,
        delta_reset: 0.02,
        reset_model: ResetModel::Purify,
    };
    for v in AdderVariant::ALL {
        let drift = shot_count_drift(&noise, v);
        assert!(drift < 0.05, "{v}: {drift}");
    }
}

#[test]
#[ignore = "default noise is strong enough that 10^3-shot modes are still unresolved (drift up to ~0.13)"]
fn nmed_is_stable_in_shot_count_at_default_noise() {
    for v in AdderVariant::ALL {
        let drift = shot_count_drift(&NoiseModel::default(), v);
        assert!(drift < 0.05, "{v}: {drift}");
    }
}

#[test]
fn zero_noise_sweep_is_exact() {
    let t = run_sweep(&AdderVariant::ALL, 4, &NoiseModel::zero(), 10, 1, &ExperimentOptions::default()).unwrap();
    for (row, report) in t.rows.iter().zip(&t.reports) {
        assert_eq!(*row.nmed.0.numer(), 0);
        assert!(report.per_input.iter().all(|r| r.ed == Some(0)));
    }
    let foms: Vec<usize> = t.rows.iter().map(|r| r.resources.fom).collect();
    assert_eq!(foms, [323, 224, 168, 168]);
}

#[test]
fn drop_column_matches_raw_error_distances() {
    let t = run_sweep(&AdderVariant::ALL, 3, &NoiseModel::default(), 300, 9, &ExperimentOptions::default()).unwrap();
    let nmed = |i: usize| {
        let r = &t.reports[i];
        let eds: u128 = r.per_input.iter().filter_map(|x| x.ed).sum();
        eds as f64 / r.n_inputs as f64 / r.s_max as f64
    };
    for i in 0..4 {
        assert!((t.rows[i].nmed.to_f64() - nmed(i)).abs() < 1e-12);
        let expect = 100.0 * (nmed(0) - nmed(i)) / nmed(0);
        let got = t.rows[i].nmed_drop.as_f64().unwrap();
        assert!((got - expect).abs() <= 0.005 + 1e-9, "{got} vs {expect}");
    }
}
