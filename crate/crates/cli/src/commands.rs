use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use qma_core::analyzer::{analyze, compare, Percent, ReportDelta};
use qma_core::metrics::{run_sweep, ErrorReport, ExperimentOptions, IdealConvention, SweepRow, SweepTable};
use qma_core::oracle::{self, ModAddInstance};
use qma_core::qasm::{export_qasm, parse_qasm_bytes};
use qma_core::sim::{most_frequent, run_exact, NoisyProgram};
use qma_core::verify::{verify_layout, VerifyError};
use qma_core::{build_qma, AdderVariant, BasisState, BuiltAdder, NoiseModel, ResetModel, ResourceReport};
use serde::Serialize;

use crate::args::{AnalyzeArgs, BuildArgs, ExperimentArgs, Format, NoiseArgs, SimulateArgs, VariantSelection, VerifyArgs};
use crate::config::FileConfig;
use crate::error::CliError;
use crate::render;

const SCHEMA: u32 = 1;
const DEFAULT_SHOTS: u64 = 1000;
const DEFAULT_SEED: u64 = 7;
/// Largest exponent accepted by commands that enumerate the input domain.
const EXHAUSTIVE_MAX_N: u32 = 12;

fn require_n(flag: Option<u32>, cfg: &FileConfig) -> Result<u32, CliError> {
    match flag.or(cfg.n) {
        None => Err(CliError::usage("missing --n")),
        Some(0) => Err(CliError::usage("n must be ≥ 1")),
        Some(n) if n > oracle::MAX_N => Err(CliError::usage(format!("n must be ≤ {}", oracle::MAX_N))),
        Some(n) => Ok(n),
    }
}

fn require_exhaustive_n(n: u32) -> Result<u32, CliError> {
    if n > EXHAUSTIVE_MAX_N {
        return Err(CliError::usage(format!(
            "n = {n} is too large to enumerate every input (max {EXHAUSTIVE_MAX_N})"
        )));
    }
    Ok(n)
}

fn format_or(flag: Option<Format>, cfg: &FileConfig, default: Format) -> Result<Format, CliError> {
    match (flag, &cfg.format) {
        (Some(f), _) => Ok(f),
        (None, Some(s)) => Format::from_str(s, true).map_err(|_| CliError::usage(format!("unknown format `{s}`"))),
        (None, None) => Ok(default),
    }
}

fn variants(sel: &VariantSelection) -> Result<Vec<AdderVariant>, CliError> {
    if sel.all {
        return Ok(AdderVariant::ALL.to_vec());
    }
    if sel.variants.is_empty() {
        return Err(CliError::usage("no variants given (name some or pass --all)"));
    }
    let mut v = sel.variants.clone();
    v.sort();
    v.dedup();
    Ok(v)
}

/// Applies one `--noise` item to `noise`.
pub fn apply_noise_setting(noise: &mut NoiseModel, setting: &str) -> Result<(), CliError> {
    match setting {
        "zero" => {
            *noise = NoiseModel {
                reset_model: noise.reset_model,
                ..NoiseModel::zero()
            };
            return Ok(());
        }
        "default" => {
            *noise = NoiseModel {
                reset_model: noise.reset_model,
                ..NoiseModel::default()
            };
            return Ok(());
        }
        _ => {}
    }
    let (key, value) = setting
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("bad noise setting `{setting}` (expected key=value or zero)")))?;
    let p: f64 = value
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("bad probability `{value}` for {key}")))?;
    match key.trim() {
        "x" | "p_x" => noise.p_x = p,
        "cnot" | "p_cnot" => noise.p_cnot = p,
        "toffoli" | "p_toffoli" => noise.p_toffoli = p,
        "gate" => {
            noise.p_x = p;
            noise.p_cnot = p;
            noise.p_toffoli = p;
        }
        "idle" | "p_idle" => noise.p_idle = p,
        "delta" | "delta_reset" => noise.delta_reset = p,
        other => {
            return Err(CliError::usage(format!(
                "unknown noise key `{other}` (expected x, cnot, toffoli, gate, idle or delta)"
            )))
        }
    }
    Ok(())
}

fn resolve_noise(args: &NoiseArgs, cfg: &FileConfig) -> Result<NoiseModel, CliError> {
    let mut noise = NoiseModel::default();
    let file_values = [
        (&mut noise.p_x, cfg.p_x),
        (&mut noise.p_cnot, cfg.p_cnot),
        (&mut noise.p_toffoli, cfg.p_toffoli),
        (&mut noise.p_idle, cfg.p_idle),
        (&mut noise.delta_reset, cfg.delta_reset),
    ];
    for (field, value) in file_values {
        if let Some(v) = value {
            *field = v;
        }
    }
    if let Some(m) = &cfg.reset_model {
        noise.reset_model = m.parse::<ResetModel>().map_err(CliError::usage)?;
    }
    if let Some(m) = args.reset_model {
        noise.reset_model = m;
    }
    for setting in &args.noise {
        apply_noise_setting(&mut noise, setting)?;
    }
    noise.validate().map_err(CliError::usage)?;
    Ok(noise)
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn build(variant: AdderVariant, n: u32) -> Result<BuiltAdder, CliError> {
    build_qma(variant, n).map_err(CliError::usage)
}

fn summary(r: &ResourceReport) -> String {
    format!("width={} cnot={} toffoli={}", r.width, r.cnot_count, r.toffoli_count)
}

pub fn cmd_build(args: &BuildArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let n = require_n(args.n, cfg)?;
    let built = build(args.variant, n)?;
    let doc = export_qasm(&built);
    let line = summary(&analyze(&built.circuit));
    match &args.output {
        Some(path) => {
            emit(Some(path), &doc.text)?;
            emit(None, &format!("{line}\n"))
        }
        None => {
            emit(None, &doc.text)?;
            eprintln!("{line}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct AnalyzeRow {
    variant: AdderVariant,
    n: u32,
    #[serde(flatten)]
    resources: ResourceReport,
    reduction: ReportDelta,
}

#[derive(Serialize)]
struct AnalyzeJson<'a> {
    schema: u32,
    command: &'static str,
    n: u32,
    rows: &'a [AnalyzeRow],
}

const ANALYZE_COLUMNS: [&str; 15] = [
    "variant",
    "n",
    "qubits",
    "resets",
    "cnot_depth",
    "toffoli_depth",
    "cnot_count",
    "toffoli_count",
    "fom",
    "qubits_drop",
    "cnot_depth_drop",
    "toffoli_depth_drop",
    "cnot_count_drop",
    "toffoli_count_drop",
    "fom_drop",
];

pub fn cmd_analyze(args: &AnalyzeArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let n = require_n(args.n, cfg)?;
    let format = format_or(args.format, cfg, Format::Table)?;
    let variants = variants(&args.select)?;
    let mut reports = Vec::new();
    for &v in &variants {
        reports.push(analyze(&build(v, n)?.circuit));
    }
    let deltas = compare(&reports, 0).expect("at least one report");
    let rows: Vec<AnalyzeRow> = variants
        .iter()
        .zip(reports.iter().zip(deltas))
        .map(|(&variant, (&resources, reduction))| AnalyzeRow {
            variant,
            n,
            resources,
            reduction,
        })
        .collect();
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let res = &r.resources;
            let d = &r.reduction;
            vec![
                r.variant.to_string(),
                n.to_string(),
                res.width.to_string(),
                res.reset_count.to_string(),
                res.cnot_depth.to_string(),
                res.toffoli_depth.to_string(),
                res.cnot_count.to_string(),
                res.toffoli_count.to_string(),
                res.fom.to_string(),
                d.width.to_string(),
                d.cnot_depth.to_string(),
                d.toffoli_depth.to_string(),
                d.cnot_count.to_string(),
                d.toffoli_count.to_string(),
                d.fom.to_string(),
            ]
        })
        .collect();
    let text = match format {
        Format::Csv => render::csv(&ANALYZE_COLUMNS, &cells)?,
        Format::Table => render::table(&ANALYZE_COLUMNS, &cells),
        Format::Json => to_json(&AnalyzeJson {
            schema: SCHEMA,
            command: "analyze",
            n,
            rows: &rows,
        }),
    };
    emit(args.output.as_deref(), &text)
}

#[derive(Serialize)]
struct Outcome {
    value: u128,
    count: u64,
}

#[derive(Serialize)]
struct SimulateJson {
    schema: u32,
    command: &'static str,
    variant: AdderVariant,
    n: u32,
    a: u128,
    b: u128,
    ideal: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_mod: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_sum: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    most_frequent: Option<u128>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    histogram: Vec<Outcome>,
}

pub fn cmd_simulate(args: &SimulateArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let n = require_n(args.n, cfg)?;
    let format = format_or(args.format, cfg, Format::Table)?;
    let inst = ModAddInstance::new(n, args.a, args.b).map_err(CliError::usage)?;
    let built = build(args.variant, n)?;
    let layout = &built.layout;
    let mut input = BasisState::zeros(built.circuit.width());
    input.write(&layout.a_wires, args.a);
    input.write(&layout.b_wires, args.b);
    let mut report = SimulateJson {
        schema: SCHEMA,
        command: "simulate",
        variant: args.variant,
        n,
        a: args.a,
        b: args.b,
        ideal: oracle::mod_add_plus_one(&inst),
        exact_mod: None,
        exact_sum: None,
        noise: None,
        shots: None,
        seed: None,
        most_frequent: None,
        histogram: Vec::new(),
    };
    match args.shots.or(cfg.shots) {
        None => {
            let out = run_exact(&built.circuit, &input).map_err(CliError::usage)?;
            report.exact_mod = Some(out.read(&layout.mod_wires));
            report.exact_sum = Some(out.read(&layout.sum_wires));
        }
        Some(shots) => {
            let noise = resolve_noise(&args.noise, cfg)?;
            let seed = args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let hist = NoisyProgram::compile(&built.circuit, &noise)
                .and_then(|p| p.sample(&input, shots, seed, &layout.mod_wires))
                .map_err(CliError::usage)?;
            report.most_frequent = Some(most_frequent(&hist).map_err(CliError::usage)?);
            let mut outcomes: Vec<Outcome> = hist.counts.iter().map(|(&value, &count)| Outcome { value, count }).collect();
            outcomes.sort_by(|x, y| y.count.cmp(&x.count).then(x.value.cmp(&y.value)));
            report.histogram = outcomes;
            report.noise = Some(noise);
            report.shots = Some(shots);
            report.seed = Some(seed);
        }
    }
    let text = match format {
        Format::Json => to_json(&report),
        Format::Csv | Format::Table => {
            let mut rows = vec![
                vec!["variant".into(), args.variant.to_string()],
                vec!["ideal".into(), report.ideal.to_string()],
            ];
            if let (Some(m), Some(s)) = (report.exact_mod, report.exact_sum) {
                rows.push(vec!["mod".into(), m.to_string()]);
                rows.push(vec!["sum".into(), s.to_string()]);
            }
            if let Some(m) = report.most_frequent {
                rows.push(vec!["most_frequent".into(), m.to_string()]);
                for o in report.histogram.iter().take(8) {
                    rows.push(vec![format!("count[{}]", o.value), o.count.to_string()]);
                }
            }
            if format == Format::Csv {
                render::csv(&["field", "value"], &rows)?
            } else {
                render::table(&["field", "value"], &rows)
            }
        }
    };
    emit(None, &text)
}

struct ExperimentSettings {
    variants: Vec<AdderVariant>,
    n: u32,
    shots: u64,
    seed: u64,
    noise: NoiseModel,
    options: ExperimentOptions,
}

fn experiment_settings(args: &ExperimentArgs, cfg: &FileConfig) -> Result<ExperimentSettings, CliError> {
    let n = require_exhaustive_n(require_n(args.n, cfg)?)?;
    let shots = args.shots.or(cfg.shots).unwrap_or(DEFAULT_SHOTS);
    if shots == 0 {
        return Err(CliError::usage("shots must be ≥ 1"));
    }
    let ideal = match (&args.ideal_convention, &cfg.ideal_convention) {
        (Some(i), _) => *i,
        (None, Some(s)) => s.parse::<IdealConvention>().map_err(CliError::usage)?,
        (None, None) => IdealConvention::default(),
    };
    Ok(ExperimentSettings {
        variants: variants(&args.select)?,
        n,
        shots,
        seed: args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        noise: resolve_noise(&args.noise, cfg)?,
        options: ExperimentOptions {
            ideal,
            full_basis: args.full_basis || cfg.full_basis.unwrap_or(false),
            score_sum: args.score_sum || cfg.score_sum.unwrap_or(false),
        },
    })
}

fn run(settings: &ExperimentSettings) -> Result<SweepTable, CliError> {
    run_sweep(
        &settings.variants,
        settings.n,
        &settings.noise,
        settings.shots,
        settings.seed,
        &settings.options,
    )
    .map_err(CliError::usage)
}

fn percent(p: Percent) -> String {
    p.to_string()
}

const SWEEP_COLUMNS: [&str; 9] = [
    "variant",
    "n",
    "qubits",
    "toffoli_depth",
    "fom",
    "fom_drop",
    "med",
    "nmed",
    "nmed_drop",
];

fn sweep_cells(rows: &[SweepRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.variant.to_string(),
                r.n.to_string(),
                r.resources.width.to_string(),
                r.resources.toffoli_depth.to_string(),
                r.resources.fom.to_string(),
                percent(r.fom_drop),
                format!("{:.4}", r.med.to_f64()),
                format!("{:.4}", r.nmed.to_f64()),
                percent(r.nmed_drop),
            ]
        })
        .collect()
}

#[derive(Serialize)]
struct ExperimentJson<'a> {
    schema: u32,
    command: &'static str,
    n: u32,
    shots: u64,
    seed: u64,
    noise: NoiseModel,
    options: ExperimentOptions,
    table: &'a [SweepRow],
    #[serde(skip_serializing_if = "Option::is_none")]
    reports: Option<&'a [ErrorReport]>,
}

fn per_input_csv(reports: &[ErrorReport], score_sum: bool) -> Result<String, CliError> {
    let mut headers = vec!["variant", "n", "a", "b", "ideal", "observed", "ed"];
    if score_sum {
        headers.extend(["sum_observed", "sum_ed"]);
    }
    let opt = |v: Option<u128>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut rows = Vec::new();
    for r in reports {
        for row in &r.per_input {
            let mut cells = vec![
                r.variant.to_string(),
                r.n.to_string(),
                row.a.to_string(),
                row.b.to_string(),
                opt(row.ideal),
                row.observed.to_string(),
                opt(row.ed),
            ];
            if score_sum {
                cells.push(opt(row.sum_observed));
                cells.push(opt(row.sum_ed));
            }
            rows.push(cells);
        }
    }
    render::csv(&headers, &rows)
}

/// Every NMED strictly below the previous one.
fn check_ordering(rows: &[SweepRow]) -> Result<(), CliError> {
    for pair in rows.windows(2) {
        if pair[1].nmed.0 >= pair[0].nmed.0 {
            return Err(CliError::Ordering(format!(
                "NMED ordering violated: {} {:.4} is not above {} {:.4}",
                pair[0].variant,
                pair[0].nmed.to_f64(),
                pair[1].variant,
                pair[1].nmed.to_f64()
            )));
        }
    }
    Ok(())
}

pub fn cmd_experiment(args: &ExperimentArgs, cfg: &FileConfig, sweep_only: bool) -> Result<(), CliError> {
    let default_format = if sweep_only { Format::Csv } else { Format::Json };
    let format = format_or(args.format, cfg, default_format)?;
    let settings = experiment_settings(args, cfg)?;
    let table = run(&settings)?;
    let text = match format {
        Format::Json => to_json(&ExperimentJson {
            schema: SCHEMA,
            command: if sweep_only { "sweep" } else { "experiment" },
            n: settings.n,
            shots: settings.shots,
            seed: settings.seed,
            noise: settings.noise,
            options: settings.options,
            table: &table.rows,
            reports: (!sweep_only).then_some(&table.reports[..]),
        }),
        Format::Csv if !sweep_only => per_input_csv(&table.reports, settings.options.score_sum)?,
        Format::Csv => render::csv(&SWEEP_COLUMNS, &sweep_cells(&table.rows))?,
        Format::Table => render::table(&SWEEP_COLUMNS, &sweep_cells(&table.rows)),
    };
    emit(args.output.as_deref(), &text)?;
    if args.check_ordering {
        check_ordering(&table.rows)?;
    }
    Ok(())
}

/// Parses `4`, `1..6` or `1..=6` (both inclusive).
pub fn parse_n_range(s: &str) -> Result<std::ops::RangeInclusive<u32>, CliError> {
    let bad = || CliError::usage(format!("bad n range `{s}` (expected N or A..B)"));
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (num(lo)?, num(hi.strip_prefix('=').unwrap_or(hi))?),
        None => {
            let n = num(s)?;
            (n, n)
        }
    };
    if lo == 0 {
        return Err(CliError::usage("n must be ≥ 1"));
    }
    if lo > hi {
        return Err(bad());
    }
    require_exhaustive_n(hi)?;
    Ok(lo..=hi)
}

fn verify_failure(label: &str, err: VerifyError) -> CliError {
    match err {
        VerifyError::Mismatch(c) => {
            let line = format!(
                "{label}: FAIL counterexample variant={label_v} n={} a={} b={} expected={} got={} register={:?}",
                c.n,
                c.a,
                c.b,
                c.expected,
                c.got,
                c.role,
                label_v = label.split_whitespace().next().unwrap_or(label),
            );
            let _ = emit(None, &format!("{line}\n"));
            CliError::Verify(line)
        }
        other => CliError::usage(format!("{label}: {other}")),
    }
}

pub fn cmd_verify(args: &VerifyArgs, cfg: &FileConfig) -> Result<(), CliError> {
    if let Some(path) = &args.qasm {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let parsed = parse_qasm_bytes(&bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let layout = parsed
            .layout
            .ok_or_else(|| CliError::usage(format!("{}: no layout comment", path.display())))?;
        require_exhaustive_n(layout.n)?;
        let name = parsed.variant.map(|v| v.to_string()).unwrap_or_else(|| "circuit".into());
        let label = format!("{name} n={}", layout.n);
        let checked = verify_layout(&parsed.circuit, &layout).map_err(|e| verify_failure(&label, e))?;
        return emit(None, &format!("{label}: pass ({checked} inputs)\n"));
    }
    let range = match (&args.n, cfg.n) {
        (Some(s), _) => parse_n_range(s)?,
        (None, Some(n)) => parse_n_range(&n.to_string())?,
        (None, None) => return Err(CliError::usage("missing --n")),
    };
    let variants = variants(&args.select)?;
    for v in variants {
        for n in range.clone() {
            let built = build(v, n)?;
            let label = format!("{v} n={n}");
            let checked = verify_layout(&built.circuit, &built.layout).map_err(|e| verify_failure(&label, e))?;
            emit(None, &format!("{label}: pass ({checked} inputs)\n"))?;
        }
    }
    Ok(())
}
