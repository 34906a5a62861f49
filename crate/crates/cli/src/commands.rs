//! Subcommand dispatch. Every command yields a [`Report`]; physics outcomes
//! such as "not completely positive" are reported by `check` rather than
//! treated as failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dilation_core::channel::DEFAULT_TRUNCATION;
use dilation_core::instrument::DEFAULT_THRESHOLD;
use dilation_core::matcore::DEFAULT_TOL;
use dilation_core::random::stream_rng;
use dilation_core::{
    build_dilation_unitary, build_instrument_dilation, canonical_decompose, check_completeness,
    check_properties, measure_via_dilation, outcome_statistics, pad_to_complete, random_cptp,
    sample_outcomes, verify_dilation, DensityMatrix, DynamicalMap, Instrument, MapProperties,
    OutcomeResult,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::format::{
    matrix_to_data, read_json, write_json, ChannelSpecFile, InstrumentSpecFile, StateSpecFile,
};
use crate::report::{digest_inputs, ensure_finite, Report};

#[derive(Debug, Parser)]
#[command(
    name = "dilate",
    version,
    about = "Unitary dilations of quantum channels and instruments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the default numerical tolerance for property checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Add a `generated_at` unix timestamp to the report.
    #[arg(long, global = true)]
    timestamp: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// Channel specification file.
    #[arg(long)]
    channel: Option<PathBuf>,
    /// Instrument specification file.
    #[arg(long)]
    instrument: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report map axioms (Hermiticity, trace preservation, complete positivity) or instrument completeness.
    Check(Input),
    /// Canonical decomposition summary: rank and weights.
    Decompose(Input),
    /// Emit the dilation unitary with its dimensions and unitarity residual.
    Dilate(Input),
    /// Compare the dilation route with direct application on seeded random states.
    Verify {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Outcome table for a state, computed through the instrument dilation.
    Measure {
        #[arg(long)]
        instrument: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Monte Carlo outcome histogram.
    Sample {
        #[arg(long)]
        instrument: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Complete an instrument with a discard outcome.
    Pad {
        #[arg(long)]
        instrument: PathBuf,
        /// Also write the padded instrument file here.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Seeded random CPTP channel.
    Random {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        seed: u64,
        /// Also write the channel file here.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Decompose(_) => "decompose",
            Command::Dilate(_) => "dilate",
            Command::Verify { .. } => "verify",
            Command::Measure { .. } => "measure",
            Command::Sample { .. } => "sample",
            Command::Pad { .. } => "pad",
            Command::Random { .. } => "random",
        }
    }
}

/// What the binary should do after parsing and running a command line.
#[derive(Debug)]
pub struct Execution {
    pub report: Option<Report>,
    /// Plain text for standard output (help and version).
    pub text: Option<String>,
    pub out: Option<PathBuf>,
    pub exit_code: i32,
}

/// Parses `args` (program name first) and runs the selected subcommand.
pub fn run_command<I, T>(args: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Execution {
                    report: None,
                    text: Some(e.to_string()),
                    out: None,
                    exit_code: 0,
                };
            }
            let err = CliError::Usage(e.render().to_string().trim_end().to_string());
            return Execution {
                report: Some(Report::error("", digest_inputs(&[]), json!({}), &err)),
                text: None,
                out: None,
                exit_code: err.exit_code(),
            };
        }
    };

    let name = cli.command.name();
    let mut ctx = Context {
        tol: cli.tol.unwrap_or(DEFAULT_TOL),
        inputs: Vec::new(),
        parameters: serde_json::Map::new(),
    };
    if cli.tol.is_some() {
        ctx.param("tol", json!(ctx.tol));
    }
    let outcome = ctx.dispatch(&cli.command).and_then(|results| {
        ensure_finite(&results)?;
        Ok(results)
    });
    let digest = digest_inputs(&ctx.inputs);
    let parameters = Value::Object(ctx.parameters);
    let (mut report, exit_code) = match outcome {
        Ok(results) => (Report::ok(name, digest, parameters, results), 0),
        Err(err) => (
            Report::error(name, digest, parameters, &err),
            err.exit_code(),
        ),
    };
    if cli.timestamp {
        report.generated_at = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    Execution {
        report: Some(report),
        text: None,
        out: cli.out,
        exit_code,
    }
}

struct Context {
    tol: f64,
    inputs: Vec<Vec<u8>>,
    parameters: serde_json::Map<String, Value>,
}

enum Loaded {
    Channel(DynamicalMap),
    Instrument(Instrument),
}

impl Context {
    fn param(&mut self, key: &str, value: Value) {
        self.parameters.insert(key.into(), value);
    }

    fn channel(&mut self, path: &Path) -> Result<DynamicalMap, CliError> {
        let (spec, bytes) = read_json::<ChannelSpecFile>(path)?;
        self.inputs.push(bytes);
        spec.to_map()
    }

    fn instrument(&mut self, path: &Path) -> Result<Instrument, CliError> {
        let (spec, bytes) = read_json::<InstrumentSpecFile>(path)?;
        self.inputs.push(bytes);
        spec.to_instrument()
    }

    fn state(&mut self, path: &Path) -> Result<DensityMatrix, CliError> {
        let (spec, bytes) = read_json::<StateSpecFile>(path)?;
        self.inputs.push(bytes);
        spec.to_state()
    }

    fn input(&mut self, input: &Input) -> Result<Loaded, CliError> {
        match (&input.channel, &input.instrument) {
            (Some(p), None) => Ok(Loaded::Channel(self.channel(p)?)),
            (None, Some(p)) => Ok(Loaded::Instrument(self.instrument(p)?)),
            _ => Err(CliError::Usage(
                "give exactly one of --channel or --instrument".into(),
            )),
        }
    }

    fn dispatch(&mut self, command: &Command) -> Result<Value, CliError> {
        match command {
            Command::Check(input) => match self.input(input)? {
                Loaded::Channel(map) => Ok(json!({
                    "kind": "channel",
                    "dim": map.dim(),
                    "properties": properties_json(&check_properties(&map, self.tol)),
                })),
                Loaded::Instrument(inst) => {
                    let (complete, defect) = check_completeness(&inst, self.tol);
                    let outcomes: Vec<Value> = inst
                        .outcomes()
                        .iter()
                        .map(|(label, map)| {
                            json!({
                                "label": label,
                                "properties": properties_json(&check_properties(map, self.tol)),
                            })
                        })
                        .collect();
                    let mut v = json!({
                        "kind": "instrument",
                        "dim": inst.dim(),
                        "outcome_count": inst.len(),
                        "complete": complete,
                        "completeness_defect": defect.max_abs(),
                        "outcomes": outcomes,
                    });
                    if let Some(i) = inst.padded_index() {
                        v["padded_index"] = json!(i);
                    }
                    Ok(v)
                }
            },
            Command::Decompose(input) => match self.input(input)? {
                Loaded::Channel(map) => Ok(json!({
                    "kind": "channel",
                    "decomposition": decomposition_json(&map)?,
                })),
                Loaded::Instrument(inst) => {
                    let outcomes = inst
                        .outcomes()
                        .iter()
                        .map(|(label, map)| {
                            Ok(json!({ "label": label, "decomposition": decomposition_json(map)? }))
                        })
                        .collect::<Result<Vec<Value>, CliError>>()?;
                    Ok(json!({ "kind": "instrument", "outcomes": outcomes }))
                }
            },
            Command::Dilate(input) => match self.input(input)? {
                Loaded::Channel(map) => {
                    let du =
                        build_dilation_unitary(&canonical_decompose(&map, DEFAULT_TRUNCATION)?)?;
                    Ok(json!({
                        "kind": "channel",
                        "sys_dim": du.sys_dim(),
                        "anc_dim": du.anc_dim(),
                        "ancilla_bound": du.sys_dim() * du.sys_dim(),
                        "total_dim": du.sys_dim() * du.anc_dim(),
                        "unitarity_residual": du.unitarity_residual(),
                        "unitary": matrix_to_data(du.unitary()),
                    }))
                }
                Loaded::Instrument(inst) => {
                    let dil = build_instrument_dilation(&inst)?;
                    let sectors: Vec<Value> = dil
                        .sectors()
                        .iter()
                        .map(|s| json!({ "label": s.label, "start": s.range.start, "end": s.range.end }))
                        .collect();
                    Ok(json!({
                        "kind": "instrument",
                        "sys_dim": dil.sys_dim(),
                        "anc_dim": dil.anc_dim(),
                        "ancilla_bound": dil.ancilla_bound(),
                        "total_dim": dil.sys_dim() * dil.anc_dim(),
                        "unitarity_residual": dil.unitarity_residual(),
                        "sectors": sectors,
                        "unitary": matrix_to_data(dil.unitary()),
                    }))
                }
            },
            Command::Verify {
                input,
                trials,
                seed,
            } => {
                self.param("trials", json!(trials));
                self.param("seed", json!(seed));
                match self.input(input)? {
                    Loaded::Channel(map) => {
                        let r = verify_dilation(&map, *trials, *seed)?;
                        Ok(json!({
                            "kind": "channel",
                            "trials": r.trials,
                            "anc_dim": r.anc_dim,
                            "unitarity_residual": r.unitarity_residual,
                            "max_error": r.max_error,
                        }))
                    }
                    Loaded::Instrument(inst) => verify_instrument(&inst, *trials, *seed),
                }
            }
            Command::Measure {
                instrument,
                state,
                threshold,
            } => {
                self.param("threshold", json!(threshold));
                let inst = self.instrument(instrument)?;
                let rho = self.state(state)?;
                let dil = build_instrument_dilation(&inst)?;
                let results = measure_via_dilation(&dil, &rho, *threshold)?;
                let total: f64 = results.iter().map(|r| r.probability).sum();
                let mut v = json!({
                    "outcomes": results.iter().map(outcome_json).collect::<Vec<_>>(),
                    "total_probability": total,
                });
                if let Some(i) = inst.padded_index() {
                    v["padded_index"] = json!(i);
                    v["kept_probability"] = json!(total - results[i].probability);
                }
                Ok(v)
            }
            Command::Sample {
                instrument,
                state,
                shots,
                seed,
            } => {
                self.param("shots", json!(shots));
                self.param("seed", json!(seed));
                let inst = self.instrument(instrument)?;
                let rho = self.state(state)?;
                let dil = build_instrument_dilation(&inst)?;
                let h = sample_outcomes(&dil, &rho, *shots, *seed)?;
                let counts: Vec<Value> = h
                    .counts
                    .iter()
                    .map(|(label, count)| json!({ "label": label, "count": count }))
                    .collect();
                Ok(json!({ "shots": h.shots, "counts": counts }))
            }
            Command::Pad { instrument, emit } => {
                let inst = self.instrument(instrument)?;
                let padded = pad_to_complete(&inst)?;
                let spec = InstrumentSpecFile::from_instrument(&padded, None);
                if let Some(path) = emit {
                    write_json(&spec, path)?;
                }
                let mut v = json!({
                    "padded": padded.padded_index() != inst.padded_index(),
                    "outcome_count": padded.len(),
                    "instrument": serde_json::to_value(&spec).expect("spec serializes"),
                });
                if let Some(i) = padded.padded_index() {
                    v["padded_index"] = json!(i);
                }
                Ok(v)
            }
            Command::Random {
                dim,
                rank,
                seed,
                emit,
            } => {
                self.param("dim", json!(dim));
                self.param("rank", json!(rank));
                self.param("seed", json!(seed));
                let map = random_cptp(*dim, *rank, *seed)?;
                let spec = ChannelSpecFile::from_map(
                    &map,
                    Some(format!("random_cptp_d{dim}_r{rank}_s{seed}")),
                );
                if let Some(path) = emit {
                    write_json(&spec, path)?;
                }
                Ok(json!({ "channel": serde_json::to_value(&spec).expect("spec serializes") }))
            }
        }
    }
}

fn properties_json(p: &MapProperties) -> Value {
    json!({
        "hermiticity_preserving": p.hermiticity_preserving,
        "trace_preserving": p.trace_preserving,
        "completely_positive": p.completely_positive,
        "min_eigenvalue": p.min_eigenvalue,
        "trace_defect": p.trace_defect,
    })
}

fn decomposition_json(map: &DynamicalMap) -> Result<Value, CliError> {
    let dec = canonical_decompose(map, DEFAULT_TRUNCATION)?;
    let operators: Vec<Value> = dec
        .terms()
        .iter()
        .map(|t| json!(matrix_to_data(&t.op)))
        .collect();
    Ok(json!({
        "dim": dec.dim(),
        "rank": dec.rank(),
        "rank_bound": dec.dim() * dec.dim(),
        "weights": dec.weights(),
        "negative_weights": dec.weights().iter().filter(|&&w| w < 0.0).count(),
        "trace_residual": dec.trace_residual(),
        "reconstruction_error": dec.reconstruct().bmat().max_abs_diff(map.bmat()),
        "operators": operators,
    }))
}

fn outcome_json(o: &OutcomeResult) -> Value {
    let mut v = json!({
        "label": o.label,
        "probability": o.probability,
        "raw_unnormalized": matrix_to_data(&o.raw_unnormalized),
    });
    if let Some(post) = &o.post_state {
        v["post_state"] = json!(matrix_to_data(post.matrix()));
    }
    v
}

fn verify_instrument(inst: &Instrument, trials: usize, seed: u64) -> Result<Value, CliError> {
    let dil = build_instrument_dilation(inst)?;
    let mut max_dp = 0.0f64;
    let mut max_raw = 0.0f64;
    let mut max_sum = 0.0f64;
    for t in 0..trials {
        let rho = DensityMatrix::random(inst.dim(), &mut stream_rng(seed, t as u64));
        let via = measure_via_dilation(&dil, &rho, DEFAULT_THRESHOLD)?;
        let direct = outcome_statistics(inst, &rho)?;
        let mut total = 0.0;
        for (a, b) in via.iter().zip(&direct) {
            total += a.probability;
            max_dp = max_dp.max((a.probability - b.probability).abs());
            max_raw = max_raw.max(a.raw_unnormalized.max_abs_diff(&b.raw_unnormalized));
        }
        max_sum = max_sum.max((total - 1.0).abs());
    }
    Ok(json!({
        "kind": "instrument",
        "trials": trials,
        "anc_dim": dil.anc_dim(),
        "ancilla_bound": dil.ancilla_bound(),
        "unitarity_residual": dil.unitarity_residual(),
        "max_probability_error": max_dp,
        "max_raw_error": max_raw,
        "max_probability_sum_error": max_sum,
    }))
}
