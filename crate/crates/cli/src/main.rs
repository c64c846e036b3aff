//! Experiment front door for the diagq library.
//!
//! Every subcommand is deterministic given its flags: one global `--seed`
//! feeds counter-split RNG streams, one per sampled object, so repeated runs
//! produce byte-identical artifacts. Tabular artifacts go to `--output` as
//! CSV (17-significant-digit floats) or as a JSON mirror of the same table.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use diagq::circuits::RngSeed;
use diagq::designs::eta_exact;
use diagq::iqp::{
    empirical_distribution, ising_amplitude, output_amplitudes, output_distribution,
    random_z_product_circuit, sample_outputs, IqpCircuit,
};
use diagq::moments::{gcz_epsilon, is_exact_design, t_conv, theorem_gr_predicate};
use diagq::state::trace_distance;
use diagq::thermo::{
    calibrate_beta, gibbs_state, ising_chain, qpe_thermalize, reduce_density, SystemSplit,
};

#[derive(Parser)]
#[command(
    name = "diagq",
    version,
    about = "Diagonal quantum circuit experiments: design checks, IQP sampling, thermalization"
)]
struct Cli {
    /// Base seed; sampled objects use counter-split streams of it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the tabular artifact here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check whether the r-qubit phase-random circuit is an exact
    /// diagonal-unitary t-design; exits nonzero if the sweep contradicts the
    /// arity predicate.
    DesignCheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        t: usize,
    },

    /// Scan the phase-random-state gap to Haar over qubit counts; the ratio
    /// column is the gap rescaled by 2^n (tends to t(t-1)).
    EtaScan {
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long)]
        n_max: usize,
    },

    /// Tabulate the controlled-Z circuit's deviation per length and report
    /// the smallest length reaching the requested accuracy.
    MixingScan {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
    },

    /// Sample a random Z-product circuit: exact distribution next to the
    /// empirical histogram.
    IqpSample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        gates: usize,
        #[arg(long)]
        shots: usize,
        /// Also write the sampled circuit as a JSON corpus file.
        #[arg(long)]
        circuit_out: Option<PathBuf>,
    },

    /// Compare Ising partition-sum amplitudes against the statevector route
    /// on one circuit; exits nonzero above a 1e-10 discrepancy.
    IqpVerify {
        #[arg(long, required_unless_present = "circuit_in")]
        n: Option<usize>,
        #[arg(long, required_unless_present = "circuit_in")]
        gates: Option<usize>,
        /// Read the circuit from a JSON corpus file instead of sampling.
        #[arg(long)]
        circuit_in: Option<PathBuf>,
    },

    /// Run the QPE thermalizer on an open Ising chain and compare the reduced
    /// system state against the calibrated Gibbs state.
    Thermalize {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        n_s: usize,
        #[arg(long, allow_hyphen_values = true)]
        e: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        coupling: f64,
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        field: f64,
    },
}

/// One table cell; floats print with 17 significant digits in CSV.
enum Cell {
    U(u64),
    F(f64),
    S(String),
    B(bool),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::U(v) => v.to_string(),
            Cell::F(v) => format!("{v:.16e}"),
            Cell::S(v) => v.clone(),
            Cell::B(v) => v.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::U(v) => serde_json::json!(v),
            Cell::F(v) => serde_json::json!(v),
            Cell::S(v) => serde_json::json!(v),
            Cell::B(v) => serde_json::json!(v),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&line.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Vec<serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|r| r.iter().map(Cell::json).collect())
                    .collect();
                let value = serde_json::json!({ "columns": self.columns, "rows": rows });
                let mut s = serde_json::to_string_pretty(&value).expect("json");
                s.push('\n');
                s
            }
        }
    }
}

fn emit(cli_output: &Option<PathBuf>, artifact: String) -> Result<()> {
    match cli_output {
        Some(path) => fs::write(path, artifact)
            .with_context(|| format!("writing artifact to {}", path.display())),
        None => {
            print!("{artifact}");
            Ok(())
        }
    }
}

/// Per-run thermalizer report, serialized with the documented key names.
#[derive(Serialize)]
struct RunReport {
    n: usize,
    #[serde(rename = "n_S")]
    n_s: usize,
    #[serde(rename = "E")]
    e: f64,
    delta: f64,
    r: usize,
    success: bool,
    success_probability: f64,
    trace_distance_to_gibbs: Option<f64>,
    beta: f64,
    leakage: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(consistent) => {
            if consistent {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

/// Returns whether the subcommand's internal consistency assertions held.
fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::DesignCheck { n, r, t } => {
            let report = is_exact_design(*n, *r, *t).context("design check (module moments)")?;
            let predicted = theorem_gr_predicate(*n, *r, *t);
            let artifact = match cli.format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&report).expect("json");
                    s.push('\n');
                    s
                }
                Format::Csv => Table {
                    columns: vec!["n", "t", "ensemble", "norm", "distance", "is_exact"],
                    rows: vec![vec![
                        Cell::U(report.n as u64),
                        Cell::U(report.t as u64),
                        Cell::S(report.ensemble.clone()),
                        Cell::S(report.norm.clone()),
                        Cell::F(report.distance),
                        Cell::B(report.is_exact),
                    ]],
                }
                .render(Format::Csv),
            };
            emit(&cli.output, artifact)?;
            eprintln!(
                "G_{r} on {n} qubits at t={t}: {}; predicate says {}",
                if report.is_exact {
                    "exact"
                } else {
                    "not exact"
                },
                if predicted { "exact" } else { "not exact" }
            );
            Ok(report.is_exact == predicted)
        }

        Command::EtaScan { t, n_min, n_max } => {
            if *n_min < 1 || n_min > n_max {
                return Err(anyhow!("need 1 <= n-min <= n-max"));
            }
            let mut table = Table {
                columns: vec!["n", "t", "exact_distance", "leading_term", "ratio"],
                rows: Vec::new(),
            };
            for n in *n_min..=*n_max {
                let res = eta_exact(n, *t)
                    .with_context(|| format!("eta at n={n} (modules designs/moments)"))?;
                table.rows.push(vec![
                    Cell::U(n as u64),
                    Cell::U(*t as u64),
                    Cell::F(res.exact_distance),
                    Cell::F(res.leading_term),
                    Cell::F(res.exact_distance * (1u64 << n) as f64),
                ]);
            }
            emit(&cli.output, table.render(cli.format))?;
            eprintln!("eta scan done: t={t}, n in {n_min}..={n_max}");
            Ok(true)
        }

        Command::MixingScan { n, eps } => {
            let threshold = t_conv(*n, *eps).context("mixing threshold (module moments)")?;
            let mut table = Table {
                columns: vec!["steps", "epsilon"],
                rows: Vec::new(),
            };
            let mut last = f64::INFINITY;
            for steps in 0..=threshold {
                last = gcz_epsilon(*n, steps).context("deviation sweep (module moments)")?;
                table.rows.push(vec![Cell::U(steps), Cell::F(last)]);
            }
            emit(&cli.output, table.render(cli.format))?;
            eprintln!("controlled-Z circuit on {n} qubits reaches eps={eps} at T={threshold}");
            Ok(last <= *eps)
        }

        Command::IqpSample {
            n,
            gates,
            shots,
            circuit_out,
        } => {
            let seed = RngSeed(cli.seed);
            let circuit = random_z_product_circuit(*n, *gates, &mut seed.stream(0));
            if let Some(path) = circuit_out {
                let mut s = serde_json::to_string_pretty(&circuit).expect("json");
                s.push('\n');
                fs::write(path, s)
                    .with_context(|| format!("writing circuit to {}", path.display()))?;
            }
            let exact = output_distribution(&circuit).context("strong simulation (module iqp)")?;
            let samples = sample_outputs(&circuit, *shots, &mut seed.stream(1))
                .context("weak simulation (module iqp)")?;
            let empirical = empirical_distribution(*n, &samples)?;
            let mut table = Table {
                columns: vec![
                    "outcome",
                    "exact_probability",
                    "empirical_frequency",
                    "count",
                ],
                rows: Vec::new(),
            };
            for x in 0..1usize << n {
                table.rows.push(vec![
                    Cell::S(format!("{x:0width$b}", width = n)),
                    Cell::F(exact.probability(x)),
                    Cell::F(empirical.probability(x)),
                    Cell::U((empirical.probability(x) * *shots as f64).round() as u64),
                ]);
            }
            emit(&cli.output, table.render(cli.format))?;
            eprintln!("sampled {shots} shots from a {gates}-gate circuit on {n} qubits");
            Ok(true)
        }

        Command::IqpVerify {
            n,
            gates,
            circuit_in,
        } => {
            let circuit: IqpCircuit = match circuit_in {
                Some(path) => {
                    let raw = fs::read_to_string(path)
                        .with_context(|| format!("reading circuit from {}", path.display()))?;
                    serde_json::from_str(&raw).context("parsing circuit JSON")?
                }
                None => {
                    let (n, gates) = (
                        n.expect("required by clap"),
                        gates.expect("required by clap"),
                    );
                    random_z_product_circuit(n, gates, &mut RngSeed(cli.seed).stream(0))
                }
            };
            let sv = output_amplitudes(&circuit).context("statevector route (module iqp)")?;
            let mut table = Table {
                columns: vec![
                    "outcome",
                    "statevector_probability",
                    "ising_probability",
                    "amplitude_discrepancy",
                ],
                rows: Vec::new(),
            };
            let mut max_dev = 0.0f64;
            for x in 0..1usize << circuit.n {
                let brute =
                    ising_amplitude(&circuit, x).context("partition-sum route (module iqp)")?;
                let dev = (brute - sv.amplitude(x)).norm();
                max_dev = max_dev.max(dev);
                table.rows.push(vec![
                    Cell::S(format!("{x:0width$b}", width = circuit.n)),
                    Cell::F(sv.amplitude(x).norm_sqr()),
                    Cell::F(brute.norm_sqr()),
                    Cell::F(dev),
                ]);
            }
            emit(&cli.output, table.render(cli.format))?;
            eprintln!(
                "max amplitude discrepancy {max_dev:.3e} over {} outcomes",
                1usize << circuit.n
            );
            Ok(max_dev <= 1e-10)
        }

        Command::Thermalize {
            n,
            n_s,
            e,
            delta,
            r,
            runs,
            coupling,
            field,
        } => {
            if n_s >= n {
                return Err(anyhow!("need n_s < n"));
            }
            let h =
                ising_chain(*n, *coupling, *field, false).context("Hamiltonian (module thermo)")?;
            let beta =
                calibrate_beta(&h, e - delta / 2.0).context("beta calibration (module thermo)")?;
            let h_s = ising_chain(*n_s, *coupling, *field, false)
                .context("system Hamiltonian (module thermo)")?;
            let gibbs = gibbs_state(&h_s, beta)?;
            let split = SystemSplit::new(*n_s, n - n_s)?;
            let system: Vec<usize> = (1..=*n_s).collect();
            let seed = RngSeed(cli.seed);

            let mut reports = Vec::with_capacity(*runs);
            for k in 0..*runs {
                let out = qpe_thermalize(&h, split, *e, *delta, *r, &mut seed.stream(k as u64))
                    .context("thermalizer run (module thermo)")?;
                let dist = match &out.state_sb {
                    Some(rho) => Some(
                        trace_distance(&reduce_density(rho, *n, &system)?, &gibbs)
                            .context("Gibbs comparison (module state)")?,
                    ),
                    None => None,
                };
                reports.push(RunReport {
                    n: *n,
                    n_s: *n_s,
                    e: *e,
                    delta: *delta,
                    r: *r,
                    success: out.success,
                    success_probability: out.success_probability,
                    trace_distance_to_gibbs: dist,
                    beta,
                    leakage: out.leakage,
                });
            }
            let artifact = match cli.format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&reports).expect("json");
                    s.push('\n');
                    s
                }
                Format::Csv => Table {
                    columns: vec![
                        "n",
                        "n_S",
                        "E",
                        "delta",
                        "r",
                        "success",
                        "success_probability",
                        "trace_distance_to_gibbs",
                        "beta",
                        "leakage",
                    ],
                    rows: reports
                        .iter()
                        .map(|rep| {
                            vec![
                                Cell::U(rep.n as u64),
                                Cell::U(rep.n_s as u64),
                                Cell::F(rep.e),
                                Cell::F(rep.delta),
                                Cell::U(rep.r as u64),
                                Cell::B(rep.success),
                                Cell::F(rep.success_probability),
                                rep.trace_distance_to_gibbs.map_or(Cell::Missing, Cell::F),
                                Cell::F(rep.beta),
                                rep.leakage.map_or(Cell::Missing, Cell::F),
                            ]
                        })
                        .collect(),
                }
                .render(Format::Csv),
            };
            emit(&cli.output, artifact)?;
            let accepted = reports.iter().filter(|rep| rep.success).count();
            eprintln!(
                "{accepted}/{runs} runs accepted; beta={beta:.4}; window [{:.3}, {:.3})",
                e - delta,
                e
            );
            Ok(true)
        }
    }
}
