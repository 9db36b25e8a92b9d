//! `gamkit`: check litmus tests against SC, GAM0, GAM and GAM-ARM.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gamkit::axiomatic::{enumerate_executions, AxiomaticOptions, DEFAULT_MAX_MEMORY_INSTANCES};
use gamkit::deps::build_ppo;
use gamkit::harness::{self, CheckOptions, FuzzBounds, ReportRow};
use gamkit::litmus::{parse_litmus, resolve_addresses, Program};
use gamkit::operational::{self, ExploreOptions, FrontierOrder, DEFAULT_STATE_BUDGET};
use gamkit::{Engine, Model, ModelConfig};

use report::{exit_code, Code};

#[derive(Parser)]
#[command(name = "gamkit", version, about = "Decide which litmus-test outcomes SC, GAM0, GAM and GAM-ARM allow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Axiomatic,
    Operational,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    Dfs,
    Bfs,
    Shuffled,
}

#[derive(clap::Args)]
struct Budgets {
    /// Maximum machine states to visit (default: $GAMKIT_STATE_BUDGET or 5000000).
    #[arg(long)]
    state_budget: Option<usize>,
    /// Maximum memory instructions the axiomatic engine accepts.
    #[arg(long, default_value_t = DEFAULT_MAX_MEMORY_INSTANCES)]
    max_mem: usize,
}

impl Budgets {
    fn options(&self) -> Result<CheckOptions, String> {
        let state_budget = match self.state_budget {
            Some(b) => b,
            None => match std::env::var("GAMKIT_STATE_BUDGET") {
                Ok(v) => v.trim().parse().map_err(|_| format!("GAMKIT_STATE_BUDGET is not a number: {v:?}"))?,
                Err(_) => DEFAULT_STATE_BUDGET,
            },
        };
        Ok(CheckOptions {
            axiomatic: AxiomaticOptions { max_memory_instances: self.max_mem },
            explore: ExploreOptions { state_budget, ..ExploreOptions::default() },
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Report whether the test's target outcome is allowed.
    Check {
        file: PathBuf,
        /// sc, gam0, gam, gam_arm, or all.
        #[arg(long)]
        model: String,
        #[arg(long, value_enum, default_value_t = EngineArg::Both)]
        engine: EngineArg,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Show how the target outcome is reached.
        #[arg(long)]
        witness: bool,
        /// List every allowed outcome.
        #[arg(long)]
        outcomes: bool,
        /// Print preserved program order of every candidate execution.
        #[arg(long)]
        dump_ppo: bool,
        /// Print the machine transitions leading to the target outcome.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Explore the abstract machine and print exploration statistics.
    Explore {
        file: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        trace: bool,
        /// Explore every interleaving instead of firing local steps eagerly.
        #[arg(long)]
        no_reduction: bool,
        #[arg(long, value_enum, default_value_t = OrderArg::Dfs)]
        order: OrderArg,
        /// Seed for `--order shuffled`.
        #[arg(long, default_value_t = 0)]
        order_seed: u64,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Run both engines and compare their outcome sets.
    Crosscheck {
        file: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Run the built-in corpus against its expected verdicts.
    Corpus {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Check engine equivalence, model inclusion and per-location SC on random programs.
    Fuzz {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        threads: usize,
        #[arg(long, default_value_t = 5)]
        instructions: usize,
        #[arg(long, default_value_t = 2)]
        addresses: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        budgets: Budgets,
    },
}

fn main() -> ExitCode {
    // Exit quietly when the reader of stdout goes away (`gamkit corpus | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code.into(),
        Err(msg) => {
            eprintln!("gamkit: {msg}");
            Code::Usage.into()
        }
    }
}

fn load(file: &PathBuf) -> Result<Program, String> {
    let source = std::fs::read_to_string(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let program = parse_litmus(&source).map_err(|e| format!("{}:{e}", file.display()))?;
    resolve_addresses(program).map_err(|e| e.to_string())
}

fn models(arg: &str) -> Result<Vec<Model>, String> {
    if arg.eq_ignore_ascii_case("all") {
        return Ok(Model::ALL.to_vec());
    }
    arg.parse::<Model>().map(|m| vec![m]).map_err(|e| e.to_string())
}

fn run(command: Command) -> Result<Code, String> {
    match command {
        Command::Check { file, model, engine, format, witness, outcomes, dump_ppo, trace, budgets } => {
            let program = load(&file)?;
            let models = models(&model)?;
            let mut opts = budgets.options()?;
            opts.explore.trace = trace || witness;
            let layout = program.layout().map_err(|e| e.to_string())?;
            let mut rows = Vec::new();
            let mut disagreement = false;
            let mut traces = Vec::new();
            for m in models {
                let engines: Vec<Engine> = match engine {
                    EngineArg::Axiomatic => vec![Engine::Axiomatic],
                    EngineArg::Operational | EngineArg::Both if !m.has_operational_engine() => {
                        if engine == EngineArg::Operational && model != "all" {
                            return Err(format!("model {m} has no operational engine"));
                        }
                        eprintln!("note: {m} has no operational engine; using the axiomatic engine only");
                        vec![Engine::Axiomatic]
                    }
                    EngineArg::Operational => vec![Engine::Operational],
                    EngineArg::Both => vec![Engine::Axiomatic, Engine::Operational],
                };
                let cfg = ModelConfig::new(m);
                let mut outcome_sets = Vec::new();
                for e in engines {
                    let verdict = match e {
                        Engine::Axiomatic => gamkit::axiomatic::allowed_axiomatic_with(&program, &cfg, &opts.axiomatic),
                        Engine::Operational => {
                            operational::explore_with(&program, &cfg, &opts.explore).map(|r| r.verdict)
                        }
                    };
                    match verdict {
                        Ok(mut v) => {
                            outcome_sets.push(v.outcomes.clone());
                            if let (true, Some(gamkit::Witness::Operational(lines))) = (trace, &v.witness) {
                                traces.push((m, lines.clone()));
                            }
                            if !witness {
                                v.witness = None;
                            }
                            rows.push(ReportRow::from_verdict(
                                &program,
                                &layout,
                                &v,
                                outcomes || format == Format::Json,
                            ));
                        }
                        Err(err) if err.is_resource_limit() => rows.push(ReportRow::from_error(&program, m, e, &err)),
                        Err(err) => return Err(err.to_string()),
                    }
                }
                if outcome_sets.len() == 2 && outcome_sets[0] != outcome_sets[1] {
                    disagreement = true;
                    eprintln!("engines disagree under {m}");
                }
            }
            if dump_ppo {
                report::print_ppo_dump(&dump_ppo_lines(&program, &rows)?, format == Format::Json);
            }
            report::emit_rows(&rows, format == Format::Json, witness);
            if trace {
                report::print_traces(&traces, format == Format::Json);
            }
            Ok(exit_code(&rows, disagreement))
        }
        Command::Explore { file, model, format, trace, no_reduction, order, order_seed, budgets } => {
            let program = load(&file)?;
            let m: Model = model.parse().map_err(|e: gamkit::model::UnknownModel| e.to_string())?;
            let mut opts = budgets.options()?.explore;
            opts.trace = trace;
            opts.reduction = !no_reduction;
            opts.order = match order {
                OrderArg::Dfs => FrontierOrder::Dfs,
                OrderArg::Bfs => FrontierOrder::Bfs,
                OrderArg::Shuffled => FrontierOrder::Shuffled(order_seed),
            };
            let layout = program.layout().map_err(|e| e.to_string())?;
            match operational::explore_with(&program, &ModelConfig::new(m), &opts) {
                Ok(result) => {
                    let row = ReportRow::from_verdict(&program, &layout, &result.verdict, true);
                    report::emit_explore(&row, &result.stats, format == Format::Json);
                    if trace {
                        if let Some(gamkit::Witness::Operational(lines)) = &result.verdict.witness {
                            report::print_traces(&[(m, lines.clone())], format == Format::Json);
                        }
                    }
                    Ok(exit_code(&[row], false))
                }
                Err(e) if e.is_resource_limit() => {
                    eprintln!("gamkit: {e}");
                    Ok(Code::Resource)
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Command::Crosscheck { file, model, format, budgets } => {
            let program = load(&file)?;
            let opts = budgets.options()?;
            let mut reports = Vec::new();
            for m in models(&model)? {
                if !m.has_operational_engine() {
                    if model != "all" {
                        return Err(format!("model {m} has no operational engine"));
                    }
                    eprintln!("note: {m} has no operational engine; skipped");
                    continue;
                }
                let r = harness::cross_check_with(&program, &ModelConfig::new(m), &opts).map_err(|e| e.to_string())?;
                reports.push(r);
            }
            Ok(report::emit_cross_checks(&program, &reports, format == Format::Json))
        }
        Command::Corpus { format, budgets } => {
            let opts = budgets.options()?;
            let result = harness::run_corpus(&opts);
            let disagreement = result.cross_checks.iter().any(|c| c.status == harness::CheckStatus::Fail);
            report::emit_rows(&result.rows, format == Format::Json, false);
            Ok(exit_code(&result.rows, disagreement))
        }
        Command::Fuzz { seed, count, threads, instructions, addresses, format, budgets } => {
            let opts = budgets.options()?;
            let bounds = FuzzBounds {
                max_threads: threads,
                max_instructions: instructions,
                max_addresses: addresses,
                max_memory_instances: opts.axiomatic.max_memory_instances,
                seed,
                ..FuzzBounds::default()
            };
            let summary = harness::run_fuzz_suite(&bounds, count, &opts);
            Ok(report::emit_fuzz(&summary, format == Format::Json))
        }
    }
}

/// ppo pairs of every candidate execution under each model the rows cover.
fn dump_ppo_lines(program: &Program, rows: &[ReportRow]) -> Result<Vec<String>, String> {
    let mut models: Vec<Model> = rows.iter().map(|r| r.model).collect();
    models.dedup();
    let executions = enumerate_executions(program).map_err(|e| e.to_string())?;
    let names: Vec<&str> = program.threads.iter().map(|t| t.name.as_str()).collect();
    let mut lines = Vec::new();
    for m in models {
        for (k, exec) in executions.iter().enumerate() {
            let rf: Vec<String> = exec
                .rf()
                .into_iter()
                .map(|(l, src)| {
                    let from = match src {
                        gamkit::deps::RfSource::Init => "init".to_string(),
                        gamkit::deps::RfSource::Store(s) => format!("{}:{}", names[s.thread], s.index),
                    };
                    format!("{}:{}<-{from}", names[l.thread], l.index)
                })
                .collect();
            lines.push(format!("# {m} execution {k} rf [{}]", rf.join(", ")));
            for (t, i, j, case) in build_ppo(&exec.paths, &ModelConfig::new(m)).pairs() {
                lines.push(format!("{}:{i} < {}:{j} (case {case})", names[t], names[t]));
            }
        }
    }
    Ok(lines)
}
