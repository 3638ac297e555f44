//! `auxcheck`: run checks on the built-in example specifications.
//!
//! Exit status is 0 when the check passes, 1 when it fails (a trace is
//! printed), and 2 on usage, configuration or evaluation errors.

mod report;
mod suite;

use std::path::PathBuf;
use std::process::ExitCode;

use auxcheck::catalog::{self, mapping_setup, ExampleEntry};
use auxcheck::explorer::{self, Options, Verdict, DEFAULT_STATE_CAP};
use auxcheck::prophecy::check_proph_conditions;
use auxcheck::stuttering::{check_stutter_runtime_conditions, stutter_constant_condition};
use auxcheck::ModelConfig;
use clap::{Args, Parser, Subcommand};

type BoxError = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(name = "auxcheck", version, about = "Explicit-state refinement checking with auxiliary variables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Run {
    /// Model config file (JSON). Without it the example's default model is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Abort once this many distinct states have been found.
    #[arg(long, env = "AUXCHECK_STATE_CAP")]
    state_cap: Option<usize>,
    /// Print the verdict as JSON instead of a report.
    #[arg(long)]
    json: bool,
}

impl Run {
    fn options(&self) -> Options {
        Options::default()
            .workers(self.workers)
            .state_cap(self.state_cap.unwrap_or(DEFAULT_STATE_CAP))
    }

    fn config(&self, entry: &ExampleEntry) -> Result<ModelConfig, BoxError> {
        match &self.config {
            Some(path) => Ok(ModelConfig::from_file(path)?),
            None => Ok((entry.defaults)()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// List the example specifications with their parameters, mappings and predicates.
    List,
    /// Check that a named invariant holds in every reachable state.
    CheckInvariant {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        inv: String,
        #[command(flatten)]
        run: Run,
    },
    /// Check that a spec refines the target of one of its mappings.
    CheckRefinement {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        mapping: String,
        #[command(flatten)]
        run: Run,
    },
    /// Check refinement in both directions.
    CheckEquivalence {
        #[arg(long)]
        spec: String,
        /// Mapping from `spec` to the other spec.
        #[arg(long)]
        mapping: String,
        /// Mapping of the other spec back to `spec`.
        #[arg(long)]
        reverse_mapping: String,
        #[command(flatten)]
        run: Run,
    },
    /// Check a named action property [][P]_vars.
    CheckActionProp {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        prop: String,
        #[command(flatten)]
        run: Run,
    },
    /// Check the prophecy conditions of a spec with a prophecy variable.
    CheckProphConditions {
        #[arg(long)]
        spec: String,
        #[command(flatten)]
        run: Run,
    },
    /// Check the constant and runtime conditions of a stuttering variable.
    CheckStutterConditions {
        #[arg(long)]
        spec: String,
        #[command(flatten)]
        run: Run,
    },
    /// Search for a shortest trace to a state satisfying a named target.
    FindTrace {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        target: String,
        #[command(flatten)]
        run: Run,
    },
    /// Run the built-in table of checks of every example.
    RunSuite {
        /// Also rerun every check with 1 and 4 workers and compare the JSON verdicts.
        #[arg(long)]
        determinism: bool,
        /// Add the long-running 2 reader / 2 writer / 3 write Afek model.
        #[arg(long)]
        long: bool,
        #[command(flatten)]
        run: Run,
    },
}

fn emit(run: &Run, title: &str, v: &Verdict) -> ExitCode {
    if run.json {
        println!("{}", v.to_json());
    } else {
        print!("{}", report::verdict(title, v));
    }
    if v.is_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cmd: Command) -> Result<ExitCode, BoxError> {
    match cmd {
        Command::List => {
            print!("{}", report::listing(&catalog::entries()));
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckInvariant { spec, inv, run } => {
            let e = catalog::entry(&spec)?;
            let s = e.build(&run.config(e)?)?;
            let p = e.invariant(&inv)?;
            let v = explorer::check_invariant(&s, &run.options(), &(p.build)(&s))?;
            Ok(emit(&run, &format!("{spec}: invariant {}", p.name), &v))
        }
        Command::CheckRefinement { spec, mapping, run } => {
            let e = catalog::entry(&spec)?;
            let ms = mapping_setup(&spec, &mapping, &run.config(e)?)?;
            let v = explorer::check_refinement(&ms.low, &ms.mapping, &ms.high, &run.options())?;
            Ok(emit(&run, &format!("{spec} refines {} under {mapping}", ms.high.name()), &v))
        }
        Command::CheckEquivalence {
            spec,
            mapping,
            reverse_mapping,
            run,
        } => {
            let e = catalog::entry(&spec)?;
            let cfg = run.config(e)?;
            let ab = mapping_setup(&spec, &mapping, &cfg)?;
            let ba = mapping_setup(ab.high.name(), &reverse_mapping, &cfg)?;
            if ba.high.name() != spec {
                return Err(format!("`{reverse_mapping}` does not map back to {spec}").into());
            }
            let v = explorer::check_equivalence(&ab.low, &ab.mapping, &ab.high, &ba.mapping, &run.options())?;
            Ok(emit(&run, &format!("{spec} is equivalent to {}", ab.high.name()), &v))
        }
        Command::CheckActionProp { spec, prop, run } => {
            let e = catalog::entry(&spec)?;
            let s = e.build(&run.config(e)?)?;
            let p = e.action_prop(&prop)?;
            let v = explorer::check_action_property(&s, &run.options(), &(p.build)(&s))?;
            Ok(emit(&run, &format!("{spec}: action property {}", p.name), &v))
        }
        Command::CheckProphConditions { spec, run } => {
            let e = catalog::entry(&spec)?;
            let ps = e.prophecy_setup(&run.config(e)?)?;
            let v = check_proph_conditions(&ps.base, &ps.shape, &ps.table, &run.options())?;
            Ok(emit(&run, &format!("{spec}: prophecy conditions on {}", ps.base.name()), &v))
        }
        Command::CheckStutterConditions { spec, run } => {
            let e = catalog::entry(&spec)?;
            let cfg = run.config(e)?;
            let st = e.stutter_setup(&cfg)?;
            let mut all_true = true;
            for (label, sigma, bot, decr) in &st.constants {
                let ok = stutter_constant_condition(&cfg, sigma, bot, decr)?;
                all_true &= ok;
                if !run.json {
                    println!("{label}: {}", if ok { "TRUE" } else { "FALSE" });
                }
            }
            let v = check_stutter_runtime_conditions(&st.base, &st.table, &run.options())?;
            let code = emit(&run, &format!("{spec}: stuttering conditions on {}", st.base.name()), &v);
            if !all_true {
                return Ok(ExitCode::from(1));
            }
            Ok(code)
        }
        Command::FindTrace { spec, target, run } => {
            let e = catalog::entry(&spec)?;
            let s = e.build(&run.config(e)?)?;
            let t = e.target(&target)?;
            let v = explorer::find_trace(&s, &run.options(), &(t.build)(&s))?;
            Ok(emit(&run, &format!("{spec}: search for {}", t.name), &v))
        }
        Command::RunSuite {
            determinism,
            long,
            run,
        } => suite::run(&run.options(), run.json, determinism, long),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
