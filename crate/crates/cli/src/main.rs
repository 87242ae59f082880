//! `percross`: command-line front end.
//!
//! Exit codes: 0 success, 2 bad input data, 64 usage, 70 internal failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use percross_core::evaluate::evaluate;
use percross_core::normalize::{detect_forks, detect_spurs, normalize};
use percross_core::oracle::{oracle, OracleError, DEFAULT_BUDGET};
use percross_core::reduce::{
    self, cnf::Cnf, witness::build_witness, witness::WitnessError, ReductionOutput,
};
use percross_core::render::render_svg;
use percross_core::solve::{solve_with, SolveError, SolveOptions};
use percross_core::text::{
    parse_assignment, parse_instance, parse_orders, parse_raw, serialize_instance, serialize_orders,
};
use percross_core::{Instance, PipeOrderSet};

const EXIT_DATA: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_INTERNAL: u8 = 70;

#[derive(Parser)]
#[command(
    name = "percross",
    version,
    about = "Crossing numbers of perturbed drawings of cycles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a raw drawing into an instance on its image graph.
    Normalize {
        raw: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Exact crossing number of a spur-free cycle instance.
    Solve {
        instance: PathBuf,
        /// Print the expansion trace.
        #[arg(long)]
        trace: bool,
        /// Relabel only the lighter groups on pipe expansion.
        #[arg(long)]
        heavy_split: bool,
    },
    /// Crossings realized by a given order set.
    Eval {
        instance: PathBuf,
        #[arg(long)]
        orders: PathBuf,
        #[arg(long)]
        per_cluster: bool,
    },
    /// Brute-force minimum over all order sets.
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Where to write the optimal orders (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build the hardness instance of a 3CNF; writes `<output>.json` too.
    Reduce {
        cnf: PathBuf,
        #[arg(long)]
        cycle: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Orders attaining K on the reduction of a 3CNF.
    Witness {
        cnf: PathBuf,
        #[arg(long)]
        assignment: PathBuf,
        #[arg(long)]
        cycle: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// SVG figure of the host drawing.
    Render {
        instance: PathBuf,
        #[arg(long)]
        orders: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

enum Failure {
    Data(anyhow::Error),
    Internal(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure::Data(e.into())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    Ok(fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    Ok(fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?)
}

fn instance(path: &Path) -> Result<Instance, Failure> {
    Ok(parse_instance(&read(path)?).with_context(|| path.display().to_string())?)
}

fn orders(path: &Path) -> Result<PipeOrderSet, Failure> {
    Ok(parse_orders(&read(path)?).with_context(|| path.display().to_string())?)
}

fn reduction(cnf: &Path, cycle: bool) -> Result<ReductionOutput, Failure> {
    let cnf = Cnf::parse_dimacs(&read(cnf)?).with_context(|| cnf.display().to_string())?;
    let out = if cycle {
        reduce::build_cycle_instance(&cnf)
    } else {
        reduce::build_paths_instance(&cnf)
    };
    Ok(out?)
}

fn run(command: Command) -> Result<String, Failure> {
    let mut s = String::new();
    match command {
        Command::Normalize { raw, output } => {
            let drawing = parse_raw(&read(&raw)?).with_context(|| raw.display().to_string())?;
            let inst = normalize(&drawing)?;
            write(&output, &serialize_instance(&inst))?;
            let spurs = detect_spurs(&inst);
            let forks = detect_forks(&inst);
            writeln!(
                s,
                "clusters {} pipes {}",
                inst.host.clusters.len(),
                inst.host.pipes.len()
            )
            .unwrap();
            writeln!(
                s,
                "spurs {}: {:?}",
                spurs.len(),
                spurs.iter().map(|v| v.0).collect::<Vec<_>>()
            )
            .unwrap();
            writeln!(
                s,
                "forks {}: {:?}",
                forks.len(),
                forks.iter().map(|(v, p)| (v.0, p.0)).collect::<Vec<_>>()
            )
            .unwrap();
        }
        Command::Solve {
            instance: path,
            trace,
            heavy_split,
        } => {
            let inst = instance(&path)?;
            let opts = SolveOptions {
                heavy_split,
                ..Default::default()
            };
            match solve_with(&inst, opts) {
                Ok((cr, t)) => {
                    if trace {
                        s.push_str(&t.to_string());
                    }
                    writeln!(s, "cr = {cr}").unwrap();
                }
                Err(e @ SolveError::Internal(_)) => return Err(Failure::Internal(e.into())),
                Err(e) => return Err(e.into()),
            }
        }
        Command::Eval {
            instance: path,
            orders: o,
            per_cluster,
        } => {
            let ev = evaluate(&instance(&path)?, &orders(&o)?)?;
            writeln!(s, "total = {}", ev.total).unwrap();
            if per_cluster {
                writeln!(s, "cr2 = {}", ev.cr2).unwrap();
                for (c, n) in &ev.per_cluster {
                    writeln!(s, "cluster {c} = {n}").unwrap();
                }
            }
        }
        Command::Oracle {
            instance: path,
            budget,
            output,
        } => {
            let (cr, best) = oracle(&instance(&path)?, budget).map_err(|e| match e {
                OracleError::BudgetExceeded { .. } => Failure::Data(e.into()),
                OracleError::Eval(e) => Failure::Data(e.into()),
            })?;
            writeln!(s, "cr = {cr}").unwrap();
            match output {
                Some(out) => write(&out, &serialize_orders(&best))?,
                None => s.push_str(&serialize_orders(&best)),
            }
        }
        Command::Reduce { cnf, cycle, output } => {
            let out = reduction(&cnf, cycle)?;
            write(&output, &serialize_instance(&out.instance))?;
            let mut sidecar = output.into_os_string();
            sidecar.push(".json");
            write(Path::new(&sidecar), &out.sidecar_json())?;
            writeln!(s, "cr2 = {}", out.cr2).unwrap();
            writeln!(s, "K = {}", out.k).unwrap();
        }
        Command::Witness {
            cnf,
            assignment,
            cycle,
            output,
        } => {
            let out = reduction(&cnf, cycle)?;
            let tau = parse_assignment(&read(&assignment)?)
                .with_context(|| assignment.display().to_string())?;
            let w = build_witness(&out, &tau).map_err(|e| match e {
                WitnessError::Unsatisfied(_) => Failure::Data(e.into()),
                e => Failure::Internal(e.into()),
            })?;
            write(&output, &serialize_orders(&w.orders))?;
            writeln!(s, "total = {}", w.total).unwrap();
            writeln!(s, "K = {}", out.k).unwrap();
            for g in &w.gadgets {
                writeln!(
                    s,
                    "clause {}: {} = {:?}",
                    g.clause, g.total, g.strand_crossings
                )
                .unwrap();
            }
            if w.total != out.k {
                return Err(Failure::Internal(anyhow!(
                    "witness total {} differs from K = {}",
                    w.total,
                    out.k
                )));
            }
        }
        Command::Render {
            instance: path,
            orders: o,
            output,
        } => {
            let inst = instance(&path)?;
            let ord = o.as_deref().map(orders).transpose()?;
            write(&output, &render_svg(&inst, ord.as_ref())?)?;
        }
    }
    Ok(s)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
