//! `fairdiv` command-line tool.
//!
//! Exit status: 0 on success, 1 when the library rejects the input, 2 on
//! malformed command lines.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairdiv::experiment::{generate_instance, run_experiment, write_csv, ExperimentConfig};
use fairdiv::io::{instance_to_json, read_allocation, read_instance};
use fairdiv::online::random_order;
use fairdiv::solvers::{minimize_index, MinimizeOptions, DEFAULT_ENUMERATION_CAP};
use fairdiv::{
    index_report_with, mechanism_support, run_mechanism, sample_online_metrics, Allocation, EnvyNormalization,
    IndexKind, Instance, MechanismKind, OrderMode, Rational,
};

#[derive(Parser)]
#[command(name = "fairdiv", version, about = "Inequality indices and online mechanisms for fair division")]
struct Cli {
    #[command(flatten)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Format {
    /// Envy index denominator: twice the total (half) or the total (full).
    #[arg(long, global = true, value_enum, default_value_t = Norm::Half)]
    envy_norm: Norm,
    /// Print rationals as decimals with six digits instead of p/q.
    #[arg(long, global = true)]
    decimal: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Norm {
    Half,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Index {
    Gini,
    Subjgini,
    Envy,
}

impl Index {
    fn kind(self) -> IndexKind {
        match self {
            Index::Gini => IndexKind::Gini,
            Index::Subjgini => IndexKind::SubjectiveGini,
            Index::Envy => IndexKind::Envy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Given,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance with integer utilities in 0..=max-util.
    Gen {
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        items: usize,
        /// Largest utility; defaults to the number of items.
        #[arg(long)]
        max_util: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print indices and welfare of an allocation.
    Eval { instance: PathBuf, allocation: PathBuf },
    /// Find the allocations minimizing an index by exhaustive search.
    Minimize {
        instance: PathBuf,
        #[arg(long, value_enum)]
        index: Index,
        /// Print every minimizer instead of the first.
        #[arg(long)]
        all: bool,
        /// Largest number of allocations to enumerate.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
    },
    /// Run an online mechanism once, or average it over many runs.
    Online {
        instance: PathBuf,
        #[arg(long, value_enum)]
        mechanism: Index,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Order::Given)]
        order: Order,
        /// Average over this many runs instead of reporting a single one.
        #[arg(long)]
        samples: Option<u64>,
        /// Write the per-step trace of a single run to this file.
        #[arg(long, conflicts_with = "samples")]
        trace: Option<PathBuf>,
    },
    /// Exact outcome distribution of a mechanism on the given item order.
    Support {
        instance: PathBuf,
        #[arg(long, value_enum)]
        mechanism: Index,
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
    },
    /// Run the mechanism comparison and write the CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Override the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
}

struct Printer {
    norm: EnvyNormalization,
    decimal: bool,
}

impl Printer {
    fn num(&self, r: &Rational) -> String {
        if self.decimal {
            r.to_decimal_string(6)
        } else {
            r.to_string()
        }
    }

    fn allocation(&self, inst: &Instance, a: &Allocation) -> String {
        let pairs: Vec<String> = (0..a.num_items())
            .map(|j| {
                let owner = a.owner(j).map_or("nobody".to_string(), |i| inst.agent_label(i));
                format!("{}->{}", inst.item_label(j), owner)
            })
            .collect();
        format!("{a}  ({})", pairs.join(", "))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let printer = Printer {
        norm: match cli.format.envy_norm {
            Norm::Half => EnvyNormalization::HalfDenominator,
            Norm::Full => EnvyNormalization::FullDenominator,
        },
        decimal: cli.format.decimal,
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(cli.command, &printer, &mut out).and_then(|()| out.flush().map_err(Into::into));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            drop(out);
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path) -> fairdiv::Result<Instance> {
    read_instance(path).map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: fairdiv::Error) -> fairdiv::Error {
    match e {
        fairdiv::Error::Io(io) => fairdiv::Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }
}

fn run(cmd: Command, p: &Printer, out: &mut impl Write) -> fairdiv::Result<()> {
    match cmd {
        Command::Gen {
            agents,
            items,
            max_util,
            seed,
            output,
        } => {
            let inst = generate_instance(agents, items, max_util.unwrap_or(items as u64), seed)?;
            let text = instance_to_json(&inst);
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => out.write_all(text.as_bytes())?,
            }
        }
        Command::Eval { instance, allocation } => {
            let inst = load(&instance)?;
            let alloc = read_allocation(&allocation).map_err(|e| with_path(&allocation, e))?;
            let r = index_report_with(&inst, &alloc, p.norm)?;
            writeln!(out, "allocation: {}", p.allocation(&inst, &alloc))?;
            writeln!(out, "gini: {}", p.num(&r.gini))?;
            writeln!(out, "subjective_gini: {}", p.num(&r.subjective_gini))?;
            writeln!(out, "envy: {}", p.num(&r.envy))?;
            writeln!(out, "utilitarian: {}", p.num(&r.utilitarian))?;
            writeln!(out, "egalitarian: {}", p.num(&r.egalitarian))?;
            writeln!(out, "envy_free: {}", r.envy_free)?;
        }
        Command::Minimize {
            instance,
            index,
            all,
            cap,
        } => {
            let inst = load(&instance)?;
            let r = minimize_index(&inst, index.kind(), p.norm, MinimizeOptions { cap })?;
            writeln!(out, "index: {}", index.kind().name())?;
            writeln!(out, "value: {}", p.num(&r.min_value))?;
            writeln!(out, "minimizers: {}", r.minimizers.len())?;
            let shown = if all { r.minimizers.len() } else { 1 };
            for a in r.minimizers.iter().take(shown) {
                writeln!(out, "allocation: {}", p.allocation(&inst, a))?;
            }
        }
        Command::Online {
            instance,
            mechanism,
            seed,
            order,
            samples,
            trace,
        } => {
            let inst = load(&instance)?;
            let kind = MechanismKind::from(mechanism.kind());
            let m = inst.num_items();
            if let Some(samples) = samples {
                let mode = match order {
                    Order::Given => OrderMode::Given((0..m).collect()),
                    Order::Random => OrderMode::Random,
                };
                let r = sample_online_metrics(&inst, &mode, kind, p.norm, samples, seed)?;
                writeln!(out, "mechanism: {}", kind.name())?;
                writeln!(out, "samples: {samples}")?;
                writeln!(out, "mean_gini: {:.6}", r.gini)?;
                writeln!(out, "mean_subjective_gini: {:.6}", r.subjective_gini)?;
                writeln!(out, "mean_envy: {:.6}", r.envy)?;
                writeln!(out, "mean_utilitarian: {:.6}", r.utilitarian)?;
                writeln!(out, "mean_egalitarian: {:.6}", r.egalitarian)?;
            } else {
                let order = match order {
                    Order::Given => (0..m).collect(),
                    Order::Random => random_order(m, seed),
                };
                let t = run_mechanism(&inst, &order, kind, p.norm, seed)?;
                if let Some(path) = trace {
                    let mut f = BufWriter::new(File::create(&path)?);
                    t.write_lines(&mut f)?;
                    f.flush()?;
                }
                let r = index_report_with(&inst, &t.final_allocation, p.norm)?;
                writeln!(out, "mechanism: {}", kind.name())?;
                writeln!(out, "order: {:?}", t.order)?;
                writeln!(out, "allocation: {}", p.allocation(&inst, &t.final_allocation))?;
                writeln!(out, "gini: {}", p.num(&r.gini))?;
                writeln!(out, "subjective_gini: {}", p.num(&r.subjective_gini))?;
                writeln!(out, "envy: {}", p.num(&r.envy))?;
                writeln!(out, "utilitarian: {}", p.num(&r.utilitarian))?;
                writeln!(out, "egalitarian: {}", p.num(&r.egalitarian))?;
            }
        }
        Command::Support { instance, mechanism, cap } => {
            let inst = load(&instance)?;
            let kind = MechanismKind::from(mechanism.kind());
            let order: Vec<usize> = (0..inst.num_items()).collect();
            let support = mechanism_support(&inst, &order, kind, p.norm, cap)?;
            writeln!(out, "outcomes: {}", support.len())?;
            writeln!(out, "# probability\tutilitarian\tegalitarian\tallocation")?;
            for (a, prob) in &support {
                let r = index_report_with(&inst, a, p.norm)?;
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    p.num(prob),
                    p.num(&r.utilitarian),
                    p.num(&r.egalitarian),
                    p.allocation(&inst, a)
                )?;
            }
        }
        Command::Experiment { config, output, seed } => {
            let mut cfg = ExperimentConfig::read(&config).map_err(|e| with_path(&config, e))?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let rows = run_experiment(&cfg)?;
            // timeouts are per instance, so every mechanism row repeats them
            let first = rows.first().map(|r| r.mechanism);
            for r in rows.iter().filter(|r| Some(r.mechanism) == first && r.egalitarian_timeouts > 0) {
                eprintln!(
                    "warning: m={}: {} of {} egalitarian optima hit the time budget; ratios use the best allocation found",
                    r.m, r.egalitarian_timeouts, r.instance_count
                );
            }
            write_csv(&rows, BufWriter::new(File::create(&output)?))?;
            writeln!(out, "wrote {} rows to {}", rows.len(), output.display())?;
        }
    }
    Ok(())
}
