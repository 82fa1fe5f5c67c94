//! `extlab`: verification reports for correct and normal extensions.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use extlab::ode::{OdeParams, SystemForm};
use extlab::spec::{format_real, parse_complex, parse_spec_bytes, SpecDocument, Task};
use rayon::prelude::*;

mod report;
mod tasks;

use report::{Envelope, SpecEcho, Summary, Verdict};
use tasks::{Failure, Outcome, Range1};

#[derive(Parser)]
#[command(name = "extlab", version, about = "Numerical verification of correct and normal operator extensions")]
struct Cli {
    /// Write the report to PATH instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Leave out timestamps and wall times so that reports are reproducible.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Worker threads.
    #[arg(long, global = true, env = "EXTLAB_THREADS", value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    /// The four printed equations.
    Printed,
    /// The boundary-form domain check.
    Boundary,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tasks listed in a spec file; JSON report.
    Verify {
        spec: PathBuf,
        /// Refinement levels, e.g. 100,200,400 (default: r, 2r, 4r).
        #[arg(long, value_delimiter = ',')]
        grids: Option<Vec<usize>>,
    },
    /// Solve the interval parameter system from seeds; CSV table.
    #[command(group(ArgGroup::new("source").required(true).args(["seeds", "random"])))]
    SolveSystem {
        /// File with one seed per line: a11, a12, a21, a22.
        #[arg(long, value_name = "FILE")]
        seeds: Option<PathBuf>,
        /// Number of random seeds in the unit box.
        #[arg(long, value_name = "K")]
        random: Option<usize>,
        #[arg(long, value_name = "S", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SystemArg::Printed)]
        system: SystemArg,
    },
    /// Commutator norms over a grid of parameters; CSV table.
    Sweep {
        spec: PathBuf,
        #[arg(long, value_name = "LO:HI:STEPS", default_value = "-0.1:0.1:21")]
        grid_re: Range1,
        #[arg(long, value_name = "LO:HI:STEPS", default_value = "-0.1:0.1:21")]
        grid_im: Range1,
    },
    /// Smallest eigenvalues with residuals and reference values; CSV table.
    Spectrum {
        spec: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
}

fn read_spec(path: &Path) -> Outcome<SpecDocument> {
    let bytes = fs::read(path).map_err(|e| Failure::Spec(format!("{}: {e}", path.display())))?;
    parse_spec_bytes(&bytes).map_err(|e| Failure::Spec(format!("{}: {e}", path.display())))
}

fn read_seeds(path: &Path) -> Outcome<Vec<OdeParams>> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Spec(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let mut vals = Vec::new();
        let mut col = 1;
        for field in body.split(',') {
            let v = parse_complex(field).map_err(|e| {
                Failure::Spec(format!(
                    "{}: line {}, column {}: {}",
                    path.display(),
                    i + 1,
                    col + e.column - 1,
                    e.message
                ))
            })?;
            vals.push(v);
            col += field.chars().count() + 1;
        }
        if vals.len() != 4 {
            return Err(Failure::Spec(format!(
                "{}: line {}: expected 4 values, found {}",
                path.display(),
                i + 1,
                vals.len()
            )));
        }
        out.push(OdeParams::new(vals[0], vals[1], vals[2], vals[3]));
    }
    Ok(out)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Numeric(format!("{}: {e}", p.display()))),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())
                .and_then(|_| s.flush())
                .map_err(|e| Failure::Numeric(format!("stdout: {e}")))
        }
    }
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

fn opt(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_default()
}

fn cmd_verify(cli: &Cli, spec: &Path, grids: &Option<Vec<usize>>) -> Outcome<ExitCode> {
    let doc = read_spec(spec)?;
    let th = tasks::thresholds(&doc);
    let grids = grids.clone().unwrap_or_else(|| tasks::default_grids(&doc));
    let mut list: Vec<Task> = Vec::new();
    for t in &doc.tasks {
        if !list.contains(t) {
            list.push(*t);
        }
    }
    for t in &list {
        match t {
            Task::Sweep => {
                tasks::cr_parameter(&doc, "the sweep task")?;
            }
            Task::SolveSystem => {
                tasks::ode_parameter(&doc, "the solve-system task")?;
            }
            Task::Verify => tasks::check_grids(&doc, &grids)?,
            Task::Spectrum => {}
        }
    }
    let results: Vec<Outcome<report::TaskReport>> = list
        .par_iter()
        .map(|t| tasks::run_task(&doc, *t, &grids, &th))
        .collect();
    let mut reports = Vec::with_capacity(results.len());
    for r in results {
        let mut r = r?;
        if cli.no_timestamp {
            r.wall_ms = None;
        }
        reports.push(r);
    }
    let summary = Summary::of(&reports);
    let env = Envelope {
        version: env!("CARGO_PKG_VERSION"),
        generated_at: (!cli.no_timestamp)
            .then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        spec: SpecEcho::new(&spec.display().to_string(), &doc),
        tasks: reports,
        summary,
    };
    for t in &env.tasks {
        for v in &t.violated {
            eprintln!("{}: {} = {:e} violates threshold {:e}", t.name, v.name, v.value, v.threshold);
        }
    }
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| Failure::Numeric(e.to_string()))?;
    text.push('\n');
    emit(&cli.out, &text)?;
    Ok(if summary.verdict == Verdict::Pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_solve(
    cli: &Cli,
    seeds: &Option<PathBuf>,
    random: Option<usize>,
    seed: u64,
    system: SystemArg,
) -> Outcome<ExitCode> {
    let list = match (seeds, random) {
        (Some(p), _) => read_seeds(p)?,
        (None, Some(k)) => tasks::random_seeds(k, seed),
        (None, None) => return Err(Failure::Spec("need --seeds or --random".into())),
    };
    let form = match system {
        SystemArg::Printed => SystemForm::Printed,
        SystemArg::Boundary => SystemForm::BoundaryForm,
    };
    let th = extlab::thresholds::Thresholds::default();
    let solved = tasks::solve(&list, form, &th)?;
    if solved.rows.is_empty() {
        eprintln!("warning: no seed converged");
    }
    for (i, r, reason) in &solved.failed {
        eprintln!("warning: seed {i} failed ({reason}; residual {r:e})");
    }
    for r in solved.rows.iter().filter(|r| !r.agrees) {
        eprintln!(
            "warning: seed {}: printed system {:e} and boundary form {:e} (tol {:e}) disagree",
            r.seed_index, r.system_residual, r.boundary_residual, r.boundary_tol
        );
    }
    let header = [
        "a11_re", "a11_im", "a12_re", "a12_im", "a21_re", "a21_im", "a22_re", "a22_im", "residual",
        "system_residual", "boundary_residual", "family", "seed",
    ];
    let rows: Vec<Vec<String>> = solved
        .rows
        .iter()
        .map(|r| {
            let mut v: Vec<String> = r.params.iter().flat_map(|z| [format_real(z[0]), format_real(z[1])]).collect();
            v.push(format_real(r.residual));
            v.push(format_real(r.system_residual));
            v.push(format_real(r.boundary_residual));
            v.push(r.family.clone());
            v.push(r.seed_index.to_string());
            v
        })
        .collect();
    emit(&cli.out, &csv_text(&header, &rows))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(cli: &Cli, spec: &Path, re: &Range1, im: &Range1) -> Outcome<ExitCode> {
    let doc = read_spec(spec)?;
    let points = tasks::sweep(&doc, re, im)?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                format_real(p.a1),
                format_real(p.a2),
                format_real(p.commutator),
                format_real(p.condition_residual),
            ]
        })
        .collect();
    emit(&cli.out, &csv_text(&["a1", "a2", "commutator_norm", "condition_residual"], &rows))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_spectrum(cli: &Cli, spec: &Path, count: usize) -> Outcome<ExitCode> {
    let doc = read_spec(spec)?;
    let rows = tasks::spectrum_rows(&doc, count)?;
    let header: &[&str] = match doc.example {
        extlab::spec::Example::Ode => &["re", "im", "residual", "root_re", "root_im", "distance"],
        extlab::spec::Example::CauchyRiemann => {
            &["re", "im", "residual", "match", "match_re", "match_im", "distance"]
        }
    };
    let is_cr = header.len() == 7;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![format_real(r.value[0]), format_real(r.value[1]), format_real(r.residual)];
            if is_cr {
                v.push(r.reference.clone().unwrap_or_default());
            }
            v.push(opt(r.reference_value.map(|z| z[0])));
            v.push(opt(r.reference_value.map(|z| z[1])));
            v.push(opt(r.distance));
            v
        })
        .collect();
    emit(&cli.out, &csv_text(header, &table))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Outcome<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Spec("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Numeric(e.to_string()))?;
    }
    match &cli.command {
        Command::Verify { spec, grids } => cmd_verify(cli, spec, grids),
        Command::SolveSystem {
            seeds,
            random,
            seed,
            system,
        } => cmd_solve(cli, seeds, *random, *seed, *system),
        Command::Sweep { spec, grid_re, grid_im } => cmd_sweep(cli, spec, grid_re, grid_im),
        Command::Spectrum { spec, count } => cmd_spectrum(cli, spec, *count),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(Failure::Spec(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}
