mod commands;
mod format;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ati_core::datadriven::DEFAULT_RESIDUAL_TOL;
use ati_core::excitation::ModelClass;
use commands::{Artifact, Report, Status};

/// Affine trajectory identification toolkit.
#[derive(Parser, Debug)]
#[command(name = "ati", version)]
struct Cli {
    /// Singular-value threshold relative to the largest singular value.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Also write report.json, report.txt and artifacts into this directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Class {
    Linear,
    Affine,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the depth-L Hankel matrix and its numerical rank.
    Hankel {
        #[arg(long = "L")]
        depth: usize,
        data: PathBuf,
    },
    /// Persistency-of-excitation test on an input sequence.
    Pe {
        #[arg(long, value_enum, default_value = "affine")]
        class: Class,
        #[arg(long)]
        order: usize,
        data: PathBuf,
    },
    /// Generalized excitation test on an input/output trajectory.
    Gape {
        #[arg(long = "L")]
        depth: usize,
        #[arg(long)]
        n: usize,
        /// Number of input columns (otherwise read from the sidecar).
        #[arg(long)]
        m: Option<usize>,
        data: PathBuf,
    },
    /// Rank of the stacked state and input-window matrix with a ones row.
    RankCheck {
        #[arg(long = "L")]
        depth: usize,
        #[arg(long)]
        n: usize,
        inputs: PathBuf,
        states: PathBuf,
    },
    /// Complete a trajectory from a prefix and future inputs.
    Complete {
        #[arg(long)]
        tini: usize,
        #[arg(long = "L")]
        depth: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_RESIDUAL_TOL)]
        residual_tol: f64,
        data: PathBuf,
        prefix: PathBuf,
        inputs: PathBuf,
    },
    /// Recover a polynomial kernel representation from data.
    IdentKernel {
        #[arg(long = "L")]
        depth: usize,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Parse the data as exact decimals and use rational arithmetic.
        #[arg(long)]
        exact: bool,
        data: PathBuf,
    },
    /// Integer invariants (inputs, order, lag) from data.
    Invariants {
        #[arg(long)]
        tmax: usize,
        data: PathBuf,
    },
    /// Simulate an affine state-space system.
    Simulate {
        system: PathBuf,
        inputs: PathBuf,
        /// Initial state as comma-separated values (zero by default).
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
    },
    /// Print the lifted linear realization.
    Lift { system: PathBuf },
    /// Linearize a nonlinear plant about an operating point.
    Linearize {
        plant: PathBuf,
        /// Operating point "x1,..;u1,..;y1,..".
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        /// "analytic" or "fd:<step>".
        #[arg(long, default_value = "analytic")]
        mode: String,
    },
    /// Check that a kernel representation has a nonempty behavior.
    Consistency { kernel: PathBuf },
    /// Check whether two kernel representations define the same behavior.
    Equiv { a: PathBuf, b: PathBuf },
    /// Left syzygy module generators of a polynomial matrix.
    Syzygy { matrix: PathBuf },
    /// Smith form of a polynomial matrix.
    Smith { matrix: PathBuf },
    /// Rank conditions for the built-in two-state example.
    #[command(name = "example-sec7")]
    Example,
}

fn run(cli: &Cli) -> Result<Report> {
    let tol = cli.tol;
    match &cli.command {
        Command::Hankel { depth, data } => commands::hankel_cmd(data, *depth, tol),
        Command::Pe { class, order, data } => {
            let class = match class {
                Class::Linear => ModelClass::Linear,
                Class::Affine => ModelClass::Affine,
            };
            commands::pe_cmd(data, class, *order, tol)
        }
        Command::Gape { depth, n, m, data } => commands::gape_cmd(data, *m, *depth, *n, tol),
        Command::RankCheck { depth, n, inputs, states } => commands::rank_check_cmd(inputs, states, *depth, *n, tol),
        Command::Complete {
            tini,
            depth,
            m,
            residual_tol,
            data,
            prefix,
            inputs,
        } => commands::complete_cmd(data, prefix, inputs, *m, *tini, *depth, *residual_tol),
        Command::IdentKernel { depth, n, m, exact, data } => {
            commands::ident_kernel_cmd(data, *m, *depth, *n, *exact, tol)
        }
        Command::Invariants { tmax, data } => commands::invariants_cmd(data, *tmax, tol),
        Command::Simulate { system, inputs, x0 } => commands::simulate_cmd(system, inputs, x0.as_deref()),
        Command::Lift { system } => commands::lift_cmd(system),
        Command::Linearize { plant, at, mode } => commands::linearize_cmd(plant, at, mode),
        Command::Consistency { kernel } => commands::consistency_cmd(kernel),
        Command::Equiv { a, b } => commands::equiv_cmd(a, b),
        Command::Syzygy { matrix } => commands::syzygy_cmd(matrix),
        Command::Smith { matrix } => commands::smith_cmd(matrix),
        Command::Example => commands::example_cmd(tol),
    }
}

fn json_text(report: &Report) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&format::round_json(report.value.clone()))?;
    s.push('\n');
    Ok(s)
}

fn write_outputs(dir: &Path, report: &Report) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    fs::write(dir.join("report.json"), json_text(report)?)?;
    fs::write(dir.join("report.txt"), &report.text)?;
    for (name, artifact) in &report.artifacts {
        let path = dir.join(name);
        match artifact {
            Artifact::Csv { data, labels } => {
                let file = fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
                ati_core::io::write_samples(file, data, labels)?;
            }
            Artifact::Json(v) => {
                let mut s = serde_json::to_string_pretty(v)?;
                s.push('\n');
                fs::write(&path, s)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = run(&cli).and_then(|report| {
        let shown = if cli.json { json_text(&report)? } else { report.text.clone() };
        std::io::stdout().write_all(shown.as_bytes())?;
        if let Some(dir) = &cli.out {
            write_outputs(dir, &report)?;
        }
        Ok(report.status)
    });
    match outcome {
        Ok(Status::Holds) => ExitCode::SUCCESS,
        Ok(Status::Fails) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
