use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mpesplit::harness::table1::{format_table1, table1_config};
use mpesplit::harness::{
    emit, instantiate, run_convergence, ExperimentConfig, Format, ImplicitOperator, LadderEntry,
    ProblemSpec, Scheme,
};
use mpesplit::flow::error_norms;
use mpesplit::mpe::{mpe_weights, KSequence, WeightMode};
use mpesplit::Error;

#[derive(Parser)]
#[command(name = "mpesplit", version, about = "Operator splitting and multi-product expansion studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the extrapolation weights for a substep list.
    Coeffs {
        /// Strictly increasing positive substep counts, e.g. `1,2,3`.
        #[arg(long)]
        k: String,
        /// Print exact fractions alongside the decimals.
        #[arg(long)]
        rational: bool,
        /// Compute by solving the moment system instead of the closed form.
        #[arg(long)]
        solve: bool,
    },
    /// Run a convergence study from a JSON config.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Report path; overrides the config's output path. Stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Integrate one trajectory and print the final state and its error.
    Step {
        #[arg(long, value_enum)]
        problem: ProblemArg,
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// Logistic initial value.
        #[arg(long, default_value_t = 0.1)]
        u0: f64,
        /// Burgers viscosity.
        #[arg(long, default_value_t = 0.05)]
        mu: f64,
        /// Burgers grid count per direction.
        #[arg(long, default_value_t = 20)]
        nx: usize,
        /// Harmonic oscillator mass.
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        /// Harmonic oscillator spring constant.
        #[arg(long, default_value_t = 1.0)]
        spring: f64,
    },
    /// Run the 3×3 Burgers study with two iterations per step.
    Table1 {
        #[arg(long, default_value_t = 0.05)]
        mu: f64,
        /// Operator solved at the new iterate.
        #[arg(long, value_enum, default_value_t = ImplicitArg::Diffusion)]
        implicit: ImplicitArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Logistic,
    Harmonic,
    Burgers2d,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum ImplicitArg {
    Diffusion,
    Convection,
}

fn coeffs(k: &str, rational: bool, solve: bool) -> Result<(), Error> {
    let k: KSequence = k.parse()?;
    let mode = if solve { WeightMode::Solve } else { WeightMode::ClosedForm };
    let w = mpe_weights(&k, mode)?;
    if rational && w.exact().is_none() {
        eprintln!("note: exact weights are only computed for k <= 100; printing decimals");
    }
    for (i, (&ki, c)) in k.as_slice().iter().zip(w.values()).enumerate() {
        match w.exact().filter(|_| rational) {
            Some(q) => println!("k={ki:<4} c={:<24} {c:.17e}", q[i].to_string()),
            None => println!("k={ki:<4} c={c:.17e}"),
        }
    }
    println!("order {}", k.order());
    Ok(())
}

fn converge(config: PathBuf, out: Option<PathBuf>, format: Option<FormatArg>) -> Result<bool, Error> {
    let cfg = ExperimentConfig::load(&config)?;
    let report = run_convergence(&cfg)?;
    let format = match format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => cfg.output.as_ref().map_or(Format::Csv, |o| o.format),
    };
    let path = out.or_else(|| cfg.output.as_ref().map(|o| PathBuf::from(&o.path)));
    match path {
        Some(p) => emit(&report, format, &p)?,
        None => match format {
            Format::Csv => print!("{}", report.to_csv()),
            Format::Json => println!("{}", report.to_json()?),
        },
    }
    for r in report.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("row dt={} dx={:?} failed: {}", r.dt, r.dx, r.error.as_deref().unwrap_or(""));
    }
    Ok(!report.has_failures())
}

#[allow(clippy::too_many_arguments)]
fn step(
    problem: ProblemArg,
    scheme: &str,
    h: f64,
    t_end: f64,
    u0: f64,
    mu: f64,
    nx: usize,
    mass: f64,
    spring: f64,
) -> Result<(), Error> {
    if !(h > 0.0 && h.is_finite()) || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Config("--h and --t-end must be positive".into()));
    }
    let spec = match problem {
        ProblemArg::Logistic => ProblemSpec::Logistic { u0 },
        ProblemArg::Harmonic => ProblemSpec::Harmonic {
            mass,
            spring,
            q0: 1.0,
            v0: 0.0,
        },
        ProblemArg::Burgers2d => ProblemSpec::Burgers2d {
            mu,
            nx: Some(nx),
            implicit: ImplicitOperator::Diffusion,
        },
        ProblemArg::Linear => ProblemSpec::Linear {
            a: None,
            b: None,
            random_dim: None,
            c0: None,
        },
    };
    let scheme = Scheme::from_id(scheme)?;
    let row = LadderEntry {
        dx: matches!(problem, ProblemArg::Burgers2d).then(|| 1.0 / nx as f64),
        dt: h,
    };
    let inst = instantiate(&spec, &scheme, &row, t_end, 0)?;
    let u = scheme.integrate(&inst.system, 0.0, t_end, h, &inst.initial)?;
    let norms = error_norms(&u, &inst.exact)?;
    println!("t_end {t_end}");
    if u.dim() <= 8 {
        let parts: Vec<String> = u.as_slice().iter().map(|x| format!("{x:.15e}")).collect();
        println!("state [{}]", parts.join(", "));
    } else {
        println!("state dim {}", u.dim());
    }
    println!("err_max {:.6e}", norms.max);
    println!("err_l1 {:.6e}", norms.l1);
    Ok(())
}

fn table1(mu: f64, implicit: ImplicitArg) -> Result<bool, Error> {
    let implicit = match implicit {
        ImplicitArg::Diffusion => ImplicitOperator::Diffusion,
        ImplicitArg::Convection => ImplicitOperator::Convection,
    };
    let report = run_convergence(&table1_config(mu, implicit))?;
    print!("{}", format_table1(&report));
    Ok(!report.has_failures())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Coeffs { k, rational, solve } => coeffs(&k, rational, solve).map(|_| true),
        Command::Converge { config, out, format } => converge(config, out, format),
        Command::Step {
            problem,
            scheme,
            h,
            t_end,
            u0,
            mu,
            nx,
            mass,
            spring,
        } => step(problem, &scheme, h, t_end, u0, mu, nx, mass, spring).map(|_| true),
        Command::Table1 { mu, implicit } => table1(mu, implicit),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
