//! Command-line front end for circsense.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use circsense::analysis::{
    coherence, coherence_bound, exhaustive_ric, failure_probability, fuchs_tropp_certificate, gershgorin_ric,
    sample_complexity_budget,
};
use circsense::experiments::io::{read_phase_csv_path, PhaseCsvWriter};
use circsense::experiments::phase::{omega_seed, run_phase_transition_with};
use circsense::experiments::sweep::write_sweep_csv;
use circsense::experiments::{
    eigen_concentration_sweep, fit::fit_scaling_with, fit::FitOptions, fmt17, plot::phase_svg, thread_pool_from_env,
    ExperimentConfig, Instance, SignMode, SupportMode, SweepConfig,
};
use circsense::khintchine::{
    chaos_check, decoupling_check, khintchine_constants, moment_tail_bound, scalar_chaos_check, MatrixFamily,
    Sampling,
};
use circsense::signals::{omega_preset, rademacher_generator, random_sparse_with, MagnitudeLaw, OmegaPreset};
use circsense::solver::{basis_pursuit, DEFAULT_RECOVERY_TOL};
use circsense::{GeneratorKind, IndexSet, Result, SeedSpec, SolverConfig, StructuredOperator};

#[derive(Parser)]
#[command(name = "circsense", version, about = "Sparse recovery with partial random circulant and Toeplitz matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance (operator, sparse signal, measurements) as JSON.
    Gen(GenArgs),
    /// Solve basis pursuit for an instance JSON.
    Recover(RecoverArgs),
    /// Coherence of random operators against its probabilistic bound.
    Coherence(CoherenceArgs),
    /// Fuchs/Tropp recovery certificate for random instances.
    Certify(CertifyArgs),
    /// Restricted eigenvalue spread of random column submatrices.
    Spectra(SpectraArgs),
    /// Sample-complexity thresholds for given N, s, ε.
    Budget(BudgetArgs),
    /// Khintchine-type constants and moment inequality checks.
    Khintchine(KhintchineArgs),
    /// Phase-transition experiment written as CSV.
    Phase(PhaseArgs),
    /// Fit the scaling exponent of the 50% boundary from a phase CSV.
    Fit(FitArgs),
    /// Render a phase CSV as an SVG heatmap.
    Plot(PlotArgs),
}

#[derive(Args, Clone)]
struct OperatorArgs {
    #[arg(long, default_value = "circulant")]
    kind: GeneratorKind,
    #[arg(long = "N")]
    big_n: usize,
    /// Number of measurements (defaults to N).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value = "uniform_random")]
    preset: OmegaPreset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl OperatorArgs {
    fn rows(&self) -> usize {
        self.n.unwrap_or(self.big_n)
    }

    fn omega(&self) -> Result<IndexSet> {
        omega_preset(self.preset, self.big_n, self.rows(), omega_seed(self.seed, self.big_n))
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    op: OperatorArgs,
    #[arg(long)]
    s: usize,
    /// Stream id of the generator and signal draw.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long, default_value = "unit")]
    magnitudes: MagnitudeLaw,
    /// Store the generator without the 1/√n column scaling.
    #[arg(long)]
    unnormalized: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    feas_tol: f64,
    #[arg(long, default_value_t = 1e-7)]
    opt_tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    step: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            feas_tol: self.feas_tol,
            opt_tol: self.opt_tol,
            max_iter: self.max_iter,
            step: self.step,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoherenceArgs {
    #[command(flatten)]
    op: OperatorArgs,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    op: OperatorArgs,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectraArgs {
    #[arg(long, default_value = "circulant")]
    kind: GeneratorKind,
    #[arg(long = "N")]
    big_n: usize,
    /// Comma-separated measurement counts.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value = "first_n")]
    preset: OmegaPreset,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "per_trial")]
    support: SupportMode,
    /// Emit per-n quantiles instead of per-trial rows.
    #[arg(long)]
    quantiles: bool,
    /// Also report the exhaustive restricted isometry constant (small N only).
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long = "N")]
    big_n: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Also evaluate the failure probability at this many measurements.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KhintchineMode {
    Constants,
    Chaos,
    Scalar,
    Decouple,
    Tail,
}

#[derive(Args)]
struct KhintchineArgs {
    #[arg(long, value_enum)]
    mode: KhintchineMode,
    /// Moment order m (the inequality is for order 2m).
    #[arg(long, default_value_t = 2)]
    m: u32,
    /// Moment order p for scalar, decoupling and tail modes.
    #[arg(long, default_value_t = 4.0)]
    p: f64,
    /// Schatten index for decoupling (`inf` for the operator norm).
    #[arg(long, default_value_t = f64::INFINITY)]
    schatten: f64,
    /// Number of random families.
    #[arg(long, default_value_t = 10)]
    families: u64,
    /// Family size M.
    #[arg(long = "M", default_value_t = 4)]
    size: usize,
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long, default_value_t = 2)]
    t: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo sign draws; 0 enumerates all patterns.
    #[arg(long, default_value_t = 0)]
    trials: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    p0: f64,
    #[arg(long, default_value_t = 2.0)]
    u: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long = "N", value_delimiter = ',', required = true)]
    big_n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    s: Vec<usize>,
    /// Comma-separated measurement counts; omitted selects a grid of multiples of s.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, default_value = "circulant")]
    kind: GeneratorKind,
    #[arg(long, default_value = "uniform_random")]
    preset: OmegaPreset,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "unit")]
    magnitudes: MagnitudeLaw,
    /// Use the all-positive sign pattern instead of random signs.
    #[arg(long)]
    positive_signs: bool,
    #[arg(long, default_value_t = DEFAULT_RECOVERY_TOL)]
    recovery_tol: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "N")]
    big_n: usize,
    #[arg(long, default_value_t = 2000)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "N")]
    big_n: usize,
    #[arg(long)]
    out: PathBuf,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Rows of the `(seed, trial, N, n, s, statistic, value, bound)` analysis schema.
struct AnalysisCsv {
    inner: csv::Writer<Box<dyn Write>>,
}

impl AnalysisCsv {
    fn new(path: Option<&Path>) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(sink(path)?);
        inner.write_record(["seed", "trial", "N", "n", "s", "statistic", "value", "bound"])?;
        Ok(Self { inner })
    }

    #[allow(clippy::too_many_arguments)]
    fn row(&mut self, seed: u64, trial: u64, big_n: usize, n: usize, s: Option<usize>, stat: &str, value: f64, bound: f64) -> Result<()> {
        self.inner.write_record([
            seed.to_string(),
            trial.to_string(),
            big_n.to_string(),
            n.to_string(),
            s.map_or_else(String::new, |s| s.to_string()),
            stat.to_string(),
            fmt17(value),
            fmt17(bound),
        ])?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

fn gen(a: &GenArgs) -> Result<()> {
    let omega = a.op.omega()?;
    let mut rng = SeedSpec::new(a.op.seed, a.trial).rng();
    let g = rademacher_generator(&mut rng, a.op.kind, a.op.big_n)?;
    let x = random_sparse_with(&mut rng, a.op.big_n, a.s, a.magnitudes)?;
    let op = StructuredOperator::new(g, omega, !a.unnormalized)?;
    let xd = x.to_dense();
    let y = op.apply(&xd)?;
    write_json(a.out.as_deref(), &Instance::from_operator(&op, y, Some(xd)))
}

fn recover(a: &RecoverArgs) -> Result<()> {
    let inst = Instance::from_json(&std::fs::read_to_string(&a.input)?)?;
    let op = inst.to_operator()?;
    let res = basis_pursuit(&op, &inst.y, &a.solver.config())?;
    write_json(a.out.as_deref(), &res)
}

fn random_operator(op: &OperatorArgs, omega: &IndexSet, trial: u64) -> Result<(StructuredOperator, rand_chacha::ChaCha8Rng)> {
    let mut rng = SeedSpec::new(op.seed, trial).rng();
    let g = rademacher_generator(&mut rng, op.kind, op.big_n)?;
    Ok((StructuredOperator::new(g, omega.clone(), true)?, rng))
}

fn coherence_cmd(a: &CoherenceArgs) -> Result<()> {
    let omega = a.op.omega()?;
    let mut out = AnalysisCsv::new(a.out.as_deref())?;
    for t in 0..a.trials {
        let (op, _) = random_operator(&a.op, &omega, t)?;
        let c = coherence(&op, a.eps)?;
        out.row(a.op.seed, t, a.op.big_n, a.op.rows(), None, "mu", c.mu, c.bound_value)?;
    }
    out.finish()
}

fn certify(a: &CertifyArgs) -> Result<()> {
    let omega = a.op.omega()?;
    let mut out = AnalysisCsv::new(a.out.as_deref())?;
    let (big_n, n) = (a.op.big_n, a.op.rows());
    for t in 0..a.trials {
        let (op, mut rng) = random_operator(&a.op, &omega, t)?;
        let x = random_sparse_with(&mut rng, big_n, a.s, MagnitudeLaw::Unit)?;
        let rep = fuchs_tropp_certificate(&op, &x.support(), x.signs(), false)?;
        out.row(a.op.seed, t, big_n, n, Some(a.s), "max_correlation", rep.max_abs_correlation, 1.0)?;
        out.row(a.op.seed, t, big_n, n, Some(a.s), "lambda_min", rep.lambda_min, 0.0)?;
    }
    out.finish()
}

fn spectra(a: &SpectraArgs) -> Result<()> {
    let ns = if a.n.is_empty() { vec![a.big_n] } else { a.n.clone() };
    let cfg = SweepConfig {
        big_n: a.big_n,
        s: a.s,
        n: ns,
        trials: a.trials,
        seed: a.seed,
        kind: a.kind,
        preset: a.preset,
        support: a.support,
    };
    let rows = eigen_concentration_sweep(&cfg)?;
    if a.quantiles {
        let mut w = sink(a.out.as_deref())?;
        write_sweep_csv(&mut w, &cfg, &rows)?;
        w.flush()?;
        return Ok(());
    }
    let mut out = AnalysisCsv::new(a.out.as_deref())?;
    for row in &rows {
        let omega = omega_preset(a.preset, a.big_n, row.n, omega_seed(a.seed, a.big_n))?;
        for (t, &delta) in row.deltas.iter().enumerate() {
            let mut rng = SeedSpec::new(a.seed, t as u64).rng();
            let g = rademacher_generator(&mut rng, a.kind, a.big_n)?;
            let op = StructuredOperator::new(g, omega.clone(), true)?;
            let mu = coherence(&op, 0.05)?.mu;
            out.row(a.seed, t as u64, a.big_n, row.n, Some(a.s), "delta", delta, gershgorin_ric(mu, a.s)?)?;
            if a.exhaustive {
                out.row(a.seed, t as u64, a.big_n, row.n, Some(a.s), "ric", exhaustive_ric(&op, a.s)?, gershgorin_ric(mu, a.s)?)?;
            }
        }
    }
    out.finish()
}

fn budget(a: &BudgetArgs) -> Result<()> {
    let b = sample_complexity_budget(a.big_n, a.s, a.eps)?;
    println!("n_cond2 = {}", fmt17(b.n_cond2));
    println!("n_cond1 = {}", fmt17(b.n_cond1));
    println!("n_required = {}", fmt17(b.n_required));
    if let Some(n) = a.n {
        println!("failure_probability(n = {n}) = {}", fmt17(failure_probability(a.big_n, a.s, a.eps, n)));
        println!("coherence_bound(n = {n}) = {}", fmt17(coherence_bound(a.big_n, n, a.eps)));
    }
    Ok(())
}

fn khintchine(a: &KhintchineArgs) -> Result<()> {
    let sampling = if a.trials == 0 {
        Sampling::Exhaustive
    } else {
        Sampling::MonteCarlo {
            trials: a.trials,
            seed: a.seed,
        }
    };
    match a.mode {
        KhintchineMode::Constants => return write_json(a.out.as_deref(), &khintchine_constants(a.m, a.p)?),
        KhintchineMode::Tail => {
            return write_json(a.out.as_deref(), &moment_tail_bound(a.alpha, a.beta, a.gamma, a.p0, a.u)?)
        }
        _ => {}
    }
    let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
    w.write_record(["family_seed", "M", "r", "t", "order", "lhs", "rhs", "ratio", "active_term", "method"])?;
    for f in 0..a.families {
        let mut rng = SeedSpec::new(a.seed, f).rng();
        let (order, lhs, rhs, ratio, active, method, r, t) = match a.mode {
            KhintchineMode::Chaos => {
                let fam = MatrixFamily::random(&mut rng, a.size, a.r, a.t)?;
                let c = chaos_check(&fam, a.m, sampling)?;
                let active = c.max_term_active.map_or_else(String::new, |t| t.to_string());
                (c.order, c.lhs, c.rhs, c.ratio(), active, c.method, a.r, a.t)
            }
            KhintchineMode::Scalar => {
                let fam = MatrixFamily::random(&mut rng, a.size, 1, 1)?;
                let coeffs = DMatrix::from_fn(a.size, a.size, |j, k| fam.block(j, k)[(0, 0)]);
                let c = scalar_chaos_check(&coeffs, a.p, sampling)?;
                (c.order, c.lhs, c.rhs, c.ratio(), String::new(), c.method, 1, 1)
            }
            KhintchineMode::Decouple => {
                let fam = MatrixFamily::random(&mut rng, a.size, a.r, a.t)?;
                let c = decoupling_check(&fam, a.schatten, a.p, sampling)?;
                let factor = 4f64.powf(a.p);
                (c.p, c.coupled, factor * c.decoupled, c.ratio / factor, String::new(), c.method, a.r, a.t)
            }
            KhintchineMode::Constants | KhintchineMode::Tail => unreachable!("handled above"),
        };
        w.write_record([
            f.to_string(),
            a.size.to_string(),
            r.to_string(),
            t.to_string(),
            fmt17(order),
            fmt17(lhs),
            fmt17(rhs),
            fmt17(ratio),
            active,
            method.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn phase(a: &PhaseArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        big_n: a.big_n.clone(),
        s: a.s.clone(),
        n: a.n.clone(),
        kind: a.kind,
        preset: a.preset,
        trials: a.trials,
        master_seed: a.seed,
        solver: a.solver.config(),
        recovery_tol: a.recovery_tol,
        magnitudes: a.magnitudes,
        signs: if a.positive_signs { SignMode::AllPositive } else { SignMode::Random },
    };
    cfg.cells()?;
    let mut w = PhaseCsvWriter::new(sink(a.out.as_deref())?)?;
    run_phase_transition_with(&cfg, |c| w.write(c))?;
    Ok(())
}

fn fit(a: &FitArgs) -> Result<()> {
    let cells = read_phase_csv_path(&a.input)?;
    let opts = FitOptions {
        bootstrap_reps: a.bootstrap,
        bootstrap_seed: a.seed,
        ..FitOptions::default()
    };
    write_json(a.out.as_deref(), &fit_scaling_with(&cells, a.big_n, &opts)?)
}

fn plot(a: &PlotArgs) -> Result<()> {
    let cells = read_phase_csv_path(&a.input)?;
    std::fs::write(&a.out, phase_svg(&cells, a.big_n)?)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Recover(a) => recover(a),
        Command::Coherence(a) => coherence_cmd(a),
        Command::Certify(a) => certify(a),
        Command::Spectra(a) => spectra(a),
        Command::Budget(a) => budget(a),
        Command::Khintchine(a) => khintchine(a),
        Command::Phase(a) => phase(a),
        Command::Fit(a) => fit(a),
        Command::Plot(a) => plot(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match thread_pool_from_env() {
        Some(pool) => pool.install(|| run(&cli)),
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
