//! Command-line front end.
//!
//! Every subcommand writes CSV files into `--out` and prints a short summary
//! to stdout. Failures print one line `error category=<c> message=<m>` to
//! stderr and exit with status 1 (status 2 for command-line usage errors).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use posterior_hmm::artemis::{
    artemis_study, blockwise_study, sweep, uniform_grid, ArtemisCurve, DEFAULT_GRID_STEPS,
};
use posterior_hmm::decoding::{path_change_points, viterbi, DecodingContext};
use posterior_hmm::fmci::{
    auto_truncation, distribution, expected_exact_run_counts, Statistic, OVERFLOW_FLAG_THRESHOLD,
};
use posterior_hmm::io::{self, format_real, Csv};
use posterior_hmm::{
    forward_backward, log_joint, sample_posterior_paths, stay_probabilities, Error, HmmModel,
    ObsSeq, PosteriorChain, Result, ValidationOptions,
};

/// Below this length Artemis curves are visibly jagged.
const COARSE_CURVE_LENGTH: usize = 10_000;

#[derive(Parser, Debug)]
#[command(
    name = "phmm",
    version,
    about = "Posterior analysis and hybrid decoding for Poisson hidden Markov models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Posterior, Viterbi and hybrid decoding of an observed sequence.
    Decode(DecodeArgs),
    /// Exact posterior distributions of state-2 summary statistics (two-state models).
    Fmci(FmciArgs),
    /// Draw paths from the posterior and compare frequencies with exact marginals.
    Sample(SampleArgs),
    /// Simulation study for choosing the hybrid weight.
    Artemis(ArtemisArgs),
    /// Block-wise accuracy of Posterior, Viterbi and hybrid decoding.
    Blockwise(BlockwiseArgs),
    /// Simulate hidden states and observations from a model.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Model file (TOML with `pi`, `gamma`, `lambda`).
    #[arg(long)]
    model: PathBuf,
    /// Rescale probability vectors that miss 1 by at most 0.01.
    #[arg(long)]
    renormalize: bool,
}

impl ModelArgs {
    fn load(&self) -> Result<HmmModel> {
        let options = if self.renormalize {
            ValidationOptions::relaxed()
        } else {
            ValidationOptions::default()
        };
        let (model, adjustments) = io::read_model(&self.model, options)?;
        for adj in adjustments {
            eprintln!("warning: {adj}");
        }
        Ok(model)
    }
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl OutArgs {
    fn file(&self, name: &str) -> Result<PathBuf> {
        io::create_dir(&self.out)?;
        Ok(self.out.join(name))
    }
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Observation file, one count per line.
    #[arg(long)]
    obs: PathBuf,
    #[command(flatten)]
    out: OutArgs,
    /// Hybrid weight in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Also report the weights at which the hybrid path changes.
    #[arg(long)]
    change_points: bool,
}

#[derive(Args, Debug)]
struct FmciArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    obs: PathBuf,
    #[command(flatten)]
    out: OutArgs,
    /// jumps, runs, positions, longest-run or exact-run:K; repeatable.
    #[arg(long = "statistic", required = true, value_parser = parse_statistic)]
    statistics: Vec<Statistic>,
    /// Largest value tracked exactly, or `auto` to choose it from posterior samples.
    #[arg(long, default_value = "auto", value_parser = parse_ell)]
    ell: Ell,
    /// Posterior samples used when `--ell auto`.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// State whose visits are counted.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    target_state: u8,
    /// Also write expected counts of runs of each exact length 1..=K.
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    obs: PathBuf,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Single weight instead of a grid.
    #[arg(long, conflicts_with = "alpha_grid")]
    alpha: Option<f64>,
    /// Grid k/N for k = 0..=N.
    #[arg(long, default_value_t = DEFAULT_GRID_STEPS)]
    alpha_grid: usize,
}

impl GridArgs {
    fn grid(&self) -> Result<Vec<f64>> {
        match self.alpha {
            Some(a) => Ok(vec![a]),
            None => uniform_grid(self.alpha_grid),
        }
    }
}

#[derive(Args, Debug)]
struct ArtemisArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Sequence length of each simulated replicate.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sweep a given sequence instead of simulating (needs `--states`).
    #[arg(long, requires = "states")]
    obs: Option<PathBuf>,
    /// True hidden states (1-based) paired with `--obs`.
    #[arg(long, requires = "obs")]
    states: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BlockwiseArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Hybrid weight; repeatable.
    #[arg(long = "alpha", required = true)]
    alphas: Vec<f64>,
    /// Comma-separated window lengths.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1,2,5,10,20,50,100,200,500,1000"
    )]
    block_sizes: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Clone, Copy)]
enum Ell {
    Auto,
    Fixed(usize),
}

fn parse_statistic(s: &str) -> std::result::Result<Statistic, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_ell(s: &str) -> std::result::Result<Ell, String> {
    if s == "auto" {
        return Ok(Ell::Auto);
    }
    match s.parse::<usize>() {
        Ok(l) if l >= 1 => Ok(Ell::Fixed(l)),
        _ => Err(format!(
            "expected `auto` or a positive integer, found {s:?}"
        )),
    }
}

fn label(state: usize) -> String {
    (state + 1).to_string()
}

fn read_obs(path: &Path) -> Result<ObsSeq> {
    io::read_observations(path)
}

fn decode(args: &DecodeArgs) -> Result<()> {
    let model = args.model.load()?;
    let obs = read_obs(&args.obs)?;
    let tables = forward_backward(&model, &obs)?;
    let ctx = DecodingContext::new(&model, &obs, &tables)?;
    let posterior = ctx.posterior_path();
    let best = viterbi(&model, &obs)?;
    let hybrid = ctx.hybrid_decode(args.alpha)?;

    let mut csv = Csv::with_header(&[
        "t",
        "observation",
        "posterior_state",
        "viterbi_state",
        "hybrid_state",
        "marginal_prob_of_hybrid_state",
    ]);
    for t in 0..obs.len() {
        let h = hybrid.path.states()[t];
        csv.row([
            (t + 1).to_string(),
            obs.counts()[t].to_string(),
            label(posterior.states()[t]),
            label(best.states()[t]),
            label(h),
            format_real(ctx.marginals.get(t, h)),
        ]);
    }
    csv.write(&args.out.file("decode.csv")?)?;

    println!(
        "loglik={} log_joint_posterior={} log_joint_viterbi={} log_joint_hybrid={} alpha={} hybrid_objective={}",
        format_real(ctx.loglik()),
        format_real(log_joint(&model, &posterior, &obs)?),
        format_real(log_joint(&model, &best, &obs)?),
        format_real(hybrid.log_joint),
        format_real(args.alpha),
        format_real(hybrid.objective),
    );
    if args.change_points {
        let points = path_change_points(&ctx, 100, 1e-6)?;
        let list: Vec<String> = points.iter().map(|a| format!("{a:.6}")).collect();
        println!("change_points={}", list.join(";"));
    }
    Ok(())
}

fn fmci(args: &FmciArgs) -> Result<()> {
    let mut model = args.model.load()?;
    if model.num_states() != 2 {
        return Err(Error::NotTwoState(model.num_states()));
    }
    if args.target_state == 1 {
        model = model.swap_two_states()?;
    }
    let obs = read_obs(&args.obs)?;
    let tables = forward_backward(&model, &obs)?;
    let chain = PosteriorChain::build(&model, &tables);

    let stay = stay_probabilities(&chain)?;
    let mut csv = Csv::with_header(&["t", "a_t", "b_t"]);
    for (i, (a, b)) in stay.a.iter().zip(&stay.b).enumerate() {
        csv.row([(i + 2).to_string(), format_real(*a), format_real(*b)]);
    }
    csv.write(&args.out.file("stay_probabilities.csv")?)?;

    let samples = match args.ell {
        Ell::Auto => Some(sample_posterior_paths(&chain, args.samples, args.seed)?),
        Ell::Fixed(_) => None,
    };
    for &statistic in &args.statistics {
        let ell = match args.ell {
            Ell::Fixed(l) => l,
            Ell::Auto => {
                let t = auto_truncation(samples.as_deref().unwrap_or_default(), statistic, None)?;
                eprintln!(
                    "{statistic}: ell={} (largest sampled value {})",
                    t.ell,
                    t.observed_max.unwrap_or(0)
                );
                t.ell
            }
        };
        let dist = distribution(statistic, ell, &chain)?;
        let mut csv = Csv::with_header(&["value", "probability"]);
        for (v, p) in dist.probs.iter().enumerate() {
            csv.row([v.to_string(), format_real(*p)]);
        }
        csv.row([
            format!("overflow_ge_{}", ell + 1),
            format_real(dist.overflow),
        ]);
        csv.write(&args.out.file(&format!("{statistic}.csv"))?)?;
        if dist.overflow > OVERFLOW_FLAG_THRESHOLD {
            eprintln!(
                "warning: {statistic}: mass {} above ell={ell}; increase --ell",
                format_real(dist.overflow)
            );
        }
        println!(
            "statistic={statistic} ell={ell} mean_lower_bound={} overflow={}",
            format_real(dist.truncated_mean()),
            format_real(dist.overflow)
        );
    }
    if let Some(k_max) = args.k_max {
        if k_max == 0 {
            return Err(Error::InvalidArgument("--k-max must be at least 1".into()));
        }
        let ell = match args.ell {
            Ell::Fixed(l) => l,
            Ell::Auto => {
                let samples = samples.as_deref().unwrap_or_default();
                let mut ell = 1;
                for k in 1..=k_max {
                    ell = ell.max(auto_truncation(samples, Statistic::ExactRun(k), None)?.ell);
                }
                ell
            }
        };
        let mut csv = Csv::with_header(&["k", "expected_count", "lower_bound_flag"]);
        for e in expected_exact_run_counts(&chain, k_max, ell)? {
            csv.row([
                e.run_length.to_string(),
                format_real(e.expected),
                u8::from(e.lower_bound).to_string(),
            ]);
        }
        csv.write(&args.out.file("expected_run_counts.csv")?)?;
    }
    Ok(())
}

fn sample(args: &SampleArgs) -> Result<()> {
    let model = args.model.load()?;
    let obs = read_obs(&args.obs)?;
    let tables = forward_backward(&model, &obs)?;
    let chain = PosteriorChain::build(&model, &tables);
    let paths = sample_posterior_paths(&chain, args.samples, args.seed)?;
    let (n, k) = (obs.len(), model.num_states());

    let mut header = vec!["sample".to_string()];
    header.extend((1..=n).map(|t| format!("t{t}")));
    let mut csv = Csv::with_header(&header.iter().map(String::as_str).collect::<Vec<_>>());
    let mut counts = vec![0usize; n * k];
    for (r, path) in paths.iter().enumerate() {
        for (t, &s) in path.states().iter().enumerate() {
            counts[t * k + s] += 1;
        }
        csv.row(std::iter::once((r + 1).to_string()).chain(path.labels().map(|l| l.to_string())));
    }
    csv.write(&args.out.file("samples.csv")?)?;

    let marginals = tables.posterior_marginals();
    let mut csv = Csv::with_header(&["t", "state", "empirical_frequency", "marginal"]);
    for t in 0..n {
        for s in 0..k {
            csv.row([
                (t + 1).to_string(),
                label(s),
                format_real(counts[t * k + s] as f64 / paths.len() as f64),
                format_real(marginals.get(t, s)),
            ]);
        }
    }
    csv.write(&args.out.file("frequencies.csv")?)?;
    println!("samples={} positions={n} seed={}", paths.len(), args.seed);
    Ok(())
}

fn write_curve(curve: &ArtemisCurve, path: &Path) -> Result<()> {
    let mut csv = Csv::with_header(&[
        "alpha",
        "accuracy",
        "log_joint",
        "scaled_accuracy",
        "scaled_log_joint",
    ]);
    for i in 0..curve.alphas.len() {
        csv.row([
            format_real(curve.alphas[i]),
            format_real(curve.accuracy[i]),
            format_real(curve.log_joint[i]),
            format_real(curve.scaled_accuracy[i]),
            format_real(curve.scaled_log_joint[i]),
        ]);
    }
    csv.write(path)
}

fn optional(a: Option<f64>) -> String {
    a.map_or_else(|| "undefined".into(), format_real)
}

fn artemis(args: &ArtemisArgs) -> Result<()> {
    let model = args.model.load()?;
    let grid = args.grid.grid()?;

    if let (Some(obs), Some(states)) = (&args.obs, &args.states) {
        let x = read_obs(obs)?;
        let y = io::read_states(states)?;
        let curve = sweep(&model, &x, &y, &grid)?;
        write_curve(&curve, &args.out.file("curve.csv")?)?;
        if curve.is_degenerate() {
            eprintln!("warning: degenerate scaling, optimal alpha undefined");
        }
        println!("optimal_alpha={}", optional(curve.optimal_alpha));
        return Ok(());
    }

    if args.n < COARSE_CURVE_LENGTH {
        eprintln!(
            "warning: n={} is short; Artemis curves are coarse and the chosen alpha stabilizes only for increasing sequence length",
            args.n
        );
    }
    let report = artemis_study(&model, args.n, args.replicates, &grid, args.seed, "study")?;
    for (r, curve) in report.curves.iter().enumerate() {
        write_curve(curve, &args.out.file(&format!("curve_{}.csv", r + 1))?)?;
    }
    for r in report.degenerate_replicates() {
        eprintln!(
            "warning: replicate {}: degenerate scaling, optimal alpha undefined",
            r + 1
        );
    }
    let mut csv = Csv::with_header(&["replicate", "optimal_alpha"]);
    for (r, a) in report.optimal_alphas.iter().enumerate() {
        csv.row([(r + 1).to_string(), optional(*a)]);
    }
    csv.row(["average".into(), format_real(report.average)]);
    csv.row(["std".into(), format_real(report.std_dev)]);
    csv.write(&args.out.file("summary.csv")?)?;
    println!(
        "replicates={} n={} average_alpha={} std_alpha={}",
        args.replicates,
        args.n,
        format_real(report.average),
        format_real(report.std_dev)
    );
    Ok(())
}

fn blockwise(args: &BlockwiseArgs) -> Result<()> {
    let model = args.model.load()?;
    let rows = blockwise_study(
        &model,
        args.n,
        args.replicates,
        &args.alphas,
        &args.block_sizes,
        args.seed,
    )?;
    let mut csv = Csv::with_header(&[
        "block_size",
        "method",
        "mean_accuracy",
        "mean_accuracy_minus_posterior",
    ]);
    for r in &rows {
        csv.row([
            r.block_size.to_string(),
            r.method.to_string(),
            format_real(r.mean_accuracy),
            format_real(r.mean_accuracy_minus_posterior),
        ]);
    }
    csv.write(&args.out.file("blockwise.csv")?)?;
    println!(
        "rows={} replicates={} n={}",
        rows.len(),
        args.replicates,
        args.n
    );
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let model = args.model.load()?;
    let (states, obs) = model.simulate(args.n, args.seed)?;
    let mut x = Csv::with_header(&["count"]);
    obs.counts().iter().for_each(|c| x.row([c.to_string()]));
    x.write(&args.out.file("observations.csv")?)?;
    let mut y = Csv::with_header(&["state"]);
    states.labels().for_each(|l| y.row([l.to_string()]));
    y.write(&args.out.file("states.csv")?)?;
    println!("n={} seed={}", args.n, args.seed);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Decode(a) => decode(a),
        Command::Fmci(a) => fmci(a),
        Command::Sample(a) => sample(a),
        Command::Artemis(a) => artemis(a),
        Command::Blockwise(a) => blockwise(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let message = text
                .split("Usage:")
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            eprintln!("error category=usage message={}", one_line(message));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "error category={} message={}",
                e.category(),
                one_line(&e.to_string())
            );
            ExitCode::FAILURE
        }
    }
}
