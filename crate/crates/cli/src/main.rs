use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use boostgap::adversary::{
    derive_params, majority_voter_certify, CalibrationConstants, CertificateSummary, CertifyOutcome, HypothesisSets,
    SetId, DEFAULT_ALPHA, DEFAULT_BLOCK_BUDGET,
};
use boostgap::harness::{
    partial_path, persist, run_sweep, trial_seed, Adversary, Algorithm, HarnessError, SweepOutcome, SweepSpec,
};
use boostgap::lemma_lab::{
    check_anticoncentration, check_bias_lemma, check_coupon_collector, check_linear_comb, LemmaError,
};
use boostgap::model::{draw_sample, Universe};

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURES: u8 = 3;

#[derive(Parser)]
#[command(name = "boostgap", version, about = "Adversarial weak learners against AdaBoost, with exact errors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trials of one algorithm at one sample size.
    Run(RunArgs),
    /// A sweep described by a JSON config.
    Sweep(SweepArgs),
    /// Monte-Carlo checks of the lemmas.
    #[command(subcommand)]
    Lemmas(LemmaCommand),
    /// Runs the majority voter on seeded samples.
    Certify(CertifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Adaboost,
    Adastar,
    Bagged,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Adaboost => Algorithm::AdaBoost,
            AlgoArg::Adastar => Algorithm::AdaStar,
            AlgoArg::Bagged => Algorithm::Bagged,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, value_enum, default_value = "adaboost")]
    algo: AlgoArg,
    #[arg(long, value_enum, default_value = "on")]
    adversary: OnOff,
    /// Boosting rounds; ceil(ln m / (2 gamma^2)) + 1 when absent.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "trials.csv")]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BLOCK_BUDGET)]
    budget: usize,
    #[arg(long)]
    bags: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    max_fail_rate: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    /// Overrides `jobs` of the config.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum LemmaCommand {
    /// Biased sums: P[sum w_i h(i) <= -alpha' beta].
    Bias {
        /// Comma-separated weights with l1 norm 1.
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.5")]
        w: Vec<f64>,
        #[arg(long, default_value_t = 4.0)]
        alpha_tilde: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha_prime: f64,
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Coupon collector: P[X <= m].
    Coupon {
        #[arg(long, default_value_t = 1024)]
        m: usize,
        #[arg(long, default_value_t = 4)]
        r: usize,
        #[arg(long, default_value_t = 8.0)]
        zeta: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Linear combinations of random sign columns.
    Lincomb {
        #[arg(long, default_value_t = 400)]
        r: usize,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        /// Candidate vectors searched per matrix.
        #[arg(long, default_value_t = 300)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Anti-concentration of uniform sign sums, with constant calibration.
    Anticonc {
        /// Comma-separated nonnegative coefficients; `--n` uniform ones when absent.
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        /// Number of uniform coefficients `1 / (2n)`.
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SetArg {
    H1,
    H2,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    runs: u64,
    #[arg(long, value_enum, default_value = "h1")]
    set: SetArg,
    /// Demand the minus quota on F_{r,S}.
    #[arg(long)]
    restrict_minus: bool,
    /// Advantage demanded per round; the selection threshold when absent.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BLOCK_BUDGET)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Failures(String),
    Other(String),
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Other(e.to_string())
        }
    }
}

impl From<LemmaError> for CliError {
    fn from(e: LemmaError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(v).map_err(|e| CliError::Other(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn finish_sweep(spec: &SweepSpec, out: &Path) -> Result<(), CliError> {
    let outcome: SweepOutcome = run_sweep(spec, Some(&partial_path(out)))?;
    let summary_path = persist(out, &outcome)?;
    for a in &outcome.summary.aggregates {
        println!(
            "m={} algo={} adversary={} trials={} failures={} mean_error={} in_spart1={:.3}",
            a.m,
            a.algo,
            a.adversary,
            a.trials,
            a.failures,
            a.mean_error.map_or("-".into(), |e| format!("{e:.4e}")),
            a.in_spart1_fraction
        );
    }
    for f in &outcome.summary.fits {
        println!("fit algo={} adversary={} preferred={:?}", f.algo, f.adversary, f.preferred);
    }
    if let Some(r) = &outcome.summary.adaboost_over_bagged {
        println!("adaboost/bagged mean error ratio at m={}: {:?}", r.m, r.ratio);
    }
    println!("wrote {} and {}", out.display(), summary_path.display());
    let rate = outcome.summary.failure_rate;
    if rate > spec.max_fail_rate {
        return Err(CliError::Failures(format!("trial failure rate {rate:.3} above {}", spec.max_fail_rate)));
    }
    Ok(())
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(a) => {
            let spec = SweepSpec {
                gamma: a.gamma,
                d: a.d,
                alpha: a.alpha,
                m_grid: vec![a.m],
                trials: a.trials,
                algorithms: vec![a.algo.into()],
                seed: a.seed,
                adversary: vec![match a.adversary {
                    OnOff::On => Adversary::On,
                    OnOff::Off => Adversary::Off,
                }],
                per_block_budget: a.budget,
                rounds: a.rounds,
                nu: a.nu,
                bags: a.bags,
                constants: CalibrationConstants::default(),
                jobs: a.jobs,
                max_fail_rate: a.max_fail_rate,
            };
            spec.validate()?;
            finish_sweep(&spec, &a.out)
        }
        Command::Sweep(a) => {
            let text = std::fs::read_to_string(&a.config)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", a.config.display())))?;
            let mut spec = SweepSpec::from_json(&text)?;
            if a.jobs.is_some() {
                spec.jobs = a.jobs;
            }
            spec.validate()?;
            finish_sweep(&spec, &a.out)
        }
        Command::Lemmas(l) => match l {
            LemmaCommand::Bias { w, alpha_tilde, alpha_prime, beta, trials, seed } => {
                json(&check_bias_lemma(&w, alpha_tilde, alpha_prime, beta, trials, seed)?)
            }
            LemmaCommand::Coupon { m, r, zeta, trials, seed } => json(&check_coupon_collector(m, r, zeta, trials, seed)?),
            LemmaCommand::Lincomb { r, n, trials, budget, seed } => json(&check_linear_comb(r, n, trials, budget, seed)?),
            LemmaCommand::Anticonc { x, n, beta, trials, seed } => {
                let x = if x.is_empty() { vec![1.0 / (2 * n.max(1)) as f64; n.max(1)] } else { x };
                json(&check_anticoncentration(&x, beta, trials, &CalibrationConstants::default(), seed)?)
            }
        },
        Command::Certify(a) => {
            let params = derive_params(a.gamma, a.d, a.m, a.alpha, CalibrationConstants::default())
                .and_then(|p| p.with_budget(a.budget))
                .map_err(|e| CliError::Config(e.to_string()))?;
            let threshold = a.threshold.unwrap_or(params.select_threshold);
            let set = match a.set {
                SetArg::H1 => SetId::H1,
                SetArg::H2 => SetId::H2,
            };
            let universe = Universe::new(params.u).map_err(|e| CliError::Config(e.to_string()))?;
            let mut fails = 0;
            for i in 0..a.runs {
                let seed = trial_seed(a.seed, a.m, i);
                let sets = Arc::new(HypothesisSets::new(seed, &params));
                let sample = draw_sample(universe, a.m, seed).map_err(|e| CliError::Other(e.to_string()))?;
                let outcome = majority_voter_certify(&sets, set, &sample, &params, a.restrict_minus, threshold)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                match outcome {
                    CertifyOutcome::Certified(c) => json(&CertificateSummary::from(&c))?,
                    CertifyOutcome::Fail { round } => {
                        fails += 1;
                        println!("{{\"fail_round\": {round}}}");
                    }
                }
            }
            println!("certified {} of {} runs", a.runs - fails, a.runs);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Failures(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURES)
        }
        Err(CliError::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
