use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use covering::engine::{snapshot_vacant, vacancy_probability_exact};
use covering::experiments::{assess, preset, run_experiment, ExperimentConfig, ExperimentOutput, Phase};
use covering::shepp::shepp_series;
use covering::tails::{cf_estimate, karamata_ratio, TailMoments};
use covering::{Error, Result, TailFunction};

/// Random covering of the discrete torus and the Mandelbrot–Shepp circle.
#[derive(Parser)]
#[command(name = "covering", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cover-time experiment for one of the torus phases.
    Cover(ExperimentArgs),
    /// Vacant sites after Poisson(t) arcs.
    Snapshot {
        #[arg(long)]
        tail: TailFunction,
        #[arg(long)]
        n: u64,
        /// Poissonized time t (expected number of arcs).
        #[arg(long)]
        time: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Covering frequency of the truncated circle process.
    Pi(ExperimentArgs),
    /// Exponent of the missing lattice count on the circle.
    Dimension(ExperimentArgs),
    /// Shepp's series for arc lengths l_k = coef / k.
    SheppSeries {
        #[arg(long)]
        coef: f64,
        #[arg(long, default_value_t = 1_000_000)]
        terms: u64,
    },
    /// Coupon-collector calibration of the statistics pipeline.
    Calibrate(ExperimentArgs),
    /// Karamata ratio and the constant C_f for a tail.
    Karamata {
        #[arg(long)]
        tail: TailFunction,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment config; overrides the other experiment flags.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset (see the README).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    phase: Option<Phase>,
    #[arg(long, default_value = "")]
    tail: String,
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
    #[arg(long, default_value_t = 1_000)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Exit with status 3 if a built-in gate fails.
    #[arg(long)]
    assert: bool,
}

impl ExperimentArgs {
    fn config(&self, default_phase: Phase) -> Result<ExperimentConfig> {
        let config = if let Some(path) = &self.config {
            ExperimentConfig::load(path)?
        } else if let Some(name) = &self.preset {
            preset(name, self.out.clone())?
        } else {
            ExperimentConfig {
                phase: self.phase.unwrap_or(default_phase),
                tail: self.tail.clone(),
                n_list: self.n.clone(),
                replicates: self.replicates,
                base_seed: self.seed,
                alpha_list: self.alpha.clone(),
                output_path: self.out.clone(),
                name: None,
            }
        };
        let fits = match default_phase {
            Phase::Gumbel => config.phase.is_cover_phase(),
            p => config.phase == p,
        };
        if !fits {
            return Err(Error::Incompatible(format!(
                "phase {} cannot be run by this subcommand",
                config.phase
            )));
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(args: &ExperimentArgs, default_phase: Phase) -> Result<bool> {
    let config = args.config(default_phase)?;
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let out = run_experiment(&config, workers)?;
    report(&out);
    let gates = assess(&out.summary);
    for g in &gates {
        println!("{} gate {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail);
    }
    Ok(!args.assert || gates.iter().all(|g| g.passed))
}

fn report(out: &ExperimentOutput) {
    let s = &out.summary;
    println!("phase {} family {} ({} rows)", s.phase, s.family, out.rows.len());
    for g in &s.groups {
        let mut line = format!("n={}", g.n);
        if let Some(a) = g.alpha {
            line += &format!(" alpha={a}");
        }
        line += &format!(" samples={}", g.samples);
        if let Some(m) = g.mean {
            line += &format!(" mean={m:.4}");
        }
        if let Some(sd) = g.std_dev {
            line += &format!(" sd={sd:.4}");
        }
        if let Some(ks) = &g.ks {
            line += &format!(" KS({})={:.4}", ks.reference, ks.d);
        }
        if let Some(p) = g.pi_hat {
            line += &format!(" pi_hat={p:.4}±{:.4}", g.pi_half_width.unwrap_or(0.0));
        }
        println!("{line}");
    }
    println!("wrote {}", out.csv_path.display());
    println!("wrote {}", out.summary_path.display());
    println!("wrote {}", out.manifest_path.display());
}

fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Cover(args) => run(&args, Phase::Gumbel),
        Command::Pi(args) => run(&args, Phase::SheppPi),
        Command::Dimension(args) => run(&args, Phase::Dimension),
        Command::Calibrate(args) => run(&args, Phase::Calibration),
        Command::Snapshot { tail, n, time, seed } => {
            let snap = snapshot_vacant(&tail, n as usize, time, seed)?;
            let p = vacancy_probability_exact(&TailMoments::new(tail, n)?, n, time)?;
            println!("arcs placed: {}", snap.arcs);
            println!("vacant sites: {}", snap.vacant_count);
            println!("expected vacant sites: {:.4}", p * n as f64);
            if let Some(v) = snap.vacant_indices.filter(|v| v.len() <= 50) {
                println!("vacant: {v:?}");
            }
            Ok(true)
        }
        Command::SheppSeries { coef, terms } => {
            let s = shepp_series(|k| coef / k as f64, terms)?;
            println!("partial sum at N={terms}: {:.6e}", s.partial_sums.last().unwrap());
            println!("tail slope: {:.6}", s.tail_slope);
            println!("classification: {:?}", s.class);
            Ok(true)
        }
        Command::Karamata { tail, n } => {
            println!("x f(x) / F_x at x={n}: {:.6}", karamata_ratio(&tail, n));
            if let Some(p) = tail.rv_index() {
                println!("regular-variation index: {p}");
            }
            match cf_estimate(&tail, n) {
                Ok(c) => println!("C_f estimate: {c:.6}"),
                Err(e) => println!("C_f estimate unavailable: {e}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
