use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use minefair::engine::analyze;
use minefair::ensemble::{run_ensemble, std_vs_hashrate_trend, EnsembleConfig};
use minefair::game::{partition_groups, solve_game, GameConfig, Group, UtilityKind};
use minefair::report::{emit_plot_data, parse_dt_list, RunManifest, Series};
use minefair::sim::{simulate_with, SimConfig};
use minefair::theory::{
    fit_mpr_line, naive_mpr, predict_mpr, slope_sweep, write_slope_csv, zero_point_identity_check,
    SlopeComparison,
};
use minefair::{load_scenario, Error, Scenario, TieBreakRule};
use serde_json::json;

const DEFAULT_DT_LIST: &str = "0.01,0.04,0.07";

#[derive(Parser)]
#[command(
    name = "minefair",
    version,
    about = "Mining fairness under the round-based fork model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-miner round initiation, reward share and profit rate, plus a line fit.
    Analyze(Common),
    /// Monte Carlo round simulation checked against the engine.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1_000_000)]
        rounds: u64,
        /// Resolve forks by simulating the race instead of sampling W.
        #[arg(long)]
        race: bool,
    },
    /// Profit rates over random logistic delay draws.
    Ensemble {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        draws: usize,
    },
    /// Two-group propagation-speed game.
    Game {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3.0)]
        fast_d: f64,
        #[arg(long, default_value_t = 6.0)]
        slow_d: f64,
        /// group_mpr, sum_mpr or sum_mp
        #[arg(long, default_value = "group_mpr")]
        utility: String,
    },
    /// Engine profit rates next to the first-order and naive formulas.
    TheoryCompare(Common),
    /// Fitted versus theoretical slope over a list of d/T ratios.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = DEFAULT_DT_LIST)]
        dt_list: String,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// first_seen, random or last_generated
    #[arg(long)]
    tie_break: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

struct Run {
    scenario: Scenario,
    out: PathBuf,
    format: Format,
    manifest: RunManifest,
}

impl Run {
    fn open(common: &Common) -> Result<Self, Error> {
        let mut scenario = load_scenario(&common.scenario)?;
        if let Some(rule) = &common.tie_break {
            scenario = scenario.with_tie_break(rule.parse::<TieBreakRule>()?);
        }
        fs::create_dir_all(&common.out).map_err(|e| io_err(&common.out, e))?;
        let manifest = RunManifest::start(std::env::args().collect(), scenario.fingerprint());
        Ok(Self {
            scenario,
            out: common.out.clone(),
            format: common.format,
            manifest,
        })
    }

    fn seed(&mut self, name: &str, value: u64) {
        self.manifest.seeds.push((name.to_string(), value));
    }

    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<(), Error> {
        let path = self.out.join(name);
        let mut buf = Vec::new();
        body(&mut buf).map_err(|e| io_err(&path, e))?;
        fs::write(&path, buf).map_err(|e| io_err(&path, e))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, stem: &str, value: &impl serde::Serialize) -> Result<(), Error> {
        self.write(&format!("{stem}.json"), |buf| {
            serde_json::to_writer_pretty(&mut *buf, value).map_err(std::io::Error::other)?;
            writeln!(buf)
        })
    }

    fn plot(&mut self, name: &str, series: Series) -> Result<(), Error> {
        emit_plot_data(&series, &self.out.join(name))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(self) -> Result<(), Error> {
        self.manifest.write(&self.out)?;
        Ok(())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Off-diagonal delay for uniform scenarios, the mean off-diagonal delay otherwise.
fn representative_delay(delays: &minefair::SquareMatrix) -> f64 {
    if let Some(d) = delays.common_off_diagonal() {
        return d;
    }
    let n = delays.n();
    let total: f64 = delays.as_slice().iter().sum();
    total / (n * (n - 1)) as f64
}

fn cmd_analyze(common: &Common) -> Result<(), Error> {
    let mut run = Run::open(common)?;
    let seed = common.seed.or(run.scenario.delays().seed()).unwrap_or(0);
    run.seed("delays", seed);
    let analysis = analyze(&run.scenario, Some(seed))?;
    let report = &analysis.report;
    match run.format {
        Format::Csv => run.write("fairness.csv", |b| report.write_csv(b))?,
        Format::Json => run.write_json("fairness", report)?,
    }
    run.plot(
        "mpr_vs_alpha.dat",
        Series::new("alpha mpr", &report.alpha, &report.mpr),
    )?;

    let (r_err, mp_err) = report.conservation_residuals();
    println!(
        "miners={} iterations={} |sum r - 1|={r_err:e} |sum MP|={mp_err:e}",
        report.n(),
        analysis.initiation.iterations
    );
    match fit_mpr_line(report) {
        Ok(fit) => {
            let t = run.scenario.block_interval();
            let d = representative_delay(&analysis.delays);
            let theory = predict_mpr(&report.alpha, d, t);
            let residual = zero_point_identity_check(report);
            run.write("linear_fit.csv", |b| {
                writeln!(
                    b,
                    "slope,intercept,zero_point,correlation,sum_alpha_sq,zero_point_residual"
                )?;
                writeln!(
                    b,
                    "{},{},{},{},{},{}",
                    fit.slope,
                    fit.intercept,
                    fit.zero_point,
                    fit.correlation,
                    theory.zero_point_sum_sq,
                    residual
                )
            })?;
            let row = SlopeComparison {
                d_over_t: d / t,
                slope_theory: theory.slope_2f,
                fit: Some(fit),
                sum_alpha_sq: theory.zero_point_sum_sq,
            };
            run.write("theory_compare.csv", |b| write_slope_csv(&[row], b))?;
            println!(
                "slope={} (2f={}) zero_point={} (sum alpha^2={}) correlation={}",
                fit.slope,
                theory.slope_2f,
                fit.zero_point,
                theory.zero_point_sum_sq,
                fit.correlation
            );
        }
        Err(e) => eprintln!("warning: no line fit: {e}"),
    }
    run.finish()
}

fn cmd_simulate(common: &Common, rounds: u64, race: bool) -> Result<(), Error> {
    let mut run = Run::open(common)?;
    let delay_seed = run.scenario.delays().seed().unwrap_or(0);
    let sim_seed = common.seed.unwrap_or(0);
    run.seed("delays", delay_seed);
    run.seed("rounds", sim_seed);
    let analysis = analyze(&run.scenario, Some(delay_seed))?;
    let config = SimConfig {
        scenario: run.scenario.clone(),
        rounds,
        seed: sim_seed,
        race_mode: race,
    };
    let result = simulate_with(&config, &analysis)?;
    let expected = &analysis.report.r;
    match run.format {
        Format::Csv => run.write("simulation.csv", |b| result.write_csv(expected, b))?,
        Format::Json => run.write_json("simulation", &result)?,
    }
    let summary = format!(
        "rounds={} forks={} fork_rate={} max_dev_se={}",
        result.rounds,
        result.fork_events,
        result.fork_rate(),
        result.max_reward_deviation_se(expected)
    );
    run.write("summary.txt", |b| writeln!(b, "{summary}"))?;
    println!("{summary}");
    run.finish()
}

fn cmd_ensemble(common: &Common, draws: usize) -> Result<(), Error> {
    let mut run = Run::open(common)?;
    let master = common.seed.or(run.scenario.delays().seed()).unwrap_or(0);
    run.seed("master", master);
    let config = EnsembleConfig {
        scenario: run.scenario.clone(),
        n_draws: draws,
        master_seed: master,
    };
    let stats = run_ensemble(&config)?;
    match run.format {
        Format::Csv => run.write("ensemble.csv", |b| stats.write_csv(b))?,
        Format::Json => run.write_json("ensemble", &stats)?,
    }
    run.plot(
        "mean_mpr_vs_alpha.dat",
        Series::new("alpha mean_mpr", &stats.alpha, &stats.mean_mpr),
    )?;
    run.plot(
        "fixed_mpr_vs_alpha.dat",
        Series::new("alpha fixed_mpr", &stats.alpha, &stats.fixed_mpr),
    )?;
    run.plot(
        "std_mpr_vs_alpha.dat",
        Series::new("alpha std_mpr", &stats.alpha, &stats.std_mpr),
    )?;
    let trend = std_vs_hashrate_trend(&stats, &stats.alpha);
    println!(
        "draws={} max|mean-fixed|/range={} spearman(alpha,std)={}",
        stats.n_draws,
        stats.max_mean_deviation_relative_to_range(),
        trend
            .map(|t| t.to_string())
            .unwrap_or_else(|e| format!("n/a ({e})"))
    );
    run.finish()
}

fn cmd_game(common: &Common, fast_d: f64, slow_d: f64, utility: &str) -> Result<(), Error> {
    let mut run = Run::open(common)?;
    let utility: UtilityKind = utility.parse()?;
    let partition = partition_groups(run.scenario.alpha());
    let config = GameConfig {
        fast_d,
        slow_d,
        utility,
    };
    let outcome = solve_game(&run.scenario, &partition, &config)?;
    match run.format {
        Format::Csv => run.write("game.csv", |b| outcome.write_csv(b))?,
        Format::Json => run.write_json(
            "game",
            &json!({
                "large_members": partition.members(Group::Large).collect::<Vec<_>>(),
                "outcome": outcome,
            }),
        )?,
    }
    run.write("game.txt", |b| outcome.write_table(b))?;
    let mut table = Vec::new();
    outcome.write_table(&mut table).expect("write to vec");
    print!("{}", String::from_utf8_lossy(&table));
    println!(
        "large group: {} miners, hashrate {}; equilibria: {}",
        partition.members(Group::Large).count(),
        outcome.hashrate_large,
        outcome
            .equilibria()
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    );
    run.finish()
}

fn cmd_theory_compare(common: &Common) -> Result<(), Error> {
    let mut run = Run::open(common)?;
    let seed = common.seed.or(run.scenario.delays().seed()).unwrap_or(0);
    run.seed("delays", seed);
    let analysis = analyze(&run.scenario, Some(seed))?;
    let report = &analysis.report;
    let t = run.scenario.block_interval();
    let d = representative_delay(&analysis.delays);
    let theory = predict_mpr(&report.alpha, d, t);
    let naive = naive_mpr(&report.alpha, theory.f);
    match run.format {
        Format::Csv => run.write("theory.csv", |b| {
            writeln!(b, "miner_id,alpha,mpr_engine,mpr_theory,mpr_naive")?;
            for i in 0..report.n() {
                writeln!(
                    b,
                    "{},{},{},{},{}",
                    i, report.alpha[i], report.mpr[i], theory.mpr[i], naive[i]
                )?;
            }
            Ok(())
        })?,
        Format::Json => run.write_json(
            "theory",
            &json!({ "engine": report, "theory": theory, "naive_mpr": naive }),
        )?,
    }
    let fit = fit_mpr_line(report).ok();
    let row = SlopeComparison {
        d_over_t: d / t,
        slope_theory: theory.slope_2f,
        fit,
        sum_alpha_sq: theory.zero_point_sum_sq,
    };
    run.write("theory_compare.csv", |b| write_slope_csv(&[row], b))?;
    let worst = report
        .mpr
        .iter()
        .zip(&theory.mpr)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("f={} max|engine-theory|={worst:e}", theory.f);
    run.finish()
}

fn cmd_sweep(common: &Common, dt_list: &str) -> Result<(), Error> {
    let mut run = Run::open(common)?;
    let ratios = parse_dt_list(dt_list)?;
    let rows = slope_sweep(&run.scenario, &ratios)?;
    match run.format {
        Format::Csv => run.write("theory_compare.csv", |b| write_slope_csv(&rows, b))?,
        Format::Json => run.write_json("theory_compare", &rows)?,
    }
    for row in &rows {
        match &row.fit {
            Some(fit) => println!(
                "d/T={} slope_theory={} slope_numeric={} rel_diff={:e} correlation={}",
                row.d_over_t,
                row.slope_theory,
                fit.slope,
                (fit.slope - row.slope_theory).abs() / row.slope_theory,
                fit.correlation
            ),
            None => println!("d/T={} degenerate (no forks)", row.d_over_t),
        }
    }
    run.finish()
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Analyze(common) => cmd_analyze(common),
        Command::Simulate {
            common,
            rounds,
            race,
        } => cmd_simulate(common, *rounds, *race),
        Command::Ensemble { common, draws } => cmd_ensemble(common, *draws),
        Command::Game {
            common,
            fast_d,
            slow_d,
            utility,
        } => cmd_game(common, *fast_d, *slow_d, utility),
        Command::TheoryCompare(common) => cmd_theory_compare(common),
        Command::Sweep { common, dt_list } => cmd_sweep(common, dt_list),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
