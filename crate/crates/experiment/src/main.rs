use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irs_core::channel::{draw_realization, seeded_rng, ScenarioConfig};
use irs_core::oracle::exhaustive_oracle;
use irs_core::schemes::{run_proposed, run_scheme, SchemeKind};
use irs_core::system::SystemParams;
use irs_experiment::{plot_svg, run_sweep, write_csv, ExperimentConfig, DESK_SCALE_ELEMENTS};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(name = "irs-sim", version, about = "Sum-rate experiments for self-sustainable IRS-assisted MISO downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Allow more than 64 IRS elements.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run schemes on one channel draw and print the results.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Scheme name, or `all`.
        #[arg(long, default_value = "all")]
        scheme: String,
    },
    /// Run the configured sweep and write the CSV table.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `sweep.trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated scheme names overriding `sweep.schemes`.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compare the proposed scheme with exhaustive search on single-user draws.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Draw a sweep CSV as an SVG line chart.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| e.to_string())?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.scenario.seed = seed;
        cfg.sweep.base.seed = seed;
    }
    Ok(cfg)
}

fn check_scale(elements: usize, full_scale: bool) -> Result<(), String> {
    if elements > DESK_SCALE_ELEMENTS {
        if !full_scale {
            return Err(format!(
                "N = {elements} exceeds the desk-scale limit of {DESK_SCALE_ELEMENTS}; set irs.elements or pass --full-scale"
            ));
        }
        eprintln!("warning: N = {elements} runs at full scale and can take hours");
    }
    Ok(())
}

fn simulate(cfg: &ScenarioConfig, scheme: &str, params: &irs_core::schemes::SchemeParams) -> Result<(), String> {
    let kinds: Vec<SchemeKind> = if scheme == "all" {
        SchemeKind::ALL.to_vec()
    } else {
        vec![SchemeKind::parse(scheme).ok_or_else(|| format!("unknown scheme `{scheme}`"))?]
    };
    let sys = SystemParams::from_config(cfg);
    let (_, ch) = draw_realization::<f64, _>(cfg, &mut seeded_rng(cfg.seed, 0)).map_err(|e| e.to_string())?;
    println!("scheme,sum_rate,feasible,harvesting,outer_rounds,seconds");
    for kind in kinds {
        let r = run_scheme(kind, &ch, &sys, params).map_err(|e| format!("{}: {e}", kind.name()))?;
        let harvesting = r.schedule.as_ref().map_or("-".to_string(), |s| s.harvesting_count().to_string());
        println!(
            "{},{:.6},{},{},{},{:.3}",
            kind.name(),
            r.sum_rate,
            r.is_feasible(sys.p_max),
            harvesting,
            r.outer_trace.len() - 1,
            r.wall_time
        );
    }
    Ok(())
}

fn oracle_check(cfg: &ScenarioConfig, trials: usize, params: &irs_core::schemes::SchemeParams) -> Result<bool, String> {
    let sys = SystemParams::from_config(cfg);
    let mut hits = 0;
    println!("trial,oracle_rate,proposed_rate,gap");
    for t in 0..trials {
        let (_, ch) = draw_realization::<f64, _>(cfg, &mut seeded_rng(cfg.seed, t as u64)).map_err(|e| e.to_string())?;
        let oracle = exhaustive_oracle(&ch, &sys, 0).map_err(|e| e.to_string())?;
        let proposed = run_proposed(&ch, &sys, params).map_err(|e| e.to_string())?;
        let gap = oracle.best_rate - proposed.sum_rate;
        if gap <= 1e-3 {
            hits += 1;
        }
        println!("{t},{:.6},{:.6},{:.3e}", oracle.best_rate, proposed.sum_rate, gap);
    }
    println!("# within 1e-3 of the oracle: {hits}/{trials}");
    Ok(hits * 10 >= trials * 9)
}

fn run(cli: Cli) -> Result<(), (u8, String)> {
    let config_err = |e: String| (EXIT_CONFIG, e);
    let runtime_err = |e: String| (EXIT_RUNTIME, e);
    match cli.command {
        Command::Simulate { common, scheme } => {
            let cfg = load(&common).map_err(config_err)?;
            check_scale(cfg.scenario.elements, common.full_scale).map_err(config_err)?;
            if scheme != "all" && SchemeKind::parse(&scheme).is_none() {
                return Err(config_err(format!("unknown scheme `{scheme}`")));
            }
            simulate(&cfg.scenario, &scheme, &cfg.schemes).map_err(runtime_err)
        }
        Command::Sweep { common, out, trials, scheme, jobs } => {
            let cfg = load(&common).map_err(config_err)?;
            let mut spec = cfg.sweep.clone();
            if let Some(t) = trials {
                spec.trials = t;
            }
            if let Some(list) = scheme {
                spec.schemes = list
                    .split(',')
                    .map(|s| SchemeKind::parse(s.trim()).ok_or_else(|| format!("unknown scheme `{s}`")))
                    .collect::<Result<_, _>>()
                    .map_err(config_err)?;
            }
            spec.validate().map_err(|e| config_err(e.to_string()))?;
            check_scale(spec.max_elements(), common.full_scale).map_err(config_err)?;
            let path = out
                .or_else(|| spec.output_path.clone())
                .ok_or_else(|| config_err("no output path: pass --out or set sweep.output".into()))?;
            let table = run_sweep(&spec, &cfg.schemes, jobs);
            for f in &table.failures {
                eprintln!(
                    "trial failure: value {} scheme {} trial {} seed {} stream {}: {}",
                    f.value,
                    f.scheme.name(),
                    f.trial,
                    f.seed,
                    f.stream,
                    f.status
                );
            }
            write_csv(&table, &path).map_err(|e| runtime_err(e.to_string()))?;
            println!("wrote {} rows to {}", table.rows.len(), path.display());
            Ok(())
        }
        Command::OracleCheck { common, trials } => {
            let cfg = load(&common).map_err(config_err)?;
            if cfg.scenario.users != 1 {
                return Err(config_err(format!("oracle-check needs users.count = 1, got {}", cfg.scenario.users)));
            }
            let ok = oracle_check(&cfg.scenario, trials, &cfg.schemes).map_err(runtime_err)?;
            if ok {
                Ok(())
            } else {
                Err(runtime_err("fewer than 90% of trials matched the oracle".into()))
            }
        }
        Command::Plot { csv, out } => plot_svg(&csv, &out).map_err(|e| runtime_err(e.to_string())),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
