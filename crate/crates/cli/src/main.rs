//! `wcs`: simulate cache-aided delivery over Wyner's circular networks.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a requested
//! `--assert` fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use wcs_core::harness::{
    db_to_linear, emit_plot_script, export_csv, export_json, run_experiment, sweep_snr,
    BackendSpec, DemandPolicy, ExperimentReport, ExperimentSpec, PlotKind, SchemeSelector,
};
use wcs_core::model::random_library;
use wcs_core::model::{
    CachePlacement, DemandVector, LibraryPolicy, NetworkConfig, PartStore, Variant, DEFAULT_EPSILON,
};
use wcs_core::schemes::placement::{
    cache_placement_full, cache_placement_round_robin, cache_placement_soft, full_store,
    round_robin_store, soft_store,
};
use wcs_core::schemes::schedule::{
    delivery_schedule_full, delivery_schedule_round_robin, delivery_schedule_soft, verify_schedule,
};
use wcs_core::tradeoff::curve;
use wcs_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "wcs",
    version,
    about = "Cache-aided interference mitigation on Wyner's circular networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a batch of end-to-end trials and print the report as JSON.
    Simulate(SimArgs),
    /// Repeat a simulation over a list of SNR values.
    Sweep {
        #[command(flatten)]
        sim: SimArgs,
        /// Comma-separated, strictly increasing SNR values in dB.
        #[arg(long, default_value = "20,40,60,80")]
        snr_list: String,
        /// Also write a matplotlib script plotting the CSV given by --out.
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },
    /// Export the achievable and upper-bound MG curves as CSV.
    Tradeoff {
        #[arg(long, value_enum, default_value_t = Model::Soft)]
        model: Model,
        /// Evenly spaced samples; corner points are always added.
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Largest cache ratio mu/D.
        #[arg(long, default_value_t = 2.0)]
        x_max: f64,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a matplotlib script plotting the CSV.
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },
    /// Check the generated schedule against its placement and print violations.
    VerifySchedule {
        #[arg(long, value_enum, default_value_t = Model::Soft)]
        model: Model,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        d: usize,
        /// distinct | equal | worst | random | explicit:3,1,4,...
        #[arg(long, default_value = "distinct")]
        demands: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        round_robin: bool,
        #[arg(long)]
        allow_small_library: bool,
        /// Write the schedule as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Soft,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Ideal,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AssertArg {
    InteriorSuccess,
    AllSuccess,
}

#[derive(Args, Debug, Clone)]
struct SimArgs {
    #[arg(long, value_enum, default_value_t = Model::Soft)]
    model: Model,
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Library size D.
    #[arg(long, default_value_t = 6)]
    d: usize,
    /// Cross gain, or one gain per receiver (soft model) as a comma list.
    #[arg(long, default_value = "1.0")]
    alpha: String,
    #[arg(long, default_value_t = 40.0)]
    snr_db: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = BackendArg::Ideal)]
    backend: BackendArg,
    /// Block length of one run of the base scheme (mc backend).
    #[arg(long, default_value_t = 288)]
    n: usize,
    /// Bits per submessage.
    #[arg(long, default_value_t = 8)]
    bits: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// random | distinct | equal | worst | exhaustive | explicit:3,1,4,...
    #[arg(long, default_value = "random")]
    demands: String,
    #[arg(long)]
    round_robin: bool,
    /// Extra bits per file cached at every receiver.
    #[arg(long)]
    prop1_delta_bits: Option<usize>,
    /// Fraction of time spent on the cache-free baseline.
    #[arg(long)]
    timeshare_lambda: Option<f64>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    assert: Option<AssertArg>,
    /// Permit libraries with fewer than six files.
    #[arg(long)]
    allow_small_library: bool,
}

enum Failure {
    Invalid(Error),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e)
    }
}

fn parse_demands(text: &str, k: usize, files: usize) -> Result<DemandPolicy, Error> {
    Ok(match text {
        "random" => DemandPolicy::UniformRandom,
        "distinct" => DemandPolicy::AllDistinct,
        "equal" | "worst" => DemandPolicy::AllEqual,
        "exhaustive" => DemandPolicy::Exhaustive,
        other => match other.strip_prefix("explicit:") {
            Some(list) => {
                let d = DemandVector::parse(list, files)?;
                d.check_len(k)?;
                DemandPolicy::Explicit(d)
            }
            None => return Err(Error::Parse(format!("unknown demand policy {other:?}"))),
        },
    })
}

fn build_config(a: &SimArgs) -> Result<NetworkConfig, Error> {
    let gains = a
        .alpha
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("alpha {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let power = db_to_linear(a.snr_db);
    let cfg = match (a.model, gains.as_slice()) {
        (Model::Soft, [g]) => NetworkConfig::soft_uniform(a.k, *g, power, a.epsilon),
        (Model::Soft, list) => NetworkConfig {
            k: a.k,
            ..NetworkConfig::soft(list.to_vec(), power, a.epsilon)
        },
        (Model::Full, [g]) => NetworkConfig::full(a.k, *g, power, a.epsilon),
        (Model::Full, _) => {
            return Err(Error::BadParameter(
                "the full model takes a single cross gain".into(),
            ));
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn build_spec(a: &SimArgs) -> Result<ExperimentSpec, Error> {
    let config = build_config(a)?;
    let mut spec = ExperimentSpec::new(config, a.d, a.bits);
    spec.scheme =
        match (a.round_robin, a.prop1_delta_bits, a.timeshare_lambda) {
            (false, None, None) => SchemeSelector::Base,
            (true, None, None) => SchemeSelector::RoundRobin,
            (false, Some(extra_bits), None) => SchemeSelector::Prop1 { extra_bits },
            (false, None, Some(lambda)) => SchemeSelector::TimeShare { lambda },
            _ => return Err(Error::BadParameter(
                "--round-robin, --prop1-delta-bits and --timeshare-lambda are mutually exclusive"
                    .into(),
            )),
        };
    spec.backend = match a.backend {
        BackendArg::Ideal => BackendSpec::Ideal,
        BackendArg::Mc => BackendSpec::MonteCarlo { n: a.n },
    };
    spec.trials = a.trials;
    spec.master_seed = a.seed;
    spec.demands = parse_demands(&a.demands, a.k, a.d)?;
    spec.allow_small_library = a.allow_small_library;
    spec.workers = workers_from_env()?;
    spec.validate()?;
    Ok(spec)
}

fn workers_from_env() -> Result<Option<usize>, Error> {
    match std::env::var("WCS_WORKERS") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|w| *w > 0)
            .map(Some)
            .ok_or_else(|| Error::Parse(format!("WCS_WORKERS={v:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

fn print_effective(spec: &ExperimentSpec, args: &SimArgs) {
    let block = json!({
        "effective_config": {
            "spec": spec,
            "snr_db": args.snr_db,
            "payload_bits": spec.payload_bits(),
            "workers": spec.workers,
        }
    });
    eprintln!(
        "{}",
        serde_json::to_string_pretty(&block).expect("config serializes")
    );
}

fn check_assert(report: &ExperimentReport, assert: Option<AssertArg>) -> Result<(), Failure> {
    let ok = match assert {
        None => return Ok(()),
        Some(AssertArg::InteriorSuccess) => report.guaranteed_success() == 1.0,
        Some(AssertArg::AllSuccess) => report.success_rate.iter().all(|s| *s == 1.0),
    };
    if ok {
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "assertion {:?} failed: per-receiver success {:?}",
            assert.expect("checked above"),
            report.success_rate
        )))
    }
}

fn simulate(args: &SimArgs) -> Result<(), Failure> {
    let spec = build_spec(args)?;
    print_effective(&spec, args);
    let report = run_experiment(&spec)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report.to_json()).expect("report serializes")
    );
    if let Some(out) = &args.out {
        export_csv(&report, out)?;
        export_json(&report, &out.with_extension("json"))?;
    }
    check_assert(&report, args.assert)
}

fn sweep(args: &SimArgs, snr_list: &str, plot: Option<&PathBuf>) -> Result<(), Failure> {
    let spec = build_spec(args)?;
    print_effective(&spec, args);
    let snr: Vec<f64> = snr_list
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("SNR {t:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let table = sweep_snr(&spec, &snr)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&table).expect("table serializes")
    );
    if let Some(out) = &args.out {
        export_csv(&table, out)?;
        export_json(&table, &out.with_extension("json"))?;
        if let Some(script) = plot {
            emit_plot_script(out, script, PlotKind::Sweep)?;
        }
    }
    if args.assert.is_some() && table.rows.iter().any(|r| r.success < 1.0) {
        return Err(Failure::Assertion(
            "some sweep point has failing guaranteed receivers".into(),
        ));
    }
    Ok(())
}

fn tradeoff(
    model: Model,
    points: usize,
    x_max: f64,
    out: Option<&PathBuf>,
    plot: Option<&PathBuf>,
) -> Result<(), Failure> {
    let variant = match model {
        Model::Soft => Variant::SoftHandoff,
        Model::Full => Variant::Full,
    };
    let c = curve(variant, points, x_max)?;
    match out {
        Some(path) => {
            export_csv(&c, path)?;
            if let Some(script) = plot {
                emit_plot_script(path, script, PlotKind::Tradeoff)?;
            }
        }
        None => c.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn verify(
    model: Model,
    k: usize,
    d: usize,
    demands: &str,
    seed: u64,
    round_robin: bool,
    allow_small: bool,
    out: Option<&PathBuf>,
) -> Result<(), Failure> {
    LibraryPolicy { allow_small }.check(d)?;
    let demands = match parse_demands(demands, k, d)? {
        DemandPolicy::AllDistinct => DemandVector::cyclic(k, d),
        DemandPolicy::AllEqual => DemandVector::all_equal(k),
        DemandPolicy::Explicit(v) => v,
        DemandPolicy::UniformRandom => {
            DemandVector::random(k, d, &mut wcs_core::model::seed::rng(seed))
        }
        DemandPolicy::Exhaustive => {
            return Err(
                Error::BadParameter("verify-schedule takes one demand vector".into()).into(),
            )
        }
    };
    // placement contents are irrelevant to the check; only keys matter
    let (sched, placement): (_, CachePlacement) = match (model, round_robin) {
        (Model::Soft, false) => {
            let store: PartStore = soft_store(&random_library(d, 40, seed)?, 0)?;
            (
                delivery_schedule_soft(k, &demands)?,
                cache_placement_soft(k, d, &store)?,
            )
        }
        (Model::Soft, true) => {
            let store = round_robin_store(&random_library(d, 40 * (k.max(3) - 2), seed)?, k)?;
            (
                delivery_schedule_round_robin(k, &demands)?,
                cache_placement_round_robin(k, d, &store)?,
            )
        }
        (Model::Full, false) => {
            let store = full_store(&random_library(d, 16, seed)?, 0)?;
            (
                delivery_schedule_full(k, &demands)?,
                cache_placement_full(k, d, &store)?,
            )
        }
        (Model::Full, true) => {
            return Err(Error::ConfigMismatch(
                "round-robin applies to the soft-handoff model".into(),
            )
            .into())
        }
    };
    let violations = verify_schedule(&sched, &placement, &demands);
    if let Some(path) = out {
        std::fs::write(
            path,
            serde_json::to_string_pretty(&sched.to_json()).expect("schedule serializes"),
        )
        .map_err(Error::from)?;
    }
    let listing: Vec<String> = violations
        .iter()
        .map(|v| format!("{}: {v:?}", v.kind()))
        .collect();
    println!(
        "{}",
        serde_json::to_string_pretty(
            &json!({ "ok": violations.is_empty(), "violations": listing })
        )
        .expect("json")
    );
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "{} schedule violations",
            violations.len()
        )))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep {
            sim,
            snr_list,
            plot_script,
        } => sweep(sim, snr_list, plot_script.as_ref()),
        Command::Tradeoff {
            model,
            points,
            x_max,
            out,
            plot_script,
        } => tradeoff(*model, *points, *x_max, out.as_ref(), plot_script.as_ref()),
        Command::VerifySchedule {
            model,
            k,
            d,
            demands,
            seed,
            round_robin,
            allow_small_library,
            out,
        } => verify(
            *model,
            *k,
            *d,
            demands,
            *seed,
            *round_robin,
            *allow_small_library,
            out.as_ref(),
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {} ({})", e, e.kind());
            ExitCode::from(1)
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("failure: {msg}");
            ExitCode::from(2)
        }
    }
}
