//! Command-line entry point: single runs and parameter sweeps.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime
//! invariant violation.

use banmac::engine::SimError;
use banmac::metrics::MetricsReport;
use banmac::model::{ScenarioConfig, SensorGroup, DEFAULT_SIM_SLOTS};
use banmac::sweep::{
    self, parse_load_grid, parse_seeds, write_csv, Scheme, SweepSpec, DEFAULT_LOAD_GRID_SPEC,
};
use banmac::trace::write_trace;
use clap::{Args, Parser, Subcommand};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 1;
const EXIT_INVARIANT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "banmac",
    version,
    about = "Simulator for a hybrid contention/reservation/TDMA body-area-network MAC"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print its metrics
    Run(RunArgs),
    /// Run a (scheme x DAT x DL x load x seed) sweep and write plot-ready CSV
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Preset sensor group: group1 | group2 | group3
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
    /// Scenario file (TOML) instead of a preset
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Nominal DAT block length in slots
    #[arg(long, default_value_t = 23)]
    dat: u32,
    /// Message data length DL in slots
    #[arg(long, default_value_t = 8)]
    dl: u32,
    /// Per-station per-slot arrival probability
    #[arg(long, default_value_t = 0.01)]
    load: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// MAC scheme: hybrid | aloha | tdma
    #[arg(long, default_value = "hybrid")]
    scheme: String,
    /// Slots to exclude from rate metrics at the start of the run
    #[arg(long)]
    warmup: Option<u64>,
    /// Write the full slot/message trace to this file (hybrid only)
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Accept DAT/DL values outside the standard sweep sets
    #[arg(long)]
    allow_any_dat: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Preset sensor group: group1 | group2 | group3
    #[arg(long)]
    preset: String,
    /// MAC schemes: hybrid | aloha | tdma | all
    #[arg(long, default_value = "hybrid")]
    scheme: String,
    /// DAT values, comma-separated (default: the full standard sweep)
    #[arg(long)]
    dat: Option<String>,
    /// Data lengths, comma-separated (default: 8,4)
    #[arg(long)]
    dl: Option<String>,
    /// Load grid: geom:MIN:MAX:N | lin:MIN:MAX:N | explicit list
    #[arg(long, default_value = DEFAULT_LOAD_GRID_SPEC)]
    loads: String,
    /// Seeds: a count N (seeds 0..N) or a comma-separated list
    #[arg(long, default_value = "5")]
    seeds: String,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Slots to exclude from rate metrics at the start of each run
    #[arg(long, default_value_t = 0)]
    warmup: u64,
    /// Worker threads (default: one per CPU)
    #[arg(long)]
    workers: Option<usize>,
    /// Accept DAT/DL values outside the standard sweep sets
    #[arg(long)]
    allow_any_dat: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is a
            // usage error.
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_single(args),
        Command::Sweep(args) => run_sweep(args),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn run_single(args: RunArgs) -> Result<ExitCode, String> {
    let mut scenario = load_scenario(&args)?;
    if let Some(warmup) = args.warmup {
        scenario.warmup_slots = warmup;
        scenario.validate().map_err(|e| e.to_string())?;
    }
    let scheme: Scheme = args.scheme.parse()?;
    if args.trace.is_some() && scheme != Scheme::Hybrid {
        return Err("--trace is only available for the hybrid scheme".into());
    }

    let (report, trace) = match sweep::execute(scheme, &scenario) {
        Ok(ok) => ok,
        Err(SimError::Config(e)) => return Err(e.to_string()),
        Err(e @ SimError::Invariant { .. }) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_INVARIANT));
        }
    };

    if let Some(path) = &args.trace {
        let file = std::fs::File::create(path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let mut out = BufWriter::new(file);
        write_trace(trace.as_ref().expect("hybrid runs carry a trace"), &mut out)
            .and_then(|_| out.flush())
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }

    print_report(scheme, &scenario, &report);
    Ok(ExitCode::SUCCESS)
}

fn load_scenario(args: &RunArgs) -> Result<ScenarioConfig, String> {
    match (&args.preset, &args.scenario) {
        (Some(_), Some(_)) => unreachable!("clap rejects the conflict"),
        (None, None) => Err("pass either --preset or --scenario".into()),
        (None, Some(path)) => ScenarioConfig::load(path).map_err(|e| e.to_string()),
        (Some(preset), None) => {
            let group: SensorGroup = preset.parse()?;
            let build = if args.allow_any_dat {
                banmac::model::preset_scenario_relaxed
            } else {
                banmac::model::preset_scenario
            };
            build(group, args.dat, args.dl, args.load, args.seed).map_err(|e| e.to_string())
        }
    }
}

fn print_report(scheme: Scheme, scenario: &ScenarioConfig, report: &MetricsReport) {
    let row = sweep::SweepRow {
        scheme,
        group: scenario.sensors.first().map(|s| s.group).unwrap_or(SensorGroup::Group1),
        dat_nominal: scenario.frame.dat_nominal,
        data_length: scenario.frame.data_length,
        arrival_prob: scenario.arrival_prob_per_slot,
        seed: scenario.seed,
        outcome: Ok(*report),
    };
    let mut csv = Vec::new();
    write_csv(std::slice::from_ref(&row), &mut csv).expect("writing to memory");
    print!("{}", String::from_utf8(csv).expect("csv is utf-8"));

    let c = &report.counters;
    println!();
    println!("throughput_S    {:.6}", report.throughput_s);
    println!("offered_load_G  {:.6}", report.offered_load_g);
    match report.mean_delay_slots {
        Some(d) => println!(
            "mean_delay      {:.2} slots ({:.5} s)",
            d,
            report.mean_delay_seconds.unwrap_or_default()
        ),
        None => println!("mean_delay      n/a (no completed random-access messages)"),
    }
    println!("arrivals        {} ({} discarded)", c.arrivals, c.arrivals_discarded);
    println!("completed       {} ({} in flight)", c.messages_completed, c.messages_in_flight);
    println!("rap_successes   {}", c.rap_successes);
    println!("collisions      {}", c.collisions);
    println!("dap_delivered   {}", c.dap_delivered);
    println!("pap_delivered   {}", c.pap_delivered);
    if c.payload_lost > 0 {
        println!("payload_lost    {}", c.payload_lost);
    }
}

fn run_sweep(args: SweepArgs) -> Result<ExitCode, String> {
    let group: SensorGroup = args.preset.parse()?;
    let schemes = if args.scheme.eq_ignore_ascii_case("all") {
        Scheme::ALL.to_vec()
    } else {
        vec![args.scheme.parse::<Scheme>()?]
    };
    let dat_values = match &args.dat {
        None => banmac::model::DAT_SWEEP.to_vec(),
        Some(list) => parse_int_list(list, "dat")?,
    };
    let data_lengths = match &args.dl {
        None => banmac::model::DATA_LENGTH_SWEEP.to_vec(),
        Some(list) => parse_int_list(list, "dl")?,
    };
    let spec = SweepSpec {
        group,
        schemes,
        dat_values,
        data_lengths,
        loads: parse_load_grid(&args.loads).map_err(|e| e.to_string())?,
        seeds: parse_seeds(&args.seeds).map_err(|e| e.to_string())?,
        sim_slots: DEFAULT_SIM_SLOTS,
        warmup_slots: args.warmup,
        allow_any_dat: args.allow_any_dat,
    };

    let rows = sweep::run_sweep(&spec, args.workers).map_err(|e| e.to_string())?;

    let file = std::fs::File::create(&args.out)
        .map_err(|e| format!("{}: {e}", args.out.display()))?;
    let mut out = BufWriter::new(file);
    write_csv(&rows, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| format!("{}: {e}", args.out.display()))?;

    let failed: Vec<&sweep::SweepRow> = rows.iter().filter(|r| r.outcome.is_err()).collect();
    println!("wrote {} rows to {} ({} error rows)", rows.len(), args.out.display(), failed.len());
    // An invariant violation in any cell is a simulator bug, not a
    // configuration problem; surface it through the exit code.
    let invariant_hit = failed
        .iter()
        .any(|r| r.outcome.as_ref().err().is_some_and(|m| m.starts_with("invariant violation")));
    if invariant_hit {
        eprintln!("error: at least one cell aborted on an invariant violation; see the error rows");
        return Ok(ExitCode::from(EXIT_INVARIANT));
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_int_list(list: &str, what: &str) -> Result<Vec<u32>, String> {
    list.split(',')
        .map(|v| v.trim().parse::<u32>().map_err(|_| format!("bad {what} value '{v}'")))
        .collect()
}
