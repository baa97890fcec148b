//! Parameter sweeps: cross-product execution over (scheme, DAT, DL, load,
//! seed) grids and byte-stable CSV emission.
//!
//! Cells are pure functions of their scenario, so they run concurrently on a
//! worker pool; rows are then sorted into canonical order (scheme, group,
//! dat, dl, load, seed) before writing, which makes repeated invocations
//! produce byte-identical files. Scheme order is hybrid, aloha, tdma. A cell
//! that fails to configure or simulate becomes an error-marker row (metrics
//! blank, message in the trailing column) and the sweep carries on.

use crate::baselines::{run_pure_slotted_aloha, run_pure_tdma};
use crate::engine::{self, SimError};
use crate::metrics::MetricsReport;
use crate::model::{
    preset_scenario, preset_scenario_relaxed, ConfigError, ScenarioConfig, SensorGroup,
    DAT_SWEEP, DEFAULT_SIM_SLOTS,
};
use crate::trace::{validate_trace, SimTrace};
use rayon::prelude::*;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

/// Which MAC scheme a cell runs. Declaration order is the canonical CSV
/// sort order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Hybrid,
    Aloha,
    Tdma,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Hybrid, Scheme::Aloha, Scheme::Tdma];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            Scheme::Hybrid => "hybrid",
            Scheme::Aloha => "aloha",
            Scheme::Tdma => "tdma",
        };
        f.write_str(label)
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hybrid" => Ok(Scheme::Hybrid),
            "aloha" => Ok(Scheme::Aloha),
            "tdma" => Ok(Scheme::Tdma),
            other => Err(format!("unknown scheme '{other}' (expected hybrid|aloha|tdma)")),
        }
    }
}

/// Runs one scenario under the given scheme. Hybrid runs are additionally
/// audited against the structural trace validator before their metrics are
/// trusted, and hand back the trace for optional dumping.
pub fn execute(
    scheme: Scheme,
    scenario: &ScenarioConfig,
) -> Result<(MetricsReport, Option<SimTrace>), SimError> {
    match scheme {
        Scheme::Hybrid => {
            let (report, trace) = engine::run(scenario)?;
            validate_trace(&trace, scenario).map_err(|v| SimError::Invariant {
                slot: v.slot.unwrap_or(0),
                message: v.message,
            })?;
            Ok((report, Some(trace)))
        }
        Scheme::Aloha => run_pure_slotted_aloha(scenario).map(|r| (r, None)),
        Scheme::Tdma => run_pure_tdma(scenario).map(|r| (r, None)),
    }
}

// --- sweep specification ------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub group: SensorGroup,
    pub schemes: Vec<Scheme>,
    pub dat_values: Vec<u32>,
    pub data_lengths: Vec<u32>,
    pub loads: Vec<f64>,
    pub seeds: Vec<u64>,
    pub sim_slots: u64,
    pub warmup_slots: u64,
    /// Permit DAT/DL values outside the standard sweep sets.
    pub allow_any_dat: bool,
}

impl SweepSpec {
    fn validate(&self) -> Result<(), ConfigError> {
        for (name, empty) in [
            ("scheme", self.schemes.is_empty()),
            ("dat", self.dat_values.is_empty()),
            ("data_length", self.data_lengths.is_empty()),
            ("load", self.loads.is_empty()),
            ("seed", self.seeds.is_empty()),
        ] {
            if empty {
                return Err(ConfigError::Grid(format!("empty {name} grid")));
            }
        }
        if !self.allow_any_dat {
            if let Some(&dat) = self.dat_values.iter().find(|d| !DAT_SWEEP.contains(d)) {
                return Err(ConfigError::OffSweepDat { dat });
            }
        }
        for &load in &self.loads {
            if !(0.0..=1.0).contains(&load) || !load.is_finite() {
                return Err(ConfigError::BadProbability {
                    field: "arrival_prob_per_slot",
                    value: load,
                });
            }
        }
        Ok(())
    }
}

/// One output row: the cell coordinates plus either its metrics or the
/// error that kept it from producing any.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub group: SensorGroup,
    pub dat_nominal: u32,
    pub data_length: u32,
    pub arrival_prob: f64,
    pub seed: u64,
    pub outcome: Result<MetricsReport, String>,
}

impl SweepRow {
    fn sort_key(&self) -> (Scheme, SensorGroup, u32, u32, f64, u64) {
        (self.scheme, self.group, self.dat_nominal, self.data_length, self.arrival_prob, self.seed)
    }
}

/// Executes the full cross product and returns rows in canonical order.
pub fn run_sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<Vec<SweepRow>, ConfigError> {
    spec.validate()?;
    let mut cells = Vec::new();
    for &scheme in &spec.schemes {
        for &dat in &spec.dat_values {
            for &dl in &spec.data_lengths {
                for &load in &spec.loads {
                    for &seed in &spec.seeds {
                        cells.push((scheme, dat, dl, load, seed));
                    }
                }
            }
        }
    }

    let run_all = || -> Vec<SweepRow> {
        cells
            .par_iter()
            .map(|&(scheme, dat, dl, load, seed)| run_cell(spec, scheme, dat, dl, load, seed))
            .collect()
    };
    let mut rows = match workers {
        None => run_all(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ConfigError::Grid(format!("worker pool: {e}")))?
            .install(run_all),
    };

    rows.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).expect("grid values are ordered"));
    Ok(rows)
}

fn run_cell(
    spec: &SweepSpec,
    scheme: Scheme,
    dat: u32,
    dl: u32,
    load: f64,
    seed: u64,
) -> SweepRow {
    let outcome = build_scenario(spec, dat, dl, load, seed)
        .map_err(SimError::from)
        .and_then(|scenario| execute(scheme, &scenario).map(|(report, _)| report))
        .map_err(|e| e.to_string());
    SweepRow { scheme, group: spec.group, dat_nominal: dat, data_length: dl, arrival_prob: load, seed, outcome }
}

fn build_scenario(
    spec: &SweepSpec,
    dat: u32,
    dl: u32,
    load: f64,
    seed: u64,
) -> Result<ScenarioConfig, ConfigError> {
    let mut scenario = if spec.allow_any_dat {
        preset_scenario_relaxed(spec.group, dat, dl, load, seed)?
    } else {
        preset_scenario(spec.group, dat, dl, load, seed)?
    };
    scenario.sim_slots = spec.sim_slots;
    scenario.warmup_slots = spec.warmup_slots;
    scenario.validate()?;
    Ok(scenario)
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            group: SensorGroup::Group1,
            schemes: vec![Scheme::Hybrid],
            dat_values: DAT_SWEEP.to_vec(),
            data_lengths: vec![8, 4],
            loads: default_load_grid(),
            seeds: (0..5).collect(),
            sim_slots: DEFAULT_SIM_SLOTS,
            warmup_slots: 0,
            allow_any_dat: false,
        }
    }
}

// --- load and seed grids --------------------------------------------------------

pub const DEFAULT_LOAD_GRID_SPEC: &str = "geom:0.001:1.0:20";

/// The default sweep load grid: 20 geometrically spaced arrival
/// probabilities from light load (0.001) to saturation (1.0).
pub fn default_load_grid() -> Vec<f64> {
    parse_load_grid(DEFAULT_LOAD_GRID_SPEC).expect("default grid spec parses")
}

/// Parses a load grid: `geom:MIN:MAX:N`, `lin:MIN:MAX:N`, or an explicit
/// comma-separated list of probabilities. Endpoints of generated grids are
/// exact.
pub fn parse_load_grid(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |msg: String| ConfigError::Grid(msg);
    if let Some(rest) = spec.strip_prefix("geom:").or_else(|| spec.strip_prefix("lin:")) {
        let geometric = spec.starts_with("geom:");
        let parts: Vec<&str> = rest.split(':').collect();
        let [min, max, n] = parts.as_slice() else {
            return Err(bad(format!("expected MIN:MAX:N after the grid kind in '{spec}'")));
        };
        let min: f64 = min.parse().map_err(|_| bad(format!("bad grid minimum '{min}'")))?;
        let max: f64 = max.parse().map_err(|_| bad(format!("bad grid maximum '{max}'")))?;
        let n: usize = n.parse().map_err(|_| bad(format!("bad grid size '{n}'")))?;
        if n == 0 {
            return Err(bad("grid size must be at least 1".into()));
        }
        if !(min.is_finite() && max.is_finite()) || min > max || (geometric && min <= 0.0) {
            return Err(bad(format!("unusable grid bounds {min}..{max}")));
        }
        if n == 1 {
            return Ok(vec![min]);
        }
        let mut grid: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if geometric {
                    min * (max / min).powf(t)
                } else {
                    min + (max - min) * t
                }
            })
            .collect();
        grid[0] = min;
        grid[n - 1] = max;
        Ok(grid)
    } else {
        let grid: Result<Vec<f64>, _> = spec.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let grid = grid.map_err(|_| bad(format!("bad load list '{spec}'")))?;
        if grid.is_empty() {
            return Err(bad("empty load list".into()));
        }
        Ok(grid)
    }
}

/// Parses the seed argument: a bare count `N` expands to seeds `0..N`, a
/// comma-separated list is taken verbatim.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>, ConfigError> {
    let bad = |msg: String| ConfigError::Grid(msg);
    if spec.contains(',') {
        spec.split(',')
            .map(|v| v.trim().parse::<u64>().map_err(|_| bad(format!("bad seed '{v}'"))))
            .collect()
    } else {
        let n: u64 =
            spec.trim().parse().map_err(|_| bad(format!("bad seed count '{spec}'")))?;
        Ok((0..n).collect())
    }
}

// --- CSV ------------------------------------------------------------------------

pub const CSV_HEADER: &str = "scheme,group,dat_nominal,data_length,arrival_prob,seed,\
                              offered_load_G,throughput_S,mean_delay_slots,mean_delay_s,\
                              arrivals,arrivals_discarded,rap_successes,collisions,\
                              dap_delivered,pap_delivered,payload_lost,messages_completed,\
                              messages_in_flight,messages_dropped,error";

/// Writes rows as CSV: header, full-precision floats, empty fields for
/// absent delays, LF endings, error message (if any) in the last column.
pub fn write_csv(rows: &[SweepRow], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", csv_line(row))?;
    }
    Ok(())
}

fn csv_line(row: &SweepRow) -> String {
    let coords = format!(
        "{},{},{},{},{},{}",
        row.scheme, row.group, row.dat_nominal, row.data_length, row.arrival_prob, row.seed
    );
    match &row.outcome {
        Ok(r) => {
            let c = &r.counters;
            format!(
                "{coords},{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
                r.offered_load_g,
                r.throughput_s,
                opt(r.mean_delay_slots),
                opt(r.mean_delay_seconds),
                c.arrivals,
                c.arrivals_discarded,
                c.rap_successes,
                c.collisions,
                c.dap_delivered,
                c.pap_delivered,
                c.payload_lost,
                c.messages_completed,
                c.messages_in_flight,
                c.messages_dropped,
            )
        }
        Err(msg) => format!("{coords},,,,,,,,,,,,,,{}", escape(msg)),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
