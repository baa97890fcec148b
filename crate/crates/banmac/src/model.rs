//! Core domain types shared by the scheduler, stations, engine and CLI.
//!
//! The model describes a slot-synchronous MAC frame that is partitioned into
//! three blocks: a contention block (RAT) for one-slot request packets, a
//! reservation block (DAT) whose slots are granted collision-free to stations
//! that won contention, and a tail block (PAT) with one dedicated slot per
//! periodic station. The DAT/RAT boundary is movable: nominal DAT slots not
//! backed by queued reservations are re-labelled RAT each frame.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

/// Station identifier; also the index into the scenario's sensor roster.
pub type StationId = u32;

/// Scenario file schema version accepted by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Every random-access message opens with exactly one request (RAP) slot.
pub const RAP_LEN: u32 = 1;

/// A periodic station delivers exactly one PAP slot per frame.
pub const PAP_LEN: u32 = 1;

/// Default horizon used by the presets.
pub const DEFAULT_SIM_SLOTS: u64 = 100_000;

/// Nominal DAT block sizes covered by the standard sweep.
pub const DAT_SWEEP: [u32; 7] = [27, 25, 23, 20, 15, 10, 5];

/// Message lengths (total slots per message) covered by the standard sweep.
pub const DATA_LENGTH_SWEEP: [u32; 2] = [8, 4];

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Frame geometry and MAC parameters, fixed for a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    /// Slots per frame.
    pub frame_length: u32,
    /// Dedicated periodic slots at the frame tail.
    pub pat_len: u32,
    /// Nominal reservation block size; the realized block never exceeds it.
    pub dat_nominal: u32,
    /// Slots per random-access message: one RAP plus `data_length - 1` DAP.
    pub data_length: u32,
    /// Per-RAT-slot retransmission probability after a collision.
    pub retransmission_prob: f64,
    /// Payload bits carried by one slot.
    pub packet_size_bits: u64,
    /// Channel rate in bits per second.
    pub bandwidth_bps: u64,
    /// Independent corruption probability applied to otherwise-successful
    /// slots. Zero in every standard preset.
    #[serde(default)]
    pub packet_error_prob: f64,
}

impl FrameConfig {
    /// Frame geometry used by all presets: 40 slots, 10 000-bit packets on a
    /// 4 Mbps channel (2.5 ms slots), 0.01 retransmission persistence.
    pub fn preset(dat_nominal: u32, data_length: u32, pat_len: u32) -> Self {
        FrameConfig {
            frame_length: 40,
            pat_len,
            dat_nominal,
            data_length,
            retransmission_prob: 0.01,
            packet_size_bits: 10_000,
            bandwidth_bps: 4_000_000,
            packet_error_prob: 0.0,
        }
    }

    /// Nominal contention block size: whatever the DAT and PAT blocks leave.
    pub fn rat_nominal(&self) -> u32 {
        self.frame_length - self.dat_nominal - self.pat_len
    }

    /// DAP slots carried by one message.
    pub fn dap_len(&self) -> u32 {
        self.data_length - RAP_LEN
    }

    /// Slot duration in seconds.
    pub fn slot_duration_s(&self) -> f64 {
        self.packet_size_bits as f64 / self.bandwidth_bps as f64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.frame_length == 0 {
            return Err(ConfigError::ZeroField("frame_length"));
        }
        if self.data_length == 0 {
            return Err(ConfigError::ZeroField("data_length"));
        }
        if self.packet_size_bits == 0 {
            return Err(ConfigError::ZeroField("packet_size_bits"));
        }
        if self.bandwidth_bps == 0 {
            return Err(ConfigError::ZeroField("bandwidth_bps"));
        }
        if self.dat_nominal + self.pat_len >= self.frame_length {
            return Err(ConfigError::NoContentionSlots {
                frame_length: self.frame_length,
                dat_nominal: self.dat_nominal,
                pat_len: self.pat_len,
            });
        }
        if !(self.retransmission_prob > 0.0 && self.retransmission_prob <= 1.0) {
            return Err(ConfigError::BadProbability {
                field: "retransmission_prob",
                value: self.retransmission_prob,
            });
        }
        if !(0.0..=1.0).contains(&self.packet_error_prob) {
            return Err(ConfigError::BadProbability {
                field: "packet_error_prob",
                value: self.packet_error_prob,
            });
        }
        Ok(())
    }
}

/// How a sensor is served by the MAC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrafficClass {
    /// Contends in RAT slots, then drains its payload through granted DAT slots.
    RandomAccess,
    /// Owns one dedicated PAT slot per frame; never contends.
    Periodic,
}

/// Biosignal carried by a sensor. Metadata only; mechanics depend solely on
/// the traffic class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Biosignal {
    #[serde(rename = "ECG")]
    Ecg,
    HeartSound,
    HeartRate,
    #[serde(rename = "EMG")]
    Emg,
    RespiratoryRate,
    BloodPressure,
    BodyTemperature,
    SpO2,
    #[serde(rename = "EEG")]
    Eeg,
}

/// Sensor group presets: three body-area rosters with different population
/// sizes and traffic mixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SensorGroup {
    Group1,
    Group2,
    Group3,
}

impl SensorGroup {
    pub const ALL: [SensorGroup; 3] = [SensorGroup::Group1, SensorGroup::Group2, SensorGroup::Group3];
}

impl fmt::Display for SensorGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SensorGroup::Group1 => write!(f, "group1"),
            SensorGroup::Group2 => write!(f, "group2"),
            SensorGroup::Group3 => write!(f, "group3"),
        }
    }
}

impl std::str::FromStr for SensorGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "group1" | "1" => Ok(SensorGroup::Group1),
            "group2" | "2" => Ok(SensorGroup::Group2),
            "group3" | "3" => Ok(SensorGroup::Group3),
            other => Err(format!("unknown group '{other}' (expected group1|group2|group3)")),
        }
    }
}

/// One sensor in the roster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub id: StationId,
    pub biosignal: Biosignal,
    pub traffic_class: TrafficClass,
    /// Nominal source rate; descriptive only. Offered load in a run is set by
    /// `ScenarioConfig::arrival_prob_per_slot`.
    pub info_rate_kbps: f64,
    pub group: SensorGroup,
}

/// Complete, self-contained description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    /// Per-slot Bernoulli arrival probability for each random-access station.
    pub arrival_prob_per_slot: f64,
    /// Simulated horizon in slots.
    pub sim_slots: u64,
    /// Root seed; all randomness derives from it through named substreams.
    pub seed: u64,
    /// Slots excluded from the metrics at the start of the run.
    #[serde(default)]
    pub warmup_slots: u64,
    pub frame: FrameConfig,
    pub sensors: Vec<SensorSpec>,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::UnsupportedSchemaVersion { found: self.schema_version });
        }
        self.frame.validate()?;
        if !(0.0..=1.0).contains(&self.arrival_prob_per_slot) {
            return Err(ConfigError::BadProbability {
                field: "arrival_prob_per_slot",
                value: self.arrival_prob_per_slot,
            });
        }
        if self.sim_slots == 0 {
            return Err(ConfigError::ZeroField("sim_slots"));
        }
        if self.warmup_slots >= self.sim_slots {
            return Err(ConfigError::WarmupTooLong {
                warmup_slots: self.warmup_slots,
                sim_slots: self.sim_slots,
            });
        }
        // The file format stores integers as i64.
        if self.seed > i64::MAX as u64 {
            return Err(ConfigError::ValueTooLarge("seed"));
        }
        if self.sim_slots > i64::MAX as u64 {
            return Err(ConfigError::ValueTooLarge("sim_slots"));
        }
        let periodic = self.periodic_stations().count() as u32;
        if periodic > self.frame.pat_len {
            return Err(ConfigError::TooManyPeriodic { periodic, pat_len: self.frame.pat_len });
        }
        let mut ids: Vec<StationId> = self.sensors.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                return Err(ConfigError::DuplicateStationId { id: pair[0] });
            }
        }
        Ok(())
    }

    pub fn random_access_stations(&self) -> impl Iterator<Item = &SensorSpec> {
        self.sensors.iter().filter(|s| s.traffic_class == TrafficClass::RandomAccess)
    }

    /// Periodic stations in roster order; this order fixes the PAT slot
    /// assignment within every frame.
    pub fn periodic_stations(&self) -> impl Iterator<Item = &SensorSpec> {
        self.sensors.iter().filter(|s| s.traffic_class == TrafficClass::Periodic)
    }

    /// Group label for reports: the roster's group when uniform.
    pub fn group_label(&self) -> String {
        let mut groups: Vec<SensorGroup> = self.sensors.iter().map(|s| s.group).collect();
        groups.sort_unstable();
        groups.dedup();
        match groups.as_slice() {
            [] => "none".to_string(),
            [g] => g.to_string(),
            _ => "mixed".to_string(),
        }
    }

    // -- scenario file format -------------------------------------------------

    /// Renders the scenario to the versioned key-value file format.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Parses and validates a scenario file.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let scenario: ScenarioConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                ConfigError::Io(format!("{}: file not found", path.display()))
            } else {
                ConfigError::Io(format!("{}: {e}", path.display()))
            }
        })?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_toml_string())
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("dat_nominal {dat} is outside the standard sweep {DAT_SWEEP:?}; pass the off-sweep override to use it")]
    OffSweepDat { dat: u32 },
    #[error("data_length {data_length} is outside the standard sweep {DATA_LENGTH_SWEEP:?}; pass the off-sweep override to use it")]
    OffSweepDataLength { data_length: u32 },
    #[error("{0} must be nonzero")]
    ZeroField(&'static str),
    #[error("{0} exceeds the scenario file's integer range")]
    ValueTooLarge(&'static str),
    #[error("dat_nominal {dat_nominal} + pat_len {pat_len} leaves no contention slot in a {frame_length}-slot frame")]
    NoContentionSlots { frame_length: u32, dat_nominal: u32, pat_len: u32 },
    #[error("{field} = {value} is out of range")]
    BadProbability { field: &'static str, value: f64 },
    #[error("warmup_slots {warmup_slots} must be smaller than sim_slots {sim_slots}")]
    WarmupTooLong { warmup_slots: u64, sim_slots: u64 },
    #[error("{periodic} periodic stations need {periodic} PAT slots but pat_len is {pat_len}")]
    TooManyPeriodic { periodic: u32, pat_len: u32 },
    #[error("duplicate station id {id}")]
    DuplicateStationId { id: StationId },
    #[error("unsupported scenario schema_version {found} (this build reads version {SCHEMA_VERSION})")]
    UnsupportedSchemaVersion { found: u32 },
    #[error("pure TDMA needs between 1 and frame_length stations, got {stations} for a {frame_length}-slot frame")]
    TdmaStationCount { stations: usize, frame_length: u32 },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("scenario io error: {0}")]
    Io(String),
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// Builds a preset scenario for one sensor group, enforcing the standard
/// sweep sets for `dat_nominal` and `data_length`.
pub fn preset_scenario(
    group: SensorGroup,
    dat_nominal: u32,
    data_length: u32,
    arrival_prob: f64,
    seed: u64,
) -> Result<ScenarioConfig, ConfigError> {
    if !DAT_SWEEP.contains(&dat_nominal) {
        return Err(ConfigError::OffSweepDat { dat: dat_nominal });
    }
    if !DATA_LENGTH_SWEEP.contains(&data_length) {
        return Err(ConfigError::OffSweepDataLength { data_length });
    }
    preset_scenario_relaxed(group, dat_nominal, data_length, arrival_prob, seed)
}

/// Like [`preset_scenario`] but accepts any structurally valid
/// `dat_nominal`/`data_length` combination.
pub fn preset_scenario_relaxed(
    group: SensorGroup,
    dat_nominal: u32,
    data_length: u32,
    arrival_prob: f64,
    seed: u64,
) -> Result<ScenarioConfig, ConfigError> {
    let sensors = group_roster(group);
    let pat_len = sensors.iter().filter(|s| s.traffic_class == TrafficClass::Periodic).count() as u32;
    let scenario = ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        arrival_prob_per_slot: arrival_prob,
        sim_slots: DEFAULT_SIM_SLOTS,
        seed,
        warmup_slots: 0,
        frame: FrameConfig::preset(dat_nominal, data_length, pat_len),
        sensors,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Sensor roster for one group, in fixed id order.
pub fn group_roster(group: SensorGroup) -> Vec<SensorSpec> {
    use Biosignal::*;
    use TrafficClass::*;
    let make = |id: u32, biosignal, traffic_class, info_rate_kbps| SensorSpec {
        id,
        biosignal,
        traffic_class,
        info_rate_kbps,
        group,
    };
    match group {
        // Cardiac bundle: five ECG channels contend; heart sound and heart
        // rate report periodically.
        SensorGroup::Group1 => vec![
            make(0, Ecg, RandomAccess, 15.0),
            make(1, Ecg, RandomAccess, 15.0),
            make(2, Ecg, RandomAccess, 15.0),
            make(3, Ecg, RandomAccess, 15.0),
            make(4, Ecg, RandomAccess, 15.0),
            make(5, HeartSound, Periodic, 120.0),
            make(6, HeartSound, Periodic, 120.0),
            make(7, HeartRate, Periodic, 0.6),
        ],
        // Mixed vitals: EMG and respiratory rate contend; blood pressure,
        // body temperature and SpO2 report periodically.
        SensorGroup::Group2 => vec![
            make(0, Emg, RandomAccess, 600.0),
            make(1, Emg, RandomAccess, 600.0),
            make(2, RespiratoryRate, RandomAccess, 0.8),
            make(3, BloodPressure, Periodic, 1.44),
            make(4, BodyTemperature, Periodic, 0.08),
            make(5, SpO2, Periodic, 7.2),
        ],
        // EEG array: twenty contending channels, no periodic tail.
        SensorGroup::Group3 => (0..20).map(|id| make(id, Eeg, RandomAccess, 4.2)).collect(),
    }
}

// ---------------------------------------------------------------------------
// Frame plans and slot outcomes
// ---------------------------------------------------------------------------

/// Role of one slot in a planned frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    /// Contention slot, open to RAP attempts.
    Rat,
    /// Reservation slot granted to exactly one draining station.
    Dat(StationId),
    /// Dedicated periodic slot.
    Pat(StationId),
}

/// Realized layout of one frame: `[RAT | DAT | PAT]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotPlan {
    pub frame_index: u64,
    pub slots: Vec<SlotKind>,
}

impl SlotPlan {
    pub fn rat_len(&self) -> u32 {
        self.slots.iter().filter(|s| matches!(s, SlotKind::Rat)).count() as u32
    }

    pub fn dat_len(&self) -> u32 {
        self.slots.iter().filter(|s| matches!(s, SlotKind::Dat(_))).count() as u32
    }

    pub fn pat_len(&self) -> u32 {
        self.slots.iter().filter(|s| matches!(s, SlotKind::Pat(_))).count() as u32
    }
}

/// What a transmitted slot carried.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Rap,
    Dap,
    Pap,
}

/// Channel outcome of one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotOutcome {
    /// Nobody transmitted.
    Idle,
    /// Exactly one transmitter; payload delivered.
    Success { station: StationId, payload: PayloadKind },
    /// Two or more simultaneous RAT transmitters; nothing delivered.
    Collision { stations: Vec<StationId> },
    /// Single transmitter hit by the packet-error knob; nothing delivered.
    Corrupted { station: StationId, payload: PayloadKind },
}

/// One random-access message: one RAP slot plus `dap_len` reserved slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub owner: StationId,
    pub arrival_slot: u64,
    pub dap_len: u32,
}
