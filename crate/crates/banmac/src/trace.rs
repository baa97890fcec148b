//! Run traces: per-slot and per-message records, the structural validator,
//! and a versioned text dump.
//!
//! A trace captures everything needed to audit a run after the fact: what
//! every slot was planned as, what happened on the channel, and the lifecycle
//! of every random-access message. Metrics are derived from the trace rather
//! than from live counters, so the trace is the single source of truth.

use crate::model::{PayloadKind, ScenarioConfig, SlotKind, SlotOutcome, StationId};
use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

/// One simulated slot: where it sat in the plan and what the channel did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotRecord {
    pub slot: u64,
    pub frame: u64,
    pub kind: SlotKind,
    pub outcome: SlotOutcome,
}

/// Lifecycle of one random-access message. Periodic traffic has no message
/// records; its per-frame PAP shows up in the slot records only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageRecord {
    pub owner: StationId,
    pub arrival_slot: u64,
    pub dap_len: u32,
    pub rap_success_slot: Option<u64>,
    pub completion_slot: Option<u64>,
    /// DAP slots that survived the channel (excludes corrupted ones).
    pub dap_delivered: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTrace {
    /// Slots excluded from rate metrics at the front of the run.
    pub warmup_slots: u64,
    pub slots: Vec<SlotRecord>,
    pub messages: Vec<MessageRecord>,
    /// Arrivals that found the station's single message buffer occupied.
    pub arrivals_discarded: u64,
}

impl SimTrace {
    pub fn completed_messages(&self) -> impl Iterator<Item = &MessageRecord> {
        self.messages.iter().filter(|m| m.completion_slot.is_some())
    }

    pub fn in_flight(&self) -> u64 {
        self.messages.iter().filter(|m| m.completion_slot.is_none()).count() as u64
    }
}

/// A structural defect found while auditing a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceViolation {
    /// Slot the defect was detected at, when it is localized.
    pub slot: Option<u64>,
    pub message: String,
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slot {
            Some(s) => write!(f, "trace violation at slot {}: {}", s, self.message),
            None => write!(f, "trace violation: {}", self.message),
        }
    }
}

impl std::error::Error for TraceViolation {}

fn violation(slot: impl Into<Option<u64>>, message: impl Into<String>) -> TraceViolation {
    TraceViolation { slot: slot.into(), message: message.into() }
}

// --- structural validation ---------------------------------------------

/// Audits a finished trace against the frame structure contract:
///
/// * slots are contiguous and frame indices consistent;
/// * every full frame partitions into RAT then DAT then PAT, with the DAT
///   block within its nominal bound and one PAT slot per periodic station;
/// * DAT and PAT slots never collide and never idle, and their single
///   transmitter is the planned owner;
/// * on an error-free channel every periodic station logs exactly one PAP
///   success per full frame;
/// * DAP conservation: delivered DAP slots in the channel log equal the sum
///   of per-message delivery counts, and completed messages received their
///   full payload;
/// * message timestamps are ordered and the arrival accounting identity
///   (arrivals == completions + in-flight + discarded) holds.
pub fn validate_trace(trace: &SimTrace, scenario: &ScenarioConfig) -> Result<(), TraceViolation> {
    let frame_len = scenario.frame.frame_length as u64;
    let periodic: Vec<StationId> = scenario.periodic_stations().map(|s| s.id).collect();
    let error_free = scenario.frame.packet_error_prob == 0.0;

    for (i, rec) in trace.slots.iter().enumerate() {
        if rec.slot != i as u64 {
            return Err(violation(rec.slot, format!("slot record out of sequence (index {i})")));
        }
        if rec.frame != rec.slot / frame_len {
            return Err(violation(rec.slot, "frame index disagrees with slot index"));
        }
        check_slot(rec)?;
    }

    let full_frames = trace.slots.len() as u64 / frame_len;
    for frame in 0..full_frames {
        let window = &trace.slots[(frame * frame_len) as usize..((frame + 1) * frame_len) as usize];
        check_frame(window, scenario, &periodic, error_free)?;
    }

    check_messages(trace)?;
    check_dap_conservation(trace, error_free)?;
    Ok(())
}

/// Per-slot legality: outcome shape must match the slot kind.
fn check_slot(rec: &SlotRecord) -> Result<(), TraceViolation> {
    let err = |msg: &str| Err(violation(rec.slot, msg.to_string()));
    match (rec.kind, &rec.outcome) {
        (SlotKind::Rat, SlotOutcome::Success { payload, .. })
        | (SlotKind::Rat, SlotOutcome::Corrupted { payload, .. }) => {
            if *payload != PayloadKind::Rap {
                return err("non-RAP payload in a RAT slot");
            }
        }
        (SlotKind::Rat, SlotOutcome::Collision { stations }) => {
            if stations.len() < 2 {
                return err("collision recorded with fewer than two stations");
            }
        }
        (SlotKind::Rat, SlotOutcome::Idle) => {}
        (SlotKind::Dat(_), SlotOutcome::Collision { .. }) => {
            return err("collision in a DAT slot");
        }
        (SlotKind::Pat(_), SlotOutcome::Collision { .. }) => {
            return err("collision in a PAT slot");
        }
        (SlotKind::Dat(_), SlotOutcome::Idle) => {
            return err("granted DAT slot went idle");
        }
        (SlotKind::Pat(_), SlotOutcome::Idle) => {
            return err("assigned PAT slot went idle");
        }
        (SlotKind::Dat(owner), SlotOutcome::Success { station, payload })
        | (SlotKind::Dat(owner), SlotOutcome::Corrupted { station, payload }) => {
            if *station != owner {
                return err("DAT transmitter is not the granted owner");
            }
            if *payload != PayloadKind::Dap {
                return err("non-DAP payload in a DAT slot");
            }
        }
        (SlotKind::Pat(owner), SlotOutcome::Success { station, payload })
        | (SlotKind::Pat(owner), SlotOutcome::Corrupted { station, payload }) => {
            if *station != owner {
                return err("PAT transmitter is not the assigned owner");
            }
            if *payload != PayloadKind::Pap {
                return err("non-PAP payload in a PAT slot");
            }
        }
    }
    Ok(())
}

/// Full-frame structure: RAT | DAT | PAT layout, partition identity, bounded
/// DAT block, and the per-frame PAP roll call.
fn check_frame(
    window: &[SlotRecord],
    scenario: &ScenarioConfig,
    periodic: &[StationId],
    error_free: bool,
) -> Result<(), TraceViolation> {
    let first = window[0].slot;
    let mut rat = 0usize;
    let mut dat = 0usize;
    let mut pat_owners: Vec<StationId> = Vec::new();
    let mut phase = 0u8;
    let mut pap_success: BTreeMap<StationId, u32> = BTreeMap::new();

    for rec in window {
        let this_phase = match rec.kind {
            SlotKind::Rat => 0,
            SlotKind::Dat(_) => 1,
            SlotKind::Pat(_) => 2,
        };
        if this_phase < phase {
            return Err(violation(rec.slot, "slot kinds out of RAT|DAT|PAT order"));
        }
        phase = this_phase;
        match rec.kind {
            SlotKind::Rat => rat += 1,
            SlotKind::Dat(_) => dat += 1,
            SlotKind::Pat(owner) => pat_owners.push(owner),
        }
        if let (SlotKind::Pat(owner), SlotOutcome::Success { .. }) = (rec.kind, &rec.outcome) {
            *pap_success.entry(owner).or_default() += 1;
        }
    }

    if rat + dat + pat_owners.len() != window.len() {
        return Err(violation(first, "frame partition identity broken"));
    }
    if dat > scenario.frame.dat_nominal as usize {
        return Err(violation(first, "DAT block exceeds its nominal size"));
    }
    let mut sorted_owners = pat_owners.clone();
    sorted_owners.sort_unstable();
    sorted_owners.dedup();
    if sorted_owners.len() != pat_owners.len() {
        return Err(violation(first, "duplicate PAT owner within a frame"));
    }
    if pat_owners.len() != periodic.len()
        || !periodic.iter().all(|id| pat_owners.contains(id))
    {
        return Err(violation(first, "PAT slots do not cover the periodic roster"));
    }
    if error_free {
        for id in periodic {
            if pap_success.get(id).copied().unwrap_or(0) != 1 {
                return Err(violation(
                    first,
                    format!("periodic station {id} did not log exactly one PAP success"),
                ));
            }
        }
    }
    Ok(())
}

fn check_messages(trace: &SimTrace) -> Result<(), TraceViolation> {
    for m in &trace.messages {
        if let Some(rap) = m.rap_success_slot {
            if rap < m.arrival_slot {
                return Err(violation(rap, "RAP success precedes its arrival"));
            }
        }
        if let Some(done) = m.completion_slot {
            let Some(rap) = m.rap_success_slot else {
                return Err(violation(done, "completion without a RAP success"));
            };
            if done < rap {
                return Err(violation(done, "completion precedes the RAP success"));
            }
        }
    }
    let completed = trace.completed_messages().count() as u64;
    let arrivals = trace.messages.len() as u64 + trace.arrivals_discarded;
    if arrivals != completed + trace.in_flight() + trace.arrivals_discarded {
        return Err(violation(None, "arrival accounting identity broken"));
    }
    Ok(())
}

fn check_dap_conservation(trace: &SimTrace, error_free: bool) -> Result<(), TraceViolation> {
    let delivered_in_log: u64 = trace
        .slots
        .iter()
        .filter(|r| {
            matches!(r.kind, SlotKind::Dat(_))
                && matches!(r.outcome, SlotOutcome::Success { .. })
        })
        .count() as u64;
    let delivered_in_records: u64 = trace.messages.iter().map(|m| m.dap_delivered as u64).sum();
    if delivered_in_log != delivered_in_records {
        return Err(violation(
            None,
            format!(
                "DAP conservation broken: {delivered_in_log} delivered slots vs {delivered_in_records} recorded"
            ),
        ));
    }
    for m in &trace.messages {
        if m.dap_delivered > m.dap_len {
            return Err(violation(None, "message delivered more DAP slots than its length"));
        }
        if error_free && m.completion_slot.is_some() && m.dap_delivered != m.dap_len {
            return Err(violation(
                m.completion_slot,
                "completed message is missing delivered DAP slots",
            ));
        }
    }
    Ok(())
}

// --- text dump ----------------------------------------------------------

/// Writes the trace as versioned tab-separated text.
///
/// Layout: a `banmac-trace/1` header, a `[slots]` section with one row per
/// slot (`slot frame kind outcome stations`), then a `[messages]` section
/// with one row per random-access message. Slot kinds render as `rat`,
/// `dat:OWNER`, `pat:OWNER`; outcomes as `idle`, `success:rap|dap|pap`,
/// `corrupted:...`, `collision`; station lists join ids with `+`; absent
/// timestamps render as empty fields.
pub fn write_trace(trace: &SimTrace, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "banmac-trace/1")?;
    writeln!(out, "warmup_slots\t{}", trace.warmup_slots)?;
    writeln!(out, "arrivals_discarded\t{}", trace.arrivals_discarded)?;
    writeln!(out, "[slots]")?;
    writeln!(out, "slot\tframe\tkind\toutcome\tstations")?;
    for r in &trace.slots {
        let kind = match r.kind {
            SlotKind::Rat => "rat".to_string(),
            SlotKind::Dat(owner) => format!("dat:{owner}"),
            SlotKind::Pat(owner) => format!("pat:{owner}"),
        };
        let (outcome, stations) = match &r.outcome {
            SlotOutcome::Idle => ("idle".to_string(), String::new()),
            SlotOutcome::Success { station, payload } => {
                (format!("success:{}", payload_label(*payload)), station.to_string())
            }
            SlotOutcome::Corrupted { station, payload } => {
                (format!("corrupted:{}", payload_label(*payload)), station.to_string())
            }
            SlotOutcome::Collision { stations } => {
                let ids: Vec<String> = stations.iter().map(|s| s.to_string()).collect();
                ("collision".to_string(), ids.join("+"))
            }
        };
        writeln!(out, "{}\t{}\t{}\t{}\t{}", r.slot, r.frame, kind, outcome, stations)?;
    }
    writeln!(out, "[messages]")?;
    writeln!(out, "owner\tarrival\trap_success\tcompletion\tdap_len\tdap_delivered")?;
    for m in &trace.messages {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            m.owner,
            m.arrival_slot,
            opt_field(m.rap_success_slot),
            opt_field(m.completion_slot),
            m.dap_len,
            m.dap_delivered,
        )?;
    }
    Ok(())
}

fn payload_label(p: PayloadKind) -> &'static str {
    match p {
        PayloadKind::Rap => "rap",
        PayloadKind::Dap => "dap",
        PayloadKind::Pap => "pap",
    }
}

fn opt_field(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
