//! Metric extraction: turns a finished trace into the report the sweep CSV
//! and the comparison harnesses consume.
//!
//! Rates (S, G, delay) are computed over the measurement window, i.e. the
//! slots at or after `warmup_slots`; the raw counters cover the whole run so
//! the arrival accounting identity stays exact. The default warm-up is zero,
//! in which case the two windows coincide.

use crate::model::{FrameConfig, PayloadKind, SlotKind, SlotOutcome};
use crate::trace::SimTrace;

/// Whole-run event totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Message arrivals, including ones discarded on a busy buffer.
    pub arrivals: u64,
    pub arrivals_discarded: u64,
    pub rap_successes: u64,
    pub collisions: u64,
    pub dap_delivered: u64,
    pub pap_delivered: u64,
    /// Slots corrupted by the channel error knob.
    pub payload_lost: u64,
    pub messages_completed: u64,
    pub messages_in_flight: u64,
    /// The MAC never drops an accepted message; anything nonzero is a bug.
    pub messages_dropped: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    /// Mean RAP transmission attempts per contention slot.
    pub offered_load_g: f64,
    /// Successfully delivered payload slots (RAP + DAP + PAP) per slot.
    pub throughput_s: f64,
    /// Mean completion-minus-arrival over completed random-access messages;
    /// absent when nothing completed. Periodic traffic carries no queueing
    /// delay by construction and is excluded.
    pub mean_delay_slots: Option<f64>,
    pub mean_delay_seconds: Option<f64>,
    pub counters: Counters,
}

/// Derives the report from a finished trace.
pub fn compute_metrics(trace: &SimTrace, config: &FrameConfig) -> MetricsReport {
    let warmup = trace.warmup_slots as usize;
    let window = &trace.slots[warmup.min(trace.slots.len())..];
    let counted_slots = window.len() as u64;

    let mut successes = 0u64;
    let mut rat_slots = 0u64;
    let mut rap_attempts = 0u64;
    for rec in window {
        if matches!(rec.outcome, SlotOutcome::Success { .. }) {
            successes += 1;
        }
        if rec.kind == SlotKind::Rat {
            rat_slots += 1;
            rap_attempts += match &rec.outcome {
                SlotOutcome::Idle => 0,
                SlotOutcome::Success { .. } | SlotOutcome::Corrupted { .. } => 1,
                SlotOutcome::Collision { stations } => stations.len() as u64,
            };
        }
    }

    let throughput_s = if counted_slots == 0 { 0.0 } else { successes as f64 / counted_slots as f64 };
    let offered_load_g = if rat_slots == 0 { 0.0 } else { rap_attempts as f64 / rat_slots as f64 };

    let mut delay_sum = 0u64;
    let mut delay_n = 0u64;
    for m in trace.completed_messages() {
        if m.arrival_slot >= trace.warmup_slots {
            delay_sum += m.completion_slot.unwrap() - m.arrival_slot;
            delay_n += 1;
        }
    }
    let mean_delay_slots = (delay_n > 0).then(|| delay_sum as f64 / delay_n as f64);
    let mean_delay_seconds = mean_delay_slots.map(|d| d * config.slot_duration_s());

    MetricsReport {
        offered_load_g,
        throughput_s,
        mean_delay_slots,
        mean_delay_seconds,
        counters: count_events(trace),
    }
}

fn count_events(trace: &SimTrace) -> Counters {
    let mut c = Counters {
        arrivals: trace.messages.len() as u64 + trace.arrivals_discarded,
        arrivals_discarded: trace.arrivals_discarded,
        messages_completed: trace.completed_messages().count() as u64,
        messages_in_flight: trace.in_flight(),
        ..Counters::default()
    };
    for rec in &trace.slots {
        match &rec.outcome {
            SlotOutcome::Success { payload, .. } => match payload {
                PayloadKind::Rap => c.rap_successes += 1,
                PayloadKind::Dap => c.dap_delivered += 1,
                PayloadKind::Pap => c.pap_delivered += 1,
            },
            SlotOutcome::Collision { .. } => c.collisions += 1,
            SlotOutcome::Corrupted { .. } => c.payload_lost += 1,
            SlotOutcome::Idle => {}
        }
    }
    c
}
