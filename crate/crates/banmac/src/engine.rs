//! The slot-synchronous simulation loop.
//!
//! Each frame is planned at its first slot, then every slot proceeds through
//! the same phases: arrivals (one Bernoulli draw per random-access station),
//! transmit decisions, channel resolution, and feedback routing. The loop
//! appends one record per slot and maintains the per-message lifecycle, so a
//! finished run hands back both the derived metrics and the full trace.
//!
//! A run is a pure function of its `ScenarioConfig`: identical scenarios
//! (seed included) produce bit-identical reports and traces, which is what
//! makes sweep output byte-stable and cross-scheme comparisons meaningful.

use crate::metrics::{compute_metrics, MetricsReport};
use crate::model::{
    ConfigError, PayloadKind, ScenarioConfig, SlotKind, SlotOutcome, SlotPlan, StationId,
    TrafficClass,
};
use crate::scheduler::{enqueue_reservation, plan_frame, ReservationQueue};
use crate::station::{ArrivalEvent, RapFeedback, Station, TransmitDecision};
use crate::trace::{MessageRecord, SimTrace, SlotRecord};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(#[from] ConfigError),
    #[error("invariant violation at slot {slot}: {message}")]
    Invariant { slot: u64, message: String },
}

/// Resolves one slot's channel contention.
///
/// Zero transmitters idle the slot; exactly one succeeds, unless the error
/// knob corrupts it; two or more collide, which only contention slots allow.
/// Reserved and periodic slots reject foreign or plural transmitters instead
/// of resolving them: that state is unreachable through the station machine,
/// so reaching it is a bug worth aborting on.
pub fn resolve_slot(
    transmitters: &[(StationId, PayloadKind)],
    kind: SlotKind,
    error_rng: &mut ChaCha8Rng,
    packet_error_prob: f64,
) -> Result<SlotOutcome, String> {
    match kind {
        SlotKind::Rat => {
            if let Some((_, payload)) = transmitters.iter().find(|(_, p)| *p != PayloadKind::Rap) {
                return Err(format!("{payload:?} transmission in a RAT slot"));
            }
        }
        SlotKind::Dat(owner) => {
            check_reserved(transmitters, owner, PayloadKind::Dap, "DAT")?;
        }
        SlotKind::Pat(owner) => {
            check_reserved(transmitters, owner, PayloadKind::Pap, "PAT")?;
        }
    }
    Ok(match transmitters {
        [] => SlotOutcome::Idle,
        [(station, payload)] => {
            if error_rng.gen::<f64>() < packet_error_prob {
                SlotOutcome::Corrupted { station: *station, payload: *payload }
            } else {
                SlotOutcome::Success { station: *station, payload: *payload }
            }
        }
        many => {
            let mut stations: Vec<StationId> = many.iter().map(|(s, _)| *s).collect();
            stations.sort_unstable();
            SlotOutcome::Collision { stations }
        }
    })
}

fn check_reserved(
    transmitters: &[(StationId, PayloadKind)],
    owner: StationId,
    expected: PayloadKind,
    label: &str,
) -> Result<(), String> {
    if transmitters.len() > 1 {
        return Err(format!("{} transmitters in a {label} slot", transmitters.len()));
    }
    if let Some((station, payload)) = transmitters.first() {
        if *station != owner {
            return Err(format!("station {station} transmitted in station {owner}'s {label} slot"));
        }
        if *payload != expected {
            return Err(format!("{payload:?} payload in a {label} slot"));
        }
    }
    Ok(())
}

/// Simulates the scenario for exactly `sim_slots` slots and returns the
/// metrics together with the full trace they were derived from.
pub fn run(scenario: &ScenarioConfig) -> Result<(MetricsReport, SimTrace), SimError> {
    scenario.validate()?;
    Engine::new(scenario).run()
}

struct Engine<'a> {
    scenario: &'a ScenarioConfig,
    stations: Vec<Station>,
    /// Roster indices of random-access stations, in roster order.
    ra_indices: Vec<usize>,
    periodic_ids: Vec<StationId>,
    queue: ReservationQueue,
    error_rng: ChaCha8Rng,
    /// Absolute slot indices of the current frame's RAT slots.
    rat_positions: Vec<u64>,
    slots: Vec<SlotRecord>,
    messages: Vec<MessageRecord>,
    /// Per-station index into `messages` for the message currently in flight.
    open_message: Vec<Option<usize>>,
    arrivals_discarded: u64,
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a ScenarioConfig) -> Self {
        let stations: Vec<Station> = scenario
            .sensors
            .iter()
            .enumerate()
            .map(|(i, s)| Station::new(s.id, s.traffic_class, scenario.seed, i))
            .collect();
        let ra_indices = scenario
            .sensors
            .iter()
            .enumerate()
            .filter(|(_, s)| s.traffic_class == TrafficClass::RandomAccess)
            .map(|(i, _)| i)
            .collect();
        let periodic_ids = scenario.periodic_stations().map(|s| s.id).collect();
        let open_message = vec![None; stations.len()];
        Engine {
            scenario,
            stations,
            ra_indices,
            periodic_ids,
            queue: ReservationQueue::new(),
            error_rng: crate::rng::channel_error_stream(scenario.seed),
            rat_positions: Vec::new(),
            slots: Vec::with_capacity(scenario.sim_slots as usize),
            messages: Vec::new(),
            open_message,
            arrivals_discarded: 0,
        }
    }

    fn run(mut self) -> Result<(MetricsReport, SimTrace), SimError> {
        let frame_len = self.scenario.frame.frame_length as u64;
        let sim_slots = self.scenario.sim_slots;
        let mut frame_start = 0u64;
        while frame_start < sim_slots {
            let frame_index = frame_start / frame_len;
            let plan = self.begin_frame(frame_index, frame_start);
            let frame_end = (frame_start + frame_len).min(sim_slots);
            for now in frame_start..frame_end {
                let kind = plan.slots[(now - frame_start) as usize];
                self.step(now, frame_index, kind)?;
            }
            frame_start = frame_end;
        }
        let trace = SimTrace {
            warmup_slots: self.scenario.warmup_slots,
            slots: self.slots,
            messages: self.messages,
            arrivals_discarded: self.arrivals_discarded,
        };
        let report = compute_metrics(&trace, &self.scenario.frame);
        Ok((report, trace))
    }

    /// Plans the frame from the reservation queue, refreshes the RAT slot
    /// positions, and lands any fresh choices deferred from the prior frame.
    fn begin_frame(&mut self, frame_index: u64, frame_start: u64) -> SlotPlan {
        let (plan, queue) = plan_frame(
            &self.scenario.frame,
            &self.periodic_ids,
            std::mem::take(&mut self.queue),
            frame_index,
        );
        self.queue = queue;
        self.rat_positions.clear();
        self.rat_positions.extend(
            plan.slots
                .iter()
                .enumerate()
                .filter(|(_, k)| **k == SlotKind::Rat)
                .map(|(i, _)| frame_start + i as u64),
        );
        for &idx in &self.ra_indices {
            self.stations[idx].resolve_deferred_choice(&self.rat_positions);
        }
        plan
    }

    fn step(&mut self, now: u64, frame_index: u64, kind: SlotKind) -> Result<(), SimError> {
        self.generate_arrivals(now);

        // Every station sees every slot; non-participants stay silent, and
        // stale stations burn their per-RAT-slot retransmission draw.
        let mut transmitters: Vec<(StationId, PayloadKind)> = Vec::new();
        let mut rap_senders: Vec<usize> = Vec::new();
        let mut dap_event: Option<(usize, Option<crate::model::Message>)> = None;
        let retrans = self.scenario.frame.retransmission_prob;
        for (idx, station) in self.stations.iter_mut().enumerate() {
            match station.decide_transmit(now, kind, retrans) {
                TransmitDecision::Silent => {}
                TransmitDecision::SendRap => {
                    transmitters.push((station.id, PayloadKind::Rap));
                    rap_senders.push(idx);
                }
                TransmitDecision::SendDap { completes } => {
                    transmitters.push((station.id, PayloadKind::Dap));
                    dap_event = Some((idx, completes));
                }
                TransmitDecision::SendPap => {
                    transmitters.push((station.id, PayloadKind::Pap));
                }
            }
        }

        let outcome = resolve_slot(
            &transmitters,
            kind,
            &mut self.error_rng,
            self.scenario.frame.packet_error_prob,
        )
        .map_err(|message| SimError::Invariant { slot: now, message })?;

        self.route_feedback(now, kind, &outcome, &rap_senders, dap_event)?;
        self.slots.push(SlotRecord { slot: now, frame: frame_index, kind, outcome });
        Ok(())
    }

    fn generate_arrivals(&mut self, now: u64) {
        let arrival_prob = self.scenario.arrival_prob_per_slot;
        let dap_len = self.scenario.frame.dap_len();
        let first_remaining = self.rat_positions.partition_point(|&p| p < now);
        let remaining = &self.rat_positions[first_remaining..];
        for &idx in &self.ra_indices {
            match self.stations[idx].poll_arrival(now, arrival_prob, dap_len, remaining) {
                ArrivalEvent::None => {}
                ArrivalEvent::Discarded => self.arrivals_discarded += 1,
                ArrivalEvent::Accepted(msg) => {
                    debug_assert!(self.open_message[idx].is_none());
                    self.messages.push(MessageRecord {
                        owner: msg.owner,
                        arrival_slot: msg.arrival_slot,
                        dap_len: msg.dap_len,
                        rap_success_slot: None,
                        completion_slot: None,
                        dap_delivered: 0,
                    });
                    self.open_message[idx] = Some(self.messages.len() - 1);
                }
            }
        }
    }

    fn route_feedback(
        &mut self,
        now: u64,
        kind: SlotKind,
        outcome: &SlotOutcome,
        rap_senders: &[usize],
        dap_event: Option<(usize, Option<crate::model::Message>)>,
    ) -> Result<(), SimError> {
        match kind {
            SlotKind::Rat => match outcome {
                SlotOutcome::Success { .. } => {
                    debug_assert_eq!(rap_senders.len(), 1);
                    self.finish_rap(now, rap_senders[0], true)?;
                }
                SlotOutcome::Corrupted { .. } => {
                    debug_assert_eq!(rap_senders.len(), 1);
                    self.finish_rap(now, rap_senders[0], false)?;
                }
                SlotOutcome::Collision { .. } => {
                    for &idx in rap_senders {
                        let fed = self.stations[idx].on_rap_outcome(false);
                        debug_assert!(fed.is_none());
                    }
                }
                SlotOutcome::Idle => {}
            },
            SlotKind::Dat(_) => {
                let Some((idx, completes)) = dap_event else {
                    return Err(SimError::Invariant {
                        slot: now,
                        message: "granted DAT slot has no draining owner".into(),
                    });
                };
                let record = self.open_message[idx].expect("draining station has an open message");
                if matches!(outcome, SlotOutcome::Success { .. }) {
                    self.messages[record].dap_delivered += 1;
                }
                if let Some(msg) = completes {
                    debug_assert_eq!(self.messages[record].arrival_slot, msg.arrival_slot);
                    self.messages[record].completion_slot = Some(now);
                    self.open_message[idx] = None;
                }
            }
            SlotKind::Pat(_) => {}
        }
        Ok(())
    }

    /// Applies a delivered-or-lost verdict to the slot's single RAP sender.
    fn finish_rap(&mut self, now: u64, idx: usize, delivered: bool) -> Result<(), SimError> {
        let record = self.open_message[idx].expect("backlogged station has an open message");
        match self.stations[idx].on_rap_outcome(delivered) {
            None => {}
            Some(RapFeedback::Reserved(msg)) => {
                self.messages[record].rap_success_slot = Some(now);
                enqueue_reservation(&mut self.queue, msg.owner, msg.dap_len).map_err(|e| {
                    SimError::Invariant { slot: now, message: e.to_string() }
                })?;
            }
            Some(RapFeedback::Completed(_)) => {
                self.messages[record].rap_success_slot = Some(now);
                self.messages[record].completion_slot = Some(now);
                self.open_message[idx] = None;
            }
        }
        Ok(())
    }
}
