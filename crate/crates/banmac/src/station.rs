//! Per-station MAC behavior.
//!
//! Random-access stations hold at most one message at a time and walk a
//! three-state machine:
//!
//! * `Idle`: waiting for an arrival. Arrivals are drawn every slot from the
//!   station's own stream; a draw that lands on a busy station is counted and
//!   discarded.
//! * `Backlogged`: holds an unserved message. While fresh it transmits its
//!   RAP in one uniformly chosen slot among the remaining RAT slots of the
//!   current frame (the arrival slot itself qualifies), deferring the choice
//!   to the next frame when none remain. After a collision it retransmits in
//!   each RAT slot with the configured persistence probability.
//! * `Draining`: RAP delivered, reservation queued; the station transmits one
//!   DAP in every DAT slot granted to it and completes on the last one.
//!
//! Periodic stations never leave `Idle`; their PAP rides the dedicated PAT
//! slot each frame.

use crate::model::{Message, SlotKind, StationId, TrafficClass};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StationState {
    Idle,
    Backlogged {
        message: Message,
        /// True until the first collision.
        fresh: bool,
        /// Absolute slot picked for the fresh attempt; `None` while the
        /// choice is deferred to the next frame's plan.
        chosen_slot: Option<u64>,
    },
    Draining {
        message: Message,
        dap_remaining: u32,
    },
}

/// What a station does with the current slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmitDecision {
    Silent,
    SendRap,
    /// One reserved payload slot; carries the message when this is its last.
    SendDap { completes: Option<Message> },
    SendPap,
}

/// Result of one arrival draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalEvent {
    None,
    Accepted(Message),
    /// The single message buffer was occupied.
    Discarded,
}

/// Outcome of a delivered RAP, reported to the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RapFeedback {
    /// Normal case: the message still owes DAP slots; reserve them.
    Reserved(Message),
    /// One-slot message: the RAP was the whole payload.
    Completed(Message),
}

#[derive(Debug)]
pub struct Station {
    pub id: StationId,
    pub class: TrafficClass,
    pub state: StationState,
    arrival_rng: ChaCha8Rng,
    backoff_rng: ChaCha8Rng,
}

impl Station {
    pub fn new(id: StationId, class: TrafficClass, seed: u64, roster_index: usize) -> Self {
        Station {
            id,
            class,
            state: StationState::Idle,
            arrival_rng: crate::rng::arrival_stream(seed, roster_index),
            backoff_rng: crate::rng::backoff_stream(seed, roster_index),
        }
    }

    /// Draws this slot's arrival. Exactly one draw is consumed per call, so
    /// the arrival pattern depends only on (seed, station), never on state.
    /// `rat_remaining` lists the current frame's RAT slots at or after `now`.
    pub fn poll_arrival(
        &mut self,
        now: u64,
        arrival_prob: f64,
        dap_len: u32,
        rat_remaining: &[u64],
    ) -> ArrivalEvent {
        debug_assert_eq!(self.class, TrafficClass::RandomAccess);
        let draw = self.arrival_rng.gen::<f64>();
        if draw >= arrival_prob {
            return ArrivalEvent::None;
        }
        if self.state != StationState::Idle {
            return ArrivalEvent::Discarded;
        }
        let message = Message { owner: self.id, arrival_slot: now, dap_len };
        self.state = StationState::Backlogged {
            message,
            fresh: true,
            chosen_slot: choose_uniform(&mut self.backoff_rng, rat_remaining),
        };
        ArrivalEvent::Accepted(message)
    }

    /// Completes a deferred fresh choice against the new frame's RAT slots.
    /// Every frame has at least one, so the choice always lands.
    pub fn resolve_deferred_choice(&mut self, rat_positions: &[u64]) {
        if let StationState::Backlogged { fresh: true, chosen_slot: slot @ None, .. } = &mut self.state {
            *slot = choose_uniform(&mut self.backoff_rng, rat_positions);
            debug_assert!(slot.is_some());
        }
    }

    pub fn decide_transmit(&mut self, now: u64, kind: SlotKind, retransmission_prob: f64) -> TransmitDecision {
        match kind {
            SlotKind::Rat => match &self.state {
                StationState::Backlogged { fresh: true, chosen_slot, .. } => {
                    if *chosen_slot == Some(now) {
                        TransmitDecision::SendRap
                    } else {
                        TransmitDecision::Silent
                    }
                }
                StationState::Backlogged { fresh: false, .. } => {
                    if self.backoff_rng.gen::<f64>() < retransmission_prob {
                        TransmitDecision::SendRap
                    } else {
                        TransmitDecision::Silent
                    }
                }
                _ => TransmitDecision::Silent,
            },
            SlotKind::Dat(owner) if owner == self.id => {
                let StationState::Draining { message, dap_remaining } = &mut self.state else {
                    // The scheduler only grants DAT slots to reserved
                    // stations; a mismatch surfaces as an idle granted slot
                    // and aborts the run.
                    return TransmitDecision::Silent;
                };
                *dap_remaining -= 1;
                if *dap_remaining == 0 {
                    let message = *message;
                    self.state = StationState::Idle;
                    TransmitDecision::SendDap { completes: Some(message) }
                } else {
                    TransmitDecision::SendDap { completes: None }
                }
            }
            SlotKind::Pat(owner) if owner == self.id => {
                debug_assert_eq!(self.class, TrafficClass::Periodic);
                TransmitDecision::SendPap
            }
            _ => TransmitDecision::Silent,
        }
    }

    /// Applies the channel verdict for a RAP this station just sent. A
    /// delivered RAP either opens the drain phase or, for a one-slot message,
    /// completes it; anything else sends the station into persistent
    /// retransmission.
    pub fn on_rap_outcome(&mut self, delivered: bool) -> Option<RapFeedback> {
        let StationState::Backlogged { message, .. } = self.state else {
            unreachable!("RAP outcome for a station that is not backlogged");
        };
        if !delivered {
            self.state = StationState::Backlogged { message, fresh: false, chosen_slot: None };
            return None;
        }
        if message.dap_len == 0 {
            self.state = StationState::Idle;
            Some(RapFeedback::Completed(message))
        } else {
            self.state = StationState::Draining { message, dap_remaining: message.dap_len };
            Some(RapFeedback::Reserved(message))
        }
    }
}

fn choose_uniform(rng: &mut ChaCha8Rng, positions: &[u64]) -> Option<u64> {
    if positions.is_empty() {
        None
    } else {
        Some(positions[rng.gen_range(0..positions.len())])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RAP_LEN;

    fn ra_station(seed: u64) -> Station {
        Station::new(0, TrafficClass::RandomAccess, seed, 0)
    }

    #[test]
    fn zero_arrival_prob_never_leaves_idle() {
        let mut st = ra_station(1);
        for now in 0..1000 {
            assert_eq!(st.poll_arrival(now, 0.0, 7, &[now + 1]), ArrivalEvent::None);
        }
        assert_eq!(st.state, StationState::Idle);
    }

    #[test]
    fn certain_arrival_backlogs_with_fresh_choice() {
        let mut st = ra_station(1);
        let remaining = [12, 13, 14];
        let ArrivalEvent::Accepted(msg) = st.poll_arrival(12, 1.0, 7, &remaining) else {
            panic!("expected acceptance");
        };
        assert_eq!(msg, Message { owner: 0, arrival_slot: 12, dap_len: 7 });
        let StationState::Backlogged { fresh: true, chosen_slot: Some(c), .. } = st.state else {
            panic!("expected fresh backlog");
        };
        assert!(remaining.contains(&c));
    }

    #[test]
    fn arrivals_on_a_busy_station_are_discarded() {
        let mut st = ra_station(1);
        assert!(matches!(st.poll_arrival(0, 1.0, 7, &[0, 1]), ArrivalEvent::Accepted(_)));
        assert_eq!(st.poll_arrival(1, 1.0, 7, &[1]), ArrivalEvent::Discarded);
    }

    #[test]
    fn fresh_choice_defers_when_no_rat_slot_remains() {
        let mut st = ra_station(3);
        st.poll_arrival(38, 1.0, 7, &[]);
        assert!(matches!(st.state, StationState::Backlogged { chosen_slot: None, .. }));
        st.resolve_deferred_choice(&[40, 41, 42]);
        let StationState::Backlogged { chosen_slot: Some(c), .. } = st.state else {
            panic!("choice should resolve at the frame boundary");
        };
        assert!((40..=42).contains(&c));
    }

    #[test]
    fn fresh_station_transmits_exactly_at_its_chosen_slot() {
        let mut st = ra_station(5);
        st.poll_arrival(10, 1.0, 7, &[10, 11, 12]);
        let StationState::Backlogged { chosen_slot: Some(c), .. } = st.state else { panic!() };
        for now in 10..=12 {
            let d = st.decide_transmit(now, SlotKind::Rat, 0.01);
            if now == c {
                assert_eq!(d, TransmitDecision::SendRap);
            } else {
                assert_eq!(d, TransmitDecision::Silent);
            }
        }
    }

    #[test]
    fn stale_station_retransmits_at_the_configured_rate() {
        let mut st = ra_station(7);
        st.poll_arrival(0, 1.0, 7, &[0]);
        st.on_rap_outcome(false);
        let attempts = (0..100_000)
            .filter(|&now| st.decide_transmit(now, SlotKind::Rat, 0.01) == TransmitDecision::SendRap)
            .count();
        assert!((700..1300).contains(&attempts), "got {attempts} attempts");
    }

    #[test]
    fn rap_feedback_transitions() {
        let mut st = ra_station(9);
        st.poll_arrival(0, 1.0, 7, &[0]);
        assert_eq!(
            st.on_rap_outcome(true),
            Some(RapFeedback::Reserved(Message { owner: 0, arrival_slot: 0, dap_len: 7 }))
        );
        assert!(matches!(st.state, StationState::Draining { dap_remaining: 7, .. }));

        let mut st = ra_station(9);
        st.poll_arrival(0, 1.0, 7, &[0]);
        st.on_rap_outcome(false);
        assert!(matches!(st.state, StationState::Backlogged { fresh: false, chosen_slot: None, .. }));

        // One-slot message: data_length == RAP_LEN, nothing to reserve.
        let mut st = ra_station(9);
        st.poll_arrival(4, 1.0, RAP_LEN - 1, &[4]);
        assert_eq!(
            st.on_rap_outcome(true),
            Some(RapFeedback::Completed(Message { owner: 0, arrival_slot: 4, dap_len: 0 }))
        );
        assert_eq!(st.state, StationState::Idle);
    }

    #[test]
    fn draining_station_counts_down_and_completes() {
        let mut st = ra_station(11);
        st.poll_arrival(0, 1.0, 2, &[0]);
        st.on_rap_outcome(true);
        assert_eq!(st.decide_transmit(50, SlotKind::Dat(0), 0.01), TransmitDecision::SendDap { completes: None });
        assert_eq!(
            st.decide_transmit(51, SlotKind::Dat(0), 0.01),
            TransmitDecision::SendDap {
                completes: Some(Message { owner: 0, arrival_slot: 0, dap_len: 2 })
            }
        );
        assert_eq!(st.state, StationState::Idle);
        // Another station's DAT slot is none of our business.
        assert_eq!(st.decide_transmit(52, SlotKind::Dat(3), 0.01), TransmitDecision::Silent);
    }

    #[test]
    fn periodic_station_rides_only_its_pat_slot() {
        let mut st = Station::new(6, TrafficClass::Periodic, 1, 6);
        assert_eq!(st.decide_transmit(37, SlotKind::Pat(6), 0.01), TransmitDecision::SendPap);
        assert_eq!(st.decide_transmit(38, SlotKind::Pat(7), 0.01), TransmitDecision::Silent);
        assert_eq!(st.decide_transmit(5, SlotKind::Rat, 0.01), TransmitDecision::Silent);
        assert_eq!(st.state, StationState::Idle);
    }

    #[test]
    fn fresh_choices_cover_the_whole_window() {
        let positions: Vec<u64> = (100..110).collect();
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..200 {
            let mut st = ra_station(seed);
            st.poll_arrival(99, 1.0, 7, &positions);
            if let StationState::Backlogged { chosen_slot: Some(c), .. } = st.state {
                seen.insert(c);
            }
        }
        assert_eq!(seen.len(), positions.len());
    }
}
