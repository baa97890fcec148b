//! Reference MAC schemes run on the same station population and metric
//! definitions as the hybrid: pure slotted ALOHA, pure TDMA, and the
//! closed-form ALOHA throughput curve used as a validation oracle.
//!
//! Both baselines consume an unmodified `ScenarioConfig` and emit the same
//! `MetricsReport` shape as the hybrid engine, so sweep rows are directly
//! comparable across schemes. Counter semantics carry over: a random-access
//! message's first delivered slot counts as a RAP success and the rest as
//! DAP, periodic deliveries count as PAP, and mean delay pools completed
//! random-access messages only. For ALOHA every slot is a contention slot,
//! so G is total transmission attempts per slot; TDMA has no contention and
//! reports G = 0.

use crate::engine::SimError;
use crate::metrics::{Counters, MetricsReport};
use crate::model::{ConfigError, ScenarioConfig, TrafficClass};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Classical slotted-ALOHA throughput at offered load `g`: `g * exp(-g)`.
pub fn aloha_throughput_theory(g: f64) -> f64 {
    g * (-g).exp()
}

// --- pure slotted ALOHA ----------------------------------------------------

/// Every slot is a contention slot. A station with a pending message
/// contends for one slot at a time: the attempt is scheduled uniformly
/// within the next frame-length window, a collision drops it into the
/// per-slot persistence mode, and each delivered slot re-arms the next one
/// fresh until the whole message is through. Periodic stations join the
/// contention with a one-slot message per frame period.
pub fn run_pure_slotted_aloha(scenario: &ScenarioConfig) -> Result<MetricsReport, SimError> {
    scenario.validate()?;
    let frame_len = scenario.frame.frame_length as u64;
    let mut stations: Vec<AlohaStation> = scenario
        .sensors
        .iter()
        .enumerate()
        .map(|(i, s)| AlohaStation {
            class: s.traffic_class,
            arrival_rng: crate::rng::arrival_stream(scenario.seed, i),
            backoff_rng: crate::rng::backoff_stream(scenario.seed, i),
            pending: None,
        })
        .collect();
    let mut error_rng = crate::rng::channel_error_stream(scenario.seed);
    let mut acc = Accumulator { warmup_slots: scenario.warmup_slots, ..Default::default() };
    let mut senders: Vec<usize> = Vec::new();

    for now in 0..scenario.sim_slots {
        let counted = now >= scenario.warmup_slots;

        // Arrival phase: Bernoulli per random-access station per slot, plus
        // one-slot periodic messages at each frame boundary.
        for st in stations.iter_mut() {
            match st.class {
                TrafficClass::RandomAccess => {
                    if st.arrival_rng.gen::<f64>() < scenario.arrival_prob_per_slot {
                        st.accept_or_discard(now, scenario.frame.data_length, frame_len, &mut acc);
                    }
                }
                TrafficClass::Periodic => {
                    if now % frame_len == 0 {
                        st.accept_or_discard(now, 1, frame_len, &mut acc);
                    }
                }
            }
        }

        // Decision phase: fresh stations fire exactly at their chosen slot,
        // stale ones run the persistent retransmission draw.
        senders.clear();
        for (idx, st) in stations.iter_mut().enumerate() {
            let Some(msg) = &st.pending else { continue };
            let fires = match msg.phase {
                AlohaPhase::Fresh { chosen } => chosen == now,
                AlohaPhase::Stale => {
                    st.backoff_rng.gen::<f64>() < scenario.frame.retransmission_prob
                }
            };
            if fires {
                senders.push(idx);
            }
        }

        // Resolution and feedback.
        if counted {
            acc.win_contention_slots += 1;
            acc.win_attempts += senders.len() as u64;
        }
        match senders.as_slice() {
            [] => {}
            [idx] => {
                if error_rng.gen::<f64>() < scenario.frame.packet_error_prob {
                    acc.payload_lost += 1;
                    stations[*idx].go_stale();
                } else {
                    stations[*idx].deliver_slot(now, frame_len, counted, &mut acc);
                }
            }
            many => {
                acc.collisions += 1;
                for &idx in many {
                    stations[idx].go_stale();
                }
            }
        }
    }

    acc.in_flight = stations.iter().filter(|s| s.pending.is_some()).count() as u64;
    Ok(acc.into_report(scenario))
}

#[derive(Debug, Clone, Copy)]
enum AlohaPhase {
    Fresh { chosen: u64 },
    Stale,
}

#[derive(Debug, Clone, Copy)]
struct AlohaMessage {
    arrival_slot: u64,
    slots_total: u32,
    slots_remaining: u32,
    phase: AlohaPhase,
}

struct AlohaStation {
    class: TrafficClass,
    arrival_rng: ChaCha8Rng,
    backoff_rng: ChaCha8Rng,
    pending: Option<AlohaMessage>,
}

impl AlohaStation {
    fn accept_or_discard(&mut self, now: u64, slots: u32, frame_len: u64, acc: &mut Accumulator) {
        acc.arrivals += 1;
        if self.pending.is_some() {
            acc.discarded += 1;
            return;
        }
        let chosen = pick_in_window(&mut self.backoff_rng, now, frame_len);
        self.pending = Some(AlohaMessage {
            arrival_slot: now,
            slots_total: slots,
            slots_remaining: slots,
            phase: AlohaPhase::Fresh { chosen },
        });
    }

    fn go_stale(&mut self) {
        if let Some(msg) = &mut self.pending {
            msg.phase = AlohaPhase::Stale;
        }
    }

    /// One slot of the pending message got through; re-arm the next slot
    /// fresh, or complete the message.
    fn deliver_slot(&mut self, now: u64, frame_len: u64, counted: bool, acc: &mut Accumulator) {
        let msg = self.pending.as_mut().expect("delivery without a pending message");
        msg.slots_remaining -= 1;
        let first_slot = msg.slots_remaining + 1 == msg.slots_total;
        acc.record_delivery(self.class, first_slot, counted);
        if msg.slots_remaining == 0 {
            acc.record_completion(self.class, msg.arrival_slot, now);
            self.pending = None;
        } else {
            msg.phase =
                AlohaPhase::Fresh { chosen: pick_in_window(&mut self.backoff_rng, now, frame_len) };
        }
    }
}

/// Uniform draw in the window (now, now + frame_len].
fn pick_in_window(rng: &mut ChaCha8Rng, now: u64, frame_len: u64) -> u64 {
    now + 1 + rng.gen_range(0..frame_len)
}

// --- pure TDMA ---------------------------------------------------------------

/// Fixed round-robin: station `k` of `n` owns the `k`-th block of
/// `frame_length / n` slots in every frame (remainder slots stay idle), and
/// transmits pending message slots only there. Periodic stations feed it a
/// one-slot message per frame; random-access stations queue their usual
/// DL-slot messages. Nothing ever collides.
pub fn run_pure_tdma(scenario: &ScenarioConfig) -> Result<MetricsReport, SimError> {
    scenario.validate()?;
    let n = scenario.sensors.len();
    let frame_len = scenario.frame.frame_length as u64;
    if n as u64 > frame_len {
        return Err(SimError::Config(ConfigError::TdmaStationCount {
            stations: n,
            frame_length: scenario.frame.frame_length,
        }));
    }
    let width = frame_len / n as u64;
    let mut stations: Vec<TdmaStation> = scenario
        .sensors
        .iter()
        .enumerate()
        .map(|(i, s)| TdmaStation {
            class: s.traffic_class,
            arrival_rng: crate::rng::arrival_stream(scenario.seed, i),
            pending: None,
        })
        .collect();
    let mut error_rng = crate::rng::channel_error_stream(scenario.seed);
    let mut acc = Accumulator { warmup_slots: scenario.warmup_slots, ..Default::default() };

    for now in 0..scenario.sim_slots {
        let counted = now >= scenario.warmup_slots;
        for st in stations.iter_mut() {
            match st.class {
                TrafficClass::RandomAccess => {
                    if st.arrival_rng.gen::<f64>() < scenario.arrival_prob_per_slot {
                        st.accept_or_discard(now, scenario.frame.data_length, &mut acc);
                    }
                }
                TrafficClass::Periodic => {
                    if now % frame_len == 0 {
                        st.accept_or_discard(now, 1, &mut acc);
                    }
                }
            }
        }

        let pos = now % frame_len;
        if pos >= width * n as u64 {
            continue; // remainder slots are idle by construction
        }
        let st = &mut stations[(pos / width) as usize];
        let Some(msg) = &mut st.pending else { continue };
        msg.slots_remaining -= 1;
        if error_rng.gen::<f64>() < scenario.frame.packet_error_prob {
            acc.payload_lost += 1;
        } else {
            let first_slot = msg.slots_remaining + 1 == msg.slots_total;
            acc.record_delivery(st.class, first_slot, counted);
        }
        if msg.slots_remaining == 0 {
            acc.record_completion(st.class, msg.arrival_slot, now);
            st.pending = None;
        }
    }

    acc.in_flight = stations.iter().filter(|s| s.pending.is_some()).count() as u64;
    Ok(acc.into_report(scenario))
}

#[derive(Debug, Clone, Copy)]
struct TdmaMessage {
    arrival_slot: u64,
    slots_total: u32,
    slots_remaining: u32,
}

struct TdmaStation {
    class: TrafficClass,
    arrival_rng: ChaCha8Rng,
    pending: Option<TdmaMessage>,
}

impl TdmaStation {
    fn accept_or_discard(&mut self, now: u64, slots: u32, acc: &mut Accumulator) {
        acc.arrivals += 1;
        if self.pending.is_some() {
            acc.discarded += 1;
            return;
        }
        self.pending =
            Some(TdmaMessage { arrival_slot: now, slots_total: slots, slots_remaining: slots });
    }
}

// --- shared accounting --------------------------------------------------------

/// Counter pile shared by both baselines. The `win_*` tallies and the delay
/// pool cover the measurement window (slots at or after the warm-up); the
/// plain counters cover the whole run, mirroring the hybrid's split.
#[derive(Default)]
struct Accumulator {
    win_attempts: u64,
    win_contention_slots: u64,
    win_successes: u64,
    arrivals: u64,
    discarded: u64,
    rap_successes: u64,
    dap_delivered: u64,
    pap_delivered: u64,
    collisions: u64,
    payload_lost: u64,
    completed: u64,
    in_flight: u64,
    delay_sum: u64,
    delay_n: u64,
    warmup_slots: u64,
}

impl Accumulator {
    fn record_delivery(&mut self, class: TrafficClass, first_slot: bool, counted: bool) {
        match class {
            TrafficClass::Periodic => self.pap_delivered += 1,
            TrafficClass::RandomAccess if first_slot => self.rap_successes += 1,
            TrafficClass::RandomAccess => self.dap_delivered += 1,
        }
        if counted {
            self.win_successes += 1;
        }
    }

    fn record_completion(&mut self, class: TrafficClass, arrival_slot: u64, now: u64) {
        self.completed += 1;
        if class == TrafficClass::RandomAccess && arrival_slot >= self.warmup_slots {
            self.delay_sum += now - arrival_slot;
            self.delay_n += 1;
        }
    }

    fn into_report(self, scenario: &ScenarioConfig) -> MetricsReport {
        let counted = scenario.sim_slots - scenario.warmup_slots;
        let throughput_s =
            if counted == 0 { 0.0 } else { self.win_successes as f64 / counted as f64 };
        let offered_load_g = if self.win_contention_slots == 0 {
            0.0
        } else {
            self.win_attempts as f64 / self.win_contention_slots as f64
        };
        let mean_delay_slots =
            (self.delay_n > 0).then(|| self.delay_sum as f64 / self.delay_n as f64);
        MetricsReport {
            offered_load_g,
            throughput_s,
            mean_delay_slots,
            mean_delay_seconds: mean_delay_slots.map(|d| d * scenario.frame.slot_duration_s()),
            counters: Counters {
                arrivals: self.arrivals,
                arrivals_discarded: self.discarded,
                rap_successes: self.rap_successes,
                collisions: self.collisions,
                dap_delivered: self.dap_delivered,
                pap_delivered: self.pap_delivered,
                payload_lost: self.payload_lost,
                messages_completed: self.completed,
                messages_in_flight: self.in_flight,
                messages_dropped: 0,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset_scenario, SensorGroup};

    #[test]
    fn theory_curve_hits_the_classical_points() {
        assert_eq!(aloha_throughput_theory(0.0), 0.0);
        assert!((aloha_throughput_theory(1.0) - 0.367_879_441).abs() < 1e-9);
        assert!((aloha_throughput_theory(2.0) - 0.270_670_566).abs() < 1e-9);
    }

    #[test]
    fn theory_curve_peaks_at_unit_load() {
        let peak = aloha_throughput_theory(1.0);
        for g in [0.1, 0.5, 0.9, 1.1, 2.0, 5.0] {
            assert!(aloha_throughput_theory(g) <= peak);
        }
    }

    #[test]
    fn aloha_with_no_traffic_is_silent() {
        let scenario = preset_scenario(SensorGroup::Group3, 23, 8, 0.0, 1).unwrap();
        let report = run_pure_slotted_aloha(&scenario).unwrap();
        assert_eq!(report.throughput_s, 0.0);
        assert_eq!(report.counters.arrivals, 0);
        assert_eq!(report.offered_load_g, 0.0);
    }

    /// A lone station never collides, so its throughput equals its duty
    /// cycle: every attempt is a success and S == G exactly.
    #[test]
    fn lone_aloha_station_throughput_equals_duty_cycle() {
        let mut scenario = preset_scenario(SensorGroup::Group1, 23, 8, 1.0, 2).unwrap();
        scenario.sensors.retain(|s| s.id == 0);
        let report = run_pure_slotted_aloha(&scenario).unwrap();
        assert_eq!(report.counters.collisions, 0);
        assert!((report.throughput_s - report.offered_load_g).abs() < 1e-12);
        assert!(report.throughput_s > 0.0);
    }

    /// Saturated single-slot stations should land on the classical curve.
    #[test]
    fn saturated_aloha_sits_on_the_theory_curve() {
        let scenario = saturated_population(20, 1);
        let report = run_pure_slotted_aloha(&scenario).unwrap();
        let g = report.offered_load_g;
        assert!(g > 0.1, "population should generate real load, got G={g}");
        let gap = (report.throughput_s - aloha_throughput_theory(g)).abs();
        assert!(gap <= 0.02, "|S - Ge^-G| = {gap} at G = {g}");
    }

    #[test]
    fn aloha_periodic_stations_contend_for_their_pap() {
        let scenario = preset_scenario(SensorGroup::Group1, 23, 8, 0.0, 4).unwrap();
        let report = run_pure_slotted_aloha(&scenario).unwrap();
        let c = &report.counters;
        // 3 periodic stations, one arrival each per 40-slot frame.
        assert_eq!(c.arrivals, 3 * 2500);
        assert!(c.pap_delivered > 0);
        assert_eq!(c.arrivals, c.messages_completed + c.messages_in_flight + c.arrivals_discarded);
        // Periodic completions never enter the delay pool.
        assert_eq!(report.mean_delay_slots, None);
    }

    #[test]
    fn aloha_is_deterministic() {
        let mut scenario = preset_scenario(SensorGroup::Group2, 23, 8, 0.03, 6).unwrap();
        scenario.sim_slots = 30_000;
        let a = run_pure_slotted_aloha(&scenario).unwrap();
        let b = run_pure_slotted_aloha(&scenario).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tdma_zero_load_delivers_periodic_only() {
        let scenario = preset_scenario(SensorGroup::Group1, 23, 8, 0.0, 1).unwrap();
        let report = run_pure_tdma(&scenario).unwrap();
        // 8 stations x 5 owned slots; 3 periodic one-slot messages per frame.
        assert_eq!(report.throughput_s, 3.0 / 40.0);
        assert_eq!(report.counters.collisions, 0);
        assert_eq!(report.offered_load_g, 0.0);
    }

    #[test]
    fn lone_saturated_tdma_station_fills_the_channel() {
        let mut scenario = preset_scenario(SensorGroup::Group1, 23, 8, 1.0, 3).unwrap();
        scenario.sensors.retain(|s| s.id == 0);
        let report = run_pure_tdma(&scenario).unwrap();
        assert_eq!(report.throughput_s, 1.0);
        assert_eq!(report.counters.collisions, 0);
    }

    #[test]
    fn tdma_never_collides_across_seeds_and_loads() {
        for seed in 0..5 {
            for load in [0.01, 0.2, 0.9] {
                let mut scenario = preset_scenario(SensorGroup::Group3, 23, 8, load, seed).unwrap();
                scenario.sim_slots = 10_000;
                let report = run_pure_tdma(&scenario).unwrap();
                assert_eq!(report.counters.collisions, 0);
                let c = &report.counters;
                assert_eq!(
                    c.arrivals,
                    c.messages_completed + c.messages_in_flight + c.arrivals_discarded
                );
            }
        }
    }

    #[test]
    fn tdma_rejects_more_stations_than_slots() {
        let mut scenario = preset_scenario(SensorGroup::Group3, 23, 8, 0.1, 1).unwrap();
        let template = scenario.sensors[0];
        while scenario.sensors.len() <= 40 {
            let mut extra = template;
            extra.id = scenario.sensors.len() as u32;
            scenario.sensors.push(extra);
        }
        let err = run_pure_tdma(&scenario).unwrap_err();
        assert!(matches!(err, SimError::Config(ConfigError::TdmaStationCount { .. })));
    }

    /// Helper: n saturated random-access stations with one-slot messages.
    fn saturated_population(n: u32, seed: u64) -> ScenarioConfig {
        let mut scenario = preset_scenario(SensorGroup::Group3, 23, 8, 1.0, seed).unwrap();
        scenario.frame.data_length = 1;
        let template = scenario.sensors[0];
        scenario.sensors = (0..n)
            .map(|i| {
                let mut s = template;
                s.id = i;
                s
            })
            .collect();
        scenario
    }
}
