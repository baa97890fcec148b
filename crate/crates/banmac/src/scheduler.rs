//! Frame planning: the movable RAT/DAT boundary and the reservation queue.
//!
//! At every frame boundary the scheduler sizes the DAT block from the queue
//! demand known at that moment, `min(dat_nominal, total dap_remaining)`, and
//! grants the block's slots FIFO to queue entries. Nominal DAT slots not
//! backed by demand are contention (RAT) slots for that frame. RAP successes
//! that happen inside a frame are enqueued immediately; since every planned
//! DAT slot already has an owner, such a reservation is first served by the
//! next frame's block. The PAT tail holds one slot per periodic station, in
//! roster order; with no periodic stations the tail is empty and those slots
//! are contention slots too.

use crate::model::{FrameConfig, SlotKind, SlotPlan, StationId};
use std::collections::VecDeque;

/// One granted-but-unscheduled reservation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReservationEntry {
    pub station: StationId,
    pub dap_remaining: u32,
}

/// FIFO queue of reservations awaiting DAT slots. A partially served entry
/// stays at the head until its last slot is granted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReservationQueue {
    entries: VecDeque<ReservationEntry>,
}

/// A station may hold at most one live reservation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("station {station} already holds a reservation")]
pub struct DuplicateReservation {
    pub station: StationId,
}

impl ReservationQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total DAP slots still owed to queued reservations.
    pub fn demand(&self) -> u64 {
        self.entries.iter().map(|e| u64::from(e.dap_remaining)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = &ReservationEntry> {
        self.entries.iter()
    }
}

/// Appends a reservation for `dap_len` payload slots. A zero-length
/// reservation (a pure-RAP message) is a no-op.
pub fn enqueue_reservation(
    queue: &mut ReservationQueue,
    station: StationId,
    dap_len: u32,
) -> Result<(), DuplicateReservation> {
    if queue.entries.iter().any(|e| e.station == station) {
        return Err(DuplicateReservation { station });
    }
    if dap_len == 0 {
        return Ok(());
    }
    queue.entries.push_back(ReservationEntry { station, dap_remaining: dap_len });
    Ok(())
}

/// Plans one frame from the queue state at its boundary and consumes the
/// granted demand. Layout is `[RAT | DAT | PAT]` with
/// `rat + dat + pat == frame_length` always.
pub fn plan_frame(
    config: &FrameConfig,
    periodic: &[StationId],
    mut queue: ReservationQueue,
    frame_index: u64,
) -> (SlotPlan, ReservationQueue) {
    debug_assert!(periodic.len() as u32 <= config.pat_len);
    let pat_len = periodic.len() as u32;
    let dat_len = u64::from(config.dat_nominal).min(queue.demand()) as u32;
    let rat_len = config.frame_length - dat_len - pat_len;

    let mut slots = Vec::with_capacity(config.frame_length as usize);
    slots.extend(std::iter::repeat_n(SlotKind::Rat, rat_len as usize));

    let mut granted = 0;
    while granted < dat_len {
        let head = queue.entries.front_mut().expect("demand covers the DAT block");
        let take = head.dap_remaining.min(dat_len - granted);
        slots.extend(std::iter::repeat_n(SlotKind::Dat(head.station), take as usize));
        head.dap_remaining -= take;
        granted += take;
        if head.dap_remaining == 0 {
            queue.entries.pop_front();
        }
    }

    slots.extend(periodic.iter().map(|&id| SlotKind::Pat(id)));
    (SlotPlan { frame_index, slots }, queue)
}
