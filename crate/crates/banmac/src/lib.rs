//! Deterministic slot-synchronous simulator for a hybrid body-area-network
//! MAC, with pure slotted-ALOHA and pure-TDMA baselines.
//!
//! The hybrid protocol divides every 40-slot frame into three regions:
//!
//! * **RAT** — slotted-ALOHA contention slots where random-access stations
//!   send the 1-slot header (RAP) of a DL-slot message;
//! * **DAT** — reserved slots granted after a successful RAP, carrying the
//!   remaining DL−1 payload slots (DAP) collision-free;
//! * **PAT** — one fixed slot per periodic station per frame (PAP).
//!
//! The RAT/DAT boundary is movable: each frame the DAT block shrinks to the
//! outstanding reservation demand and every unused nominal DAT slot serves
//! as extra contention space. The scheduler plans frames ([`scheduler`]),
//! stations walk a fresh/persistent contention machine ([`station`]), and the
//! engine ([`engine`]) steps slot by slot, producing a full audit trace
//! ([`trace`]) from which all metrics are derived ([`metrics`]).
//!
//! Everything is driven by a single root seed through named RNG substreams
//! ([`rng`]), so a scenario replays bit-for-bit and the baselines in
//! [`baselines`] see the exact same arrival pattern as the hybrid. The
//! [`sweep`] module runs (scheme × DAT × DL × load × seed) grids in parallel
//! and emits byte-stable CSV; the `banmac` binary is a thin CLI over it.

pub mod baselines;
pub mod engine;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scheduler;
pub mod station;
pub mod sweep;
pub mod trace;
