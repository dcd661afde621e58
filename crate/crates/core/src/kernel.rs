//! Minimal deterministic discrete-event engine.
//!
//! The engine owns a simulation clock, an event calendar ordered by
//! `(time, seq)`, and a set of counted resource pools. An event carries an
//! opaque activation (a boxed `FnOnce`) that is invoked when the clock
//! reaches the event's time; an activation may schedule further events and
//! operate on pools. Suspension is expressed in continuation style: a
//! blocked [`Simulation::acquire`] stores its continuation in the pool's
//! FIFO queue and [`Simulation::release`] invokes it when the request fits.
//!
//! Pools grant batch requests atomically (all units or none) and never let a
//! later request bypass the queue head, so a large request cannot starve
//! behind a stream of small ones. Every pool-level change is appended to a
//! per-pool timeline for utilization reporting.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::ops::{Add, Sub};

use thiserror::Error;

/// A point on the simulation clock, in abstract units of time.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    /// Wraps a finite, non-negative instant.
    pub fn new(value: f64) -> SimTime {
        assert!(
            value.is_finite() && value >= 0.0,
            "simulation time must be finite and non-negative, got {value}"
        );
        SimTime(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Add<f64> for SimTime {
    type Output = SimTime;

    fn add(self, delay: f64) -> SimTime {
        SimTime(self.0 + delay)
    }
}

impl Sub for SimTime {
    type Output = f64;

    fn sub(self, earlier: SimTime) -> f64 {
        self.0 - earlier.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Identifier of a scheduled event: its firing time and calendar sequence
/// number. Sequence numbers are unique per run and break ties between
/// simultaneous events in schedule order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventId {
    pub time: SimTime,
    pub seq: u64,
}

/// Handle to a resource pool registered with [`Simulation::add_pool`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoolId(usize);

/// One entry of a pool's utilization timeline, recorded at every change of
/// `in_use` or queue length. Available units are `capacity - in_use`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoolLevel {
    pub time: SimTime,
    pub in_use: u32,
    pub queue_len: u32,
}

/// Contract violations raised by the engine.
#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("event delay must be finite and non-negative, got {0}")]
    InvalidDelay(f64),
    #[error("pool '{pool}': capacity must be positive")]
    ZeroCapacity { pool: String },
    #[error("pool '{pool}': request quantity must be positive")]
    ZeroQuantity { pool: String },
    #[error(
        "pool '{pool}': request for {quantity} units exceeds capacity {capacity} and could never be granted"
    )]
    QuantityExceedsCapacity {
        pool: String,
        quantity: u32,
        capacity: u32,
    },
    #[error("pool '{pool}': cannot release {quantity} units, only {in_use} in use")]
    ReleaseExceedsInUse {
        pool: String,
        quantity: u32,
        in_use: u32,
    },
}

type Activation = Box<dyn FnOnce(&mut Simulation)>;
type GrantFn = Box<dyn FnOnce(&mut Simulation, f64)>;

struct CalendarEntry {
    time: SimTime,
    seq: u64,
    activation: Activation,
}

impl PartialEq for CalendarEntry {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}

impl Eq for CalendarEntry {}

impl PartialOrd for CalendarEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CalendarEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Times are always finite, so total_cmp agrees with the numeric order.
        self.time
            .0
            .total_cmp(&other.time.0)
            .then(self.seq.cmp(&other.seq))
    }
}

struct PendingRequest {
    quantity: u32,
    requested_at: SimTime,
    grant: GrantFn,
}

struct Pool {
    name: String,
    capacity: u32,
    in_use: u32,
    queue: VecDeque<PendingRequest>,
    timeline: Vec<PoolLevel>,
}

impl Pool {
    fn available(&self) -> u32 {
        self.capacity - self.in_use
    }

    fn record(&mut self, time: SimTime) {
        self.timeline.push(PoolLevel {
            time,
            in_use: self.in_use,
            queue_len: self.queue.len() as u32,
        });
    }
}

/// A single-threaded, run-to-completion discrete-event simulation.
///
/// ```
/// use waterfall_sim::Simulation;
///
/// let mut sim = Simulation::new();
/// let pool = sim.add_pool("staff", 2).unwrap();
/// sim.acquire(pool, 2, move |sim, wait| {
///     assert_eq!(wait, 0.0);
///     sim.schedule(4.0, move |sim| sim.release(pool, 2).unwrap()).unwrap();
/// })
/// .unwrap();
/// assert_eq!(sim.run().value(), 4.0);
/// assert_eq!(sim.pool_in_use(pool), 0);
/// ```
pub struct Simulation {
    clock: SimTime,
    next_seq: u64,
    calendar: BinaryHeap<Reverse<CalendarEntry>>,
    pools: Vec<Pool>,
    events_processed: u64,
}

impl Default for Simulation {
    fn default() -> Self {
        Self::new()
    }
}

impl Simulation {
    pub fn new() -> Simulation {
        Simulation {
            clock: SimTime::ZERO,
            next_seq: 0,
            calendar: BinaryHeap::new(),
            pools: Vec::new(),
            events_processed: 0,
        }
    }

    /// Current value of the simulation clock.
    pub fn now(&self) -> SimTime {
        self.clock
    }

    /// Number of events processed so far.
    pub fn events_processed(&self) -> u64 {
        self.events_processed
    }

    /// Schedules `activation` to run `delay` time units from now. Events at
    /// equal times fire in schedule order.
    pub fn schedule<F>(&mut self, delay: f64, activation: F) -> Result<EventId, KernelError>
    where
        F: FnOnce(&mut Simulation) + 'static,
    {
        if !delay.is_finite() || delay < 0.0 {
            return Err(KernelError::InvalidDelay(delay));
        }
        let time = self.clock + delay;
        let seq = self.next_seq;
        self.next_seq += 1;
        self.calendar.push(Reverse(CalendarEntry {
            time,
            seq,
            activation: Box::new(activation),
        }));
        Ok(EventId { time, seq })
    }

    /// Processes events in `(time, seq)` order until the calendar is empty
    /// and returns the final clock value.
    pub fn run(&mut self) -> SimTime {
        while let Some(Reverse(entry)) = self.calendar.pop() {
            debug_assert!(entry.time >= self.clock, "clock must never decrease");
            self.clock = entry.time;
            self.events_processed += 1;
            (entry.activation)(self);
        }
        self.clock
    }

    /// Registers a counted pool with the given capacity.
    pub fn add_pool(&mut self, name: impl Into<String>, capacity: u32) -> Result<PoolId, KernelError> {
        let name = name.into();
        if capacity == 0 {
            return Err(KernelError::ZeroCapacity { pool: name });
        }
        let mut pool = Pool {
            name,
            capacity,
            in_use: 0,
            queue: VecDeque::new(),
            timeline: Vec::new(),
        };
        pool.record(self.clock);
        self.pools.push(pool);
        Ok(PoolId(self.pools.len() - 1))
    }

    pub fn pool_name(&self, id: PoolId) -> &str {
        &self.pools[id.0].name
    }

    pub fn pool_capacity(&self, id: PoolId) -> u32 {
        self.pools[id.0].capacity
    }

    pub fn pool_in_use(&self, id: PoolId) -> u32 {
        self.pools[id.0].in_use
    }

    pub fn pool_queue_len(&self, id: PoolId) -> usize {
        self.pools[id.0].queue.len()
    }

    /// The pool's recorded level changes, in chronological order.
    pub fn pool_timeline(&self, id: PoolId) -> &[PoolLevel] {
        &self.pools[id.0].timeline
    }

    /// Consumes the simulation and returns every pool's timeline, in pool
    /// registration order.
    pub fn into_pool_timelines(self) -> Vec<Vec<PoolLevel>> {
        self.pools.into_iter().map(|p| p.timeline).collect()
    }

    /// Requests `quantity` units from the pool as one atomic batch.
    ///
    /// If the batch fits and nobody is queued, it is granted on the spot and
    /// `on_grant` runs immediately with a wait of exactly `0.0`. Otherwise
    /// the request joins the tail of the pool's FIFO queue and `on_grant`
    /// runs at grant time with the elapsed wait. A request larger than the
    /// pool's capacity is rejected up front instead of deadlocking.
    pub fn acquire<F>(&mut self, id: PoolId, quantity: u32, on_grant: F) -> Result<(), KernelError>
    where
        F: FnOnce(&mut Simulation, f64) + 'static,
    {
        let now = self.clock;
        let pool = &mut self.pools[id.0];
        if quantity == 0 {
            return Err(KernelError::ZeroQuantity {
                pool: pool.name.clone(),
            });
        }
        if quantity > pool.capacity {
            return Err(KernelError::QuantityExceedsCapacity {
                pool: pool.name.clone(),
                quantity,
                capacity: pool.capacity,
            });
        }
        if pool.queue.is_empty() && pool.available() >= quantity {
            pool.in_use += quantity;
            pool.record(now);
            on_grant(self, 0.0);
        } else {
            pool.queue.push_back(PendingRequest {
                quantity,
                requested_at: now,
                grant: Box::new(on_grant),
            });
            pool.record(now);
        }
        Ok(())
    }

    /// Returns `quantity` units to the pool, then grants queued requests
    /// from the head while they fit.
    pub fn release(&mut self, id: PoolId, quantity: u32) -> Result<(), KernelError> {
        let now = self.clock;
        let mut grants: Vec<(GrantFn, f64)> = Vec::new();
        {
            let pool = &mut self.pools[id.0];
            if quantity == 0 {
                return Err(KernelError::ZeroQuantity {
                    pool: pool.name.clone(),
                });
            }
            if quantity > pool.in_use {
                return Err(KernelError::ReleaseExceedsInUse {
                    pool: pool.name.clone(),
                    quantity,
                    in_use: pool.in_use,
                });
            }
            pool.in_use -= quantity;
            while let Some(head) = pool.queue.front() {
                if head.quantity > pool.available() {
                    break;
                }
                let request = pool.queue.pop_front().expect("head exists");
                pool.in_use += request.quantity;
                grants.push((request.grant, now - request.requested_at));
            }
            pool.record(now);
        }
        for (grant, wait) in grants {
            grant(self, wait);
        }
        Ok(())
    }
}
