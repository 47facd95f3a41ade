use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sync_engine::dest_code;
use super::{
    ActivationCtx, ByteCounter, Destination, EngineConfig, EngineMode, EngineOutcome, Node, NodeId,
    ReceiveCtx, Trigger,
};

// Same-time events run timers first (by node id), then arrival activations
// (by node id), then deliveries in send order.
const LANE_TIMER: u8 = 0;
const LANE_ARRIVAL: u8 = 1;
const LANE_DELIVERY: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Key {
    time: u64,
    lane: u8,
    tie: u64,
}

enum Event<M> {
    Activate(NodeId),
    Deliver {
        from: NodeId,
        to: NodeId,
        msg: Arc<M>,
    },
}

struct Entry<M> {
    key: Key,
    event: Event<M>,
}

impl<M> PartialEq for Entry<M> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl<M> Eq for Entry<M> {}

impl<M> PartialOrd for Entry<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<M> Ord for Entry<M> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

struct Scheduler<M> {
    queue: BinaryHeap<Reverse<Entry<M>>>,
    seq: u64,
    period: u64,
    phase: Vec<u64>,
    timer_armed: Vec<bool>,
    arrival_pending: Vec<bool>,
}

impl<M> Scheduler<M> {
    fn push(&mut self, key: Key, event: Event<M>) {
        self.queue.push(Reverse(Entry { key, event }));
    }

    /// Arms `node`'s timer at its next tick strictly after `now`.
    fn arm_after(&mut self, node: usize, now: u64) {
        let phase = self.phase[node];
        let next = if now < phase {
            phase
        } else {
            phase + ((now - phase) / self.period + 1) * self.period
        };
        self.arm_at(node, next);
    }

    fn arm_at(&mut self, node: usize, time: u64) {
        self.timer_armed[node] = true;
        self.push(
            Key {
                time,
                lane: LANE_TIMER,
                tie: node as u64,
            },
            Event::Activate(node as NodeId),
        );
    }
}

/// Discrete-event execution with per-delivery latency and loss.
///
/// Each unsettled node has a periodic timer (period from the config, random
/// phase unless serialized). A settled node's timer lapses and re-arms once the
/// node becomes unsettled again. Outside serialized mode a `receive` that asks
/// for activation schedules one at the current time. The run ends when the
/// event queue drains; `converged` is then evaluated once, and a run that drained
/// without converging is a stall, reported as a timeout at the time limit. Hitting
/// the simulated or wall-clock limit is also a timeout.
pub fn run_async<N, F>(nodes: &mut [N], config: &EngineConfig, mut converged: F) -> EngineOutcome
where
    N: Node,
    F: FnMut(&[N]) -> bool,
{
    let start = Instant::now();
    let n = nodes.len();
    let net = &config.network;
    let period = config.period_us();
    let mut rng = ChaCha8Rng::seed_from_u64(net.seed);
    let phase: Vec<u64> = (0..n)
        .map(|_| {
            if config.serialized {
                0
            } else {
                rng.random_range(0..period)
            }
        })
        .collect();
    let mut sched: Scheduler<N::Msg> = Scheduler {
        queue: BinaryHeap::new(),
        seq: 0,
        period,
        phase,
        timer_armed: vec![false; n],
        arrival_pending: vec![false; n],
    };
    for (id, node) in nodes.iter().enumerate() {
        if !node.is_settled() {
            let at = sched.phase[id];
            sched.arm_at(id, at);
        }
    }

    let mut bytes = ByteCounter::default();
    let mut outbox: Vec<(NodeId, Destination, Arc<N::Msg>)> = Vec::new();
    let mut trace = DefaultHasher::new();
    let mut messages_sent = 0;
    let mut deliveries = 0;
    let mut dropped = 0;
    let mut last_time = 0;
    let mut limit_hit = false;
    let mut processed: u64 = 0;

    while let Some(Reverse(Entry { key, event })) = sched.queue.pop() {
        if key.time > config.sim_time_limit_us {
            limit_hit = true;
            break;
        }
        processed += 1;
        if processed.is_multiple_of(4096) && start.elapsed().as_millis() as u64 > config.wall_time_limit_ms {
            limit_hit = true;
            break;
        }
        let now = key.time;
        last_time = now;
        key.hash(&mut trace);

        match event {
            Event::Activate(node) => {
                let id = node as usize;
                let trigger = if key.lane == LANE_TIMER {
                    sched.timer_armed[id] = false;
                    if nodes[id].is_settled() {
                        continue;
                    }
                    Trigger::Timer
                } else {
                    sched.arrival_pending[id] = false;
                    Trigger::Arrival
                };
                let mut ctx = ActivationCtx::new(node, now, trigger, &mut outbox);
                nodes[id].activate(&mut ctx);
                if !nodes[id].is_settled() && !sched.timer_armed[id] {
                    sched.arm_after(id, now);
                }
                for (from, dest, msg) in outbox.drain(..) {
                    bytes.account(msg.as_ref(), dest, n, net.counting);
                    messages_sent += 1;
                    (from, dest_code(dest)).hash(&mut trace);
                    let mut enqueue = |to: usize| {
                        let latency = rng.random_range(net.latency.lo_us..=net.latency.hi_us);
                        if net.loss > 0.0 && rng.random_bool(net.loss) {
                            dropped += 1;
                            return;
                        }
                        sched.seq += 1;
                        let key = Key {
                            time: now + latency,
                            lane: LANE_DELIVERY,
                            tie: sched.seq,
                        };
                        sched.push(
                            key,
                            Event::Deliver {
                                from,
                                to: to as NodeId,
                                msg: Arc::clone(&msg),
                            },
                        );
                    };
                    match dest {
                        Destination::Broadcast => (0..n)
                            .filter(|&to| to != from as usize)
                            .for_each(&mut enqueue),
                        Destination::To(to) => enqueue(to as usize),
                    }
                }
            }
            Event::Deliver { from, to, msg } => {
                let id = to as usize;
                deliveries += 1;
                let mut ctx = ReceiveCtx::new(to, now);
                nodes[id].receive(from, &msg, &mut ctx);
                if ctx.wants_activation() && !config.serialized && !sched.arrival_pending[id] {
                    sched.arrival_pending[id] = true;
                    sched.push(
                        Key {
                            time: now,
                            lane: LANE_ARRIVAL,
                            tie: u64::from(to),
                        },
                        Event::Activate(to),
                    );
                }
                if !nodes[id].is_settled() && !sched.timer_armed[id] {
                    sched.arm_after(id, now);
                }
            }
        }
    }

    let done = !limit_hit && converged(nodes);
    let sim_time_us = if done {
        last_time
    } else {
        config.sim_time_limit_us
    };
    EngineOutcome {
        mode: EngineMode::Async,
        iterations: sim_time_us.div_ceil(period),
        sim_time_us,
        wall_ms: start.elapsed().as_millis() as u64,
        converged: done,
        timeout: !done,
        bytes,
        messages_sent,
        deliveries,
        dropped,
        trace_digest: trace.finish(),
    }
}
