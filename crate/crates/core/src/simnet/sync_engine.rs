use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;
use std::time::Instant;

use super::{
    ActivationCtx, ByteCounter, Destination, EngineConfig, EngineMode, EngineOutcome, Node, NodeId,
    ReceiveCtx, Trigger,
};

/// Lock-step execution with instantaneous, lossless delivery.
///
/// Iteration `k` runs at simulated time `(k - 1) * period`. Every unsettled node
/// is activated in id order, then all messages sent during the iteration are
/// delivered in send order (broadcasts to receivers in id order). `converged`
/// is evaluated after each iteration. The run stops early, flagged as a
/// timeout, when every node is settled but `converged` still fails, or when the
/// iteration, simulated-time or wall-time limit is hit.
pub fn run_sync<N, F>(nodes: &mut [N], config: &EngineConfig, mut converged: F) -> EngineOutcome
where
    N: Node,
    F: FnMut(&[N]) -> bool,
{
    let start = Instant::now();
    let tick = config.period_us();
    let n = nodes.len();
    let counting = config.network.counting;
    let mut bytes = ByteCounter::default();
    let mut outbox: Vec<(NodeId, Destination, Arc<N::Msg>)> = Vec::new();
    let mut trace = DefaultHasher::new();
    let mut messages_sent = 0;
    let mut deliveries = 0;
    let mut iterations = 0;
    let mut done = false;
    let mut timeout = false;

    for k in 1..=config.max_iterations {
        let now = (k - 1) * tick;
        if now > config.sim_time_limit_us
            || start.elapsed().as_millis() as u64 > config.wall_time_limit_ms
        {
            timeout = true;
            break;
        }
        for (id, node) in nodes.iter_mut().enumerate() {
            if !node.is_settled() {
                let mut ctx = ActivationCtx::new(id as NodeId, now, Trigger::Timer, &mut outbox);
                node.activate(&mut ctx);
            }
        }
        for (from, dest, msg) in outbox.drain(..) {
            bytes.account(msg.as_ref(), dest, n, counting);
            messages_sent += 1;
            (k, from, dest_code(dest)).hash(&mut trace);
            let mut deliver = |to: usize| {
                let mut ctx = ReceiveCtx::new(to as NodeId, now);
                nodes[to].receive(from, &msg, &mut ctx);
                deliveries += 1;
            };
            match dest {
                Destination::Broadcast => (0..n)
                    .filter(|&to| to != from as usize)
                    .for_each(&mut deliver),
                Destination::To(to) => deliver(to as usize),
            }
        }
        iterations = k;
        if converged(nodes) {
            done = true;
            break;
        }
        if nodes.iter().all(Node::is_settled) {
            timeout = true;
            break;
        }
    }
    if !done && iterations == config.max_iterations {
        timeout = true;
    }

    EngineOutcome {
        mode: EngineMode::Sync,
        iterations,
        sim_time_us: iterations * tick,
        wall_ms: start.elapsed().as_millis() as u64,
        converged: done,
        timeout,
        bytes,
        messages_sent,
        deliveries,
        dropped: 0,
        trace_digest: trace.finish(),
    }
}

pub(super) fn dest_code(dest: Destination) -> u64 {
    match dest {
        Destination::Broadcast => u64::MAX,
        Destination::To(id) => u64::from(id),
    }
}
