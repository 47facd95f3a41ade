//! Simulated networks for message-passing agents.
//!
//! Agents implement [`Node`]. The same node code runs under the lock-step
//! [`run_sync`] engine and the discrete-event [`run_async`] engine. Nodes emit
//! messages only while activated; `receive` may update state and ask for an
//! activation but never sends. This keeps both engines free to decide when a
//! node gets to speak.

mod accounting;
mod async_engine;
mod config;
mod sync_engine;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use accounting::ByteCounter;
pub use async_engine::run_async;
pub use config::{CountingMode, EngineConfig, EngineMode, LatencyModel, NetworkConfig, Topology};
pub use sync_engine::run_sync;

pub type NodeId = u32;

/// Accounting bucket of a message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageClass {
    Grape,
    Swap,
    Wage,
    Bid,
    Award,
}

impl MessageClass {
    pub const ALL: [MessageClass; 5] =
        [Self::Grape, Self::Swap, Self::Wage, Self::Bid, Self::Award];

    pub fn name(self) -> &'static str {
        match self {
            Self::Grape => "grape",
            Self::Swap => "swap",
            Self::Wage => "wage",
            Self::Bid => "bid",
            Self::Award => "award",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

pub trait Message {
    fn class(&self) -> MessageClass;
    /// Encoded size in bytes.
    fn wire_len(&self) -> usize;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Destination {
    /// Every node except the sender.
    Broadcast,
    To(NodeId),
}

/// What woke a node up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trigger {
    Timer,
    Arrival,
}

pub struct ActivationCtx<'a, M> {
    node: NodeId,
    now: u64,
    trigger: Trigger,
    outbox: &'a mut Vec<(NodeId, Destination, Arc<M>)>,
}

impl<'a, M> ActivationCtx<'a, M> {
    pub(crate) fn new(
        node: NodeId,
        now: u64,
        trigger: Trigger,
        outbox: &'a mut Vec<(NodeId, Destination, Arc<M>)>,
    ) -> Self {
        Self {
            node,
            now,
            trigger,
            outbox,
        }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    /// Simulated time in microseconds.
    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn trigger(&self) -> Trigger {
        self.trigger
    }

    pub fn broadcast(&mut self, msg: M) {
        self.outbox
            .push((self.node, Destination::Broadcast, Arc::new(msg)));
    }

    pub fn send(&mut self, to: NodeId, msg: M) {
        self.outbox
            .push((self.node, Destination::To(to), Arc::new(msg)));
    }
}

pub struct ReceiveCtx {
    node: NodeId,
    now: u64,
    wants_activation: bool,
}

impl ReceiveCtx {
    pub(crate) fn new(node: NodeId, now: u64) -> Self {
        Self {
            node,
            now,
            wants_activation: false,
        }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Asks to be activated soon. The sync engine ignores this: every unsettled
    /// node is activated each iteration anyway.
    pub fn request_activation(&mut self) {
        self.wants_activation = true;
    }

    pub(crate) fn wants_activation(&self) -> bool {
        self.wants_activation
    }
}

pub trait Node {
    type Msg: Message;

    fn activate(&mut self, ctx: &mut ActivationCtx<'_, Self::Msg>);

    fn receive(&mut self, from: NodeId, msg: &Self::Msg, ctx: &mut ReceiveCtx);

    /// A settled node has nothing to do until a message arrives.
    fn is_settled(&self) -> bool;
}

/// What an engine run produced, independent of the algorithm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineOutcome {
    pub mode: EngineMode,
    /// Sync: iterations executed. Async: timer periods elapsed.
    pub iterations: u64,
    pub sim_time_us: u64,
    pub wall_ms: u64,
    pub converged: bool,
    pub timeout: bool,
    pub bytes: ByteCounter,
    pub messages_sent: u64,
    pub deliveries: u64,
    pub dropped: u64,
    /// Digest of the processed event sequence.
    pub trace_digest: u64,
}
