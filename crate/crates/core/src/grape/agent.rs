//! GRAPE-S robot agent with the optional pairwise-swap phase.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::model::{Assignment, ProblemInstance, RobotId};
use crate::reward::Move;
use crate::simnet::{ActivationCtx, Node, NodeId, ReceiveCtx};

use super::state::{GrapeState, Phase, Transition};
use super::wire::{GrapeWire, SwapKind, SwapMessage};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrapeConfig {
    /// Skip slots that already hold their full requirement.
    pub cap: bool,
    /// Run the swap phase after local quiescence.
    pub pairwise: bool,
    /// Activations without a belief change before a robot considers itself quiescent.
    pub quiescence_rounds: u32,
    /// Rebroadcast the current belief on every activation until done.
    pub heartbeat: bool,
    /// Lifetime of an outstanding swap request and of an accepted promise.
    pub swap_timeout_us: u64,
}

impl GrapeConfig {
    pub fn grape_s() -> Self {
        Self::default()
    }

    pub fn pair_grape_s() -> Self {
        Self {
            cap: true,
            pairwise: true,
            ..Self::default()
        }
    }
}

impl Default for GrapeConfig {
    fn default() -> Self {
        Self {
            cap: false,
            pairwise: false,
            quiescence_rounds: 3,
            heartbeat: true,
            swap_timeout_us: 50_000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Pending {
    swap: SwapMessage,
    expires: u64,
}

#[derive(Clone, Debug)]
pub struct GrapeAgent {
    instance: Arc<ProblemInstance>,
    config: GrapeConfig,
    state: GrapeState,
    done: bool,
    requests: Vec<SwapMessage>,
    replies: Vec<SwapMessage>,
    /// Request this robot sent and awaits an answer to.
    outstanding: Option<Pending>,
    /// Request this robot accepted; it holds still until the swap lands or expires.
    promise: Option<Pending>,
    protocol_errors: u64,
}

impl GrapeAgent {
    pub fn new(robot: RobotId, instance: Arc<ProblemInstance>, config: GrapeConfig) -> Self {
        let state = GrapeState::new(robot, &instance);
        Self {
            instance,
            config,
            state,
            done: false,
            requests: Vec::new(),
            replies: Vec::new(),
            outstanding: None,
            promise: None,
            protocol_errors: 0,
        }
    }

    /// One agent per robot, in id order.
    pub fn collective(instance: &Arc<ProblemInstance>, config: &GrapeConfig) -> Vec<Self> {
        (0..instance.robot_count() as RobotId)
            .map(|id| Self::new(id, Arc::clone(instance), config.clone()))
            .collect()
    }

    pub fn state(&self) -> &GrapeState {
        &self.state
    }

    pub fn config(&self) -> &GrapeConfig {
        &self.config
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn protocol_errors(&self) -> u64 {
        self.protocol_errors
    }

    fn expire(&mut self, now: u64) {
        if let Some(p) = self.promise {
            let (ut, us) = p.swap.unmet;
            if now >= p.expires || self.state.own_assignment() == Assignment::slot(ut, us) {
                self.promise = None;
            }
        }
        if self.outstanding.is_some_and(|p| now >= p.expires) {
            self.outstanding = None;
        }
    }

    /// Applies an accepted reply to the outstanding request, if still valid.
    fn take_replies(&mut self, now: u64) -> bool {
        let mut applied = false;
        for reply in std::mem::take(&mut self.replies) {
            let Some(pending) = self.outstanding else {
                continue;
            };
            let same = pending.swap.target == reply.target
                && pending.swap.requested == reply.requested
                && pending.swap.unmet == reply.unmet;
            if !same {
                continue;
            }
            self.outstanding = None;
            if reply.kind == (SwapKind::Reply { accept: true })
                && !applied
                && self.state.swap_applicable(&reply, &self.instance)
            {
                self.state.apply_swap(&reply, now);
                applied = true;
            }
        }
        applied
    }

    fn answer_requests(&mut self, ctx: &mut ActivationCtx<'_, GrapeWire>) {
        let mut requests = std::mem::take(&mut self.requests);
        requests.sort_by_key(|r| r.requester);
        requests.dedup();
        for req in requests {
            let accept = self.promise.is_none() && self.state.swap_applicable(&req, &self.instance);
            if accept {
                self.promise = Some(Pending {
                    swap: req,
                    expires: ctx.now() + self.config.swap_timeout_us,
                });
            }
            ctx.send(req.requester, GrapeWire::Swap(req.reply(accept)));
        }
    }
}

impl Node for GrapeAgent {
    type Msg = GrapeWire;

    fn activate(&mut self, ctx: &mut ActivationCtx<'_, GrapeWire>) {
        let now = ctx.now();
        self.expire(now);

        let mut changed = self.take_replies(now);
        if !changed && self.promise.is_none() {
            changed = matches!(
                self.state.step(&self.instance, now, self.config.cap),
                Move::Join(_)
            );
        }
        self.answer_requests(ctx);

        let quiet = self.state.note_activation();
        let transition = self.state.phase_transition(
            &self.instance,
            self.config.pairwise,
            self.config.quiescence_rounds,
        );
        let idle = self.outstanding.is_none() && self.promise.is_none();
        match transition {
            Transition::Terminate => self.done = idle,
            Transition::None | Transition::EnterPairwise => {}
        }
        if !self.done && self.state.phase() == Phase::Pairwise && self.outstanding.is_none() {
            if self.state.own_assignment().is_void() {
                match self.state.pairwise_step(&self.instance) {
                    Some(req) => {
                        self.outstanding = Some(Pending {
                            swap: req,
                            expires: now + self.config.swap_timeout_us,
                        });
                        ctx.send(req.target, GrapeWire::Swap(req));
                    }
                    None => {
                        self.done = quiet >= self.config.quiescence_rounds && self.promise.is_none()
                    }
                }
            } else if quiet >= self.config.quiescence_rounds && self.promise.is_none() {
                self.done = true;
            }
        }

        let heartbeat = self.config.heartbeat && !self.done;
        if changed || heartbeat {
            ctx.broadcast(GrapeWire::State(self.state.message()));
        }
    }

    fn receive(&mut self, _from: NodeId, msg: &GrapeWire, ctx: &mut ReceiveCtx) {
        let me = self.state.robot_id();
        match msg {
            GrapeWire::State(m) => match self.state.mutex_merge(m, &self.instance) {
                Ok(true) => {
                    self.done = false;
                    ctx.request_activation();
                }
                Ok(false) => {}
                Err(e) => {
                    log::debug!("robot {me}: dropped state message: {e}");
                    self.protocol_errors += 1;
                }
            },
            GrapeWire::Swap(s) => {
                let inbox = match s.kind {
                    SwapKind::Request if s.target == me => &mut self.requests,
                    SwapKind::Reply { .. } if s.requester == me => &mut self.replies,
                    _ => {
                        self.protocol_errors += 1;
                        return;
                    }
                };
                inbox.push(*s);
                self.done = false;
                ctx.request_activation();
            }
        }
    }

    fn is_settled(&self) -> bool {
        self.done
    }
}
