//! Message-passing realization of the auction.
//!
//! One service agent per service type and one task agent per task. Robots are
//! passive: robot `i` is hosted by the service agent of its `(i mod c)`-th
//! capability, where `c` is how many services it offers, and that agent
//! publishes its wage. Node ids put service agents first, then tasks.
//!
//! A round runs as two barriers:
//!
//! 1. Every service agent lowers wages and broadcasts its hosted robots' wages.
//! 2. Once a task has all wage updates for the round it broadcasts a bid
//!    (`Prepare`), a `Pass` when the cheapest bundle is over budget, or `Done`
//!    when it can no longer be filled.
//! 3. Once a service agent has heard from every open task it resolves the round.
//!    All service agents run the same deterministic resolution on the same
//!    bids, so their boards stay identical and awards are the single point
//!    where robots change hands. Each agent tells every bidder whose bundle
//!    touches its robots whether the bid won (`Commit`) or lost (`Abort`).
//!
//! The protocol does not retransmit. A lost message stalls the round.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::Result;
use crate::model::{Partition, ProblemInstance, RobotId, TaskId};
use crate::simnet::{ActivationCtx, Node, NodeId, ReceiveCtx};

use super::auction::{
    decrement_round, init_auction, plan_bid, resolve_round, Bid, BidPlan, SdaConfig, WageBoard,
};
use super::wire::{
    AwardKind, AwardMessage, BidKind, BidMessage, SdaMessage, WageUpdate, PURCHASED,
};

/// Static layout shared by all agents.
#[derive(Debug)]
pub struct Market {
    instance: Arc<ProblemInstance>,
    home: Vec<u16>,
    hosted: Vec<Vec<RobotId>>,
}

impl Market {
    pub fn new(instance: Arc<ProblemInstance>) -> Self {
        let mut hosted = vec![Vec::new(); instance.service_type_count()];
        let home = instance
            .robots()
            .iter()
            .map(|r| {
                let services: Vec<_> = r.services().collect();
                let s = services[r.id as usize % services.len()];
                hosted[s as usize].push(r.id);
                u16::from(s)
            })
            .collect();
        Self {
            instance,
            home,
            hosted,
        }
    }

    pub fn service_agents(&self) -> usize {
        self.hosted.len()
    }

    pub fn home(&self, robot: RobotId) -> u16 {
        self.home[robot as usize]
    }

    pub fn hosted(&self, service: u16) -> &[RobotId] {
        &self.hosted[service as usize]
    }

    pub fn task_node(&self, task: TaskId) -> NodeId {
        (self.service_agents() + task as usize) as NodeId
    }
}

fn wire_round(round: u64) -> u16 {
    round as u16
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SellerPhase {
    Start,
    Collecting,
    Finished,
}

#[derive(Debug)]
pub struct ServiceAgent {
    market: Arc<Market>,
    service: u16,
    schedule: super::auction::DecrementSchedule,
    board: WageBoard,
    round: u64,
    open: BTreeSet<TaskId>,
    reports: BTreeMap<TaskId, Option<Bid>>,
    phase: SellerPhase,
}

impl ServiceAgent {
    pub fn board(&self) -> &WageBoard {
        &self.board
    }

    pub fn rounds(&self) -> u64 {
        self.round
    }

    pub fn is_finished(&self) -> bool {
        self.phase == SellerPhase::Finished
    }

    fn all_reported(&self) -> bool {
        self.open.iter().all(|t| self.reports.contains_key(t))
    }

    fn start_round(&mut self, ctx: &mut ActivationCtx<'_, SdaMessage>) {
        decrement_round(&mut self.board, self.schedule);
        self.round += 1;
        self.reports.clear();
        let wages = self
            .market
            .hosted(self.service)
            .iter()
            .map(|&r| {
                if self.board.is_purchased(r) {
                    PURCHASED
                } else {
                    self.board.wage(r)
                }
            })
            .collect();
        ctx.broadcast(SdaMessage::Wages(WageUpdate {
            service: self.service,
            round: wire_round(self.round),
            wages,
        }));
        self.phase = SellerPhase::Collecting;
    }

    fn resolve(&mut self, ctx: &mut ActivationCtx<'_, SdaMessage>) {
        let bids: Vec<Bid> = self.reports.values().flatten().cloned().collect();
        let winners: BTreeSet<TaskId> = resolve_round(&bids, &mut self.board).into_iter().collect();
        for bid in &bids {
            let mine: Vec<_> = bid
                .bundle
                .iter()
                .copied()
                .filter(|&(r, _)| self.market.home(r) == self.service)
                .collect();
            if mine.is_empty() {
                continue;
            }
            let won = winners.contains(&bid.task);
            ctx.send(
                self.market.task_node(bid.task),
                SdaMessage::Award(AwardMessage {
                    task: bid.task,
                    round: wire_round(self.round),
                    kind: if won {
                        AwardKind::Commit
                    } else {
                        AwardKind::Abort
                    },
                    entries: if won { mine } else { Vec::new() },
                }),
            );
        }
        self.open.retain(|t| !winners.contains(t));
    }
}

#[derive(Clone, Debug)]
struct Awaiting {
    round: u16,
    agents: BTreeSet<u16>,
    answered: BTreeSet<u16>,
    aborted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BuyerStatus {
    Open,
    Filled,
    Done,
}

#[derive(Debug)]
pub struct TaskAgent {
    market: Arc<Market>,
    task: TaskId,
    epsilon: u32,
    round: u16,
    views: BTreeMap<u16, Vec<Option<Vec<u32>>>>,
    awaiting: Option<Awaiting>,
    status: BuyerStatus,
}

impl TaskAgent {
    pub fn is_filled(&self) -> bool {
        self.status == BuyerStatus::Filled
    }

    fn view_complete(&self) -> bool {
        self.views
            .get(&self.round)
            .is_some_and(|v| v.iter().all(Option::is_some))
    }

    fn can_progress(&self) -> bool {
        if self.status != BuyerStatus::Open {
            return false;
        }
        match &self.awaiting {
            Some(a) => a.answered.len() == a.agents.len(),
            None => self.view_complete(),
        }
    }

    fn board_view(&self, reports: &[Option<Vec<u32>>]) -> WageBoard {
        let n = self.market.instance.robot_count();
        let mut wages = vec![0; n];
        let mut purchased = vec![false; n];
        for (service, report) in reports.iter().enumerate() {
            let hosted = self.market.hosted(service as u16);
            for (&robot, &w) in hosted.iter().zip(report.iter().flatten()) {
                if w == PURCHASED {
                    purchased[robot as usize] = true;
                } else {
                    wages[robot as usize] = w;
                }
            }
        }
        WageBoard::from_wages(wages, purchased, self.epsilon)
    }

    fn bid_round(&mut self, ctx: &mut ActivationCtx<'_, SdaMessage>) {
        let reports = self.views.remove(&self.round).unwrap_or_default();
        let board = self.board_view(&reports);
        let round = self.round;
        let header = |kind, entries| {
            SdaMessage::Bid(BidMessage {
                task: self.task,
                round,
                kind,
                entries,
            })
        };
        match plan_bid(self.task, &board, &self.market.instance) {
            BidPlan::Bid(bid) => {
                let entries = bid
                    .bundle
                    .iter()
                    .map(|&(r, s)| (r, s, board.wage(r) as u16))
                    .collect();
                ctx.broadcast(header(BidKind::Prepare, entries));
                self.awaiting = Some(Awaiting {
                    round,
                    agents: bid
                        .bundle
                        .iter()
                        .map(|&(r, _)| self.market.home(r))
                        .collect(),
                    answered: BTreeSet::new(),
                    aborted: false,
                });
            }
            BidPlan::OverBudget { .. } => {
                ctx.broadcast(header(BidKind::Pass, Vec::new()));
                self.round = self.round.wrapping_add(1);
            }
            BidPlan::Infeasible | BidPlan::Filled => {
                ctx.broadcast(SdaMessage::Award(AwardMessage {
                    task: self.task,
                    round,
                    kind: AwardKind::Done,
                    entries: Vec::new(),
                }));
                self.status = BuyerStatus::Done;
            }
        }
    }
}

/// A node in the auction network.
#[derive(Debug)]
pub enum SdaNode {
    Service(ServiceAgent),
    Task(TaskAgent),
}

/// Builds the service agents followed by the task agents.
pub fn build_market(instance: &Arc<ProblemInstance>, config: &SdaConfig) -> Result<Vec<SdaNode>> {
    let board = init_auction(instance, config.epsilon)?;
    let market = Arc::new(Market::new(Arc::clone(instance)));
    let tasks: BTreeSet<TaskId> = (0..instance.task_count() as TaskId).collect();
    let mut nodes = Vec::with_capacity(market.service_agents() + instance.task_count());
    for service in 0..market.service_agents() {
        nodes.push(SdaNode::Service(ServiceAgent {
            market: Arc::clone(&market),
            service: service as u16,
            schedule: config.schedule,
            board: board.clone(),
            round: 0,
            open: tasks.clone(),
            reports: BTreeMap::new(),
            phase: SellerPhase::Start,
        }));
    }
    for &task in &tasks {
        nodes.push(SdaNode::Task(TaskAgent {
            market: Arc::clone(&market),
            task,
            epsilon: config.epsilon,
            round: 1,
            views: BTreeMap::new(),
            awaiting: None,
            status: BuyerStatus::Open,
        }));
    }
    Ok(nodes)
}

/// True once every service agent has closed the auction.
pub fn auction_complete(nodes: &[SdaNode]) -> bool {
    nodes.iter().all(|n| match n {
        SdaNode::Service(s) => s.is_finished(),
        SdaNode::Task(_) => true,
    })
}

/// The first service agent's board as a partition, and its round count.
pub fn market_outcome(nodes: &[SdaNode]) -> (Partition, u64) {
    match nodes.first() {
        Some(SdaNode::Service(s)) => (s.board.partition(), s.round),
        _ => (Partition::all_void(0), 0),
    }
}

impl Node for SdaNode {
    type Msg = SdaMessage;

    fn activate(&mut self, ctx: &mut ActivationCtx<'_, SdaMessage>) {
        match self {
            SdaNode::Service(s) => match s.phase {
                SellerPhase::Start => s.start_round(ctx),
                SellerPhase::Collecting if s.all_reported() => {
                    s.resolve(ctx);
                    if s.open.is_empty() {
                        s.phase = SellerPhase::Finished;
                    } else {
                        s.start_round(ctx);
                    }
                }
                SellerPhase::Collecting | SellerPhase::Finished => {}
            },
            SdaNode::Task(t) => {
                while t.can_progress() {
                    if let Some(a) = t.awaiting.take() {
                        if a.aborted {
                            t.round = a.round.wrapping_add(1);
                        } else {
                            t.status = BuyerStatus::Filled;
                        }
                    } else {
                        t.bid_round(ctx);
                    }
                }
            }
        }
    }

    fn receive(&mut self, from: NodeId, msg: &SdaMessage, ctx: &mut ReceiveCtx) {
        match (self, msg) {
            (SdaNode::Service(s), SdaMessage::Bid(b)) => {
                if s.phase != SellerPhase::Collecting
                    || b.round != wire_round(s.round)
                    || !s.open.contains(&b.task)
                {
                    return;
                }
                let report = match b.kind {
                    BidKind::Prepare => Some(Bid {
                        task: b.task,
                        bundle: b.entries.iter().map(|&(r, sv, _)| (r, sv)).collect(),
                        total: b.entries.iter().map(|&(_, _, a)| u64::from(a)).sum(),
                    }),
                    BidKind::Pass => None,
                };
                s.reports.insert(b.task, report);
                if s.all_reported() {
                    ctx.request_activation();
                }
            }
            (SdaNode::Service(s), SdaMessage::Award(a)) if a.kind == AwardKind::Done => {
                s.open.remove(&a.task);
                s.reports.remove(&a.task);
                if s.phase == SellerPhase::Collecting && s.all_reported() {
                    ctx.request_activation();
                }
            }
            (SdaNode::Task(t), SdaMessage::Wages(w)) => {
                if t.status != BuyerStatus::Open || w.round.wrapping_sub(t.round) >= u16::MAX / 2 {
                    return;
                }
                let agents = t.market.service_agents();
                let view = t.views.entry(w.round).or_insert_with(|| vec![None; agents]);
                if let Some(slot) = view.get_mut(w.service as usize) {
                    *slot = Some(w.wages.clone());
                }
                if t.can_progress() {
                    ctx.request_activation();
                }
            }
            (SdaNode::Task(t), SdaMessage::Award(a)) if a.task == t.task => {
                let Some(wait) = t.awaiting.as_mut() else {
                    return;
                };
                let agent = from as u16;
                if a.round != wait.round || !wait.agents.contains(&agent) {
                    return;
                }
                wait.answered.insert(agent);
                wait.aborted |= a.kind != AwardKind::Commit;
                if t.can_progress() {
                    ctx.request_activation();
                }
            }
            _ => {}
        }
    }

    fn is_settled(&self) -> bool {
        match self {
            SdaNode::Service(s) => match s.phase {
                SellerPhase::Start => false,
                SellerPhase::Collecting => !s.all_reported(),
                SellerPhase::Finished => true,
            },
            SdaNode::Task(t) => !t.can_progress(),
        }
    }
}
