//! Descending-wage auction: boards, bids, awards and a centralized reference run.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, Partition, ProblemInstance, RobotId, ServiceId, TaskId};

use super::matching::min_cost_assignment;

/// Which unpurchased robots lose `epsilon` each round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecrementSchedule {
    /// Every robot tied at the highest unpurchased wage.
    #[default]
    AllTiedAtMax,
    /// Only the lowest-id robot at the highest unpurchased wage.
    SingleHighest,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdaConfig {
    pub epsilon: u32,
    pub schedule: DecrementSchedule,
}

impl Default for SdaConfig {
    fn default() -> Self {
        Self {
            epsilon: 1,
            schedule: DecrementSchedule::AllTiedAtMax,
        }
    }
}

/// Wages, purchase flags and owners of every robot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WageBoard {
    wages: Vec<u32>,
    purchased: Vec<bool>,
    owner: Vec<Option<(TaskId, ServiceId)>>,
    epsilon: u32,
}

impl WageBoard {
    pub(crate) fn from_wages(wages: Vec<u32>, purchased: Vec<bool>, epsilon: u32) -> Self {
        let owner = vec![None; wages.len()];
        Self {
            wages,
            purchased,
            owner,
            epsilon,
        }
    }

    pub fn len(&self) -> usize {
        self.wages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wages.is_empty()
    }

    pub fn epsilon(&self) -> u32 {
        self.epsilon
    }

    pub fn wage(&self, robot: RobotId) -> u32 {
        self.wages[robot as usize]
    }

    pub fn wages(&self) -> &[u32] {
        &self.wages
    }

    pub fn is_purchased(&self, robot: RobotId) -> bool {
        self.purchased[robot as usize]
    }

    pub fn owner(&self, robot: RobotId) -> Option<(TaskId, ServiceId)> {
        self.owner[robot as usize]
    }

    pub fn all_purchased(&self) -> bool {
        self.purchased.iter().all(|&p| p)
    }

    pub fn max_unpurchased_wage(&self) -> Option<u32> {
        self.wages
            .iter()
            .zip(&self.purchased)
            .filter(|(_, &p)| !p)
            .map(|(&w, _)| w)
            .max()
    }

    fn purchase(&mut self, robot: RobotId, task: TaskId, service: ServiceId) {
        self.purchased[robot as usize] = true;
        self.owner[robot as usize] = Some((task, service));
    }

    /// Purchased robots in their bought slots, everyone else idle.
    pub fn partition(&self) -> Partition {
        Partition::from_assignments(
            self.owner
                .iter()
                .map(|o| o.map_or(Assignment::Void, |(t, s)| Assignment::slot(t, s)))
                .collect(),
        )
    }
}

/// Every wage starts at the highest task utility plus `epsilon`.
pub fn init_auction(instance: &ProblemInstance, epsilon: u32) -> Result<WageBoard> {
    let u_max = instance
        .max_utility()
        .ok_or(Error::Degenerate("auction needs at least one task"))?;
    if epsilon == 0 {
        return Err(Error::Config("wage decrement must be positive".into()));
    }
    let start = u_max
        .checked_add(epsilon)
        .filter(|&w| w <= u32::from(u16::MAX))
        .ok_or_else(|| Error::Config(format!("starting wage {u_max}+{epsilon} exceeds 65535")))?;
    let n = instance.robot_count();
    Ok(WageBoard::from_wages(
        vec![start; n],
        vec![false; n],
        epsilon,
    ))
}

/// Lowers the highest unpurchased wage(s) by epsilon, floored at zero. Returns
/// whether any wage changed.
pub fn decrement_round(board: &mut WageBoard, schedule: DecrementSchedule) -> bool {
    let Some(max) = board.max_unpurchased_wage().filter(|&m| m > 0) else {
        return false;
    };
    let eps = board.epsilon;
    for r in 0..board.wages.len() {
        if !board.purchased[r] && board.wages[r] == max {
            board.wages[r] = max.saturating_sub(eps);
            if schedule == DecrementSchedule::SingleHighest {
                break;
            }
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bid {
    pub task: TaskId,
    /// Robot and the service it is bought for, in slot order.
    pub bundle: Vec<(RobotId, ServiceId)>,
    pub total: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BidPlan {
    Bid(Bid),
    /// The cheapest bundle costs more than the task can pay this round.
    OverBudget {
        cost: u64,
    },
    /// Not enough unpurchased capable robots remain. Permanent.
    Infeasible,
    /// Nothing left to buy.
    Filled,
}

/// Cheapest bundle covering the task's unmet slots, priced at current wages.
pub fn plan_bid(task: TaskId, board: &WageBoard, instance: &ProblemInstance) -> BidPlan {
    let t = instance.task(task);
    let mut have = vec![0u32; instance.service_type_count()];
    let mut committed = 0u64;
    for r in 0..board.len() {
        if let Some((owner, s)) = board.owner[r] {
            if owner == task {
                have[s as usize] += 1;
                committed += u64::from(board.wages[r]);
            }
        }
    }
    let slots: Vec<ServiceId> = t
        .requirement
        .support()
        .flat_map(|s| {
            std::iter::repeat_n(
                s,
                t.requirement.get(s).saturating_sub(have[s as usize]) as usize,
            )
        })
        .collect();
    if slots.is_empty() {
        return BidPlan::Filled;
    }
    let robots: Vec<RobotId> = instance
        .robots()
        .iter()
        .filter(|r| !board.purchased[r.id as usize] && slots.iter().any(|&s| r.can_perform(s)))
        .map(|r| r.id)
        .collect();
    let matching = min_cost_assignment(slots.len(), robots.len(), |i, j| {
        let robot = robots[j];
        instance
            .robot(robot)
            .can_perform(slots[i])
            .then(|| u64::from(board.wages[robot as usize]))
    });
    let Some(matching) = matching else {
        return BidPlan::Infeasible;
    };
    let bundle: Vec<(RobotId, ServiceId)> = matching
        .iter()
        .zip(&slots)
        .map(|(&j, &s)| (robots[j], s))
        .collect();
    let total: u64 = bundle
        .iter()
        .map(|&(r, _)| u64::from(board.wages[r as usize]))
        .sum();
    let budget = u64::from(t.utility).saturating_sub(committed);
    if total <= budget {
        BidPlan::Bid(Bid {
            task,
            bundle,
            total,
        })
    } else {
        BidPlan::OverBudget { cost: total }
    }
}

/// The task's bid this round, if it has an affordable bundle.
pub fn compute_bid(task: TaskId, board: &WageBoard, instance: &ProblemInstance) -> Option<Bid> {
    match plan_bid(task, board, instance) {
        BidPlan::Bid(b) => Some(b),
        _ => None,
    }
}

/// Awards bids in ascending task order. A bid wins iff all its robots are still
/// unpurchased and it covers their current wages. Returns the winning tasks.
pub fn resolve_round(bids: &[Bid], board: &mut WageBoard) -> Vec<TaskId> {
    let mut order: Vec<&Bid> = bids.iter().collect();
    order.sort_by_key(|b| b.task);
    let mut winners = Vec::new();
    for bid in order {
        let free = bid.bundle.iter().all(|&(r, _)| !board.is_purchased(r));
        let price: u64 = bid
            .bundle
            .iter()
            .map(|&(r, _)| u64::from(board.wage(r)))
            .sum();
        if free && bid.total >= price {
            for &(r, s) in &bid.bundle {
                board.purchase(r, bid.task, s);
            }
            winners.push(bid.task);
        }
    }
    winners
}

/// All robots sold, or every unpurchased wage is zero and no task can bid.
pub fn auction_finished(board: &WageBoard, instance: &ProblemInstance) -> bool {
    if board.all_purchased() {
        return true;
    }
    board.max_unpurchased_wage() == Some(0)
        && (0..instance.task_count() as TaskId).all(|t| compute_bid(t, board, instance).is_none())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuctionOutcome {
    pub board: WageBoard,
    pub rounds: u64,
}

impl AuctionOutcome {
    pub fn partition(&self) -> Partition {
        self.board.partition()
    }
}

/// Centralized auction. Each round lowers wages, collects one bid per open task
/// and resolves them; tasks leave when filled or infeasible.
pub fn run_auction(instance: &ProblemInstance, config: &SdaConfig) -> Result<AuctionOutcome> {
    let mut board = init_auction(instance, config.epsilon)?;
    let mut open: BTreeSet<TaskId> = (0..instance.task_count() as TaskId).collect();
    let mut rounds = 0;
    while !open.is_empty() {
        decrement_round(&mut board, config.schedule);
        rounds += 1;
        let mut bids = Vec::new();
        let mut closed = Vec::new();
        for &task in &open {
            match plan_bid(task, &board, instance) {
                BidPlan::Bid(b) => bids.push(b),
                BidPlan::OverBudget { .. } => {}
                BidPlan::Infeasible | BidPlan::Filled => closed.push(task),
            }
        }
        for t in closed {
            open.remove(&t);
        }
        for t in resolve_round(&bids, &mut board) {
            open.remove(&t);
        }
    }
    Ok(AuctionOutcome { board, rounds })
}

/// Upper bound on rounds: `ceil((u_max + eps) / eps) * n`, plus one round per task
/// for conflicts at wage zero.
pub fn round_bound(instance: &ProblemInstance, epsilon: u32) -> u64 {
    let u_max = u64::from(instance.max_utility().unwrap_or(0));
    let eps = u64::from(epsilon.max(1));
    (u_max + eps).div_ceil(eps) * instance.robot_count() as u64 + instance.task_count() as u64
}
