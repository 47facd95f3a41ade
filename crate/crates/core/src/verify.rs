//! Stability checkers and an exhaustive optimum search for small instances.

use crate::error::{Error, Result};
use crate::model::{
    structure_utility, Assignment, Partition, ProblemInstance, RobotId, ServiceId, SlotCounts,
    TaskId,
};
use crate::reward::{best_move_with_counts, Candidate, Move};

/// Largest collective the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Why a partition is not stable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Witness {
    /// `robot` strictly prefers `candidate` to its current slot.
    Deviation {
        robot: RobotId,
        candidate: Candidate,
    },
    /// Idle `idle` could take `assigned`'s slot while `assigned` fills an unmet slot.
    BlockingPair {
        idle: RobotId,
        assigned: RobotId,
        unmet_task: TaskId,
        unmet_service: ServiceId,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    Stable,
    Unstable(Witness),
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::Stable)
    }

    pub fn witness(&self) -> Option<Witness> {
        match *self {
            Verdict::Stable => None,
            Verdict::Unstable(w) => Some(w),
        }
    }
}

/// Stable iff `best_move` returns `Stay` for every robot.
pub fn is_nash_stable(
    partition: &Partition,
    instance: &ProblemInstance,
    cap_enabled: bool,
) -> Verdict {
    let counts = SlotCounts::new(instance, partition);
    nash_with_counts(partition, &counts, instance, cap_enabled)
}

fn nash_with_counts(
    partition: &Partition,
    counts: &SlotCounts,
    instance: &ProblemInstance,
    cap_enabled: bool,
) -> Verdict {
    for robot in instance.robots() {
        if let Move::Join(candidate) =
            best_move_with_counts(robot, partition, counts, instance, cap_enabled)
        {
            return Verdict::Unstable(Witness::Deviation {
                robot: robot.id,
                candidate,
            });
        }
    }
    Verdict::Stable
}

/// Nash stable under the coalition cap, and no idle robot `b` and assigned robot
/// `a` such that `b` can perform `a`'s service while `a` can fill an unmet slot.
pub fn is_pairwise_stable(partition: &Partition, instance: &ProblemInstance) -> Verdict {
    let counts = SlotCounts::new(instance, partition);
    let verdict = nash_with_counts(partition, &counts, instance, true);
    if !verdict.is_stable() {
        return verdict;
    }
    match find_blocking_pair(partition, &counts, instance) {
        Some(w) => Verdict::Unstable(w),
        None => Verdict::Stable,
    }
}

fn find_blocking_pair(
    partition: &Partition,
    counts: &SlotCounts,
    instance: &ProblemInstance,
) -> Option<Witness> {
    let unmet = unmet_slots(instance, counts);
    if unmet.is_empty() {
        return None;
    }
    for idle in partition.void_robots() {
        let idle_robot = instance.robot(idle);
        for (assigned, assignment) in partition.iter() {
            let Assignment::Task { task, service } = assignment else {
                continue;
            };
            if !idle_robot.can_perform(service) {
                continue;
            }
            let mover = instance.robot(assigned);
            if let Some(&(unmet_task, unmet_service)) = unmet
                .iter()
                .find(|&&(t, s)| (t, s) != (task, service) && mover.can_perform(s))
            {
                return Some(Witness::BlockingPair {
                    idle,
                    assigned,
                    unmet_task,
                    unmet_service,
                });
            }
        }
    }
    None
}

/// Slots holding fewer robots than required, in (task, service) order.
pub fn unmet_slots(instance: &ProblemInstance, counts: &SlotCounts) -> Vec<(TaskId, ServiceId)> {
    let mut out = Vec::new();
    for task in instance.tasks() {
        for s in task.requirement.support() {
            if counts.get(task.id, s) < task.requirement.get(s) {
                out.push((task.id, s));
            }
        }
    }
    out
}

/// Highest achievable structure utility and one partition attaining it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Optimum {
    pub utility: u64,
    pub partition: Partition,
}

/// Exhaustive search over capability-respecting assignments.
///
/// Robots are only placed into slots with remaining need, since surplus members
/// never change which tasks are satisfied. Branches are cut once the utility of
/// tasks still completable cannot beat the incumbent.
pub fn brute_force_optimum(instance: &ProblemInstance) -> Result<Optimum> {
    let n = instance.robot_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpace {
            robots: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let types = instance.service_type_count();
    let remaining: Vec<u32> = instance
        .tasks()
        .iter()
        .flat_map(|t| t.requirement.counts().iter().copied())
        .collect();
    let mut search = Search {
        instance,
        types,
        remaining,
        current: Partition::all_void(n),
        best: Optimum {
            utility: 0,
            partition: Partition::all_void(n),
        },
        ceiling: instance.total_utility(),
    };
    search.descend(0);
    Ok(search.best)
}

struct Search<'a> {
    instance: &'a ProblemInstance,
    types: usize,
    remaining: Vec<u32>,
    current: Partition,
    best: Optimum,
    ceiling: u64,
}

impl Search<'_> {
    fn descend(&mut self, robot: usize) {
        if self.best.utility == self.ceiling {
            return;
        }
        if self.upper_bound(robot) <= self.best.utility {
            return;
        }
        if robot == self.instance.robot_count() {
            let value = structure_utility(self.instance, &self.current);
            if value > self.best.utility {
                self.best = Optimum {
                    utility: value,
                    partition: self.current.clone(),
                };
            }
            return;
        }
        let id = robot as RobotId;
        let services: Vec<ServiceId> = self.instance.robot(id).services().collect();
        for task in 0..self.instance.task_count() {
            for &s in &services {
                let slot = task * self.types + s as usize;
                if self.remaining[slot] == 0 {
                    continue;
                }
                self.remaining[slot] -= 1;
                self.current.set(id, Assignment::slot(task as TaskId, s));
                self.descend(robot + 1);
                self.current.set(id, Assignment::Void);
                self.remaining[slot] += 1;
            }
        }
        self.descend(robot + 1);
    }

    /// Utility of tasks whose outstanding need does not exceed the robots left.
    fn upper_bound(&self, next_robot: usize) -> u64 {
        let left = (self.instance.robot_count() - next_robot) as u32;
        self.instance
            .tasks()
            .iter()
            .filter(|t| {
                let base = t.id as usize * self.types;
                let need: u32 = self.remaining[base..base + self.types].iter().sum();
                need <= left
            })
            .map(|t| u64::from(t.utility))
            .sum()
    }
}
