//! Peaked coalition rewards and best-response move selection.
//!
//! A robot's reward for performing service `s` for task `j` is
//! `(u_js / |S_s|) * exp(1 - |C_s| / |S_s|)`, where `|S_s|` is the number of
//! robots the task needs for `s` and `|C_s|` the number of robots performing
//! it including the evaluating robot. With `u_js = |S_s|` the prefactor is 1,
//! so the reward depends only on the fill ratio `|C_s| / |S_s|`: it peaks at 1.0
//! on exact fulfilment and falls strictly as the slot grows. Candidate ordering
//! therefore uses the exact rational fill ratio rather than the float reward.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{Assignment, Partition, ProblemInstance, Robot, ServiceId, SlotCounts, TaskId};

/// Homogeneous single-service reward: `(u / k) * exp(1 - size / k)`.
pub fn grape_reward(utility: f64, k: u32, coalition_size: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("required coalition size k must be positive"));
    }
    if coalition_size == 0 {
        return Err(Error::Domain("coalition size must be positive"));
    }
    Ok(utility / f64::from(k) * peak_factor(k, coalition_size))
}

/// Service-slot reward with `u_js = |S_s|`, i.e. `exp(1 - members / requirement)`.
pub fn grapes_reward(requirement: u32, members_after_join: u32) -> Result<f64> {
    if requirement == 0 {
        return Err(Error::Domain(
            "slot with zero requirement is not a candidate",
        ));
    }
    if members_after_join == 0 {
        return Err(Error::Domain(
            "members after join must include the joining robot",
        ));
    }
    Ok(peak_factor(requirement, members_after_join))
}

/// The `exp(1 - members / requirement)` factor shared by both rewards.
pub fn peak_factor(requirement: u32, members: u32) -> f64 {
    (1.0 - f64::from(members) / f64::from(requirement)).exp()
}

/// A (task, service) slot a robot could occupy, with its fill after the robot is counted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub task: TaskId,
    pub service: ServiceId,
    pub members_after_join: u32,
    pub requirement: u32,
    pub reward: f64,
}

impl Candidate {
    fn new(task: TaskId, service: ServiceId, members_after_join: u32, requirement: u32) -> Self {
        Self {
            task,
            service,
            members_after_join,
            requirement,
            reward: peak_factor(requirement, members_after_join),
        }
    }

    /// Higher reward first (lower fill ratio), then lower task id, then lower service.
    pub fn preference(&self, other: &Self) -> Ordering {
        compare_fill(
            (other.members_after_join, other.requirement),
            (self.members_after_join, self.requirement),
        )
        .then_with(|| other.task.cmp(&self.task))
        .then_with(|| other.service.cmp(&self.service))
    }

    pub fn assignment(&self) -> Assignment {
        Assignment::slot(self.task, self.service)
    }
}

/// Compares fill ratios `a.0 / a.1` and `b.0 / b.1` exactly.
pub fn compare_fill(a: (u32, u32), b: (u32, u32)) -> Ordering {
    (u64::from(a.0) * u64::from(b.1)).cmp(&(u64::from(b.0) * u64::from(a.1)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Move {
    Stay,
    Join(Candidate),
}

/// Best response for `robot` under `belief`; see [`best_move_with_counts`].
pub fn best_move(
    robot: &Robot,
    belief: &Partition,
    instance: &ProblemInstance,
    cap_enabled: bool,
) -> Move {
    let counts = SlotCounts::new(instance, belief);
    best_move_with_counts(robot, belief, &counts, instance, cap_enabled)
}

/// Returns the highest-reward slot if it strictly beats the robot's current slot.
///
/// Only services the robot can perform and the task requires are considered.
/// Membership counts exclude the robot itself and then add it back, so the
/// current slot and every alternative are scored on the same footing. The void
/// task scores 0. With `cap_enabled`, slots already holding their full
/// requirement (not counting this robot) are skipped.
pub fn best_move_with_counts(
    robot: &Robot,
    belief: &Partition,
    counts: &SlotCounts,
    instance: &ProblemInstance,
    cap_enabled: bool,
) -> Move {
    let current = belief.get(robot.id);
    let mut best: Option<Candidate> = None;

    for service in robot.services() {
        for task in instance.tasks() {
            let requirement = task.requirement.get(service);
            if requirement == 0 {
                continue;
            }
            let mut others = counts.get(task.id, service);
            if current == Assignment::slot(task.id, service) {
                others -= 1;
            }
            if cap_enabled && others >= requirement {
                continue;
            }
            let candidate = Candidate::new(task.id, service, others + 1, requirement);
            if best.is_none_or(|b| candidate.preference(&b) == Ordering::Greater) {
                best = Some(candidate);
            }
        }
    }

    let Some(best) = best else {
        return Move::Stay;
    };
    match current {
        Assignment::Void => Move::Join(best),
        Assignment::Task { task, service } => {
            let held = (
                counts.get(task, service),
                instance.requirement(task, service),
            );
            let target = (best.members_after_join, best.requirement);
            if compare_fill(target, held) == Ordering::Less {
                Move::Join(best)
            } else {
                Move::Stay
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grape_reward_values() {
        assert_relative_eq!(grape_reward(50.0, 10, 10).unwrap(), 5.0);
        // 5 * e^-1, evaluated by hand.
        assert_relative_eq!(
            grape_reward(50.0, 10, 20).unwrap(),
            1.839_397_205_857_211_6,
            epsilon = 1e-12
        );
        assert_relative_eq!(grape_reward(10.0, 1, 1).unwrap(), 10.0);
        assert!(grape_reward(10.0, 0, 1).is_err());
    }

    #[test]
    fn grapes_reward_values() {
        assert_relative_eq!(grapes_reward(10, 10).unwrap(), 1.0);
        assert_relative_eq!(
            grapes_reward(4, 1).unwrap(),
            2.117_000_016_612_675,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            grapes_reward(4, 8).unwrap(),
            0.367_879_441_171_442_3,
            epsilon = 1e-12
        );
        assert!(grapes_reward(0, 1).is_err());
    }

    fn single_service(requirements: Vec<(u32, u32)>, robots: usize) -> ProblemInstance {
        ProblemInstance::new(
            1,
            vec![vec![1]; robots],
            requirements
                .into_iter()
                .map(|(r, u)| (vec![r], u))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn idle_robot_joins_only_slot() {
        let inst = single_service(vec![(4, 10)], 1);
        let p = Partition::all_void(1);
        match best_move(inst.robot(0), &p, &inst, false) {
            Move::Join(c) => {
                assert_eq!((c.task, c.service, c.members_after_join), (0, 0, 1));
                assert_relative_eq!(c.reward, (0.75f64).exp());
            }
            Move::Stay => panic!("expected a join"),
        }
    }

    #[test]
    fn exactly_filled_slot_stays() {
        let inst = single_service(vec![(2, 10)], 2);
        let p = Partition::from_assignments(vec![Assignment::slot(0, 0); 2]);
        assert_eq!(best_move(inst.robot(0), &p, &inst, false), Move::Stay);
        assert_eq!(best_move(inst.robot(1), &p, &inst, true), Move::Stay);
    }

    #[test]
    fn equal_rewards_pick_lower_task() {
        let inst = single_service(vec![(3, 5), (3, 40)], 1);
        let p = Partition::all_void(1);
        let Move::Join(c) = best_move(inst.robot(0), &p, &inst, false) else {
            panic!("expected a join")
        };
        assert_eq!(c.task, 0);
    }

    #[test]
    fn cap_skips_full_slots() {
        let inst = single_service(vec![(1, 5)], 2);
        let p = Partition::from_assignments(vec![Assignment::slot(0, 0), Assignment::Void]);
        assert!(matches!(
            best_move(inst.robot(1), &p, &inst, false),
            Move::Join(_)
        ));
        assert_eq!(best_move(inst.robot(1), &p, &inst, true), Move::Stay);
    }

    #[test]
    fn crowded_robot_moves_to_emptier_slot() {
        // Task 0 needs 1 but holds 2; task 1 needs 2 and is empty.
        let inst = single_service(vec![(1, 5), (2, 5)], 2);
        let p = Partition::from_assignments(vec![Assignment::slot(0, 0); 2]);
        let Move::Join(c) = best_move(inst.robot(0), &p, &inst, false) else {
            panic!("expected a move")
        };
        assert_eq!((c.task, c.members_after_join), (1, 1));
    }

    #[test]
    fn incapable_services_are_not_candidates() {
        let inst = ProblemInstance::new(2, vec![vec![1, 0]], vec![(vec![0, 3], 9)]).unwrap();
        assert_eq!(
            best_move(inst.robot(0), &Partition::all_void(1), &inst, false),
            Move::Stay
        );
    }
}
