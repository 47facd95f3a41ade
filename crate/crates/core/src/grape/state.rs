//! Per-robot GRAPE state: belief, update counter and the distributed mutex.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Assignment, Partition, ProblemInstance, RobotId, SlotCounts};
use crate::reward::{best_move_with_counts, compare_fill, Move};
use crate::verify::unmet_slots;

use super::wire::{GrapeMessage, SwapKind, SwapMessage, NO_ORIGIN};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Nash,
    Pairwise,
}

/// Precedence of a belief. Greater wins: higher `r`, then later `time`, then lower `origin`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MutexKey {
    pub r: u32,
    pub time: u64,
    pub origin: u32,
}

impl Ord for MutexKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.r
            .cmp(&other.r)
            .then(self.time.cmp(&other.time))
            .then(other.origin.cmp(&self.origin))
    }
}

impl PartialOrd for MutexKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transition {
    None,
    EnterPairwise,
    Terminate,
}

#[derive(Clone, Debug)]
pub struct GrapeState {
    robot_id: RobotId,
    r: u32,
    time: u64,
    origin: u32,
    belief: Arc<Partition>,
    counts: SlotCounts,
    phase: Phase,
    quiescent_count: u32,
    belief_changed: bool,
}

impl GrapeState {
    pub fn new(robot_id: RobotId, instance: &ProblemInstance) -> Self {
        let belief = Partition::all_void(instance.robot_count());
        Self {
            robot_id,
            r: 0,
            time: 0,
            origin: NO_ORIGIN,
            counts: SlotCounts::new(instance, &belief),
            belief: Arc::new(belief),
            phase: Phase::Nash,
            quiescent_count: 0,
            belief_changed: false,
        }
    }

    pub fn robot_id(&self) -> RobotId {
        self.robot_id
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn origin(&self) -> u32 {
        self.origin
    }

    pub fn belief(&self) -> &Arc<Partition> {
        &self.belief
    }

    pub fn counts(&self) -> &SlotCounts {
        &self.counts
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn quiescent_count(&self) -> u32 {
        self.quiescent_count
    }

    pub fn own_assignment(&self) -> Assignment {
        self.belief.get(self.robot_id)
    }

    pub fn key(&self) -> MutexKey {
        MutexKey {
            r: self.r,
            time: self.time,
            origin: self.origin,
        }
    }

    pub fn message(&self) -> GrapeMessage {
        GrapeMessage {
            origin: self.origin,
            r: self.r,
            time: self.time,
            partition: Arc::clone(&self.belief),
        }
    }

    /// Runs the best response and, on a strict improvement, commits it.
    pub fn step(&mut self, instance: &ProblemInstance, now: u64, cap_enabled: bool) -> Move {
        let robot = instance.robot(self.robot_id);
        let mv = best_move_with_counts(robot, &self.belief, &self.counts, instance, cap_enabled);
        if let Move::Join(c) = mv {
            self.commit(&[(self.robot_id, c.assignment())], now);
        }
        mv
    }

    /// Applies local changes as a new update made by this robot at `now`.
    pub fn commit(&mut self, changes: &[(RobotId, Assignment)], now: u64) {
        let belief = Arc::make_mut(&mut self.belief);
        for &(robot, assignment) in changes {
            if let Some((t, s)) = belief.get(robot).as_slot() {
                self.counts.add(t, s, -1);
            }
            if let Some((t, s)) = assignment.as_slot() {
                self.counts.add(t, s, 1);
            }
            belief.set(robot, assignment);
        }
        self.r += 1;
        self.time = now;
        self.origin = self.robot_id;
        self.belief_changed = true;
    }

    /// Adopts `incoming` iff its key beats the local one. Returns whether it did.
    pub fn mutex_merge(
        &mut self,
        incoming: &GrapeMessage,
        instance: &ProblemInstance,
    ) -> Result<bool> {
        if incoming.partition.len() != self.belief.len() {
            return Err(Error::Protocol(format!(
                "belief of {} robots, expected {}",
                incoming.partition.len(),
                self.belief.len()
            )));
        }
        let key = MutexKey {
            r: incoming.r,
            time: incoming.time,
            origin: incoming.origin,
        };
        if key <= self.key() {
            return Ok(false);
        }
        incoming
            .partition
            .validate(instance)
            .map_err(|e| Error::Protocol(e.to_string()))?;
        self.r = incoming.r;
        self.time = incoming.time;
        self.origin = incoming.origin;
        if !Arc::ptr_eq(&self.belief, &incoming.partition) {
            self.counts = SlotCounts::new(instance, &incoming.partition);
            self.belief = Arc::clone(&incoming.partition);
        }
        self.belief_changed = true;
        Ok(true)
    }

    /// Records an activation: resets quiescence if the belief changed since the
    /// previous one, otherwise counts up. Returns the new count.
    pub fn note_activation(&mut self) -> u32 {
        if std::mem::take(&mut self.belief_changed) {
            self.quiescent_count = 0;
        } else {
            self.quiescent_count += 1;
        }
        self.quiescent_count
    }

    pub fn phase_transition(
        &mut self,
        instance: &ProblemInstance,
        pairwise_enabled: bool,
        quiescence_rounds: u32,
    ) -> Transition {
        if self.quiescent_count < quiescence_rounds {
            return Transition::None;
        }
        let needed =
            pairwise_enabled && needs_pairwise_counts(&self.belief, &self.counts, instance);
        match (self.phase, needed) {
            (Phase::Nash, true) => {
                self.phase = Phase::Pairwise;
                Transition::EnterPairwise
            }
            (Phase::Pairwise, true) => Transition::None,
            (_, false) => Transition::Terminate,
        }
    }

    /// Proposes a swap from this idle robot: the first unmet slot, in descending
    /// reward order, for which some assigned robot can move there while this
    /// robot takes over its current slot. The lowest-id such robot is asked.
    pub fn pairwise_step(&self, instance: &ProblemInstance) -> Option<SwapMessage> {
        if self.phase != Phase::Pairwise || !self.own_assignment().is_void() {
            return None;
        }
        let me = instance.robot(self.robot_id);
        let mut unmet = unmet_slots(instance, &self.counts);
        unmet.sort_by(|&(ta, sa), &(tb, sb)| {
            let fa = (self.counts.get(ta, sa) + 1, instance.requirement(ta, sa));
            let fb = (self.counts.get(tb, sb) + 1, instance.requirement(tb, sb));
            compare_fill(fa, fb).then((ta, sa).cmp(&(tb, sb)))
        });
        for (ut, us) in unmet {
            for (robot, assignment) in self.belief.iter() {
                let Some((t, s)) = assignment.as_slot() else {
                    continue;
                };
                if (t, s) != (ut, us) && me.can_perform(s) && instance.robot(robot).can_perform(us)
                {
                    return Some(SwapMessage {
                        kind: SwapKind::Request,
                        requester: self.robot_id,
                        target: robot,
                        requested: (t, s),
                        unmet: (ut, us),
                        belief_r: self.r,
                    });
                }
            }
        }
        None
    }

    /// Whether `swap` can be carried out on the current belief.
    pub fn swap_applicable(&self, swap: &SwapMessage, instance: &ProblemInstance) -> bool {
        let (ut, us) = swap.unmet;
        let (rt, rs) = swap.requested;
        (ut as usize) < instance.task_count()
            && (rt as usize) < instance.task_count()
            && (swap.requester as usize) < self.belief.len()
            && (swap.target as usize) < self.belief.len()
            && swap.unmet != swap.requested
            && self.belief.get(swap.requester).is_void()
            && self.belief.get(swap.target) == Assignment::slot(rt, rs)
            && self.counts.get(ut, us) < instance.requirement(ut, us)
            && instance.robot(swap.target).can_perform(us)
            && instance.robot(swap.requester).can_perform(rs)
    }

    /// Requester takes the target's slot and the target moves to the unmet slot.
    pub fn apply_swap(&mut self, swap: &SwapMessage, now: u64) {
        let (rt, rs) = swap.requested;
        let (ut, us) = swap.unmet;
        self.commit(
            &[
                (swap.target, Assignment::slot(ut, us)),
                (swap.requester, Assignment::slot(rt, rs)),
            ],
            now,
        );
    }
}

/// Some slot is under-filled and some robot is idle.
pub fn needs_pairwise(belief: &Partition, instance: &ProblemInstance) -> bool {
    needs_pairwise_counts(belief, &SlotCounts::new(instance, belief), instance)
}

fn needs_pairwise_counts(
    belief: &Partition,
    counts: &SlotCounts,
    instance: &ProblemInstance,
) -> bool {
    belief.void_robots().next().is_some() && has_unmet(counts, instance)
}

fn has_unmet(counts: &SlotCounts, instance: &ProblemInstance) -> bool {
    instance.tasks().iter().any(|t| {
        t.requirement
            .support()
            .any(|s| counts.get(t.id, s) < t.requirement.get(s))
    })
}
