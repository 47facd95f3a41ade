//! Domain types for single-task-robot, multi-robot-task instantaneous assignment
//! under the services model, and coalition-structure utility.
//!
//! A robot advertises the set of services it can perform and performs exactly
//! one of them at a time. A task demands a count of each service type and pays
//! its utility only when its coalition covers every count.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type RobotId = u32;
pub type TaskId = u32;
pub type ServiceId = u8;

/// Largest task id representable in the 3-byte wire field (0xFFFFFF is void).
pub const MAX_TASKS: usize = 0x00FF_FFFF;
/// Service indices travel as a single byte.
pub const MAX_SERVICE_TYPES: usize = 256;

/// Per-service-type counts. Capability vectors hold 0/1, requirement vectors any count.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ServiceVector(Vec<u32>);

impl ServiceVector {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, service: ServiceId) -> u32 {
        self.0.get(service as usize).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    /// Indices of the positive entries.
    pub fn support(&self) -> impl Iterator<Item = ServiceId> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, _)| s as ServiceId)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Robot {
    pub id: RobotId,
    pub capabilities: ServiceVector,
}

impl Robot {
    pub fn can_perform(&self, service: ServiceId) -> bool {
        self.capabilities.get(service) > 0
    }

    pub fn services(&self) -> impl Iterator<Item = ServiceId> + '_ {
        self.capabilities.support()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    pub id: TaskId,
    pub requirement: ServiceVector,
    pub utility: u32,
}

/// Where one robot is: idle in the void coalition or performing a service for a task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Assignment {
    #[default]
    Void,
    Task {
        task: TaskId,
        service: ServiceId,
    },
}

impl Assignment {
    pub fn slot(task: TaskId, service: ServiceId) -> Self {
        Assignment::Task { task, service }
    }

    pub fn is_void(&self) -> bool {
        matches!(self, Assignment::Void)
    }

    pub fn task(&self) -> Option<TaskId> {
        match *self {
            Assignment::Void => None,
            Assignment::Task { task, .. } => Some(task),
        }
    }

    pub fn as_slot(&self) -> Option<(TaskId, ServiceId)> {
        match *self {
            Assignment::Void => None,
            Assignment::Task { task, service } => Some((task, service)),
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assignment::Void => write!(f, "void"),
            Assignment::Task { task, service } => write!(f, "t{task}/s{service}"),
        }
    }
}

/// One assignment per robot, indexed by robot id. Coalitions never overlap by construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition(Vec<Assignment>);

impl Partition {
    pub fn all_void(robots: usize) -> Self {
        Self(vec![Assignment::Void; robots])
    }

    pub fn from_assignments(assignments: Vec<Assignment>) -> Self {
        Self(assignments)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, robot: RobotId) -> Assignment {
        self.0[robot as usize]
    }

    pub fn set(&mut self, robot: RobotId, assignment: Assignment) {
        self.0[robot as usize] = assignment;
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (RobotId, Assignment)> + '_ {
        self.0.iter().enumerate().map(|(i, &a)| (i as RobotId, a))
    }

    /// Robots assigned to `task`, any service.
    pub fn coalition(&self, task: TaskId) -> Vec<RobotId> {
        self.iter()
            .filter(|(_, a)| a.task() == Some(task))
            .map(|(r, _)| r)
            .collect()
    }

    pub fn void_robots(&self) -> impl Iterator<Item = RobotId> + '_ {
        self.iter().filter(|(_, a)| a.is_void()).map(|(r, _)| r)
    }

    /// Checks the partition against an instance: length, ids in range, capabilities.
    pub fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        if self.len() != instance.robot_count() {
            return Err(Error::InvalidPartition(format!(
                "length {} but instance has {} robots",
                self.len(),
                instance.robot_count()
            )));
        }
        for (robot, assignment) in self.iter() {
            if let Assignment::Task { task, service } = assignment {
                if task as usize >= instance.task_count() {
                    return Err(Error::InvalidPartition(format!(
                        "robot {robot} assigned to unknown task {task}"
                    )));
                }
                if !instance.robot(robot).can_perform(service) {
                    return Err(Error::InvalidPartition(format!(
                        "robot {robot} cannot perform service {service}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Number of robots per (task, service) slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotCounts {
    service_types: usize,
    counts: Vec<u32>,
}

impl SlotCounts {
    pub fn new(instance: &ProblemInstance, partition: &Partition) -> Self {
        let service_types = instance.service_type_count();
        let mut counts = vec![0; instance.task_count() * service_types];
        for (_, assignment) in partition.iter() {
            if let Assignment::Task { task, service } = assignment {
                counts[task as usize * service_types + service as usize] += 1;
            }
        }
        Self {
            service_types,
            counts,
        }
    }

    pub fn get(&self, task: TaskId, service: ServiceId) -> u32 {
        self.counts[task as usize * self.service_types + service as usize]
    }

    pub(crate) fn add(&mut self, task: TaskId, service: ServiceId, delta: i32) {
        let c = &mut self.counts[task as usize * self.service_types + service as usize];
        *c = c.checked_add_signed(delta).expect("slot count underflow");
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemInstance {
    robots: Vec<Robot>,
    tasks: Vec<Task>,
    service_type_count: usize,
}

impl ProblemInstance {
    /// Builds an instance from capability bit vectors and `(requirement, utility)` pairs,
    /// assigning dense ids in order.
    pub fn new(
        service_type_count: usize,
        capabilities: Vec<Vec<u32>>,
        tasks: Vec<(Vec<u32>, u32)>,
    ) -> Result<Self> {
        let robots = capabilities
            .into_iter()
            .enumerate()
            .map(|(id, caps)| Robot {
                id: id as RobotId,
                capabilities: ServiceVector::new(caps),
            })
            .collect();
        let tasks = tasks
            .into_iter()
            .enumerate()
            .map(|(id, (req, utility))| Task {
                id: id as TaskId,
                requirement: ServiceVector::new(req),
                utility,
            })
            .collect();
        Self::from_parts(service_type_count, robots, tasks)
    }

    pub fn from_parts(
        service_type_count: usize,
        robots: Vec<Robot>,
        tasks: Vec<Task>,
    ) -> Result<Self> {
        if service_type_count == 0 || service_type_count > MAX_SERVICE_TYPES {
            return Err(Error::InvalidInstance(format!(
                "service type count {service_type_count} outside 1..={MAX_SERVICE_TYPES}"
            )));
        }
        if tasks.len() >= MAX_TASKS {
            return Err(Error::InvalidInstance(format!(
                "too many tasks: {}",
                tasks.len()
            )));
        }
        if robots.len() > u32::MAX as usize {
            return Err(Error::InvalidInstance("too many robots".into()));
        }
        for (i, robot) in robots.iter().enumerate() {
            if robot.id as usize != i {
                return Err(Error::InvalidInstance(format!(
                    "robot ids not dense at {i}"
                )));
            }
            if robot.capabilities.len() != service_type_count {
                return Err(Error::InvalidInstance(format!(
                    "robot {i} capability vector has length {}",
                    robot.capabilities.len()
                )));
            }
            if robot.capabilities.counts().iter().any(|&c| c > 1) {
                return Err(Error::InvalidInstance(format!(
                    "robot {i} capability entries must be 0 or 1"
                )));
            }
            if robot.capabilities.total() == 0 {
                return Err(Error::InvalidInstance(format!(
                    "robot {i} has no capability"
                )));
            }
        }
        for (j, task) in tasks.iter().enumerate() {
            if task.id as usize != j {
                return Err(Error::InvalidInstance(format!("task ids not dense at {j}")));
            }
            if task.requirement.len() != service_type_count {
                return Err(Error::InvalidInstance(format!(
                    "task {j} requirement vector has length {}",
                    task.requirement.len()
                )));
            }
            if task.requirement.total() == 0 {
                return Err(Error::InvalidInstance(format!("task {j} requires nothing")));
            }
            if task.utility == 0 {
                return Err(Error::InvalidInstance(format!("task {j} has zero utility")));
            }
        }
        Ok(Self {
            robots,
            tasks,
            service_type_count,
        })
    }

    pub fn robots(&self) -> &[Robot] {
        &self.robots
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn robot(&self, id: RobotId) -> &Robot {
        &self.robots[id as usize]
    }

    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id as usize]
    }

    pub fn robot_count(&self) -> usize {
        self.robots.len()
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn service_type_count(&self) -> usize {
        self.service_type_count
    }

    pub fn requirement(&self, task: TaskId, service: ServiceId) -> u32 {
        self.tasks[task as usize].requirement.get(service)
    }

    pub fn total_utility(&self) -> u64 {
        self.tasks.iter().map(|t| u64::from(t.utility)).sum()
    }

    pub fn max_utility(&self) -> Option<u32> {
        self.tasks.iter().map(|t| t.utility).max()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&InstanceDoc::from(self))?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(json)?;
        doc.try_into()
    }
}

/// JSON layout: `{service_types, robots: [[bits]], tasks: [{req, utility}]}`.
#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    service_types: usize,
    robots: Vec<Vec<u32>>,
    tasks: Vec<TaskDoc>,
}

#[derive(Serialize, Deserialize)]
struct TaskDoc {
    req: Vec<u32>,
    utility: u32,
}

impl From<&ProblemInstance> for InstanceDoc {
    fn from(instance: &ProblemInstance) -> Self {
        InstanceDoc {
            service_types: instance.service_type_count,
            robots: instance
                .robots
                .iter()
                .map(|r| r.capabilities.counts().to_vec())
                .collect(),
            tasks: instance
                .tasks
                .iter()
                .map(|t| TaskDoc {
                    req: t.requirement.counts().to_vec(),
                    utility: t.utility,
                })
                .collect(),
        }
    }
}

impl TryFrom<InstanceDoc> for ProblemInstance {
    type Error = Error;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        ProblemInstance::new(
            doc.service_types,
            doc.robots,
            doc.tasks.into_iter().map(|t| (t.req, t.utility)).collect(),
        )
    }
}

impl Serialize for ProblemInstance {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        InstanceDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProblemInstance {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let doc = InstanceDoc::deserialize(deserializer)?;
        doc.try_into().map_err(serde::de::Error::custom)
    }
}

/// True iff every service count the task requires is covered by robots assigned to it.
pub fn task_satisfied(task: &Task, partition: &Partition) -> bool {
    let mut provided = vec![0u32; task.requirement.len()];
    for (_, assignment) in partition.iter() {
        if let Assignment::Task { task: t, service } = assignment {
            if t == task.id {
                provided[service as usize] += 1;
            }
        }
    }
    task.requirement
        .counts()
        .iter()
        .zip(&provided)
        .all(|(&need, &have)| have >= need)
}

/// Sum of utilities of the satisfied tasks.
pub fn structure_utility(instance: &ProblemInstance, partition: &Partition) -> u64 {
    let counts = SlotCounts::new(instance, partition);
    instance
        .tasks()
        .iter()
        .filter(|task| {
            task.requirement
                .support()
                .all(|s| counts.get(task.id, s) >= task.requirement.get(s))
        })
        .map(|task| u64::from(task.utility))
        .sum()
}

/// Structure utility as a percentage of the total utility on offer.
pub fn percent_utility(instance: &ProblemInstance, partition: &Partition) -> Result<f64> {
    let total = instance.total_utility();
    if total == 0 {
        return Err(Error::Degenerate("instance has no task utility"));
    }
    Ok(100.0 * structure_utility(instance, partition) as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_task_instance() -> ProblemInstance {
        // Robots 0,1 do service 0; robot 2 does service 1; robot 3 does both.
        ProblemInstance::new(
            2,
            vec![vec![1, 0], vec![1, 0], vec![0, 1], vec![1, 1]],
            vec![(vec![2, 1], 10), (vec![0, 1], 40)],
        )
        .unwrap()
    }

    fn partition(slots: &[Option<(TaskId, ServiceId)>]) -> Partition {
        Partition::from_assignments(
            slots
                .iter()
                .map(|s| match s {
                    None => Assignment::Void,
                    Some((t, s)) => Assignment::slot(*t, *s),
                })
                .collect(),
        )
    }

    #[test]
    fn exact_fulfilment_satisfies() {
        let inst = two_task_instance();
        let p = partition(&[Some((0, 0)), Some((0, 0)), Some((0, 1)), None]);
        assert!(task_satisfied(inst.task(0), &p));
    }

    #[test]
    fn shortfall_does_not_satisfy() {
        let inst = two_task_instance();
        let p = partition(&[Some((0, 0)), None, Some((0, 1)), None]);
        assert!(!task_satisfied(inst.task(0), &p));
    }

    #[test]
    fn surplus_still_satisfies() {
        let inst = two_task_instance();
        let p = partition(&[Some((0, 0)), Some((0, 0)), Some((0, 1)), Some((0, 0))]);
        assert!(task_satisfied(inst.task(0), &p));
    }

    #[test]
    fn utility_sums() {
        let inst = two_task_instance();
        let all = partition(&[Some((0, 0)), Some((0, 0)), Some((0, 1)), Some((1, 1))]);
        assert_eq!(structure_utility(&inst, &all), 50);
        assert_eq!(percent_utility(&inst, &all).unwrap(), 100.0);

        let none = Partition::all_void(4);
        assert_eq!(structure_utility(&inst, &none), 0);
        assert_eq!(percent_utility(&inst, &none).unwrap(), 0.0);

        let only_big = partition(&[None, None, Some((1, 1)), None]);
        assert_eq!(structure_utility(&inst, &only_big), 40);
    }

    #[test]
    fn empty_task_set_is_degenerate() {
        let inst = ProblemInstance::new(1, vec![vec![1]], vec![]).unwrap();
        assert!(matches!(
            percent_utility(&inst, &Partition::all_void(1)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn rejects_malformed_instances() {
        assert!(ProblemInstance::new(2, vec![vec![0, 0]], vec![(vec![1, 0], 1)]).is_err());
        assert!(ProblemInstance::new(2, vec![vec![2, 0]], vec![(vec![1, 0], 1)]).is_err());
        assert!(ProblemInstance::new(2, vec![vec![1, 0]], vec![(vec![0, 0], 1)]).is_err());
        assert!(ProblemInstance::new(2, vec![vec![1, 0]], vec![(vec![1, 0], 0)]).is_err());
        assert!(ProblemInstance::new(2, vec![vec![1]], vec![(vec![1, 0], 1)]).is_err());
    }

    #[test]
    fn partition_validation() {
        let inst = two_task_instance();
        assert!(partition(&[Some((0, 1)), None, None, None])
            .validate(&inst)
            .is_err());
        assert!(partition(&[Some((5, 0)), None, None, None])
            .validate(&inst)
            .is_err());
        assert!(Partition::all_void(3).validate(&inst).is_err());
        assert!(partition(&[Some((0, 0)), None, None, Some((1, 1))])
            .validate(&inst)
            .is_ok());
    }

    #[test]
    fn json_layout() {
        let inst = two_task_instance();
        let json = inst.to_json().unwrap();
        assert!(json.starts_with(r#"{"service_types":2,"robots":[[1,0],[1,0],[0,1],[1,1]],"tasks":[{"req":[2,1],"utility":10}"#));
        assert_eq!(ProblemInstance::from_json(&json).unwrap(), inst);
    }
}
