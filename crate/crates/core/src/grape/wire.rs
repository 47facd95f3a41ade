//! Big-endian wire encodings of GRAPE traffic.
//!
//! State message: origin u32, r u32, time u64, then per robot a 3-byte task id
//! (0xFFFFFF for void) and a 1-byte service index. Swap request and reply share
//! one 24-byte layout: kind u8, accept u8, reserved u16, requester u32,
//! target u32, requested slot (u24 task + u8 service), unmet slot, belief r u32.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Assignment, Partition, RobotId, ServiceId, TaskId};
use crate::simnet::{Message, MessageClass};

pub const STATE_HEADER_LEN: usize = 16;
pub const ENTRY_LEN: usize = 4;
pub const SWAP_LEN: usize = 24;
const VOID_TASK: u32 = 0x00FF_FFFF;

/// Origin of the shared initial all-void belief.
pub const NO_ORIGIN: u32 = u32::MAX;

/// A belief snapshot. `origin` is the robot that made the last update, and
/// travels in the sender-id header field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrapeMessage {
    pub origin: u32,
    pub r: u32,
    pub time: u64,
    pub partition: Arc<Partition>,
}

impl GrapeMessage {
    pub fn wire_len_for(robots: usize) -> usize {
        STATE_HEADER_LEN + ENTRY_LEN * robots
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::wire_len_for(self.partition.len()));
        out.extend_from_slice(&self.origin.to_be_bytes());
        out.extend_from_slice(&self.r.to_be_bytes());
        out.extend_from_slice(&self.time.to_be_bytes());
        for a in self.partition.assignments() {
            out.extend_from_slice(&encode_slot(a.as_slot()));
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < STATE_HEADER_LEN || !(bytes.len() - STATE_HEADER_LEN).is_multiple_of(ENTRY_LEN) {
            return Err(Error::Protocol(format!(
                "state message of {} bytes",
                bytes.len()
            )));
        }
        let origin = u32::from_be_bytes(bytes[0..4].try_into().unwrap());
        let r = u32::from_be_bytes(bytes[4..8].try_into().unwrap());
        let time = u64::from_be_bytes(bytes[8..16].try_into().unwrap());
        let assignments = bytes[STATE_HEADER_LEN..]
            .chunks_exact(ENTRY_LEN)
            .map(|c| match decode_slot(c.try_into().unwrap()) {
                Some((task, service)) => Assignment::slot(task, service),
                None => Assignment::Void,
            })
            .collect();
        Ok(Self {
            origin,
            r,
            time,
            partition: Arc::new(Partition::from_assignments(assignments)),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwapKind {
    Request,
    Reply { accept: bool },
}

/// Ask `target` to vacate `requested` for the requester and move to `unmet`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwapMessage {
    pub kind: SwapKind,
    pub requester: RobotId,
    pub target: RobotId,
    pub requested: (TaskId, ServiceId),
    pub unmet: (TaskId, ServiceId),
    pub belief_r: u32,
}

impl SwapMessage {
    pub fn reply(&self, accept: bool) -> Self {
        Self {
            kind: SwapKind::Reply { accept },
            ..*self
        }
    }

    pub fn encode(&self) -> [u8; SWAP_LEN] {
        let mut out = [0u8; SWAP_LEN];
        let (kind, accept) = match self.kind {
            SwapKind::Request => (0, 0),
            SwapKind::Reply { accept } => (1, u8::from(accept)),
        };
        out[0] = kind;
        out[1] = accept;
        out[4..8].copy_from_slice(&self.requester.to_be_bytes());
        out[8..12].copy_from_slice(&self.target.to_be_bytes());
        out[12..16].copy_from_slice(&encode_slot(Some(self.requested)));
        out[16..20].copy_from_slice(&encode_slot(Some(self.unmet)));
        out[20..24].copy_from_slice(&self.belief_r.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != SWAP_LEN {
            return Err(Error::Protocol(format!(
                "swap message of {} bytes",
                bytes.len()
            )));
        }
        let kind = match (bytes[0], bytes[1]) {
            (0, 0) => SwapKind::Request,
            (1, a @ (0 | 1)) => SwapKind::Reply { accept: a == 1 },
            (k, a) => return Err(Error::Protocol(format!("swap kind {k} accept {a}"))),
        };
        let slot = |range: std::ops::Range<usize>| {
            decode_slot(bytes[range].try_into().unwrap())
                .ok_or_else(|| Error::Protocol("void slot in swap".into()))
        };
        Ok(Self {
            kind,
            requester: u32::from_be_bytes(bytes[4..8].try_into().unwrap()),
            target: u32::from_be_bytes(bytes[8..12].try_into().unwrap()),
            requested: slot(12..16)?,
            unmet: slot(16..20)?,
            belief_r: u32::from_be_bytes(bytes[20..24].try_into().unwrap()),
        })
    }
}

fn encode_slot(slot: Option<(TaskId, ServiceId)>) -> [u8; 4] {
    let (task, service) = slot.unwrap_or((VOID_TASK, 0));
    let t = task.to_be_bytes();
    [t[1], t[2], t[3], service]
}

fn decode_slot(b: [u8; 4]) -> Option<(TaskId, ServiceId)> {
    let task = u32::from_be_bytes([0, b[0], b[1], b[2]]);
    (task != VOID_TASK).then_some((task, b[3]))
}

/// Everything a GRAPE agent puts on the air.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GrapeWire {
    State(GrapeMessage),
    Swap(SwapMessage),
}

impl GrapeWire {
    pub fn encode(&self) -> Vec<u8> {
        match self {
            GrapeWire::State(m) => m.encode(),
            GrapeWire::Swap(m) => m.encode().to_vec(),
        }
    }
}

impl Message for GrapeWire {
    fn class(&self) -> MessageClass {
        match self {
            GrapeWire::State(_) => MessageClass::Grape,
            GrapeWire::Swap(_) => MessageClass::Swap,
        }
    }

    fn wire_len(&self) -> usize {
        match self {
            GrapeWire::State(m) => GrapeMessage::wire_len_for(m.partition.len()),
            GrapeWire::Swap(_) => SWAP_LEN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_size_for_hundred_robots() {
        let msg = GrapeWire::State(GrapeMessage {
            origin: 3,
            r: 9,
            time: 77,
            partition: Arc::new(Partition::all_void(100)),
        });
        assert_eq!(msg.wire_len(), 416);
        assert_eq!(msg.encode().len(), 416);
    }

    #[test]
    fn state_round_trip() {
        let p = Partition::from_assignments(vec![
            Assignment::slot(0x00AB_CDEF, 7),
            Assignment::Void,
            Assignment::slot(0, 0),
        ]);
        let msg = GrapeMessage {
            origin: 1,
            r: 2,
            time: u64::MAX - 5,
            partition: Arc::new(p),
        };
        let bytes = msg.encode();
        assert_eq!(&bytes[16..20], &[0xAB, 0xCD, 0xEF, 7]);
        assert_eq!(&bytes[20..24], &[0xFF, 0xFF, 0xFF, 0]);
        assert_eq!(GrapeMessage::decode(&bytes).unwrap(), msg);
        assert!(GrapeMessage::decode(&bytes[..18]).is_err());
    }

    #[test]
    fn swap_round_trip() {
        let req = SwapMessage {
            kind: SwapKind::Request,
            requester: 4,
            target: 9,
            requested: (1, 2),
            unmet: (3, 0),
            belief_r: 12,
        };
        for m in [req, req.reply(true), req.reply(false)] {
            let bytes = m.encode();
            assert_eq!(bytes.len(), GrapeWire::Swap(m).wire_len());
            assert_eq!(SwapMessage::decode(&bytes).unwrap(), m);
        }
        let mut bad = req.encode();
        bad[0] = 5;
        assert!(SwapMessage::decode(&bad).is_err());
    }
}
