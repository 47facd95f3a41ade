//! Big-endian wire encodings of auction traffic.
//!
//! | message | layout | size |
//! |---|---|---|
//! | wages | service u16, round u16, one u32 wage per hosted robot | 4 + 4k |
//! | bid | task u32, round u16, kind u16, (robot u24, service u8, amount u16)* | 8 + 6b |
//! | award | task u32, round u16, kind u16, (robot u24, service u8)* | 8 + 4b |
//!
//! Rounds travel modulo 2^16. A purchased robot's wage is sent as `0xFFFFFFFF`.

use crate::error::{Error, Result};
use crate::model::{RobotId, ServiceId, TaskId};
use crate::simnet::{Message, MessageClass};

pub const PURCHASED: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WageUpdate {
    pub service: u16,
    pub round: u16,
    pub wages: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BidKind {
    Prepare,
    Pass,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BidMessage {
    pub task: TaskId,
    pub round: u16,
    pub kind: BidKind,
    /// Robot, service it is bought for, offered wage.
    pub entries: Vec<(RobotId, ServiceId, u16)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AwardKind {
    Commit,
    Abort,
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AwardMessage {
    pub task: TaskId,
    pub round: u16,
    pub kind: AwardKind,
    pub entries: Vec<(RobotId, ServiceId)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SdaMessage {
    Wages(WageUpdate),
    Bid(BidMessage),
    Award(AwardMessage),
}

fn robot_slot(robot: RobotId, service: ServiceId) -> [u8; 4] {
    let r = robot.to_be_bytes();
    [r[1], r[2], r[3], service]
}

fn read_u16(b: &[u8]) -> u16 {
    u16::from_be_bytes([b[0], b[1]])
}

fn read_u32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

impl SdaMessage {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        match self {
            SdaMessage::Wages(m) => {
                out.extend_from_slice(&m.service.to_be_bytes());
                out.extend_from_slice(&m.round.to_be_bytes());
                for w in &m.wages {
                    out.extend_from_slice(&w.to_be_bytes());
                }
            }
            SdaMessage::Bid(m) => {
                out.extend_from_slice(&m.task.to_be_bytes());
                out.extend_from_slice(&m.round.to_be_bytes());
                let kind: u16 = match m.kind {
                    BidKind::Prepare => 0,
                    BidKind::Pass => 1,
                };
                out.extend_from_slice(&kind.to_be_bytes());
                for &(r, s, amount) in &m.entries {
                    out.extend_from_slice(&robot_slot(r, s));
                    out.extend_from_slice(&amount.to_be_bytes());
                }
            }
            SdaMessage::Award(m) => {
                out.extend_from_slice(&m.task.to_be_bytes());
                out.extend_from_slice(&m.round.to_be_bytes());
                let kind: u16 = match m.kind {
                    AwardKind::Commit => 1,
                    AwardKind::Abort => 2,
                    AwardKind::Done => 3,
                };
                out.extend_from_slice(&kind.to_be_bytes());
                for &(r, s) in &m.entries {
                    out.extend_from_slice(&robot_slot(r, s));
                }
            }
        }
        out
    }

    /// Decodes a message of the given class.
    pub fn decode(class: MessageClass, b: &[u8]) -> Result<Self> {
        let bad = || {
            Error::Protocol(format!(
                "malformed {} message of {} bytes",
                class.name(),
                b.len()
            ))
        };
        match class {
            MessageClass::Wage => {
                if b.len() < 4 || !(b.len() - 4).is_multiple_of(4) {
                    return Err(bad());
                }
                Ok(SdaMessage::Wages(WageUpdate {
                    service: read_u16(&b[0..]),
                    round: read_u16(&b[2..]),
                    wages: b[4..].chunks_exact(4).map(read_u32).collect(),
                }))
            }
            MessageClass::Bid => {
                if b.len() < 8 || !(b.len() - 8).is_multiple_of(6) {
                    return Err(bad());
                }
                let kind = match read_u16(&b[6..]) {
                    0 => BidKind::Prepare,
                    1 => BidKind::Pass,
                    _ => return Err(bad()),
                };
                Ok(SdaMessage::Bid(BidMessage {
                    task: read_u32(&b[0..]),
                    round: read_u16(&b[4..]),
                    kind,
                    entries: b[8..]
                        .chunks_exact(6)
                        .map(|c| (read_u32(&[0, c[0], c[1], c[2]]), c[3], read_u16(&c[4..])))
                        .collect(),
                }))
            }
            MessageClass::Award => {
                if b.len() < 8 || !(b.len() - 8).is_multiple_of(4) {
                    return Err(bad());
                }
                let kind = match read_u16(&b[6..]) {
                    1 => AwardKind::Commit,
                    2 => AwardKind::Abort,
                    3 => AwardKind::Done,
                    _ => return Err(bad()),
                };
                Ok(SdaMessage::Award(AwardMessage {
                    task: read_u32(&b[0..]),
                    round: read_u16(&b[4..]),
                    kind,
                    entries: b[8..]
                        .chunks_exact(4)
                        .map(|c| (read_u32(&[0, c[0], c[1], c[2]]), c[3]))
                        .collect(),
                }))
            }
            MessageClass::Grape | MessageClass::Swap => Err(bad()),
        }
    }
}

impl Message for SdaMessage {
    fn class(&self) -> MessageClass {
        match self {
            SdaMessage::Wages(_) => MessageClass::Wage,
            SdaMessage::Bid(_) => MessageClass::Bid,
            SdaMessage::Award(_) => MessageClass::Award,
        }
    }

    fn wire_len(&self) -> usize {
        match self {
            SdaMessage::Wages(m) => 4 + 4 * m.wages.len(),
            SdaMessage::Bid(m) => 8 + 6 * m.entries.len(),
            SdaMessage::Award(m) => 8 + 4 * m.entries.len(),
        }
    }
}
