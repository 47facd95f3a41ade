use std::collections::BTreeMap;

use super::{CountingMode, Destination, Message, MessageClass};

/// Bytes and message counts per class.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ByteCounter {
    bytes: [u64; 5],
    messages: [u64; 5],
}

impl ByteCounter {
    /// Charges one send of `msg`. Dropped deliveries are still charged.
    pub fn account<M: Message + ?Sized>(
        &mut self,
        msg: &M,
        dest: Destination,
        node_count: usize,
        mode: CountingMode,
    ) {
        let copies = match (dest, mode) {
            (Destination::Broadcast, CountingMode::PerReceiver) => {
                node_count.saturating_sub(1) as u64
            }
            _ => 1,
        };
        let i = msg.class().index();
        self.bytes[i] += msg.wire_len() as u64 * copies;
        self.messages[i] += 1;
    }

    pub fn total(&self) -> u64 {
        self.bytes.iter().sum()
    }

    pub fn class_bytes(&self, class: MessageClass) -> u64 {
        self.bytes[class.index()]
    }

    pub fn class_messages(&self, class: MessageClass) -> u64 {
        self.messages[class.index()]
    }

    /// Classes with non-zero traffic, keyed by name.
    pub fn by_class(&self) -> BTreeMap<String, u64> {
        MessageClass::ALL
            .iter()
            .filter(|c| self.bytes[c.index()] > 0)
            .map(|c| (c.name().to_string(), self.bytes[c.index()]))
            .collect()
    }
}
