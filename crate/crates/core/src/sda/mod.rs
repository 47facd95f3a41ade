//! Simultaneous descending auction baseline.
//!
//! Robot wages start at the highest task utility plus `epsilon` and fall by
//! `epsilon` per round. Each open task prices the cheapest bundle covering its
//! unmet requirements with a minimum-cost matching and bids the wage sum once
//! that fits its utility. Purchased robots never return to the market.

mod agents;
mod auction;
pub mod matching;
pub mod wire;

pub use agents::{
    auction_complete, build_market, market_outcome, Market, SdaNode, ServiceAgent, TaskAgent,
};
pub use auction::{
    auction_finished, compute_bid, decrement_round, init_auction, plan_bid, resolve_round,
    round_bound, run_auction, AuctionOutcome, Bid, BidPlan, DecrementSchedule, SdaConfig,
    WageBoard,
};
pub use wire::SdaMessage;
