use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("cannot sample: {0:.6} of the mass lies above the support and no surrogate price is configured")]
    UnlocalizedMass(f64),

    #[error("state (budget {budget}, remaining {remaining}) outside table of size ({budget_cap}, {horizon})")]
    OutOfRange {
        budget: u32,
        remaining: u32,
        budget_cap: u32,
        horizon: u32,
    },

    #[error("observation log is empty")]
    EmptyLog,

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("inconsistent feedback: {0}")]
    InconsistentFeedback(String),

    #[error("policy `{policy}` bid {bid} with only {budget} remaining")]
    ContractBreach {
        policy: String,
        bid: u32,
        budget: u32,
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("replay source `{0}` contains no auctions")]
    EmptyReplay(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown policy `{name}` (available: {available})")]
    UnknownPolicy { name: String, available: String },

    #[error("nothing to report: {0}")]
    EmptyResult(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
