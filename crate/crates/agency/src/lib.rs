//! File formats, reports, run configuration, the experiment runner and the
//! `agency` command line on top of `agency-core`.

pub mod advise;
pub mod cli;
pub mod config;
pub mod domain;
mod error;
pub mod experiment;
pub mod io;
pub mod report;
pub mod theorems;

use std::time::Instant;

use agency_core::policies::Clock;

pub use error::{AgencyError, Result};

/// Milliseconds since construction, for wall-clock MCTS budgets.
#[derive(Debug)]
pub struct StdClock {
    start: Instant,
}

impl StdClock {
    pub fn new() -> Self {
        StdClock { start: Instant::now() }
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for StdClock {
    fn now_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1000.0
    }
}

/// For closures handed to the core, which only speak its error type.
pub(crate) fn to_core<T>(r: Result<T>) -> agency_core::Result<T> {
    r.map_err(|e| match e {
        AgencyError::Core(c) => c,
        other => agency_core::Error::InvalidParams(other.to_string()),
    })
}
