use std::time::{Duration, Instant};

use ntd_core::Stopwatch;

/// Monotonic wall clock for per-iteration timings.
#[derive(Debug, Default)]
pub struct InstantClock {
    started: Option<Instant>,
}

impl Stopwatch for InstantClock {
    fn start(&mut self) {
        self.started = Some(Instant::now());
    }

    fn stop(&mut self) -> Duration {
        self.started.take().map(|t| t.elapsed()).unwrap_or_default()
    }
}
