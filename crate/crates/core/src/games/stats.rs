//! Win-rate summaries.

use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval `(low, high)` for `wins` successes in `trials`.
pub fn wilson_interval(wins: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0, "no trials");
    let n = trials as f64;
    let p = wins as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WinStats {
    pub trials: u64,
    pub wins: u64,
    pub win_rate: f64,
    /// `|win_rate - 1/2|`.
    pub advantage: f64,
    /// Half-width of the 95% Wilson interval on the win rate.
    pub ci95: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl WinStats {
    pub fn new(wins: u64, trials: u64) -> Self {
        let (lo, hi) = wilson_interval(wins, trials, Z95);
        let win_rate = wins as f64 / trials as f64;
        Self {
            trials,
            wins,
            win_rate,
            advantage: (win_rate - 0.5).abs(),
            ci95: (hi - lo) / 2.0,
            wilson_low: lo,
            wilson_high: hi,
        }
    }

    /// The 95% interval on the win rate contains 1/2.
    pub fn consistent_with_chance(&self) -> bool {
        self.wilson_low <= 0.5 && 0.5 <= self.wilson_high
    }
}
