//! Benchmark fixtures shared by the criterion targets.

use cvtele_core::{BellDetector, FrequencyGrid, SqueezerSpectrum, SwapConfig, SwapGain};

/// The default CLI sweep: 0 to 20 in steps of 0.1.
pub fn default_grid() -> FrequencyGrid {
    FrequencyGrid::new(0.0, 20.0, 0.1).expect("valid grid")
}

/// A lossy source and an imperfect detector, the costliest teleportation path.
pub fn lossy_setup() -> (SqueezerSpectrum, BellDetector) {
    (
        SqueezerSpectrum::nopa_lossy(0.77, 0.9).expect("valid source"),
        BellDetector::from_power_efficiency(0.97).expect("valid detector"),
    )
}

pub fn swap_setup() -> SwapConfig {
    SwapConfig::symmetric(SqueezerSpectrum::nopa(0.6).expect("valid source"), SwapGain::Optimal)
}
