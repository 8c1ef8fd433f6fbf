//! Fixed workloads shared by the benchmarks.

use sicyig_core::config::SensorConfig;
use sicyig_core::deer::{concentration_from_spacing, DeerScenario};

pub fn reference_config() -> SensorConfig {
    SensorConfig::default()
}

/// Dense-plane scenario with a short delay grid.
pub fn dense_scenario() -> DeerScenario {
    DeerScenario {
        c2d_per_nm2: concentration_from_spacing(5.0),
        td_grid_us: (0..=12).map(|k| k as f64).collect(),
        ..DeerScenario::default()
    }
}
