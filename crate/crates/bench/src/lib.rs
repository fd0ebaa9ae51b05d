//! Shared fixtures for the benchmarks in `benches/`.

use dynacc_core::io::{LoadedScenario, ScenarioConfig};
use dynacc_core::pipeline::{prepare, PreparedScenario};
use dynacc_core::synthgen::{generate, SynthSpec};

/// Prepared synthetic city with `rings` rings and `radials` radials.
pub fn city(rings: usize, radials: usize) -> PreparedScenario {
    let spec = SynthSpec {
        rings,
        radials,
        ..SynthSpec::default()
    };
    let data = generate(&spec).expect("valid spec");
    let loaded =
        LoadedScenario::from_data(ScenarioConfig::default(), data).expect("valid scenario");
    prepare(loaded).expect("prepared scenario")
}
