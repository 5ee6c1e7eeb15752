//! Named experiment configurations.

use wmac_formation::{
    ControlParams, DeltaBounds, FadingDistribution, FormationSpec, InitialCondition, SimConfig, TopologyMode,
};

use crate::error::{CliError, Result};

pub const PRESET_NAMES: &[&str] = &["hexagon6"];

/// Six agents converging to a unit hexagon with `a = b = 0.5`, `sigma = 0.8`,
/// fading `U(0, 1)` and intervals `U(10, 30)` over random strongly connected
/// topologies.
pub fn hexagon6(seed: u64) -> SimConfig {
    let n = 6;
    SimConfig {
        n,
        seed,
        max_rounds: 50,
        convergence_tol: 1e-2,
        sample_rate: 50,
        shadow_check: false,
        formation: FormationSpec::regular_polygon(n, 1.0).expect("hexagon is valid"),
        params: ControlParams::uniform(n, 0.5, 0.5, 0.8),
        delta_bounds: DeltaBounds { min: 10.0, max: 30.0 },
        fading: FadingDistribution::Uniform { lo: 0.0, hi: 1.0 },
        topology: TopologyMode::RandomStronglyConnected { extra_arc_probability: 0.6 },
        initial: InitialCondition::UniformBox { lo: -1.0, hi: 1.0 },
    }
}

pub fn preset(name: &str, seed: u64) -> Result<SimConfig> {
    match name {
        "hexagon6" => Ok(hexagon6(seed)),
        other => Err(CliError::UnknownPreset(other.to_string())),
    }
}
