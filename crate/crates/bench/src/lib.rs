//! Fixtures shared by the benchmarks.

use gavriflow::axisolver::FlowScenario;

/// The periodic example on a reduced grid, so a single solve takes milliseconds.
pub fn reduced_figure1() -> FlowScenario {
    FlowScenario { p_max: 0.04, z_min: -0.4, z_max: 0.4, p_step: 2e-3, z_step: 2e-3, ..FlowScenario::figure1() }
}
