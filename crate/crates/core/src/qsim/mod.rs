//! Exact classical simulation of the two dual-lattice sampling subroutines.

mod bounds;
mod dist;
mod params;
mod phase;
mod resources;
mod table;
mod target;

pub use bounds::{arc_width, ARC_SUPPORT_CAP, verify_probability_bounds_1d, verify_probability_bounds_2d, BoundCheck, BoundReport, Precondition, Verdict};
pub use dist::{
    simulate_pip_dual, simulate_regulator_dual, DualDistribution, PipDual, PipDualOutput, Probs, RegulatorDual,
    RegulatorDualOutput, Sample1D, Sample2D, SimMode, DENSE_2D_CAP, NAIVE_CAP, SAMPLE_2D_CAP,
};
pub use params::{delta_ln_sq, DualParams1D, DualParams2D};
pub use phase::{KahanSum, RunSum, Twiddle};
pub use resources::{estimate_qubits, Linear, Register, ResourceReport, Which};
pub use table::{pip_pointwise, reg_pointwise, tabulate_pip, tabulate_reg, ClassLap, Margin, PipRows, RegTable, RowShift, Run, TABLE_CAP};
pub use target::{pip_run_stats, target_set_1d, target_set_2d, target_set_2d_with, DualBasisCheck, RunStats, TargetSet1D, TargetSet2D};
