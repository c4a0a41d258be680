//! Shared fixtures for the benchmarks.

use qclsim_core::rng::sampling_rng;
use qclsim_core::sampling::{initial_subsystem, sample_canonical};
use qclsim_core::{CMatrix, InitialCondition, PairSampling, TwoLevelQuartic, C64};

pub fn quartic() -> TwoLevelQuartic {
    TwoLevelQuartic::new(0.7, 1.0, 1.0, 0.8, 1.0, 1.0).expect("valid quartic model")
}

/// Canonical bath samples at `kT = 0.5` dressed with a coherent subsystem state.
pub fn quartic_initial(model: &TwoLevelQuartic, n: usize) -> Vec<InitialCondition> {
    let rho = CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(0.5, 0.0), C64::new(0.3, 0.1), C64::new(0.3, -0.1), C64::new(0.5, 0.0)],
    );
    let mut rng = sampling_rng(1);
    let xs = sample_canonical(model, 0.5, 1.0, n, &mut rng).expect("canonical samples");
    xs.iter()
        .enumerate()
        .flat_map(|(i, x)| initial_subsystem(model, &rho, x, i, PairSampling::Uniform, &mut rng).expect("pairs"))
        .collect()
}
