//! Inputs shared by the kernel benchmarks.

use hdqkit_core::grid::{Axis, GridFunction, GridSpec};
use hdqkit_core::jgroup::{JGroupFunction, JGroupSpec};
use hdqkit_core::linalg::C64;
use hdqkit_core::matrix_basis::synthesize_basis;

pub const THETA: f64 = 2.0;

/// `b₀₀` on an `m × m` grid of half-width `6√θ`.
pub fn ground_state(m: usize) -> GridFunction {
    let spec = GridSpec::new(1, m, 6.0 * THETA.sqrt(), THETA).expect("bench grid");
    synthesize_basis(spec, 1).expect("bench basis").get(0, 0).clone()
}

/// A modulated Gaussian on the standard j-group box with `points` per axis.
pub fn jgroup_gaussian(points: usize) -> JGroupFunction {
    let s = JGroupSpec::standard(THETA);
    let ax = |a: Axis| Axis::new(points, a.l);
    let spec = JGroupSpec::new(ax(s.a), ax(s.xq), ax(s.xp), ax(s.l), THETA).expect("bench j-group grid");
    JGroupFunction::from_fn(spec, |g| {
        let r = g.a * g.a / 0.5 + (g.x[0] * g.x[0] + g.x[1] * g.x[1]) / 2.5 + g.l * g.l / 3.0;
        C64::from_polar((-r).exp(), 0.3 * g.x[0] - 0.2 * g.l)
    })
}
