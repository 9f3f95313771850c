//! Fixed inputs shared by the benchmarks.

use reebcz::orbits::ellipsoid_system;
use reebcz::{BlockPath, ExactReal, Orbit, OrbitSystem};

fn q(s: &str) -> ExactReal {
    ExactReal::parse(s).expect("valid literal")
}

/// The golden rotation with action equal to its mean index.
pub fn golden_system() -> OrbitSystem {
    OrbitSystem::new(vec![Orbit {
        label: Some("golden".into()),
        path: BlockPath::rotation(q("-1/2+1/2*sqrt5")).expect("valid block"),
        action: q("sqrt5-1"),
    }])
    .expect("valid system")
}

/// Ellipsoid with the given axes, e.g. `["1", "sqrt2"]`.
pub fn ellipsoid(deltas: &[&str]) -> OrbitSystem {
    let d: Vec<ExactReal> = deltas.iter().map(|s| q(s)).collect();
    ellipsoid_system(&d).expect("irrational ratios")
}

/// A path mixing every block kind.
pub fn mixed_path() -> BlockPath {
    BlockPath::loop_only(1)
        .direct_sum(&BlockPath::rotation(q("sqrt2-1")).expect("valid block"))
        .direct_sum(&BlockPath::rotation(q("3/7")).expect("valid block"))
        .direct_sum(&BlockPath::hyperbolic(2, false).expect("valid block"))
        .direct_sum(&BlockPath::shear(reebcz::ShearForm::QPlus { d: 1 }).expect("valid block"))
}
