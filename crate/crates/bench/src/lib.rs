//! Shared fixtures for the criterion benches.

use paralip::{Lip12Fn, NondegenerateFn, SpaceTimeBox, StarlikeDomain};

/// `φ ≡ 1` over `[0, 0.1]` in the plane.
pub fn unit_disk() -> StarlikeDomain {
    StarlikeDomain::new(2, (0.0, 0.1), 0.5, 2.0, 0.0, |_, _| Ok(1.0)).expect("valid domain")
}

/// `φ = 2 + 0.25 sin(s) ω₁` over `[−1, 1]` in the plane.
pub fn breathing() -> StarlikeDomain {
    StarlikeDomain::new(2, (-1.0, 1.0), 1.5, 2.5, 0.5, |s, w| Ok(2.0 + 0.25 * s.sin() * w[0])).expect("valid domain")
}

/// `f(t, x, y) = 2y − sin x − |t|^½` with `M = K = 2`.
pub fn ift_example() -> NondegenerateFn {
    let b = SpaceTimeBox::new((-2.0, 2.0), vec![(-2.0, 2.0), (-3.0, 3.0)]).expect("valid box");
    let f = Lip12Fn::scalar(b, |t, v| 2.0 * v[1] - v[0].sin() - t.abs().sqrt()).with_declared_m(2.0);
    NondegenerateFn::new(f, 1, 2.0).expect("valid non-degeneracy")
}
