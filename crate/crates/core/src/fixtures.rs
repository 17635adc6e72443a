//! The four reference curves used throughout the tests.
//!
//! | name | f(x)                      | type  |
//! |------|---------------------------|-------|
//! | C1   | (x^2+1)(x^2+2)(x^2+3)     | (1,0) |
//! | C2   | (x^2-1)(x^2+1)(x^2+4)     | (1,1) |
//! | C3   | (x^2-1)(x^2-2)(x^2+1)     | (2,1) |
//! | C4   | (x^2-1)(x^2-4)(x^2-9)     | (3,0) |

use crate::curve::{build_curve, LiftSign, RealHyperellipticCurve, DEFAULT_TOLERANCE};

pub const C1: [f64; 7] = [6.0, 0.0, 11.0, 0.0, 6.0, 0.0, 1.0];
pub const C2: [f64; 7] = [-4.0, 0.0, -1.0, 0.0, 4.0, 0.0, 1.0];
pub const C3: [f64; 7] = [2.0, 0.0, -1.0, 0.0, -2.0, 0.0, 1.0];
pub const C4: [f64; 7] = [-36.0, 0.0, 49.0, 0.0, -14.0, 0.0, 1.0];

fn build(c: [f64; 7]) -> RealHyperellipticCurve {
    build_curve(c, LiftSign::Plus, DEFAULT_TOLERANCE).expect("fixture curve is valid")
}

pub fn c1() -> RealHyperellipticCurve {
    build(C1)
}

pub fn c2() -> RealHyperellipticCurve {
    build(C2)
}

pub fn c3() -> RealHyperellipticCurve {
    build(C3)
}

pub fn c4() -> RealHyperellipticCurve {
    build(C4)
}

pub fn all() -> [RealHyperellipticCurve; 4] {
    [c1(), c2(), c3(), c4()]
}
