//! Four-point Gauss–Legendre rule, exact for polynomials through degree 7.

use crate::scalar::Real;

const NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Nodes and weights mapped onto `[a, b]`.
pub(crate) fn gauss_legendre_4<T: Real>(a: T, b: T) -> [(T, T); 4] {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    std::array::from_fn(|i| (mid + half * T::lit(NODES[i]), half * T::lit(WEIGHTS[i])))
}
