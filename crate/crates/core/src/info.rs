//! Base-2 information measures.

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

/// Derivative of [`binary_entropy`], `log2((1 - p) / p)`.
pub fn binary_entropy_derivative(p: f64) -> f64 {
    ((1.0 - p) / p).log2()
}
