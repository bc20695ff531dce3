use ndarray::{Array2, ArrayView2, Axis};

/// Probabilities produced by [`sigmoid`] stay inside `[PROB_CLAMP, 1 - PROB_CLAMP]`
/// so that `ln D` and `ln (1 - D)` are always finite.
pub const PROB_CLAMP: f64 = 1e-7;

pub fn leaky_relu(x: &ArrayView2<f64>, slope: f64) -> Array2<f64> {
    x.mapv(|v| if v > 0.0 { v } else { slope * v })
}

/// Elementwise derivative; the subgradient at exactly zero is `slope`.
pub fn leaky_relu_derivative(x: &ArrayView2<f64>, slope: f64) -> Array2<f64> {
    x.mapv(|v| if v > 0.0 { 1.0 } else { slope })
}

/// Numerically stable logistic function, clamped away from 0 and 1.
pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Derivative of the unclamped logistic; the clamp only guards log values.
pub fn sigmoid_derivative(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// Row-wise softmax with max subtraction. Zero-width inputs pass through.
pub fn softmax(x: &ArrayView2<f64>) -> Array2<f64> {
    let mut out = x.to_owned();
    if out.ncols() == 0 {
        return out;
    }
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Backward pass of [`softmax`] given its output `y`: `y * (dy - <dy, y>)` per row.
pub fn softmax_backward(y: &ArrayView2<f64>, dy: &ArrayView2<f64>) -> Array2<f64> {
    let dots = (dy * y).sum_axis(Axis(1)).insert_axis(Axis(1));
    y * &(dy - &dots)
}
