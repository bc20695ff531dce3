/// Central-difference step for double precision.
pub const FD_STEP: f64 = 1e-5;

/// Gradients smaller than this are compared on an absolute scale.
const RELATIVE_FLOOR: f64 = 1e-6;

/// A coordinate sits on a kink when its one-sided differences disagree by
/// more than this, relative to `max(1, |numeric|)`.
const KINK_TOLERANCE: f64 = 1e-2;

/// Central differences at `h` and `h / 2` agree to `O(h²)` on smooth
/// functions; a larger gap (same scale) means a kink lies within `h`.
const NEAR_KINK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_index: Option<usize>,
    /// Coordinates where the function is not differentiable at the point.
    pub kinks: Vec<usize>,
    pub numeric: Vec<f64>,
}

impl GradCheckReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_relative_error <= tolerance && self.kinks.is_empty()
    }
}

/// Compares `analytic` with central differences of `f` at `point`.
///
/// The relative error of coordinate `i` is
/// `|a_i - n_i| / max(|a_i|, |n_i|, 1e-6)`; the report carries the maximum.
pub fn gradient_check<F>(mut f: F, point: &[f64], analytic: &[f64]) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(point.len(), analytic.len(), "gradient length must match the point");
    let h = FD_STEP;
    let mut x = point.to_vec();
    let center = f(&x);
    let mut numeric = Vec::with_capacity(point.len());
    let mut kinks = Vec::new();
    let mut max_relative_error = 0.0;
    let mut worst_index = None;
    for i in 0..point.len() {
        x[i] = point[i] + h;
        let plus = f(&x);
        x[i] = point[i] - h;
        let minus = f(&x);
        x[i] = point[i] + 0.5 * h;
        let half_plus = f(&x);
        x[i] = point[i] - 0.5 * h;
        let half_minus = f(&x);
        x[i] = point[i];

        let n = (plus - minus) / (2.0 * h);
        let n_half = (half_plus - half_minus) / h;
        let forward = (plus - center) / h;
        let backward = (center - minus) / h;
        let scale = n.abs().max(1.0);
        if (forward - backward).abs() > KINK_TOLERANCE * scale || (n - n_half).abs() > NEAR_KINK_TOLERANCE * scale {
            kinks.push(i);
        }
        let a = analytic[i];
        let err = (a - n).abs() / a.abs().max(n.abs()).max(RELATIVE_FLOOR);
        if err > max_relative_error || worst_index.is_none() {
            max_relative_error = err;
            worst_index = Some(i);
        }
        numeric.push(n);
    }
    GradCheckReport {
        max_relative_error,
        worst_index,
        kinks,
        numeric,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let report = gradient_check(|x| x[0] * x[0], &[3.0], &[6.0]);
        assert!((report.numeric[0] - 6.0).abs() < 1e-6);
        assert!(report.passed(1e-6));
    }

    #[test]
    fn leaky_relu_kink_is_flagged() {
        let lrelu = |x: &[f64]| if x[0] > 0.0 { x[0] } else { 0.1 * x[0] };
        let report = gradient_check(lrelu, &[0.0], &[0.1]);
        assert_eq!(report.kinks, vec![0]);
        assert!(!report.passed(1e-4));
        let near = gradient_check(|x| 1e-3 * lrelu(x), &[0.3 * FD_STEP], &[1e-3]);
        assert_eq!(near.kinks, vec![0]);
        let smooth = gradient_check(lrelu, &[0.5], &[1.0]);
        assert!(smooth.passed(1e-8));
    }
}
