use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (rows + cols).max(1) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

/// Gaussian direction normalized to unit length (zero-length input gives the empty vector).
pub fn random_unit_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Array1<f64> {
    loop {
        let v: Array1<f64> = Array1::from_shape_simple_fn(len, || StandardNormal.sample(rng));
        let norm = v.dot(&v).sqrt();
        if len == 0 {
            return v;
        }
        if norm > 1e-12 {
            return v / norm;
        }
    }
}
