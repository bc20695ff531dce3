#![allow(dead_code)]

use aem::numerics::Trainable;

/// Parameters and accumulated gradients in visiting order.
pub fn flat_params<T: Trainable + ?Sized>(model: &mut T) -> (Vec<f64>, Vec<f64>) {
    let (mut p, mut g) = (Vec::new(), Vec::new());
    model.visit_params(&mut |value, grad| {
        p.extend_from_slice(value);
        g.extend_from_slice(grad);
    });
    (p, g)
}

pub fn set_params<T: Trainable + ?Sized>(model: &mut T, flat: &[f64]) {
    let mut offset = 0;
    model.visit_params(&mut |value, _| {
        value.copy_from_slice(&flat[offset..offset + value.len()]);
        offset += value.len();
    });
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
