//! Two-dimensional PCA projection and a dependency-free SVG scatter plot.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2, Axis};

use crate::{AemError, Result};

/// Projects rows onto the two leading principal components.
///
/// Components come from the exact eigendecomposition of the covariance
/// matrix. Each component's sign is fixed so that its largest-magnitude
/// entry is positive, which makes the output deterministic. When the data
/// has fewer than two dimensions the missing coordinate is zero.
pub fn pca_2d(data: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let (n, d) = data.dim();
    if n < 2 {
        return Err(AemError::config(format!("projection needs at least 2 points, got {n}")));
    }
    let mean = data.mean_axis(Axis(0)).expect("non-empty");
    let centered = data - &mean;
    let x = DMatrix::from_row_iterator(n, d, centered.iter().copied());
    let cov = x.transpose() * &x / (n - 1) as f64;
    let eigen = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    let mut out = Array2::zeros((n, 2));
    for (k, &c) in order.iter().take(2).enumerate() {
        let mut v = eigen.eigenvectors.column(c).into_owned();
        let pivot = v.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0);
        if pivot < 0.0 {
            v.neg_mut();
        }
        let scores = &x * v;
        for (i, s) in scores.iter().enumerate() {
            out[[i, k]] = *s;
        }
    }
    Ok(out)
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];
const SIZE: f64 = 600.0;
const MARGIN: f64 = 30.0;

/// Scatter plot of 2-D points, one colour per label; unlabelled points are
/// drawn hollow.
pub fn scatter_svg(points: &ArrayView2<f64>, labels: &[Option<usize>]) -> String {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for row in points.rows() {
        for k in 0..2 {
            lo[k] = lo[k].min(row[k]);
            hi[k] = hi[k].max(row[k]);
        }
    }
    let scale = |v: f64, k: usize| {
        let span = hi[k] - lo[k];
        let t = if span > 0.0 { (v - lo[k]) / span } else { 0.5 };
        MARGIN + t * (SIZE - 2.0 * MARGIN)
    };
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (row, label) in points.rows().into_iter().zip(labels) {
        let (x, y) = (scale(row[0], 0), SIZE - scale(row[1], 1));
        let _ = match label {
            Some(l) => writeln!(svg, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{}\"><title>event {l}</title></circle>", PALETTE[l % PALETTE.len()]),
            None => writeln!(svg, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"none\" stroke=\"black\"/>"),
        };
    }
    svg.push_str("</svg>\n");
    svg
}
