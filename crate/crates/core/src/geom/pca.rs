use nalgebra::Vector2;

use crate::error::{Error, Result};

/// Principal axes of a planar point set.
///
/// `v1` belongs to the larger eigenvalue of the sample covariance and is
/// chosen with `x ≥ 0` (ties broken toward `y ≥ 0`); `v2` is `v1` turned
/// +90°. When the two eigenvalues coincide the axes fall back to the
/// coordinate axes.
pub fn pca_2d(points: &[Vector2<f64>]) -> Result<(Vector2<f64>, Vector2<f64>)> {
    if points.len() < 2 {
        return Err(Error::DegenerateSpread);
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Vector2::zeros(), |acc, p| acc + p) / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = p - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    sxx /= n - 1.0;
    sxy /= n - 1.0;
    syy /= n - 1.0;

    let trace = sxx + syy;
    let scale = 1.0 + mean.norm_squared();
    if !(trace > 1e-24 * scale) {
        return Err(Error::DegenerateSpread);
    }
    // eigenvalues are trace/2 ± r
    let r = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    if r <= 1e-12 * trace {
        return Ok((Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)));
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (s, c) = angle.sin_cos();
    let mut v1 = Vector2::new(c, s);
    if v1.x < 0.0 || (v1.x == 0.0 && v1.y < 0.0) {
        v1 = -v1;
    }
    let v2 = Vector2::new(-v1.y, v1.x);
    Ok((v1, v2))
}
