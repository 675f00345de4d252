use crate::density::grid::GridDensity;
use crate::scalar::Real;

/// `max_i |f(x_i) - f(-x_i)| <= tol` over the grid centres.
pub fn is_symmetric<T: Real>(f: &GridDensity<T>, tol: T) -> bool {
    let v = f.values();
    let n = v.len();
    if f.is_centered() {
        (0..n / 2).all(|i| (v[i] - v[n - 1 - i]).abs() <= tol)
    } else {
        f.centers()
            .zip(v)
            .all(|(x, &fx)| (fx - f.eval(-x)).abs() <= tol)
    }
}

/// Non-increasing away from zero on both sides, up to `tol` per step.
pub fn is_unimodal<T: Real>(f: &GridDensity<T>, tol: T) -> bool {
    let v = f.values();
    let xs: Vec<T> = f.centers().collect();
    v.windows(2).zip(xs.windows(2)).all(|(w, x)| {
        if x[0] >= T::zero() {
            w[1] <= w[0] + tol
        } else if x[1] <= T::zero() {
            w[0] <= w[1] + tol
        } else {
            true
        }
    })
}

/// Largest absolute step between neighbouring samples divided by the spacing.
pub fn max_slope<T: Real>(f: &GridDensity<T>) -> T {
    let h = f.spacing();
    f.values()
        .windows(2)
        .fold(T::zero(), |m, w| m.max((w[1] - w[0]).abs()))
        / h
}

#[cfg(test)]
mod tests {
    use super::*;

    type GridDensity = crate::density::GridDensity<f64>;
    use crate::density::convolve::convolve;

    #[test]
    fn triangle_is_symmetric_unimodal() {
        let u = GridDensity::uniform(-1.0, 1.0, 200).unwrap();
        let t = convolve(&u, &u).unwrap();
        assert!(is_symmetric(&t, 1e-12));
        assert!(is_unimodal(&t, 1e-12));
    }

    #[test]
    fn ramp_is_not_symmetric() {
        let g = GridDensity::new(-1.0, 1.0, (0..100).map(|i| 1.0 + i as f64 / 100.0).collect()).unwrap();
        assert!(!is_symmetric(&g, 1e-6));
        assert!(is_symmetric(&GridDensity::uniform(-1.0, 1.0, 50).unwrap(), 0.0));
    }

    #[test]
    fn bimodal_mixture_is_not_unimodal() {
        let n = 800;
        let g = GridDensity::new(
            -4.0,
            4.0,
            (0..n)
                .map(|i| {
                    let x = -4.0 + (i as f64 + 0.5) * 8.0 / n as f64;
                    if (x.abs() - 2.0).abs() < 0.5 { 0.5 } else { 0.0 }
                })
                .collect(),
        )
        .unwrap();
        assert!(is_symmetric(&g, 1e-12));
        assert!(!is_unimodal(&g, 1e-12));
    }

    #[test]
    fn off_centre_grid_uses_interpolation() {
        let g = GridDensity::new(-1.0, 1.5, vec![1.0; 50]).unwrap();
        // reflections of x > 1 fall outside the support
        assert!(!is_symmetric(&g, 1e-9));
    }
}
