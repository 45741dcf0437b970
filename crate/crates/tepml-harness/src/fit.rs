//! Least-squares rate fits and the discretization-floor rule.

/// Points below which no slope is reported.
pub const MIN_FIT_POINTS: usize = 3;
/// A point is above the floor when its error exceeds this multiple of it.
pub const FLOOR_FACTOR: f64 = 10.0;
/// Fraction of a predicted decay rate a measured slope must reach.
pub const SLOPE_SLACK: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
}

/// Ordinary least squares for y ≈ slope·x + intercept. `None` with fewer
/// than two points or no spread in x.
pub fn least_squares(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if !(sxx > 0.0) || !sxy.is_finite() {
        return None;
    }
    let slope = sxy / sxx;
    Some(LineFit { slope, intercept: my - slope * mx, n })
}

/// Fit of ln(e) against x; `None` if any error is not positive and finite.
pub fn fit_log(x: &[f64], e: &[f64]) -> Option<LineFit> {
    if e.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    least_squares(x, &ly)
}

/// Indices of the errors above `FLOOR_FACTOR × floor`.
pub fn above_floor(errors: &[f64], floor: f64) -> Vec<usize> {
    (0..errors.len()).filter(|&i| errors[i] > FLOOR_FACTOR * floor).collect()
}

/// Outcome of the floor-aware fit of one metric over a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// Error at the last (largest) sweep point.
    pub floor: f64,
    pub segment: Vec<usize>,
    pub fit: Option<LineFit>,
}

/// Fits the pre-floor segment of a sweep ordered by increasing `x`. The
/// floor is the error at the largest `x`; a fit needs `MIN_FIT_POINTS`
/// sweep points overall and two points above the floor.
pub fn pre_floor_fit(x: &[f64], errors: &[f64]) -> RateFit {
    let floor = errors.last().copied().unwrap_or(f64::NAN);
    let segment = above_floor(errors, floor);
    let fit = if errors.len() >= MIN_FIT_POINTS && segment.len() >= 2 {
        let sx: Vec<f64> = segment.iter().map(|&i| x[i]).collect();
        let se: Vec<f64> = segment.iter().map(|&i| errors[i]).collect();
        fit_log(&sx, &se)
    } else {
        None
    };
    RateFit { floor, segment, fit }
}

/// Fit over every point (no floor), when at least `MIN_FIT_POINTS` exist.
pub fn full_fit(x: &[f64], errors: &[f64]) -> Option<LineFit> {
    if errors.len() < MIN_FIT_POINTS {
        return None;
    }
    fit_log(x, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_an_exact_exponential() {
        let x: Vec<f64> = (0..7).map(|i| 0.3 + 0.45 * i as f64).collect();
        let e: Vec<f64> = x.iter().map(|v| 3.7 * (-0.8125 * v).exp()).collect();
        let f = fit_log(&x, &e).unwrap();
        assert!((f.slope + 0.8125).abs() < 1e-10, "{}", f.slope);
        assert!((f.intercept - 3.7f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(least_squares(&[1.0], &[2.0]).is_none());
        assert!(least_squares(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        assert!(fit_log(&[1.0, 2.0], &[1.0, 0.0]).is_none());
        assert!(full_fit(&[1.0, 2.0], &[1.0, 0.5]).is_none());
    }

    #[test]
    fn floor_segment() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let e = [1.0, 0.1, 0.02, 0.011, 0.01];
        let r = pre_floor_fit(&x, &e);
        assert_eq!(r.segment, vec![0]);
        assert!(r.fit.is_none());
        let e = [1.0, 0.3, 0.12, 0.011, 0.01];
        let r = pre_floor_fit(&x, &e);
        assert_eq!(r.segment, vec![0, 1, 2]);
        assert!(r.fit.unwrap().slope < 0.0);
        assert!(pre_floor_fit(&[1.0], &[1.0]).fit.is_none());
    }
}
