use crate::error::{Error, Result};

/// Outcome of [`line_search_scan`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanResult {
    pub alpha: f64,
    pub value: f64,
}

/// Global minimization of `fval` on `[0, alpha_star]`: a uniform grid of
/// `grid_points` nodes, then golden-section refinement inside the two cells
/// adjacent to the best node. Non-finite values are skipped; ties keep the
/// smaller step.
pub fn line_search_scan<F: FnMut(f64) -> f64>(
    mut fval: F,
    alpha_star: f64,
    grid_points: usize,
    refine_iters: usize,
) -> Result<ScanResult> {
    if !(alpha_star > 0.0) || !alpha_star.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha_star must be positive and finite, got {alpha_star}"
        )));
    }
    let n = grid_points.max(2);
    let h = alpha_star / (n - 1) as f64;
    let mut best: Option<(usize, ScanResult)> = None;
    for k in 0..n {
        let alpha = if k == n - 1 { alpha_star } else { k as f64 * h };
        let value = fval(alpha);
        if !value.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, b)| value < b.value) {
            best = Some((k, ScanResult { alpha, value }));
        }
    }
    let (k, mut best) = best.ok_or(Error::LineSearchExhausted)?;

    let mut lo = if k == 0 { 0.0 } else { (k - 1) as f64 * h };
    let mut hi = if k + 1 >= n { alpha_star } else { ((k + 1) as f64 * h).min(alpha_star) };
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = fval(c);
    let mut fd = fval(d);
    let consider = |alpha: f64, value: f64, best: &mut ScanResult| {
        if value.is_finite() && (value < best.value || (value == best.value && alpha < best.alpha)) {
            *best = ScanResult { alpha, value };
        }
    };
    consider(c, fc, &mut best);
    consider(d, fd, &mut best);
    for _ in 0..refine_iters {
        // non-finite values count as +inf
        let vc = if fc.is_finite() { fc } else { f64::INFINITY };
        let vd = if fd.is_finite() { fd } else { f64::INFINITY };
        if vc <= vd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = fval(c);
            consider(c, fc, &mut best);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = fval(d);
            consider(d, fd, &mut best);
        }
    }
    Ok(best)
}

/// Outcome of [`line_search_armijo`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmijoResult {
    /// Accepted step, `0` when stalled.
    pub alpha: f64,
    pub value: f64,
    pub k: usize,
    pub stalled: bool,
}

/// Largest exponent `k <= K_MAX` considered by the Armijo rule.
pub const ARMIJO_K_MAX: usize = 60;

/// `alpha = max gamma^k` with `fval(gamma^k) - f0 <= -sigma gamma^k norm_sq`.
pub fn line_search_armijo<F: FnMut(f64) -> f64>(
    mut fval: F,
    f0: f64,
    norm_sq: f64,
    sigma: f64,
    gamma: f64,
) -> ArmijoResult {
    let mut alpha = 1.0;
    for k in 0..=ARMIJO_K_MAX {
        let value = fval(alpha);
        if value - f0 <= -sigma * alpha * norm_sq {
            return ArmijoResult {
                alpha,
                value,
                k,
                stalled: false,
            };
        }
        alpha *= gamma;
    }
    ArmijoResult {
        alpha: 0.0,
        value: f0,
        k: ARMIJO_K_MAX,
        stalled: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_finds_parabola_vertex() {
        let r = line_search_scan(|a| (3.0 - a) * (3.0 - a), 10.0, 64, 40).unwrap();
        assert!((r.alpha - 3.0).abs() < 1e-7, "{r:?}");
    }

    #[test]
    fn scan_prefers_left_endpoint_for_increasing_profiles() {
        let r = line_search_scan(|a| a, 10.0, 64, 40).unwrap();
        assert_eq!(r.alpha, 0.0);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn scan_finds_global_of_bimodal_profile() {
        // shallow well at 0.3, deep well at 2.7
        let f = |a: f64| -0.5 * (-(a - 0.3f64).powi(2) / 0.01).exp() - (-(a - 2.7f64).powi(2) / 0.02).exp();
        let r = line_search_scan(f, 4.0, 64, 40).unwrap();
        // dense-grid oracle
        let oracle = (0..=400_000)
            .map(|i| i as f64 * 1e-5)
            .min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap())
            .unwrap();
        assert!((r.alpha - oracle).abs() < 1e-4, "{} vs {}", r.alpha, oracle);
        assert!((r.alpha - 2.7).abs() < 1e-3);
    }

    #[test]
    fn scan_skips_non_finite_values() {
        let r = line_search_scan(|a| if a > 1.0 { f64::NAN } else { -a }, 4.0, 64, 40).unwrap();
        assert!(r.alpha <= 1.0 && r.alpha > 0.9);
        assert_eq!(
            line_search_scan(|_| f64::INFINITY, 1.0, 16, 10),
            Err(Error::LineSearchExhausted)
        );
    }

    #[test]
    fn scan_bracket_shrinks_geometrically() {
        // kink at an irrational point; error is bounded by cell width * 0.618^iters
        let target = std::f64::consts::PI / 4.0;
        let r = line_search_scan(|a| (a - target).abs(), 10.0, 64, 40).unwrap();
        let width = 2.0 * 10.0 / 63.0;
        assert!((r.alpha - target).abs() <= width * 0.618f64.powi(40) * 2.0);
    }

    #[test]
    fn armijo_examples() {
        // f = x^2 at x = 1, v = 2
        let r = line_search_armijo(|a| (1.0 - 2.0 * a).powi(2), 1.0, 4.0, 0.5, 0.5);
        assert_eq!(r.alpha, 0.5);
        assert!(!r.stalled);
        // f = |x| at x = 1, v = 1
        let r = line_search_armijo(|a| (1.0 - a).abs(), 1.0, 1.0, 0.1, 0.5);
        assert_eq!(r.alpha, 1.0);
        // f = x at x = 0, v = 1
        let r = line_search_armijo(|a| -a, 0.0, 1.0, 0.5, 0.5);
        assert_eq!(r.alpha, 1.0);
    }

    #[test]
    fn armijo_stalls_on_ascent() {
        let r = line_search_armijo(|a| a, 0.0, 1.0, 0.5, 0.5);
        assert!(r.stalled);
        assert_eq!(r.alpha, 0.0);
    }
}
