//! Beta and Binomial CDFs for integer-parameter posteriors, computed by two
//! deliberately independent routes.
//!
//! The Beta CDF integrates the density with Gauss–Legendre quadrature: for
//! integer shape parameters the density is a polynomial of degree a+b−2, so
//! a rule with ⌈(a+b−1)/2⌉ nodes integrates it exactly up to rounding. The
//! Binomial CDF is a direct sum of probability masses. Neither route knows
//! about the identity F^β_{a,b}(x) = 1 − F^B_{a+b−1,x}(a−1), which is what
//! makes the residual check on that identity meaningful.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum CdfError {
    ShapeOutOfRange { a: u32, b: u32 },
    ProbabilityOutOfRange(f64),
    ShapeTooLarge { a: u32, b: u32 },
}

impl fmt::Display for CdfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CdfError::ShapeOutOfRange { a, b } => {
                write!(f, "Beta shape parameters must be ≥ 1, got ({a}, {b})")
            }
            CdfError::ProbabilityOutOfRange(x) => write!(f, "argument {x} outside [0, 1]"),
            CdfError::ShapeTooLarge { a, b } => write!(
                f,
                "integer-parameter CDF supports a + b ≤ {MAX_TOTAL_SHAPE}, got ({a}, {b})"
            ),
        }
    }
}

impl std::error::Error for CdfError {}

/// Largest supported a+b; beyond this the binomial coefficients leave the
/// comfortable f64 range.
pub const MAX_TOTAL_SHAPE: u32 = 1000;

/// CDF of Beta(a, b) at `x`, for integer shapes, by quadrature.
pub fn beta_cdf(a: u32, b: u32, x: f64) -> Result<f64, CdfError> {
    check_shapes(a, b)?;
    check_unit(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    // Density is x^(a−1)(1−x)^(b−1)·(a+b−1)·C(a+b−2, a−1), a polynomial of
    // degree a+b−2; n nodes integrate degree ≤ 2n−1 exactly.
    let degree = (a + b - 2) as usize;
    let nodes = (degree / 2 + 1).max(12);
    let (points, weights) = gauss_legendre(nodes);
    let norm = (a + b - 1) as f64 * binomial_coefficient(a + b - 2, a - 1);
    let half = x / 2.0;
    let mut integral = 0.0;
    for (&p, &w) in points.iter().zip(&weights) {
        let t = half * (p + 1.0); // map [−1, 1] → [0, x]
        integral += w * t.powi(a as i32 - 1) * (1.0 - t).powi(b as i32 - 1);
    }
    Ok((half * norm * integral).clamp(0.0, 1.0))
}

/// CDF of Binomial(n, p) at `k`, by direct mass summation.
pub fn binom_cdf(n: u32, p: f64, k: u32) -> Result<f64, CdfError> {
    check_unit(p)?;
    if n > MAX_TOTAL_SHAPE {
        return Err(CdfError::ShapeTooLarge { a: n, b: 0 });
    }
    if k >= n {
        return Ok(1.0);
    }
    if p == 0.0 {
        return Ok(1.0);
    }
    if p == 1.0 {
        return Ok(0.0); // k < n mass is all at n
    }
    let ratio = p / (1.0 - p);
    let mut mass = (1.0 - p).powi(n as i32);
    let mut cdf = mass;
    for i in 0..k {
        mass *= (n - i) as f64 / (i + 1) as f64 * ratio;
        cdf += mass;
    }
    Ok(cdf.clamp(0.0, 1.0))
}

/// Defect of the Beta/Binomial CDF identity
/// |F^β_{a,b}(x) − (1 − F^B_{a+b−1,x}(a−1))|.
pub fn cdf_identity_residual(a: u32, b: u32, x: f64) -> Result<f64, CdfError> {
    let beta = beta_cdf(a, b, x)?;
    let binom = binom_cdf(a + b - 1, x, a - 1)?;
    Ok((beta - (1.0 - binom)).abs())
}

fn check_shapes(a: u32, b: u32) -> Result<(), CdfError> {
    if a < 1 || b < 1 {
        return Err(CdfError::ShapeOutOfRange { a, b });
    }
    if a + b > MAX_TOTAL_SHAPE {
        return Err(CdfError::ShapeTooLarge { a, b });
    }
    Ok(())
}

fn check_unit(x: f64) -> Result<(), CdfError> {
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(CdfError::ProbabilityOutOfRange(x));
    }
    Ok(())
}

fn binomial_coefficient(n: u32, k: u32) -> f64 {
    let k = k.min(n - k.min(n));
    let mut c = 1.0;
    for i in 0..k {
        c *= (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-flavored initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut derivative = 0.0;
        for _ in 0..100 {
            let (value, d) = legendre_with_derivative(n, x);
            derivative = d;
            let step = value / derivative;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// P_n(x) and P'_n(x) via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut current = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let next = ((2 * k - 1) as f64 * x * current - (k - 1) as f64 * prev) / k as f64;
        prev = current;
        current = next;
    }
    let derivative = n as f64 * (x * current - prev) / (x * x - 1.0);
    (current, derivative)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_weights_sum_to_two() {
        for n in [1usize, 2, 5, 12, 24, 33] {
            let (nodes, weights) = gauss_legendre(n);
            let total: f64 = weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-12, "n = {n}");
            for pair in nodes.windows(2) {
                assert!(pair[0] < pair[1], "nodes must be sorted, n = {n}");
            }
        }
    }

    #[test]
    fn quadrature_integrates_monomials_exactly() {
        // n nodes are exact through degree 2n−1.
        let (nodes, weights) = gauss_legendre(6);
        for degree in 0..=11u32 {
            let numeric: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(&x, &w)| w * x.powi(degree as i32))
                .sum();
            let exact = if degree % 2 == 1 {
                0.0
            } else {
                2.0 / (degree as f64 + 1.0)
            };
            assert!((numeric - exact).abs() < 1e-13, "degree {degree}");
        }
    }

    #[test]
    fn uniform_beta_cdf_is_identity() {
        let value = beta_cdf(1, 1, 0.3).unwrap();
        assert!((value - 0.3).abs() < 1e-13);
        let binom = binom_cdf(1, 0.3, 0).unwrap();
        assert!((binom - 0.7).abs() < 1e-13);
        assert!(cdf_identity_residual(1, 1, 0.3).unwrap() < 1e-13);
    }

    #[test]
    fn beta_2_1_is_x_squared() {
        let value = beta_cdf(2, 1, 0.5).unwrap();
        assert!((value - 0.25).abs() < 1e-13);
        let binom = binom_cdf(2, 0.5, 1).unwrap();
        assert!((binom - 0.75).abs() < 1e-13);
    }

    #[test]
    fn cdf_edges() {
        assert_eq!(beta_cdf(3, 4, 0.0).unwrap(), 0.0);
        assert_eq!(beta_cdf(3, 4, 1.0).unwrap(), 1.0);
        assert_eq!(binom_cdf(5, 0.0, 2).unwrap(), 1.0);
        assert_eq!(binom_cdf(5, 1.0, 4).unwrap(), 0.0);
        assert_eq!(binom_cdf(5, 0.3, 5).unwrap(), 1.0);
    }

    #[test]
    fn domain_violations_rejected() {
        assert!(beta_cdf(0, 1, 0.5).is_err());
        assert!(beta_cdf(1, 0, 0.5).is_err());
        assert!(beta_cdf(1, 1, 1.5).is_err());
        assert!(beta_cdf(1, 1, -0.1).is_err());
        assert!(binom_cdf(5, 1.2, 2).is_err());
        assert!(beta_cdf(900, 900, 0.5).is_err());
    }

    #[test]
    fn identity_residual_spot_checks() {
        for (a, b, x) in [
            (2u32, 3u32, 0.4),
            (7, 2, 0.85),
            (20, 20, 0.5),
            (1, 20, 0.05),
        ] {
            let residual = cdf_identity_residual(a, b, x).unwrap();
            assert!(residual < 1e-12, "a={a} b={b} x={x}: {residual}");
        }
    }
}
