//! One-dimensional Gauss–Legendre rules and the composite integrators built on them.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the Legendre recurrence, seeded with the Chebyshev guess.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let m = order.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite rule: every interval between consecutive breakpoints is cut into `panels`
    /// equal pieces. Breakpoints must be sorted; duplicates are skipped.
    pub fn composite<F: FnMut(f64) -> f64>(&self, breakpoints: &[f64], panels: usize, mut f: F) -> f64 {
        let mut total = 0.0;
        for pair in breakpoints.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let step = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + step * p as f64;
                let hi = if p + 1 == panels { b } else { lo + step };
                total += self.integrate(lo, hi, &mut f);
            }
        }
        total
    }
}

/// Legendre polynomial P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Sorted, deduplicated breakpoints clipped to [lo, hi], always containing both ends.
pub fn breakpoints(lo: f64, hi: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = interior.into_iter().filter(|t| *t > lo && *t < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
    pts
}

/// Area of the round k-sphere of radius r embedded in R^{k+1}.
///
/// `sphere_area(0, r)` is 2 (two points), matching the counting measure on S^0.
pub fn sphere_area(k: usize, r: f64) -> f64 {
    unit_sphere_area(k) * r.powi(k as i32)
}

fn unit_sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * unit_sphere_area(k - 2),
    }
}

/// Volume of the unit ball in R^m.
pub fn unit_ball_volume(m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        unit_sphere_area(m - 1) / m as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(5);
        // degree 9 is the highest exact degree for 5 nodes
        let got = gl.integrate(-1.0, 2.0, |x| x.powi(9) - 3.0 * x.powi(4) + 1.0);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - 3.0 * (32.0 + 1.0) / 5.0 + 3.0;
        assert_relative_eq!(got, exact, max_relative = 1e-13);
        let sum: f64 = gl.weights().iter().sum();
        assert_relative_eq!(sum, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn composite_gaussian_integral() {
        let gl = GaussLegendre::new(10);
        let got = gl.composite(&[-12.0, 0.0, 12.0], 8, |x| (-x * x / 4.0).exp());
        assert_relative_eq!(got, 2.0 * PI.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(2, 2.0), 16.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(3, 1.0), 2.0 * PI * PI, max_relative = 1e-15);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-15);
        assert_relative_eq!(unit_ball_volume(2), PI, max_relative = 1e-15);
    }
}
