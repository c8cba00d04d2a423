//! Adaptive composite Gauss–Legendre quadrature.
//!
//! Each panel is integrated with a fixed Gauss–Legendre rule; the error of a
//! panel is estimated by comparing the rule on the panel with the sum of the
//! rule on its two halves. Panels are bisected, largest error first, until
//! the summed error estimate drops below the requested absolute tolerance.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nodes and weights of an `order`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "rule order must be positive");
        let n = order;
        let nf = T::from_usize_lossy(n);
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let half = T::lit(0.5);
        for i in 0..n.div_ceil(2) {
            let guess = T::PI() * (T::from_usize_lossy(i + 1) - T::lit(0.25)) / (nf + half);
            let mut x = guess.cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= T::epsilon() {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d.is_finite() { d } else { dp };
            let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Applies the rule on `[a, b]`.
    pub fn integrate<F: FnMut(T) -> T>(&self, f: &mut F, a: T, b: T) -> T {
        let half = T::lit(0.5);
        let mid = half * (a + b);
        let rad = half * (b - a);
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + rad * x);
        }
        acc * rad
    }
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let (mut p0, mut p1) = (T::one(), x);
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from_usize_lossy(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions<T> {
    /// Absolute tolerance on the integral.
    pub tolerance: T,
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Budget on integrand evaluations.
    pub max_evaluations: usize,
}

impl<T: Real> QuadratureOptions<T> {
    pub fn with_tolerance(tolerance: T) -> Self {
        Self {
            tolerance,
            order: 10,
            max_evaluations: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: T,
    pub error_estimate: T,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: T,
    b: T,
    coarse: T,
    fine: T,
}

impl<T: Real> Panel<T> {
    fn error(&self) -> T {
        (self.coarse - self.fine).abs()
    }
}

fn make_panel<T: Real, F: FnMut(T) -> T>(rule: &GaussLegendre<T>, f: &mut F, a: T, b: T) -> Panel<T> {
    let mid = T::lit(0.5) * (a + b);
    let coarse = rule.integrate(f, a, b);
    let fine = rule.integrate(f, a, mid) + rule.integrate(f, mid, b);
    Panel { a, b, coarse, fine }
}

/// Integrates `f` over `[a, b]`, splitting the domain first at `breakpoints`
/// (points outside `(a, b)` are ignored).
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    breakpoints: &[T],
    opts: &QuadratureOptions<T>,
) -> Result<QuadratureResult<T>> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::invalid("bounds", format!("need finite a <= b, got [{a}, {b}]")));
    }
    if !(opts.tolerance > T::zero()) {
        return Err(Error::invalid("tolerance", "must be > 0"));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: T::zero(),
            error_estimate: T::zero(),
            evaluations: 0,
        });
    }
    let rule = GaussLegendre::new(opts.order);
    let per_panel = 3 * rule.order();

    let mut cuts = vec![a];
    let mut inner: Vec<T> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    inner.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    cuts.extend(inner);
    cuts.push(b);

    let mut panels: Vec<Panel<T>> = cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| make_panel(&rule, &mut f, w[0], w[1]))
        .collect();
    let mut evaluations = per_panel * panels.len();

    loop {
        let total_err: T = panels.iter().map(Panel::error).sum();
        if !total_err.is_finite() {
            return Err(Error::Numerical("non-finite integrand value".into()));
        }
        if total_err <= opts.tolerance {
            let value = panels.iter().map(|p| p.fine).sum();
            return Ok(QuadratureResult {
                value,
                error_estimate: total_err,
                evaluations,
            });
        }
        if evaluations + 2 * per_panel > opts.max_evaluations {
            return Err(Error::Numerical(format!(
                "quadrature did not reach tolerance {} within {} evaluations (estimate {})",
                opts.tolerance, opts.max_evaluations, total_err
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, p)| {
                if p.error() > best.1 {
                    (i, p.error())
                } else {
                    best
                }
            });
        let p = panels.swap_remove(worst);
        let mid = T::lit(0.5) * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            return Err(Error::Numerical("panel width underflow".into()));
        }
        panels.push(make_panel(&rule, &mut f, p.a, mid));
        panels.push(make_panel(&rule, &mut f, mid, p.b));
        evaluations += 2 * per_panel;
    }
}
