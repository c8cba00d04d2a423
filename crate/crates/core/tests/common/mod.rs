#![allow(dead_code)]

use fibremem::GaussianState;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;

/// One-sided Jacobi SVD. Returns singular values (descending) and the matrix
/// whose columns are the matching right singular vectors.
pub fn jacobi_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.ncols();
    let mut u = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = u.column(p).iter().map(|x| x * x).sum();
                let beta: f64 = u.column(q).iter().map(|x| x * x).sum();
                let gamma: f64 = u.column(p).dot(&u.column(q));
                if gamma.abs() <= 1e-300 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(1e-300));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut u, &mut v] {
                    for k in 0..m.nrows() {
                        let (x, y) = (m[(k, p)], m[(k, q)]);
                        m[(k, p)] = c * x - s * y;
                        m[(k, q)] = s * x + c * y;
                    }
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|k| u.column(k).norm()).collect();
    idx.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let sigma = idx.iter().map(|&k| norms[k]).collect();
    let vs = DMatrix::from_fn(n, n, |r, c| v[(r, idx[c])]);
    (sigma, vs)
}

/// `L_m^{(-1)}(x)` from the defining finite sum.
pub fn laguerre_sum(m: usize, x: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let binom = |n: usize, k: usize| -> f64 {
        if k > n {
            return 0.0;
        }
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    let mut fact = 1.0;
    let mut total = 0.0;
    for k in 0..=m {
        if k > 0 {
            fact *= k as f64;
        }
        total += binom(m - 1, m - k) * (-x).powi(k as i32) / fact;
    }
    total
}

/// Transfer matrix built entry by entry from the defining sum.
pub fn transfer_matrix_oracle(n: usize, lambda: f64, mu: f64, gamma: f64) -> DMatrix<f64> {
    let x = -lambda.ln();
    DMatrix::from_fn(n, n, |i, k| {
        if k > i {
            0.0
        } else {
            let j = i - k;
            (lambda * gamma).sqrt() * mu.powf(j as f64 / 2.0) * laguerre_sum(j, x)
        }
    })
}

pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a) > 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == fa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Random orthogonal matrix from Gram-Schmidt on Gaussian-ish columns.
pub fn random_orthogonal(rng: &mut StdRng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

/// Physical state: squeezed thermal modes mixed by a random passive network, displaced.
pub fn random_state(rng: &mut StdRng, n: usize) -> GaussianState<f64> {
    let mut d = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for k in 0..n {
        let th = 2.0 * rng.gen_range(0.0..1.5) + 1.0;
        let r: f64 = rng.gen_range(-1.0..1.0);
        d[(2 * k, 2 * k)] = th * r.exp();
        d[(2 * k + 1, 2 * k + 1)] = th * (-r).exp();
    }
    let o = random_orthogonal(rng, n);
    let s = o.kronecker(&DMatrix::<f64>::identity(2, 2));
    let mut v = &s * d * s.transpose();
    v = (&v + v.transpose()) * 0.5;
    let mean = DVector::from_fn(2 * n, |_, _| rng.gen_range(-2.0..2.0));
    GaussianState::new(mean, v).expect("valid random state")
}
