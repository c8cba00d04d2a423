//! Transfer matrix of the delocalised interaction model and its singular
//! value decomposition.
//!
//! For `n` channel uses the input and output annihilation operators are
//! linked by a lower-triangular Toeplitz matrix whose first column is
//! `a_j = sqrt(gamma * lambda) * mu^{j/2} * L_j^{(-1)}(-ln lambda)`.
//! Its squared singular values are the transmissivities of the `n`
//! independent thermal attenuators the channel unravels into.

use std::io::{self, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{max_abs_diff, Real};

/// Physical parameters of a fibre instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<T> {
    lambda: T,
    mu: T,
    nu: T,
    gamma: T,
}

impl<T: Real> ChannelParams<T> {
    /// Pure-loss fibre (`nu = 0`, `gamma = 1`).
    pub fn new(lambda: T, mu: T) -> Result<Self> {
        Self::with_all(lambda, mu, T::zero(), T::one())
    }

    pub fn with_all(lambda: T, mu: T, nu: T, gamma: T) -> Result<Self> {
        let p = Self {
            lambda,
            mu,
            nu,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_nu(self, nu: T) -> Result<Self> {
        Self::with_all(self.lambda, self.mu, nu, self.gamma)
    }

    pub fn with_gamma(self, gamma: T) -> Result<Self> {
        Self::with_all(self.lambda, self.mu, self.nu, gamma)
    }

    pub fn with_lambda(self, lambda: T) -> Result<Self> {
        Self::with_all(lambda, self.mu, self.nu, self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        let (zero, one) = (T::zero(), T::one());
        if !(self.lambda >= zero && self.lambda <= one) {
            return Err(Error::invalid("lambda", format!("must lie in [0, 1], got {}", self.lambda)));
        }
        if !(self.mu >= zero && self.mu < one) {
            return Err(Error::invalid("mu", format!("must lie in [0, 1), got {}", self.mu)));
        }
        if !(self.nu >= zero && self.nu.is_finite()) {
            return Err(Error::invalid("nu", format!("must be finite and >= 0, got {}", self.nu)));
        }
        if !(self.gamma > zero && self.gamma <= one) {
            return Err(Error::invalid("gamma", format!("must lie in (0, 1], got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }
    pub fn mu(&self) -> T {
        self.mu
    }
    pub fn nu(&self) -> T {
        self.nu
    }
    pub fn gamma(&self) -> T {
        self.gamma
    }
}

/// `n x n` lower-triangular Toeplitz transfer matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix<T: Real> {
    generator: Vec<T>,
    entries: DMatrix<T>,
}

impl<T: Real> TransferMatrix<T> {
    /// Builds the matrix from its first column.
    pub fn from_generator(generator: Vec<T>) -> Result<Self> {
        let n = generator.len();
        if n == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        let entries = DMatrix::from_fn(n, n, |i, k| if i >= k { generator[i - k] } else { T::zero() });
        Ok(Self { generator, entries })
    }

    pub fn n(&self) -> usize {
        self.generator.len()
    }

    pub fn generator(&self) -> &[T] {
        &self.generator
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<T> {
        self.entries
    }

    /// Writes the matrix row-major, one row per line, 17 significant digits.
    pub fn dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for row in self.entries.row_iter() {
            let line: Vec<String> = row
                .iter()
                .map(|x| format!("{:.16e}", x.to_f64().unwrap_or(f64::NAN)))
                .collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// First column `a_0..a_{n-1}` of the transfer matrix.
///
/// Uses the Laguerre recurrence on `b_j = mu^{j/2} L_j^{(-1)}(x)` directly so
/// that the geometric damping is applied term by term and nothing overflows.
pub fn dim_generator<T: Real>(n: usize, params: &ChannelParams<T>) -> Vec<T> {
    let (lambda, mu, gamma) = (params.lambda(), params.mu(), params.gamma());
    let mut g = vec![T::zero(); n];
    if n == 0 || lambda == T::zero() {
        return g;
    }
    let scale = (lambda * gamma).sqrt();
    g[0] = scale;
    if lambda == T::one() || mu == T::zero() {
        return g;
    }
    let x = -lambda.ln();
    let s = mu.sqrt();
    let two = T::lit(2.0);
    let (mut prev, mut cur) = (T::one(), -x * s);
    if n > 1 {
        g[1] = scale * cur;
    }
    for (j, slot) in g.iter_mut().enumerate().skip(2) {
        let jf = T::from_usize_lossy(j);
        let next = ((two * jf - two - x) * s * cur - (jf - two) * mu * prev) / jf;
        prev = cur;
        cur = next;
        *slot = scale * cur;
    }
    g
}

/// Transfer matrix of `n` uses of the fibre.
pub fn build_dim_matrix<T: Real>(n: usize, params: &ChannelParams<T>) -> Result<TransferMatrix<T>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    params.validate()?;
    TransferMatrix::from_generator(dim_generator(n, params))
}

/// Sorted effective transmissivities `eta_1 <= ... <= eta_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissivitySpectrum<T> {
    values: Vec<T>,
}

impl<T: Real> TransmissivitySpectrum<T> {
    /// Wraps already-sorted values; rejects anything outside `[0, 1]` or unsorted.
    pub fn from_sorted(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        if values.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
            return Err(Error::invalid("values", "transmissivities must lie in [0, 1]"));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("values", "must be nondecreasing"));
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        self.values[self.values.len() - 1]
    }
}

fn sorted_transmissivities<T: Real>(sigma: impl Iterator<Item = T>) -> Vec<T> {
    let mut v: Vec<T> = sigma.map(|s| (s * s).min(T::one()).max(T::zero())).collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite singular values"));
    v
}

/// Squared singular values of an arbitrary square matrix, sorted ascending.
///
/// Values are clamped to `[0, 1]`; the matrices handled here are
/// contractions, so clamping only removes rounding noise.
pub fn spectrum_of<T: Real>(m: &DMatrix<T>) -> Result<TransmissivitySpectrum<T>> {
    let sigma = T::singular_values(m.clone())
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    if sigma.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numerical("SVD produced non-finite singular values".into()));
    }
    TransmissivitySpectrum::from_sorted(sorted_transmissivities(sigma.iter().copied()))
}

pub fn transmissivity_spectrum<T: Real>(n: usize, params: &ChannelParams<T>) -> Result<TransmissivitySpectrum<T>> {
    let a = build_dim_matrix(n, params)?;
    spectrum_of(a.entries())
}

/// Encoder `o1`, decoder `o2` and spectrum with `A = o2^T diag(sqrt(eta)) o1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDecomposition<T: Real> {
    o1: DMatrix<T>,
    o2: DMatrix<T>,
    spectrum: TransmissivitySpectrum<T>,
}

impl<T: Real> ChannelDecomposition<T> {
    pub fn o1(&self) -> &DMatrix<T> {
        &self.o1
    }

    pub fn o2(&self) -> &DMatrix<T> {
        &self.o2
    }

    pub fn spectrum(&self) -> &TransmissivitySpectrum<T> {
        &self.spectrum
    }

    pub fn n(&self) -> usize {
        self.spectrum.n()
    }

    /// `o2^T diag(sqrt(eta)) o1`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        let n = self.n();
        let d = DMatrix::from_fn(n, n, |i, k| {
            if i == k {
                self.spectrum.values()[i].sqrt()
            } else {
                T::zero()
            }
        });
        self.o2.transpose() * d * &self.o1
    }
}

/// Orthogonal decomposition of an arbitrary square real matrix.
///
/// Singular triples are ordered by increasing singular value and each pair of
/// singular vectors is signed so that the first non-negligible entry of the
/// right singular vector is positive.
pub fn decompose_matrix<T: Real>(m: &DMatrix<T>) -> Result<ChannelDecomposition<T>> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::invalid("matrix", "must be square and non-empty"));
    }
    let svd = T::dense_svd(m.clone()).ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    if svd.sigma.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numerical("SVD produced non-finite singular values".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.sigma[a].partial_cmp(&svd.sigma[b]).expect("finite"));

    let mut o1 = DMatrix::zeros(n, n);
    let mut o2 = DMatrix::zeros(n, n);
    let cutoff = T::epsilon() * T::lit(64.0);
    for (row, &idx) in order.iter().enumerate() {
        let v = svd.v_t.row(idx);
        let u = svd.u.column(idx);
        let sign = v
            .iter()
            .find(|x| x.abs() > cutoff)
            .map(|&x| if x < T::zero() { -T::one() } else { T::one() })
            .unwrap_or_else(T::one);
        for k in 0..n {
            o1[(row, k)] = sign * v[k];
            o2[(row, k)] = sign * u[k];
        }
    }
    let spectrum = TransmissivitySpectrum::from_sorted(sorted_transmissivities(svd.sigma.iter().copied()))?;
    Ok(ChannelDecomposition { o1, o2, spectrum })
}

/// Channel unraveling for `n` uses: the DIM transfer matrix decomposed.
pub fn decompose<T: Real>(n: usize, params: &ChannelParams<T>) -> Result<ChannelDecomposition<T>> {
    let a = build_dim_matrix(n, params)?;
    decompose_matrix(a.entries())
}

/// Max-entry `|A(lambda1) A(lambda2) - A(lambda1 lambda2)|` at fixed `mu`, `gamma = 1`.
pub fn semigroup_residual<T: Real>(n: usize, lambda1: T, lambda2: T, mu: T) -> Result<T> {
    let a1 = build_dim_matrix(n, &ChannelParams::new(lambda1, mu)?)?;
    let a2 = build_dim_matrix(n, &ChannelParams::new(lambda2, mu)?)?;
    let a12 = build_dim_matrix(n, &ChannelParams::new(lambda1 * lambda2, mu)?)?;
    let prod = a1.entries() * a2.entries();
    Ok(max_abs_diff(&prod, a12.entries()))
}
