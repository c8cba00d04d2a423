//! Finite-`M` beam-splitter network and Gaussian-state propagation.
//!
//! The fibre is cut into `M` segments. Segment `j` couples every passing
//! signal to its own environment line `j` through a beam splitter of
//! transmissivity `lambda^{1/M}`; between consecutive signals each line is
//! partially reset by a second beam splitter of transmissivity `mu` that
//! mixes in a fresh bath mode. As `M` grows the signal-to-signal block of
//! the network converges to [`build_dim_matrix`](crate::toeplitz::build_dim_matrix).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{max_abs_diff, Real};
use crate::toeplitz::{build_dim_matrix, ChannelDecomposition, ChannelParams};

/// Largest `n * m_steps` for which the environment block is materialised.
pub const ENVIRONMENT_GUARD: usize = 5000;
/// Largest mode count `n + n * m_steps` of [`full_interferometer`].
pub const INTERFEROMETER_GUARD: usize = 256;

fn check_network_args<T: Real>(m_steps: usize, n: usize, lambda: T, mu: T) -> Result<()> {
    if m_steps == 0 {
        return Err(Error::invalid("m_steps", "must be >= 1"));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    ChannelParams::new(lambda, mu).map(|_| ())
}

/// Coefficients of the input modes in the `n` output signals after `M` segments.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMCoefficients<T: Real> {
    pub m_steps: usize,
    pub n: usize,
    /// `n x n`, lower triangular.
    pub a_matrix: DMatrix<T>,
    /// `n x nM` bath coefficients, only when tracked.
    pub e_matrix: Option<DMatrix<T>>,
    /// Max-entry `|A A^T + E E^T - I|`, only when tracked.
    pub gram_residual: Option<T>,
}

/// Runs the segment recurrences
///
/// ```text
/// a_{i,j} = sqrt(l) a_{i,j-1} + sqrt(1-l) m_{i-1,j}
/// m_{i,j} = -sqrt(1-mu) b_{i+1}^{(j)} + sqrt(mu l) m_{i-1,j} - sqrt(mu (1-l)) a_{i,j-1}
/// ```
///
/// with `l = lambda^{1/M}` and `m_{0,j} = b_1^{(j)}`. Operators are stored as
/// coefficient vectors over `(a_1..a_n, b)`, `b` ordered `b_1^{(1..M)}, b_2^{(1..M)}, ...`.
pub fn finite_m_coefficients<T: Real>(
    m_steps: usize,
    n: usize,
    lambda: T,
    mu: T,
    track_environment: bool,
) -> Result<FiniteMCoefficients<T>> {
    check_network_args(m_steps, n, lambda, mu)?;
    if track_environment && n.saturating_mul(m_steps) > ENVIRONMENT_GUARD {
        return Err(Error::SizeGuard(format!(
            "environment tracking needs n * m_steps <= {ENVIRONMENT_GUARD}, got {}",
            n * m_steps
        )));
    }
    let width = if track_environment { n + n * m_steps } else { n };
    let bath = |i: usize, j: usize| n + i * m_steps + j; // b_{i+1}^{(j+1)}, zero-based

    let seg = lambda.powf(T::one() / T::from_usize_lossy(m_steps));
    let (s, c) = (seg.sqrt(), (T::one() - seg).sqrt());
    let (sm, cm) = (mu.sqrt(), (T::one() - mu).sqrt());

    // signal i after the segments processed so far
    let mut signals: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut v = vec![T::zero(); width];
            v[i] = T::one();
            v
        })
        .collect();
    let mut line = vec![T::zero(); width];

    for j in 0..m_steps {
        line.iter_mut().for_each(|x| *x = T::zero());
        if track_environment {
            line[bath(0, j)] = T::one();
        }
        for i in 0..n {
            let sig = &mut signals[i];
            for (a, m) in sig.iter_mut().zip(line.iter_mut()) {
                let (a0, m0) = (*a, *m);
                *a = s * a0 + c * m0;
                *m = sm * (s * m0 - c * a0);
            }
            if track_environment && i + 1 < n {
                line[bath(i + 1, j)] = -cm;
            }
        }
    }

    let a_matrix = DMatrix::from_fn(n, n, |i, k| signals[i][k]);
    let (e_matrix, gram_residual) = if track_environment {
        let e = DMatrix::from_fn(n, n * m_steps, |i, k| signals[i][n + k]);
        let gram = &a_matrix * a_matrix.transpose() + &e * e.transpose();
        let r = max_abs_diff(&gram, &DMatrix::identity(n, n));
        (Some(e), Some(r))
    } else {
        (None, None)
    };
    Ok(FiniteMCoefficients {
        m_steps,
        n,
        a_matrix,
        e_matrix,
        gram_residual,
    })
}

/// Orthogonal matrix of the whole network in the Heisenberg picture.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferometer<T: Real> {
    pub m_steps: usize,
    pub n: usize,
    /// Row `r` holds the input-mode coefficients of output mode `r`; modes are
    /// ordered signals first, then `b_i^{(j)}` as in [`finite_m_coefficients`].
    pub matrix: DMatrix<T>,
}

impl<T: Real> Interferometer<T> {
    pub fn signal_block(&self) -> DMatrix<T> {
        self.matrix.view((0, 0), (self.n, self.n)).into_owned()
    }

    pub fn orthogonality_residual(&self) -> T {
        crate::scalar::orthogonality_residual(&self.matrix)
    }
}

fn rotate_rows<T: Real>(u: &mut DMatrix<T>, p: usize, q: usize, c: T, s: T) {
    // new_p = c p + s q ; new_q = -s p + c q
    for k in 0..u.ncols() {
        let (x, y) = (u[(p, k)], u[(q, k)]);
        u[(p, k)] = c * x + s * y;
        u[(q, k)] = c * y - s * x;
    }
}

/// Builds the network as an explicit product of two-mode rotations.
///
/// For each signal `i` and segment `j`: first the coupling beam splitter
/// between signal `i` and environment line `j`, then the thermalisation
/// beam splitter between line `j` and bath mode `b_{i+1}^{(j)}`.
pub fn full_interferometer<T: Real>(m_steps: usize, n: usize, lambda: T, mu: T) -> Result<Interferometer<T>> {
    check_network_args(m_steps, n, lambda, mu)?;
    let modes = n + n * m_steps;
    if modes > INTERFEROMETER_GUARD {
        return Err(Error::SizeGuard(format!(
            "interferometer needs n + n * m_steps <= {INTERFEROMETER_GUARD}, got {modes}"
        )));
    }
    let bath = |i: usize, j: usize| n + i * m_steps + j;
    let seg = lambda.powf(T::one() / T::from_usize_lossy(m_steps));
    let (s, c) = (seg.sqrt(), (T::one() - seg).sqrt());
    let (sm, cm) = (mu.sqrt(), (T::one() - mu).sqrt());

    let mut u = DMatrix::<T>::identity(modes, modes);
    for i in 0..n {
        for j in 0..m_steps {
            // environment line j always lives in the slot of b_1^{(j)}
            let e = bath(0, j);
            rotate_rows(&mut u, i, e, s, c);
            if i + 1 < n {
                // line <- sqrt(mu) e - sqrt(1-mu) b; the other port exits into slot b
                rotate_rows(&mut u, bath(i + 1, j), e, sm, cm);
            }
        }
    }
    Ok(Interferometer { m_steps, n, matrix: u })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePoint<T> {
    pub m_steps: usize,
    pub error: T,
}

/// Max-entry distance between the finite-`M` signal block and the limit matrix.
pub fn convergence_study<T: Real>(n: usize, lambda: T, mu: T, m_list: &[usize]) -> Result<Vec<ConvergencePoint<T>>> {
    if m_list.is_empty() {
        return Err(Error::invalid("m_list", "must be non-empty"));
    }
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("m_list", "must be strictly increasing"));
    }
    let limit = build_dim_matrix(n, &ChannelParams::new(lambda, mu)?)?;
    m_list
        .iter()
        .map(|&m| {
            let fm = finite_m_coefficients(m, n, lambda, mu, false)?;
            Ok(ConvergencePoint {
                m_steps: m,
                error: max_abs_diff(&fm.a_matrix, limit.entries()),
            })
        })
        .collect()
}

/// Gaussian state in quadrature ordering `x_1, p_1, ..., x_n, p_n`; the
/// vacuum has covariance `I`, a thermal mode `(2 nu + 1) I`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState<T: Real> {
    mean: DVector<T>,
    covariance: DMatrix<T>,
}

/// Tolerance of the uncertainty-relation check.
const UNCERTAINTY_SLACK: f64 = 1e-9;
const SYMMETRY_SLACK: f64 = 1e-12;

impl<T: Real> GaussianState<T> {
    pub fn new(mean: DVector<T>, covariance: DMatrix<T>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::invalid("mean", format!("length must be a positive even number, got {dim}")));
        }
        if covariance.nrows() != dim || covariance.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: covariance.nrows().max(covariance.ncols()),
            });
        }
        let state = Self { mean, covariance };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn vacuum(n: usize) -> Self {
        Self::thermal(n, T::zero())
    }

    pub fn thermal(n: usize, nu: T) -> Self {
        let v = T::lit(2.0) * nu + T::one();
        Self {
            mean: DVector::zeros(2 * n),
            covariance: DMatrix::identity(2 * n, 2 * n) * v,
        }
    }

    /// Coherent state with the given quadrature means.
    pub fn coherent(mean: DVector<T>) -> Result<Self> {
        let dim = mean.len();
        Self::new(mean, DMatrix::identity(dim, dim))
    }

    pub fn n(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<T> {
        &self.covariance
    }

    /// Smallest eigenvalue of `V + i Omega`, evaluated through its real
    /// symmetric embedding `[[V, -Omega], [Omega, V]]`.
    pub fn uncertainty_margin(&self) -> T {
        let d = self.mean.len();
        let omega = symplectic_form::<T>(self.n());
        let mut big = DMatrix::zeros(2 * d, 2 * d);
        big.view_mut((0, 0), (d, d)).copy_from(&self.covariance);
        big.view_mut((d, d), (d, d)).copy_from(&self.covariance);
        big.view_mut((0, d), (d, d)).copy_from(&(-&omega));
        big.view_mut((d, 0), (d, d)).copy_from(&omega);
        T::symmetric_eigenvalues(big).iter().copied().fold(T::infinity(), T::min)
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.mean.iter().chain(self.covariance.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("state", "non-finite entries"));
        }
        let asym = max_abs_diff(&self.covariance, &self.covariance.transpose());
        if asym > T::lit(SYMMETRY_SLACK) * T::one().max(self.covariance.iter().fold(T::zero(), |m, v| m.max(v.abs()))) {
            return Err(Error::invalid("covariance", format!("not symmetric (residual {asym})")));
        }
        let margin = self.uncertainty_margin();
        if margin < -T::lit(UNCERTAINTY_SLACK) {
            return Err(Error::invalid(
                "covariance",
                format!("violates the uncertainty relation (min eigenvalue {margin})"),
            ));
        }
        Ok(())
    }
}

/// `Omega = diag([[0, 1], [-1, 0]], ...)`.
pub fn symplectic_form<T: Real>(n: usize) -> DMatrix<T> {
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        omega[(2 * k, 2 * k + 1)] = T::one();
        omega[(2 * k + 1, 2 * k)] = -T::one();
    }
    omega
}

/// `M (x) I_2`: the same real matrix acting on the `x` and `p` quadratures.
pub fn quadrature_doubling<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let (r, c) = m.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, k| if i % 2 == k % 2 { m[(i / 2, k / 2)] } else { T::zero() })
}

/// Applies the linear map `x -> A x` on mode operators together with
/// thermal noise `(2 nu + 1)(I - S S^T)`.
pub fn apply_linear_channel<T: Real>(state: &GaussianState<T>, a: &DMatrix<T>, nu: T) -> Result<GaussianState<T>> {
    if a.nrows() != state.n() || a.ncols() != state.n() {
        return Err(Error::DimensionMismatch {
            expected: state.n(),
            found: a.nrows(),
        });
    }
    let s = quadrature_doubling(a);
    let d = s.nrows();
    let noise = (DMatrix::identity(d, d) - &s * s.transpose()) * (T::lit(2.0) * nu + T::one());
    let mean = &s * &state.mean;
    let mut cov = &s * &state.covariance * s.transpose() + noise;
    symmetrize(&mut cov);
    Ok(GaussianState { mean, covariance: cov })
}

fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let half = T::lit(0.5);
    let n = m.nrows();
    for i in 0..n {
        for k in i + 1..n {
            let v = half * (m[(i, k)] + m[(k, i)]);
            m[(i, k)] = v;
            m[(k, i)] = v;
        }
    }
}

/// Output of `n` uses of the fibre on `state`.
pub fn propagate_gaussian<T: Real>(state: &GaussianState<T>, n: usize, params: &ChannelParams<T>) -> Result<GaussianState<T>> {
    if state.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: state.n(),
        });
    }
    let a = build_dim_matrix(n, params)?;
    let out = apply_linear_channel(state, a.entries(), params.nu())?;
    out.check_invariants()
        .map_err(|e| Error::Numerical(format!("output state invalid: {e}")))?;
    Ok(out)
}

/// Single-mode thermal attenuator of transmissivity `lambda` and noise `nu`.
pub fn apply_attenuator<T: Real>(state: &GaussianState<T>, lambda: T, nu: T) -> Result<GaussianState<T>> {
    if state.n() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: state.n(),
        });
    }
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(Error::invalid("lambda", format!("must lie in [0, 1], got {lambda}")));
    }
    if !(nu >= T::zero()) {
        return Err(Error::invalid("nu", format!("must be >= 0, got {nu}")));
    }
    apply_linear_channel(state, &DMatrix::from_element(1, 1, lambda.sqrt()), nu)
}

/// Passive rotation `a -> o a` of the mode operators.
pub fn apply_passive<T: Real>(state: &GaussianState<T>, o: &DMatrix<T>) -> Result<GaussianState<T>> {
    apply_linear_channel(state, o, T::zero())
}

/// The unraveled route: encoder `o1`, independent attenuators of
/// transmissivities `eta_i`, then decoder `o2^T`.
pub fn propagate_unraveled<T: Real>(
    state: &GaussianState<T>,
    decomposition: &ChannelDecomposition<T>,
    nu: T,
) -> Result<GaussianState<T>> {
    let encoded = apply_passive(state, decomposition.o1())?;
    let etas = decomposition.spectrum().values();
    let diag = DMatrix::from_fn(etas.len(), etas.len(), |i, k| if i == k { etas[i].sqrt() } else { T::zero() });
    let attenuated = apply_linear_channel(&encoded, &diag, nu)?;
    apply_passive(&attenuated, &decomposition.o2().transpose())
}

#[derive(Serialize, Deserialize)]
struct GaussianStateRepr<T> {
    n: usize,
    mean: Vec<T>,
    covariance: Vec<Vec<T>>,
}

impl<T: Real + Serialize> Serialize for GaussianState<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GaussianStateRepr {
            n: self.n(),
            mean: self.mean.iter().copied().collect(),
            covariance: self
                .covariance
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for GaussianState<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = GaussianStateRepr::<T>::deserialize(deserializer)?;
        let d = 2 * repr.n;
        if repr.mean.len() != d {
            return Err(D::Error::custom(format!("mean must have length 2n = {d}, got {}", repr.mean.len())));
        }
        if repr.covariance.len() != d || repr.covariance.iter().any(|r| r.len() != d) {
            return Err(D::Error::custom(format!("covariance must be {d} x {d}")));
        }
        let mean = DVector::from_vec(repr.mean);
        let cov = DMatrix::from_fn(d, d, |i, k| repr.covariance[i][k]);
        GaussianState::new(mean, cov).map_err(D::Error::custom)
    }
}
