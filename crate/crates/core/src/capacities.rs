//! Capacities of pure-loss and thermal attenuators, positivity thresholds of
//! the memory channel, and its asymptotic capacity integrals.
//!
//! At `nu = 0` every per-mode channel of the unraveled fibre is pure loss,
//! so the asymptotic capacity is `(1/2pi) int C(gamma eta(x)) dx` exactly.
//! Since both `eta` and `C` are nondecreasing, left and right Riemann sums
//! bracket the integral rigorously.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::scalar::Real;
use crate::specialfn::entropy_g;
use crate::spectral::{eta_sup, eta_unchecked, level_crossing, Crossing, SymbolModel};
use crate::toeplitz::{transmissivity_spectrum, ChannelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CapacityKind {
    /// Unassisted quantum capacity.
    Q,
    /// Two-way assisted quantum capacity.
    Q2,
    /// Secret-key capacity.
    K,
}

impl fmt::Display for CapacityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CapacityKind::Q => "Q",
            CapacityKind::Q2 => "Q2",
            CapacityKind::K => "K",
        })
    }
}

impl FromStr for CapacityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "q" => Ok(CapacityKind::Q),
            "q2" => Ok(CapacityKind::Q2),
            "k" => Ok(CapacityKind::K),
            other => Err(Error::invalid("kind", format!("expected q, q2 or k, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CapacityStatus {
    Zero,
    Positive,
    /// Between the known necessary and sufficient conditions (Q at `nu > 0`).
    Unknown,
}

impl fmt::Display for CapacityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CapacityStatus::Zero => "zero",
            CapacityStatus::Positive => "positive",
            CapacityStatus::Unknown => "unknown",
        })
    }
}

/// Which per-mode formula an integral is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerModeBound {
    /// Pure-loss capacity, exact.
    PureLoss,
    /// `max{0, log2(t/(1-t)) - g(nu)}`.
    CoherentInformation,
    /// `max{0, -log2(1-t) - g(nu)}`.
    ReverseCoherentInformation,
}

fn check_kind_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(Error::invalid("lambda", format!("must lie in [0, 1], got {lambda}")));
    }
    if lambda == T::one() {
        return Err(Error::Divergence("capacities of the identity channel are infinite".into()));
    }
    Ok(())
}

fn check_nu<T: Real>(nu: T) -> Result<()> {
    if nu >= T::zero() && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("nu", format!("must be finite and >= 0, got {nu}")))
    }
}

/// `Q = max{0, log2(lambda/(1-lambda))}`, `Q2 = K = -log2(1-lambda)`.
pub fn pure_loss_capacity<T: Real>(lambda: T, kind: CapacityKind) -> Result<T> {
    check_kind_lambda(lambda)?;
    Ok(pure_loss_unchecked(lambda, kind))
}

fn pure_loss_unchecked<T: Real>(t: T, kind: CapacityKind) -> T {
    let one = T::one();
    match kind {
        CapacityKind::Q => {
            if t <= T::lit(0.5) {
                T::zero()
            } else {
                (t / (one - t)).log2()
            }
        }
        CapacityKind::Q2 | CapacityKind::K => -(one - t).log2(),
    }
}

/// The formula used per mode: exact at `nu = 0`, a lower bound otherwise.
pub fn per_mode_bound<T: Real>(nu: T, kind: CapacityKind) -> PerModeBound {
    if nu == T::zero() {
        PerModeBound::PureLoss
    } else {
        match kind {
            CapacityKind::Q => PerModeBound::CoherentInformation,
            CapacityKind::Q2 | CapacityKind::K => PerModeBound::ReverseCoherentInformation,
        }
    }
}

/// Capacity (`nu = 0`) or best closed-form lower bound (`nu > 0`) of the
/// thermal attenuator of transmissivity `t`.
pub fn per_mode_capacity<T: Real>(t: T, nu: T, kind: CapacityKind) -> Result<T> {
    check_kind_lambda(t)?;
    check_nu(nu)?;
    let g = entropy_g(nu)?;
    Ok(per_mode_unchecked(t, g, kind).max(T::zero()))
}

/// Unclamped per-mode expression; positive exactly above [`positivity_level`].
fn per_mode_unchecked<T: Real>(t: T, g: T, kind: CapacityKind) -> T {
    let one = T::one();
    match kind {
        CapacityKind::Q => (t / (one - t)).log2() - g,
        CapacityKind::Q2 | CapacityKind::K => -(one - t).log2() - g,
    }
}

/// Transmissivity above which [`per_mode_capacity`] is positive.
fn positivity_level<T: Real>(g: T, kind: CapacityKind) -> T {
    let one = T::one();
    let two_g = T::lit(2.0).powf(-g);
    match kind {
        CapacityKind::Q => one / (one + two_g),
        CapacityKind::Q2 | CapacityKind::K => one - two_g,
    }
}

/// Known zero-capacity regions of the thermal attenuator.
pub fn attenuator_capacity_status<T: Real>(lambda: T, nu: T, kind: CapacityKind) -> CapacityStatus {
    let one = T::one();
    match kind {
        CapacityKind::Q2 | CapacityKind::K => {
            if lambda <= nu / (nu + one) {
                CapacityStatus::Zero
            } else {
                CapacityStatus::Positive
            }
        }
        CapacityKind::Q => {
            if lambda <= (nu + T::lit(0.5)) / (nu + one) {
                return CapacityStatus::Zero;
            }
            let sufficient = match entropy_g(nu) {
                Ok(g) => one / (one + T::lit(2.0).powf(-g)),
                Err(_) => return CapacityStatus::Unknown,
            };
            if lambda > sufficient {
                CapacityStatus::Positive
            } else {
                CapacityStatus::Unknown
            }
        }
    }
}

/// Critical value of `sqrt(mu)` for positivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Threshold<T> {
    /// Positive iff `sqrt(mu)` exceeds this value.
    Exact { sqrt_mu: T },
    /// Zero for `sqrt(mu) <= necessary`, positive for `sqrt(mu) > sufficient`.
    Bracket { necessary: T, sufficient: T },
}

impl<T: Real> Threshold<T> {
    /// Status implied for a given `sqrt(mu)`.
    ///
    /// At `sqrt(mu) = 0` with a zero threshold the memoryless channel itself
    /// decides; [`channel_status`] handles that case.
    pub fn classify(&self, sqrt_mu: T) -> CapacityStatus {
        match *self {
            Threshold::Exact { sqrt_mu: s } => {
                if sqrt_mu > s {
                    CapacityStatus::Positive
                } else {
                    CapacityStatus::Zero
                }
            }
            Threshold::Bracket { necessary, sufficient } => {
                if sqrt_mu <= necessary {
                    CapacityStatus::Zero
                } else if sqrt_mu > sufficient {
                    CapacityStatus::Positive
                } else {
                    CapacityStatus::Unknown
                }
            }
        }
    }

    /// Single representative value (the necessary one for a bracket).
    pub fn primary(&self) -> T {
        match *self {
            Threshold::Exact { sqrt_mu } => sqrt_mu,
            Threshold::Bracket { necessary, .. } => necessary,
        }
    }
}

/// Smallest `sqrt(mu)` above which the symbol supremum exceeds `level`.
///
/// Returns a negative number when even `mu = 0` clears the level, and `1`
/// when no admissible `mu` does.
fn raw_sqrt_mu_for_level<T: Real>(lambda: T, level: T, model: SymbolModel) -> T {
    let (zero, one) = (T::zero(), T::one());
    if level >= one {
        return one;
    }
    if level <= zero {
        return match model {
            SymbolModel::Dim if lambda == zero => one,
            _ if lambda > zero => -one,
            _ => zero,
        };
    }
    match model {
        SymbolModel::Dim => {
            if lambda == zero {
                return one;
            }
            // lambda^{(1-s)/(1+s)} > level  <=>  s > (1-r)/(1+r), r = ln(level)/ln(lambda)
            let r = level.ln() / lambda.ln();
            (one - r) / (one + r)
        }
        SymbolModel::Lim => {
            // (s + sqrt(l)) / (1 + s sqrt(l)) > sqrt(level)
            let (sl, st) = (lambda.sqrt(), level.sqrt());
            (st - sl) / (one - st * sl)
        }
    }
}

fn clamp_unit<T: Real>(s: T) -> T {
    s.max(T::zero()).min(T::one())
}

/// Threshold on `sqrt(mu)` for the channel with transversal attenuation `gamma`.
pub fn positivity_threshold<T: Real>(
    lambda: T,
    nu: T,
    gamma: T,
    kind: CapacityKind,
    model: SymbolModel,
) -> Result<Threshold<T>> {
    ChannelParams::with_all(lambda, T::zero(), nu, gamma)?;
    let one = T::one();
    let at = |level: T| clamp_unit(raw_sqrt_mu_for_level(lambda, level / gamma, model));
    Ok(match kind {
        CapacityKind::Q2 | CapacityKind::K => Threshold::Exact {
            sqrt_mu: at(nu / (nu + one)),
        },
        CapacityKind::Q if nu == T::zero() => Threshold::Exact {
            sqrt_mu: at(T::lit(0.5)),
        },
        CapacityKind::Q => {
            let g = entropy_g(nu)?;
            Threshold::Bracket {
                necessary: at((nu + T::lit(0.5)) / (nu + one)),
                sufficient: at(positivity_level(g, CapacityKind::Q)),
            }
        }
    })
}

/// `sqrt(mu*)` for the delocalised model.
///
/// For Q at `nu = 0` this is `(log2(1/lambda) - 1) / (log2(1/lambda) + 1)`,
/// clamped at zero.
pub fn dim_positivity_threshold<T: Real>(lambda: T, nu: T, kind: CapacityKind) -> Result<Threshold<T>> {
    if !(lambda > T::zero() && lambda < T::one()) {
        return Err(Error::invalid("lambda", format!("must lie in (0, 1), got {lambda}")));
    }
    positivity_threshold(lambda, nu, T::one(), kind, SymbolModel::Dim)
}

/// `sqrt(mu*)` for the localised model; Q at `nu = 0` gives
/// `(1 - sqrt(2 lambda)) / (sqrt 2 - sqrt lambda)`.
pub fn lim_positivity_threshold<T: Real>(lambda: T, nu: T, kind: CapacityKind) -> Result<Threshold<T>> {
    if !(lambda >= T::zero() && lambda < T::one()) {
        return Err(Error::invalid("lambda", format!("must lie in [0, 1), got {lambda}")));
    }
    positivity_threshold(lambda, nu, T::one(), kind, SymbolModel::Lim)
}

/// Positivity of the asymptotic capacity (or of its lower bound's premise at `nu > 0`).
///
/// The per-mode channels with transmissivity near `gamma * sup eta` occupy a
/// set of positive measure, so positivity is decided by the supremum alone.
pub fn channel_status<T: Real>(params: &ChannelParams<T>, model: SymbolModel, kind: CapacityKind) -> CapacityStatus {
    let sup = params.gamma() * eta_sup(params.lambda(), params.mu(), model);
    attenuator_capacity_status(sup, params.nu(), kind)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityOptions<T> {
    /// Absolute tolerance on the capacity in bits per use.
    pub tolerance: T,
    /// Cap on the number of Riemann blocks used for the brackets.
    pub max_bracket_blocks: usize,
    /// Cap on integrand evaluations for the quadrature.
    pub max_evaluations: usize,
}

impl<T: Real> CapacityOptions<T> {
    pub fn with_tolerance(tolerance: T) -> Self {
        Self {
            tolerance,
            max_bracket_blocks: 1 << 16,
            max_evaluations: 2_000_000,
        }
    }
}

impl<T: Real> Default for CapacityOptions<T> {
    fn default() -> Self {
        Self::with_tolerance(T::lit(1e-9))
    }
}

/// Asymptotic capacity per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityResult<T> {
    pub value: T,
    pub lower: T,
    /// `+inf` (serialised as `null`) when `nu > 0`.
    pub upper: T,
    pub kind: CapacityKind,
    pub model: SymbolModel,
    /// True iff `nu = 0`; otherwise `value` is a lower bound.
    #[serde(rename = "exact")]
    pub is_exact: bool,
    pub nu: T,
    pub lambda: T,
    pub mu: T,
    pub gamma: T,
    #[serde(rename = "quad_points")]
    pub quadrature_points: usize,
    /// Riemann blocks behind `lower`/`upper`.
    pub bracket_blocks: usize,
    pub bound: PerModeBound,
}

/// `(1/P) sum_{p<P} f(2 pi p/P)` and `(1/P) sum_{p=1..P} f(2 pi p/P)`.
///
/// These bound `(1/2pi) int_0^{2pi} f` from below and above whenever `f` is
/// nondecreasing.
pub fn monotone_riemann_brackets<T: Real, F: FnMut(T) -> T>(mut f: F, p_blocks: usize) -> Result<(T, T)> {
    if p_blocks == 0 {
        return Err(Error::invalid("p_blocks", "must be >= 1"));
    }
    let pf = T::from_usize_lossy(p_blocks);
    let first = f(T::zero());
    let last = f(T::TAU());
    let inner: T = (1..p_blocks)
        .map(|p| f(T::TAU() * (T::from_usize_lossy(p) / pf)))
        .sum();
    let (lo, hi) = ((first + inner) / pf, (inner + last) / pf);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Numerical("non-finite bracket".into()));
    }
    Ok((lo, hi))
}

fn check_capacity_params<T: Real>(params: &ChannelParams<T>) -> Result<()> {
    params.validate()?;
    if params.lambda() == T::one() {
        return Err(Error::Divergence("lambda = 1 makes every capacity infinite".into()));
    }
    Ok(())
}

/// `C(gamma eta(x))` clamped at zero, with `g = g(nu)`.
fn integrand<T: Real>(params: &ChannelParams<T>, model: SymbolModel, kind: CapacityKind, g: T) -> impl Fn(T) -> T {
    let (lambda, mu, gamma) = (params.lambda(), params.mu(), params.gamma());
    move |x| {
        let t = gamma * eta_unchecked(model, x, lambda, mu);
        if g == T::zero() {
            pure_loss_unchecked(t, kind)
        } else {
            per_mode_unchecked(t, g, kind).max(T::zero())
        }
    }
}

/// Monotone-Riemann brackets of the exact (`nu = 0`) capacity integral.
pub fn capacity_brackets<T: Real>(
    params: &ChannelParams<T>,
    model: SymbolModel,
    kind: CapacityKind,
    p_blocks: usize,
) -> Result<(T, T)> {
    check_capacity_params(params)?;
    if params.nu() != T::zero() {
        return Err(Error::invalid("nu", "brackets are only defined for nu = 0"));
    }
    if model == SymbolModel::Dim && params.lambda() == T::zero() {
        return Ok((T::zero(), T::zero()));
    }
    monotone_riemann_brackets(integrand(params, model, kind, T::zero()), p_blocks)
}

/// `(1/2pi) int_0^{2pi} C(symbol(x)) dx` for an arbitrary nondecreasing
/// transmissivity function, split at `breakpoints`.
///
/// Returns the value and the number of integrand evaluations.
pub fn symbol_capacity_integral<T: Real, S: Fn(T) -> T>(
    symbol: S,
    nu: T,
    kind: CapacityKind,
    breakpoints: &[T],
    opts: &CapacityOptions<T>,
) -> Result<(T, usize)> {
    check_nu(nu)?;
    let g = entropy_g(nu)?;
    let f = |x: T| {
        let t = symbol(x);
        if g == T::zero() {
            pure_loss_unchecked(t, kind)
        } else {
            per_mode_unchecked(t, g, kind).max(T::zero())
        }
    };
    let mut q = QuadratureOptions::with_tolerance(opts.tolerance * T::TAU());
    q.max_evaluations = opts.max_evaluations;
    let res = integrate(f, T::zero(), T::TAU(), breakpoints, &q)?;
    Ok((res.value / T::TAU(), res.evaluations))
}

/// Asymptotic capacity with the default options at the given tolerance.
pub fn channel_capacity<T: Real>(
    params: &ChannelParams<T>,
    model: SymbolModel,
    kind: CapacityKind,
    tolerance: T,
) -> Result<CapacityResult<T>> {
    channel_capacity_with(params, model, kind, &CapacityOptions::with_tolerance(tolerance))
}

pub fn channel_capacity_with<T: Real>(
    params: &ChannelParams<T>,
    model: SymbolModel,
    kind: CapacityKind,
    opts: &CapacityOptions<T>,
) -> Result<CapacityResult<T>> {
    check_capacity_params(params)?;
    if !(opts.tolerance > T::zero() && opts.tolerance.is_finite()) {
        return Err(Error::invalid("tolerance", format!("must be finite and > 0, got {}", opts.tolerance)));
    }
    if opts.max_bracket_blocks == 0 {
        return Err(Error::invalid("max_bracket_blocks", "must be >= 1"));
    }
    let (lambda, mu, nu, gamma) = (params.lambda(), params.mu(), params.nu(), params.gamma());
    let exact = nu == T::zero();
    let mut result = CapacityResult {
        value: T::zero(),
        lower: T::zero(),
        upper: if exact { T::zero() } else { T::infinity() },
        kind,
        model,
        is_exact: exact,
        nu,
        lambda,
        mu,
        gamma,
        quadrature_points: 0,
        bracket_blocks: 0,
        bound: per_mode_bound(nu, kind),
    };
    // the delocalised channel at lambda = 0 is a constant thermal source
    if model == SymbolModel::Dim && lambda == T::zero() {
        return Ok(result);
    }

    let g = entropy_g(nu)?;
    let level = positivity_level(g, kind) / gamma;
    let breakpoints: Vec<T> = match level_crossing(level, lambda, mu, model) {
        Crossing::NoneAbove => return finish_zero(params, model, kind, result),
        Crossing::AllAbove => Vec::new(),
        Crossing::CrossAt(x) => vec![x],
    };
    let symbol = |x: T| gamma * eta_unchecked(model, x, lambda, mu);
    let (value, evals) = symbol_capacity_integral(symbol, nu, kind, &breakpoints, opts)?;

    let f = integrand(params, model, kind, g);
    let spread = f(T::TAU()) - f(T::zero());
    let wanted = (spread / opts.tolerance).ceil().to_usize().unwrap_or(usize::MAX);
    let blocks = wanted.clamp(1, opts.max_bracket_blocks);
    let (lo, hi) = monotone_riemann_brackets(f, blocks)?;

    result.quadrature_points = evals;
    result.bracket_blocks = blocks;
    result.lower = lo;
    if exact {
        result.upper = hi;
        result.value = value.max(lo).min(hi);
    } else {
        result.value = value.max(lo);
    }
    Ok(result)
}

/// Every per-mode channel is below its positivity level; the brackets are
/// still evaluated so that `lower`/`upper` stay honest.
fn finish_zero<T: Real>(
    params: &ChannelParams<T>,
    model: SymbolModel,
    kind: CapacityKind,
    mut result: CapacityResult<T>,
) -> Result<CapacityResult<T>> {
    let g = entropy_g(params.nu())?;
    let f = integrand(params, model, kind, g);
    let hi = f(T::TAU()).max(T::zero());
    result.bracket_blocks = 1;
    if result.is_exact {
        result.upper = hi;
    }
    Ok(result)
}

/// `(1/n) sum_i C(eta_i)` over the transmissivity spectrum of `n` uses (`nu = 0`).
pub fn finite_n_capacity_density<T: Real>(n: usize, params: &ChannelParams<T>, kind: CapacityKind) -> Result<T> {
    check_capacity_params(params)?;
    if params.nu() != T::zero() {
        return Err(Error::invalid("nu", "finite-n densities are exact only for nu = 0"));
    }
    let spectrum = transmissivity_spectrum(n, params)?;
    let total: T = spectrum
        .values()
        .iter()
        .map(|&t| pure_loss_unchecked(t.min(T::one()), kind))
        .sum();
    if !total.is_finite() {
        return Err(Error::Divergence("a transmissivity of 1 makes the density infinite".into()));
    }
    Ok(total / T::from_usize_lossy(n))
}
