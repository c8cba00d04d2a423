//! Effective transmissivity functions (the squared Toeplitz symbols) of the
//! delocalised and localised models, and diagnostics comparing finite-`n`
//! spectra against them.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netsim::finite_m_coefficients;
use crate::scalar::Real;
use crate::toeplitz::{build_dim_matrix, spectrum_of, ChannelParams, TransmissivitySpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolModel {
    /// Delocalised interaction (the `M -> infinity` network).
    Dim,
    /// Localised interaction (the single-segment network).
    Lim,
}

impl fmt::Display for SymbolModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolModel::Dim => "dim",
            SymbolModel::Lim => "lim",
        })
    }
}

impl FromStr for SymbolModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dim" => Ok(SymbolModel::Dim),
            "lim" => Ok(SymbolModel::Lim),
            other => Err(Error::invalid("model", format!("expected dim or lim, got {other:?}"))),
        }
    }
}

fn check_x<T: Real>(x: T) -> Result<()> {
    if x >= T::zero() && x <= T::TAU() {
        Ok(())
    } else {
        Err(Error::invalid("x", format!("must lie in [0, 2 pi], got {x}")))
    }
}

fn check_lambda_mu<T: Real>(lambda: T, mu: T) -> Result<()> {
    ChannelParams::new(lambda, mu).map(|_| ())
}

/// `lambda^{(1-mu) / (1 + mu - 2 sqrt(mu) cos(x/2))}`.
pub fn eta_dim<T: Real>(x: T, lambda: T, mu: T) -> Result<T> {
    check_x(x)?;
    check_lambda_mu(lambda, mu)?;
    Ok(eta_dim_unchecked(x, lambda, mu))
}

#[inline]
pub(crate) fn eta_dim_unchecked<T: Real>(x: T, lambda: T, mu: T) -> T {
    if lambda == T::zero() {
        return T::zero();
    }
    let one = T::one();
    let denom = one + mu - T::lit(2.0) * mu.sqrt() * (x * T::lit(0.5)).cos();
    lambda.powf((one - mu) / denom)
}

/// `(mu + lambda - 2 sqrt(mu lambda) cos(x/2)) / (1 + mu lambda - 2 sqrt(mu lambda) cos(x/2))`.
pub fn eta_lim<T: Real>(x: T, lambda: T, mu: T) -> Result<T> {
    check_x(x)?;
    check_lambda_mu(lambda, mu)?;
    Ok(eta_lim_unchecked(x, lambda, mu))
}

#[inline]
pub(crate) fn eta_lim_unchecked<T: Real>(x: T, lambda: T, mu: T) -> T {
    let cross = T::lit(2.0) * (mu * lambda).sqrt() * (x * T::lit(0.5)).cos();
    (mu + lambda - cross) / (T::one() + mu * lambda - cross)
}

pub fn eta<T: Real>(model: SymbolModel, x: T, lambda: T, mu: T) -> Result<T> {
    match model {
        SymbolModel::Dim => eta_dim(x, lambda, mu),
        SymbolModel::Lim => eta_lim(x, lambda, mu),
    }
}

pub(crate) fn eta_unchecked<T: Real>(model: SymbolModel, x: T, lambda: T, mu: T) -> T {
    match model {
        SymbolModel::Dim => eta_dim_unchecked(x, lambda, mu),
        SymbolModel::Lim => eta_lim_unchecked(x, lambda, mu),
    }
}

/// Supremum of the symbol over `[0, 2 pi]`, attained at `x = 2 pi`.
pub fn eta_sup<T: Real>(lambda: T, mu: T, model: SymbolModel) -> T {
    let s = mu.sqrt();
    let one = T::one();
    match model {
        SymbolModel::Dim => {
            if lambda == T::zero() {
                T::zero()
            } else {
                lambda.powf((one - s) / (one + s))
            }
        }
        SymbolModel::Lim => {
            let r = (s + lambda.sqrt()) / (one + (mu * lambda).sqrt());
            r * r
        }
    }
}

/// Where the symbol crosses a level on `[0, 2 pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing<T> {
    /// Above the level (almost) everywhere.
    AllAbove,
    /// Nowhere above the level.
    NoneAbove,
    /// Above the level exactly on `(x*, 2 pi]`.
    CrossAt(T),
}

/// Locates `x*` with `eta(x*) = level` in closed form.
///
/// Both symbols are decreasing functions of `c = cos(x/2)`, so
/// `eta(x) > level` iff `cos(x/2) < c*`; `c*` is solved for directly.
pub fn level_crossing<T: Real>(level: T, lambda: T, mu: T, model: SymbolModel) -> Crossing<T> {
    let (zero, one, two) = (T::zero(), T::one(), T::lit(2.0));
    if level >= one {
        return Crossing::NoneAbove;
    }
    if level <= zero {
        return if lambda > zero || model == SymbolModel::Lim && mu > zero {
            Crossing::AllAbove
        } else {
            Crossing::NoneAbove
        };
    }
    let constant = |value: T| {
        if value > level {
            Crossing::AllAbove
        } else {
            Crossing::NoneAbove
        }
    };
    let c_star = match model {
        SymbolModel::Dim => {
            if lambda == zero || lambda == one || mu == zero {
                return constant(eta_dim_unchecked(zero, lambda, mu));
            }
            // lambda^e = level  <=>  e = ln(level) / ln(lambda)
            let ratio = lambda.ln() / level.ln();
            (one + mu - (one - mu) * ratio) / (two * mu.sqrt())
        }
        SymbolModel::Lim => {
            let s = (mu * lambda).sqrt();
            if s == zero {
                return constant(eta_lim_unchecked(zero, lambda, mu));
            }
            (mu + lambda - level * (one + mu * lambda)) / (two * s * (one - level))
        }
    };
    if c_star >= one {
        Crossing::AllAbove
    } else if c_star <= -one {
        Crossing::NoneAbove
    } else {
        Crossing::CrossAt(two * c_star.acos())
    }
}

/// Kink of the quantum-capacity integrand, where the symbol crosses 1/2.
pub fn q_positive_crossing<T: Real>(lambda: T, mu: T, model: SymbolModel) -> Crossing<T> {
    level_crossing(T::lit(0.5), lambda, mu, model)
}

/// How closely a finite-`n` spectrum follows the symbol sampled at `2 pi j / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailReport<T> {
    pub n: usize,
    /// First index (1-based) of the compared window.
    pub j_start: usize,
    pub max_deviation: T,
    /// Fraction of transmissivities outside `[eta(0), eta(2 pi)]`.
    pub outside_fraction: T,
}

/// Default window start `ceil(n^{3/4})`.
pub fn default_window_start(n: usize) -> usize {
    let j = (n as f64).powf(0.75).ceil() as usize;
    j.clamp(1, n.max(1))
}

/// Transfer matrix of `n` uses under either model (LIM is the single-segment network).
pub fn model_transfer_matrix<T: Real>(n: usize, lambda: T, mu: T, model: SymbolModel) -> Result<DMatrix<T>> {
    match model {
        SymbolModel::Dim => Ok(build_dim_matrix(n, &ChannelParams::new(lambda, mu)?)?.into_entries()),
        SymbolModel::Lim => Ok(finite_m_coefficients(1, n, lambda, mu, false)?.a_matrix),
    }
}

pub fn model_spectrum<T: Real>(n: usize, lambda: T, mu: T, model: SymbolModel) -> Result<TransmissivitySpectrum<T>> {
    spectrum_of(&model_transfer_matrix(n, lambda, mu, model)?)
}

pub fn tail_convergence_report<T: Real>(n: usize, lambda: T, mu: T, model: SymbolModel) -> Result<TailReport<T>> {
    tail_report_with_window(n, lambda, mu, model, default_window_start(n))
}

pub fn tail_report_with_window<T: Real>(
    n: usize,
    lambda: T,
    mu: T,
    model: SymbolModel,
    j_start: usize,
) -> Result<TailReport<T>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if j_start == 0 || j_start > n {
        return Err(Error::invalid("j_start", format!("must lie in [1, {n}], got {j_start}")));
    }
    let spectrum = model_spectrum(n, lambda, mu, model)?;
    Ok(tail_report_from_spectrum(&spectrum, lambda, mu, model, j_start))
}

fn tail_report_from_spectrum<T: Real>(
    spectrum: &TransmissivitySpectrum<T>,
    lambda: T,
    mu: T,
    model: SymbolModel,
    j_start: usize,
) -> TailReport<T> {
    let n = spectrum.n();
    let nf = T::from_usize_lossy(n);
    let values = spectrum.values();
    let max_deviation = (j_start..=n)
        .map(|j| {
            let x = T::TAU() * (T::from_usize_lossy(j) / nf);
            (values[j - 1] - eta_unchecked(model, x, lambda, mu)).abs()
        })
        .fold(T::zero(), T::max);
    let (lo, hi) = (
        eta_unchecked(model, T::zero(), lambda, mu),
        eta_sup(lambda, mu, model),
    );
    let slack = T::lit(64.0) * T::epsilon();
    let outside = values
        .iter()
        .filter(|&&v| v < lo - slack || v > hi + slack)
        .count();
    TailReport {
        n,
        j_start,
        max_deviation,
        outside_fraction: T::from_usize_lossy(outside) / nf,
    }
}
