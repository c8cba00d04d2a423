//! Scalar special functions: generalised Laguerre polynomials of order
//! `alpha = -1`, the bosonic entropy function and the delay-to-memory map.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Values `L_m^{(-1)}(x)` for `m = 0..=order_max` at a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct LaguerreRow<T> {
    pub order_max: usize,
    pub x: T,
    pub values: Vec<T>,
}

impl<T: Real> LaguerreRow<T> {
    pub fn get(&self, m: usize) -> Option<T> {
        self.values.get(m).copied()
    }
}

fn check_finite<T: Real>(x: T) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("x", format!("must be finite, got {x}")))
    }
}

/// Generalised Laguerre polynomial `L_m^{(-1)}(x)`.
///
/// Evaluated with the three-term recurrence
/// `m L_m = (2m - 2 - x) L_{m-1} - (m - 2) L_{m-2}`, seeded with
/// `L_0 = 1`, `L_1 = -x`.
pub fn laguerre_gen_m1<T: Real>(m: usize, x: T) -> Result<T> {
    check_finite(x)?;
    if m == 0 {
        return Ok(T::one());
    }
    let (mut prev, mut cur) = (T::one(), -x);
    for k in 2..=m {
        let next = step(k, x, cur, prev);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

#[inline]
fn step<T: Real>(k: usize, x: T, cur: T, prev: T) -> T {
    let kf = T::from_usize_lossy(k);
    let two = T::lit(2.0);
    ((two * kf - two - x) * cur - (kf - two) * prev) / kf
}

/// All of `L_0^{(-1)}(x), ..., L_{order_max}^{(-1)}(x)` in one pass.
pub fn laguerre_row<T: Real>(order_max: usize, x: T) -> Result<LaguerreRow<T>> {
    check_finite(x)?;
    let mut values = Vec::with_capacity(order_max + 1);
    values.push(T::one());
    if order_max >= 1 {
        values.push(-x);
    }
    for k in 2..=order_max {
        let next = step(k, x, values[k - 1], values[k - 2]);
        values.push(next);
    }
    Ok(LaguerreRow {
        order_max,
        x,
        values,
    })
}

/// Bosonic entropy `g(nu) = (nu+1) log2(nu+1) - nu log2(nu)`, with `g(0) = 0`.
pub fn entropy_g<T: Real>(nu: T) -> Result<T> {
    if !(nu >= T::zero()) || !nu.is_finite() {
        return Err(Error::invalid("nu", format!("must be finite and >= 0, got {nu}")));
    }
    if nu == T::zero() {
        return Ok(T::zero());
    }
    let one = T::one();
    Ok((nu + one) * (nu + one).log2() - nu * nu.log2())
}

/// Memory parameter `mu = exp(-delta_t / t_e)` for signals spaced by
/// `delta_t` in a fibre whose environment thermalises on timescale `t_e`.
pub fn memory_from_delay<T: Real>(delta_t: T, t_e: T) -> Result<T> {
    if !(t_e > T::zero()) {
        return Err(Error::invalid("t_e", format!("must be > 0, got {t_e}")));
    }
    if !(delta_t >= T::zero()) {
        return Err(Error::invalid(
            "delta_t",
            format!("must be >= 0, got {delta_t}"),
        ));
    }
    Ok((-delta_t / t_e).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num::{BigInt, BigRational, One, Zero};
    use proptest::prelude::*;

    /// Defining sum `sum_{l=1}^m C(m-1, l-1) (-x)^l / l!` in exact rationals.
    fn defining_sum_exact(m: usize, x: f64) -> f64 {
        if m == 0 {
            return 1.0;
        }
        let xr = BigRational::from_float(x).unwrap();
        let neg_x = -xr;
        let mut total = BigRational::zero();
        let mut pow = BigRational::one();
        let mut fact = BigInt::one();
        let mut binom = BigInt::one(); // C(m-1, l-1)
        for l in 1..=m {
            pow *= &neg_x;
            fact *= BigInt::from(l);
            if l > 1 {
                binom = binom * BigInt::from(m - l + 1) / BigInt::from(l - 1);
            }
            total += &pow * BigRational::from_integer(binom.clone())
                / BigRational::from_integer(fact.clone());
        }
        let (num, den) = (total.numer().clone(), total.denom().clone());
        ratio_to_f64(&num, &den)
    }

    fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
        // scale to keep 80 significant bits, then divide in f64
        let shift = (num.bits() as i64 - den.bits() as i64) - 80;
        let q = if shift >= 0 {
            num / (den << shift as usize)
        } else {
            (num << (-shift) as usize) / den
        };
        let qf: f64 = q.to_string().parse().unwrap();
        qf * 2f64.powi(shift as i32)
    }

    #[test]
    fn low_orders_match_closed_forms() {
        assert_eq!(laguerre_gen_m1(0, 7.3).unwrap(), 1.0);
        for &x in &[-3.0, -0.5, 0.0, 0.25, 2.0, 9.5] {
            assert_eq!(laguerre_gen_m1(1, x).unwrap(), -x);
            assert_relative_eq!(
                laguerre_gen_m1(2, x).unwrap(),
                -x + x * x / 2.0,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn order_five_at_ln4_matches_exact_sum() {
        let x = 4f64.ln();
        let expected = defining_sum_exact(5, x);
        assert_relative_eq!(laguerre_gen_m1(5, x).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn recurrence_matches_exact_sum_on_grid() {
        for m in 0..=30 {
            for k in 0..=40 {
                let x = -10.0 + 0.5 * k as f64;
                let want = defining_sum_exact(m, x);
                let got = laguerre_gen_m1(m, x).unwrap();
                // the exact value can cancel to a tiny number; compare on the term scale
                let scale = want.abs().max(1e-300);
                assert!(
                    ((got - want) / scale).abs() < 1e-12 || (got - want).abs() < 1e-12,
                    "m={m} x={x}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn row_seeds_and_zero() {
        assert_eq!(laguerre_row(1, 2.0).unwrap().values, vec![1.0, -2.0]);
        assert_eq!(laguerre_row(3, 0.0).unwrap().values, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(laguerre_row(0, 5.0).unwrap().values, vec![1.0]);
    }

    #[test]
    fn row_matches_single_evaluations() {
        let x = -(0.3f64.ln());
        let row = laguerre_row(10, x).unwrap();
        for m in 0..=10 {
            assert_eq!(row.values[m], laguerre_gen_m1(m, x).unwrap());
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(laguerre_gen_m1(3, f64::NAN).is_err());
        assert!(laguerre_row(3, f64::INFINITY).is_err());
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy_g(0.0).unwrap(), 0.0);
        assert_relative_eq!(entropy_g(1.0).unwrap(), 2.0, max_relative = 1e-15);
        // 8 - 3 log2 3
        assert_relative_eq!(entropy_g(3.0).unwrap(), 3.245_112_497_836_531_5, max_relative = 1e-14);
        assert!(entropy_g(-0.1).is_err());
    }

    #[test]
    fn entropy_strictly_increasing() {
        let mut prev = entropy_g(0.0).unwrap();
        for k in 1..=2000 {
            let cur = entropy_g(0.01 * k as f64).unwrap();
            assert!(cur > prev);
            prev = cur;
        }
    }

    #[test]
    fn delay_map() {
        assert_eq!(memory_from_delay(0.0, 3.0).unwrap(), 1.0);
        assert_relative_eq!(memory_from_delay(2.5, 2.5).unwrap(), (-1f64).exp());
        assert!(memory_from_delay(1.0, 0.0).is_err());
        assert!(memory_from_delay(-1.0, 1.0).is_err());
        let far = memory_from_delay(1e3, 1.0).unwrap();
        assert!((0.0..1e-300).contains(&far));
    }

    #[test]
    fn f32_path_compiles_and_agrees() {
        let v32 = laguerre_gen_m1(6, 1.2f32).unwrap();
        let v64 = laguerre_gen_m1(6, 1.2f64).unwrap();
        assert!((v32 as f64 - v64).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn zero_argument_vanishes(m in 1usize..200) {
            prop_assert_eq!(laguerre_gen_m1(m, 0.0).unwrap(), 0.0);
        }

        #[test]
        fn delay_map_decreasing(a in 0.0f64..50.0, d in 1e-3f64..5.0, te in 0.1f64..10.0) {
            prop_assert!(memory_from_delay(a + d, te).unwrap() < memory_from_delay(a, te).unwrap());
        }
    }
}
