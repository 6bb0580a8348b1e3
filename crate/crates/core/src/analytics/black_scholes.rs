use statrs::function::erf::erfc;

use crate::error::{ensure_finite, ensure_positive, Result, SabrError};

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[inline]
fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Dividend-adjusted Black-Scholes call.
pub fn black_scholes_call(
    spot: f64,
    strike: f64,
    rate: f64,
    dividend: f64,
    maturity: f64,
    vol: f64,
) -> Result<f64> {
    ensure_positive(spot, "spot")?;
    ensure_positive(strike, "strike")?;
    ensure_positive(maturity, "maturity")?;
    ensure_finite(rate, "rate")?;
    ensure_finite(dividend, "dividend")?;
    if !(vol >= 0.0) || !vol.is_finite() {
        return Err(SabrError::Domain(format!(
            "vol must be non-negative, got {vol}"
        )));
    }
    let df_s = spot * (-dividend * maturity).exp();
    let df_k = strike * (-rate * maturity).exp();
    if vol == 0.0 {
        return Ok((df_s - df_k).max(0.0));
    }
    Ok(call_unchecked(df_s, df_k, vol * maturity.sqrt()))
}

/// Call on discounted spot `s` and discounted strike `k` with total vol `sd`.
#[inline]
fn call_unchecked(s: f64, k: f64, sd: f64) -> f64 {
    let d1 = (s / k).ln() / sd + 0.5 * sd;
    let d2 = d1 - sd;
    (s * norm_cdf(d1) - k * norm_cdf(d2)).max(0.0)
}

/// Black-Scholes implied volatility of a call price.
///
/// Newton steps on σ, falling back to bisection whenever a step leaves the
/// current bracket. Terminates when the price residual is below 1e-10 or the
/// bracket collapses to machine precision.
pub fn implied_vol_from_price(
    price: f64,
    spot: f64,
    strike: f64,
    rate: f64,
    dividend: f64,
    maturity: f64,
) -> Result<f64> {
    ensure_positive(spot, "spot")?;
    ensure_positive(strike, "strike")?;
    ensure_positive(maturity, "maturity")?;
    ensure_finite(price, "price")?;
    let s = spot * (-dividend * maturity).exp();
    let k = strike * (-rate * maturity).exp();
    let lower = (s - k).max(0.0);
    if !(price > lower && price < s) {
        return Err(SabrError::Domain(format!(
            "call price {price} outside no-arbitrage bounds ({lower}, {s})"
        )));
    }
    let sqrt_t = maturity.sqrt();
    let f = |sigma: f64| call_unchecked(s, k, sigma * sqrt_t) - price;

    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(SabrError::Domain(format!("no volatility reprices {price}")));
        }
    }
    // Start from the Brenner-Subrahmanyam guess, clipped into the bracket.
    let mut sigma = (price / s * (2.0 * std::f64::consts::PI).sqrt() / sqrt_t).clamp(lo, hi);
    if sigma <= lo || sigma >= hi {
        sigma = 0.5 * (lo + hi);
    }
    // Residuals below ~100 ulps of the larger leg are noise.
    let floor = 1e2 * f64::EPSILON * s.max(k);
    for _ in 0..200 {
        let r = f(sigma);
        if r.abs() <= floor.max(1e-14) {
            return Ok(sigma);
        }
        if r > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        let d1 = (s / k).ln() / (sigma * sqrt_t) + 0.5 * sigma * sqrt_t;
        let vega = s * norm_pdf(d1) * sqrt_t;
        let mut next = if vega > 0.0 {
            sigma - r / vega
        } else {
            f64::NAN
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - sigma).abs() <= 1e-16 * sigma.max(1e-3) || hi - lo <= 1e-16 * hi {
            return if r.abs() <= 1e-10 {
                Ok(next)
            } else {
                Err(SabrError::NumericDomain(format!(
                    "implied vol stalled at {next} with residual {r}"
                )))
            };
        }
        sigma = next;
    }
    let r = f(sigma);
    if r.abs() <= 1e-10 {
        Ok(sigma)
    } else {
        Err(SabrError::NumericDomain(format!(
            "implied vol did not converge: residual {r}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vol_gives_discounted_intrinsic() {
        let v = black_scholes_call(100.0, 90.0, 0.03, 0.01, 2.0, 0.0).unwrap();
        let want = 100.0 * (-0.02f64).exp() - 90.0 * (-0.06f64).exp();
        assert!((v - want).abs() < 1e-12);
        assert_eq!(
            black_scholes_call(100.0, 120.0, 0.0, 0.0, 1.0, 0.0).unwrap(),
            0.0
        );
        assert!(black_scholes_call(100.0, 120.0, 0.0, 0.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn put_call_parity_via_large_strike_limit() {
        let c = black_scholes_call(100.0, 1e-6, 0.02, 0.01, 1.0, 0.3).unwrap();
        assert!((c - 100.0 * (-0.01f64).exp()).abs() < 1e-5);
    }

    #[test]
    fn round_trip() {
        for &(k, t, v) in &[
            (100.0, 1.0, 0.25),
            (60.0, 0.1, 0.8),
            (150.0, 3.0, 0.15),
            (100.0, 0.01, 0.05),
        ] {
            let p = black_scholes_call(100.0, k, 0.01, 0.02, t, v).unwrap();
            let iv = implied_vol_from_price(p, 100.0, k, 0.01, 0.02, t).unwrap();
            assert!((iv - v).abs() < 1e-8, "k = {k} t = {t}: {iv} vs {v}");
        }
    }

    #[test]
    fn near_lower_bound_gives_small_vol() {
        let s = 100.0;
        let k = 90.0;
        let lower = s - k;
        let iv = implied_vol_from_price(lower + 1e-6, s, k, 0.0, 0.0, 1.0).unwrap();
        assert!(iv < 0.1, "{iv}");
        assert!(implied_vol_from_price(lower, s, k, 0.0, 0.0, 1.0).is_err());
        assert!(implied_vol_from_price(s, s, k, 0.0, 0.0, 1.0).is_err());
    }
}
