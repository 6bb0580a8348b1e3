use super::VolSurface;
use crate::error::{Result, SabrError};

/// `Σ ((market − model) / market)²`.
pub fn squared_relative_error(market: &[f64], model: &[f64]) -> Result<f64> {
    if market.len() != model.len() {
        return Err(SabrError::Domain(format!(
            "{} market values but {} model values",
            market.len(),
            model.len()
        )));
    }
    let mut sum = 0.0;
    for (&m, &v) in market.iter().zip(model) {
        if m == 0.0 {
            return Err(SabrError::Domain("market value of zero in a relative cost".into()));
        }
        let e = (m - v) / m;
        sum += e * e;
    }
    Ok(sum)
}

/// Joint cost from per-slice market and model values; the slice terms are
/// added in order, so this equals the sum of the per-slice costs exactly.
pub fn joint_from_values(market: &[Vec<f64>], model: &[Vec<f64>]) -> Result<f64> {
    if market.len() != model.len() {
        return Err(SabrError::Domain("slice count mismatch".into()));
    }
    let mut total = 0.0;
    for (m, v) in market.iter().zip(model) {
        total += squared_relative_error(m, v)?;
    }
    Ok(total)
}

/// Cost of one maturity slice against quoted vols; `model_eval(K, T)`
/// returns the model vol.
pub fn cost_individual<F>(surface: &VolSurface, slice: usize, model_eval: F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let s = surface
        .slices
        .get(slice)
        .ok_or_else(|| SabrError::Domain(format!("no slice {slice}")))?;
    let market: Vec<f64> = s.quotes.iter().map(|q| q.vol).collect();
    let model: Vec<f64> = s.quotes.iter().map(|q| model_eval(q.strike, s.maturity)).collect();
    squared_relative_error(&market, &model)
}

pub fn cost_joint<F>(surface: &VolSurface, model_eval: F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let mut total = 0.0;
    for i in 0..surface.slices.len() {
        total += cost_individual(surface, i, &model_eval)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::{Quote, Slice};

    fn surface() -> VolSurface {
        let slice = |t: f64| Slice {
            maturity: t,
            rate: 0.01,
            dividend: 0.0,
            quotes: (0..21)
                .map(|j| Quote {
                    strike: 80.0 + 2.0 * j as f64,
                    vol: 0.3 - 0.004 * j as f64 + 0.01 * t,
                })
                .collect(),
        };
        VolSurface::new(100.0, vec![slice(0.25), slice(1.0)]).unwrap()
    }

    fn market(s: &VolSurface) -> impl Fn(f64, f64) -> f64 + '_ {
        move |k, t| {
            let sl = s.slices.iter().find(|x| x.maturity == t).unwrap();
            sl.quotes.iter().find(|q| q.strike == k).unwrap().vol
        }
    }

    #[test]
    fn zero_at_fit_and_uniform_bias() {
        let s = surface();
        assert_eq!(cost_individual(&s, 0, market(&s)).unwrap(), 0.0);
        let m = market(&s);
        let c = cost_individual(&s, 0, |k, t| 1.01 * m(k, t)).unwrap();
        assert!((c - 21.0 * 1e-4).abs() < 1e-15);
    }

    #[test]
    fn joint_is_sum_of_individual() {
        let s = surface();
        let f = |k: f64, t: f64| 0.2 + 0.001 * k.ln() + 0.01 * t;
        let joint = cost_joint(&s, f).unwrap();
        let sum = cost_individual(&s, 0, f).unwrap() + cost_individual(&s, 1, f).unwrap();
        assert_eq!(joint, sum);
    }

    #[test]
    fn zero_market_value_rejected() {
        assert!(squared_relative_error(&[0.0], &[1.0]).is_err());
        assert!(squared_relative_error(&[1.0], &[1.0, 2.0]).is_err());
    }
}
