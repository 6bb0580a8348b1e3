use super::Slice;
use crate::error::{ensure_positive, Result, SabrError};

/// β from a log-log regression of ATM vol on the forward:
/// `ln σ_ATM = ln α − (1 − β) ln f`. Clipped to [0, 1].
pub fn estimate_beta_loglog(history: &[(f64, f64)]) -> Result<f64> {
    if history.len() < 2 {
        return Err(SabrError::DegenerateRegression("need at least two observations".into()));
    }
    for &(f, s) in history {
        ensure_positive(f, "forward")?;
        ensure_positive(s, "atm vol")?;
    }
    let n = history.len() as f64;
    let mx = history.iter().map(|&(f, _)| f.ln()).sum::<f64>() / n;
    let my = history.iter().map(|&(_, s)| s.ln()).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(f, s) in history {
        let dx = f.ln() - mx;
        sxx += dx * dx;
        sxy += dx * (s.ln() - my);
    }
    if sxx <= 1e-300 * n {
        return Err(SabrError::DegenerateRegression("all forwards are equal".into()));
    }
    Ok((1.0 + sxy / sxx).clamp(0.0, 1.0))
}

/// `α ≈ f^{1−β} σ_ATM`.
pub fn estimate_alpha_atm(beta: f64, forward: f64, atm_vol: f64) -> Result<f64> {
    ensure_positive(forward, "forward")?;
    ensure_positive(atm_vol, "atm vol")?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(SabrError::Domain(format!("beta must lie in [0, 1], got {beta}")));
    }
    Ok(forward.powf(1.0 - beta) * atm_vol)
}

/// Quoted vol at the forward, linear in strike between the two nearest
/// quotes and flat beyond the ends.
pub fn atm_vol(slice: &Slice, forward: f64) -> Result<f64> {
    let q = &slice.quotes;
    if q.is_empty() {
        return Err(SabrError::Validation("slice has no quotes".into()));
    }
    if forward <= q[0].strike {
        return Ok(q[0].vol);
    }
    for w in q.windows(2) {
        if forward <= w[1].strike {
            let x = (forward - w[0].strike) / (w[1].strike - w[0].strike);
            return Ok(w[0].vol + x * (w[1].vol - w[0].vol));
        }
    }
    Ok(q[q.len() - 1].vol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let h: Vec<(f64, f64)> = (1..10).map(|i| {
            let f = 50.0 * i as f64;
            (f, 3.0 * f.powf(0.5 - 1.0))
        }).collect();
        assert!((estimate_beta_loglog(&h).unwrap() - 0.5).abs() < 1e-10);
        let flat: Vec<(f64, f64)> = (1..5).map(|i| (i as f64, 0.2)).collect();
        assert_eq!(estimate_beta_loglog(&flat).unwrap(), 1.0);
    }

    #[test]
    fn equal_forwards_are_degenerate() {
        let h = [(100.0, 0.2), (100.0, 0.21)];
        assert!(matches!(estimate_beta_loglog(&h), Err(SabrError::DegenerateRegression(_))));
    }

    #[test]
    fn alpha_from_atm() {
        assert_eq!(estimate_alpha_atm(1.0, 2000.0, 0.3).unwrap(), 0.3);
        assert!((estimate_alpha_atm(0.0, 2000.0, 0.3).unwrap() - 600.0).abs() < 1e-12);
        assert!(estimate_alpha_atm(0.5, -1.0, 0.3).is_err());
    }
}
