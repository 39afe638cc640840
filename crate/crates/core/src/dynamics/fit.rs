use crate::error::{invalid, Result};

/// Result of fitting `A exp(-rate t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    pub rate: f64,
    pub amplitude: f64,
    /// max over samples of `|fit - value| / |value|`
    pub residual: f64,
}

/// Least-squares line through `(t, ln|v|)`.
pub fn fit_exponential_decay(times: &[f64], values: &[f64]) -> Result<ExponentialFit> {
    if times.len() != values.len() {
        return Err(invalid("times and values differ in length"));
    }
    if times.len() < 3 {
        return Err(invalid("an exponential fit needs at least 3 samples"));
    }
    if values.iter().any(|&v| v == 0.0 || !v.is_finite()) {
        return Err(invalid("values must be finite and non-zero"));
    }
    let sign = values[0].signum();
    if values.iter().any(|v| v.signum() != sign) {
        return Err(invalid("values change sign"));
    }
    let n = times.len() as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    let tm = times.iter().sum::<f64>() / n;
    let ym = logs.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (t, y) in times.iter().zip(&logs) {
        sxy += (t - tm) * (y - ym);
        sxx += (t - tm) * (t - tm);
    }
    if sxx == 0.0 {
        return Err(invalid("sample times must not all coincide"));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let amplitude = sign * intercept.exp();
    let residual = times
        .iter()
        .zip(values)
        .map(|(t, v)| ((amplitude * (slope * t).exp() - v) / v).abs())
        .fold(0.0, f64::max);
    Ok(ExponentialFit {
        rate: -slope,
        amplitude,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let t = [0.0, 0.5, 1.0];
        let v: Vec<f64> = t.iter().map(|t: &f64| (-2.0 * t).exp()).collect();
        let fit = fit_exponential_decay(&t, &v).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-12);
        assert!((fit.amplitude - 1.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn constant_series_has_zero_rate() {
        let fit = fit_exponential_decay(&[0.0, 1.0, 2.0, 3.0], &[4.0; 4]).unwrap();
        assert!(fit.rate.abs() < 1e-15);
    }

    #[test]
    fn synthetic_rate_recovered() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let v: Vec<f64> = t.iter().map(|t| -3.0 * (-0.586 * t).exp()).collect();
        let fit = fit_exponential_decay(&t, &v).unwrap();
        assert!((fit.rate - 0.586).abs() < 1e-9);
        assert!((fit.amplitude + 3.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_exponential_decay(&[0.0, 1.0], &[1.0, 0.5]).is_err());
        assert!(fit_exponential_decay(&[0.0, 1.0, 2.0], &[1.0, -0.5, 0.2]).is_err());
        assert!(fit_exponential_decay(&[0.0, 1.0, 2.0], &[1.0, 0.0, 0.2]).is_err());
    }
}
