use ndarray::ArrayView1;

use crate::error::{check_len, Error, Result};

fn norm(v: ArrayView1<'_, f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// `20 log10(‖x‖ / ‖x − x̂‖)`; `+∞` on exact reconstruction.
pub fn snr_db(estimate: ArrayView1<'_, f64>, reference: ArrayView1<'_, f64>) -> Result<f64> {
    check_len(reference.len(), estimate.len())?;
    let signal = norm(reference);
    if signal == 0.0 {
        return Err(Error::InvalidArgument("reference signal is zero".into()));
    }
    let err = norm((&reference - &estimate).view());
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (signal / err).log10())
}

/// Relative errors at or below this are rescaling round-off.
const ANGULAR_EXACT: f64 = 1e-14;

/// SNR after rescaling the estimate to the reference norm:
/// `20 log10(‖x‖ / ‖x − (‖x‖/‖x̂‖) x̂‖)`. Estimates that match the reference
/// up to rescaling round-off score `+∞`.
pub fn angular_snr_db(estimate: ArrayView1<'_, f64>, reference: ArrayView1<'_, f64>) -> Result<f64> {
    check_len(reference.len(), estimate.len())?;
    let ne = norm(estimate);
    if ne == 0.0 {
        return Err(Error::InvalidArgument("estimate is zero".into()));
    }
    let scaled = estimate.mapv(|v| v * (norm(reference) / ne));
    let snr = snr_db(scaled.view(), reference)?;
    Ok(if snr >= -20.0 * ANGULAR_EXACT.log10() { f64::INFINITY } else { snr })
}

/// Arithmetic mean; `+∞` entries make the mean `+∞`.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a == b { a } else { 0.5 * (a + b) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn snr_examples() {
        let x = array![3.0, 4.0];
        assert_eq!(snr_db(x.view(), x.view()).unwrap(), f64::INFINITY);
        assert!(snr_db(array![0.0, 0.0].view(), x.view()).unwrap().abs() < 1e-12);
        let x = array![1.0, 0.0];
        let xh = array![1.0, 0.1];
        assert!((snr_db(xh.view(), x.view()).unwrap() - 20.0).abs() < 1e-12);
        assert!(snr_db(x.view(), array![0.0, 0.0].view()).is_err());
        assert!(snr_db(x.view(), array![1.0].view()).is_err());
    }

    #[test]
    fn angular_examples() {
        let x = array![0.3, -1.2, 0.5];
        assert_eq!(angular_snr_db((&x * 2.5).view(), x.view()).unwrap(), f64::INFINITY);
        let neg = angular_snr_db((-&x).view(), x.view()).unwrap();
        assert!((neg - 20.0 * 0.5f64.log10()).abs() < 1e-12);
        assert!(angular_snr_db(array![0.0, 0.0, 0.0].view(), x.view()).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[1.0, f64::INFINITY, f64::INFINITY]), f64::INFINITY);
        assert_eq!(mean(&[1.0, f64::INFINITY]), f64::INFINITY);
    }
}
