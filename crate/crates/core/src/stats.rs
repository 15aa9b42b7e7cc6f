//! Small descriptive-statistics helpers.

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation (divides by `n`).
pub(crate) fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

/// Empirical quantile as the order statistic of rank `ceil(q * n)` (1-based).
pub(crate) fn order_statistic(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistic_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(order_statistic(&v, 0.99), 99.0);
        assert_eq!(order_statistic(&v, 0.995), 100.0);
        assert_eq!(order_statistic(&v, 0.0), 1.0);
        let w: Vec<f64> = (1..=2000).rev().map(f64::from).collect();
        assert_eq!(order_statistic(&w, 0.99), 1980.0);
    }

    #[test]
    fn moments() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&v), 2.5);
        assert!((std_dev(&v) - 1.25f64.sqrt()).abs() < 1e-15);
        assert!(mean(&[]).is_nan());
    }
}
