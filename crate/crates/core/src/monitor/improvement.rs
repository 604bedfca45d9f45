//! Relative mAP change before and after restoration.

use serde::Serialize;

use super::MonitorError;
use crate::numeric::exact_sum;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementSummary {
    /// Percent change per pair; `None` where the baseline is zero.
    pub percent: Vec<Option<f64>>,
    /// Mean over defined entries.
    pub mean: Option<f64>,
}

/// Arithmetic mean of percentages.
pub fn mean_improvement(percents: &[f64]) -> Result<f64, MonitorError> {
    if percents.is_empty() {
        return Err(MonitorError::EmptyInput);
    }
    Ok(exact_sum(percents.iter().copied()) / percents.len() as f64)
}

pub fn improvement_summary(before: &[f64], after: &[f64]) -> Result<ImprovementSummary, MonitorError> {
    if before.len() != after.len() {
        return Err(MonitorError::LengthMismatch(before.len(), after.len()));
    }
    if before.is_empty() {
        return Err(MonitorError::EmptyInput);
    }
    let percent: Vec<Option<f64>> = before
        .iter()
        .zip(after)
        .enumerate()
        .map(|(i, (&b, &a))| {
            if b > 0.0 {
                Some(100.0 * (a - b) / b)
            } else {
                log::warn!("pair {i}: baseline mAP is {b}, percent change undefined");
                None
            }
        })
        .collect();
    let defined: Vec<f64> = percent.iter().flatten().copied().collect();
    let mean = if defined.is_empty() {
        None
    } else {
        Some(mean_improvement(&defined)?)
    };
    Ok(ImprovementSummary { percent, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_percentages() {
        assert_eq!(mean_improvement(&[0.0, 40.0, 275.0, 400.0]).unwrap(), 178.75);
        assert!(matches!(mean_improvement(&[]), Err(MonitorError::EmptyInput)));
    }

    #[test]
    fn pairs() {
        let s = improvement_summary(&[0.3, 0.5], &[0.3, 0.5]).unwrap();
        assert_eq!(s.percent, vec![Some(0.0), Some(0.0)]);
        assert_eq!(s.mean, Some(0.0));

        let s = improvement_summary(&[0.02], &[0.05]).unwrap();
        assert!((s.percent[0].unwrap() - 150.0).abs() < 1e-9);

        let s = improvement_summary(&[0.0, 0.1], &[0.2, 0.2]).unwrap();
        assert_eq!(s.percent[0], None);
        assert!((s.mean.unwrap() - 100.0).abs() < 1e-9);

        let s = improvement_summary(&[0.0], &[0.2]).unwrap();
        assert_eq!(s.mean, None);

        assert!(matches!(improvement_summary(&[0.1], &[]), Err(MonitorError::LengthMismatch(1, 0))));
        assert!(matches!(improvement_summary(&[], &[]), Err(MonitorError::EmptyInput)));
    }
}
