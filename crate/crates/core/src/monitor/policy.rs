//! Continue / flag / stop guidance from a sequence of stage scores.

use serde::{Deserialize, Serialize};

use super::MonitorError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidancePolicy {
    /// A stage-to-stage change below `-drop_tolerance` counts as a drop.
    pub drop_tolerance: f64,
    /// Consecutive drops that trigger a stop.
    pub patience: u32,
    /// Any stage scoring below this triggers a stop.
    pub min_phi: f64,
}

impl Default for GuidancePolicy {
    fn default() -> Self {
        GuidancePolicy {
            drop_tolerance: 0.05,
            patience: 2,
            min_phi: 0.0,
        }
    }
}

impl GuidancePolicy {
    pub fn validate(self) -> Result<Self, MonitorError> {
        if !(0.0..=1.0).contains(&self.drop_tolerance) {
            return Err(MonitorError::BadPolicy(format!(
                "drop_tolerance {} outside [0, 1]",
                self.drop_tolerance
            )));
        }
        if self.patience < 1 {
            return Err(MonitorError::BadPolicy("patience must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_phi) {
            return Err(MonitorError::BadPolicy(format!("min_phi {} outside [0, 1]", self.min_phi)));
        }
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self, MonitorError> {
        let p: GuidancePolicy = serde_json::from_str(text).map_err(|e| MonitorError::BadPolicy(e.to_string()))?;
        p.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Continue,
    Flag,
    Stop,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::Continue => "continue",
            Decision::Flag => "flag",
            Decision::Stop => "stop",
        })
    }
}

/// One decision per stage, using only the scores up to that stage.
///
/// A drop is a change below `-drop_tolerance`. The first drop in a run is
/// flagged; `patience` consecutive drops, or a score under `min_phi`, stop.
pub fn decide(phis: &[f64], policy: &GuidancePolicy) -> Vec<Decision> {
    let mut run = 0u32;
    phis.iter()
        .enumerate()
        .map(|(i, &phi)| {
            if i > 0 {
                if phi - phis[i - 1] < -policy.drop_tolerance {
                    run += 1;
                } else {
                    run = 0;
                }
            }
            if phi < policy.min_phi || run >= policy.patience {
                Decision::Stop
            } else if run > 0 {
                Decision::Flag
            } else {
                Decision::Continue
            }
        })
        .collect()
}

/// Index of the best stage (earliest on ties) when the latest decision is a
/// flag or stop and the best stage is not the latest one.
pub fn rollback_index(phis: &[f64], decisions: &[Decision]) -> Option<usize> {
    let last = decisions.last()?;
    if *last == Decision::Continue {
        return None;
    }
    let best = phis
        .iter()
        .enumerate()
        .fold(0, |b, (i, &p)| if p > phis[b] { i } else { b });
    (best + 1 != phis.len()).then_some(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Decision::*;

    fn policy(tau: f64, patience: u32) -> GuidancePolicy {
        GuidancePolicy {
            drop_tolerance: tau,
            patience,
            min_phi: 0.0,
        }
    }

    #[test]
    fn rising_scores_continue() {
        let p = [0.2, 0.3, 0.5];
        let d = decide(&p, &policy(0.05, 2));
        assert_eq!(d, vec![Continue; 3]);
        assert_eq!(rollback_index(&p, &d), None);
    }

    #[test]
    fn declining_scores_stop() {
        let p = [0.5, 0.2, 0.1];
        let d = decide(&p, &policy(0.05, 2));
        assert_eq!(d, vec![Continue, Flag, Stop]);
        assert_eq!(rollback_index(&p, &d), Some(0));
    }

    #[test]
    fn single_stage() {
        let d = decide(&[0.4], &GuidancePolicy::default());
        assert_eq!(d, vec![Continue]);
        assert_eq!(rollback_index(&[0.4], &d), None);
        assert_eq!(rollback_index(&[], &[]), None);
    }

    #[test]
    fn recovery_resets_the_run() {
        let p = [0.11, 0.01, 0.01, 0.17, 0.48];
        let d = decide(&p, &policy(0.05, 2));
        assert_eq!(d, vec![Continue, Flag, Continue, Continue, Continue]);
        assert_eq!(rollback_index(&p, &d), None);
    }

    #[test]
    fn floor_stops() {
        let p = GuidancePolicy {
            min_phi: 0.3,
            ..GuidancePolicy::default()
        };
        assert_eq!(decide(&[0.4, 0.29], &p), vec![Continue, Stop]);
    }

    #[test]
    fn policy_validation() {
        assert_eq!(GuidancePolicy::from_json("{}").unwrap(), GuidancePolicy::default());
        let p = GuidancePolicy::from_json(r#"{"drop_tolerance":0.1,"patience":3,"min_phi":0.2}"#).unwrap();
        assert_eq!(p.patience, 3);
        assert!(GuidancePolicy::from_json(r#"{"patience":0}"#).is_err());
        assert!(GuidancePolicy::from_json(r#"{"drop_tolerance":-0.1}"#).is_err());
        assert!(GuidancePolicy::from_json(r#"{"min_phi":2}"#).is_err());
        assert!(GuidancePolicy::from_json(r#"{"tau":0.1}"#).is_err());
    }

    proptest! {
        #[test]
        fn lowering_tolerance_never_undoes_a_stop(
            phis in proptest::collection::vec(0.0f64..=1.0, 1..12),
            hi in 0.0f64..=1.0,
            frac in 0.0f64..=1.0,
            patience in 1u32..4,
        ) {
            let lo = hi * frac;
            let a = decide(&phis, &policy(hi, patience));
            let b = decide(&phis, &policy(lo, patience));
            for (x, y) in a.iter().zip(&b) {
                if *x == Stop {
                    prop_assert_eq!(*y, Stop);
                }
                if *x == Flag {
                    prop_assert_ne!(*y, Continue);
                }
            }
        }
    }
}
