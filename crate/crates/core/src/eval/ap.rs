use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matching::{ClassMatches, MatchSet};
use super::EvalError;
use crate::numeric::{display_percent, exact_sum};

/// The six object classes of the DAWN weather benchmark, in report order.
pub const DAWN_CLASSES: [&str; 6] = ["car", "bus", "truck", "motorcycle", "person", "bicycle"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApMode {
    /// Area under the monotone precision envelope at every recall step.
    AllPoint,
    /// Mean of the envelope sampled at recall 0, 0.1, ..., 1.
    ElevenPoint,
}

impl std::str::FromStr for ApMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all_point" => Ok(ApMode::AllPoint),
            "eleven_point" => Ok(ApMode::ElevenPoint),
            other => Err(format!("unknown AP mode {other:?}")),
        }
    }
}

/// AP for one class. `None` when the class has neither objects nor
/// detections; 0 when it has detections but no objects.
pub fn average_precision(matches: &ClassMatches, mode: ApMode) -> Option<f64> {
    if matches.gt_count == 0 {
        return if matches.records.is_empty() { None } else { Some(0.0) };
    }
    let total = matches.gt_count as f64;
    let mut recall = Vec::with_capacity(matches.records.len());
    let mut precision = Vec::with_capacity(matches.records.len());
    let mut tp = 0usize;
    for (i, r) in matches.records.iter().enumerate() {
        if r.true_positive {
            tp += 1;
        }
        recall.push(tp as f64 / total);
        precision.push(tp as f64 / (i + 1) as f64);
    }

    let ap = match mode {
        ApMode::AllPoint => {
            let mut mrec = Vec::with_capacity(recall.len() + 2);
            mrec.push(0.0);
            mrec.extend_from_slice(&recall);
            mrec.push(1.0);
            let mut mpre = Vec::with_capacity(precision.len() + 2);
            mpre.push(0.0);
            mpre.extend_from_slice(&precision);
            mpre.push(0.0);
            for i in (0..mpre.len() - 1).rev() {
                mpre[i] = mpre[i].max(mpre[i + 1]);
            }
            (1..mrec.len())
                .filter(|&i| mrec[i] != mrec[i - 1])
                .map(|i| (mrec[i] - mrec[i - 1]) * mpre[i])
                .sum()
        }
        ApMode::ElevenPoint => {
            let sum: f64 = (0..=10)
                .map(|step| {
                    let t = step as f64 / 10.0;
                    recall
                        .iter()
                        .zip(&precision)
                        .filter(|(r, _)| **r >= t)
                        .map(|(_, p)| *p)
                        .fold(0.0, f64::max)
                })
                .sum();
            sum / 11.0
        }
    };
    Some(ap.clamp(0.0, 1.0))
}

/// Arithmetic mean of per-class APs, independent of class order.
pub fn mean_ap(aps: &[f64]) -> Result<f64, EvalError> {
    if aps.is_empty() {
        return Err(EvalError::EmptyClassList);
    }
    Ok(exact_sum(aps.iter().copied()) / aps.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassSelection {
    /// Exactly these classes, in this order; classes without objects score 0.
    Configured(Vec<String>),
    /// Every class that has at least one ground-truth object, alphabetically.
    Observed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassAp {
    pub ap: f64,
    pub tp: usize,
    pub fp: usize,
    pub gt: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApReport {
    pub classes: IndexMap<String, ClassAp>,
    pub map: f64,
}

impl ApReport {
    pub fn from_matches(matches: &MatchSet, selection: &ClassSelection, mode: ApMode) -> Result<Self, EvalError> {
        let names: Vec<String> = match selection {
            ClassSelection::Configured(list) => list.clone(),
            ClassSelection::Observed => matches
                .classes
                .iter()
                .filter(|(_, m)| m.gt_count > 0)
                .map(|(c, _)| c.clone())
                .collect(),
        };
        if names.is_empty() {
            return Err(EvalError::EmptyClassList);
        }
        let empty = ClassMatches::default();
        let rows: Vec<(String, ClassAp)> = names
            .par_iter()
            .map(|name| {
                let m = matches.classes.get(name).unwrap_or(&empty);
                let ap = average_precision(m, mode).unwrap_or(0.0);
                (
                    name.clone(),
                    ClassAp {
                        ap,
                        tp: m.tp(),
                        fp: m.fp(),
                        gt: m.gt_count,
                    },
                )
            })
            .collect();
        let aps: Vec<f64> = rows.iter().map(|(_, c)| c.ap).collect();
        let map = mean_ap(&aps)?;
        Ok(ApReport {
            classes: rows.into_iter().collect(),
            map,
        })
    }

    /// Builds a report straight from per-class AP values (counts zeroed).
    pub fn from_aps<'a, I>(classes: &[&str], aps: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let given: IndexMap<&str, f64> = aps.into_iter().collect();
        let rows: IndexMap<String, ClassAp> = classes
            .iter()
            .map(|c| {
                (
                    c.to_string(),
                    ClassAp {
                        ap: given.get(c).copied().unwrap_or(0.0),
                        tp: 0,
                        fp: 0,
                        gt: 0,
                    },
                )
            })
            .collect();
        let aps: Vec<f64> = rows.values().map(|c| c.ap).collect();
        let map = mean_ap(&aps)?;
        Ok(ApReport { classes: rows, map })
    }

    /// Integer percentages per class, then `"map"`.
    pub fn display(&self) -> IndexMap<String, i64> {
        let mut out: IndexMap<String, i64> = self
            .classes
            .iter()
            .map(|(c, v)| (c.clone(), display_percent(v.ap)))
            .collect();
        out.insert("map".into(), display_percent(self.map));
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "classes": self.classes,
            "map": self.map,
            "display": self.display(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::matching::MatchRecord;

    fn class(flags: &[bool], gt: usize) -> ClassMatches {
        ClassMatches {
            records: flags
                .iter()
                .enumerate()
                .map(|(i, &tp)| MatchRecord {
                    detection: i,
                    score: 1.0 - i as f64 * 0.01,
                    ground_truth: None,
                    iou: 0.0,
                    true_positive: tp,
                })
                .collect(),
            gt_count: gt,
        }
    }

    #[test]
    fn all_point_cases() {
        assert_eq!(average_precision(&class(&[true, true], 2), ApMode::AllPoint), Some(1.0));
        assert_eq!(average_precision(&class(&[], 3), ApMode::AllPoint), Some(0.0));
        let ap = average_precision(&class(&[true, false, true], 2), ApMode::AllPoint).unwrap();
        assert!((ap - (0.5 + 2.0 / 3.0 * 0.5)).abs() < 1e-15);
        assert_eq!(average_precision(&class(&[false, true], 0), ApMode::AllPoint), Some(0.0));
        assert_eq!(average_precision(&class(&[], 0), ApMode::AllPoint), None);
        // half the objects never found
        assert_eq!(average_precision(&class(&[true], 2), ApMode::AllPoint), Some(0.5));
    }

    #[test]
    fn eleven_point_cases() {
        assert_eq!(average_precision(&class(&[true, true], 2), ApMode::ElevenPoint), Some(1.0));
        // recall 0.5 at precision 1, recall 1 at precision 2/3
        let ap = average_precision(&class(&[true, false, true], 2), ApMode::ElevenPoint).unwrap();
        assert!((ap - (6.0 * 1.0 + 5.0 * (2.0 / 3.0)) / 11.0).abs() < 1e-15);
        assert_eq!("eleven_point".parse::<ApMode>(), Ok(ApMode::ElevenPoint));
        assert!("coco".parse::<ApMode>().is_err());
    }

    #[test]
    fn map_over_dawn_classes() {
        let r = ApReport::from_aps(&DAWN_CLASSES, [("car", 0.11)]).unwrap();
        assert!((r.map - 0.11 / 6.0).abs() < 1e-15);
        assert_eq!(r.display()["map"], 2);
        assert_eq!(r.display()["car"], 11);
        let r = ApReport::from_aps(&DAWN_CLASSES, [("car", 0.17)]).unwrap();
        assert_eq!(r.display()["map"], 3);
        assert_eq!(mean_ap(&[0.3; 4]).unwrap(), 0.3);
        assert_eq!(mean_ap(&[]), Err(EvalError::EmptyClassList));
        assert_eq!(ApReport::from_aps(&[], []), Err(EvalError::EmptyClassList));
    }

    #[test]
    fn observed_selection_skips_classes_without_objects() {
        let mut ms = MatchSet::default();
        ms.classes.insert("car".into(), class(&[true], 1));
        ms.classes.insert("zebra".into(), class(&[false], 0));
        let r = ApReport::from_matches(&ms, &ClassSelection::Observed, ApMode::AllPoint).unwrap();
        assert_eq!(r.classes.keys().collect::<Vec<_>>(), vec!["car"]);
        assert_eq!(r.map, 1.0);

        let cfg = ClassSelection::Configured(vec!["car".into(), "bus".into()]);
        let r = ApReport::from_matches(&ms, &cfg, ApMode::AllPoint).unwrap();
        assert_eq!(r.map, 0.5);
        assert_eq!(r.classes["bus"].gt, 0);

        let empty = MatchSet::default();
        assert_eq!(
            ApReport::from_matches(&empty, &ClassSelection::Observed, ApMode::AllPoint),
            Err(EvalError::EmptyClassList)
        );
    }

    #[test]
    fn json_shape() {
        let r = ApReport::from_aps(&["car", "bus"], [("car", 0.5)]).unwrap();
        let v = r.to_json();
        assert_eq!(v["classes"]["car"]["ap"], 0.5);
        assert_eq!(v["display"]["map"], 25);
        let keys: Vec<_> = v["display"].as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, vec!["car", "bus", "map"]);
    }
}
