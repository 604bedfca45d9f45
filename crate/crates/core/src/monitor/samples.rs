//! Turning detections and ground truth into scored samples.

use serde::{Deserialize, Serialize};

use super::MonitorError;
use crate::eval::iou;
use crate::io::{Detection, DetectionDoc, GroundTruthDoc, GroundTruthObject};
use crate::similarity::{Label, SimilarityTable};

/// IoU at which a detection is paired with an object in per-detection mode.
pub const PAIRING_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMode {
    /// One sample per image: the classifier's top label against the image's
    /// principal object.
    PrimaryObject,
    /// One sample per detection, paired with an overlapping object.
    PerDetection,
}

impl std::str::FromStr for PairingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "primary_object" => Ok(PairingMode::PrimaryObject),
            "per_detection" => Ok(PairingMode::PerDetection),
            other => Err(format!("unknown pairing mode {other:?}")),
        }
    }
}

/// One term of the stage score.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleScore {
    pub image_id: String,
    pub predicted: Option<Label>,
    pub actual: Option<Label>,
    /// 0 or 1.
    pub similarity: u8,
    pub explain_prob: Option<f64>,
}

impl SampleScore {
    pub fn new(image_id: impl Into<String>, similarity: u8, explain_prob: f64) -> Self {
        SampleScore {
            image_id: image_id.into(),
            predicted: None,
            actual: None,
            similarity,
            explain_prob: Some(explain_prob),
        }
    }

    /// `similarity × explain_prob`, or `None` if the probability is missing.
    pub fn term(&self) -> Option<f64> {
        self.explain_prob.map(|d| if self.similarity == 0 { 0.0 } else { d })
    }
}

fn label(raw: &str) -> Label {
    // annotation parsers reject labels that normalize to nothing
    Label::new(raw).expect("validated label")
}

/// The flagged primary object, else the largest box (first on ties).
fn principal(objects: &[GroundTruthObject]) -> Option<&GroundTruthObject> {
    objects.iter().find(|o| o.primary == Some(true)).or_else(|| {
        objects
            .iter()
            .fold(None::<&GroundTruthObject>, |best, o| match best {
                Some(b) if b.bbox.area() >= o.bbox.area() => Some(b),
                _ => Some(o),
            })
    })
}

/// Highest explanation probability, first on ties. `Err(())` if any
/// detection lacks one.
fn top_verdict(dets: &[Detection]) -> Result<Option<&Detection>, ()> {
    let mut best: Option<&Detection> = None;
    for d in dets {
        let p = d.explain_prob.ok_or(())?;
        if best.is_none_or(|b| p > b.explain_prob.unwrap()) {
            best = Some(d);
        }
    }
    Ok(best)
}

fn primary_sample(
    id: &str,
    dets: &[Detection],
    objects: &[GroundTruthObject],
    table: &SimilarityTable,
) -> Result<Option<SampleScore>, MonitorError> {
    let Some(truth) = principal(objects) else {
        if dets.is_empty() {
            return Ok(None);
        }
        return Err(MonitorError::NoGroundTruth(id.to_string()));
    };
    let actual = label(&truth.label);
    let sample = match top_verdict(dets) {
        Ok(None) => SampleScore {
            image_id: id.to_string(),
            predicted: None,
            actual: Some(actual),
            similarity: 0,
            explain_prob: Some(0.0),
        },
        Ok(Some(d)) => {
            let predicted = label(&d.label);
            SampleScore {
                image_id: id.to_string(),
                similarity: table.similarity(&predicted, &actual),
                predicted: Some(predicted),
                actual: Some(actual),
                explain_prob: d.explain_prob,
            }
        }
        Err(()) => SampleScore {
            image_id: id.to_string(),
            predicted: None,
            actual: Some(actual),
            similarity: 0,
            explain_prob: None,
        },
    };
    Ok(Some(sample))
}

fn per_detection_samples(
    id: &str,
    dets: &[Detection],
    objects: &[GroundTruthObject],
    table: &SimilarityTable,
) -> Vec<SampleScore> {
    if dets.is_empty() {
        return principal(objects)
            .map(|truth| SampleScore {
                image_id: id.to_string(),
                predicted: None,
                actual: Some(label(&truth.label)),
                similarity: 0,
                explain_prob: Some(0.0),
            })
            .into_iter()
            .collect();
    }

    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));
    let mut taken = vec![false; objects.len()];
    let mut paired: Vec<Option<usize>> = vec![None; dets.len()];
    for d in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, o) in objects.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let v = iou(&dets[d].bbox, &o.bbox);
            if v >= PAIRING_IOU && best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            taken[g] = true;
            paired[d] = Some(g);
        }
    }

    dets.iter()
        .zip(paired)
        .map(|(d, g)| {
            let predicted = label(&d.label);
            let actual = g.map(|g| label(&objects[g].label));
            SampleScore {
                image_id: id.to_string(),
                similarity: actual.as_ref().map_or(0, |a| table.similarity(&predicted, a)),
                predicted: Some(predicted),
                actual,
                explain_prob: d.explain_prob,
            }
        })
        .collect()
}

/// Samples for one stage.
///
/// Images are visited in ground-truth document order, then any images that
/// only appear among the detections. An image with objects but no
/// detections still yields a zero-valued sample, so the sample count
/// reflects everything the restorer produced.
pub fn build_samples(
    dets: &DetectionDoc,
    gts: &GroundTruthDoc,
    table: &SimilarityTable,
    mode: PairingMode,
) -> Result<Vec<SampleScore>, MonitorError> {
    let mut ids: Vec<&str> = gts.images.iter().map(|r| r.id.as_str()).collect();
    for r in &dets.images {
        if gts.image(&r.id).is_none() {
            ids.push(&r.id);
        }
    }

    let mut out = Vec::new();
    for id in ids {
        let d = dets.image(id).map_or(&[][..], |r| &r.items);
        let g = gts.image(id).map_or(&[][..], |r| &r.items);
        match mode {
            PairingMode::PrimaryObject => out.extend(primary_sample(id, d, g, table)?),
            PairingMode::PerDetection => out.extend(per_detection_samples(id, d, g, table)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{parse_detections, parse_ground_truth};
    use crate::similarity::SimilarityMode;

    fn grouped() -> SimilarityTable {
        SimilarityTable::default_table(SimilarityMode::Grouped)
    }

    fn gt_doc(objects: &str) -> GroundTruthDoc {
        parse_ground_truth(&format!(
            r#"{{"images":[{{"id":"img","width":100,"height":100,"objects":[{objects}]}}]}}"#
        ))
        .unwrap()
    }

    fn det_doc(dets: &str) -> DetectionDoc {
        parse_detections(&format!(
            r#"{{"images":[{{"id":"img","width":100,"height":100,"detections":[{dets}]}}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn synonym_earns_its_probability() {
        let g = gt_doc(r#"{"box":[0,0,50,50],"label":"car","primary":true},{"box":[0,0,90,90],"label":"person"}"#);
        let d = det_doc(
            r#"{"box":[0,0,50,50],"label":"race car","score":0.7,"explain_prob":0.84},
               {"box":[0,0,10,10],"label":"bus","score":0.9,"explain_prob":0.2}"#,
        );
        let s = build_samples(&d, &g, &grouped(), PairingMode::PrimaryObject).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].similarity, 1);
        assert_eq!(s[0].term(), Some(0.84));
        assert_eq!(s[0].predicted.as_ref().unwrap().as_str(), "race car");
    }

    #[test]
    fn wrong_label_scores_zero() {
        let g = gt_doc(r#"{"box":[0,0,50,50],"label":"person"}"#);
        let d = det_doc(r#"{"box":[0,0,50,50],"label":"car","score":0.7,"explain_prob":0.9}"#);
        let s = build_samples(&d, &g, &grouped(), PairingMode::PrimaryObject).unwrap();
        assert_eq!(s[0].term(), Some(0.0));
    }

    #[test]
    fn no_prediction_scores_zero() {
        let g = gt_doc(r#"{"box":[0,0,50,50],"label":"person"}"#);
        let s = build_samples(&DetectionDoc::default(), &g, &grouped(), PairingMode::PrimaryObject).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].explain_prob, Some(0.0));
        assert_eq!(s[0].term(), Some(0.0));
        let s = build_samples(&det_doc(""), &g, &grouped(), PairingMode::PerDetection).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].term(), Some(0.0));
    }

    #[test]
    fn largest_box_is_principal_without_flag() {
        let g = gt_doc(r#"{"box":[0,0,10,10],"label":"bus"},{"box":[0,0,60,60],"label":"person"}"#);
        let d = det_doc(r#"{"box":[0,0,50,50],"label":"groom","score":0.7,"explain_prob":0.5}"#);
        let s = build_samples(&d, &g, &grouped(), PairingMode::PrimaryObject).unwrap();
        assert_eq!(s[0].actual.as_ref().unwrap().as_str(), "person");
        assert_eq!(s[0].term(), Some(0.5));
    }

    #[test]
    fn detections_without_objects() {
        let g = gt_doc("");
        let d = det_doc(r#"{"box":[0,0,50,50],"label":"car","score":0.7,"explain_prob":0.5}"#);
        let err = build_samples(&d, &g, &grouped(), PairingMode::PrimaryObject).unwrap_err();
        assert!(matches!(err, MonitorError::NoGroundTruth(id) if id == "img"));
        let s = build_samples(&d, &g, &grouped(), PairingMode::PerDetection).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].similarity, 0);
        // neither detections nor objects: nothing to score
        assert!(build_samples(&det_doc(""), &g, &grouped(), PairingMode::PrimaryObject).unwrap().is_empty());
    }

    #[test]
    fn missing_probability_is_carried() {
        let g = gt_doc(r#"{"box":[0,0,50,50],"label":"car"}"#);
        let d = det_doc(r#"{"box":[0,0,50,50],"label":"car","score":0.7}"#);
        let s = build_samples(&d, &g, &grouped(), PairingMode::PrimaryObject).unwrap();
        assert_eq!(s[0].term(), None);
    }

    #[test]
    fn per_detection_pairs_by_overlap() {
        let g = gt_doc(r#"{"box":[0,0,50,50],"label":"car"},{"box":[60,60,90,90],"label":"person"}"#);
        let d = det_doc(
            r#"{"box":[0,0,50,48],"label":"taxi","score":0.9,"explain_prob":0.8},
               {"box":[0,0,50,50],"label":"car","score":0.5,"explain_prob":0.7},
               {"box":[60,60,90,90],"label":"bicycle","score":0.6,"explain_prob":0.6}"#,
        );
        let s = build_samples(&d, &g, &grouped(), PairingMode::PerDetection).unwrap();
        let terms: Vec<_> = s.iter().map(|x| x.term().unwrap()).collect();
        // the taxi wins the car by score, the second car box is unpaired,
        // the bicycle is paired with a person
        assert_eq!(terms, vec![0.8, 0.0, 0.0]);
        assert_eq!(s[1].actual, None);
        assert_eq!(s[2].actual.as_ref().unwrap().as_str(), "person");
    }
}
