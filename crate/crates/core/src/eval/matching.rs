use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::EvalError;
use crate::io::{BoundingBox, Detection, GroundTruthObject};
use crate::similarity::{Label, SimilarityTable};

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let w = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let h = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = w * h;
    if inter == 0.0 {
        return 0.0;
    }
    (inter / (a.area() + b.area() - inter)).min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchRecord {
    /// Index into the detection slice passed to [`match_detections`].
    pub detection: usize,
    pub score: f64,
    /// Index into the ground-truth slice, when matched.
    pub ground_truth: Option<usize>,
    /// IoU with the matched object, or 0.
    pub iou: f64,
    pub true_positive: bool,
}

/// Detections of one class in ranking order, plus the class's object count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassMatches {
    pub records: Vec<MatchRecord>,
    pub gt_count: usize,
}

impl ClassMatches {
    pub fn tp(&self) -> usize {
        self.records.iter().filter(|r| r.true_positive).count()
    }

    pub fn fp(&self) -> usize {
        self.records.len() - self.tp()
    }

    pub fn flags(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.true_positive).collect()
    }
}

/// Per-class matches keyed by canonical class.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchSet {
    pub classes: BTreeMap<String, ClassMatches>,
}

/// Greedy matching, class by class.
///
/// Labels are folded through the table's head classes. Within a class,
/// detections are visited by descending score; ties go to the detection with
/// the higher best-case IoU, then the smaller image id, then input order.
/// Each detection takes the unmatched same-image object with the highest
/// IoU at or above `iou_threshold` (lowest index on ties); otherwise it is a
/// false positive.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruthObject],
    iou_threshold: f64,
    table: &SimilarityTable,
) -> Result<MatchSet, EvalError> {
    if !(iou_threshold > 0.0 && iou_threshold < 1.0) {
        return Err(EvalError::BadThreshold(iou_threshold));
    }
    let key = |raw: &str| -> String {
        // labels were validated non-empty at parse time
        Label::new(raw).map(|l| table.class_key(&l).as_str().to_string()).unwrap_or_default()
    };

    let mut by_class: BTreeMap<String, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, d) in dets.iter().enumerate() {
        by_class.entry(key(&d.label)).or_default().0.push(i);
    }
    for (i, g) in gts.iter().enumerate() {
        by_class.entry(key(&g.label)).or_default().1.push(i);
    }

    let mut out = MatchSet::default();
    for (class, (det_idx, gt_idx)) in by_class {
        let best_iou: Vec<f64> = det_idx
            .iter()
            .map(|&d| {
                gt_idx
                    .iter()
                    .filter(|&&g| gts[g].image_id == dets[d].image_id)
                    .map(|&g| iou(&dets[d].bbox, &gts[g].bbox))
                    .fold(0.0, f64::max)
            })
            .collect();

        let mut order: Vec<usize> = (0..det_idx.len()).collect();
        order.sort_by(|&a, &b| {
            let (da, db) = (&dets[det_idx[a]], &dets[det_idx[b]]);
            db.score
                .partial_cmp(&da.score)
                .unwrap_or(Ordering::Equal)
                .then(best_iou[b].partial_cmp(&best_iou[a]).unwrap_or(Ordering::Equal))
                .then_with(|| da.image_id.cmp(&db.image_id))
                .then(det_idx[a].cmp(&det_idx[b]))
        });

        let mut taken = vec![false; gt_idx.len()];
        let mut records = Vec::with_capacity(order.len());
        for pos in order {
            let d = det_idx[pos];
            let mut best: Option<(usize, f64)> = None;
            for (slot, &g) in gt_idx.iter().enumerate() {
                if taken[slot] || gts[g].image_id != dets[d].image_id {
                    continue;
                }
                let o = iou(&dets[d].bbox, &gts[g].bbox);
                if o >= iou_threshold && best.is_none_or(|(_, b)| o > b) {
                    best = Some((slot, o));
                }
            }
            if let Some((slot, _)) = best {
                taken[slot] = true;
            }
            records.push(MatchRecord {
                detection: d,
                score: dets[d].score,
                ground_truth: best.map(|(slot, _)| gt_idx[slot]),
                iou: best.map_or(0.0, |(_, o)| o),
                true_positive: best.is_some(),
            });
        }
        out.classes.insert(
            class,
            ClassMatches {
                records,
                gt_count: gt_idx.len(),
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::SimilarityMode;

    fn bx(c: [f64; 4]) -> BoundingBox {
        BoundingBox::new(c[0], c[1], c[2], c[3]).unwrap()
    }

    fn det(img: &str, c: [f64; 4], label: &str, score: f64) -> Detection {
        Detection {
            image_id: img.into(),
            bbox: bx(c),
            label: label.into(),
            score,
            explain_prob: None,
        }
    }

    fn gt(img: &str, c: [f64; 4], label: &str) -> GroundTruthObject {
        GroundTruthObject {
            image_id: img.into(),
            bbox: bx(c),
            label: label.into(),
            primary: None,
        }
    }

    fn table() -> SimilarityTable {
        SimilarityTable::default_table(SimilarityMode::Grouped)
    }

    #[test]
    fn iou_cases() {
        let a = bx([0.0, 0.0, 2.0, 2.0]);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bx([5.0, 5.0, 6.0, 6.0])), 0.0);
        assert_eq!(iou(&a, &bx([2.0, 0.0, 3.0, 2.0])), 0.0);
        assert!((iou(&a, &bx([1.0, 0.0, 3.0, 2.0])) - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn single_true_positive() {
        let m = match_detections(
            &[det("a", [0.0, 0.0, 10.0, 10.0], "car", 0.8)],
            &[gt("a", [0.0, 0.0, 10.0, 9.0], "car")],
            0.5,
            &table(),
        )
        .unwrap();
        let car = &m.classes["car"];
        assert_eq!(car.flags(), vec![true]);
        assert_eq!(car.gt_count, 1);
        assert!((car.records[0].iou - 0.9).abs() < 1e-12);
    }

    #[test]
    fn one_object_matches_once() {
        let dets = [
            det("a", [0.0, 0.0, 10.0, 10.0], "car", 0.8),
            det("a", [0.0, 0.0, 10.0, 9.5], "car", 0.9),
        ];
        let m = match_detections(&dets, &[gt("a", [0.0, 0.0, 10.0, 10.0], "car")], 0.5, &table()).unwrap();
        let car = &m.classes["car"];
        assert_eq!(car.records[0].detection, 1);
        assert_eq!(car.flags(), vec![true, false]);
        assert_eq!((car.tp(), car.fp()), (1, 1));
    }

    #[test]
    fn labels_fold_to_head_class() {
        let m = match_detections(
            &[det("a", [0.0, 0.0, 10.0, 10.0], "Race-Car", 0.8)],
            &[gt("a", [0.0, 0.0, 10.0, 10.0], "taxi")],
            0.5,
            &table(),
        )
        .unwrap();
        assert_eq!(m.classes.keys().collect::<Vec<_>>(), vec!["car"]);
        assert_eq!(m.classes["car"].tp(), 1);
    }

    #[test]
    fn other_images_never_match() {
        let m = match_detections(
            &[det("b", [0.0, 0.0, 10.0, 10.0], "car", 0.8)],
            &[gt("a", [0.0, 0.0, 10.0, 10.0], "car")],
            0.5,
            &table(),
        )
        .unwrap();
        assert_eq!(m.classes["car"].flags(), vec![false]);
    }

    #[test]
    fn score_ties_prefer_higher_iou_then_image_id() {
        let dets = [
            det("b", [0.0, 0.0, 10.0, 10.0], "car", 0.5),
            det("a", [0.0, 0.0, 10.0, 6.0], "car", 0.5),
            det("a", [0.0, 0.0, 10.0, 10.0], "car", 0.5),
        ];
        let gts = [gt("a", [0.0, 0.0, 10.0, 10.0], "car"), gt("b", [0.0, 0.0, 10.0, 10.0], "car")];
        let m = match_detections(&dets, &gts, 0.5, &table()).unwrap();
        let order: Vec<_> = m.classes["car"].records.iter().map(|r| r.detection).collect();
        assert_eq!(order, vec![2, 0, 1]);
        assert_eq!(m.classes["car"].flags(), vec![true, true, false]);
    }

    #[test]
    fn threshold_validation() {
        for t in [0.0, 1.0, -0.2, f64::NAN] {
            assert!(matches!(match_detections(&[], &[], t, &table()), Err(EvalError::BadThreshold(_))));
        }
    }
}
