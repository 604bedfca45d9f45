//! Single-class AP by explicit counting at every rank cut.

#[derive(Debug, Clone)]
pub struct OracleDet {
    pub image: String,
    pub bbox: [f64; 4],
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct OracleGt {
    pub image: String,
    pub bbox: [f64; 4],
}

fn overlap(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let mut w = a[2].min(b[2]) - a[0].max(b[0]);
    let mut h = a[3].min(b[3]) - a[1].max(b[1]);
    if w < 0.0 {
        w = 0.0;
    }
    if h < 0.0 {
        h = 0.0;
    }
    let inter = w * h;
    let area_a = (a[2] - a[0]) * (a[3] - a[1]);
    let area_b = (b[2] - b[0]) * (b[3] - b[1]);
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Returns true when detection `i` must be ranked before detection `j`.
fn ranks_before(dets: &[OracleDet], best: &[f64], i: usize, j: usize) -> bool {
    if dets[i].score != dets[j].score {
        return dets[i].score > dets[j].score;
    }
    if best[i] != best[j] {
        return best[i] > best[j];
    }
    if dets[i].image != dets[j].image {
        return dets[i].image < dets[j].image;
    }
    i < j
}

/// Ranking order by repeated selection of the best remaining detection.
fn rank_order(dets: &[OracleDet], gts: &[OracleGt]) -> Vec<usize> {
    let mut best = vec![0.0f64; dets.len()];
    for i in 0..dets.len() {
        for g in gts {
            if g.image == dets[i].image {
                let o = overlap(&dets[i].bbox, &g.bbox);
                if o > best[i] {
                    best[i] = o;
                }
            }
        }
    }
    let mut taken = vec![false; dets.len()];
    let mut order = Vec::new();
    for _ in 0..dets.len() {
        let mut pick: Option<usize> = None;
        for i in 0..dets.len() {
            if taken[i] {
                continue;
            }
            pick = match pick {
                None => Some(i),
                Some(p) if ranks_before(dets, &best, i, p) => Some(i),
                other => other,
            };
        }
        let p = pick.unwrap();
        taken[p] = true;
        order.push(p);
    }
    order
}

/// True-positive flag for every detection, indexed like `dets`.
pub fn greedy_labels(dets: &[OracleDet], gts: &[OracleGt], iou_threshold: f64) -> Vec<bool> {
    let order = rank_order(dets, gts);
    let mut used = vec![false; gts.len()];
    let mut tp = vec![false; dets.len()];
    for &d in &order {
        let mut chosen: Option<usize> = None;
        let mut chosen_iou = -1.0;
        for g in 0..gts.len() {
            if used[g] || gts[g].image != dets[d].image {
                continue;
            }
            let o = overlap(&dets[d].bbox, &gts[g].bbox);
            if o >= iou_threshold && o > chosen_iou {
                chosen = Some(g);
                chosen_iou = o;
            }
        }
        if let Some(g) = chosen {
            used[g] = true;
            tp[d] = true;
        }
    }
    tp
}

/// All-point interpolated AP. For each rank cut `n` the precision and recall
/// are recounted from scratch; each true positive contributes `1/G` recall
/// at the best precision achievable at that cut or any deeper one.
///
/// Returns 0 when there is no ground truth.
pub fn ap_bruteforce(dets: &[OracleDet], gts: &[OracleGt], iou_threshold: f64) -> f64 {
    if gts.is_empty() {
        return 0.0;
    }
    let order = rank_order(dets, gts);
    let tp = greedy_labels(dets, gts, iou_threshold);
    let total = gts.len() as f64;

    let n = order.len();
    let mut precision_at = vec![0.0f64; n + 1];
    for cut in 1..=n {
        let mut hits = 0usize;
        for r in 0..cut {
            if tp[order[r]] {
                hits += 1;
            }
        }
        precision_at[cut] = hits as f64 / cut as f64;
    }

    let mut ap = 0.0;
    for cut in 1..=n {
        if !tp[order[cut - 1]] {
            continue;
        }
        let mut best = 0.0f64;
        for deeper in cut..=n {
            if precision_at[deeper] > best {
                best = precision_at[deeper];
            }
        }
        ap += best / total;
    }
    ap
}
