//! Average precision at an IoU threshold over axis-aligned boxes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{iou_aabb, Aabb};
use crate::manifest::DatasetManifest;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;
pub const DEFAULT_CONFIDENCE_FLOOR: f64 = 0.1;
const RECALL_POINTS: u64 = 101;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("AP is undefined without ground truth")]
    UndefinedAp,
    #[error("detection {index}: {reason}")]
    InvalidDetection { index: usize, reason: String },
    #[error("cannot parse detections: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: String,
    pub aabb: Aabb,
    pub confidence: f64,
    pub class_id: u32,
}

impl Detection {
    pub fn new(image_id: impl Into<String>, aabb: Aabb, confidence: f64) -> Self {
        Self {
            image_id: image_id.into(),
            aabb,
            confidence,
            class_id: 0,
        }
    }

    fn check(&self, index: usize) -> Result<(), EvalError> {
        let bad = |reason: String| Err(EvalError::InvalidDetection { index, reason });
        if !(0.0..=1.0).contains(&self.confidence) {
            return bad(format!("confidence {} outside [0, 1]", self.confidence));
        }
        let a = self.aabb.to_array();
        if !a.iter().all(|v| v.is_finite()) || self.aabb.area() <= 0.0 {
            return bad(format!("box {a:?} has no positive area"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DetectionRecord {
    image_id: String,
    bbox: [f64; 4],
    score: f64,
    #[serde(default)]
    class_id: u32,
}

/// Parses `[{image_id, bbox: [x_min, y_min, x_max, y_max], score}]`.
pub fn detections_from_json(bytes: &[u8]) -> Result<Vec<Detection>, EvalError> {
    let recs: Vec<DetectionRecord> = serde_json::from_slice(bytes).map_err(|e| EvalError::Parse(e.to_string()))?;
    let dets: Vec<Detection> = recs
        .into_iter()
        .map(|r| {
            let [x0, y0, x1, y1] = r.bbox;
            Detection {
                image_id: r.image_id,
                aabb: Aabb { x_min: x0, y_min: y0, x_max: x1, y_max: y1 },
                confidence: r.score,
                class_id: r.class_id,
            }
        })
        .collect();
    for (i, d) in dets.iter().enumerate() {
        if d.aabb.x_min >= d.aabb.x_max || d.aabb.y_min >= d.aabb.y_max {
            return Err(EvalError::InvalidDetection {
                index: i,
                reason: "bbox must be [x_min, y_min, x_max, y_max] with min < max".into(),
            });
        }
        d.check(i)?;
    }
    Ok(dets)
}

pub fn detections_to_json(dets: &[Detection]) -> Vec<u8> {
    let recs: Vec<DetectionRecord> = dets
        .iter()
        .map(|d| DetectionRecord {
            image_id: d.image_id.clone(),
            bbox: d.aabb.to_array(),
            score: d.confidence,
            class_id: d.class_id,
        })
        .collect();
    serde_json::to_vec_pretty(&recs).expect("detections serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub image_id: String,
    pub aabb: Aabb,
}

/// Axis-aligned ground truth of every annotation in `manifest`.
pub fn ground_truth(manifest: &DatasetManifest) -> Vec<GroundTruth> {
    manifest
        .images
        .iter()
        .flat_map(|img| {
            img.annotations.iter().map(move |a| GroundTruth {
                image_id: img.id.clone(),
                aabb: a.aabb,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchLabel {
    /// Index of the claimed ground truth in the input list.
    TruePositive(usize),
    FalsePositive,
}

/// Detection indices by descending confidence, ties by image id then index.
fn ranking(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .confidence
            .total_cmp(&dets[a].confidence)
            .then_with(|| dets[a].image_id.cmp(&dets[b].image_id))
            .then(a.cmp(&b))
    });
    order
}

/// Greedy matching per image: in ranking order, each detection claims the
/// unmatched ground truth of its image with the highest IoU at or above the
/// threshold, ties to the lower index. Labels follow the input order.
pub fn match_detections(dets: &[Detection], gts: &[GroundTruth], iou_threshold: f64) -> Vec<MatchLabel> {
    let mut by_image: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, g) in gts.iter().enumerate() {
        by_image.entry(g.image_id.as_str()).or_default().push(i);
    }
    let mut taken = vec![false; gts.len()];
    let mut labels = vec![MatchLabel::FalsePositive; dets.len()];
    for d in ranking(dets) {
        let Some(cands) = by_image.get(dets[d].image_id.as_str()) else {
            continue;
        };
        let mut best: Option<(f64, usize)> = None;
        for &g in cands {
            if taken[g] {
                continue;
            }
            let iou = iou_aabb(&dets[d].aabb, &gts[g].aabb);
            if iou >= iou_threshold && best.is_none_or(|(b, _)| iou > b) {
                best = Some((iou, g));
            }
        }
        if let Some((_, g)) = best {
            taken[g] = true;
            labels[d] = MatchLabel::TruePositive(g);
        }
    }
    labels
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub confidence: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct APResult {
    pub ap: f64,
    pub iou_threshold: f64,
    pub confidence_floor: f64,
    pub ground_truths: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// One point per ranked detection above the floor.
    pub curve: Vec<CurvePoint>,
}

impl APResult {
    pub fn to_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("result serializes");
        v.push(b'\n');
        v
    }
}

/// 101-point interpolated AP over detections at or above `confidence_floor`.
pub fn average_precision(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_threshold: f64,
    confidence_floor: f64,
) -> Result<APResult, EvalError> {
    if gts.is_empty() {
        return Err(EvalError::UndefinedAp);
    }
    for (i, d) in dets.iter().enumerate() {
        d.check(i)?;
    }
    let kept: Vec<Detection> = dets.iter().filter(|d| d.confidence >= confidence_floor).cloned().collect();
    let labels = match_detections(&kept, gts, iou_threshold);
    let n_gt = gts.len();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut curve = Vec::with_capacity(kept.len());
    // (tp, precision) after each ranked detection
    let mut prefix = Vec::with_capacity(kept.len());
    for d in ranking(&kept) {
        match labels[d] {
            MatchLabel::TruePositive(_) => tp += 1,
            MatchLabel::FalsePositive => fp += 1,
        }
        let precision = tp as f64 / (tp + fp) as f64;
        prefix.push((tp, precision));
        curve.push(CurvePoint {
            confidence: kept[d].confidence,
            recall: tp as f64 / n_gt as f64,
            precision,
        });
    }
    // running max of precision from the back: interpolated precision at
    // every prefix is the best precision at equal or higher recall
    let mut interp = vec![0.0; prefix.len()];
    let mut best: f64 = 0.0;
    for i in (0..prefix.len()).rev() {
        best = best.max(prefix[i].1);
        interp[i] = best;
    }
    let mut sum = 0.0;
    let mut j = 0;
    for k in 0..RECALL_POINTS {
        // first prefix whose recall tp/n_gt reaches k/100
        while j < prefix.len() && (100 * prefix[j].0 as u64) < k * n_gt as u64 {
            j += 1;
        }
        if j == prefix.len() {
            break;
        }
        sum += interp[j];
    }
    Ok(APResult {
        ap: (sum / RECALL_POINTS as f64).clamp(0.0, 1.0),
        iou_threshold,
        confidence_floor,
        ground_truths: n_gt,
        tp,
        fp,
        fn_: n_gt - tp,
        curve,
    })
}
