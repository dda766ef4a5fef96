use serde::{Deserialize, Serialize};

/// Confusion counts with the positive class being Trojan or Piracy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    /// Set when any ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

fn ratio(num: f64, den: f64, degenerate: &mut bool) -> f64 {
    if den == 0.0 {
        *degenerate = true;
        0.0
    } else {
        num / den
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    let s = precision + recall;
    if s == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / s
    }
}

pub fn compute_metrics(c: &Counts) -> Metrics {
    let mut degenerate = false;
    let (tp, fp, fn_, tn) = (c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64);
    let precision = ratio(tp, tp + fp, &mut degenerate);
    let recall = ratio(tp, tp + fn_, &mut degenerate);
    let f1 = ratio(2.0 * precision * recall, precision + recall, &mut degenerate);
    let accuracy = ratio(tp + tn, tp + fp + fn_ + tn, &mut degenerate);
    Metrics {
        precision,
        recall,
        f1,
        accuracy,
        degenerate,
    }
}

impl Metrics {
    /// Metrics known only through precision and recall; accuracy is
    /// undefined and reported as 0 with the degenerate flag.
    pub fn from_precision_recall(precision: f64, recall: f64) -> Self {
        Metrics {
            precision,
            recall,
            f1: f1_score(precision, recall),
            accuracy: 0.0,
            degenerate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemPrediction {
    pub id: String,
    pub truth: bool,
    pub predicted: bool,
    /// `ŷ[0]` for graphs, cosine similarity for pairs.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub counts: Counts,
    pub metrics: Metrics,
    pub per_item: Vec<ItemPrediction>,
}

impl EvalReport {
    pub fn from_items(per_item: Vec<ItemPrediction>) -> Self {
        let mut counts = Counts::default();
        for p in &per_item {
            counts.record(p.truth, p.predicted);
        }
        Self {
            counts,
            metrics: compute_metrics(&counts),
            per_item,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_zero_counts_are_degenerate() {
        let m = compute_metrics(&Counts::default());
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (0.0, 0.0, 0.0, 0.0));
        assert!(m.degenerate);
    }

    #[test]
    fn perfect_predictions() {
        let m = compute_metrics(&Counts { tp: 5, fp: 0, fn_: 0, tn: 7 });
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (1.0, 1.0, 1.0, 1.0));
        assert!(!m.degenerate);
    }

    #[test]
    fn hand_computed_counts() {
        let m = compute_metrics(&Counts { tp: 3, fp: 1, fn_: 2, tn: 4 });
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.recall, 0.6);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.accuracy, 0.7);
    }

    #[test]
    fn report_json_shape() {
        let r = EvalReport::from_items(vec![
            ItemPrediction { id: "a".into(), truth: true, predicted: true, score: 0.9 },
            ItemPrediction { id: "b".into(), truth: false, predicted: true, score: 0.6 },
        ]);
        assert_eq!(r.counts, Counts { tp: 1, fp: 1, fn_: 0, tn: 0 });
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["counts"]["fn"], 0);
        assert_eq!(v["metrics"]["precision"], 0.5);
        assert_eq!(v["per_item"].as_array().unwrap().len(), 2);
        assert_eq!(serde_json::from_str::<EvalReport>(&r.to_json()).unwrap(), r);
    }

    proptest! {
        #[test]
        fn f1_is_bounded_by_its_inputs(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
            let f = f1_score(p, r);
            prop_assert!(f <= 2.0 * p.min(r) + 1e-15);
            prop_assert!(f <= p.max(r) + 1e-15);
            prop_assert!(f >= p.min(r) - 1e-15);
        }

        #[test]
        fn metrics_recompute_from_counts(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50, tn in 0u64..50) {
            let c = Counts { tp, fp, fn_, tn };
            let m = compute_metrics(&c);
            prop_assert_eq!(c.total(), tp + fp + fn_ + tn);
            if tp + fp > 0 {
                prop_assert_eq!(m.precision, tp as f64 / (tp + fp) as f64);
            }
            if c.total() > 0 {
                prop_assert_eq!(m.accuracy, (tp + tn) as f64 / c.total() as f64);
            }
            prop_assert!((0.0..=1.0).contains(&m.f1));
        }
    }
}
