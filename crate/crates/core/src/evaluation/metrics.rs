use super::matching::Matching;

/// Precision, recall and F-measure of one extraction run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub matching: Matching,
    pub num_predicted: usize,
    pub num_gold: usize,
    pub seconds: Option<f64>,
}

/// Harmonic mean; zero when both inputs are zero.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// `P = correct / predicted`, `R = correctly matched gold / gold`.
pub fn precision_recall_f(matching: &Matching, num_predicted: usize, num_gold: usize) -> EvalReport {
    let correct = matching.correct_count();
    let precision = if num_predicted == 0 { 0.0 } else { correct as f64 / num_predicted as f64 };
    let recall = if num_gold == 0 { 0.0 } else { correct as f64 / num_gold as f64 };
    EvalReport {
        precision,
        recall,
        f_measure: f_measure(precision, recall),
        matching: matching.clone(),
        num_predicted,
        num_gold,
        seconds: None,
    }
}

/// Rounds to `decimals` places, halves away from zero.
pub fn round_half_away(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}
