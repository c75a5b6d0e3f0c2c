//! Detector evaluation against hand-labeled ground truth: confusion counts,
//! precision/recall/F1 per detector, plus micro and macro aggregates.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::detect::SmellId;
use crate::report::AnalysisReport;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("malformed labels file `{path}`: {message}")]
    MalformedLabels { path: String, message: String },
    #[error("labels reference `{repo_id}` but no analysis of it exists")]
    MissingPrediction { repo_id: String },
}

/// Ground truth: `(repo, smell) -> labeled smelly?`
pub type Labels = BTreeMap<(String, SmellId), bool>;

/// Parses a labels CSV with header `repo_id,smell_id,label` and 0/1 labels.
pub fn parse_labels_csv(path: &Path) -> Result<Labels, EvalError> {
    let malformed = |message: String| EvalError::MalformedLabels {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|err| malformed(err.to_string()))?;
    let headers = reader.headers().map_err(|err| malformed(err.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["repo_id", "smell_id", "label"] {
        return Err(malformed(format!(
            "expected header `repo_id,smell_id,label`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(","),
        )));
    }
    let mut labels = Labels::new();
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|err| malformed(err.to_string()))?;
        let row = index + 2; // header is line 1
        let repo = record
            .get(0)
            .ok_or_else(|| malformed(format!("row {row}: missing repo_id")))?;
        let smell = record
            .get(1)
            .and_then(SmellId::parse)
            .ok_or_else(|| malformed(format!("row {row}: unknown smell_id")))?;
        let label = match record.get(2) {
            Some("0") => false,
            Some("1") => true,
            other => {
                return Err(malformed(format!(
                    "row {row}: label must be 0 or 1, found `{}`",
                    other.unwrap_or(""),
                )))
            }
        };
        labels.insert((repo.to_string(), smell), label);
    }
    Ok(labels)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub true_negatives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl ConfusionCounts {
    pub fn record(&mut self, labeled: bool, predicted: bool) {
        match (labeled, predicted) {
            (true, true) => self.true_positives += 1,
            (false, false) => self.true_negatives += 1,
            (false, true) => self.false_positives += 1,
            (true, false) => self.false_negatives += 1,
        }
    }

    fn add(&mut self, other: ConfusionCounts) {
        self.true_positives += other.true_positives;
        self.true_negatives += other.true_negatives;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
    }

    /// `None` when the metric's denominator is zero; an undefined metric is
    /// reported as missing, never as 0.
    pub fn precision(&self) -> Option<f64> {
        ratio(
            self.true_positives,
            self.true_positives + self.false_positives,
        )
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(
            self.true_positives,
            self.true_positives + self.false_negatives,
        )
    }

    pub fn f1(&self) -> Option<f64> {
        ratio(
            2 * self.true_positives,
            2 * self.true_positives + self.false_positives + self.false_negatives,
        )
    }
}

fn ratio(numerator: usize, denominator: usize) -> Option<f64> {
    (denominator > 0).then(|| numerator as f64 / denominator as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectorEval {
    pub counts: ConfusionCounts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl From<ConfusionCounts> for DetectorEval {
    fn from(counts: ConfusionCounts) -> Self {
        DetectorEval {
            counts,
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalResult {
    pub per_detector: BTreeMap<SmellId, DetectorEval>,
    /// Micro aggregate: counts summed over all detectors, then scored.
    pub aggregate: DetectorEval,
    /// Macro aggregate: mean of the defined per-detector F1 scores.
    pub macro_f1: Option<f64>,
}

/// Scores predictions (a repo is predicted smelly for a smell when its
/// report carries at least one finding of it) against the labels.
pub fn evaluate(labels: &Labels, reports: &[AnalysisReport]) -> Result<EvalResult, EvalError> {
    let by_repo: BTreeMap<&str, &AnalysisReport> = reports
        .iter()
        .map(|report| (report.repo_id.as_str(), report))
        .collect();

    let mut counts: BTreeMap<SmellId, ConfusionCounts> = BTreeMap::new();
    for ((repo, smell), labeled) in labels {
        let report = by_repo
            .get(repo.as_str())
            .ok_or_else(|| EvalError::MissingPrediction {
                repo_id: repo.clone(),
            })?;
        let predicted = report.findings.iter().any(|f| f.smell == *smell);
        counts
            .entry(*smell)
            .or_default()
            .record(*labeled, predicted);
    }

    Ok(score(&counts))
}

/// Computes all metrics from per-detector confusion counts.
pub fn score(counts: &BTreeMap<SmellId, ConfusionCounts>) -> EvalResult {
    let per_detector: BTreeMap<SmellId, DetectorEval> = counts
        .iter()
        .map(|(smell, c)| (*smell, DetectorEval::from(*c)))
        .collect();

    let mut total = ConfusionCounts::default();
    for c in counts.values() {
        total.add(*c);
    }

    let f1s: Vec<f64> = per_detector.values().filter_map(|d| d.f1).collect();
    let macro_f1 = (!f1s.is_empty()).then(|| f1s.iter().sum::<f64>() / f1s.len() as f64);

    EvalResult {
        per_detector,
        aggregate: DetectorEval::from(total),
        macro_f1,
    }
}

/// Renders the evaluation as an aligned text table.
pub fn render_table(result: &EvalResult) -> String {
    fn metric(value: Option<f64>) -> String {
        value.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
    }
    let mut out =
        String::from("detector     TP     TN     FP     FN   precision   recall     F1\n");
    let mut row = |name: &str, eval: &DetectorEval| {
        out.push_str(&format!(
            "{:<8} {:>6} {:>6} {:>6} {:>6}   {:>9} {:>8} {:>6}\n",
            name,
            eval.counts.true_positives,
            eval.counts.true_negatives,
            eval.counts.false_positives,
            eval.counts.false_negatives,
            metric(eval.precision),
            metric(eval.recall),
            metric(eval.f1),
        ));
    };
    for (smell, eval) in &result.per_detector {
        row(smell.as_str(), eval);
    }
    row("micro", &result.aggregate);
    out.push_str(&format!("macro F1: {}\n", metric(result.macro_f1)));
    out
}
