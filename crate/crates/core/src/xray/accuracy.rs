use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::corpus::Suspect;
use crate::error::{Error, Result};
use crate::metrics::csv_err;

/// Whether a hit on the second suspect also counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMode {
    #[default]
    Either,
    FirstOnly,
}

/// One triaged record as seen by the scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoredEstimate {
    pub label: Option<Suspect>,
    /// The record carries a label outside the four suspects.
    pub unrecognized_label: bool,
    /// `None` when the record could not be explained.
    pub estimate: Option<(Suspect, Suspect)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub mode: AccuracyMode,
    pub accuracy: f64,
    pub correct: usize,
    pub evaluated_count: usize,
    /// Records labeled with one of the four suspects.
    pub labeled_count: usize,
    /// Records whose label is not one of the four suspects; never scored.
    pub unevaluated: usize,
    /// Labeled records that could not be explained.
    pub unexplained: usize,
    /// label -> first suspect -> count
    pub confusion: BTreeMap<Suspect, BTreeMap<Suspect, usize>>,
}

pub fn is_correct(label: Suspect, estimate: (Suspect, Suspect), mode: AccuracyMode) -> bool {
    match mode {
        AccuracyMode::Either => label == estimate.0 || label == estimate.1,
        AccuracyMode::FirstOnly => label == estimate.0,
    }
}

pub fn evaluate_accuracy(items: &[ScoredEstimate], mode: AccuracyMode) -> Result<AccuracyReport> {
    let labeled: Vec<_> = items.iter().filter(|i| i.label.is_some()).collect();
    if labeled.is_empty() {
        return Err(Error::Argument(
            "accuracy needs at least one labeled record".into(),
        ));
    }
    let mut confusion: BTreeMap<Suspect, BTreeMap<Suspect, usize>> = Suspect::ALL
        .iter()
        .map(|&l| (l, Suspect::ALL.iter().map(|&p| (p, 0)).collect()))
        .collect();
    let mut correct = 0;
    let mut evaluated = 0;
    for item in &labeled {
        let label = item.label.expect("filtered");
        let Some(est) = item.estimate else { continue };
        evaluated += 1;
        if is_correct(label, est, mode) {
            correct += 1;
        }
        *confusion
            .get_mut(&label)
            .and_then(|row| row.get_mut(&est.0))
            .expect("all suspects present") += 1;
    }
    let accuracy = if evaluated == 0 {
        0.0
    } else {
        correct as f64 / evaluated as f64
    };
    Ok(AccuracyReport {
        mode,
        accuracy,
        correct,
        evaluated_count: evaluated,
        labeled_count: labeled.len(),
        unevaluated: items.iter().filter(|i| i.label.is_none() && i.unrecognized_label).count(),
        unexplained: labeled.len() - evaluated,
        confusion,
    })
}

impl AccuracyReport {
    /// Confusion table: one row per label, one column per predicted first suspect.
    pub fn write_confusion_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["label".to_owned()];
        header.extend(Suspect::ALL.iter().map(|s| format!("predicted_{s}")));
        w.write_record(&header).map_err(csv_err)?;
        for (label, row) in &self.confusion {
            let mut rec = vec![label.to_string()];
            rec.extend(row.values().map(|c| c.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("writing CSV", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Suspect::*;

    fn item(label: Option<Suspect>, est: Option<(Suspect, Suspect)>) -> ScoredEstimate {
        ScoredEstimate {
            label,
            unrecognized_label: false,
            estimate: est,
        }
    }

    #[test]
    fn either_and_strict() {
        assert!(is_correct(Caption, (Caption, Other), AccuracyMode::Either));
        assert!(!is_correct(ResNext, (Style, Caption), AccuracyMode::Either));
        assert!(is_correct(Caption, (Style, Caption), AccuracyMode::Either));
        assert!(!is_correct(Caption, (Style, Caption), AccuracyMode::FirstOnly));
    }

    #[test]
    fn counts() {
        let items = [
            item(Some(Caption), Some((Caption, Other))),
            item(Some(ResNext), Some((Style, Caption))),
            item(Some(Style), None),
            item(None, Some((Style, Other))),
            ScoredEstimate {
                unrecognized_label: true,
                ..item(None, Some((Caption, Other)))
            },
        ];
        let r = evaluate_accuracy(&items, AccuracyMode::Either).unwrap();
        assert_eq!(
            (r.correct, r.evaluated_count, r.labeled_count, r.unevaluated, r.unexplained),
            (1, 2, 3, 1, 1)
        );
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.confusion[&ResNext][&Style], 1);
        let mut buf = Vec::new();
        r.write_confusion_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("label,predicted_Style,predicted_Caption,predicted_ResNext,predicted_Other\n"));
        assert!(text.contains("ResNext,1,0,0,0"));
    }

    #[test]
    fn no_labels_is_an_error() {
        assert!(evaluate_accuracy(&[item(None, None)], AccuracyMode::Either).is_err());
    }
}
