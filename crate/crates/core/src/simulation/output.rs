use std::fmt::Write;

use super::aggregate::AggregateCurve;
use super::run::LearningCurve;

pub fn curve_header(classes: usize) -> String {
    let mut h = String::from("iteration,labeled,pseudo,mean_dice");
    for c in 1..=classes {
        write!(h, ",dice_class_{c}").unwrap();
    }
    h.push_str(",hausdorff,sensitivity,specificity,train_loss");
    h
}

/// One row per iteration, floats with six decimals.
pub fn curve_csv(curve: &LearningCurve, classes: usize) -> String {
    let mut out = curve_header(classes);
    out.push('\n');
    for r in &curve.records {
        write!(
            out,
            "{},{},{},{:.6}",
            r.iteration, r.labeled_count, r.pseudo_count, r.mean_dice
        )
        .unwrap();
        for d in &r.per_class_dice {
            write!(out, ",{d:.6}").unwrap();
        }
        writeln!(
            out,
            ",{:.6},{:.6},{:.6},{:.6}",
            r.hausdorff, r.sensitivity, r.specificity, r.train_loss
        )
        .unwrap();
    }
    out
}

pub fn summary_csv(agg: &AggregateCurve) -> String {
    let mut out = String::from("iteration,mean_dice_mean,mean_dice_std\n");
    for ((i, m), s) in agg.iterations.iter().zip(&agg.mean).zip(&agg.std) {
        writeln!(out, "{i},{m:.6},{s:.6}").unwrap();
    }
    out
}
