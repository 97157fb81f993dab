use serde::Serialize;

use super::run::LearningCurve;
use super::SimulationError;

/// Mean and population standard deviation of mean Dice across seeds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateCurve {
    pub iterations: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Only one seed contributed; `std` is all zeros.
    pub single_seed: bool,
}

pub fn aggregate_runs(curves: &[LearningCurve]) -> Result<AggregateCurve, SimulationError> {
    let Some(first) = curves.first() else {
        return Err(SimulationError::Argument("no runs to aggregate".into()));
    };
    let iterations: Vec<usize> = first.records.iter().map(|r| r.iteration).collect();
    for c in curves {
        let its: Vec<usize> = c.records.iter().map(|r| r.iteration).collect();
        if its != iterations {
            return Err(SimulationError::Argument(format!(
                "seed {} has {} iterations, seed {} has {}",
                c.seed,
                its.len(),
                first.seed,
                iterations.len()
            )));
        }
    }
    let n = curves.len() as f64;
    let mut mean = Vec::with_capacity(iterations.len());
    let mut std = Vec::with_capacity(iterations.len());
    for i in 0..iterations.len() {
        let m = curves.iter().map(|c| c.records[i].mean_dice).sum::<f64>() / n;
        let var = curves
            .iter()
            .map(|c| (c.records[i].mean_dice - m).powi(2))
            .sum::<f64>()
            / n;
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(AggregateCurve {
        iterations,
        mean,
        std,
        single_seed: curves.len() == 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::IterationRecord;

    fn curve(seed: u64, dice: &[f64]) -> LearningCurve {
        LearningCurve {
            seed,
            records: dice
                .iter()
                .enumerate()
                .map(|(i, &d)| IterationRecord {
                    iteration: i,
                    labeled_count: 0,
                    pseudo_count: 0,
                    per_class_dice: vec![d],
                    mean_dice: d,
                    hausdorff: 0.0,
                    sensitivity: 0.0,
                    specificity: 0.0,
                    train_loss: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn population_std() {
        let agg = aggregate_runs(&[
            curve(1, &[0.5, 0.6]),
            curve(2, &[0.7, 0.6]),
            curve(3, &[0.6, 0.6]),
        ])
        .unwrap();
        assert!((agg.mean[0] - 0.6).abs() < 1e-12);
        // sqrt(((0.1)^2 + (0.1)^2 + 0) / 3)
        assert!((agg.std[0] - (0.02f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(agg.std[1], 0.0);
        assert!(!agg.single_seed);
    }

    #[test]
    fn single_seed_and_mismatch() {
        let agg = aggregate_runs(&[curve(1, &[0.4])]).unwrap();
        assert!(agg.single_seed);
        assert_eq!(agg.std, vec![0.0]);
        assert!(aggregate_runs(&[curve(1, &[0.4]), curve(2, &[0.4, 0.5])]).is_err());
        assert!(aggregate_runs(&[]).is_err());
    }
}
