//! Stratified splits, confusion matrices and accuracy.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mlp::{GestureClassifier, MlpError};
use crate::model::Gesture;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("split fraction must lie in (0, 1), got {0}")]
    Fraction(f64),
    #[error("class {gesture} has {count} sample(s); both splits need at least one")]
    TooFewSamples { gesture: Gesture, count: usize },
    #[error("true label {0} is not one of the classifier's classes")]
    UnknownLabel(Gesture),
    #[error(transparent)]
    Classifier(#[from] MlpError),
}

/// Split per class so both parts keep every class. Each class contributes
/// `round(fraction * n)` samples to the first part, clamped so neither part
/// is empty. Within a part, samples keep their original relative order.
pub fn split<T: Clone>(dataset: &[(T, Gesture)], fraction: f64, seed: u64) -> Result<(Vec<(T, Gesture)>, Vec<(T, Gesture)>), EvalError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(EvalError::Fraction(fraction));
    }
    let mut classes: Vec<Gesture> = dataset.iter().map(|(_, g)| *g).collect();
    classes.sort();
    classes.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_first = vec![false; dataset.len()];
    for gesture in classes {
        let mut idx: Vec<usize> = (0..dataset.len()).filter(|&i| dataset[i].1 == gesture).collect();
        if idx.len() < 2 {
            return Err(EvalError::TooFewSamples { gesture, count: idx.len() });
        }
        idx.shuffle(&mut rng);
        let take = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        for &i in &idx[..take] {
            in_first[i] = true;
        }
    }
    let (first, second): (Vec<_>, Vec<_>) = dataset
        .iter()
        .zip(&in_first)
        .partition(|(_, &first)| first);
    Ok((
        first.into_iter().map(|(s, _)| s.clone()).collect(),
        second.into_iter().map(|(s, _)| s.clone()).collect(),
    ))
}

/// Rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<Gesture>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<Gesture>) -> Self {
        let n = classes.len();
        Self {
            classes,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn classes(&self) -> &[Gesture] {
        &self.classes
    }

    fn index(&self, g: Gesture) -> Option<usize> {
        self.classes.iter().position(|&c| c == g)
    }

    pub fn record(&mut self, truth: Gesture, predicted: Gesture) -> Result<(), EvalError> {
        let t = self.index(truth).ok_or(EvalError::UnknownLabel(truth))?;
        let p = self.index(predicted).ok_or(EvalError::UnknownLabel(predicted))?;
        self.counts[t][p] += 1;
        Ok(())
    }

    pub fn count(&self, truth: Gesture, predicted: Gesture) -> u64 {
        match (self.index(truth), self.index(predicted)) {
            (Some(t), Some(p)) => self.counts[t][p],
            _ => 0,
        }
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Fraction on the diagonal; zero for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            total => self.trace() as f64 / total as f64,
        }
    }

    /// One `true,predicted,count` line per non-zero cell.
    pub fn to_cells(&self) -> String {
        let mut out = String::new();
        for (t, row) in self.counts.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                if n > 0 {
                    out.push_str(&format!("{},{},{n}\n", self.classes[t], self.classes[p]));
                }
            }
        }
        out
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label_w = self.classes.iter().map(|g| g.name().len()).max().unwrap_or(0).max("true\\pred".len());
        let col_w = self
            .classes
            .iter()
            .map(|g| g.name().len())
            .chain(self.counts.iter().flatten().map(|n| n.to_string().len()))
            .max()
            .unwrap_or(1);
        write!(f, "{:<label_w$}", "true\\pred")?;
        for g in &self.classes {
            write!(f, " {:>col_w$}", g.name())?;
        }
        writeln!(f)?;
        for (g, row) in self.classes.iter().zip(&self.counts) {
            write!(f, "{:<label_w$}", g.name())?;
            for n in row {
                write!(f, " {n:>col_w$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Classify every test vector and tally the results.
pub fn evaluate<C, V>(model: &C, test: &[(V, Gesture)]) -> Result<(ConfusionMatrix, f64), EvalError>
where
    C: GestureClassifier + ?Sized,
    V: AsRef<[f64]>,
{
    let mut cm = ConfusionMatrix::new(model.classes().to_vec());
    for (x, truth) in test {
        let predicted = model.classify(x.as_ref())?.gesture;
        cm.record(*truth, predicted)?;
    }
    let acc = cm.accuracy();
    Ok((cm, acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::Classification;

    const FIVE: [Gesture; 5] = Gesture::ACTIVE;

    /// Reads the class index back out of the first feature.
    struct Oracle;

    impl GestureClassifier for Oracle {
        fn classes(&self) -> &[Gesture] {
            &FIVE
        }
        fn classify(&self, x: &[f64]) -> Result<Classification, MlpError> {
            Ok(Classification { gesture: FIVE[x[0] as usize], confidence: 1.0 })
        }
    }

    struct Constant;

    impl GestureClassifier for Constant {
        fn classes(&self) -> &[Gesture] {
            &FIVE
        }
        fn classify(&self, _: &[f64]) -> Result<Classification, MlpError> {
            Ok(Classification { gesture: Gesture::WaveIn, confidence: 0.7 })
        }
    }

    fn balanced(per_class: usize) -> Vec<(Vec<f64>, Gesture)> {
        (0..per_class * 5).map(|i| (vec![(i % 5) as f64, i as f64], FIVE[i % 5])).collect()
    }

    #[test]
    fn stratified_counts() {
        let data = balanced(100);
        let (train, test) = split(&data, 0.8, 3).unwrap();
        for g in FIVE {
            assert_eq!(train.iter().filter(|s| s.1 == g).count(), 80);
            assert_eq!(test.iter().filter(|s| s.1 == g).count(), 20);
        }
    }

    #[test]
    fn split_is_seeded_partition() {
        let data = balanced(13);
        let a = split(&data, 0.7, 9).unwrap();
        assert_eq!(a, split(&data, 0.7, 9).unwrap());
        assert_ne!(a, split(&data, 0.7, 10).unwrap());
        let mut ids: Vec<i64> = a.0.iter().chain(&a.1).map(|(v, _)| v[1] as i64).collect();
        ids.sort();
        assert_eq!(ids, (0..65).collect::<Vec<_>>());
    }

    #[test]
    fn split_errors() {
        let data = balanced(3);
        assert_eq!(split(&data, 0.0, 1).unwrap_err(), EvalError::Fraction(0.0));
        assert_eq!(split(&data, 1.0, 1).unwrap_err(), EvalError::Fraction(1.0));
        let mut lonely = balanced(3);
        lonely.push((vec![0.0, 99.0], Gesture::Rest));
        assert_eq!(
            split(&lonely, 0.5, 1).unwrap_err(),
            EvalError::TooFewSamples { gesture: Gesture::Rest, count: 1 }
        );
    }

    #[test]
    fn oracle_is_diagonal() {
        let (cm, acc) = evaluate(&Oracle, &balanced(4)).unwrap();
        assert_eq!(acc, 1.0);
        for (i, row) in cm.counts().iter().enumerate() {
            for (j, &n) in row.iter().enumerate() {
                assert_eq!(n, if i == j { 4 } else { 0 });
            }
        }
    }

    #[test]
    fn constant_prediction_scores_one_fifth() {
        let (cm, acc) = evaluate(&Constant, &balanced(10)).unwrap();
        assert!((acc - 0.2).abs() < 1e-15);
        assert_eq!(cm.total(), 50);
        assert_eq!(cm.count(Gesture::Fist, Gesture::WaveIn), 10);
    }

    #[test]
    fn unknown_truth_label() {
        let data = vec![(vec![0.0], Gesture::Rest)];
        assert_eq!(evaluate(&Oracle, &data).unwrap_err(), EvalError::UnknownLabel(Gesture::Rest));
    }

    #[test]
    fn renders_table_and_cells() {
        let mut cm = ConfusionMatrix::new(vec![Gesture::Fist, Gesture::WaveOut]);
        cm.record(Gesture::Fist, Gesture::Fist).unwrap();
        cm.record(Gesture::Fist, Gesture::WaveOut).unwrap();
        cm.record(Gesture::WaveOut, Gesture::WaveOut).unwrap();
        assert_eq!(cm.to_cells(), "Fist,Fist,1\nFist,WaveOut,1\nWaveOut,WaveOut,1\n");
        let table = cm.to_string();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("true\\pred"));
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
        assert_eq!(ConfusionMatrix::new(vec![Gesture::Fist]).accuracy(), 0.0);
    }
}
