use rayon::prelude::*;

use super::{EvalError, ScoredRow};
use crate::cohort::FeatureView;
use crate::rng::derive_seed;
use crate::Error;

/// A trained model that scores rows in its training view's feature space.
pub trait Scorer: Send + Sync {
    /// Probability-like score; larger means more likely to fall.
    fn score(&self, row: &[f64]) -> Result<f64, Error>;
}

/// A training procedure, including any variable selection it performs.
pub trait Fitter: Sync {
    fn fit(&self, train: &FeatureView, seed: u64) -> Result<Box<dyn Scorer>, Error>;
}

/// Held-out score for every row. Fold `i` trains on all rows but `i` with seed
/// `derive_seed(seed, i)`; folds run in parallel and results keep row order.
pub fn loocv_scores(view: &FeatureView, fitter: &dyn Fitter, seed: u64) -> Result<Vec<ScoredRow>, Error> {
    let n = view.n_rows();
    if n < 2 {
        return Err(EvalError::TooFewRows(n).into());
    }
    let results: Vec<Result<ScoredRow, Error>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let id = &view.ids()[i];
            let annotate = |e: Error| Error::Fold { fold: i, id: id.clone(), source: Box::new(e) };
            let train = view.without_row(i);
            let scorer = fitter.fit(&train, derive_seed(seed, i as u64)).map_err(annotate)?;
            let score = scorer.score(view.row(i)).map_err(annotate)?;
            Ok(ScoredRow::new(id.clone(), view.labels()[i], score))
        })
        .collect();
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Constant(f64);
    impl Scorer for Constant {
        fn score(&self, _: &[f64]) -> Result<f64, Error> {
            Ok(self.0)
        }
    }

    struct Counting(AtomicUsize);
    impl Fitter for Counting {
        fn fit(&self, _: &FeatureView, _: u64) -> Result<Box<dyn Scorer>, Error> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(Box::new(Constant(0.5)))
        }
    }

    /// Scores each row by the training-set mean of feature 0, so folds differ.
    struct MeanFitter;
    impl Fitter for MeanFitter {
        fn fit(&self, train: &FeatureView, _: u64) -> Result<Box<dyn Scorer>, Error> {
            let m = train.rows().iter().map(|r| r[0]).sum::<f64>() / train.n_rows() as f64;
            Ok(Box::new(Constant(m)))
        }
    }

    struct Failing;
    impl Fitter for Failing {
        fn fit(&self, train: &FeatureView, _: u64) -> Result<Box<dyn Scorer>, Error> {
            if train.ids().iter().any(|id| id == "r3") {
                Ok(Box::new(Constant(0.1)))
            } else {
                Err(EvalError::SingleClass.into())
            }
        }
    }

    fn view(n: usize) -> FeatureView {
        let rows = (0..n).map(|i| vec![i as f64]).collect();
        let labels = (0..n).map(|i| i % 2 == 0).collect();
        FeatureView::new(vec!["x".into()], rows, labels).unwrap()
    }

    #[test]
    fn one_fit_per_row_and_constant_scores() {
        let fitter = Counting(AtomicUsize::new(0));
        let scores = loocv_scores(&view(5), &fitter, 1).unwrap();
        assert_eq!(fitter.0.load(Ordering::SeqCst), 5);
        assert!(scores.iter().all(|s| s.score == 0.5));
        assert_eq!(scores.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["r1", "r2", "r3", "r4", "r5"]);
    }

    #[test]
    fn held_out_row_excluded() {
        let scores = loocv_scores(&view(4), &MeanFitter, 0).unwrap();
        // Row i is excluded from the mean of 0..4.
        for (i, s) in scores.iter().enumerate() {
            assert_eq!(s.score, (6.0 - i as f64) / 3.0);
        }
    }

    #[test]
    fn fold_errors_are_annotated() {
        let err = loocv_scores(&view(4), &Failing, 0).unwrap_err();
        assert_eq!(err, Error::Fold { fold: 2, id: "r3".into(), source: Box::new(EvalError::SingleClass.into()) });
        assert_eq!(loocv_scores(&view(1), &MeanFitter, 0).unwrap_err(), EvalError::TooFewRows(1).into());
    }
}
