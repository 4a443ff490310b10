use crate::dataset::Label;
use crate::error::{check_len, Error, Result};
use crate::num::Fraction;

/// Counts of a binary confusion matrix, positive class first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn new(predictions: &[Label], labels: &[Label]) -> Result<Confusion> {
        check_len(labels.len(), predictions.len())?;
        if labels.is_empty() {
            return Err(Error::Empty("predictions"));
        }
        let mut c = Confusion::default();
        for (&p, &y) in predictions.iter().zip(labels) {
            match (p.is_positive(), y.is_positive()) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy<F: Fraction>(&self) -> F {
        F::from_ratio(self.tp + self.tn, self.total())
    }

    /// `2TP / (2TP + FP + FN)`. With neither predicted nor actual positives
    /// the score is 1; any other zero denominator gives 0.
    pub fn f1<F: Fraction>(&self) -> F {
        let den = 2 * self.tp + self.fp + self.fn_;
        if den == 0 {
            F::from_ratio(1, 1)
        } else {
            F::from_ratio(2 * self.tp, den)
        }
    }
}

pub fn accuracy<F: Fraction>(predictions: &[Label], labels: &[Label]) -> Result<F> {
    Ok(Confusion::new(predictions, labels)?.accuracy())
}

pub fn f1<F: Fraction>(predictions: &[Label], labels: &[Label]) -> Result<F> {
    Ok(Confusion::new(predictions, labels)?.f1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;
    use Label::{Negative as N, Positive as P};

    #[test]
    fn simple_cases() {
        assert_eq!(accuracy::<f64>(&[P, N], &[P, N]).unwrap(), 1.0);
        assert_eq!(accuracy::<f64>(&[P, P, N, N], &[P, N, P, N]).unwrap(), 0.5);
        assert_eq!(f1::<f64>(&[P, N], &[P, N]).unwrap(), 1.0);
        assert_eq!(f1::<f64>(&[N, N], &[P, N]).unwrap(), 0.0);
        assert_eq!(f1::<f64>(&[N, N], &[N, N]).unwrap(), 1.0);
        assert_eq!(f1::<f64>(&[P, P], &[N, N]).unwrap(), 0.0);
        assert_eq!(f1::<Ratio<u64>>(&[P, P, N], &[P, N, P]).unwrap(), Ratio::new(1, 2));
        assert!(accuracy::<f64>(&[], &[]).is_err());
        assert!(f1::<f64>(&[P], &[P, N]).is_err());
    }

    fn labels() -> impl Strategy<Value = (Vec<Label>, Vec<Label>)> {
        prop::collection::vec((any::<bool>(), any::<bool>()), 1..60).prop_map(|v| {
            v.into_iter()
                .map(|(a, b)| (Label::from_bool(a), Label::from_bool(b)))
                .unzip()
        })
    }

    proptest! {
        #[test]
        fn f1_is_harmonic_mean((pred, y) in labels()) {
            let c = Confusion::new(&pred, &y).unwrap();
            let got: Ratio<u64> = c.f1();
            if c.tp > 0 {
                let p = Ratio::new(c.tp, c.tp + c.fp);
                let r = Ratio::new(c.tp, c.tp + c.fn_);
                prop_assert_eq!(got, Ratio::from_integer(2) * p * r / (p + r));
            } else if c.fp + c.fn_ > 0 {
                prop_assert_eq!(got, Ratio::from_integer(0));
            }
            let acc: f64 = accuracy(&pred, &y).unwrap();
            let direct = pred.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
            prop_assert!((acc - direct).abs() < 1e-15);
        }
    }
}
