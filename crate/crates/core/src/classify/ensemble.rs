use super::{Decision, TextClassifier};
use crate::error::{Error, Result};

/// Unanimity vote: positive only if every member's decision is positive.
pub fn ensemble_consensus(decisions: &[Decision]) -> Result<bool> {
    if decisions.is_empty() {
        return Err(Error::config("consensus", "ensemble has no members"));
    }
    Ok(decisions.iter().all(Decision::is_positive))
}

/// A set of binary classifiers combined by [`ensemble_consensus`].
pub struct Ensemble {
    members: Vec<Box<dyn TextClassifier>>,
}

impl Ensemble {
    pub fn new(members: Vec<Box<dyn TextClassifier>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::config("consensus", "ensemble has no members"));
        }
        if let Some(m) = members.iter().find(|m| m.class_count() != 2) {
            return Err(Error::config(
                "consensus",
                format!("ensemble members must be binary, found {} classes", m.class_count()),
            ));
        }
        Ok(Ensemble { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Consensus label for each text, in input order.
    pub fn judge_batch(&self, texts: &[&str]) -> Result<Vec<bool>> {
        let votes: Vec<Vec<Decision>> = self
            .members
            .iter()
            .map(|m| m.classify_batch(texts))
            .collect::<Result<_>>()?;
        for v in &votes {
            if v.len() != texts.len() {
                return Err(Error::Protocol(format!(
                    "ensemble member returned {} decisions for {} texts",
                    v.len(),
                    texts.len()
                )));
            }
        }
        (0..texts.len())
            .map(|i| {
                let column: Vec<Decision> = votes.iter().map(|v| v[i].clone()).collect();
                ensemble_consensus(&column)
            })
            .collect()
    }

    pub fn judge(&self, text: &str) -> Result<bool> {
        Ok(self.judge_batch(&[text])?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ConstantClassifier;
    use proptest::prelude::*;

    fn vote(pos: bool) -> Decision {
        Decision::one_hot(usize::from(pos), 2)
    }

    #[test]
    fn unanimity_and_veto() {
        assert!(ensemble_consensus(&[vote(true), vote(true), vote(true)]).unwrap());
        assert!(!ensemble_consensus(&[vote(true), vote(true), vote(false)]).unwrap());
        assert!(ensemble_consensus(&[]).is_err());
    }

    #[test]
    fn ensemble_of_constants() {
        let yes = || Box::new(ConstantClassifier { label: 1, classes: 2 }) as Box<dyn TextClassifier>;
        let no = Box::new(ConstantClassifier { label: 0, classes: 2 });
        let e = Ensemble::new(vec![yes(), yes(), yes()]).unwrap();
        assert_eq!(e.judge_batch(&["a", "b"]).unwrap(), vec![true, true]);
        let e = Ensemble::new(vec![yes(), no, yes()]).unwrap();
        assert!(!e.judge("a").unwrap());
        assert!(Ensemble::new(vec![]).is_err());
        let three = Box::new(ConstantClassifier { label: 0, classes: 3 });
        assert!(Ensemble::new(vec![three]).is_err());
    }

    proptest! {
        #[test]
        fn matches_all_oracle(votes in prop::collection::vec(any::<bool>(), 1..8)) {
            let ds: Vec<Decision> = votes.iter().map(|&v| vote(v)).collect();
            prop_assert_eq!(ensemble_consensus(&ds).unwrap(), votes.iter().all(|&v| v));
        }

        #[test]
        fn monotone_under_veto(votes in prop::collection::vec(any::<bool>(), 1..8), flip in 0usize..8) {
            let before: Vec<Decision> = votes.iter().map(|&v| vote(v)).collect();
            let mut after = votes.clone();
            let i = flip % after.len();
            after[i] = false;
            let after: Vec<Decision> = after.iter().map(|&v| vote(v)).collect();
            let (b, a) = (ensemble_consensus(&before).unwrap(), ensemble_consensus(&after).unwrap());
            prop_assert!(!(a && !b));
        }
    }
}
