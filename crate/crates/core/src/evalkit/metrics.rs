use crate::error::{Error, Result};

/// Scores split by ground-truth class.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassScores {
    pub anomalous: Vec<f64>,
    pub normal: Vec<f64>,
}

impl ClassScores {
    pub fn from_labeled(scores: &[f64], labels: &[bool]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        let mut out = ClassScores::default();
        out.extend(scores, labels);
        Ok(out)
    }

    pub fn extend(&mut self, scores: &[f64], labels: &[bool]) {
        for (&s, &l) in scores.iter().zip(labels) {
            if l {
                self.anomalous.push(s);
            } else {
                self.normal.push(s);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.anomalous.len() + self.normal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_both(&self) -> Result<()> {
        if self.anomalous.is_empty() || self.normal.is_empty() {
            return Err(Error::UndefinedMetric(format!(
                "need both classes, got {} anomalous and {} normal samples",
                self.anomalous.len(),
                self.normal.len()
            )));
        }
        Ok(())
    }

    /// Mann–Whitney AUC: the probability that an anomalous score exceeds a
    /// normal one, ties counting one half.
    pub fn auc(&self) -> Result<f64> {
        self.check_both()?;
        let mut pos = self.anomalous.clone();
        let mut neg = self.normal.clone();
        pos.sort_by(f64::total_cmp);
        neg.sort_by(f64::total_cmp);
        let (mut below, mut upto) = (0usize, 0usize);
        let mut wins = 0.0f64;
        let mut i = 0;
        while i < pos.len() {
            let v = pos[i];
            let mut run = 0usize;
            while i < pos.len() && pos[i] == v {
                run += 1;
                i += 1;
            }
            while below < neg.len() && neg[below] < v {
                below += 1;
            }
            upto = upto.max(below);
            while upto < neg.len() && neg[upto] <= v {
                upto += 1;
            }
            wins += run as f64 * (below as f64 + 0.5 * (upto - below) as f64);
        }
        Ok(wins / (pos.len() as f64 * neg.len() as f64))
    }

    /// Median anomalous score minus median normal score.
    pub fn gap(&self) -> Result<f64> {
        self.check_both()?;
        Ok(median(&self.anomalous) - median(&self.normal))
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    ClassScores::from_labeled(scores, labels)?.auc()
}

pub fn gap(scores: &[f64], labels: &[bool]) -> Result<f64> {
    ClassScores::from_labeled(scores, labels)?.gap()
}
