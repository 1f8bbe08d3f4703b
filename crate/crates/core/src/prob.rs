use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A probability distribution over a finite index set.
///
/// Weights are validated non-negative and summing to 1 within 1e-9 on
/// construction, then renormalized so the stored sum is 1 to machine
/// precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Prob {
    w: Vec<f64>,
}

impl Prob {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidProbability("empty index set".into()));
        }
        if weights.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidProbability(format!(
                "negative or non-finite weight in {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProbability(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        let w = weights.iter().map(|x| x / sum).collect();
        Ok(Prob { w })
    }

    pub fn uniform(k: usize) -> Self {
        Prob { w: vec![1.0 / k as f64; k] }
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        let mut w = vec![0.0; k];
        w[at] = 1.0;
        Prob { w }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.w[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.w.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, _)| i)
    }
}

impl TryFrom<Vec<f64>> for Prob {
    type Error = Error;
    fn try_from(w: Vec<f64>) -> Result<Self> {
        Prob::new(w)
    }
}

impl From<Prob> for Vec<f64> {
    fn from(p: Prob) -> Vec<f64> {
        p.w
    }
}

/// Shannon entropy in nats of a non-negative weight vector (zero terms skipped).
pub fn entropy_nats(w: &[f64]) -> f64 {
    -w.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// Numerically careful running sum; the convolution tails add up to ~1e7 terms.
#[derive(Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}
