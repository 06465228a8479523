//! Reference (ground-truth) distributions of `W`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::io::fmt_f64;
use crate::{Error, Result};

/// Provenance written into the reference file header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMeta {
    pub model: String,
    pub params: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    /// Lattice atoms with their probabilities; `spacing` is the lattice step.
    Atoms {
        points: Vec<f64>,
        probs: Vec<f64>,
        spacing: f64,
        /// `P(W ≤ points[k])`, accumulated from the left.
        below: Vec<f64>,
        /// `P(W ≥ points[k])`, accumulated from the right.
        above: Vec<f64>,
    },
    /// Sorted i.i.d. draws of `W`.
    Samples { values: Vec<f64> },
}

/// Stationary law of the scaled chain, either exact on a lattice or sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDistribution {
    meta: ReferenceMeta,
    law: Law,
}

impl LatticeDistribution {
    pub fn from_atoms(
        points: Vec<f64>,
        probs: Vec<f64>,
        spacing: f64,
        meta: ReferenceMeta,
    ) -> Result<Self> {
        if points.len() != probs.len() || points.is_empty() {
            return Err(Error::InvalidParameter("lattice points and probabilities must match".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("lattice points must be strictly increasing".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParameter("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if !(total > 1.0 - 1e-12 && total <= 1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}")));
        }
        let mut below = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            below.push(acc.min(1.0));
        }
        let mut above = vec![0.0; probs.len()];
        let mut acc = 0.0;
        for (k, p) in probs.iter().enumerate().rev() {
            acc += p;
            above[k] = acc.min(1.0);
        }
        Ok(Self {
            meta,
            law: Law::Atoms { points, probs, spacing, below, above },
        })
    }

    pub fn from_samples(mut values: Vec<f64>, meta: ReferenceMeta) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("samples must be finite and nonempty".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { meta, law: Law::Samples { values } })
    }

    pub fn meta(&self) -> &ReferenceMeta {
        &self.meta
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn is_sample(&self) -> bool {
        matches!(self.law, Law::Samples { .. })
    }

    /// Number of atoms or samples.
    pub fn len(&self) -> usize {
        match &self.law {
            Law::Atoms { points, .. } => points.len(),
            Law::Samples { values } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest and largest support point.
    pub fn range(&self) -> (f64, f64) {
        let v = match &self.law {
            Law::Atoms { points, .. } => points,
            Law::Samples { values } => values,
        };
        (v[0], v[v.len() - 1])
    }

    /// Index of the first atom `≥ z` (atoms within `1e-9` spacings count as equal).
    fn first_at_or_above(points: &[f64], spacing: f64, z: f64) -> usize {
        let z = z - 1e-9 * spacing;
        points.partition_point(|p| *p < z)
    }

    /// `P(W ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.law {
            Law::Atoms { points, spacing, below, .. } => {
                let idx = points.partition_point(|p| *p <= x + 1e-9 * spacing);
                if idx == 0 { 0.0 } else { below[idx - 1] }
            }
            Law::Samples { values } => {
                values.partition_point(|v| *v <= x) as f64 / values.len() as f64
            }
        }
    }

    /// `P(W ≥ z)`, accumulated from the right.
    pub fn tail_ge(&self, z: f64) -> f64 {
        match &self.law {
            Law::Atoms { points, spacing, above, .. } => {
                let idx = Self::first_at_or_above(points, *spacing, z);
                if idx == points.len() { 0.0 } else { above[idx] }
            }
            Law::Samples { values } => {
                let idx = values.partition_point(|v| *v < z);
                (values.len() - idx) as f64 / values.len() as f64
            }
        }
    }

    /// `P(W ≤ z)`.
    pub fn tail_le(&self, z: f64) -> f64 {
        self.cdf(z)
    }

    /// `E h(W)`.
    pub fn expect<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        match &self.law {
            Law::Atoms { points, probs, .. } => {
                points.iter().zip(probs).map(|(x, p)| if *p > 0.0 { h(*x) * p } else { 0.0 }).sum()
            }
            Law::Samples { values } => {
                // pairwise-ish accumulation in blocks keeps rounding small for 1e7 terms
                let block: Vec<f64> = values.chunks(4096).map(|c| c.iter().map(|v| h(*v)).sum()).collect();
                block.iter().sum::<f64>() / values.len() as f64
            }
        }
    }

    /// Standard error of `E h(W)`: zero for exact laws, `s/√n` for samples.
    ///
    /// For a sample mean this is the closed form of the nonparametric bootstrap
    /// standard error.
    pub fn expect_stderr<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        match &self.law {
            Law::Atoms { .. } => 0.0,
            Law::Samples { values } => {
                let n = values.len() as f64;
                let mean = self.expect(&h);
                let var: f64 = values.chunks(4096)
                    .map(|c| c.iter().map(|v| (h(*v) - mean).powi(2)).sum::<f64>())
                    .sum::<f64>()
                    / n;
                (var / n).sqrt()
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    /// Write `x,p` rows (atoms) or `sample` rows, after a `#` provenance header.
    pub fn write_csv<W: Write>(&self, out: &mut W, extra_header: &str) -> Result<()> {
        let seed = self.meta.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        writeln!(
            out,
            "# model={},params={},seed={}{}",
            self.meta.model, self.meta.params, seed, extra_header
        )?;
        match &self.law {
            Law::Atoms { points, probs, .. } => {
                writeln!(out, "x,p")?;
                for (x, p) in points.iter().zip(probs) {
                    writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*p))?;
                }
            }
            Law::Samples { values } => {
                writeln!(out, "sample")?;
                for v in values {
                    writeln!(out, "{}", fmt_f64(*v))?;
                }
            }
        }
        Ok(())
    }
}
