//! Empirical distributions of one estimate component and KS scoring.

use serde::Serialize;

/// Fewer nonzero samples than this and the KS distance is not reported.
pub const MIN_KS_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl Histogram {
    /// Equal-width bins over `[min, max]` of `sorted`, normalised to unit area.
    pub fn from_sorted(sorted: &[f64], bins: usize) -> Self {
        let (Some(&lo), Some(&hi)) = (sorted.first(), sorted.last()) else {
            return Self { edges: Vec::new(), density: Vec::new() };
        };
        if hi <= lo || bins == 0 {
            return Self { edges: Vec::new(), density: Vec::new() };
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| if i == bins { hi } else { lo + width * i as f64 }).collect();
        let mut counts = vec![0usize; bins];
        for &v in sorted {
            let idx = (((v - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let n = sorted.len() as f64;
        let density = counts.iter().zip(edges.windows(2)).map(|(&c, e)| c as f64 / (n * (e[1] - e[0]))).collect();
        Self { edges, density }
    }

    pub fn area(&self) -> f64 {
        self.density.iter().zip(self.edges.windows(2)).map(|(d, e)| d * (e[1] - e[0])).sum()
    }
}

/// Samples of one component across replicates, split into the atom at zero
/// and the nonzero part.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    pub component: usize,
    /// All samples, ascending.
    pub samples: Vec<f64>,
    /// Nonzero samples, ascending.
    pub nonzero: Vec<f64>,
    pub zero_count: usize,
    pub histogram: Histogram,
}

impl EmpiricalDistribution {
    pub fn new(component: usize, mut samples: Vec<f64>, bins: usize) -> Self {
        samples.sort_by(f64::total_cmp);
        let nonzero: Vec<f64> = samples.iter().copied().filter(|v| *v != 0.0).collect();
        let zero_count = samples.len() - nonzero.len();
        let histogram = Histogram::from_sorted(&nonzero, bins);
        Self { component, samples, nonzero, zero_count, histogram }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn zero_fraction(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.zero_count as f64 / self.samples.len() as f64
        }
    }

    /// Fraction of all samples `≤ v`.
    pub fn ecdf(&self, v: f64) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.partition_point(|s| *s <= v) as f64 / self.samples.len() as f64
    }

    /// Fraction of nonzero samples `≤ v`.
    pub fn conditional_ecdf(&self, v: f64) -> f64 {
        if self.nonzero.is_empty() {
            return 0.0;
        }
        self.nonzero.partition_point(|s| *s <= v) as f64 / self.nonzero.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum KsOutcome {
    Scored { distance: f64 },
    InsufficientData { nonzero: usize },
}

impl KsOutcome {
    pub fn distance(&self) -> Option<f64> {
        match self {
            KsOutcome::Scored { distance } => Some(*distance),
            KsOutcome::InsufficientData { .. } => None,
        }
    }
}

/// Two-sided Kolmogorov–Smirnov statistic of ascending `sorted` against `cdf`.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    let mut i = 0;
    while i < sorted.len() {
        // ties: the ECDF jumps once over the whole run
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        // the left limit makes the statistic exact for step-function references too
        let below = cdf(v.next_down());
        d = d.max((j as f64 / n - cdf(v)).abs()).max((below - i as f64 / n).abs());
        i = j;
    }
    d.clamp(0.0, 1.0)
}

/// KS distance between the nonzero samples and a conditional (given `v ≠ 0`)
/// reference CDF.
pub fn ks_distance(empirical: &EmpiricalDistribution, conditional_cdf: impl Fn(f64) -> f64) -> KsOutcome {
    if empirical.nonzero.len() < MIN_KS_SAMPLES {
        return KsOutcome::InsufficientData { nonzero: empirical.nonzero.len() };
    }
    KsOutcome::Scored { distance: ks_statistic(&empirical.nonzero, conditional_cdf) }
}
