//! Entropy, conditional entropy and information gain over categorical data.

use std::collections::BTreeMap;

use super::{LabelDistribution, LogBase, MetricError};

fn plogp_sum(probs: impl Iterator<Item = f64>, base: LogBase) -> f64 {
    -probs.filter(|p| *p > 0.0).map(|p| p * base.log(p)).sum::<f64>()
}

/// Shannon entropy in bits, `0·log0 := 0`.
pub fn entropy(p: &LabelDistribution) -> f64 {
    entropy_in(p, LogBase::Two)
}

pub fn entropy_in(p: &LabelDistribution, base: LogBase) -> f64 {
    plogp_sum(p.probs().iter().copied(), base).max(0.0)
}

/// Contingency table of counts: rows are values of X, columns values of Y.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointTable {
    rows: Vec<String>,
    cols: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl JointTable {
    pub fn new(rows: Vec<String>, cols: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, MetricError> {
        if counts.len() != rows.len() || counts.iter().any(|r| r.len() != cols.len()) {
            return Err(MetricError::InvalidTable("counts do not match row/column labels".into()));
        }
        if counts.iter().flatten().all(|&c| c == 0) {
            return Err(MetricError::InvalidTable("table has no positive entry".into()));
        }
        Ok(JointTable { rows, cols, counts })
    }

    /// Table with generated labels `x0, x1, …` / `y0, y1, …`.
    pub fn from_matrix(counts: Vec<Vec<u64>>) -> Result<Self, MetricError> {
        let r = counts.len();
        let c = counts.first().map_or(0, Vec::len);
        Self::new(
            (0..r).map(|i| format!("x{i}")).collect(),
            (0..c).map(|j| format!("y{j}")).collect(),
            counts,
        )
    }

    /// Tabulate observed `(x, y)` pairs. Labels are sorted.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut cells: BTreeMap<(&str, &str), u64> = BTreeMap::new();
        for (x, y) in pairs {
            *cells.entry((x, y)).or_default() += 1;
        }
        let mut rows: Vec<&str> = cells.keys().map(|(x, _)| *x).collect();
        rows.dedup();
        let mut cols: Vec<&str> = cells.keys().map(|(_, y)| *y).collect();
        cols.sort_unstable();
        cols.dedup();
        let counts = rows
            .iter()
            .map(|x| cols.iter().map(|y| cells.get(&(*x, *y)).copied().unwrap_or(0)).collect())
            .collect();
        Self::new(
            rows.into_iter().map(String::from).collect(),
            cols.into_iter().map(String::from).collect(),
            counts,
        )
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols.len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> JointTable {
        JointTable {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            counts: (0..self.cols.len())
                .map(|j| self.counts.iter().map(|r| r[j]).collect())
                .collect(),
        }
    }

    /// Drop all-zero rows and columns.
    pub fn compact(&self) -> JointTable {
        let rs = self.row_sums();
        let cs = self.col_sums();
        let keep_r: Vec<usize> = (0..self.rows.len()).filter(|&i| rs[i] > 0).collect();
        let keep_c: Vec<usize> = (0..self.cols.len()).filter(|&j| cs[j] > 0).collect();
        JointTable {
            rows: keep_r.iter().map(|&i| self.rows[i].clone()).collect(),
            cols: keep_c.iter().map(|&j| self.cols[j].clone()).collect(),
            counts: keep_r
                .iter()
                .map(|&i| keep_c.iter().map(|&j| self.counts[i][j]).collect())
                .collect(),
        }
    }

    /// Marginal distribution of Y.
    pub fn y_distribution(&self) -> LabelDistribution {
        LabelDistribution::from_counts(self.cols.iter().cloned().zip(self.col_sums()))
            .expect("table has a positive entry")
    }

    /// Marginal distribution of X.
    pub fn x_distribution(&self) -> LabelDistribution {
        LabelDistribution::from_counts(self.rows.iter().cloned().zip(self.row_sums()))
            .expect("table has a positive entry")
    }
}

/// `H(Y | X)` in bits, rows being X.
pub fn conditional_entropy(j: &JointTable) -> f64 {
    conditional_entropy_in(j, LogBase::Two)
}

pub fn conditional_entropy_in(j: &JointTable, base: LogBase) -> f64 {
    let n = j.total() as f64;
    j.counts
        .iter()
        .filter_map(|row| {
            let row_total: u64 = row.iter().sum();
            (row_total > 0).then(|| {
                let weight = row_total as f64 / n;
                weight * plogp_sum(row.iter().map(|&c| c as f64 / row_total as f64), base)
            })
        })
        .sum::<f64>()
        .max(0.0)
}

/// Mutual information `I(X;Y) = H(Y) − H(Y|X)` in bits.
pub fn information_gain(j: &JointTable) -> f64 {
    entropy(&j.y_distribution()) - conditional_entropy(j)
}
