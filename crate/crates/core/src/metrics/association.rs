use super::{JointTable, MetricError};

/// Pearson χ² statistic of independence for a contingency table.
pub fn chi_square(j: &JointTable) -> f64 {
    let n = j.total() as f64;
    let rs = j.row_sums();
    let cs = j.col_sums();
    let mut chi2 = 0.0;
    for (i, row) in j.counts().iter().enumerate() {
        for (k, &obs) in row.iter().enumerate() {
            let expected = rs[i] as f64 * cs[k] as f64 / n;
            if expected > 0.0 {
                let d = obs as f64 - expected;
                chi2 += d * d / expected;
            }
        }
    }
    chi2
}

/// Cramér's V without bias correction: `√(χ² / (N · min(r−1, c−1)))`.
///
/// Tables need at least two rows and columns and no empty row or column;
/// call [`JointTable::compact`] first when sparse categories are expected.
pub fn cramers_v(j: &JointTable) -> Result<f64, MetricError> {
    let (r, c) = (j.rows().len(), j.cols().len());
    if r < 2 || c < 2 {
        return Err(MetricError::DegenerateTable(format!("{r}x{c} table")));
    }
    if j.row_sums().contains(&0) || j.col_sums().contains(&0) {
        return Err(MetricError::DegenerateTable("zero marginal".into()));
    }
    let n = j.total() as f64;
    let k = (r.min(c) - 1) as f64;
    Ok((chi_square(j) / (n * k)).sqrt().clamp(0.0, 1.0))
}
