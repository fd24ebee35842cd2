use std::collections::HashMap;

use super::MetricError;

/// Fraction of pairs whose two labels match exactly.
pub fn proportion_agreement<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput("pairs"));
    }
    let hits = pairs.iter().filter(|(a, b)| a.as_ref() == b.as_ref()).count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Cohen's κ = (p₀ − pₑ)/(1 − pₑ) with pₑ from the two raters' marginals.
///
/// Returns `Ok(None)` when pₑ = 1 (both raters constant on the same label),
/// where κ is undefined.
pub fn cohens_kappa<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<Option<f64>, MetricError> {
    let p0 = proportion_agreement(pairs)?;
    let n = pairs.len() as f64;
    let mut first: HashMap<&str, f64> = HashMap::new();
    let mut second: HashMap<&str, f64> = HashMap::new();
    for (a, b) in pairs {
        *first.entry(a.as_ref()).or_default() += 1.0;
        *second.entry(b.as_ref()).or_default() += 1.0;
    }
    let mut labels: Vec<&str> = first.keys().copied().collect();
    labels.sort_unstable();
    let pe: f64 = labels
        .iter()
        .map(|l| first[l] / n * second.get(l).copied().unwrap_or(0.0) / n)
        .sum();
    if (1.0 - pe).abs() < 1e-12 {
        return Ok(None);
    }
    Ok(Some((p0 - pe) / (1.0 - pe)))
}

/// Absolute percentage error of `predicted` against `actual`, in percent.
/// Undefined (`None`) when `actual` is zero.
pub fn ape(actual: f64, predicted: f64) -> Option<f64> {
    (actual != 0.0).then(|| ((actual - predicted) / actual).abs() * 100.0)
}

/// Mean of the defined entries; `None` when none is defined.
pub fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Sample Pearson correlation coefficient.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    if xs.len() != ys.len() {
        return Err(MetricError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetricError::EmptyInput("at least two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::Undefined("correlation of a constant series"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(a: &[&'static str], b: &[&'static str]) -> Vec<(&'static str, &'static str)> {
        a.iter().copied().zip(b.iter().copied()).collect()
    }

    #[test]
    fn kappa_identical_is_one() {
        let a = ["x", "y", "x", "z"];
        assert_eq!(cohens_kappa(&pairs(&a, &a)).unwrap(), Some(1.0));
    }

    #[test]
    fn kappa_rotated_labels_is_negative() {
        // sklearn.metrics.cohen_kappa_score on a balanced 4-label rotation
        let a: Vec<_> = ["A", "B", "C", "D"].repeat(25);
        let b: Vec<_> = ["B", "C", "D", "A"].repeat(25);
        let k = cohens_kappa(&pairs(&a, &b)).unwrap().unwrap();
        assert!((k - (-1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn kappa_hundred_pairs() {
        // 40 AA, 16 BB, 20 AB, 24 BA: p0 = 0.56, pe = 0.528; sklearn agrees
        let mut ps = Vec::new();
        ps.extend(std::iter::repeat_n(("A", "A"), 40));
        ps.extend(std::iter::repeat_n(("B", "B"), 16));
        ps.extend(std::iter::repeat_n(("A", "B"), 20));
        ps.extend(std::iter::repeat_n(("B", "A"), 24));
        assert!((proportion_agreement(&ps).unwrap() - 0.56).abs() < 1e-12);
        let k = cohens_kappa(&ps).unwrap().unwrap();
        assert!((k - 0.06779661016949157).abs() < 1e-12);
    }

    #[test]
    fn kappa_constant_raters_undefined() {
        let a = ["x", "x", "x"];
        assert_eq!(cohens_kappa(&pairs(&a, &a)).unwrap(), None);
        assert!(cohens_kappa::<&str>(&[]).is_err());
    }

    #[test]
    fn proportion_examples() {
        let a = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];
        let b = ["a", "b", "c", "d", "e", "x", "x", "x", "x", "x"];
        assert_eq!(proportion_agreement(&pairs(&a, &a)).unwrap(), 1.0);
        assert_eq!(proportion_agreement(&pairs(&a[5..], &b[5..])).unwrap(), 0.0);
        assert_eq!(proportion_agreement(&pairs(&a, &b)).unwrap(), 0.5);
    }

    #[test]
    fn ape_examples() {
        assert!((ape(9.0, 20.2).unwrap() - 124.444).abs() < 1e-3);
        assert_eq!(ape(3.0, 3.0), Some(0.0));
        assert_eq!(ape(0.0, 1.0), None);
        assert_eq!(mean_defined(&[None, None]), None);
        assert_eq!(mean_defined(&[Some(1.0), None, Some(3.0)]), Some(2.0));
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let double: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson_r(&xs, &double).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_r(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson_r(&xs, &[1.0; 4]).is_err());
        assert!(pearson_r(&[1.0], &[1.0]).is_err());
        assert!(pearson_r(&xs, &[1.0]).is_err());
    }
}
