use super::{align, LabelDistribution, LogBase, MetricError};

/// `D(P‖Q) = Σ P log(P/Q)` in bits over the union support.
///
/// Without smoothing, any label with `P > 0` and `Q = 0` is a domain error.
/// With `smoothing = Some(eps)`, both vectors get `eps` added to every entry
/// and are renormalised first.
pub fn kl_divergence(
    p: &LabelDistribution,
    q: &LabelDistribution,
    smoothing: Option<f64>,
) -> Result<f64, MetricError> {
    kl_divergence_in(p, q, smoothing, LogBase::Two)
}

pub fn kl_divergence_in(
    p: &LabelDistribution,
    q: &LabelDistribution,
    smoothing: Option<f64>,
    base: LogBase,
) -> Result<f64, MetricError> {
    let (support, mut pv, mut qv) = align(p, q);
    if let Some(eps) = smoothing {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(MetricError::InvalidDistribution(format!("smoothing {eps} must be positive")));
        }
        for v in [&mut pv, &mut qv] {
            let mass = 1.0 + eps * v.len() as f64;
            v.iter_mut().for_each(|x| *x = (*x + eps) / mass);
        }
    }
    let mut d = 0.0;
    for ((label, &pi), &qi) in support.iter().zip(&pv).zip(&qv) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(MetricError::NotAbsolutelyContinuous(label.clone()));
            }
            d += pi * base.log(pi / qi);
        }
    }
    Ok(d.max(0.0))
}

/// Jensen–Shannon divergence in the given base.
pub fn js_divergence_in(p: &LabelDistribution, q: &LabelDistribution, base: LogBase) -> f64 {
    let (_, pv, qv) = align(p, q);
    let half = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .filter(|(ai, _)| **ai > 0.0)
            .map(|(ai, bi)| ai * base.log(ai / ((ai + bi) / 2.0)))
            .sum()
    };
    (0.5 * half(&pv, &qv) + 0.5 * half(&qv, &pv)).max(0.0)
}

/// Square root of the base-2 Jensen–Shannon divergence; in `[0, 1]`, with 1
/// exactly for disjoint supports.
pub fn js_distance(p: &LabelDistribution, q: &LabelDistribution) -> f64 {
    js_distance_in(p, q, LogBase::Two)
}

/// JS distance in an explicit base. In nats the range is `[0, √ln 2]`.
pub fn js_distance_in(p: &LabelDistribution, q: &LabelDistribution, base: LogBase) -> f64 {
    js_divergence_in(p, q, base).sqrt().min(base.js_distance_max())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(ps: &[f64]) -> LabelDistribution {
        LabelDistribution::from_probs(ps.iter().enumerate().map(|(i, p)| (format!("l{i}"), *p))).unwrap()
    }

    #[test]
    fn kl_examples() {
        let p = d(&[0.3, 0.7]);
        assert_eq!(kl_divergence(&p, &p, None).unwrap(), 0.0);
        assert!((kl_divergence(&d(&[1.0, 0.0]), &d(&[0.5, 0.5]), None).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kl_is_asymmetric() {
        // scipy.stats.entropy(P, Q, base=2) in both directions
        let (p, q) = (d(&[0.9, 0.1]), d(&[0.5, 0.5]));
        let pq = kl_divergence(&p, &q, None).unwrap();
        let qp = kl_divergence(&q, &p, None).unwrap();
        assert!((pq - 0.5310044064107188).abs() < 1e-12);
        assert!((qp - 0.7369655941662061).abs() < 1e-12);
    }

    #[test]
    fn kl_requires_absolute_continuity() {
        let (p, q) = (d(&[0.5, 0.5]), d(&[1.0, 0.0]));
        assert!(matches!(
            kl_divergence(&p, &q, None),
            Err(MetricError::NotAbsolutelyContinuous(l)) if l == "l1"
        ));
        let smoothed = kl_divergence(&p, &q, Some(1e-6)).unwrap();
        assert!(smoothed.is_finite() && smoothed > 1.0);
    }

    #[test]
    fn js_examples() {
        let p = d(&[0.2, 0.8]);
        assert_eq!(js_distance(&p, &p), 0.0);
        let a = LabelDistribution::from_probs([("a", 1.0)]).unwrap();
        let b = LabelDistribution::from_probs([("b", 1.0)]).unwrap();
        assert!((js_distance(&a, &b) - 1.0).abs() < 1e-12);
        assert!((js_distance_in(&a, &b, LogBase::Natural) - 2f64.ln().sqrt()).abs() < 1e-12);
        // scipy.spatial.distance.jensenshannon
        let (p, q) = (d(&[0.9, 0.1]), d(&[0.5, 0.5]));
        assert!((js_distance(&p, &q) - 0.3831358798599423).abs() < 1e-12);
        assert!((js_distance_in(&p, &q, LogBase::Natural) - 0.31898154347735663).abs() < 1e-12);
    }

    #[test]
    fn js_unions_supports() {
        let a = LabelDistribution::from_probs([("a", 0.5), ("b", 0.5)]).unwrap();
        let b = LabelDistribution::from_probs([("b", 0.5), ("a", 0.5), ("c", 0.0)]).unwrap();
        assert!(js_distance(&a, &b) < 1e-12);
    }
}
