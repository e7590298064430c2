//! Area-weighted error norms.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Weighted norms of `model - reference`: `L1 = sum w |e| / sum w`,
/// `L2 = sqrt(sum w e^2 / sum w)`, `Linf = max |e|`.
pub fn error_norms(model: &[f64], reference: &[f64], weights: &[f64]) -> Norms {
    assert_eq!(model.len(), reference.len());
    assert_eq!(model.len(), weights.len());
    let (mut s1, mut s2, mut linf, mut wsum) = (0.0, 0.0, 0.0f64, 0.0);
    for ((m, r), w) in model.iter().zip(reference).zip(weights) {
        let e = (m - r).abs();
        s1 += w * e;
        s2 += w * e * e;
        linf = linf.max(e);
        wsum += w;
    }
    Norms {
        l1: s1 / wsum,
        l2: (s2 / wsum).sqrt(),
        linf,
    }
}

/// `log2(e_coarse / e_fine)` for successive refinements halving the
/// grid spacing.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_and_shifted_fields() {
        let a = [1.0, 2.0, 3.0];
        let w = [1.0, 2.0, 1.0];
        assert_eq!(error_norms(&a, &a, &w), Norms { l1: 0.0, l2: 0.0, linf: 0.0 });
        let b = [1.5, 2.5, 3.5];
        let n = error_norms(&b, &a, &w);
        assert!((n.linf - 0.5).abs() < 1e-15 && (n.l2 - 0.5).abs() < 1e-15 && (n.l1 - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn norms_are_homogeneous(v in prop::collection::vec(-10.0f64..10.0, 1..30), c in -5.0f64..5.0) {
            let zero = vec![0.0; v.len()];
            let w = vec![1.0; v.len()];
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            let n1 = error_norms(&v, &zero, &w);
            let n2 = error_norms(&scaled, &zero, &w);
            prop_assert!((n2.l2 - c.abs() * n1.l2).abs() <= 1e-12 * (1.0 + n1.l2));
            prop_assert!((n2.linf - c.abs() * n1.linf).abs() <= 1e-12 * (1.0 + n1.linf));
        }
    }
}
