//! Quadrature rules on intervals and on the reference triangle.

use crate::error::{FemError, Result};

/// Reference domain a rule's points live on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceDomain {
    Interval {
        a: f64,
        b: f64,
    },
    /// {(xi, eta) : xi, eta >= 0, xi + eta <= 1}
    Triangle,
}

impl ReferenceDomain {
    pub fn measure(&self) -> f64 {
        match *self {
            ReferenceDomain::Interval { a, b } => b - a,
            ReferenceDomain::Triangle => 0.5,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match *self {
            ReferenceDomain::Interval { a, b } => p[0] >= a && p[0] <= b,
            ReferenceDomain::Triangle => p[0] >= 0.0 && p[1] >= 0.0 && p[0] + p[1] <= 1.0,
        }
    }
}

/// Points and positive weights; interval rules keep their abscissa in
/// `points[i][0]` with the second coordinate zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub domain: ReferenceDomain,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exact_degree: u32,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Three-point Gauss-Legendre rule on [-1, 1].
pub fn gauss3_interval() -> QuadratureRule {
    let p = 15f64.sqrt() / 5.0;
    QuadratureRule {
        domain: ReferenceDomain::Interval { a: -1.0, b: 1.0 },
        points: vec![[-p, 0.0], [0.0, 0.0], [p, 0.0]],
        weights: vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
        exact_degree: 5,
    }
}

/// Affinely transport an interval rule onto [a, b].
pub fn map_to_interval(rule: &QuadratureRule, a: f64, b: f64) -> Result<QuadratureRule> {
    let ReferenceDomain::Interval { a: lo, b: hi } = rule.domain else {
        return Err(FemError::invalid("map_to_interval needs an interval rule"));
    };
    if !(a < b) {
        return Err(FemError::invalid(format!("interval needs a < b, got [{a}, {b}]")));
    }
    let scale = (b - a) / (hi - lo);
    Ok(QuadratureRule {
        domain: ReferenceDomain::Interval { a, b },
        points: rule
            .points
            .iter()
            .map(|p| [a + (p[0] - lo) * scale, 0.0])
            .collect(),
        weights: rule.weights.iter().map(|w| w * scale).collect(),
        exact_degree: rule.exact_degree,
    })
}

/// Symmetric rule on the reference triangle exact to at least `min_degree`.
///
/// Every supported degree is served by the 7-point degree-5 rule (centroid
/// plus two three-point orbits).
pub fn triangle_rule(min_degree: u32) -> Result<QuadratureRule> {
    if min_degree > 5 {
        return Err(FemError::Unsupported(format!(
            "no triangle rule of degree {min_degree} (maximum 5)"
        )));
    }
    let s15 = 15f64.sqrt();
    let (a1, b1) = ((6.0 - s15) / 21.0, (9.0 + 2.0 * s15) / 21.0);
    let (a2, b2) = ((6.0 + s15) / 21.0, (9.0 - 2.0 * s15) / 21.0);
    let (w1, w2) = ((155.0 - s15) / 2400.0, (155.0 + s15) / 2400.0);
    let third = 1.0 / 3.0;
    Ok(QuadratureRule {
        domain: ReferenceDomain::Triangle,
        points: vec![
            [third, third],
            [a1, a1],
            [b1, a1],
            [a1, b1],
            [a2, a2],
            [b2, a2],
            [a2, b2],
        ],
        weights: vec![9.0 / 80.0, w1, w1, w1, w2, w2, w2],
        exact_degree: 5,
    })
}

/// Physical element an integral is taken over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementGeometry {
    Segment { a: f64, b: f64 },
    Triangle([[f64; 2]; 3]),
}

/// Sum of w_i |J| f(F(x_i)) with F the affine map from the rule's
/// reference domain onto `element`.
pub fn integrate(
    rule: &QuadratureRule,
    element: &ElementGeometry,
    mut f: impl FnMut([f64; 2]) -> f64,
) -> Result<f64> {
    match (rule.domain, element) {
        (ReferenceDomain::Interval { a: lo, b: hi }, &ElementGeometry::Segment { a, b }) => {
            let jac = (b - a) / (hi - lo);
            Ok(rule
                .iter()
                .map(|(p, w)| w * jac * f([a + (p[0] - lo) * jac, 0.0]))
                .sum())
        }
        (ReferenceDomain::Triangle, ElementGeometry::Triangle(v)) => {
            let e1 = [v[1][0] - v[0][0], v[1][1] - v[0][1]];
            let e2 = [v[2][0] - v[0][0], v[2][1] - v[0][1]];
            let det = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
            Ok(rule
                .iter()
                .map(|([s, t], w)| {
                    let x = v[0][0] + e1[0] * s + e2[0] * t;
                    let y = v[0][1] + e1[1] * s + e2[1] * t;
                    w * det * f([x, y])
                })
                .sum())
        }
        _ => Err(FemError::invalid(
            "quadrature rule dimension does not match the element",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval_sum(rule: &QuadratureRule, f: impl Fn(f64) -> f64) -> f64 {
        rule.iter().map(|(p, w)| w * f(p[0])).sum()
    }

    #[test]
    fn gauss3_moments() {
        let g = gauss3_interval();
        assert_eq!(interval_sum(&g, |_| 1.0), 2.0);
        assert!((interval_sum(&g, |x| x.powi(4)) - 0.4).abs() <= 1e-15);
        // degree 6 is beyond the rule: 2 * (3/5)^3 * 5/9 = 6/25
        let x6 = interval_sum(&g, |x| x.powi(6));
        assert!((x6 - 6.0 / 25.0).abs() < 1e-15);
        assert!((x6 - 2.0 / 7.0).abs() > 1e-2);
    }

    #[test]
    fn mapped_interval() {
        let g = gauss3_interval();
        let same = map_to_interval(&g, -1.0, 1.0).unwrap();
        assert_eq!(same, g);
        let unit = map_to_interval(&g, 0.0, 1.0).unwrap();
        assert!((interval_sum(&unit, |x| x * x) - 1.0 / 3.0).abs() <= 1e-15);
        let fifth = map_to_interval(&g, 0.0, 0.2).unwrap();
        assert!((fifth.weights.iter().sum::<f64>() - 0.2).abs() < 1e-16);
        assert!(map_to_interval(&g, 1.0, 0.0).is_err());
    }

    #[test]
    fn triangle_moments() {
        let t = triangle_rule(5).unwrap();
        let sum = |f: &dyn Fn(f64, f64) -> f64| -> f64 { t.iter().map(|([x, y], w)| w * f(x, y)).sum() };
        assert!((sum(&|_, _| 1.0) - 0.5).abs() < 1e-15);
        assert!((sum(&|x, _| x) - 1.0 / 6.0).abs() <= 1e-14);
        assert!((sum(&|x, y| x * x * y * y) - 1.0 / 180.0).abs() <= 1e-14);
        assert!(triangle_rule(6).is_err());
        assert!(t.points.iter().all(|&p| t.domain.contains(p)));
        assert!(t.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn integrate_on_elements() {
        let tri = ElementGeometry::Triangle([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let t = triangle_rule(5).unwrap();
        assert!((integrate(&t, &tri, |_| 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((integrate(&t, &tri, |p| p[0]).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let big = ElementGeometry::Triangle([[1.0, 1.0], [4.0, 2.0], [2.0, 5.0]]);
        assert!((integrate(&t, &big, |_| 1.0).unwrap() - 5.5).abs() < 1e-13);

        let seg = ElementGeometry::Segment { a: 0.0, b: 0.2 };
        let g = gauss3_interval();
        assert!((integrate(&g, &seg, |_| 1.0).unwrap() - 0.2).abs() < 1e-16);
        assert!(integrate(&g, &tri, |_| 1.0).is_err());
    }
}
