//! Gauss-Legendre rules on the bi-unit square and integration over mapped
//! quadrilaterals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{MappingScheme, Point};
use crate::scalar::Real;

/// One-dimensional Gauss-Legendre rule on [-1, 1], applied as a tensor
/// product on the square.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule<T> {
    pub order: usize,
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

// Positive abscissae and weights; the rules are symmetric.
const G4: [(f64, f64); 2] = [
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];
const G5: [(f64, f64); 3] = [
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];
const G6: [(f64, f64); 3] = [
    (0.238_619_186_083_196_9, 0.467_913_934_572_691),
    (0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (0.932_469_514_203_152, 0.171_324_492_379_170_3),
];

impl<T: Real> GaussRule<T> {
    pub fn new(order: usize) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = match order {
            1 => vec![(0.0, 2.0)],
            2 => {
                let a = 1.0 / 3f64.sqrt();
                vec![(-a, 1.0), (a, 1.0)]
            }
            3 => {
                let a = (3.0f64 / 5.0).sqrt();
                vec![(-a, 5.0 / 9.0), (0.0, 8.0 / 9.0), (a, 5.0 / 9.0)]
            }
            4 => mirror(&G4, false),
            5 => mirror(&G5, true),
            6 => mirror(&G6, false),
            n => return Err(Error::GaussOrder(n)),
        };
        Ok(GaussRule {
            order,
            points: pairs.iter().map(|p| T::lit(p.0)).collect(),
            weights: pairs.iter().map(|p| T::lit(p.1)).collect(),
        })
    }

    /// Tensor-product points `(θ1, θ2)` with their weights.
    pub fn points_2d(&self) -> impl Iterator<Item = (Point<T>, T)> + '_ {
        self.points
            .iter()
            .zip(&self.weights)
            .flat_map(move |(&a, &wa)| {
                self.points
                    .iter()
                    .zip(&self.weights)
                    .map(move |(&b, &wb)| ([a, b], wa * wb))
            })
    }

    /// `∫_{-1}^{1} f(θ) dθ`
    pub fn integrate_1d(&self, f: impl Fn(T) -> T) -> T {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn mirror(half: &[(f64, f64)], has_zero: bool) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = half
        .iter()
        .rev()
        .filter(|p| !(has_zero && p.0 == 0.0))
        .map(|&(x, w)| (-x, w))
        .collect();
    v.extend_from_slice(half);
    v
}

pub fn gauss_rule<T: Real>(order: usize) -> Result<GaussRule<T>> {
    GaussRule::new(order)
}

/// `Σ w_i w_j f(θ_ij, x(θ_ij)) det J(θ_ij)`
pub fn integrate_element<T: Real>(
    scheme: &MappingScheme<T>,
    rule: &GaussRule<T>,
    f: impl Fn(Point<T>, Point<T>) -> T,
) -> Result<T> {
    let mut acc = T::zero();
    for (t, w) in rule.points_2d() {
        let j = scheme.jacobian(t)?;
        acc = acc + w * f(t, scheme.map_point(t)) * j.det;
    }
    Ok(acc)
}

/// Area and second moments about the global Cartesian axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionProperties<T> {
    pub area: T,
    /// `∫ x2² dA`
    pub i_x1: T,
    /// `∫ x1² dA`
    pub i_x2: T,
    /// `∫ x1 x2 dA`
    pub i_x1x2: T,
}

impl<T: Real> SectionProperties<T> {
    pub fn max_abs_diff(&self, other: &Self) -> T {
        (self.area - other.area)
            .abs()
            .max((self.i_x1 - other.i_x1).abs())
            .max((self.i_x2 - other.i_x2).abs())
            .max((self.i_x1x2 - other.i_x1x2).abs())
    }
}

pub fn section_properties<T: Real>(
    scheme: &MappingScheme<T>,
    rule: &GaussRule<T>,
) -> Result<SectionProperties<T>> {
    let mut s = SectionProperties {
        area: T::zero(),
        i_x1: T::zero(),
        i_x2: T::zero(),
        i_x1x2: T::zero(),
    };
    for (t, w) in rule.points_2d() {
        let dj = scheme.jacobian(t)?.det * w;
        let [x, y] = scheme.map_point(t);
        s.area = s.area + dj;
        s.i_x1 = s.i_x1 + y * y * dj;
        s.i_x2 = s.i_x2 + x * x * dj;
        s.i_x1x2 = s.i_x1x2 + x * y * dj;
    }
    Ok(s)
}

/// Exact polygon section properties (Green's theorem), used as an
/// independent reference for straight-edged quads.
pub fn polygon_section_properties(vertices: &[Point<f64>]) -> SectionProperties<f64> {
    let n = vertices.len();
    let mut s = SectionProperties {
        area: 0.0,
        i_x1: 0.0,
        i_x2: 0.0,
        i_x1x2: 0.0,
    };
    for k in 0..n {
        let [x0, y0] = vertices[k];
        let [x1, y1] = vertices[(k + 1) % n];
        let c = x0 * y1 - x1 * y0;
        s.area += c / 2.0;
        s.i_x1 += c * (y0 * y0 + y0 * y1 + y1 * y1) / 12.0;
        s.i_x2 += c * (x0 * x0 + x0 * x1 + x1 * x1) / 12.0;
        s.i_x1x2 += c * (x0 * y1 + 2.0 * x0 * y0 + 2.0 * x1 * y1 + x1 * y0) / 24.0;
    }
    s
}
