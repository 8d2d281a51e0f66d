//! Geometry mapping of straight-edged quadrilaterals onto the bi-unit square.
//!
//! Three schemes are provided:
//!
//! - **bilinear**: the four-node Lagrange map with basis `{1, θ1, θ2, θ1θ2}`;
//! - **serendipity8**: corners plus edge midpoints, basis extended by
//!   `θ1², θ2², θ1²θ2, θ1θ2²`;
//! - **pascal6**: the complete quadratic basis `{1, θ1, θ2, θ1², θ1θ2, θ2²}`
//!   interpolated at the four corners and the two *poles*, the points where the
//!   lines through opposite edges intersect.
//!
//! For straight edges all three produce the same transformation; only the
//! shape functions differ. The Pascal scheme needs the natural coordinates of
//! the poles, which are found by Newton iteration on the bilinear map.
//!
//! Coordinates are plain `[T; 2]` pairs. Jacobian rows are covariant base
//! vectors: `covariant[α][i] = ∂x_i/∂θ_α`.

use serde::{Deserialize, Serialize};

use crate::dense::{cond1, det2, inv2, invert, solve2};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Point<T> = [T; 2];

/// Natural coordinates of the four corners, counterclockwise from (−1, −1).
pub const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Natural coordinates of the serendipity midside nodes 5..8.
pub const MIDSIDES: [[f64; 2]; 4] = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];

/// Monomials in the natural coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Monomial {
    One,
    T1,
    T2,
    T1Sq,
    T1T2,
    T2Sq,
    T1SqT2,
    T1T2Sq,
}

impl Monomial {
    pub fn eval<T: Real>(self, t: Point<T>) -> T {
        let [a, b] = t;
        match self {
            Monomial::One => T::one(),
            Monomial::T1 => a,
            Monomial::T2 => b,
            Monomial::T1Sq => a * a,
            Monomial::T1T2 => a * b,
            Monomial::T2Sq => b * b,
            Monomial::T1SqT2 => a * a * b,
            Monomial::T1T2Sq => a * b * b,
        }
    }

    /// `[∂/∂θ1, ∂/∂θ2]`
    pub fn grad<T: Real>(self, t: Point<T>) -> [T; 2] {
        let [a, b] = t;
        let z = T::zero();
        let two = T::lit(2.0);
        match self {
            Monomial::One => [z, z],
            Monomial::T1 => [T::one(), z],
            Monomial::T2 => [z, T::one()],
            Monomial::T1Sq => [two * a, z],
            Monomial::T1T2 => [b, a],
            Monomial::T2Sq => [z, two * b],
            Monomial::T1SqT2 => [two * a * b, a * a],
            Monomial::T1T2Sq => [b * b, two * a * b],
        }
    }

    pub fn hessian<T: Real>(self, t: Point<T>) -> [[T; 2]; 2] {
        let [a, b] = t;
        let z = T::zero();
        let two = T::lit(2.0);
        match self {
            Monomial::One | Monomial::T1 | Monomial::T2 => [[z, z], [z, z]],
            Monomial::T1Sq => [[two, z], [z, z]],
            Monomial::T1T2 => [[z, T::one()], [T::one(), z]],
            Monomial::T2Sq => [[z, z], [z, two]],
            Monomial::T1SqT2 => [[two * b, two * a], [two * a, z]],
            Monomial::T1T2Sq => [[z, two * b], [two * b, two * a]],
        }
    }
}

pub const BILINEAR_BASIS: [Monomial; 4] =
    [Monomial::One, Monomial::T1, Monomial::T2, Monomial::T1T2];

pub const PASCAL_BASIS: [Monomial; 6] = [
    Monomial::One,
    Monomial::T1,
    Monomial::T2,
    Monomial::T1Sq,
    Monomial::T1T2,
    Monomial::T2Sq,
];

pub const SERENDIPITY_BASIS: [Monomial; 8] = [
    Monomial::One,
    Monomial::T1,
    Monomial::T2,
    Monomial::T1Sq,
    Monomial::T1T2,
    Monomial::T2Sq,
    Monomial::T1SqT2,
    Monomial::T1T2Sq,
];

/// Which mapping scheme to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Bilinear,
    Serendipity8,
    Pascal6,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [
        SchemeKind::Bilinear,
        SchemeKind::Serendipity8,
        SchemeKind::Pascal6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Bilinear => "bilinear",
            SchemeKind::Serendipity8 => "serendipity8",
            SchemeKind::Pascal6 => "pascal6",
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(SchemeKind::Bilinear),
            "serendipity8" | "serendipity" => Ok(SchemeKind::Serendipity8),
            "pascal6" | "pascal" => Ok(SchemeKind::Pascal6),
            other => Err(Error::InvalidInput(format!("unknown scheme '{other}'"))),
        }
    }
}

/// A physical quadrilateral given by its four vertices, counterclockwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadGeometry<T> {
    vertices: [Point<T>; 4],
}

impl<T: Real> QuadGeometry<T> {
    /// Validates a counterclockwise, non-degenerate quadrilateral.
    pub fn new(vertices: [Point<T>; 4]) -> Result<Self> {
        let q = QuadGeometry { vertices };
        q.check_distinct()?;
        let area = q.signed_area();
        let d = q.diameter();
        if !(area > T::lit(1e-14) * d * d) {
            return Err(Error::DegenerateQuad(format!(
                "signed area {} is not positive (vertices must be counterclockwise)",
                area
            )));
        }
        Ok(q)
    }

    /// Like [`QuadGeometry::new`] but accepts clockwise input, reordering it to
    /// counterclockwise while keeping vertex (1) first. The flag reports
    /// whether a reorder happened.
    pub fn new_oriented(vertices: [Point<T>; 4]) -> Result<(Self, bool)> {
        let q = QuadGeometry { vertices };
        q.check_distinct()?;
        if q.signed_area() < T::zero() {
            let [a, b, c, d] = vertices;
            Ok((QuadGeometry::new([a, d, c, b])?, true))
        } else {
            Ok((QuadGeometry::new(vertices)?, false))
        }
    }

    fn check_distinct(&self) -> Result<()> {
        let d = self.diameter();
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::DegenerateQuad("all vertices coincide".into()));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if dist(self.vertices[i], self.vertices[j]) <= T::lit(1e-12) * d {
                    return Err(Error::DegenerateQuad(format!(
                        "vertices ({}) and ({}) coincide",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point<T>; 4] {
        &self.vertices
    }

    /// Shoelace area, positive for counterclockwise order.
    pub fn signed_area(&self) -> T {
        let v = &self.vertices;
        let mut s = T::zero();
        for i in 0..4 {
            let [x0, y0] = v[i];
            let [x1, y1] = v[(i + 1) % 4];
            s = s + x0 * y1 - x1 * y0;
        }
        s * T::lit(0.5)
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> T {
        let mut d = T::zero();
        for i in 0..4 {
            for j in i + 1..4 {
                d = d.max(dist(self.vertices[i], self.vertices[j]));
            }
        }
        d
    }

    /// Arithmetic mean of the vertices.
    pub fn centroid(&self) -> Point<T> {
        let q = T::lit(0.25);
        let s = self
            .vertices
            .iter()
            .fold([T::zero(); 2], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        [s[0] * q, s[1] * q]
    }

    /// Midpoints of edges (1)(2), (2)(3), (3)(4), (4)(1).
    pub fn edge_midpoints(&self) -> [Point<T>; 4] {
        let v = &self.vertices;
        let h = T::lit(0.5);
        std::array::from_fn(|i| {
            let a = v[i];
            let b = v[(i + 1) % 4];
            [(a[0] + b[0]) * h, (a[1] + b[1]) * h]
        })
    }

    pub fn translated(&self, by: Point<T>) -> Result<Self> {
        QuadGeometry::new(self.vertices.map(|p| [p[0] + by[0], p[1] + by[1]]))
    }
}

fn dist<T: Real>(a: Point<T>, b: Point<T>) -> T {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Natural coordinates of the interpolation nodes of a scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct NaturalNodeTable<T> {
    pub rows: Vec<Point<T>>,
}

impl<T: Real> NaturalNodeTable<T> {
    pub fn corners() -> Self {
        NaturalNodeTable {
            rows: CORNERS
                .iter()
                .map(|c| [T::lit(c[0]), T::lit(c[1])])
                .collect(),
        }
    }

    pub fn serendipity() -> Self {
        let mut t = Self::corners();
        t.rows
            .extend(MIDSIDES.iter().map(|c| [T::lit(c[0]), T::lit(c[1])]));
        t
    }

    /// Corners followed by the natural coordinates of p(5) and p(6).
    pub fn with_poles(p5: Point<T>, p6: Point<T>) -> Self {
        let mut t = Self::corners();
        t.rows.push(p5);
        t.rows.push(p6);
        t
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Polynomial coefficients of the map `x̃_i(θ) = Σ_q a_(q)^i M_q(θ)`.
///
/// `coeffs[q] = [a_(q)^1, a_(q)^2]` multiplies `basis[q]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedParams<T> {
    pub basis: Vec<Monomial>,
    pub coeffs: Vec<[T; 2]>,
}

impl<T: Real> GeneralizedParams<T> {
    pub fn eval(&self, t: Point<T>) -> Point<T> {
        let mut x = [T::zero(); 2];
        for (m, c) in self.basis.iter().zip(&self.coeffs) {
            let v = m.eval(t);
            x[0] = x[0] + c[0] * v;
            x[1] = x[1] + c[1] * v;
        }
        x
    }

    /// Covariant base-vector components, `g[α][i] = ∂x_i/∂θ_α`.
    pub fn gradient(&self, t: Point<T>) -> [[T; 2]; 2] {
        let mut g = [[T::zero(); 2]; 2];
        for (m, c) in self.basis.iter().zip(&self.coeffs) {
            let d = m.grad(t);
            for a in 0..2 {
                for i in 0..2 {
                    g[a][i] = g[a][i] + d[a] * c[i];
                }
            }
        }
        g
    }

    /// Second derivatives, `h[i][α][β] = ∂²x_i/∂θ_α∂θ_β`.
    pub fn second_derivatives(&self, t: Point<T>) -> [[[T; 2]; 2]; 2] {
        let mut h = [[[T::zero(); 2]; 2]; 2];
        for (m, c) in self.basis.iter().zip(&self.coeffs) {
            let d = m.hessian(t);
            for i in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        h[i][a][b] = h[i][a][b] + d[a][b] * c[i];
                    }
                }
            }
        }
        h
    }

    /// Coefficient of a monomial, zero when it is not part of the basis.
    pub fn coefficient(&self, m: Monomial) -> [T; 2] {
        self.basis
            .iter()
            .position(|&b| b == m)
            .map(|q| self.coeffs[q])
            .unwrap_or([T::zero(); 2])
    }

    /// Coefficients re-expressed over the six-term Pascal basis, when the
    /// cubic serendipity terms are absent or zero.
    pub fn pascal_coefficients(&self) -> [[T; 2]; 6] {
        PASCAL_BASIS.map(|m| self.coefficient(m))
    }

    /// Cartesian position of the geometric centre `x_(g)`.
    pub fn center(&self) -> Point<T> {
        self.coefficient(Monomial::One)
    }

    /// Base vectors at the centre, `(g_α^{x̃i})_(g)`.
    pub fn center_base_vectors(&self) -> [[T; 2]; 2] {
        self.gradient([T::zero(); 2])
    }

    /// Base-vector derivatives at the centre, `(g_{α,β}^{x̃i})_(g)`.
    pub fn center_base_vector_derivatives(&self) -> [[[T; 2]; 2]; 2] {
        self.second_derivatives([T::zero(); 2])
    }
}

/// Shape functions `N^(q)(θ) = Σ_m coeffs[q][m] · basis[m](θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeFunctionSet<T> {
    pub kind: SchemeKind,
    pub basis: Vec<Monomial>,
    pub coeffs: Vec<Vec<T>>,
    pub nodes: NaturalNodeTable<T>,
}

impl<T: Real> ShapeFunctionSet<T> {
    pub fn eval(&self, t: Point<T>) -> Vec<T> {
        let m: Vec<T> = self.basis.iter().map(|b| b.eval(t)).collect();
        self.coeffs
            .iter()
            .map(|row| row.iter().zip(&m).map(|(&c, &v)| c * v).sum())
            .collect()
    }

    /// Largest deviation of the coefficient column sums from `(1, 0, 0, ...)`.
    pub fn partition_residual(&self) -> T {
        let mut worst = T::zero();
        for (m, b) in self.basis.iter().enumerate() {
            let s: T = self.coeffs.iter().map(|row| row[m]).sum();
            let target = if *b == Monomial::One {
                T::one()
            } else {
                T::zero()
            };
            worst = worst.max((s - target).abs());
        }
        worst
    }

    /// Largest deviation of `N^(q)(θ_(p))` from `δ_qp` over the node table.
    pub fn kronecker_residual(&self) -> T {
        let mut worst = T::zero();
        for (p, &node) in self.nodes.rows.iter().enumerate() {
            for (q, v) in self.eval(node).into_iter().enumerate() {
                let target = if p == q { T::one() } else { T::zero() };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    /// Map parameters `a = Cᵀ x` for the given nodal Cartesian coordinates.
    pub fn params_for(&self, nodal: &[Point<T>]) -> GeneralizedParams<T> {
        let coeffs = (0..self.basis.len())
            .map(|m| {
                let mut a = [T::zero(); 2];
                for (row, x) in self.coeffs.iter().zip(nodal) {
                    a[0] = a[0] + row[m] * x[0];
                    a[1] = a[1] + row[m] * x[1];
                }
                a
            })
            .collect();
        GeneralizedParams {
            basis: self.basis.clone(),
            coeffs,
        }
    }
}

/// Cartesian and natural coordinates of the two poles. `None` in the
/// Cartesian slot means the edge pair is parallel (pole at infinity).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoleSet<T> {
    pub cartesian: [Option<Point<T>>; 2],
    pub natural: [Option<Point<T>>; 2],
}

impl<T: Real> PoleSet<T> {
    pub fn parallel_flags(&self) -> [bool; 2] {
        [self.cartesian[0].is_none(), self.cartesian[1].is_none()]
    }

    pub fn any_parallel(&self) -> bool {
        self.cartesian.iter().any(Option::is_none)
    }

    /// Cartesian and natural coordinates of both poles, when all are known.
    pub fn complete(&self) -> Option<PolePairs<T>> {
        Some((
            [self.cartesian[0]?, self.cartesian[1]?],
            [self.natural[0]?, self.natural[1]?],
        ))
    }

    pub fn with_natural(mut self, p5: Point<T>, p6: Point<T>) -> Self {
        self.natural = [Some(p5), Some(p6)];
        self
    }
}

pub type PolePairs<T> = ([Point<T>; 2], [Point<T>; 2]);

/// Jacobian of the map at one natural point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jacobian<T> {
    /// `covariant[α][i] = ∂x_i/∂θ_α`
    pub covariant: [[T; 2]; 2],
    pub det: T,
}

impl<T: Real> Jacobian<T> {
    pub fn from_covariant(covariant: [[T; 2]; 2]) -> Self {
        Jacobian {
            covariant,
            det: det2(&covariant),
        }
    }

    /// `contravariant[i][α] = ∂θ_α/∂x_i`, the inverse of the covariant matrix.
    pub fn contravariant(&self) -> Option<[[T; 2]; 2]> {
        inv2(&self.covariant)
    }
}

/// Why a Pascal scheme degraded to the bilinear map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PascalFallback {
    ParallelEdges,
    DegeneratePoles,
    PoleNonConvergence,
}

/// A constructed mapping for one quadrilateral.
#[derive(Clone, Debug, PartialEq)]
pub struct MappingScheme<T> {
    pub kind: SchemeKind,
    pub quad: QuadGeometry<T>,
    pub params: GeneralizedParams<T>,
    pub shapes: ShapeFunctionSet<T>,
    pub poles: Option<PoleSet<T>>,
    pub fallback: Option<PascalFallback>,
    diameter: T,
}

impl<T: Real> MappingScheme<T> {
    pub fn bilinear(quad: &QuadGeometry<T>) -> Self {
        let shapes = bilinear_shape_set();
        let params = bilinear_params(quad);
        Self::assemble(SchemeKind::Bilinear, quad, params, shapes, None, None)
    }

    pub fn serendipity(quad: &QuadGeometry<T>) -> Self {
        let shapes = serendipity_shape_set();
        let mids = quad.edge_midpoints();
        let mut nodal: Vec<Point<T>> = quad.vertices().to_vec();
        nodal.extend_from_slice(&mids);
        let params = shapes.params_for(&nodal);
        Self::assemble(SchemeKind::Serendipity8, quad, params, shapes, None, None)
    }

    /// Pascal scheme with poles from the default Newton start. Falls back to
    /// the bilinear map when a pole is at infinity, the pole configuration is
    /// ill-conditioned, or Newton fails; the reason is kept in `fallback`.
    pub fn pascal(quad: &QuadGeometry<T>) -> Self {
        let poles = compute_poles_cartesian(quad);
        if poles.any_parallel() {
            return Self::degraded(quad, poles, PascalFallback::ParallelEdges);
        }
        let resolved = match resolve_pole_naturals(quad, poles) {
            Ok(p) => p,
            Err(_) => return Self::degraded(quad, poles, PascalFallback::PoleNonConvergence),
        };
        match Self::pascal_with_poles(quad, &resolved) {
            Ok(s) => s,
            Err(_) => Self::degraded(quad, resolved, PascalFallback::DegeneratePoles),
        }
    }

    /// Pascal scheme with caller-supplied pole coordinates; no fallback.
    pub fn pascal_with_poles(quad: &QuadGeometry<T>, poles: &PoleSet<T>) -> Result<Self> {
        let (shapes, params) = pascal_shape_set(quad, poles)?;
        Ok(Self::assemble(
            SchemeKind::Pascal6,
            quad,
            params,
            shapes,
            Some(*poles),
            None,
        ))
    }

    pub fn build(quad: &QuadGeometry<T>, kind: SchemeKind) -> Self {
        match kind {
            SchemeKind::Bilinear => Self::bilinear(quad),
            SchemeKind::Serendipity8 => Self::serendipity(quad),
            SchemeKind::Pascal6 => Self::pascal(quad),
        }
    }

    fn degraded(quad: &QuadGeometry<T>, poles: PoleSet<T>, why: PascalFallback) -> Self {
        let mut s = Self::bilinear(quad);
        s.poles = Some(poles);
        s.fallback = Some(why);
        s
    }

    fn assemble(
        kind: SchemeKind,
        quad: &QuadGeometry<T>,
        params: GeneralizedParams<T>,
        shapes: ShapeFunctionSet<T>,
        poles: Option<PoleSet<T>>,
        fallback: Option<PascalFallback>,
    ) -> Self {
        MappingScheme {
            kind,
            quad: *quad,
            params,
            shapes,
            poles,
            fallback,
            diameter: quad.diameter(),
        }
    }

    pub fn diameter(&self) -> T {
        self.diameter
    }

    pub fn map_point(&self, t: Point<T>) -> Point<T> {
        self.params.eval(t)
    }

    pub fn jacobian(&self, t: Point<T>) -> Result<Jacobian<T>> {
        let j = Jacobian::from_covariant(self.params.gradient(t));
        let floor = T::lit(1e-12) * self.diameter * self.diameter;
        if !(j.det.abs() >= floor) {
            return Err(Error::SingularJacobian {
                det: j.det.to_f64_lossy(),
                theta: [t[0].to_f64_lossy(), t[1].to_f64_lossy()],
            });
        }
        Ok(j)
    }

    pub fn second_derivatives(&self, t: Point<T>) -> [[[T; 2]; 2]; 2] {
        self.params.second_derivatives(t)
    }

    /// Nodal Cartesian coordinates matching the shape-function node table.
    pub fn nodal_coordinates(&self) -> Vec<Point<T>> {
        self.shapes
            .nodes
            .rows
            .iter()
            .map(|&t| self.map_point(t))
            .collect()
    }
}

/// Bilinear generalized parameters (coefficients of `1, θ1, θ2, θ1θ2`).
pub fn bilinear_params<T: Real>(quad: &QuadGeometry<T>) -> GeneralizedParams<T> {
    let [x1, x2, x3, x4] = *quad.vertices();
    let q = T::lit(0.25);
    let comb = |s: [f64; 4]| -> [T; 2] {
        let w = s.map(T::lit);
        std::array::from_fn(|i| (w[0] * x1[i] + w[1] * x2[i] + w[2] * x3[i] + w[3] * x4[i]) * q)
    };
    GeneralizedParams {
        basis: BILINEAR_BASIS.to_vec(),
        coeffs: vec![
            comb([1.0, 1.0, 1.0, 1.0]),
            comb([-1.0, 1.0, 1.0, -1.0]),
            comb([-1.0, -1.0, 1.0, 1.0]),
            comb([1.0, -1.0, 1.0, -1.0]),
        ],
    }
}

/// Standard four-node shape functions `¼(1 ± θ1)(1 ± θ2)` in coefficient form.
pub fn bilinear_shape_set<T: Real>() -> ShapeFunctionSet<T> {
    let rows = [
        [1.0, -1.0, -1.0, 1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, 1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0, -1.0],
    ];
    ShapeFunctionSet {
        kind: SchemeKind::Bilinear,
        basis: BILINEAR_BASIS.to_vec(),
        coeffs: rows
            .iter()
            .map(|r| r.iter().map(|&v| T::lit(v * 0.25)).collect())
            .collect(),
        nodes: NaturalNodeTable::corners(),
    }
}

// Rows: nodes 1..8; columns: SERENDIPITY_BASIS.
const SERENDIPITY_COEFFS: [[f64; 8]; 8] = [
    [-0.25, 0.0, 0.0, 0.25, 0.25, 0.25, -0.25, -0.25],
    [-0.25, 0.0, 0.0, 0.25, -0.25, 0.25, -0.25, 0.25],
    [-0.25, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25, 0.25],
    [-0.25, 0.0, 0.0, 0.25, -0.25, 0.25, 0.25, -0.25],
    [0.5, 0.0, -0.5, -0.5, 0.0, 0.0, 0.5, 0.0],
    [0.5, 0.5, 0.0, 0.0, 0.0, -0.5, 0.0, -0.5],
    [0.5, 0.0, 0.5, -0.5, 0.0, 0.0, -0.5, 0.0],
    [0.5, -0.5, 0.0, 0.0, 0.0, -0.5, 0.0, 0.5],
];

pub fn serendipity_shape_set<T: Real>() -> ShapeFunctionSet<T> {
    ShapeFunctionSet {
        kind: SchemeKind::Serendipity8,
        basis: SERENDIPITY_BASIS.to_vec(),
        coeffs: SERENDIPITY_COEFFS
            .iter()
            .map(|r| r.iter().map(|&v| T::lit(v)).collect())
            .collect(),
        nodes: NaturalNodeTable::serendipity(),
    }
}

/// The eight serendipity shape functions at `θ`.
pub fn serendipity_shapes<T: Real>(t: Point<T>) -> [T; 8] {
    let m = SERENDIPITY_BASIS.map(|b| b.eval(t));
    std::array::from_fn(|q| {
        SERENDIPITY_COEFFS[q]
            .iter()
            .zip(&m)
            .map(|(&c, &v)| T::lit(c) * v)
            .sum()
    })
}

/// Intersections of the lines through opposite edges: p(5) from (1)(2) and
/// (3)(4), p(6) from (2)(3) and (4)(1). Natural coordinates are left unset.
pub fn compute_poles_cartesian<T: Real>(quad: &QuadGeometry<T>) -> PoleSet<T> {
    let v = quad.vertices();
    PoleSet {
        cartesian: [
            line_intersection(v[0], v[1], v[2], v[3]),
            line_intersection(v[1], v[2], v[3], v[0]),
        ],
        natural: [None, None],
    }
}

fn line_intersection<T: Real>(
    a: Point<T>,
    b: Point<T>,
    c: Point<T>,
    d: Point<T>,
) -> Option<Point<T>> {
    let d1 = [b[0] - a[0], b[1] - a[1]];
    let d2 = [d[0] - c[0], d[1] - c[1]];
    let cross = d1[0] * d2[1] - d1[1] * d2[0];
    let scale = d1[0].hypot(d1[1]) * d2[0].hypot(d2[1]);
    if cross.abs() <= T::lit(1e-12) * scale {
        return None;
    }
    // a + s d1 = c + u d2
    let r = [c[0] - a[0], c[1] - a[1]];
    let s = (r[0] * d2[1] - r[1] * d2[0]) / cross;
    Some([a[0] + s * d1[0], a[1] + s * d1[1]])
}

/// Starting point for the pole Newton iteration: the zero of the tangent
/// plane of the bilinear map at the centre, `x_(g) + g(0)ᵀ θ = pole`.
pub fn default_pole_guess<T: Real>(quad: &QuadGeometry<T>, pole: Point<T>) -> Result<Point<T>> {
    let p = bilinear_params(quad);
    let g = p.center_base_vectors();
    let c = p.center();
    // rows: x_i = c_i + Σ_α g[α][i] θ_α
    let a = [[g[0][0], g[1][0]], [g[0][1], g[1][1]]];
    solve2(&a, [pole[0] - c[0], pole[1] - c[1]])
        .ok_or_else(|| Error::DegenerateQuad("singular centre Jacobian".into()))
}

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_RESTARTS: usize = 4;

/// Natural coordinates of a pole, by Newton iteration on the bilinear map.
pub fn solve_pole_natural<T: Real>(
    quad: &QuadGeometry<T>,
    pole: Point<T>,
    guess: Point<T>,
) -> Result<Point<T>> {
    let params = bilinear_params(quad);
    let scale = quad.diameter().max(pole[0].hypot(pole[1]));
    let tol = T::iter_tol(1e-13) * scale;
    let mut last = T::infinity();
    let mut start = guess;
    for restart in 0..=NEWTON_RESTARTS {
        if restart > 0 {
            // deterministic perturbation away from the singular iterate
            let k = T::lit(restart as f64);
            start = [guess[0] + T::lit(0.37) * k, guess[1] - T::lit(0.29) * k];
        }
        let mut t = start;
        let mut singular = false;
        for _ in 0..NEWTON_MAX_ITER {
            let x = params.eval(t);
            let f = [x[0] - pole[0], x[1] - pole[1]];
            last = f[0].hypot(f[1]);
            if last <= tol {
                return Ok(t);
            }
            let g = params.gradient(t);
            let jac = [[g[0][0], g[1][0]], [g[0][1], g[1][1]]];
            let det = det2(&jac);
            if det.abs() <= T::epsilon() * scale * scale {
                singular = true;
                break;
            }
            match solve2(&jac, f) {
                Some(dt) => t = [t[0] - dt[0], t[1] - dt[1]],
                None => {
                    singular = true;
                    break;
                }
            }
            if !t[0].is_finite() || !t[1].is_finite() {
                break;
            }
        }
        if !singular {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: NEWTON_MAX_ITER,
        residual: last.to_f64_lossy(),
    })
}

/// Fills in both pole natural coordinates from the default starting guess.
pub fn resolve_pole_naturals<T: Real>(
    quad: &QuadGeometry<T>,
    poles: PoleSet<T>,
) -> Result<PoleSet<T>> {
    let mut out = poles;
    for k in 0..2 {
        let p = poles.cartesian[k].ok_or(Error::ParallelPole)?;
        let guess = default_pole_guess(quad, p)?;
        out.natural[k] = Some(solve_pole_natural(quad, p, guess)?);
    }
    Ok(out)
}

/// Rows of the 6×6 interpolation matrix: the Pascal basis at each node.
pub fn pascal_interpolation_matrix<T: Real>(nodes: &NaturalNodeTable<T>) -> Result<[[T; 6]; 6]> {
    if nodes.len() != 6 {
        return Err(Error::InvalidInput(format!(
            "Pascal interpolation needs 6 nodes, got {}",
            nodes.len()
        )));
    }
    Ok(std::array::from_fn(|p| {
        PASCAL_BASIS.map(|m| m.eval(nodes.rows[p]))
    }))
}

/// Condition estimate above which a pole configuration is rejected.
pub const POLE_CONDITION_LIMIT: f64 = 1e12;

/// Pascal shape functions and map parameters: `B = A⁻¹`, `N^(q) = M^(p) B_(p)^(q)`,
/// `a = B x`.
pub fn pascal_shape_set<T: Real>(
    quad: &QuadGeometry<T>,
    poles: &PoleSet<T>,
) -> Result<(ShapeFunctionSet<T>, GeneralizedParams<T>)> {
    let (cart, nat) = poles.complete().ok_or(Error::ParallelPole)?;
    let nodes = NaturalNodeTable::with_poles(nat[0], nat[1]);
    let a = pascal_interpolation_matrix(&nodes)?;
    let b = invert(&a).ok_or(Error::DegeneratePoles(f64::INFINITY))?;
    let cond = cond1(&a, &b);
    if !(cond.to_f64_lossy() <= POLE_CONDITION_LIMIT) {
        return Err(Error::DegeneratePoles(cond.to_f64_lossy()));
    }
    let coeffs: Vec<Vec<T>> = (0..6).map(|q| (0..6).map(|m| b[m][q]).collect()).collect();
    let shapes = ShapeFunctionSet {
        kind: SchemeKind::Pascal6,
        basis: PASCAL_BASIS.to_vec(),
        coeffs,
        nodes,
    };
    let mut nodal: Vec<Point<T>> = quad.vertices().to_vec();
    nodal.extend_from_slice(&cart);
    let params = shapes.params_for(&nodal);
    Ok((shapes, params))
}

/// Condition estimate of the interpolation matrix for a resolved pole set.
pub fn pole_condition<T: Real>(poles: &PoleSet<T>) -> Option<T> {
    let (_, nat) = poles.complete()?;
    let a = pascal_interpolation_matrix(&NaturalNodeTable::with_poles(nat[0], nat[1])).ok()?;
    let b = invert(&a)?;
    Some(cond1(&a, &b))
}
