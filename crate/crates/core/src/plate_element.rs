//! Twelve-DOF thin-plate bending element on a mapped quadrilateral.
//!
//! Nodal DOFs are `(u, φ1, φ2)` at nodes i, j, k, l (the four corners,
//! counterclockwise from θ = (−1, −1)). Rotations live in the element's
//! natural frame: `φ1 = ∂w/∂θ2` and `φ2 = −∂w/∂θ1`.
//!
//! Edge rotations are Hermite-cubic derivatives of the edge deflection,
//! blended linearly between opposite edges. Curvatures are the covariant
//! components of the Kirchhoff curvature tensor, and the rigidity is the
//! isotropic Cartesian law pushed to natural indices.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mapping::{Jacobian, MappingScheme, Point, CORNERS};
use crate::quadrature::GaussRule;
use crate::scalar::Real;

pub const NDOF: usize = 12;

pub type Mat12<T> = [[T; NDOF]; NDOF];
pub type Row12<T> = [T; NDOF];

/// Isotropic plate material.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateMaterial<T> {
    #[serde(rename = "E")]
    pub e: T,
    pub nu: T,
    pub t: T,
    pub rho: T,
}

impl<T: Real> PlateMaterial<T> {
    pub fn new(e: T, nu: T, t: T, rho: T) -> crate::Result<Self> {
        let m = PlateMaterial { e, nu, t, rho };
        m.validate()?;
        Ok(m)
    }

    /// E = 1365, ν = 0.3, t = 0.2, ρ = 5: flexural rigidity 1 and ρt = 1.
    pub fn unit() -> Self {
        PlateMaterial {
            e: T::lit(1365.0),
            nu: T::lit(0.3),
            t: T::lit(0.2),
            rho: T::lit(5.0),
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.e > T::zero()
            && self.t > T::zero()
            && self.rho > T::zero()
            && self.nu >= T::zero()
            && self.nu < T::lit(0.5);
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidInput(format!(
                "material needs E > 0, t > 0, rho > 0, 0 <= nu < 0.5 (got E={}, nu={}, t={}, rho={})",
                self.e, self.nu, self.t, self.rho
            )))
        }
    }

    /// `D = E t³ / (12 (1 − ν²))`
    pub fn rigidity(&self) -> T {
        self.e * self.t.powi(3) / (T::lit(12.0) * (T::one() - self.nu * self.nu))
    }

    pub fn mass_per_area(&self) -> T {
        self.rho * self.t
    }

    /// Rotary inertia per unit area, `ρ t³ / 12`.
    pub fn rotary_inertia(&self) -> T {
        self.rho * self.t.powi(3) / T::lit(12.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HermiteDirection {
    /// Along θ1, slope DOF is φ2 = −∂w/∂θ1.
    First,
    /// Along θ2, slope DOF is φ1 = ∂w/∂θ2.
    Second,
}

/// Hermite cubics on [−1, 1] with first and second derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermiteBasis<T> {
    pub h: [T; 4],
    pub dh: [T; 4],
    pub d2h: [T; 4],
}

/// `h1, h3` interpolate the end values, `h2, h4` the end slopes. The second
/// direction flips the sign of the slope functions.
pub fn hermite_basis<T: Real>(t: T, dir: HermiteDirection) -> HermiteBasis<T> {
    let q = T::lit(0.25);
    let (one, two, three, six) = (T::one(), T::lit(2.0), T::lit(3.0), T::lit(6.0));
    let t2 = t * t;
    let t3 = t2 * t;
    let s = match dir {
        HermiteDirection::First => one,
        HermiteDirection::Second => -one,
    };
    HermiteBasis {
        h: [
            (two - three * t + t3) * q,
            s * (-one + t + t2 - t3) * q,
            (two + three * t - t3) * q,
            s * (one + t - t2 - t3) * q,
        ],
        dh: [
            (-three + three * t2) * q,
            s * (one + two * t - three * t2) * q,
            (three - three * t2) * q,
            s * (one - two * t - three * t2) * q,
        ],
        d2h: [
            six * t * q,
            s * (two - six * t) * q,
            -six * t * q,
            s * (-two - six * t) * q,
        ],
    }
}

// Column layout of the four boundary rows: (columns, sign, direction).
const ROW_IJ: ([usize; 4], bool) = ([0, 2, 3, 5], true);
const ROW_JK: ([usize; 4], bool) = ([3, 4, 6, 7], false);
const ROW_LK: ([usize; 4], bool) = ([9, 11, 6, 8], true);
const ROW_IL: ([usize; 4], bool) = ([0, 1, 9, 10], false);

fn edge_rows<T: Real>(theta: Point<T>, order: usize) -> [Row12<T>; 4] {
    let a = hermite_basis(theta[0], HermiteDirection::First);
    let b = hermite_basis(theta[1], HermiteDirection::Second);
    let pick = |hb: &HermiteBasis<T>| if order == 0 { hb.dh } else { hb.d2h };
    let (da, db) = (pick(&a), pick(&b));
    let mut rows = [[T::zero(); NDOF]; 4];
    for (r, ((cols, negate), d)) in [(ROW_IJ, da), (ROW_JK, db), (ROW_LK, da), (ROW_IL, db)]
        .into_iter()
        .enumerate()
    {
        for (c, v) in cols.iter().zip(d) {
            rows[r][*c] = if negate { -v } else { v };
        }
    }
    rows
}

/// Rows `φ2^{ij}(θ1)`, `φ1^{jk}(θ2)`, `φ2^{lk}(θ1)`, `φ1^{il}(θ2)`.
pub fn boundary_rotation_matrix<T: Real>(theta: Point<T>) -> [Row12<T>; 4] {
    edge_rows(theta, 0)
}

/// Derivatives of the boundary rows with respect to their own edge parameter.
pub fn boundary_rotation_derivative<T: Real>(theta: Point<T>) -> [Row12<T>; 4] {
    edge_rows(theta, 1)
}

fn combine<T: Real>(a: T, ra: &Row12<T>, b: T, rb: &Row12<T>) -> Row12<T> {
    std::array::from_fn(|c| a * ra[c] + b * rb[c])
}

/// Blended rotation field; row 0 is φ1, row 1 is φ2.
pub fn rotation_field<T: Real>(theta: Point<T>) -> [Row12<T>; 2] {
    let [t1, t2] = theta;
    let r = boundary_rotation_matrix(theta);
    let h = T::lit(0.5);
    [
        combine(h * (T::one() - t1), &r[3], h * (T::one() + t1), &r[1]),
        combine(h * (T::one() - t2), &r[0], h * (T::one() + t2), &r[2]),
    ]
}

/// `g[r][α] = ∂φ_r/∂θ_α` as rows over the element DOFs.
pub fn rotation_field_gradient<T: Real>(theta: Point<T>) -> [[Row12<T>; 2]; 2] {
    let [t1, t2] = theta;
    let r = boundary_rotation_matrix(theta);
    let d = boundary_rotation_derivative(theta);
    let h = T::lit(0.5);
    let one = T::one();
    [
        [
            combine(-h, &r[3], h, &r[1]),
            combine(h * (one - t1), &d[3], h * (one + t1), &d[1]),
        ],
        [
            combine(h * (one - t2), &d[0], h * (one + t2), &d[2]),
            combine(-h, &r[0], h, &r[2]),
        ],
    ]
}

/// Curvature rows `(χ11, χ22, 2χ12)` from the rotation gradient alone:
/// `χ11 = ∂φ2/∂θ1`, `χ22 = −∂φ1/∂θ2`, `2χ12 = ∂φ2/∂θ2 − ∂φ1/∂θ1`.
/// On an affine element this equals `−∂²w/∂θα∂θβ`.
pub fn curvature_operator<T: Real>(theta: Point<T>) -> [Row12<T>; 3] {
    let g = rotation_field_gradient(theta);
    let one = T::one();
    [
        g[1][0],
        combine(-one, &g[0][1], T::zero(), &g[0][1]),
        combine(one, &g[1][1], -one, &g[0][0]),
    ]
}

/// Cartesian deflection gradient `∂w/∂x_k` as rows, `w,k = g^α_k ∂w/∂θα`
/// with `∂w/∂θ1 = −φ2`, `∂w/∂θ2 = φ1`.
pub fn cartesian_slope_rows<T: Real>(theta: Point<T>, jac: &Jacobian<T>) -> Result<[Row12<T>; 2]> {
    let inv = jac.contravariant().ok_or(crate::Error::SingularJacobian {
        det: jac.det.to_f64_lossy(),
        theta: [theta[0].to_f64_lossy(), theta[1].to_f64_lossy()],
    })?;
    let rot = rotation_field(theta);
    let one = T::one();
    let dw = [combine(-one, &rot[1], T::zero(), &rot[1]), rot[0]];
    Ok(std::array::from_fn(|k| {
        combine(inv[k][0], &dw[0], inv[k][1], &dw[1])
    }))
}

/// Covariant curvature rows on the mapped element. Adds the connection term
/// `x^k_{,αβ} w_{,k}` to [`curvature_operator`], so the result transforms as
/// a tensor and reduces to the plain operator when the map is affine.
pub fn covariant_curvature_operator<T: Real>(
    scheme: &MappingScheme<T>,
    theta: Point<T>,
) -> Result<[Row12<T>; 3]> {
    let jac = scheme.jacobian(theta)?;
    covariant_curvature_with(scheme, theta, &jac)
}

fn covariant_curvature_with<T: Real>(
    scheme: &MappingScheme<T>,
    theta: Point<T>,
    jac: &Jacobian<T>,
) -> Result<[Row12<T>; 3]> {
    let mut b = curvature_operator(theta);
    let x2 = scheme.second_derivatives(theta);
    let wk = cartesian_slope_rows(theta, jac)?;
    let two = T::lit(2.0);
    for (row, (a, bb, f)) in [(0, 0, T::one()), (1, 1, T::one()), (0, 1, two)]
        .into_iter()
        .enumerate()
    {
        for k in 0..2 {
            let c = f * x2[k][a][bb];
            if c != T::zero() {
                for d in 0..NDOF {
                    b[row][d] = b[row][d] + c * wk[k][d];
                }
            }
        }
    }
    Ok(b)
}

const VOIGT: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];

/// Isotropic Kirchhoff rigidity `E^{ijkl} = D[ν δij δkl + (1−ν)/2 (δik δjl + δil δjk)]`.
pub fn cartesian_rigidity_tensor<T: Real>(material: &PlateMaterial<T>) -> [[[[T; 2]; 2]; 2]; 2] {
    let d = material.rigidity();
    let nu = material.nu;
    let half = (T::one() - nu) * T::lit(0.5);
    let kd = |a: usize, b: usize| if a == b { T::one() } else { T::zero() };
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                std::array::from_fn(|l| {
                    d * (nu * kd(i, j) * kd(k, l)
                        + half * (kd(i, k) * kd(j, l) + kd(i, l) * kd(j, k)))
                })
            })
        })
    })
}

/// Natural rigidity in Voigt form `(11, 22, 12)`, conjugate to the strain
/// vector `(χ11, χ22, 2χ12)`.
pub fn natural_rigidity<T: Real>(
    material: &PlateMaterial<T>,
    jac: &Jacobian<T>,
) -> Result<[[T; 3]; 3]> {
    let g = jac.contravariant().ok_or(crate::Error::SingularJacobian {
        det: jac.det.to_f64_lossy(),
        theta: [f64::NAN, f64::NAN],
    })?;
    let e = cartesian_rigidity_tensor(material);
    let nat = |a: usize, b: usize, c: usize, d: usize| {
        let mut s = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        s = s + g[i][a] * g[j][b] * g[k][c] * g[l][d] * e[i][j][k][l];
                    }
                }
            }
        }
        s
    };
    Ok(std::array::from_fn(|p| {
        std::array::from_fn(|q| nat(VOIGT[p].0, VOIGT[p].1, VOIGT[q].0, VOIGT[q].1))
    }))
}

/// Area fractions of the four natural quadrants, ordered i, j, k, l.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubareaWeights<T> {
    pub weights: [T; 4],
}

/// Integrates det J over each natural quadrant. Order 4 Gauss is exact for
/// the polynomial Jacobians of straight-edged maps.
pub fn subarea_weights<T: Real>(scheme: &MappingScheme<T>) -> Result<SubareaWeights<T>> {
    let rule = GaussRule::<T>::new(4)?;
    let h = T::lit(0.5);
    let q = T::lit(0.25);
    let mut areas = [T::zero(); 4];
    for (p, c) in CORNERS.iter().enumerate() {
        let s = [T::lit(c[0]), T::lit(c[1])];
        for (t, w) in rule.points_2d() {
            let theta = [s[0] * (T::one() + t[0]) * h, s[1] * (T::one() + t[1]) * h];
            areas[p] = areas[p] + w * q * scheme.jacobian(theta)?.det;
        }
    }
    let total: T = areas.iter().copied().sum();
    Ok(SubareaWeights {
        weights: areas.map(|a| a / total),
    })
}

/// Affine deflection `u(θ) = Σ (A_p/A) u_p + θ1 ∂u/∂θ1 + θ2 ∂u/∂θ2`, the
/// slopes taken from the rotation field at the centre.
pub fn deflection_row<T: Real>(theta: Point<T>, weights: &SubareaWeights<T>) -> Row12<T> {
    let r0 = rotation_field([T::zero(); 2]);
    let mut row = combine(-theta[0], &r0[1], theta[1], &r0[0]);
    for (p, w) in weights.weights.iter().enumerate() {
        row[3 * p] = row[3 * p] + *w;
    }
    row
}

/// Stiffness, mass and load for one element, all in the natural DOF frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementMatrices<T> {
    pub k: Mat12<T>,
    pub m: Mat12<T>,
    pub f: Row12<T>,
}

fn zeros12<T: Real>() -> Mat12<T> {
    [[T::zero(); NDOF]; NDOF]
}

fn add_outer<T: Real>(m: &mut Mat12<T>, s: T, a: &Row12<T>, b: &Row12<T>) {
    for i in 0..NDOF {
        let ai = s * a[i];
        if ai == T::zero() {
            continue;
        }
        for j in 0..NDOF {
            m[i][j] = m[i][j] + ai * b[j];
        }
    }
}

/// `K = ∫ Bᵀ E_nat B det J dθ`
pub fn element_stiffness<T: Real>(
    scheme: &MappingScheme<T>,
    material: &PlateMaterial<T>,
    rule: &GaussRule<T>,
) -> Result<Mat12<T>> {
    let mut k = zeros12();
    for (t, w) in rule.points_2d() {
        let jac = scheme.jacobian(t)?;
        let b = covariant_curvature_with(scheme, t, &jac)?;
        let c = natural_rigidity(material, &jac)?;
        let s = w * jac.det;
        for p in 0..3 {
            for q in 0..3 {
                if c[p][q] != T::zero() {
                    add_outer(&mut k, s * c[p][q], &b[p], &b[q]);
                }
            }
        }
    }
    symmetrize(&mut k);
    Ok(k)
}

/// Consistent mass from the deflection row, plus optional rotary inertia on
/// the Cartesian slopes.
pub fn element_mass<T: Real>(
    scheme: &MappingScheme<T>,
    material: &PlateMaterial<T>,
    rule: &GaussRule<T>,
    rotary: bool,
) -> Result<Mat12<T>> {
    let weights = subarea_weights(scheme)?;
    let rho_t = material.mass_per_area();
    let r = material.rotary_inertia();
    let mut m = zeros12();
    for (t, w) in rule.points_2d() {
        let jac = scheme.jacobian(t)?;
        let s = w * jac.det;
        let nu = deflection_row(t, &weights);
        add_outer(&mut m, s * rho_t, &nu, &nu);
        if rotary {
            for g in cartesian_slope_rows(t, &jac)? {
                add_outer(&mut m, s * r, &g, &g);
            }
        }
    }
    symmetrize(&mut m);
    Ok(m)
}

/// `f = ∫ q̄ N_uᵀ det J dθ` for a uniform pressure `q̄`.
pub fn element_load<T: Real>(
    scheme: &MappingScheme<T>,
    rule: &GaussRule<T>,
    qbar: T,
) -> Result<Row12<T>> {
    let weights = subarea_weights(scheme)?;
    let mut f = [T::zero(); NDOF];
    for (t, w) in rule.points_2d() {
        let s = w * scheme.jacobian(t)?.det * qbar;
        let nu = deflection_row(t, &weights);
        for d in 0..NDOF {
            f[d] = f[d] + s * nu[d];
        }
    }
    Ok(f)
}

pub fn element_matrices<T: Real>(
    scheme: &MappingScheme<T>,
    material: &PlateMaterial<T>,
    rule: &GaussRule<T>,
    rotary: bool,
    qbar: T,
) -> Result<ElementMatrices<T>> {
    Ok(ElementMatrices {
        k: element_stiffness(scheme, material, rule)?,
        m: element_mass(scheme, material, rule, rotary)?,
        f: element_load(scheme, rule, qbar)?,
    })
}

fn symmetrize<T: Real>(m: &mut Mat12<T>) {
    let h = T::lit(0.5);
    for i in 0..NDOF {
        for j in i + 1..NDOF {
            let v = (m[i][j] + m[j][i]) * h;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
}

/// 2×2 map from Cartesian rotations `(∂w/∂y, −∂w/∂x)` to natural rotations
/// at a corner: `R J Rᵀ` with `R = [[0, 1], [−1, 0]]`.
pub fn nodal_rotation_transform<T: Real>(jac: &Jacobian<T>) -> [[T; 2]; 2] {
    let j = jac.covariant;
    [[j[1][1], -j[1][0]], [-j[0][1], j[0][0]]]
}

/// Block-diagonal transform `d_natural = T d_cartesian` built from the
/// Jacobian at each corner.
pub fn element_transform<T: Real>(scheme: &MappingScheme<T>) -> Result<Mat12<T>> {
    let mut t = zeros12();
    for (p, c) in CORNERS.iter().enumerate() {
        let jac = scheme.jacobian([T::lit(c[0]), T::lit(c[1])])?;
        let r = nodal_rotation_transform(&jac);
        t[3 * p][3 * p] = T::one();
        for a in 0..2 {
            for b in 0..2 {
                t[3 * p + 1 + a][3 * p + 1 + b] = r[a][b];
            }
        }
    }
    Ok(t)
}

/// `Tᵀ A T`
pub fn congruence<T: Real>(a: &Mat12<T>, t: &Mat12<T>) -> Mat12<T> {
    let mut at = zeros12();
    for i in 0..NDOF {
        for j in 0..NDOF {
            at[i][j] = (0..NDOF).map(|k| a[i][k] * t[k][j]).sum();
        }
    }
    let mut out = zeros12();
    for i in 0..NDOF {
        for j in 0..NDOF {
            out[i][j] = (0..NDOF).map(|k| t[k][i] * at[k][j]).sum();
        }
    }
    out
}

/// `Tᵀ f`
pub fn transform_load<T: Real>(f: &Row12<T>, t: &Mat12<T>) -> Row12<T> {
    std::array::from_fn(|i| (0..NDOF).map(|k| t[k][i] * f[k]).sum())
}
