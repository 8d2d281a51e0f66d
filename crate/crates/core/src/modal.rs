//! Mesh assembly, boundary conditions and the generalized eigenproblem.
//!
//! Global nodal DOFs are `(u, φx, φy)` with Cartesian rotations
//! `φx = ∂w/∂y`, `φy = −∂w/∂x`. Element matrices are computed in each
//! element's natural frame and rotated to the Cartesian frame with the
//! Jacobian at every corner before scattering.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{MappingScheme, Point, QuadGeometry, SchemeKind, CORNERS};
use crate::plate_element::{
    congruence, deflection_row, element_matrices, element_transform, subarea_weights,
    transform_load, ElementMatrices, PlateMaterial,
};
use crate::quadrature::GaussRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Clamped,
    SimplySupported,
    Free,
}

impl Condition {
    /// Which of `(u, φx, φy)` are removed.
    pub fn constrained(self) -> [bool; 3] {
        match self {
            Condition::Clamped => [true; 3],
            Condition::SimplySupported => [true, false, false],
            Condition::Free => [false; 3],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Condition::Clamped => "clamped",
            Condition::SimplySupported => "simply_supported",
            Condition::Free => "free",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySet {
    pub name: String,
    pub condition: Condition,
    pub nodes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<Point<f64>>,
    pub elements: Vec<[usize; 4]>,
    #[serde(default)]
    pub boundary_sets: Vec<BoundarySet>,
}

impl Mesh {
    pub fn new(nodes: Vec<Point<f64>>, elements: Vec<[usize; 4]>) -> Result<Self> {
        let m = Mesh {
            nodes,
            elements,
            boundary_sets: Vec::new(),
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks indices, element orientation, and that every interior edge is
    /// shared by exactly two elements traversing it in opposite directions.
    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no elements".into()));
        }
        let n = self.nodes.len();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, el) in self.elements.iter().enumerate() {
            if let Some(&bad) = el.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidMesh(format!(
                    "element {e} references node {bad} but the mesh has {n} nodes"
                )));
            }
            self.element_quad(e)
                .map_err(|err| Error::InvalidMesh(format!("element {e}: {err}")))?;
            for s in 0..4 {
                let key = (el[s], el[(s + 1) % 4]);
                if let Some(prev) = directed.insert(key, e) {
                    return Err(Error::InvalidMesh(format!(
                        "elements {prev} and {e} traverse edge {}-{} in the same direction",
                        key.0, key.1
                    )));
                }
            }
        }
        for set in &self.boundary_sets {
            if let Some(&bad) = set.nodes.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidMesh(format!(
                    "boundary set '{}' references node {bad} but the mesh has {n} nodes",
                    set.name
                )));
            }
        }
        Ok(())
    }

    pub fn element_quad(&self, e: usize) -> Result<QuadGeometry<f64>> {
        QuadGeometry::new(self.elements[e].map(|v| self.nodes[v]))
    }

    pub fn add_boundary(&mut self, name: &str, condition: Condition, mut nodes: Vec<usize>) {
        nodes.sort_unstable();
        nodes.dedup();
        self.boundary_sets.push(BoundarySet {
            name: name.to_string(),
            condition,
            nodes,
        });
    }

    /// Nodes within `tol` of the closed segment `a`–`b`.
    pub fn nodes_on_segment(&self, a: Point<f64>, b: Point<f64>, tol: f64) -> Vec<usize> {
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, p)| {
                let r = [p[0] - a[0], p[1] - a[1]];
                let s = ((r[0] * d[0] + r[1] * d[1]) / len2).clamp(0.0, 1.0);
                let q = [a[0] + s * d[0] - p[0], a[1] + s * d[1] - p[1]];
                q[0].hypot(q[1]) <= tol
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Nodes on edges used by a single element.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for el in &self.elements {
            for s in 0..4 {
                let (a, b) = (el[s], el[(s + 1) % 4]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut out: Vec<usize> = count
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .flat_map(|((a, b), _)| [a, b])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.nodes {
            for b in &self.nodes {
                d = d.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        d
    }

    pub fn area(&self) -> f64 {
        (0..self.elements.len())
            .filter_map(|e| self.element_quad(e).ok())
            .map(|q| q.signed_area())
            .sum()
    }
}

/// Numerical choices for element integration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub scheme: SchemeKind,
    pub gauss: usize,
    pub rotary: bool,
    /// Uniform pressure for the load vector.
    pub qbar: f64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            scheme: SchemeKind::Pascal6,
            gauss: 3,
            rotary: false,
            qbar: 0.0,
        }
    }
}

/// Global matrices. `dof_map[node][c]` is the row of DOF `c` of `node`, or
/// `None` when it has been eliminated.
#[derive(Clone, Debug)]
pub struct GlobalSystem {
    pub k: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub f: DVector<f64>,
    pub dof_map: Vec<[Option<usize>; 3]>,
    /// Elements whose Pascal mapping fell back to bilinear.
    pub fallbacks: usize,
}

impl GlobalSystem {
    pub fn dimension(&self) -> usize {
        self.k.nrows()
    }

    /// Expands a reduced vector to all `3 × nodes` DOFs, zero where eliminated.
    pub fn expand(&self, reduced: &DVector<f64>) -> Vec<f64> {
        let mut out = vec![0.0; 3 * self.dof_map.len()];
        for (n, map) in self.dof_map.iter().enumerate() {
            for c in 0..3 {
                if let Some(r) = map[c] {
                    out[3 * n + c] = reduced[r];
                }
            }
        }
        out
    }
}

/// Element matrices in the Cartesian nodal frame.
pub fn global_element_matrices(
    quad: &QuadGeometry<f64>,
    material: &PlateMaterial<f64>,
    opts: &AssemblyOptions,
) -> Result<(ElementMatrices<f64>, bool)> {
    let scheme = MappingScheme::build(quad, opts.scheme);
    // det J is bilinear in θ for straight edges, so the corners bound it
    let floor = 1e-12 * quad.diameter().powi(2);
    for c in CORNERS {
        let det = scheme.jacobian(c).map_or(0.0, |j| j.det);
        if det <= floor {
            return Err(Error::SingularJacobian { det, theta: c });
        }
    }
    let rule = GaussRule::new(opts.gauss)?;
    let em = element_matrices(&scheme, material, &rule, opts.rotary, opts.qbar)?;
    let t = element_transform(&scheme)?;
    Ok((
        ElementMatrices {
            k: congruence(&em.k, &t),
            m: congruence(&em.m, &t),
            f: transform_load(&em.f, &t),
        },
        scheme.fallback.is_some(),
    ))
}

/// Element matrices are computed in parallel; the scatter runs in element
/// order so the result does not depend on thread scheduling.
pub fn assemble(
    mesh: &Mesh,
    material: &PlateMaterial<f64>,
    opts: &AssemblyOptions,
) -> Result<GlobalSystem> {
    mesh.validate()?;
    material.validate()?;
    GaussRule::<f64>::new(opts.gauss)?;
    let results: Vec<Result<(ElementMatrices<f64>, bool)>> = (0..mesh.elements.len())
        .into_par_iter()
        .map(|e| global_element_matrices(&mesh.element_quad(e)?, material, opts))
        .collect();
    // first failure in element order, independent of scheduling
    let locals = results.into_iter().collect::<Result<Vec<_>>>()?;
    let n = 3 * mesh.nodes.len();
    let mut k = DMatrix::zeros(n, n);
    let mut m = DMatrix::zeros(n, n);
    let mut f = DVector::zeros(n);
    let mut fallbacks = 0;
    for (el, (em, fell_back)) in mesh.elements.iter().zip(&locals) {
        fallbacks += usize::from(*fell_back);
        let dofs: Vec<usize> = el
            .iter()
            .flat_map(|&v| [3 * v, 3 * v + 1, 3 * v + 2])
            .collect();
        for (a, &ga) in dofs.iter().enumerate() {
            f[ga] += em.f[a];
            for (b, &gb) in dofs.iter().enumerate() {
                k[(ga, gb)] += em.k[a][b];
                m[(ga, gb)] += em.m[a][b];
            }
        }
    }
    Ok(GlobalSystem {
        k,
        m,
        f,
        dof_map: (0..mesh.nodes.len())
            .map(|v| [Some(3 * v), Some(3 * v + 1), Some(3 * v + 2)])
            .collect(),
        fallbacks,
    })
}

/// Removes constrained DOFs named by the mesh's boundary sets.
pub fn apply_bcs(system: &GlobalSystem, mesh: &Mesh) -> Result<GlobalSystem> {
    let mut seen: Vec<Option<(Condition, &str)>> = vec![None; mesh.nodes.len()];
    let mut fixed = vec![[false; 3]; mesh.nodes.len()];
    for set in &mesh.boundary_sets {
        for &v in &set.nodes {
            if v >= mesh.nodes.len() {
                return Err(Error::InvalidMesh(format!(
                    "boundary set '{}' references node {v}",
                    set.name
                )));
            }
            if set.condition == Condition::Free {
                continue;
            }
            if let Some((c, name)) = seen[v] {
                if c != set.condition {
                    return Err(Error::ConflictingBoundary {
                        node: v,
                        first: format!("{name}: {}", c.name()),
                        second: format!("{}: {}", set.name, set.condition.name()),
                    });
                }
            }
            seen[v] = Some((set.condition, &set.name));
            for (slot, c) in fixed[v].iter_mut().zip(set.condition.constrained()) {
                *slot |= c;
            }
        }
    }
    let mut keep = Vec::new();
    let mut dof_map = vec![[None; 3]; mesh.nodes.len()];
    for (v, map) in system.dof_map.iter().enumerate() {
        for c in 0..3 {
            if let Some(r) = map[c] {
                if !fixed[v][c] {
                    dof_map[v][c] = Some(keep.len());
                    keep.push(r);
                }
            }
        }
    }
    let pick =
        |a: &DMatrix<f64>| DMatrix::from_fn(keep.len(), keep.len(), |i, j| a[(keep[i], keep[j])]);
    Ok(GlobalSystem {
        k: pick(&system.k),
        m: pick(&system.m),
        f: DVector::from_fn(keep.len(), |i, _| system.f[keep[i]]),
        dof_map,
        fallbacks: system.fallbacks,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `ω a² √(ρt/D)`
    Plain,
    /// `ω a² √(ρt/D) / π²`
    PerPi2,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Normalization::Plain),
            "per_pi2" | "per-pi2" => Ok(Normalization::PerPi2),
            other => Err(Error::InvalidInput(format!(
                "unknown normalization '{other}'"
            ))),
        }
    }
}

pub fn frequency_parameter(
    omega: f64,
    a: f64,
    material: &PlateMaterial<f64>,
    norm: Normalization,
) -> f64 {
    let p = omega * a * a * (material.mass_per_area() / material.rigidity()).sqrt();
    match norm {
        Normalization::Plain => p,
        Normalization::PerPi2 => p / (std::f64::consts::PI * std::f64::consts::PI),
    }
}

/// Eigenpairs of `K φ = λ M φ`, ascending, with `φᵀ M φ = 1`.
#[derive(Clone, Debug)]
pub struct ModalSpectrum {
    /// `λ = ω²`
    pub eigenvalues: Vec<f64>,
    pub omega: Vec<f64>,
    /// Reduced mode vectors, one column per mode.
    pub modes: DMatrix<f64>,
    /// Spectral shift used for the factorization.
    pub shift: f64,
    /// Eigenvalues at infinity dropped because `M` is singular.
    pub infinite_modes: usize,
}

impl ModalSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn mode(&self, i: usize) -> DVector<f64> {
        self.modes.column(i).into_owned()
    }

    /// `‖Kφ − λMφ‖ / max(‖Kφ‖, |λ| ‖Mφ‖, 1e−8 ‖K‖_F ‖φ‖)` per mode. The floor
    /// turns the measure into a normwise backward error for modes in the
    /// numerical nullspace of `K`, where `Kφ` is pure roundoff.
    pub fn residuals(&self, system: &GlobalSystem) -> Vec<f64> {
        let kf = system.k.norm();
        (0..self.len())
            .map(|i| {
                let phi = self.mode(i);
                let kp = &system.k * &phi;
                let mp = &system.m * &phi;
                let lam = self.eigenvalues[i];
                let scale = kp
                    .norm()
                    .max(lam.abs() * mp.norm())
                    .max(1e-8 * kf * phi.norm());
                (kp - mp * lam).norm() / scale
            })
            .collect()
    }

    /// `max |ΦᵀMΦ − I|`
    pub fn orthonormality_error(&self, system: &GlobalSystem) -> f64 {
        let g = self.modes.transpose() * &system.m * &self.modes;
        let mut worst: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

const SHIFTS: [f64; 6] = [0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0];
const PIVOT_FLOOR: f64 = 1e-12;
const INFINITE_MU: f64 = 1e-11;

/// The `k` lowest finite eigenpairs. `K + σM` is Cholesky-factored with the
/// smallest shift `σ` from a fixed ladder (scaled by `‖K‖/‖M‖`) that yields
/// well-conditioned pivots; then `L⁻¹ M L⁻ᵀ y = μ y` with `λ = 1/μ − σ`.
pub fn solve_modes(system: &GlobalSystem, k: usize) -> Result<ModalSpectrum> {
    let n = system.dimension();
    if k > n {
        return Err(Error::TooManyModes {
            requested: k,
            dimension: n,
        });
    }
    if n == 0 || k == 0 {
        return Ok(ModalSpectrum {
            eigenvalues: vec![],
            omega: vec![],
            modes: DMatrix::zeros(n, 0),
            shift: 0.0,
            infinite_modes: 0,
        });
    }
    let kn = system.k.norm();
    let mn = system.m.norm();
    if mn == 0.0 {
        return Err(Error::IndefinitePencil);
    }
    let kmax = system.k.diagonal().amax().max(f64::MIN_POSITIVE);
    let scale = (kn / mn).max(f64::MIN_POSITIVE);
    let mut factored = None;
    for s in SHIFTS {
        let sigma = s * scale;
        let a = &system.k + &system.m * sigma;
        let amax = a.diagonal().amax().max(kmax);
        if let Some(ch) = a.cholesky() {
            let l = ch.l();
            let min_pivot = l.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
            if min_pivot > PIVOT_FLOOR * amax {
                factored = Some((sigma, l));
                break;
            }
        }
    }
    let (sigma, l) = factored.ok_or(Error::IndefinitePencil)?;

    // C = L⁻¹ M L⁻ᵀ
    let linv_m = l
        .solve_lower_triangular(&system.m)
        .ok_or(Error::IndefinitePencil)?;
    let c = l
        .solve_lower_triangular(&linv_m.transpose())
        .ok_or(Error::IndefinitePencil)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();

    let mu_max = eig.eigenvalues.amax();
    if !(mu_max > 0.0) {
        return Err(Error::IndefinitePencil);
    }
    let mut order: Vec<usize> = (0..n)
        .filter(|&i| eig.eigenvalues[i] > INFINITE_MU * mu_max)
        .collect();
    if eig.eigenvalues.iter().any(|&mu| mu < -1e-8 * mu_max) {
        return Err(Error::IndefinitePencil);
    }
    let infinite_modes = n - order.len();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    order.truncate(k);

    let lt = l.transpose();
    let mut modes = DMatrix::zeros(n, order.len());
    let mut eigenvalues = Vec::with_capacity(order.len());
    for (col, &i) in order.iter().enumerate() {
        let y = eig.eigenvectors.column(i).into_owned();
        let mut phi = lt
            .solve_upper_triangular(&y)
            .ok_or(Error::IndefinitePencil)?;
        let mass = phi.dot(&(&system.m * &phi));
        if !(mass > 0.0) {
            return Err(Error::IndefinitePencil);
        }
        phi /= mass.sqrt();
        let (imax, _) = phi
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (j, v)| {
                if v.abs() > bv {
                    (j, v.abs())
                } else {
                    (bi, bv)
                }
            });
        if phi[imax] < 0.0 {
            phi = -phi;
        }
        // Rayleigh quotient is more accurate than 1/μ − σ near λ = 0
        let lam = phi.dot(&(&system.k * &phi));
        eigenvalues.push(lam);
        modes.set_column(col, &phi);
    }
    // Gram-Schmidt in the M inner product tidies near-degenerate pairs
    for i in 0..modes.ncols() {
        for j in 0..i {
            let pj = modes.column(j).into_owned();
            let proj = modes.column(i).dot(&(&system.m * &pj));
            let updated = modes.column(i) - pj * proj;
            modes.set_column(i, &updated);
        }
        let pi = modes.column(i).into_owned();
        let norm = pi.dot(&(&system.m * &pi)).sqrt();
        modes.set_column(i, &(pi / norm));
        let pi = modes.column(i).into_owned();
        eigenvalues[i] = pi.dot(&(&system.k * &pi));
    }
    let omega = eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    Ok(ModalSpectrum {
        eigenvalues,
        omega,
        modes,
        shift: sigma,
        infinite_modes,
    })
}

/// Splits a triangle into three quads meeting at the centroid, each refined
/// `level × level`: `3 level²` elements.
pub fn mesh_triangle(vertices: [Point<f64>; 3], level: usize) -> Result<Mesh> {
    if level == 0 {
        return Err(Error::InvalidInput(
            "triangle level must be at least 1".into(),
        ));
    }
    let [a, b, c] = vertices;
    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let diam = [(a, b), (b, c), (c, a)]
        .iter()
        .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
        .fold(0.0, f64::max);
    if !(cross.abs() > 1e-12 * diam * diam) {
        return Err(Error::DegenerateQuad("degenerate triangle".into()));
    }
    let p = if cross > 0.0 { [a, b, c] } else { [a, c, b] };
    let mid = |u: Point<f64>, v: Point<f64>| [(u[0] + v[0]) / 2.0, (u[1] + v[1]) / 2.0];
    let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
    let m = [mid(p[0], p[1]), mid(p[1], p[2]), mid(p[2], p[0])];
    let mut builder = NodeBuilder::new(1e-9 * diam);
    let mut elements = Vec::new();
    for i in 0..3 {
        let quad = [p[i], m[i], centroid, m[(i + 2) % 3]];
        let ids = grid_nodes(&quad, level, level, &mut builder);
        elements.extend(grid_elements(&ids, level, level));
    }
    Mesh::new(builder.nodes, elements)
}

/// `m × n` structured grid by bilinear interpolation of the vertices. Node
/// `(i, j)` has index `j (m + 1) + i`.
pub fn mesh_quad(vertices: [Point<f64>; 4], m: usize, n: usize) -> Result<Mesh> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput(
            "grid divisions must be at least 1".into(),
        ));
    }
    let q = QuadGeometry::new(vertices)?;
    let mut builder = NodeBuilder::new(0.0);
    let ids = grid_nodes(q.vertices(), m, n, &mut builder);
    Mesh::new(builder.nodes, grid_elements(&ids, m, n))
}

struct NodeBuilder {
    nodes: Vec<Point<f64>>,
    tol: f64,
}

impl NodeBuilder {
    fn new(tol: f64) -> Self {
        NodeBuilder {
            nodes: Vec::new(),
            tol,
        }
    }

    fn add(&mut self, p: Point<f64>) -> usize {
        if self.tol > 0.0 {
            if let Some(i) = self
                .nodes
                .iter()
                .position(|q| (q[0] - p[0]).hypot(q[1] - p[1]) <= self.tol)
            {
                return i;
            }
        }
        self.nodes.push(p);
        self.nodes.len() - 1
    }
}

fn grid_nodes(v: &[Point<f64>; 4], m: usize, n: usize, b: &mut NodeBuilder) -> Vec<Vec<usize>> {
    (0..=n)
        .map(|j| {
            (0..=m)
                .map(|i| {
                    let s = i as f64 / m as f64;
                    let t = j as f64 / n as f64;
                    let w = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
                    // exact vertex copies at the corners
                    let p = match (i == 0 || i == m, j == 0 || j == n) {
                        (true, true) => {
                            v[if j == 0 {
                                if i == 0 {
                                    0
                                } else {
                                    1
                                }
                            } else if i == m {
                                2
                            } else {
                                3
                            }]
                        }
                        _ => [
                            w.iter().zip(v).map(|(w, p)| w * p[0]).sum(),
                            w.iter().zip(v).map(|(w, p)| w * p[1]).sum(),
                        ],
                    };
                    b.add(p)
                })
                .collect()
        })
        .collect()
}

fn grid_elements(ids: &[Vec<usize>], m: usize, n: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(m * n);
    for j in 0..n {
        for i in 0..m {
            out.push([ids[j][i], ids[j][i + 1], ids[j + 1][i + 1], ids[j + 1][i]]);
        }
    }
    out
}

/// Deflection samples of one mode on a `grid × grid` natural-coordinate
/// lattice per element: `(x, y, w)` triples, element by element.
pub fn sample_mode(
    mesh: &Mesh,
    system: &GlobalSystem,
    spectrum: &ModalSpectrum,
    mode: usize,
    scheme: SchemeKind,
    grid: usize,
) -> Result<Vec<[f64; 3]>> {
    let full = system.expand(&spectrum.mode(mode));
    let mut out = Vec::with_capacity(mesh.elements.len() * grid * grid);
    for (e, el) in mesh.elements.iter().enumerate() {
        let s = MappingScheme::build(&mesh.element_quad(e)?, scheme);
        let t = element_transform(&s)?;
        let w = subarea_weights(&s)?;
        let dg: Vec<f64> = el
            .iter()
            .flat_map(|&v| [full[3 * v], full[3 * v + 1], full[3 * v + 2]])
            .collect();
        let dn: Vec<f64> = (0..12)
            .map(|i| (0..12).map(|j| t[i][j] * dg[j]).sum())
            .collect();
        for b in 0..grid {
            for a in 0..grid {
                let step = if grid > 1 {
                    2.0 / (grid - 1) as f64
                } else {
                    0.0
                };
                let th = if grid > 1 {
                    [-1.0 + a as f64 * step, -1.0 + b as f64 * step]
                } else {
                    [0.0, 0.0]
                };
                let x = s.map_point(th);
                let row = deflection_row(th, &w);
                let z: f64 = row.iter().zip(&dn).map(|(r, d)| r * d).sum();
                out.push([x[0], x[1], z]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> PlateMaterial<f64> {
        PlateMaterial::unit()
    }

    fn opts() -> AssemblyOptions {
        AssemblyOptions::default()
    }

    #[test]
    fn mesh_counts() {
        let t = mesh_triangle([[0.0, 0.0], [1.0, 0.25], [0.0, 0.5]], 1).unwrap();
        assert_eq!((t.elements.len(), t.nodes.len()), (3, 7));
        let t3 = mesh_triangle([[0.0, 0.0], [1.0, 0.25], [0.0, 0.5]], 3).unwrap();
        assert_eq!(t3.elements.len(), 27);
        assert_eq!(t3.nodes.len(), 37);
        let q = mesh_quad([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 2, 2).unwrap();
        assert_eq!((q.nodes.len(), q.elements.len()), (9, 4));
        let v = [[0.0, 0.0], [1.0, 0.0], [0.7929, 0.7727], [0.2394, 0.6577]];
        let one = mesh_quad(v, 1, 1).unwrap();
        assert_eq!(one.elements, vec![[0, 1, 3, 2]]);
        assert_eq!(one.element_quad(0).unwrap().vertices(), &v);
        let q8 = mesh_quad(v, 8, 8).unwrap();
        assert_eq!((q8.nodes.len(), q8.elements.len()), (81, 64));
    }

    #[test]
    fn generated_elements_have_positive_jacobians() {
        let v = [[0.0, 0.0], [1.0, 0.0], [0.7929, 0.7727], [0.2394, 0.6577]];
        let meshes = [
            mesh_quad(v, 8, 8).unwrap(),
            mesh_triangle([[0.0, 0.0], [0.0, 0.5], [1.0, 0.25]], 3).unwrap(),
        ];
        for mesh in meshes {
            for e in 0..mesh.elements.len() {
                let s = MappingScheme::build(&mesh.element_quad(e).unwrap(), SchemeKind::Pascal6);
                for a in [-1.0, 0.0, 1.0] {
                    for b in [-1.0, 0.0, 1.0] {
                        assert!(s.jacobian([a, b]).unwrap().det > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn mesh_validation_errors() {
        let nodes = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [2.0, 0.0],
            [2.0, 1.0],
        ];
        assert!(Mesh::new(nodes.clone(), vec![[0, 1, 2, 7]]).is_err());
        assert!(Mesh::new(nodes.clone(), vec![[0, 3, 2, 1]]).is_err());
        // second element walks 1→2 like the first
        assert!(matches!(
            Mesh::new(nodes.clone(), vec![[0, 1, 2, 3], [1, 2, 5, 4]]),
            Err(Error::InvalidMesh(_))
        ));
        assert!(Mesh::new(nodes, vec![[0, 1, 2, 3], [1, 4, 5, 2]]).is_ok());
    }

    #[test]
    fn single_biunit_element_assembles_to_itself() {
        let mesh = mesh_quad([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]], 1, 1).unwrap();
        let g = assemble(&mesh, &unit(), &opts()).unwrap();
        let s = MappingScheme::pascal(mesh.element_quad(0).as_ref().unwrap());
        let em = element_matrices(&s, &unit(), &GaussRule::new(3).unwrap(), false, 0.0).unwrap();
        let el = mesh.elements[0];
        let dof = |a: usize| 3 * el[a / 3] + a % 3;
        for i in 0..12 {
            for j in 0..12 {
                assert!((g.k[(dof(i), dof(j))] - em.k[i][j]).abs() < 1e-13);
                assert!((g.m[(dof(i), dof(j))] - em.m[i][j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn strip_scatter_adds_shared_dofs() {
        let mesh = mesh_quad([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]], 2, 1).unwrap();
        let g = assemble(&mesh, &unit(), &opts()).unwrap();
        let (e0, _) =
            global_element_matrices(&mesh.element_quad(0).unwrap(), &unit(), &opts()).unwrap();
        let (e1, _) =
            global_element_matrices(&mesh.element_quad(1).unwrap(), &unit(), &opts()).unwrap();
        // node 1 is j of element 0 and i of element 1
        assert!((g.k[(3, 3)] - (e0.k[3][3] + e1.k[0][0])).abs() < 1e-12);
        // nodes 0 and 2 share no element
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(g.k[(a, 6 + b)], 0.0);
            }
        }
    }

    #[test]
    fn free_mesh_annihilates_translation() {
        let mesh = mesh_triangle([[0.0, 0.0], [1.0, 0.25], [0.0, 0.5]], 2).unwrap();
        let g = assemble(&mesh, &unit(), &opts()).unwrap();
        let mut v = DVector::zeros(g.dimension());
        for n in 0..mesh.nodes.len() {
            v[3 * n] = 1.0;
        }
        assert!((&g.k * &v).norm() <= 1e-10 * g.k.norm());
        let total = v.dot(&(&g.m * &v));
        assert!((total - mesh.area()).abs() < 1e-12);
    }

    #[test]
    fn bc_counting_and_conflicts() {
        let mut mesh = mesh_quad([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 2, 2).unwrap();
        let g = assemble(&mesh, &unit(), &opts()).unwrap();
        let free = apply_bcs(&g, &mesh).unwrap();
        assert_eq!(free.dimension(), 27);
        assert_eq!(free.k, g.k);
        let boundary = mesh.boundary_nodes();
        assert_eq!(boundary.len(), 8);
        mesh.add_boundary("all", Condition::Clamped, boundary);
        let r = apply_bcs(&g, &mesh).unwrap();
        assert_eq!(r.dimension(), 3);
        assert_eq!(r.dof_map[4], [Some(0), Some(1), Some(2)]);

        let mut cant = mesh_quad([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 2, 2).unwrap();
        let edge = cant.nodes_on_segment([0.0, 0.0], [0.0, 1.0], 1e-9);
        assert_eq!(edge, vec![0, 3, 6]);
        cant.add_boundary("x0", Condition::Clamped, edge);
        assert_eq!(apply_bcs(&g, &cant).unwrap().dimension(), 3 * (9 - 3));
        cant.add_boundary("y0", Condition::SimplySupported, vec![0, 1, 2]);
        assert!(matches!(
            apply_bcs(&g, &cant),
            Err(Error::ConflictingBoundary { node: 0, .. })
        ));

        let mut ss = mesh_quad([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 2, 2).unwrap();
        ss.add_boundary("y0", Condition::SimplySupported, vec![0, 1, 2]);
        ss.add_boundary("free", Condition::Free, vec![0, 3]);
        assert_eq!(apply_bcs(&g, &ss).unwrap().dimension(), 27 - 3);
    }

    #[test]
    fn diagonal_pencil() {
        let g = GlobalSystem {
            k: DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0])),
            m: DMatrix::identity(2, 2),
            f: DVector::zeros(2),
            dof_map: vec![],
            fallbacks: 0,
        };
        let s = solve_modes(&g, 2).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14 && (s.eigenvalues[1] - 4.0).abs() < 1e-14);
        assert!((s.omega[0] - 1.0).abs() < 1e-14 && (s.omega[1] - 2.0).abs() < 1e-14);
        assert_eq!(s.mode(0)[1], 1.0);
        assert!(matches!(
            solve_modes(&g, 3),
            Err(Error::TooManyModes {
                requested: 3,
                dimension: 2
            })
        ));
    }

    #[test]
    fn singular_mass_drops_infinite_modes() {
        let g = GlobalSystem {
            k: DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 5.0])),
            m: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 1.0])),
            f: DVector::zeros(3),
            dof_map: vec![],
            fallbacks: 0,
        };
        let s = solve_modes(&g, 3).unwrap();
        assert_eq!(s.infinite_modes, 1);
        assert_eq!(s.len(), 2);
        assert!((s.eigenvalues[0] - 2.0).abs() < 1e-13 && (s.eigenvalues[1] - 5.0).abs() < 1e-13);
    }

    #[test]
    fn free_square_has_rigid_mode_first() {
        let mesh = mesh_quad([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 4, 4).unwrap();
        let g = apply_bcs(&assemble(&mesh, &unit(), &opts()).unwrap(), &mesh).unwrap();
        let s = solve_modes(&g, 6).unwrap();
        assert!(s.shift > 0.0);
        let p0 = frequency_parameter(s.omega[0], 1.0, &unit(), Normalization::Plain);
        assert!(p0 < 1e-4, "{p0}");
        assert!(s.residuals(&g).iter().all(|&r| r < 1e-8));
        assert!(s.orthonormality_error(&g) < 1e-8);
        assert!(s.eigenvalues.iter().all(|&l| l >= -1e-10));
    }

    #[test]
    fn clamped_mode_vanishes_on_constrained_dofs() {
        let mut mesh = mesh_quad([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 3, 3).unwrap();
        let b = mesh.boundary_nodes();
        mesh.add_boundary("edge", Condition::Clamped, b.clone());
        let g = apply_bcs(&assemble(&mesh, &unit(), &opts()).unwrap(), &mesh).unwrap();
        let s = solve_modes(&g, 3).unwrap();
        let full = g.expand(&s.mode(0));
        for v in b {
            assert_eq!(&full[3 * v..3 * v + 3], &[0.0, 0.0, 0.0]);
        }
        assert_eq!(s.shift, 0.0);
    }

    #[test]
    fn frequency_parameter_normalizations() {
        let m = unit();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!(
            (frequency_parameter(7.589261, 1.0, &m, Normalization::Plain) - 7.589261).abs() < 1e-12
        );
        assert!((frequency_parameter(pi2, 1.0, &m, Normalization::PerPi2) - 1.0).abs() < 1e-12);
        let (a, b) = (
            frequency_parameter(3.3, 1.7, &m, Normalization::Plain),
            frequency_parameter(3.3, 1.7, &m, Normalization::PerPi2),
        );
        assert!((a - b * pi2).abs() < 1e-12);
    }

    #[test]
    fn pascal_and_bilinear_spectra_agree() {
        let mut mesh = mesh_quad(
            [[0.0, 0.0], [1.0, 0.0], [0.7929, 0.7727], [0.2394, 0.6577]],
            4,
            4,
        )
        .unwrap();
        let b = mesh.boundary_nodes();
        mesh.add_boundary("edge", Condition::Clamped, b);
        let solve = |scheme| {
            let o = AssemblyOptions { scheme, ..opts() };
            let g = apply_bcs(&assemble(&mesh, &unit(), &o).unwrap(), &mesh).unwrap();
            solve_modes(&g, 4).unwrap().eigenvalues
        };
        let (p, q) = (solve(SchemeKind::Pascal6), solve(SchemeKind::Bilinear));
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() <= 1e-8 * a.abs());
        }
    }

    #[test]
    fn sample_mode_grid() {
        let mut mesh = mesh_quad([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 2, 2).unwrap();
        let b = mesh.nodes_on_segment([0.0, 0.0], [0.0, 1.0], 1e-9);
        mesh.add_boundary("x0", Condition::Clamped, b);
        let g = apply_bcs(&assemble(&mesh, &unit(), &opts()).unwrap(), &mesh).unwrap();
        let s = solve_modes(&g, 1).unwrap();
        let pts = sample_mode(&mesh, &g, &s, 0, SchemeKind::Pascal6, 5).unwrap();
        assert_eq!(pts.len(), 4 * 25);
        assert!(pts.iter().all(|p| p.iter().all(|v| v.is_finite())));
    }
}
