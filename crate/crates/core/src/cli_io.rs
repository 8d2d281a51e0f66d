//! Case files, built-in plates, the four command runners and report output.
//!
//! A case is one TOML document with a `material` block, exactly one geometry
//! source (`[geometry.triangle]`, `[geometry.quad]` or `[geometry.mesh]`) and
//! an `analysis` block. Generated geometries may name boundary edges by
//! vertex pairs, or `"all"` for the whole outline.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{
    bilinear_params, compute_poles_cartesian, pole_condition, resolve_pole_naturals, MappingScheme,
    PascalFallback, Point, QuadGeometry, SchemeKind,
};
use crate::modal::{
    apply_bcs, assemble, frequency_parameter, mesh_quad, mesh_triangle, sample_mode, solve_modes,
    AssemblyOptions, Condition, Mesh, Normalization,
};
use crate::plate_element::PlateMaterial;
use crate::quadrature::{
    polygon_section_properties, section_properties, GaussRule, SectionProperties,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    #[serde(default)]
    pub name: String,
    #[serde(default = "PlateMaterial::unit")]
    pub material: PlateMaterial<f64>,
    pub geometry: Geometry,
    #[serde(default)]
    pub analysis: Analysis,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triangle: Option<TriangleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad: Option<QuadSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<Mesh>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangleSpec {
    pub vertices: [Point<f64>; 3],
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    #[serde(default)]
    pub boundary: Vec<EdgeCondition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSpec {
    pub vertices: [Point<f64>; 4],
    #[serde(default = "default_divisions")]
    pub divisions: Vec<[usize; 2]>,
    #[serde(default)]
    pub boundary: Vec<EdgeCondition>,
}

fn default_levels() -> Vec<usize> {
    vec![1]
}

fn default_divisions() -> Vec<[usize; 2]> {
    vec![[1, 1]]
}

/// Either a vertex pair `[a, b]` or the string `"all"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeRef {
    Pair([usize; 2]),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeCondition {
    pub edge: EdgeRef,
    pub condition: Condition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Analysis {
    pub scheme: SchemeKind,
    pub gauss: usize,
    pub modes: usize,
    pub normalization: Normalization,
    pub rotary: bool,
    pub reference_length: f64,
    pub qbar: f64,
}

impl Default for Analysis {
    fn default() -> Self {
        Analysis {
            scheme: SchemeKind::Pascal6,
            gauss: 3,
            modes: 6,
            normalization: Normalization::Plain,
            rotary: false,
            reference_length: 1.0,
            qbar: 0.0,
        }
    }
}

impl CaseFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let case: CaseFile = toml::from_str(text).map_err(|e| Error::Case(e.to_string()))?;
        case.validate()?;
        Ok(case)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Case(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        let g = &self.geometry;
        let sources = [g.triangle.is_some(), g.quad.is_some(), g.mesh.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if sources != 1 {
            return Err(Error::Case(format!(
                "geometry needs exactly one of triangle, quad or mesh (found {sources})"
            )));
        }
        if let Some(m) = &g.mesh {
            m.validate()?;
        }
        let a = &self.analysis;
        GaussRule::<f64>::new(a.gauss)?;
        if !(a.reference_length > 0.0) {
            return Err(Error::Case("reference_length must be positive".into()));
        }
        let check_edges = |edges: &[EdgeCondition], n: usize| -> Result<()> {
            for e in edges {
                match &e.edge {
                    EdgeRef::Pair([a, b]) if *a < n && *b < n && a != b => {}
                    EdgeRef::Named(s) if s == "all" => {}
                    other => {
                        return Err(Error::Case(format!("invalid boundary edge {other:?}")));
                    }
                }
            }
            Ok(())
        };
        if let Some(t) = &g.triangle {
            check_edges(&t.boundary, 3)?;
            if t.levels.is_empty() || t.levels.contains(&0) {
                return Err(Error::Case("triangle levels must be positive".into()));
            }
        }
        if let Some(q) = &g.quad {
            check_edges(&q.boundary, 4)?;
            if q.divisions.is_empty() || q.divisions.iter().any(|d| d[0] == 0 || d[1] == 0) {
                return Err(Error::Case("quad divisions must be positive".into()));
            }
        }
        Ok(())
    }

    /// Labelled meshes with boundary sets attached.
    pub fn meshes(&self) -> Result<Vec<(String, Mesh)>> {
        let g = &self.geometry;
        if let Some(t) = &g.triangle {
            return t
                .levels
                .iter()
                .map(|&n| {
                    let mut mesh = mesh_triangle(t.vertices, n)?;
                    attach_edges(&mut mesh, &t.vertices, &t.boundary);
                    Ok((format!("{}el", mesh.elements.len()), mesh))
                })
                .collect();
        }
        if let Some(q) = &g.quad {
            return q
                .divisions
                .iter()
                .map(|&[m, n]| {
                    let mut mesh = mesh_quad(q.vertices, m, n)?;
                    attach_edges(&mut mesh, &q.vertices, &q.boundary);
                    Ok((format!("{m}x{n}"), mesh))
                })
                .collect();
        }
        let m = g
            .mesh
            .clone()
            .ok_or_else(|| Error::Case("no geometry".into()))?;
        Ok(vec![(format!("{}el", m.elements.len()), m)])
    }

    /// The single quadrilateral of the case, reoriented when clockwise.
    pub fn single_quad(&self) -> Result<(QuadGeometry<f64>, bool)> {
        let g = &self.geometry;
        let verts = if let Some(q) = &g.quad {
            if q.divisions.iter().any(|&d| d != [1, 1]) {
                return Err(Error::Case(format!(
                    "expected a single quadrilateral, the case meshes it as {:?}",
                    q.divisions
                )));
            }
            q.vertices
        } else if let Some(m) = &g.mesh {
            if m.elements.len() != 1 {
                return Err(Error::Case(format!(
                    "expected a single quadrilateral, the mesh has {} elements",
                    m.elements.len()
                )));
            }
            m.elements[0].map(|v| m.nodes[v])
        } else {
            return Err(Error::Case(
                "expected a single quadrilateral, got a triangle geometry".into(),
            ));
        };
        QuadGeometry::new_oriented(verts)
    }
}

fn attach_edges(mesh: &mut Mesh, outline: &[Point<f64>], edges: &[EdgeCondition]) {
    let tol = 1e-9 * mesh.diameter();
    for e in edges {
        match &e.edge {
            EdgeRef::Pair([a, b]) => {
                let nodes = mesh.nodes_on_segment(outline[*a], outline[*b], tol);
                mesh.add_boundary(&format!("edge{}{}", a + 1, b + 1), e.condition, nodes);
            }
            EdgeRef::Named(_) => {
                let nodes = mesh.boundary_nodes();
                mesh.add_boundary("all", e.condition, nodes);
            }
        }
    }
}

pub const BUILTIN_CASES: [&str; 8] = [
    "paper-quad",
    "unit-square",
    "cantilever-isosceles",
    "clamped-isosceles",
    "clamped-equilateral",
    "clamped-quad",
    "cantilever-quad",
    "free-square",
];

fn edge(a: usize, b: usize, condition: Condition) -> EdgeCondition {
    EdgeCondition {
        edge: EdgeRef::Pair([a, b]),
        condition,
    }
}

fn all_clamped() -> Vec<EdgeCondition> {
    vec![EdgeCondition {
        edge: EdgeRef::Named("all".into()),
        condition: Condition::Clamped,
    }]
}

fn analysis(norm: Normalization) -> Analysis {
    Analysis {
        normalization: norm,
        ..Analysis::default()
    }
}

/// Built-in cases with the unit material (D = 1, ρt = 1) and a = 1.
/// `random-quad` draws a convex quadrilateral from `seed`.
pub fn builtin_case(name: &str, seed: u64) -> Option<CaseFile> {
    let quad = |vertices, divisions, boundary, norm| CaseFile {
        name: name.to_string(),
        material: PlateMaterial::unit(),
        geometry: Geometry {
            quad: Some(QuadSpec {
                vertices,
                divisions,
                boundary,
            }),
            ..Geometry::default()
        },
        analysis: analysis(norm),
    };
    let tri = |vertices, boundary, norm| CaseFile {
        name: name.to_string(),
        material: PlateMaterial::unit(),
        geometry: Geometry {
            triangle: Some(TriangleSpec {
                vertices,
                levels: vec![1, 2, 3],
                boundary,
            }),
            ..Geometry::default()
        },
        analysis: analysis(norm),
    };
    let isosceles = [[0.0, 0.0], [1.0, 0.25], [0.0, 0.5]];
    let grids = vec![[2, 2], [4, 4], [6, 6], [8, 8]];
    Some(match name {
        "paper-quad" => quad(
            [[0.0, 0.0], [8.0, 0.0], [4.0, 3.0], [0.0, 5.0]],
            vec![[1, 1]],
            vec![],
            Normalization::Plain,
        ),
        "unit-square" => quad(
            [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[1, 1]],
            vec![],
            Normalization::Plain,
        ),
        "random-quad" => quad(
            random_convex_quad(seed),
            vec![[1, 1]],
            vec![],
            Normalization::Plain,
        ),
        "cantilever-isosceles" => tri(
            isosceles,
            vec![edge(2, 0, Condition::Clamped)],
            Normalization::Plain,
        ),
        "clamped-isosceles" => tri(isosceles, all_clamped(), Normalization::PerPi2),
        "clamped-equilateral" => tri(
            [[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]],
            all_clamped(),
            Normalization::PerPi2,
        ),
        "clamped-quad" => quad(
            [[0.0, 0.0], [1.0, 0.0], [0.7929, 0.7727], [0.2394, 0.6577]],
            grids,
            all_clamped(),
            Normalization::PerPi2,
        ),
        "cantilever-quad" => quad(
            [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.433, 0.75]],
            grids,
            vec![edge(0, 1, Condition::Clamped)],
            Normalization::PerPi2,
        ),
        "free-square" => quad(
            [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[4, 4]],
            vec![],
            Normalization::Plain,
        ),
        _ => return None,
    })
}

/// A built-in name or a path to a TOML case file.
pub fn load_case(spec: &str, seed: u64) -> Result<CaseFile> {
    if let Some(c) = builtin_case(spec, seed) {
        return Ok(c);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Case(format!(
            "'{spec}' is neither a built-in case ({}, random-quad) nor an existing file",
            BUILTIN_CASES.join(", ")
        )));
    }
    CaseFile::from_toml(&std::fs::read_to_string(path)?)
}

/// Convex quadrilateral from four points on a random ellipse, one per
/// jittered quarter turn, so interior angles stay away from 0 and π.
pub fn random_convex_quad(seed: u64) -> [Point<f64>; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ax = rng.gen_range(0.5..2.0);
    let ay = rng.gen_range(0.5..2.0);
    let rot: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let c = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
    let start: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    std::array::from_fn(|k| {
        let a = start + k as f64 * std::f64::consts::FRAC_PI_2 + rng.gen_range(-0.5..0.5);
        let (x, y) = (ax * a.cos(), ay * a.sin());
        [
            c[0] + x * rot.cos() - y * rot.sin(),
            c[1] + x * rot.sin() + y * rot.cos(),
        ]
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub scheme: SchemeKind,
    pub gauss: usize,
    pub modes: usize,
    pub normalization: Normalization,
    pub rotary: bool,
    pub reference_length: f64,
}

impl From<&Analysis> for Metadata {
    fn from(a: &Analysis) -> Self {
        Metadata {
            scheme: a.scheme,
            gauss: a.gauss,
            modes: a.modes,
            normalization: a.normalization,
            rotary: a.rotary,
            reference_length: a.reference_length,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionRow {
    pub scheme: SchemeKind,
    pub properties: SectionProperties<f64>,
    /// Largest deviation from the exact polygon values.
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeCheck {
    pub scheme: SchemeKind,
    /// Scheme actually built (Pascal may fall back to bilinear).
    pub built: SchemeKind,
    pub partition_residual: f64,
    pub kronecker_residual: f64,
    /// Largest distance from the bilinear map on a 9×9 grid.
    pub max_map_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapCheck {
    pub cartesian_poles: [Option<Point<f64>>; 2],
    pub natural_poles: [Option<Point<f64>>; 2],
    pub parallel: [bool; 2],
    /// Distance between the bilinear image of each natural pole and the pole.
    pub round_trip: [Option<f64>; 2],
    pub condition: Option<f64>,
    pub fallback: Option<PascalFallback>,
    pub diameter: f64,
    pub schemes: Vec<ShapeCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub mesh: String,
    pub elements: usize,
    pub dofs: usize,
    pub mode: usize,
    pub omega: f64,
    pub param_plain: f64,
    pub param_per_pi2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeShape {
    pub mesh: String,
    pub mode: usize,
    pub points: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshDiagnostics {
    pub mesh: String,
    pub max_residual: f64,
    pub orthonormality_error: f64,
    pub shift: f64,
    pub infinite_modes: usize,
    pub pascal_fallbacks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub mesh: String,
    pub mode: usize,
    pub first: f64,
    pub second: f64,
    pub relative_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub case: String,
    pub metadata: Metadata,
    pub warnings: Vec<String>,
    pub section_properties: Vec<SectionRow>,
    pub mapcheck: Option<MapCheck>,
    pub frequencies: Vec<FrequencyRow>,
    pub diagnostics: Vec<MeshDiagnostics>,
    pub mode_shapes: Vec<ModeShape>,
    pub comparison: Vec<CompareRow>,
}

impl Report {
    fn new(command: &str, case: &CaseFile) -> Self {
        Report {
            command: command.to_string(),
            case: case.name.clone(),
            metadata: Metadata::from(&case.analysis),
            warnings: vec![],
            section_properties: vec![],
            mapcheck: None,
            frequencies: vec![],
            diagnostics: vec![],
            mode_shapes: vec![],
            comparison: vec![],
        }
    }
}

fn reorder_warning(flipped: bool, report: &mut Report) {
    if flipped {
        report
            .warnings
            .push("vertices were clockwise; reordered to counterclockwise".into());
    }
}

/// Section properties under each scheme against the exact polygon values.
pub fn run_sectprops(case: &CaseFile, schemes: &[SchemeKind]) -> Result<Report> {
    let (quad, flipped) = case.single_quad()?;
    let mut report = Report::new("sectprops", case);
    reorder_warning(flipped, &mut report);
    let rule = GaussRule::new(case.analysis.gauss)?;
    let exact = polygon_section_properties(quad.vertices());
    for &kind in schemes {
        let scheme = MappingScheme::build(&quad, kind);
        if let Some(why) = scheme.fallback {
            report
                .warnings
                .push(format!("{kind}: fell back to bilinear ({why:?})"));
        }
        let p = section_properties(&scheme, &rule)?;
        report.section_properties.push(SectionRow {
            scheme: kind,
            max_error: p.max_abs_diff(&exact),
            properties: p,
        });
    }
    Ok(report)
}

/// Largest distance between a scheme's map and the bilinear map on an
/// `n × n` grid of natural coordinates.
pub fn map_deviation(scheme: &MappingScheme<f64>, n: usize) -> f64 {
    let b = bilinear_params(&scheme.quad);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let t = [
                -1.0 + 2.0 * i as f64 / (n - 1) as f64,
                -1.0 + 2.0 * j as f64 / (n - 1) as f64,
            ];
            let (x, y) = (scheme.map_point(t), b.eval(t));
            worst = worst.max((x[0] - y[0]).hypot(x[1] - y[1]));
        }
    }
    worst
}

pub fn mapcheck_quad(quad: &QuadGeometry<f64>) -> MapCheck {
    let cart = compute_poles_cartesian(quad);
    let resolved = if cart.any_parallel() {
        None
    } else {
        resolve_pole_naturals(quad, cart).ok()
    };
    let b = bilinear_params(quad);
    let natural = resolved.map(|p| p.natural).unwrap_or([None, None]);
    let round_trip = std::array::from_fn(|k| {
        let (c, n) = (cart.cartesian[k]?, natural[k]?);
        let x = b.eval(n);
        Some((x[0] - c[0]).hypot(x[1] - c[1]))
    });
    let pascal = MappingScheme::pascal(quad);
    let schemes = SchemeKind::ALL
        .iter()
        .map(|&kind| {
            let s = MappingScheme::build(quad, kind);
            ShapeCheck {
                scheme: kind,
                built: s.kind,
                partition_residual: s.shapes.partition_residual(),
                kronecker_residual: s.shapes.kronecker_residual(),
                max_map_deviation: map_deviation(&s, 9),
            }
        })
        .collect();
    MapCheck {
        cartesian_poles: cart.cartesian,
        natural_poles: natural,
        parallel: cart.parallel_flags(),
        round_trip,
        condition: resolved.as_ref().and_then(pole_condition),
        fallback: pascal.fallback,
        diameter: quad.diameter(),
        schemes,
    }
}

pub fn run_mapcheck(case: &CaseFile) -> Result<Report> {
    let (quad, flipped) = case.single_quad()?;
    let mut report = Report::new("mapcheck", case);
    reorder_warning(flipped, &mut report);
    let check = mapcheck_quad(&quad);
    if check.parallel.iter().any(|&p| p) {
        report.warnings.push(format!(
            "parallel opposite edges (p5, p6) = {:?}; pascal6 uses the bilinear map",
            check.parallel
        ));
    }
    report.mapcheck = Some(check);
    Ok(report)
}

/// Options for [`run_modal`] beyond the case file.
#[derive(Clone, Copy, Debug, Default)]
pub struct ModalRequest {
    /// Emit deflection samples on a per-element 5×5 grid.
    pub plot: bool,
}

pub fn run_modal(case: &CaseFile, request: ModalRequest) -> Result<Report> {
    let mut report = Report::new("modal", case);
    let a = &case.analysis;
    let opts = AssemblyOptions {
        scheme: a.scheme,
        gauss: a.gauss,
        rotary: a.rotary,
        qbar: a.qbar,
    };
    for (label, mesh) in case.meshes()? {
        let full = assemble(&mesh, &case.material, &opts)?;
        let system = apply_bcs(&full, &mesh)?;
        let k = a.modes.min(system.dimension());
        if k < a.modes {
            report.warnings.push(format!(
                "{label}: only {} DOFs remain, reporting {k} modes",
                system.dimension()
            ));
        }
        let spectrum = solve_modes(&system, k)?;
        if spectrum.len() < k {
            report.warnings.push(format!(
                "{label}: {} finite modes (mass matrix is singular)",
                spectrum.len()
            ));
        }
        let residuals = spectrum.residuals(&system);
        report.diagnostics.push(MeshDiagnostics {
            mesh: label.clone(),
            max_residual: residuals.iter().copied().fold(0.0, f64::max),
            orthonormality_error: spectrum.orthonormality_error(&system),
            shift: spectrum.shift,
            infinite_modes: spectrum.infinite_modes,
            pascal_fallbacks: system.fallbacks,
        });
        for (i, &w) in spectrum.omega.iter().enumerate() {
            report.frequencies.push(FrequencyRow {
                mesh: label.clone(),
                elements: mesh.elements.len(),
                dofs: system.dimension(),
                mode: i + 1,
                omega: w,
                param_plain: frequency_parameter(
                    w,
                    a.reference_length,
                    &case.material,
                    Normalization::Plain,
                ),
                param_per_pi2: frequency_parameter(
                    w,
                    a.reference_length,
                    &case.material,
                    Normalization::PerPi2,
                ),
            });
            if request.plot {
                report.mode_shapes.push(ModeShape {
                    mesh: label.clone(),
                    mode: i + 1,
                    points: sample_mode(&mesh, &system, &spectrum, i, a.scheme, 5)?,
                });
            }
        }
    }
    Ok(report)
}

/// Runs the modal analysis under two schemes and reports per-mode differences
/// of the case's chosen normalization.
pub fn compare(case: &CaseFile, first: SchemeKind, second: SchemeKind) -> Result<Report> {
    let with = |s: SchemeKind| {
        let mut c = case.clone();
        c.analysis.scheme = s;
        run_modal(&c, ModalRequest::default())
    };
    let (a, b) = (with(first)?, with(second)?);
    let mut report = Report::new("compare", case);
    let pick = |r: &FrequencyRow| match case.analysis.normalization {
        Normalization::Plain => r.param_plain,
        Normalization::PerPi2 => r.param_per_pi2,
    };
    for (ra, rb) in a.frequencies.iter().zip(&b.frequencies) {
        let (x, y) = (pick(ra), pick(rb));
        report.comparison.push(CompareRow {
            mesh: ra.mesh.clone(),
            mode: ra.mode,
            first: x,
            second: y,
            relative_difference: if x.abs() > 0.0 {
                (y - x).abs() / x.abs()
            } else {
                (y - x).abs()
            },
        });
    }
    for (tag, r) in [(first, a), (second, b)] {
        report
            .warnings
            .extend(r.warnings.into_iter().map(|w| format!("{tag}: {w}")));
        report
            .frequencies
            .extend(r.frequencies.into_iter().map(|mut f| {
                f.mesh = format!("{}:{tag}", f.mesh);
                f
            }));
        report.diagnostics.extend(r.diagnostics);
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Plot,
}

pub const CSV_HEADER: &str = "mesh,mode,omega,param_plain,param_per_pi2";

/// Frequency table for modal runs; section or shape-check tables otherwise.
pub fn to_csv(report: &Report) -> String {
    let mut s = String::new();
    match report.command.as_str() {
        "sectprops" => {
            s.push_str("scheme,area,i_x1,i_x2,i_x1x2,max_error\n");
            for r in &report.section_properties {
                let p = &r.properties;
                let _ = writeln!(
                    s,
                    "{},{:.6},{:.6},{:.6},{:.6},{:.3e}",
                    r.scheme, p.area, p.i_x1, p.i_x2, p.i_x1x2, r.max_error
                );
            }
        }
        "mapcheck" => {
            s.push_str("scheme,built,partition_residual,kronecker_residual,max_map_deviation\n");
            for r in report.mapcheck.iter().flat_map(|m| &m.schemes) {
                let _ = writeln!(
                    s,
                    "{},{},{:.3e},{:.3e},{:.3e}",
                    r.scheme,
                    r.built,
                    r.partition_residual,
                    r.kronecker_residual,
                    r.max_map_deviation
                );
            }
        }
        _ => {
            s.push_str(CSV_HEADER);
            s.push('\n');
            for r in &report.frequencies {
                let _ = writeln!(
                    s,
                    "{},{},{:.6},{:.6},{:.6}",
                    r.mesh, r.mode, r.omega, r.param_plain, r.param_per_pi2
                );
            }
        }
    }
    s
}

pub fn to_json(report: &Report) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

pub fn from_json(text: &str) -> Result<Report> {
    Ok(serde_json::from_str(text)?)
}

/// `x y z` lines per mode, blocks separated by a blank line.
pub fn to_plot(report: &Report) -> String {
    let mut s = String::new();
    for (i, shape) in report.mode_shapes.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let _ = writeln!(s, "# mesh {} mode {}", shape.mesh, shape.mode);
        for p in &shape.points {
            let _ = writeln!(s, "{:.6} {:.6} {:.6}", p[0], p[1], p[2]);
        }
    }
    s
}

pub fn render(report: &Report, format: Format) -> Result<String> {
    Ok(match format {
        Format::Csv => to_csv(report),
        Format::Json => to_json(report)?,
        Format::Plot => to_plot(report),
    })
}

/// Writes to `destination`, or stdout when `None`.
pub fn emit(report: &Report, format: Format, destination: Option<&Path>) -> Result<()> {
    let text = render(report, format)?;
    match destination {
        Some(p) => std::fs::write(p, text)?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load_with_unit_material() {
        for name in BUILTIN_CASES {
            let c = builtin_case(name, 0).unwrap();
            c.validate().unwrap();
            assert_eq!(c.material, PlateMaterial::unit());
            assert!(!c.meshes().unwrap().is_empty());
        }
        assert!(builtin_case("nope", 0).is_none());
    }

    #[test]
    fn case_toml_round_trip() {
        for name in BUILTIN_CASES {
            let c = builtin_case(name, 0).unwrap();
            let text = c.to_toml().unwrap();
            assert_eq!(CaseFile::from_toml(&text).unwrap(), c, "{text}");
        }
    }

    #[test]
    fn case_file_parsing_and_errors() {
        let text = r#"
            name = "strip"
            [material]
            E = 1365.0
            nu = 0.3
            t = 0.2
            rho = 5.0
            [geometry.quad]
            vertices = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]]
            divisions = [[2, 1]]
            boundary = [{ edge = [3, 0], condition = "clamped" }]
            [analysis]
            scheme = "bilinear"
            modes = 2
        "#;
        let c = CaseFile::from_toml(text).unwrap();
        assert_eq!(c.analysis.scheme, SchemeKind::Bilinear);
        assert_eq!(c.analysis.gauss, 3);
        let meshes = c.meshes().unwrap();
        assert_eq!(meshes[0].0, "2x1");
        assert_eq!(meshes[0].1.boundary_sets[0].nodes, vec![0, 3]);

        let two = text.replace(
            "[analysis]",
            "[geometry.triangle]\nvertices = [[0.0,0.0],[1.0,0.0],[0.0,1.0]]\n[analysis]",
        );
        assert!(matches!(CaseFile::from_toml(&two), Err(Error::Case(_))));
        let bad_gauss = text.replace("modes = 2", "gauss = 9");
        assert!(matches!(
            CaseFile::from_toml(&bad_gauss),
            Err(Error::GaussOrder(9))
        ));
        let bad_edge = text.replace("[3, 0]", "[3, 7]");
        assert!(CaseFile::from_toml(&bad_edge).is_err());
        assert!(CaseFile::from_toml("geometry = 3").is_err());
    }

    #[test]
    fn explicit_mesh_case() {
        let text = r#"
            [geometry.mesh]
            nodes = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0]]
            elements = [[0, 1, 4, 3], [1, 2, 5, 4]]
            boundary_sets = [{ name = "left", condition = "clamped", nodes = [0, 3] }]
        "#;
        let c = CaseFile::from_toml(text).unwrap();
        let r = run_modal(&c, ModalRequest::default()).unwrap();
        assert_eq!(r.frequencies.len(), 6);
        assert_eq!(r.frequencies[0].dofs, 12);
        assert!(c.single_quad().is_err());
        let bad = text.replace("[1, 2, 5, 4]", "[1, 2, 5, 9]");
        assert!(matches!(
            CaseFile::from_toml(&bad),
            Err(Error::InvalidMesh(_))
        ));
    }

    #[test]
    fn sectprops_sample_and_unit_square() {
        let r = run_sectprops(&builtin_case("paper-quad", 0).unwrap(), &SchemeKind::ALL).unwrap();
        assert_eq!(r.section_properties.len(), 3);
        for row in &r.section_properties {
            let p = row.properties;
            assert!((p.area - 22.0).abs() < 1e-9);
            assert!((p.i_x1 - 99.6667).abs() < 5e-5);
            assert!((p.i_x2 - 250.6667).abs() < 5e-5);
            assert!((p.i_x1x2 - 84.6667).abs() < 5e-5);
        }
        let u = run_sectprops(&builtin_case("unit-square", 0).unwrap(), &SchemeKind::ALL).unwrap();
        for row in &u.section_properties {
            assert!(row.max_error < 1e-14);
            assert!((row.properties.i_x1x2 - 0.25).abs() < 1e-15);
        }
        assert!(run_sectprops(
            &builtin_case("clamped-isosceles", 0).unwrap(),
            &SchemeKind::ALL
        )
        .is_err());
    }

    #[test]
    fn clockwise_input_is_reordered_with_warning() {
        let mut c = builtin_case("paper-quad", 0).unwrap();
        c.geometry.quad.as_mut().unwrap().vertices =
            [[0.0, 0.0], [0.0, 5.0], [4.0, 3.0], [8.0, 0.0]];
        let r = run_sectprops(&c, &[SchemeKind::Bilinear]).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert!((r.section_properties[0].properties.area - 22.0).abs() < 1e-12);
    }

    #[test]
    fn mapcheck_sample_quad_and_parallelogram() {
        let r = run_mapcheck(&builtin_case("paper-quad", 0).unwrap()).unwrap();
        let m = r.mapcheck.unwrap();
        assert_eq!(m.cartesian_poles, [Some([10.0, 0.0]), Some([0.0, 6.0])]);
        assert!(m.round_trip.iter().all(|d| d.unwrap() <= 1e-9));
        assert!(m.fallback.is_none());
        for s in &m.schemes {
            assert!(s.max_map_deviation <= 1e-9 * m.diameter);
        }
        let mut c = builtin_case("paper-quad", 0).unwrap();
        c.geometry.quad.as_mut().unwrap().vertices =
            [[0.0, 0.0], [2.0, 0.0], [3.0, 1.0], [1.0, 1.0]];
        let r = run_mapcheck(&c).unwrap();
        let m = r.mapcheck.unwrap();
        assert_eq!(m.parallel, [true, true]);
        assert_eq!(m.fallback, Some(PascalFallback::ParallelEdges));
        assert_eq!(m.schemes[2].built, SchemeKind::Bilinear);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn random_quads_are_convex_and_seeded() {
        for seed in 0..50 {
            let v = random_convex_quad(seed);
            assert_eq!(v, random_convex_quad(seed));
            let q = QuadGeometry::new(v).unwrap();
            for k in 0..4 {
                let (a, b, c) = (v[k], v[(k + 1) % 4], v[(k + 2) % 4]);
                let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
                assert!(cross > 0.0);
            }
            assert!(q.signed_area() > 0.0);
        }
        assert_ne!(random_convex_quad(1), random_convex_quad(2));
    }

    #[test]
    fn csv_header_only_for_empty_spectrum() {
        let c = builtin_case("free-square", 0).unwrap();
        let mut r = Report::new("modal", &c);
        assert_eq!(to_csv(&r), format!("{CSV_HEADER}\n"));
        r.frequencies.push(FrequencyRow {
            mesh: "2x2".into(),
            elements: 4,
            dofs: 3,
            mode: 1,
            omega: 1.0 / 3.0,
            param_plain: 1.0 / 3.0,
            param_per_pi2: 0.0,
        });
        assert_eq!(
            to_csv(&r).lines().nth(1).unwrap(),
            "2x2,1,0.333333,0.333333,0.000000"
        );
    }

    #[test]
    fn json_round_trip() {
        let mut c = builtin_case("cantilever-quad", 0).unwrap();
        c.geometry.quad.as_mut().unwrap().divisions = vec![[2, 2]];
        let r = run_modal(&c, ModalRequest { plot: true }).unwrap();
        let back = from_json(&to_json(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        let m = run_mapcheck(&builtin_case("unit-square", 0).unwrap()).unwrap();
        assert_eq!(from_json(&to_json(&m).unwrap()).unwrap(), m);
    }

    #[test]
    fn plot_blocks() {
        let mut c = builtin_case("cantilever-quad", 0).unwrap();
        c.geometry.quad.as_mut().unwrap().divisions = vec![[2, 2]];
        c.analysis.modes = 2;
        let r = run_modal(&c, ModalRequest { plot: true }).unwrap();
        let text = to_plot(&r);
        let blocks: Vec<&str> = text.split("\n\n").collect();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].lines().count(), 1 + 4 * 25);
        assert_eq!(blocks[1].lines().next().unwrap(), "# mesh 2x2 mode 2");
    }

    #[test]
    fn compare_pascal_against_bilinear() {
        let mut c = builtin_case("clamped-quad", 0).unwrap();
        c.geometry.quad.as_mut().unwrap().divisions = vec![[2, 2]];
        let r = compare(&c, SchemeKind::Pascal6, SchemeKind::Bilinear).unwrap();
        assert_eq!(r.comparison.len(), 3);
        assert!(r.comparison.iter().all(|x| x.relative_difference < 1e-8));
        assert!(r.frequencies[0].mesh.ends_with(":pascal6"));
    }
}
