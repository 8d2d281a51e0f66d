#![allow(clippy::needless_range_loop)]

use pascal_plate::cli_io::random_convex_quad;
use pascal_plate::mapping::{MappingScheme, QuadGeometry, SchemeKind};
use pascal_plate::plate_element::{element_mass, element_stiffness, PlateMaterial};
use pascal_plate::quadrature::{
    integrate_element, polygon_section_properties, section_properties, GaussRule,
};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = SchemeKind> {
    prop::sample::select(SchemeKind::ALL.to_vec())
}

fn quad() -> impl Strategy<Value = QuadGeometry<f64>> {
    any::<u64>().prop_map(|s| QuadGeometry::new(random_convex_quad(s)).unwrap())
}

/// Unit square with each vertex moved by up to 7.5% of the side, then
/// scaled, rotated and translated.
fn mild_quad() -> impl Strategy<Value = QuadGeometry<f64>> {
    (
        prop::array::uniform8(-0.075f64..0.075),
        0.2f64..5.0,
        0.0f64..std::f64::consts::TAU,
        -10.0f64..10.0,
    )
        .prop_map(|(d, scale, rot, shift)| {
            let base = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
            let v: [[f64; 2]; 4] = std::array::from_fn(|k| {
                let (x, y) = (base[k][0] + d[2 * k], base[k][1] + d[2 * k + 1]);
                let (c, s) = (rot.cos(), rot.sin());
                [
                    scale * (c * x - s * y) + shift,
                    scale * (s * x + c * y) - shift,
                ]
            });
            QuadGeometry::new(v).unwrap()
        })
}

fn max_abs(a: &[[f64; 12]; 12]) -> f64 {
    a.iter().flatten().fold(0.0, |m: f64, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauss_rule_exact_for_tensor_monomials(
        (n, p, q) in (1usize..=6).prop_flat_map(|n| (Just(n), 0..2 * n as u32, 0..2 * n as u32))
    ) {
        let r = GaussRule::<f64>::new(n).unwrap();
        let exact = |d: u32| if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
        let got: f64 = r.points_2d().map(|(t, w)| w * t[0].powi(p as i32) * t[1].powi(q as i32)).sum();
        prop_assert!((got - exact(p) * exact(q)).abs() < 1e-13);
    }

    #[test]
    fn section_properties_match_polygon(q in quad(), k in kind()) {
        let s = MappingScheme::build(&q, k);
        let p = section_properties(&s, &GaussRule::new(3).unwrap()).unwrap();
        let exact = polygon_section_properties(q.vertices());
        let scale = q.diameter().powi(4) + exact.i_x1.abs() + exact.i_x2.abs();
        prop_assert!(p.max_abs_diff(&exact) <= 1e-10 * scale);
    }

    #[test]
    fn area_is_additive_over_a_split(q in quad(), s in 0.2f64..0.8) {
        // split along the segment joining points at fraction s on edges 1-2 and 4-3
        let v = *q.vertices();
        let lerp = |a: [f64; 2], b: [f64; 2]| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        let (m12, m43) = (lerp(v[0], v[1]), lerp(v[3], v[2]));
        let left = QuadGeometry::new([v[0], m12, m43, v[3]]).unwrap();
        let right = QuadGeometry::new([m12, v[1], v[2], m43]).unwrap();
        let r = GaussRule::new(3).unwrap();
        let area = |g: &QuadGeometry<f64>| integrate_element(&MappingScheme::pascal(g), &r, |_, _| 1.0).unwrap();
        prop_assert!((area(&left) + area(&right) - area(&q)).abs() <= 1e-12 * q.diameter().powi(2));
    }

    #[test]
    fn area_scales_quadratically(q in quad(), c in 0.1f64..10.0, k in kind()) {
        let scaled = QuadGeometry::new(q.vertices().map(|p| [c * p[0], c * p[1]])).unwrap();
        let r = GaussRule::new(2).unwrap();
        let a = integrate_element(&MappingScheme::build(&q, k), &r, |_, _| 1.0).unwrap();
        let b = integrate_element(&MappingScheme::build(&scaled, k), &r, |_, _| 1.0).unwrap();
        prop_assert!((b - c * c * a).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn partition_of_unity_pointwise(q in quad(), k in kind(), t1 in -1.5f64..1.5, t2 in -1.5f64..1.5) {
        let s = MappingScheme::build(&q, k);
        let n = s.shapes.eval([t1, t2]);
        prop_assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let x = s.map_point([t1, t2]);
        let nodes = s.nodal_coordinates();
        for c in 0..2 {
            let interp: f64 = n.iter().zip(&nodes).map(|(w, p)| w * p[c]).sum();
            prop_assert!((interp - x[c]).abs() <= 1e-9 * q.diameter());
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(q in quad(), k in kind(), t1 in -1.0f64..1.0, t2 in -1.0f64..1.0) {
        let s = MappingScheme::build(&q, k);
        let j = s.jacobian([t1, t2]).unwrap();
        let h = 1e-6;
        for a in 0..2 {
            let (mut p, mut m) = ([t1, t2], [t1, t2]);
            p[a] += h;
            m[a] -= h;
            let (xp, xm) = (s.map_point(p), s.map_point(m));
            for c in 0..2 {
                let fd = (xp[c] - xm[c]) / (2.0 * h);
                prop_assert!((fd - j.covariant[a][c]).abs() <= 1e-6 * q.diameter());
            }
        }
    }

    #[test]
    fn stiffness_symmetric_with_translation_nullvector(q in quad()) {
        let k = element_stiffness(&MappingScheme::pascal(&q), &PlateMaterial::unit(), &GaussRule::new(3).unwrap()).unwrap();
        let km = max_abs(&k);
        for i in 0..12 {
            let mut r = 0.0;
            for j in 0..12 {
                prop_assert!((k[i][j] - k[j][i]).abs() <= 1e-12 * km);
                if j % 3 == 0 {
                    r += k[i][j];
                }
            }
            prop_assert!(r.abs() <= 1e-9 * km);
        }
    }

    #[test]
    fn gauss_four_agrees_with_three(q in mild_quad()) {
        let s = MappingScheme::pascal(&q);
        let mat = PlateMaterial::unit();
        let (r3, r4) = (GaussRule::new(3).unwrap(), GaussRule::new(4).unwrap());
        let (k3, k4) = (element_stiffness(&s, &mat, &r3).unwrap(), element_stiffness(&s, &mat, &r4).unwrap());
        let (m3, m4) = (element_mass(&s, &mat, &r3, false).unwrap(), element_mass(&s, &mat, &r4, false).unwrap());
        let rel = |a: &[[f64; 12]; 12], b: &[[f64; 12]; 12]| {
            let d = a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            d / b.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
        };
        prop_assert!(rel(&k3, &k4) < 1e-3, "K {}", rel(&k3, &k4));
        prop_assert!(rel(&m3, &m4) < 1e-3, "M {}", rel(&m3, &m4));
    }

    #[test]
    fn gauss_three_exact_on_parallelograms(a in 0.2f64..5.0, b in 0.2f64..5.0, shear in -1.0f64..1.0) {
        let q = QuadGeometry::new([[0.0, 0.0], [a, 0.0], [a + shear, b], [shear, b]]).unwrap();
        let s = MappingScheme::pascal(&q);
        let mat = PlateMaterial::unit();
        let (r3, r6) = (GaussRule::new(3).unwrap(), GaussRule::new(6).unwrap());
        let (k3, k6) = (element_stiffness(&s, &mat, &r3).unwrap(), element_stiffness(&s, &mat, &r6).unwrap());
        let km = max_abs(&k6);
        for i in 0..12 {
            for j in 0..12 {
                prop_assert!((k3[i][j] - k6[i][j]).abs() <= 1e-12 * km);
            }
        }
    }

    #[test]
    fn element_matrices_translation_invariant(q in quad(), dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
        let moved = q.translated([dx, dy]).unwrap();
        let mat = PlateMaterial::unit();
        let r = GaussRule::new(3).unwrap();
        let (a, b) = (MappingScheme::pascal(&q), MappingScheme::pascal(&moved));
        let (ka, kb) = (element_stiffness(&a, &mat, &r).unwrap(), element_stiffness(&b, &mat, &r).unwrap());
        let (ma, mb) = (element_mass(&a, &mat, &r, true).unwrap(), element_mass(&b, &mat, &r, true).unwrap());
        let (ks, ms) = (max_abs(&ka), max_abs(&ma));
        for i in 0..12 {
            for j in 0..12 {
                prop_assert!((ka[i][j] - kb[i][j]).abs() <= 1e-8 * ks);
                prop_assert!((ma[i][j] - mb[i][j]).abs() <= 1e-8 * ms);
            }
        }
    }
}
