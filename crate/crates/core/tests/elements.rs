use nalgebra::DVector;
use polymim::cases::quadrature::DEG4;
use polymim::elements::{AffineVec, Elements, TriGeom, P1};
use polymim::mesh::{gen_cubed_sphere, gen_hex_icos, Vec3};
use polymim::space::Space;
use polymim::SparseOp;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Degree-4 rule on the planar triangle.
fn integrate_tri(p: [Vec3; 3], f: &impl Fn(Vec3) -> f64) -> f64 {
    let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
    DEG4.iter().map(|(b, w)| w * f(p[0] * b[0] + p[1] * b[1] + p[2] * b[2])).sum::<f64>() * area
}

/// Degree-4 rule applied on the 4 midpoint subtriangles: an independent,
/// finer quadrature.
fn refined(p: [Vec3; 3], f: &impl Fn(Vec3) -> f64) -> f64 {
    let m = [(p[1] + p[2]) / 2.0, (p[2] + p[0]) / 2.0, (p[0] + p[1]) / 2.0];
    integrate_tri([p[0], m[2], m[1]], f)
        + integrate_tri([m[2], p[1], m[0]], f)
        + integrate_tri([m[1], m[0], p[2]], f)
        + integrate_tri([m[0], m[1], m[2]], f)
}

/// Least-squares residual of `A x = b`, relative to `|b|`.
fn lstsq_residual(a: &SparseOp, b: &[f64]) -> f64 {
    let a = a.to_dense();
    let b = DVector::from_column_slice(b);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-10).unwrap();
    (&a * x - &b).norm() / b.norm()
}

fn random_zero_mean(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    v
}

#[test]
fn derivatives_are_exact_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for mesh in [gen_hex_icos(2).unwrap(), gen_cubed_sphere(3).unwrap()] {
        let (d1, d2) = mesh.incidence();
        let (db1, db2) = mesh.dual_incidence();
        let psi: Vec<f64> = (0..mesh.n_verts()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u: Vec<f64> = d1.apply(&psi).into_iter().map(|x| -x).collect();
        assert!(d2.apply(&u).iter().all(|&x| x == 0.0));
        let phi = random_zero_mean(mesh.n_cells(), &mut rng);
        assert!(lstsq_residual(&d2, &phi) < 1e-10);
        let chi: Vec<f64> = (0..mesh.n_cells()).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(db2.apply(&db1.apply(&chi)).iter().all(|&x| x == 0.0));
        let xi = random_zero_mean(mesh.n_verts(), &mut rng);
        assert!(lstsq_residual(&db2, &xi) < 1e-10);
        // a field with nonzero mean is not a divergence
        let ones = vec![1.0; mesh.n_cells()];
        assert!(lstsq_residual(&d2, &ones) > 0.5);
    }
}

#[test]
fn basis_functions_partition_and_cover() {
    let mesh = gen_hex_icos(2).unwrap();
    let el = Elements::build(&mesh).unwrap();
    // V2 functions integrate to one; V0 functions sum to one everywhere
    for (i, &a) in el.cell_areas.iter().enumerate() {
        let tris = mesh.cell_tris(i);
        let integral: f64 = tris.map(|t| el.geom[t].area * el.v2_value(&mesh, t)).sum();
        assert!((integral - 1.0).abs() < 1e-13);
        assert!((a - mesh.cell_areas()[i]).abs() < 1e-15);
    }
    for t in 0..mesh.n_tris() {
        let g = &el.geom[t];
        let sum = el.v0[t].iter().fold(P1::default(), |acc, (_, p)| P1 {
            mean: acc.mean + p.mean,
            grad: acc.grad + p.grad,
        });
        assert!((sum.mean - 1.0).abs() < 1e-12 && sum.grad.norm() < 1e-10);
        let sum = el.dual_v0[t].iter().fold(P1::default(), |acc, (_, p)| P1 {
            mean: acc.mean + p.mean,
            grad: acc.grad + p.grad,
        });
        assert!((sum.mean - 1.0).abs() < 1e-12 && sum.grad.norm() < 1e-10, "t {t} area {}", g.area);
    }
    for space in [Space::V2, Space::V1, Space::V0, Space::DualV2, Space::DualV1, Space::DualV0] {
        let b = el.basis(&mesh, space);
        assert_eq!(b.dofs.len(), space.dim(&mesh));
        assert!(b.dofs.iter().all(|d| !d.is_empty()));
        let mut text = Vec::new();
        b.write_text(&mut text).unwrap();
        let lines = String::from_utf8(text).unwrap();
        let rows = lines.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, b.dofs.iter().map(Vec::len).sum::<usize>());
    }
}

fn corners() -> impl Strategy<Value = [Vec3; 3]> {
    prop::array::uniform9(-1.0f64..1.0).prop_filter_map("degenerate", |c| {
        let p = [
            Vec3::new(c[0], c[1], c[2]) + Vec3::new(0.0, 0.0, 3.0),
            Vec3::new(c[3], c[4], c[5]) + Vec3::new(0.0, 0.0, 3.0),
            Vec3::new(c[6], c[7], c[8]) + Vec3::new(0.0, 0.0, 3.0),
        ];
        let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
        (area > 0.05).then_some(p)
    })
}

fn tangent_field(geom: &TriGeom, a: [f64; 3], b: f64, c: f64) -> AffineVec {
    let raw = Vec3::new(a[0], a[1], a[2]);
    AffineVec {
        a: raw - geom.normal * geom.normal.dot(&raw),
        b,
        c,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn closed_form_integrals_match_quadrature(
        p in corners(),
        a in prop::array::uniform3(-2.0f64..2.0), b in -2.0f64..2.0, c in -2.0f64..2.0,
        a2 in prop::array::uniform3(-2.0f64..2.0), b2 in -2.0f64..2.0, c2 in -2.0f64..2.0,
        s in prop::array::uniform4(-2.0f64..2.0), s2 in prop::array::uniform4(-2.0f64..2.0),
    ) {
        let g = TriGeom::new(p);
        let u = tangent_field(&g, a, b, c);
        let v = tangent_field(&g, a2, b2, c2);
        let close = |exact: f64, quad: f64, scale: f64| (exact - quad).abs() <= 1e-13 * scale.max(1.0);
        let dot = |x: Vec3| u.eval(&g, x).dot(&v.eval(&g, x));
        let (q4, q16) = (integrate_tri(p, &dot), refined(p, &dot));
        let size = refined(p, &|x| dot(x).abs());
        prop_assert!(close(u.inner(&v, &g), q4, size));
        prop_assert!(close(q4, q16, size));
        let cross = |x: Vec3| g.normal.dot(&u.eval(&g, x).cross(&v.eval(&g, x)));
        let q = refined(p, &cross);
        prop_assert!(close(u.cross_inner(&v, &g), q, refined(p, &|x| cross(x).abs())));
        let proj = |w: [f64; 4]| {
            let raw = Vec3::new(w[1], w[2], w[3]);
            P1 { mean: w[0], grad: raw - g.normal * g.normal.dot(&raw) }
        };
        let (f, h) = (proj(s), proj(s2));
        let prod = |x: Vec3| f.eval(&g, x) * h.eval(&g, x);
        let q = refined(p, &prod);
        prop_assert!(close(f.inner(&h, &g), q, refined(p, &|x| prod(x).abs())));
        // divergence theorem on the facet
        let flux: f64 = (0..3).map(|k| {
            let (x0, x1) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            let n = (x1 - x0).cross(&g.normal);
            let mid = (x0 + x1) / 2.0;
            u.eval(&g, mid).dot(&n) * (if n.dot(&(mid - g.centroid)) > 0.0 { 1.0 } else { -1.0 })
        }).sum();
        prop_assert!((flux - u.divergence() * g.area).abs() < 1e-12);
    }
}

#[test]
fn perp_is_a_quarter_turn() {
    let g = TriGeom::new([Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0), Vec3::new(0.0, 1.0, 1.0)]);
    let u = AffineVec {
        a: Vec3::new(0.3, -0.2, 0.0),
        b: 0.7,
        c: -0.4,
    };
    let up = u.perp(&g);
    let x = Vec3::new(0.2, 0.5, 1.0);
    assert!((up.eval(&g, x) - g.normal.cross(&u.eval(&g, x))).norm() < 1e-15);
    assert_eq!(up.divergence(), -u.curl());
    assert_eq!(up.curl(), u.divergence());
}
