use polymim::advection::{adv1, adv2, AdvectionConfig, AdvectionContext, Side};
use polymim::mesh::{gen_cubed_sphere, gen_hex_icos, PolyMesh, Vec3};
use polymim::swe::compensated_sum;
use polymim::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const A: f64 = 6.37122e6;

/// Time-integrated nondivergent volume fluxes of a solid-body rotation
/// about `axis` with equatorial speed `u0`, on the primal or dual edges.
fn solid_body(mesh: &PolyMesh, side: Side, axis: Vec3, u0: f64, dt: f64) -> Vec<f64> {
    let psi = |x: Vec3| -A * u0 * axis.dot(&x);
    match side {
        Side::Primal => {
            let (d1, _) = mesh.incidence();
            let p: Vec<f64> = mesh.verts().iter().map(|&v| psi(v)).collect();
            d1.apply(&p).into_iter().map(|x| -dt * x).collect()
        }
        Side::Dual => {
            let (db1, _) = mesh.dual_incidence();
            let p: Vec<f64> = mesh.centers().iter().map(|&c| psi(c)).collect();
            db1.apply(&p).into_iter().map(|x| dt * x).collect()
        }
    }
}

fn bell(x: Vec3) -> f64 {
    let c = Vec3::new(1.0, 0.3, 0.4).normalize();
    let r = x.dot(&c).clamp(-1.0, 1.0).acos();
    if r < 0.6 {
        0.5 * (1.0 + (std::f64::consts::PI * r / 0.6).cos())
    } else {
        0.0
    }
}

fn cell_points(mesh: &PolyMesh, side: Side) -> Vec<Vec3> {
    match side {
        Side::Primal => mesh.centers().to_vec(),
        Side::Dual => mesh.verts().to_vec(),
    }
}

/// Advances mixing ratios one step: `(c q - div F) / (c - div T)`.
fn update(ctx: &AdvectionContext, t: &[f64], q: &[f64], carrier: &[f64], f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (df, dt) = (ctx.divergence(f), ctx.divergence(t));
    let c_new: Vec<f64> = carrier.iter().zip(&dt).map(|(c, d)| c - d).collect();
    let q_new = (0..q.len()).map(|i| (carrier[i] * q[i] - df[i]) / c_new[i]).collect();
    (q_new, c_new)
}

#[test]
fn constant_fields_are_preserved() {
    let mesh = gen_hex_icos(3).unwrap();
    for limiter in [false, true] {
        let cfg = AdvectionConfig { limiter, order: 2 };
        // mixing ratios on either side: exact for any carrier flux
        for side in [Side::Primal, Side::Dual] {
            let ctx = AdvectionContext::new(&mesh, side, A, cfg);
            let t = solid_body(&mesh, side, Vec3::new(0.2, -0.4, 1.0).normalize(), 40.0, 3600.0);
            let q = vec![1.7; ctx.n_cells()];
            let f = ctx.fluxes(&t, &q, &ctx.areas(), Some(&t)).unwrap();
            assert!(f.iter().zip(&t).all(|(f, t)| *f == 1.7 * t), "{side:?} limiter {limiter}");
        }
        // densities under a nondivergent flux
        let ctx = AdvectionContext::new(&mesh, Side::Primal, A, cfg);
        let u = solid_body(&mesh, Side::Primal, Vec3::z(), 40.0, 3600.0);
        let phi: Vec<f64> = ctx.areas().iter().map(|a| 3.0e4 * a).collect();
        let f = adv1(&ctx, &u, &phi, None).unwrap();
        for (fe, ue) in f.iter().zip(&u) {
            assert!((fe - 3.0e4 * ue).abs() <= 1e-12 * (3.0e4 * ue).abs());
        }
    }
}

#[test]
fn divergent_density_fluxes_use_the_midstep_density() {
    let mesh = gen_hex_icos(2).unwrap();
    let ctx = AdvectionContext::new(&mesh, Side::Primal, A, AdvectionConfig::default());
    let areas = ctx.areas();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u: Vec<f64> = (0..mesh.n_edges()).map(|e| 0.05 * areas[mesh.edge_cells(e)[0]] * rng.random_range(-1.0..1.0)).collect();
    let phi: Vec<f64> = areas.iter().map(|a| 2.0 * a).collect();
    let f = adv1(&ctx, &u, &phi, None).unwrap();
    let div = ctx.divergence(&u);
    for (e, (fe, ue)) in f.iter().zip(&u).enumerate() {
        let [a, b] = mesh.edge_cells(e);
        let up = if *ue >= 0.0 { a } else { b };
        let expect = 2.0 * ue * (1.0 - 0.5 * div[up] / areas[up]);
        assert!((fe - expect).abs() <= 1e-14 * expect.abs().max(1e-300));
    }
}

#[test]
fn zero_carrier_flux_gives_zero() {
    let mesh = gen_cubed_sphere(3).unwrap();
    for side in [Side::Primal, Side::Dual] {
        for limiter in [false, true] {
            let ctx = AdvectionContext::new(&mesh, side, A, AdvectionConfig { limiter, order: 2 });
            let q: Vec<f64> = cell_points(&mesh, side).iter().map(|&x| bell(x)).collect();
            let zero = vec![0.0; mesh.n_edges()];
            let f = ctx.fluxes(&zero, &q, &ctx.areas(), Some(&zero)).unwrap();
            assert!(f.iter().all(|&x| x == 0.0));
        }
    }
}

#[test]
fn one_step_conserves_mass() {
    let mesh = gen_hex_icos(3).unwrap();
    let ctx = AdvectionContext::new(&mesh, Side::Primal, A, AdvectionConfig::default());
    let u = solid_body(&mesh, Side::Primal, Vec3::new(0.0, 0.6, 0.8), 40.0, 3600.0);
    let phi: Vec<f64> = ctx
        .areas()
        .iter()
        .zip(mesh.centers())
        .map(|(a, &x)| a * (1.0e4 + 2.0e3 * bell(x)))
        .collect();
    let f = adv1(&ctx, &u, &phi, Some(&u)).unwrap();
    let div = ctx.divergence(&f);
    let after: Vec<f64> = phi.iter().zip(&div).map(|(p, d)| p - d).collect();
    let (m0, m1) = (compensated_sum(&phi), compensated_sum(&after));
    assert!(((m1 - m0) / m0).abs() <= 1e-13);
    assert!(div.iter().any(|d| d.abs() > 1e-6 * m0 / mesh.n_cells() as f64));
}

#[test]
fn limiter_prevents_new_extrema() {
    let mesh = gen_hex_icos(3).unwrap();
    for side in [Side::Primal, Side::Dual] {
        let axis = Vec3::new(0.3, 0.1, 1.0).normalize();
        let t = solid_body(&mesh, side, axis, 60.0, 3600.0);
        let q0: Vec<f64> = cell_points(&mesh, side).iter().map(|&x| bell(x)).collect();
        let (lo, hi) = (0.0, q0.iter().cloned().fold(f64::MIN, f64::max));
        let mut overshoot = [0.0f64; 2];
        for (k, limiter) in [false, true].into_iter().enumerate() {
            let ctx = AdvectionContext::new(&mesh, side, A, AdvectionConfig { limiter, order: 2 });
            let carrier = ctx.areas();
            let mut q = q0.clone();
            for _ in 0..10 {
                let f = ctx.fluxes(&t, &q, &carrier, None).unwrap();
                q = update(&ctx, &t, &q, &carrier, &f).0;
                for &x in &q {
                    overshoot[k] = overshoot[k].max(x - hi).max(lo - x);
                }
            }
        }
        assert!(overshoot[1] <= 1e-12, "{side:?}: limited overshoot {:e}", overshoot[1]);
        assert!(overshoot[0] > 1e-6, "{side:?}: unlimited scheme should over/undershoot");
    }
}

#[test]
fn cfl_violation_names_the_cell() {
    let mesh = gen_hex_icos(2).unwrap();
    let ctx = AdvectionContext::new(&mesh, Side::Dual, A, AdvectionConfig::default());
    let mut t = vec![0.0; mesh.n_edges()];
    let areas = ctx.areas();
    let e = 17;
    let [v0, v1] = mesh.edge_verts(e);
    t[e] = -2.0 * areas[v0].max(areas[v1]);
    let q = vec![1.0; ctx.n_cells()];
    match ctx.fluxes(&t, &q, &areas, None) {
        Err(Error::Advection { cell, courant, .. }) => {
            assert!(cell == v0 || cell == v1);
            assert!(courant > 1.0);
        }
        other => panic!("expected a CFL error, got {other:?}"),
    }
    let (_, c) = ctx.max_courant(&t, &areas).unwrap();
    assert!(c > 1.0);
    let mut bad = areas.clone();
    bad[3] = 0.0;
    assert!(ctx.max_courant(&t, &bad).is_err());
}

fn random_dual_state(mesh: &PolyMesh, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctx = AdvectionContext::new(mesh, Side::Dual, A, AdvectionConfig::default());
    let phi_bar: Vec<f64> = ctx.areas().iter().map(|a| a * rng.random_range(5.0e4..1.0e5)).collect();
    let f: Vec<f64> = (0..mesh.n_edges())
        .map(|e| {
            let [v0, v1] = mesh.edge_verts(e);
            0.1 * phi_bar[v0].min(phi_bar[v1]) * rng.random_range(-1.0..1.0)
        })
        .collect();
    (phi_bar, f)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn uniform_pv_stays_uniform(seed in 0u64..u64::MAX, limiter in any::<bool>()) {
        let mesh = gen_hex_icos(2).unwrap();
        let ctx = AdvectionContext::new(&mesh, Side::Dual, A, AdvectionConfig { limiter, order: 2 });
        let (phi_bar, f) = random_dual_state(&mesh, seed);
        let pv = 1.0e-4 / 1.0e5;
        let pi = vec![pv; ctx.n_cells()];
        let q = adv2(&ctx, &f, &pi, &phi_bar, Some(&f)).unwrap();
        let (pi_new, _) = update(&ctx, &f, &pi, &phi_bar, &q);
        for p in pi_new {
            prop_assert!((p - pv).abs() <= 1e-12 * pv);
        }
    }

    #[test]
    fn fluxes_telescope(seed in 0u64..u64::MAX, limiter in any::<bool>(), order in 1u8..=2) {
        let mesh = gen_hex_icos(2).unwrap();
        let ctx = AdvectionContext::new(&mesh, Side::Dual, A, AdvectionConfig { limiter, order });
        let (phi_bar, f) = random_dual_state(&mesh, seed);
        let pi: Vec<f64> = mesh.verts().iter().map(|&x| 1e-9 * (1.0 + x.z + bell(x))).collect();
        let q = adv2(&ctx, &f, &pi, &phi_bar, None).unwrap();
        let content: Vec<f64> = phi_bar.iter().zip(&pi).map(|(m, p)| m * p).collect();
        let after: Vec<f64> = content.iter().zip(ctx.divergence(&q)).map(|(c, d)| c - d).collect();
        let (m0, m1) = (compensated_sum(&content), compensated_sum(&after));
        prop_assert!(((m1 - m0) / m0).abs() <= 1e-14);
        // positivity of the limited update
        if limiter {
            let (pi_new, _) = update(&ctx, &f, &pi, &phi_bar, &q);
            prop_assert!(pi_new.iter().all(|&p| p > 0.0));
        }
    }
}
