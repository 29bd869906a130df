use std::f64::consts::PI;

use proptest::prelude::*;

use se2ot::io::Se2Field;
use se2ot::oracles::{GeodesicGraph, Mat3};
use se2ot::ot::{
    barycenter, porous_prox, sinkhorn, sinkhorn_distance, so2_counterexample, BarycenterConfig,
    GradientFlowConfig, SinkhornConfig,
};
use se2ot::se2::{angle_distance, log_coords};
use se2ot::{GibbsKernel, GridMeasure, GroupElement, MetricParams, Se2Grid};

fn element() -> impl Strategy<Value = GroupElement> {
    (-10.0..10.0f64, -10.0..10.0f64, -PI..PI).prop_map(|(x, y, t)| GroupElement::new(x, y, t))
}

fn metric() -> impl Strategy<Value = MetricParams> {
    (0.2..3.0f64, 0.2..6.0f64, 0.2..3.0f64).prop_map(|(a, b, c)| MetricParams::new(a, b, c).unwrap())
}

fn gap(a: &GroupElement, b: &GroupElement) -> f64 {
    (a.x - b.x).abs().max((a.y - b.y).abs()).max(angle_distance(a.theta, b.theta))
}

fn small_grid() -> Se2Grid {
    Se2Grid::new(8, 8, 4, [0.0, 8.0, 0.0, 8.0]).unwrap()
}

fn density(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn product_is_associative(g in element(), h in element(), k in element()) {
        let left = g.compose(&h).compose(&k);
        let right = g.compose(&h.compose(&k));
        prop_assert!(gap(&left, &right) < 1e-10);
    }

    #[test]
    fn identity_and_inverse_laws(g in element()) {
        let e = GroupElement::IDENTITY;
        prop_assert!(gap(&g.compose(&e), &g) < 1e-12);
        prop_assert!(gap(&e.compose(&g), &g) < 1e-12);
        prop_assert!(gap(&g.compose(&g.inverse()), &e) < 1e-12);
        prop_assert!(gap(&g.inverse().compose(&g), &e) < 1e-12);
    }

    #[test]
    fn matrix_representation_agrees(g in element(), h in element(), p in prop::array::uniform2(-5.0..5.0f64)) {
        let (mg, mh) = (Mat3::from_element(&g), Mat3::from_element(&h));
        prop_assert!(gap(&g.compose(&h), &mg.mul(&mh).to_element()) < 1e-12);
        prop_assert!(gap(&g.inverse(), &mg.inverse().to_element()) < 1e-12);
        let (a, b) = (g.act(p), mg.apply(p));
        prop_assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn rho_b_is_inversion_symmetric(g in element(), m in metric()) {
        prop_assert!((m.rho_b(&g) - m.rho_b(&g.inverse())).abs() < 1e-12);
    }

    #[test]
    fn rho_b_is_left_invariant(g in element(), h in element(), k in element(), m in metric()) {
        let a = m.rho_b(&h.relative_to(&g));
        let b = m.rho_b(&k.compose(&h).relative_to(&k.compose(&g)));
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a));
    }

    #[test]
    fn rho_b_exact_on_subgroups(x in -10.0..10.0f64, t in -3.1..3.1f64, m in metric()) {
        prop_assert!((m.rho_b(&GroupElement::rotation(t)) - m.w3() * t.abs()).abs() < 1e-12);
        prop_assert!((m.rho_b(&GroupElement::translation(x, 0.0)) - m.w1() * x.abs()).abs() < 1e-12);
    }

    #[test]
    fn log_coords_agree_with_matrix_logarithm(
        x in -5.0..5.0f64, y in -5.0..5.0f64, t in -3.0..3.0f64,
    ) {
        let g = GroupElement::new(x, y, t);
        let l = Mat3::from_element(&g).log().unwrap();
        let c = log_coords(&g).unwrap();
        prop_assert!((l.0[0][2] - c[0]).abs() < 1e-8);
        prop_assert!((l.0[1][2] - c[1]).abs() < 1e-8);
        prop_assert!((l.0[1][0] - c[2]).abs() < 1e-8);
    }

    #[test]
    fn circle_counterexample_is_strict(e in 0.01..1.5f64, p in 1.0..3.0f64) {
        let (translation, optimal) = so2_counterexample(e, p).unwrap();
        prop_assert!((translation - PI.powf(p)).abs() < 1e-9);
        prop_assert!((optimal - (PI - 2.0 * e).powf(p)).abs() < 1e-9);
        prop_assert!(optimal < translation);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convolution_adjoint_identity(
        a in density(256), b in density(256), eps in 0.3..3.0f64, m in metric(),
    ) {
        let k = GibbsKernel::build(&small_grid(), &m, eps, 2.0, 1e-12).unwrap();
        let lhs: f64 = k.convolve(&b).iter().zip(&a).map(|(x, y)| x * y).sum();
        let rhs: f64 = k.convolve_adjoint(&a).iter().zip(&b).map(|(x, y)| x * y).sum();
        prop_assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn convolution_commutes_with_quarter_turns(
        b in density(256), q in 0..4i32, eps in 0.3..3.0f64, m in metric(),
    ) {
        let grid = small_grid();
        let k = GibbsKernel::build(&grid, &m, eps, 2.0, 1e-12).unwrap();
        let g = grid.center_rotation(q);
        let turned = k.convolve(&grid.pushforward_values(&b, &g).unwrap());
        let expected = grid.pushforward_values(&k.convolve(&b), &g).unwrap();
        for (x, y) in turned.iter().zip(&expected) {
            prop_assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn convolution_mass_bound(b in density(256), eps in 0.3..3.0f64, m in metric()) {
        let grid = small_grid();
        let k = GibbsKernel::build(&grid, &m, eps, 2.0, 1e-12).unwrap();
        let mut stencil_mass = vec![0.0; grid.ntheta()];
        k.for_each_entry(|kh, _, _, _, v| stencil_mass[kh] += v * grid.haar_cell());
        let bound = stencil_mass.iter().cloned().fold(0.0, f64::max)
            * b.iter().sum::<f64>() * grid.haar_cell();
        let out: f64 = k.convolve(&b).iter().sum::<f64>() * grid.haar_cell();
        prop_assert!(out <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn pushforward_round_trip(d in density(256), q in 0..4i32) {
        let grid = small_grid();
        let mu = GridMeasure::new(grid, d).unwrap();
        let back = mu
            .pushforward(&grid.center_rotation(q)).unwrap()
            .pushforward(&grid.center_rotation(-q)).unwrap();
        prop_assert!(back.l1_distance(&mu) < 1e-14);
        prop_assert!((back.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sinkhorn_is_invariant_and_feasible(a in density(256), b in density(256), q in 1..4i32) {
        let grid = small_grid();
        let m = MetricParams::new(1.0, 2.0, 1.0).unwrap();
        let k = GibbsKernel::build(&grid, &m, 1.0, 2.0, 1e-12).unwrap();
        let cfg = SinkhornConfig::new(1.0).with_max_iters(5000);
        let (mu, nu) = (GridMeasure::new(grid, a).unwrap(), GridMeasure::new(grid, b).unwrap());
        let g = grid.center_rotation(q);
        let w = sinkhorn_distance(&mu, &nu, &k, &cfg).unwrap();
        let wq = sinkhorn_distance(&mu.pushforward(&g).unwrap(), &nu.pushforward(&g).unwrap(), &k, &cfg).unwrap();
        prop_assert!(w.converged && wq.converged);
        prop_assert!((w.value - wq.value).abs() < 1e-9);
        prop_assert!(w.state.marginal_err < 1e-6);
    }

    #[test]
    fn barycenter_is_equivariant(a in density(256), b in density(256), l in 0.1..0.9f64, q in 1..4i32) {
        let grid = small_grid();
        let m = MetricParams::new(1.0, 2.0, 1.0).unwrap();
        let k = GibbsKernel::build(&grid, &m, 1.0, 2.0, 1e-12).unwrap();
        let cfg = BarycenterConfig::new(vec![l, 1.0 - l], SinkhornConfig::new(1.0));
        let (mu, nu) = (GridMeasure::new(grid, a).unwrap(), GridMeasure::new(grid, b).unwrap());
        let g = grid.center_rotation(q);
        let bar = barycenter(&[mu.clone(), nu.clone()], &cfg, &k).unwrap();
        let barq = barycenter(&[mu.pushforward(&g).unwrap(), nu.pushforward(&g).unwrap()], &cfg, &k).unwrap();
        let expected = bar.measure.pushforward(&g).unwrap();
        for (x, y) in barq.measure.density().iter().zip(expected.density()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        prop_assert!((bar.measure.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn porous_prox_is_stationary(
        z in prop::collection::vec(0.0..5.0f64, 64), m in 1.5..6.0f64, tau in 1e-3..1e3f64, eps in 0.1..2.0f64,
    ) {
        let cfg = GradientFlowConfig::new(m, tau, SinkhornConfig::new(eps));
        let (s, stats) = porous_prox(&z, &cfg, eps);
        prop_assert!(stats.max_residual < 1e-10);
        for (si, zi) in s.iter().zip(&z) {
            prop_assert!(*si >= 0.0 && *si <= zi * (1.0 + 1e-14));
        }
    }

    #[test]
    fn se2f_round_trip_is_bit_identical(values in prop::collection::vec(any::<f64>(), 256)) {
        let field = Se2Field::new(small_grid(), values).unwrap();
        let mut bytes = Vec::new();
        field.to_writer(&mut bytes).unwrap();
        let back = Se2Field::from_reader(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.grid, field.grid);
        for (a, b) in back.values.iter().zip(&field.values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dijkstra_is_symmetric(s in 0..512usize, t in 0..512usize, zeta in 1.0..4.0f64) {
        let grid = Se2Grid::new(8, 8, 8, [0.0, 8.0, 0.0, 8.0]).unwrap();
        let graph = GeodesicGraph::new(grid, MetricParams::new(1.0, zeta, 1.0).unwrap(), 2).unwrap();
        let (dst, dts) = (graph.distance_map(s)[t], graph.distance_map(t)[s]);
        prop_assert!((dst - dts).abs() < 1e-12 * (1.0 + dst));
    }

    #[test]
    fn rho_c_dominates_lattice_distance(t in 0..512usize, zeta in 1.0..4.0f64) {
        let grid = Se2Grid::new(8, 8, 8, [0.0, 8.0, 0.0, 8.0]).unwrap();
        let metric = MetricParams::new(1.0, zeta, 1.0).unwrap();
        let graph = GeodesicGraph::new(grid, metric, 2).unwrap();
        let source = grid.index(4, 4, 4);
        let d = graph.distance_map(source)[t];
        if let Ok(rc) = metric.rho_c(&grid.site(source).relative_to(&grid.site(t))) {
            prop_assert!(rc >= d * 0.85 - 1e-12, "rho_c {rc} vs d {d}");
        }
    }
}

#[test]
fn marginal_error_mostly_decreases() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
    let grid = small_grid();
    let k = GibbsKernel::build(&grid, &MetricParams::new(1.0, 2.0, 1.0).unwrap(), 0.5, 2.0, 1e-12).unwrap();
    let mut cfg = SinkhornConfig::new(0.5).with_max_iters(3000);
    cfg.log_every = 1;
    let mut increases = 0;
    for _ in 0..20 {
        let mut draw = || {
            let d: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
            GridMeasure::new(grid, d).unwrap()
        };
        let (mu, nu) = (draw(), draw());
        let out = sinkhorn(&mu, &nu, &k, &cfg, None).unwrap();
        assert!(out.converged);
        increases += out.history.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-12)).count();
    }
    // Monotonicity is empirical, not a theorem: report rather than assert.
    println!("marginal error increased in {increases} iterations across 20 instances");
}
