use coarse_ricci::curvature::{kappa, kappa_all_pairs};
use coarse_ricci::experiments::{random_kernel, random_space};
use coarse_ricci::model::{f_quadrature, s_kn, theorem1_bound, F};
use coarse_ricci::samplers::heisenberg::{distance, HeisenbergMetric, HeisenbergPoint};
use coarse_ricci::samplers::{Generator, GeneratorSpec};
use coarse_ricci::space::{gaussian_walk, open_ball, r_step_walk, validate_space, TriangleCheck};
use coarse_ricci::spectral::{check_bracket, laplacian, spectrum};
use coarse_ricci::transport::{kr_dual_value, naive_ball_transport_bound, validate_coupling, w1_exact};
use coarse_ricci::FiniteMetricMeasureSpace;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space_from(seed: u64, n: usize) -> FiniteMetricMeasureSpace {
    random_space(&mut ChaCha8Rng::seed_from_u64(seed), n).unwrap()
}

fn distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() }).collect();
    let mut w = if w.iter().all(|&x| x == 0.0) { vec![1.0; n] } else { w };
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

fn point() -> impl Strategy<Value = HeisenbergPoint> {
    (-2.0..2.0f64, -2.0..2.0f64, -3.0..3.0f64).prop_map(|(x, y, t)| HeisenbergPoint::new(x, y, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn w1_is_a_metric(seed in any::<u64>(), n in 2usize..=25) {
        let s = space_from(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let (a, b, c) = (distribution(&mut rng, n), distribution(&mut rng, n), distribution(&mut rng, n));
        let w = |p: &[f64], q: &[f64]| w1_exact(p, q, s.dist()).unwrap().value;
        let (ab, ba, bc, ac) = (w(&a, &b), w(&b, &a), w(&b, &c), w(&a, &c));
        prop_assert!((ab - ba).abs() <= 1e-9);
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(w(&a, &a).abs() <= 1e-12);
        prop_assert!(ab >= 0.0);
    }

    #[test]
    fn strong_duality_and_certificates(seed in any::<u64>(), n in 2usize..=40) {
        let s = space_from(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(7));
        let (mu, nu) = (distribution(&mut rng, n), distribution(&mut rng, n));
        let res = w1_exact(&mu, &nu, s.dist()).unwrap();
        prop_assert!(res.gap >= -1e-9 && res.gap <= 1e-8, "gap {}", res.gap);
        prop_assert!(validate_coupling(&res.coupling, 1e-10).is_empty());
        prop_assert!(res.coupling.entries.iter().all(|e| e.2 >= 0.0));
        let dual = kr_dual_value(&res.potential, &mu, &nu, s.dist()).unwrap();
        prop_assert!((dual - res.value).abs() <= 1e-8);
        // distance functions are 1-Lipschitz, so each gives a lower bound
        let x0 = rng.random_range(0..n);
        let f: Vec<f64> = (0..n).map(|i| s.d(x0, i)).collect();
        prop_assert!(kr_dual_value(&f, &mu, &nu, s.dist()).unwrap() <= res.value + 1e-9);
    }

    #[test]
    fn naive_plan_dominates(seed in any::<u64>(), n in 3usize..=20, frac in 0.2..1.2f64) {
        let s = space_from(seed, n);
        let r = frac * s.diameter();
        let k = r_step_walk(&s, r).unwrap();
        for x in 0..n {
            for y in 0..n {
                if x != y && s.d(x, y) < r {
                    let exact = w1_exact(k.row(x), k.row(y), s.dist()).unwrap().value;
                    prop_assert!(naive_ball_transport_bound(&s, x, y, r).unwrap() >= exact - 1e-9);
                }
            }
        }
    }

    #[test]
    fn kernels_are_stochastic_and_kappa_symmetric(seed in any::<u64>(), n in 2usize..=15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_space(&mut rng, n).unwrap();
        let k = random_kernel(&mut rng, &s).unwrap();
        for row in k.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|&w| w >= 0.0));
        }
        let x = rng.random_range(0..n);
        let y = (x + 1 + rng.random_range(0..n - 1)) % n;
        let (kxy, kyx) = (kappa(&s, &k, x, y).unwrap(), kappa(&s, &k, y, x).unwrap());
        prop_assert!((kxy - kyx).abs() <= 1e-9);
        prop_assert!(kxy <= 1.0 + 1e-12);
    }

    #[test]
    fn r_step_rows_live_on_open_balls(seed in any::<u64>(), n in 2usize..=20, frac in 0.05..1.5f64) {
        let s = space_from(seed, n);
        let r = frac * s.diameter();
        let k = r_step_walk(&s, r).unwrap();
        for x in 0..n {
            let ball = open_ball(&s, x, r).unwrap();
            prop_assert!(ball.contains(x));
            for i in 0..n {
                prop_assert_eq!(k.row(x)[i] > 0.0, s.d(x, i) < r);
                prop_assert_eq!(ball.contains(i), s.d(x, i) < r);
            }
        }
        if r > s.diameter() {
            let report = kappa_all_pairs(&s, &k).unwrap();
            prop_assert!(report.pairs.iter().all(|p| (p.kappa - 1.0).abs() <= 1e-12));
        }
    }

    #[test]
    fn gaussian_walk_is_symmetric_for_equal_weights(seed in any::<u64>(), n in 2usize..=12, t in 0.01..2.0f64) {
        let s = space_from(seed, n);
        let s = FiniteMetricMeasureSpace::with_unit_weights(s.dist().clone()).unwrap();
        let m = gaussian_walk(&s, t).unwrap().matrix();
        // unit weights: rows differ from a symmetric matrix only by their normalizers
        let z: Vec<f64> = (0..n).map(|x| (0..n).map(|i| (-s.d(x, i).powi(2) / (4.0 * t)).exp()).sum()).collect();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((m[(i, j)] * z[i] - m[(j, i)] * z[j]).abs() <= 1e-12 * z[i].max(z[j]));
            }
        }
    }

    #[test]
    fn cc_distance_is_left_invariant(g in point(), p in point(), q in point()) {
        let cc = HeisenbergMetric::CarnotCaratheodory;
        let d = distance(&p, &q, cc).unwrap();
        let dg = distance(&g.mul(&p), &g.mul(&q), cc).unwrap();
        prop_assert!((d - dg).abs() <= 1e-8 * d.max(1.0), "{d} vs {dg}");
        let back = distance(&q, &p, cc).unwrap();
        prop_assert!((d - back).abs() <= 1e-10 * d.max(1.0));
    }

    #[test]
    fn cc_distance_scales_and_triangulates(p in point(), q in point(), w in point(), lambda in 0.1..4.0f64) {
        let cc = HeisenbergMetric::CarnotCaratheodory;
        let dil = |a: &HeisenbergPoint| HeisenbergPoint::new(lambda * a.x, lambda * a.y, lambda * lambda * a.t);
        let d = distance(&p, &q, cc).unwrap();
        let scaled = distance(&dil(&p), &dil(&q), cc).unwrap();
        prop_assert!((scaled - lambda * d).abs() <= 1e-8 * scaled.max(1.0));
        let via = distance(&p, &w, cc).unwrap() + distance(&w, &q, cc).unwrap();
        prop_assert!(d <= via + 1e-9);
    }

    #[test]
    fn s_is_positive_and_continuous_in_k(n in 1.1..12.0f64, t in 0.0..10.0f64) {
        for k in [1e-9, -1e-9] {
            prop_assert!((s_kn(k, n, t).unwrap() - t).abs() <= 1e-6);
        }
        if t > 0.0 {
            prop_assert!(s_kn(-1.0, n, t).unwrap() > 0.0);
            let cap = std::f64::consts::PI * (n - 1.0).sqrt();
            prop_assert!(s_kn(1.0, n, t.min(0.999 * cap)).unwrap() > 0.0);
        }
    }

    #[test]
    fn f_is_increasing(k in -2.0..2.0f64, n in 1.2..8.0f64, a in 0.01..1.0f64, b in 0.01..1.0f64) {
        let cap = if k > 0.0 { std::f64::consts::PI * ((n - 1.0) / k).sqrt() } else { f64::INFINITY };
        let (r1, r2) = (a.min(b) * cap.min(5.0), a.max(b) * cap.min(5.0));
        prop_assume!(r2 - r1 > 1e-6);
        prop_assert!(F(k, n, r2).unwrap() > F(k, n, r1).unwrap());
    }

    #[test]
    fn closed_forms_match_quadrature(k in -2.0..2.0f64, r in 0.05..1.0f64) {
        let cap = if k > 0.0 { std::f64::consts::PI / k.sqrt() } else { 3.0 };
        let r = r * cap.min(3.0) * 0.99;
        let closed = F(k, 2.0, r).unwrap();
        let quad = f_quadrature(k, 2.0, r).unwrap();
        prop_assert!((closed - quad).abs() <= 1e-10 * closed.abs().max(1e-3));
        let flat = F(0.0, 2.0 + k.abs(), r).unwrap();
        let flat_quad = f_quadrature(0.0, 2.0 + k.abs(), r).unwrap();
        prop_assert!((flat - flat_quad).abs() <= 1e-10 * flat.max(1e-12));
    }

    #[test]
    fn flat_bound_is_exact(n in 1.01..20.0f64, r in 0.001..100.0f64) {
        prop_assert_eq!(theorem1_bound(0.0, n, r).unwrap(), 1.0 - 2.0 * n);
    }

    #[test]
    fn small_bracket_instances(seed in any::<u64>(), n in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_space(&mut rng, n).unwrap();
        let k = random_kernel(&mut rng, &s).unwrap();
        let kinf = kappa_all_pairs(&s, &k).unwrap().kappa_inf;
        let rep = spectrum(&laplacian(&k), true).unwrap();
        prop_assert_eq!(rep.eigenvalues.len(), n);
        prop_assert!(rep.real_eigenvalues.iter().any(|l| l.abs() <= 1e-9));
        let verdict = check_bracket(&rep, kinf.min(1.0), 1e-7).unwrap();
        prop_assert!(verdict.passed(), "{:?}", verdict);
        prop_assert!(rep.real_eigenvalues.iter().all(|&l| (-1e-7..=2.0 + 1e-7).contains(&l)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sampler_spaces_validate_and_are_deterministic(seed in any::<u64>(), which in 0usize..9) {
        let generator = match which {
            0 => Generator::EuclideanGrid { side_count: 5, spacing: 0.3 },
            1 => Generator::EuclideanBallSample { count: 40, dim: 3, radius: 1.0 },
            2 => Generator::SphereSample { count: 40 },
            3 => Generator::HyperbolicSample { count: 40, radius: 2.0 },
            4 => Generator::HeisenbergSample { count: 30, box_size: 1.0, metric: HeisenbergMetric::CarnotCaratheodory },
            5 => Generator::CycleGraph { n: 7 },
            6 => Generator::CompleteGraph { n: 6 },
            7 => Generator::HypercubeGraph { dim: 3 },
            _ => Generator::PathGraph { n: 9 },
        };
        let spec = GeneratorSpec::new(generator, seed);
        let a = spec.generate().unwrap();
        let b = spec.generate().unwrap();
        prop_assert!(validate_space(&a, TriangleCheck::Always).is_valid());
        prop_assert_eq!(a.dist(), b.dist());
        prop_assert_eq!(a.measure(), b.measure());
    }
}
