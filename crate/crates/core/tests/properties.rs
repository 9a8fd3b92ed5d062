use std::f64::consts::PI;

use assn_core::benchmarks::error_metrics;
use assn_core::explicit::ExplicitSolver;
use assn_core::implicit::StreamingOperator;
use assn_core::kernels::{build_as_matrix, s_eps, transport_coefficient};
use assn_core::quadrature::build_icosahedron_quadrature;
use assn_core::stability::build_entropy_matrix;
use assn_core::{Field2D, Grid2D, MaterialField, TransportProblem};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn kernel_is_nonnegative_and_monotone(eps in 0.01f64..4.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (s_lo, s_hi) = (s_eps(lo, eps).unwrap(), s_eps(hi, eps).unwrap());
        prop_assert!(s_lo >= 0.0);
        prop_assert!(s_lo <= s_hi);
    }

    #[test]
    fn zeroth_transport_coefficient_is_one(eps in 1e-4f64..10.0) {
        prop_assert_eq!(transport_coefficient(0, eps), 1.0);
        // narrow kernels: p_{ε,1} = ε/√π up to an exponentially small tail
        if eps < 0.2 {
            prop_assert!((transport_coefficient(1, eps) / eps - 1.0 / PI.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn as_matrix_rows_are_stochastic(order in 2usize..5, eps in 0.01f64..2.0) {
        let q = build_icosahedron_quadrature(order).unwrap();
        let s = build_as_matrix(&q, eps).unwrap();
        for r in 0..s.dim() {
            prop_assert!((s.row_sum(r) - 1.0).abs() < 1e-13);
            prop_assert!(s.row(r).all(|(_, v)| v >= 0.0));
        }
    }

    #[test]
    fn entropy_form_is_positive(x in prop::collection::vec(-1.0f64..1.0, 3..60)) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        let s = build_entropy_matrix(x.len()).unwrap();
        prop_assert!(s.quadratic_form(&x) > 0.0);
    }

    #[test]
    fn delta1_is_a_metric(vals in prop::collection::vec((0.0f64..2.0, 0.0f64..2.0, 0.0f64..2.0), 36)) {
        let g = Grid2D::linesource(6, 6).unwrap();
        let mut f = [Field2D::zeros(&g), Field2D::zeros(&g), Field2D::zeros(&g)];
        for (c, (a, b, d)) in vals.iter().enumerate() {
            f[0].values[c] = *a;
            f[1].values[c] = *b;
            f[2].values[c] = *d;
        }
        let d = |i: usize, j: usize| error_metrics(&f[i], &f[j]).unwrap().0;
        prop_assert_eq!(d(0, 0), 0.0);
        prop_assert!((d(0, 1) - d(1, 0)).abs() < 1e-14);
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
    }

    #[test]
    fn sweep_inverts_streaming_operator(
        nx in 3usize..14,
        ny in 3usize..14,
        sigma_s in 0.0f64..3.0,
        sigma_as in 0.0f64..10.0,
        dt in 0.01f64..1.0,
        seed in any::<u64>(),
    ) {
        let g = Grid2D::new(nx, ny, (0.0, 1.0), (0.0, 2.0)).unwrap();
        let q = build_icosahedron_quadrature(2).unwrap();
        let m = MaterialField::uniform(&g, 0.5, sigma_s, 0.0, 0.0);
        let p = TransportProblem::new(g, q, m).unwrap().with_artificial_strength(sigma_as, 4.0).unwrap();
        let op = StreamingOperator::new(&p, dt).unwrap();
        let mut psi = p.new_flux();
        let mut state = seed;
        for k in 0..p.n_ordinates() {
            for j in 0..ny {
                for i in 0..nx {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    psi.set(k, i, j, (state >> 11) as f64 / (1u64 << 53) as f64);
                }
            }
        }
        let mut l = p.new_flux();
        op.apply(&psi, &mut l);
        let mut back = p.new_flux();
        op.sweep(&l, &mut back);
        for k in 0..p.n_ordinates() {
            for j in 0..ny {
                for i in 0..nx {
                    prop_assert!((back.get(k, i, j) - psi.get(k, i, j)).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn explicit_step_keeps_flux_nonnegative(
        n in 4usize..16,
        sigma_a in 0.0f64..10.0,
        sigma_s in 0.0f64..5.0,
        sigma_as in 0.0f64..10.0,
        beta in 0.5f64..8.0,
        cfl in 0.1f64..1.0,
        seed in any::<u64>(),
    ) {
        let g = Grid2D::linesource(n, n).unwrap();
        let q = build_icosahedron_quadrature(2).unwrap();
        let m = MaterialField::uniform(&g, sigma_a, sigma_s, 0.0, 0.0);
        let p = TransportProblem::new(g, q, m).unwrap().with_artificial_strength(sigma_as, beta).unwrap();
        let mut psi = p.new_flux();
        let mut state = seed;
        for k in 0..p.n_ordinates() {
            for j in 0..n {
                for i in 0..n {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    // sparse spikes are the hardest case for the limiter
                    let v = if state >> 62 == 0 { (state >> 11) as f64 / (1u64 << 53) as f64 } else { 0.0 };
                    psi.set(k, i, j, v);
                }
            }
        }
        let mut solver = ExplicitSolver::new(&p);
        let mut st = solver.initial_state(psi, cfl).unwrap();
        let h = st.dt;
        solver.step_heun(&mut st, h).unwrap();
        for k in 0..p.n_ordinates() {
            prop_assert!(st.psi.interior(k).all(|v| v >= -1e-15), "negative entry in ordinate {}", k);
        }
    }
}
