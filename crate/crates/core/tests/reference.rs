use assn_core::benchmarks::*;
use assn_core::quadrature::build_icosahedron_quadrature;
use assn_core::Grid2D;

#[test]
fn mc_reference_ring_mean_is_converged() {
    let g = Grid2D::linesource(50, 50).unwrap();
    let coarse = mc_reference(1_000_000, &g, 1.0, 7).unwrap();
    let fine = mc_reference(4_000_000, &g, 1.0, REFERENCE_SEED).unwrap();
    let (a, b) = (ring_profile(&coarse.phi, 0.5).mean, ring_profile(&fine.phi, 0.5).mean);
    assert!(((a - b) / b).abs() < 0.02, "ring means {a} vs {b}");
    // the noise floor stays well below the S_N baseline error
    let noise = error_metrics(&coarse.phi, &fine.phi).unwrap().0;
    assert!(noise < 0.5, "noise {noise}");
}

#[test]
fn horizontal_cut_is_mirror_symmetric() {
    let quad = build_icosahedron_quadrature(4).unwrap();
    for (settings, sa, beta) in [
        (RunSettings::explicit(0.95, 0.5), 5.0, 4.5),
        (RunSettings::implicit(2.0, 0.5), 7.0, 4.0),
    ] {
        let out = run_benchmark(ProblemKind::LineSource, 40, 40, &quad, sa, beta, &settings).unwrap();
        let cut = lineout(&out.phi, Cut::Horizontal(0.0));
        let n = cut.points.len();
        for k in 0..n / 2 {
            let (l, r) = (cut.points[k].2, cut.points[n - 1 - k].2);
            assert!((l - r).abs() < 1e-11 * l.abs().max(1.0), "{}: {l} vs {r}", settings.solver.name());
        }
    }
}

#[test]
fn lattice_runs_conserve_sign_explicitly() {
    // explicit solver at CFL 0.95 keeps the lattice flux nonnegative
    let quad = build_icosahedron_quadrature(3).unwrap();
    let out = run_benchmark(ProblemKind::Lattice, 28, 28, &quad, 5.0, 4.5, &RunSettings::explicit(0.95, LATTICE_T_END))
        .unwrap();
    assert!(out.phi.min() >= 0.0);
    assert!(out.phi.max() > 0.0);
}
