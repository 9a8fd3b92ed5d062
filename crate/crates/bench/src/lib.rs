//! Shared fixtures for the benchmarks.

use assn_core::benchmarks::linesource_problem;
use assn_core::implicit::{implicit_time_step, StreamingOperator};
use assn_core::mesh::linesource_initial;
use assn_core::quadrature::build_icosahedron_quadrature;
use assn_core::{AngularFlux, TransportProblem};

/// Line-source problem on an `n × n` grid with the initial pulse.
pub fn linesource(n: usize, order: usize, sigma_as: f64, beta: f64) -> (TransportProblem, AngularFlux) {
    let quad = build_icosahedron_quadrature(order).expect("valid order");
    let p = linesource_problem(n, n, quad, sigma_as, beta).expect("valid problem");
    let psi = linesource_initial(&p.grid, &p.quad);
    (p, psi)
}

/// Streaming operator at implicit CFL 2.
pub fn streaming_operator(p: &TransportProblem) -> StreamingOperator {
    StreamingOperator::new(p, implicit_time_step(p, 2.0)).expect("valid operator")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        let (p, psi) = linesource(10, 2, 5.0, 4.5);
        assert_eq!(psi.n_ordinates(), 12);
        assert!(p.artificial.is_some());
        let op = streaming_operator(&p);
        assert!(op.dt() > 0.0);
    }
}
