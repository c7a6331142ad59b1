use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use nessforge::liouvillian::{apply_lindbladian_operator, Liouvillian};
use nessforge::model::{build_general_hamiltonian, CouplingGraph, Edge};
use nessforge::observables::psr_audit;
use nessforge::operator::{embed_local, expectation, partial_trace, site_op};
use nessforge::solver::{default_dt, Evolver};
use nessforge::symmetry::{make_transform, transform_state};
use nessforge::{solve_ness, Axis, DensityMatrix, LindbladSpec, Model, Operator, SolveOptions, C64};

fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn complex_op(n: usize) -> impl Strategy<Value = Operator> {
    let d = 1usize << n;
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d)
        .prop_map(move |v| Operator::from_fn(n, |r, c| c64(v[r * d + c].0, v[r * d + c].1)))
}

fn hermitian_op(n: usize) -> impl Strategy<Value = Operator> {
    complex_op(n).prop_map(|a| a.hermitian_part())
}

fn density(n: usize) -> impl Strategy<Value = DensityMatrix> {
    complex_op(n).prop_map(|a| DensityMatrix::normalized(a.adjoint() * a).unwrap())
}

/// Chain with anisotropic couplings and fields, driven at both ends.
fn driven_model(n: usize) -> impl Strategy<Value = Model> {
    let edges = prop::collection::vec((-1.5..1.5f64, -1.5..1.5f64, -1.5..1.5f64), n - 1);
    let fields = prop::collection::vec(-1.0..1.0f64, n);
    let rates = (0.2..1.5f64, 0.0..1.0f64, 0.2..1.5f64, 0.0..1.0f64);
    (edges, fields, rates).prop_map(move |(edges, fields, (a1, b1, a2, b2))| {
        let g = CouplingGraph {
            n_sites: n,
            edges: edges.iter().enumerate().map(|(i, &(jx, jy, jz))| Edge { k: i + 1, m: i + 2, jx, jy, jz }).collect(),
            fields,
        };
        let specs = [
            LindbladSpec::TargetZ { site: 1, alpha: a1, beta: b1 },
            LindbladSpec::TargetX { site: n, alpha: a2, beta: b2 },
        ];
        Model::from_specs(build_general_hamiltonian(&g).unwrap(), &specs, None, Default::default()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generator_is_trace_free_and_hermiticity_preserving(model in driven_model(3), x in hermitian_op(3)) {
        let y = apply_lindbladian_operator(&model, &x).unwrap();
        assert_abs_diff_eq!(y.trace().norm(), 0.0, epsilon = 1e-11);
        prop_assert!(y.is_hermitian(1e-11));
        let lv = Liouvillian::new(&model).unwrap();
        prop_assert!(lv.apply(&x).unwrap().max_diff(&y) < 1e-11);
        prop_assert!(lv.trace_defect() < 1e-11);
    }

    #[test]
    fn spectrum_is_in_the_closed_left_half_plane(model in driven_model(2)) {
        let lv = Liouvillian::new(&model).unwrap();
        let eig = lv.eigenvalues().unwrap();
        prop_assert_eq!(eig.len(), 16);
        let top = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(top <= 1e-10, "largest real part {top}");
        prop_assert!(eig.iter().any(|z| z.norm() < 1e-9));
    }

    #[test]
    fn embedding_matches_kronecker_products(a in complex_op(1), b in complex_op(1), c in complex_op(1)) {
        let ab = embed_local(&a, &[1], 3).unwrap() * embed_local(&b, &[2], 3).unwrap() * embed_local(&c, &[3], 3).unwrap();
        prop_assert!(ab.max_diff(&a.kron(&b).kron(&c)) < 1e-13);
        prop_assert!(a.kron(&b).kron(&c).max_diff(&a.kron(&b.kron(&c))) < 1e-13);
        let two = embed_local(&a.kron(&b), &[3, 1], 3).unwrap();
        let by_site = embed_local(&a, &[3], 3).unwrap() * embed_local(&b, &[1], 3).unwrap();
        prop_assert!(two.max_diff(&by_site) < 1e-13);
    }

    #[test]
    fn partial_trace_is_consistent(rho in density(3), obs in hermitian_op(1)) {
        let reduced = partial_trace(&rho, &[2]).unwrap();
        assert_abs_diff_eq!(reduced.op().trace().re, 1.0, epsilon = 1e-12);
        prop_assert!(reduced.op().is_hermitian(1e-12));
        let full = expectation(&rho, &embed_local(&obs, &[2], 3).unwrap()).unwrap();
        let local = expectation(&reduced, &obs).unwrap();
        assert_abs_diff_eq!(full.re, local.re, epsilon = 1e-12);
        assert_abs_diff_eq!(full.im, 0.0, epsilon = 1e-12);
        let nested = partial_trace(&partial_trace(&rho, &[1, 2]).unwrap(), &[2]).unwrap();
        prop_assert!(nested.op().max_diff(reduced.op()) < 1e-12);
    }

    #[test]
    fn expectation_is_linear_and_conjugate_symmetric(rho in density(2), a in complex_op(2), b in complex_op(2), s in -2.0..2.0f64) {
        let sum = &a + &(&b * s);
        let lhs = expectation(&rho, &sum).unwrap();
        let rhs = expectation(&rho, &a).unwrap() + expectation(&rho, &b).unwrap() * s;
        assert_abs_diff_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-12);
        let adj = expectation(&rho, &a.adjoint()).unwrap();
        assert_abs_diff_eq!((adj - expectation(&rho, &a).unwrap().conj()).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn evolution_stays_physical(model in driven_model(2), rho0 in density(2)) {
        let lv = Liouvillian::new(&model).unwrap();
        let mut ev = Evolver::new(&lv, &rho0, default_dt(&lv)).unwrap();
        ev.advance_to(3.0);
        assert_abs_diff_eq!(ev.time(), 3.0, epsilon = 1e-12);
        let rho = ev.state();
        assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-10);
        prop_assert!(rho.is_hermitian(1e-10));
        let rho = DensityMatrix::new(rho.hermitian_part()).unwrap();
        prop_assert!(rho.purity() <= 1.0 + 1e-10);
        prop_assert!(rho.eigenvalues().iter().all(|&l| l > -1e-9));
    }
}

/// U(1)-breaking model whose generator commutes with the global parity `∏σ^z`.
fn parity_model(jx: f64, jy: f64, h: f64) -> Model {
    let g = CouplingGraph {
        n_sites: 3,
        edges: vec![Edge { k: 1, m: 2, jx, jy, jz: 0.4 }, Edge { k: 2, m: 3, jx: jy, jy: jx, jz: -0.7 }],
        fields: vec![h, -0.3, 0.8],
    };
    let specs = [
        LindbladSpec::TargetZ { site: 1, alpha: 1.0, beta: 0.4 },
        LindbladSpec::TargetZ { site: 3, alpha: 0.3, beta: 0.9 },
    ];
    Model::from_specs(build_general_hamiltonian(&g).unwrap(), &specs, None, Default::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn parity_rule_survives_reduction(jx in 0.3..1.5f64, jy in -1.5..-0.3f64, h in -1.0..1.0f64) {
        let ss = solve_ness(&parity_model(jx, jy, h), &SolveOptions::default()).unwrap();
        prop_assert!(psr_audit(&ss.rho, 1e-9).passes());
        for keep in [vec![1, 2], vec![2, 3], vec![1, 3]] {
            prop_assert!(psr_audit(&partial_trace(&ss.rho, &keep).unwrap(), 1e-9).passes());
        }
    }
}

#[test]
fn invariant_model_has_invariant_state() {
    let g = CouplingGraph::chain(4, 1.0, 1.0, 1.5);
    let specs = [
        LindbladSpec::TargetZ { site: 1, alpha: 1.2, beta: 0.6 },
        LindbladSpec::TargetZ { site: 4, alpha: 0.6, beta: 1.2 },
    ];
    let model = Model::from_specs(build_general_hamiltonian(&g).unwrap(), &specs, None, Default::default()).unwrap();
    let ss = solve_ness(&model, &SolveOptions::default()).unwrap();
    let t = make_transform("omega_x_r", 4).unwrap();
    let image = transform_state(&ss.rho, &t).unwrap();
    assert!(image.op().max_diff(ss.rho.op()) < 1e-8);

    let mz = expectation(&ss.rho, &(site_op(Axis::Z, 1, 4).unwrap() + site_op(Axis::Z, 4, 4).unwrap())).unwrap();
    assert_abs_diff_eq!(mz.re, 0.0, epsilon = 1e-9);
}
