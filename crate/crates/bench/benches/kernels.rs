use criterion::{criterion_group, criterion_main, Criterion};
use fockmf_core::dynamics::{dyson_classical, hartree_flow};
use fockmf_core::fock::{coherent_state, wick_matrix};
use fockmf_core::sampling;
use fockmf_core::symbols::{c_mr, poisson, PolySymbol};
use fockmf_core::symtensor::symmetrize_extend;
use fockmf_core::linalg::HermitianExp;
use nalgebra::DVector;
use num_complex::Complex64;

fn bench_symmetrize_extend(c: &mut Criterion) {
    let mut rng = sampling::seeded(1);
    let k = sampling::random_kernel(3, 2, 2, &mut rng);
    c.bench_function("symmetrize_extend d3 p2q2 n8", |bench| {
        bench.iter(|| symmetrize_extend(&k, 8).unwrap())
    });
}

fn bench_wick_matrix(c: &mut Criterion) {
    let mut rng = sampling::seeded(2);
    let b = PolySymbol::new(sampling::random_q_kernel(2, 0.5, &mut rng));
    c.bench_function("wick_matrix d2 p2q2 n64", |bench| {
        bench.iter(|| wick_matrix(&b, 64, 1.0 / 64.0))
    });
}

fn bench_poisson_bracket(c: &mut Criterion) {
    let mut rng = sampling::seeded(3);
    let q = PolySymbol::new(sampling::random_q_kernel(3, 1.0, &mut rng));
    let b = PolySymbol::new(sampling::random_kernel(3, 2, 2, &mut rng));
    c.bench_function("poisson k1 d3", |bench| bench.iter(|| poisson(&q, &b, 1)));
}

fn bench_iterated_bracket(c: &mut Criterion) {
    let mut rng = sampling::seeded(4);
    let a = HermitianExp::new(&sampling::random_hermitian(2, &mut rng));
    let q = PolySymbol::new(sampling::random_q_kernel(2, 1.0, &mut rng));
    let b = PolySymbol::new(sampling::random_kernel(2, 1, 1, &mut rng));
    c.bench_function("c_mr m3 r1 d2", |bench| {
        bench.iter(|| c_mr(&q, &b, &a, &[0.3, 0.2, 0.1], 0.4, 1).unwrap())
    });
}

fn bench_hartree_flow(c: &mut Criterion) {
    let mut rng = sampling::seeded(5);
    let a = sampling::random_hermitian(2, &mut rng);
    let q = PolySymbol::new(sampling::random_q_kernel(2, 0.5, &mut rng));
    let z0 = sampling::random_unit_vector(2, &mut rng);
    c.bench_function("hartree_flow t1 tol1e-10", |bench| {
        bench.iter(|| hartree_flow(&z0, &a, &q, 1.0, 1e-10).unwrap())
    });
}

fn bench_dyson_series(c: &mut Criterion) {
    let a = nalgebra::DMatrix::<Complex64>::zeros(1, 1);
    let mut qk = fockmf_core::symtensor::SymOperator::zeros(1, 2, 2);
    qk.matrix[(0, 0)] = Complex64::new(0.5, 0.0);
    let q = PolySymbol::new(qk);
    let mut bk = fockmf_core::symtensor::SymOperator::zeros(1, 1, 0);
    bk.matrix[(0, 0)] = Complex64::new(1.0, 0.0);
    let b = PolySymbol::new(bk);
    let z = DVector::from_vec(vec![Complex64::new(1.0, 0.0)]);
    c.bench_function("dyson_classical kerr M20", |bench| {
        bench.iter(|| dyson_classical(&b, &q, &a, &z, 0.3, 20).unwrap())
    });
}

fn bench_coherent_state(c: &mut Criterion) {
    let z0 = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    c.bench_function("coherent_state eps 1/64", |bench| {
        bench.iter(|| coherent_state(&z0, 1.0 / 64.0, 1e-10).unwrap())
    });
}

criterion_group!(
    benches,
    bench_symmetrize_extend,
    bench_wick_matrix,
    bench_poisson_bracket,
    bench_iterated_bracket,
    bench_hartree_flow,
    bench_dyson_series,
    bench_coherent_state
);
criterion_main!(benches);
