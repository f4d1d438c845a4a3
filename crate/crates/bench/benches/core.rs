use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_bigint::{BigInt, BigUint};
use qinfra::forms::{reduce, rho, unit_form};
use qinfra::qsim::{DualParams1D, RegulatorDual};
use qinfra::recover::cf_recover;
use qinfra::{Discriminant, Form, Infra, PrecisionBudget};

fn forms(c: &mut Criterion) {
    let d = Discriminant::new(BigInt::from(10_000_000_021u64)).unwrap();
    let f = unit_form(&d).reduced().clone();
    c.bench_function("rho", |b| b.iter(|| rho(black_box(&f))));
    let g = Form::new(7919, 123_456_789, 1, &Discriminant::new(BigInt::from(123_456_789i64 * 123_456_789 - 4 * 7919)).unwrap()).unwrap();
    c.bench_function("reduce", |b| b.iter(|| reduce(black_box(&g))));
}

fn walk(c: &mut Criterion) {
    let d = Discriminant::new(BigInt::from(1_000_003u64 * 4)).unwrap();
    let infra = Infra::with_default_budget(&d);
    let s = infra.power(&infra.base_state(), &BigUint::from(1000u32));
    c.bench_function("giant_step", |b| b.iter(|| infra.giant_step(black_box(&s), black_box(&s))));
    let x = BigInt::from(100_000);
    c.bench_function("form_left_of", |b| b.iter(|| infra.form_left_of(black_box(&x)).unwrap()));
}

fn dual(c: &mut Criterion) {
    let d = Discriminant::new(BigInt::from(229)).unwrap();
    let p = DualParams1D::with_q(&d, 1 << 14, true).unwrap();
    let dual = RegulatorDual::new(&p, &PrecisionBudget::new(&d), 1 << 20).unwrap();
    let j = dual.measured_forms()[0].0;
    c.bench_function("regulator_conditional_q2^14", |b| b.iter(|| dual.conditional(black_box(j))));
}

fn cf(c: &mut Criterion) {
    let q = 1u64 << 30;
    c.bench_function("cf_recover", |b| b.iter(|| cf_recover(black_box(123_456_789), black_box(987_654_321), q).unwrap()));
}

criterion_group!(benches, forms, walk, dual, cf);
criterion_main!(benches);
