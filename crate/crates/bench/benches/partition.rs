use criterion::{black_box, criterion_group, criterion_main, Criterion};
use ztrace_core::{
    build_potential, find_librations, grid_spectrum, quartic_uv_z_higher, quartic_uv_z_quadratic,
    sc_trace_z, shell_data, vbar_wells, LibrationOpts, Potential, SystemSpec,
};

fn shallow_double_well() -> Potential {
    build_potential(&SystemSpec::double_well(0.15, 5.0).unwrap()).unwrap()
}

fn bench_quartic_closed_forms(c: &mut Criterion) {
    c.bench_function("quartic_quadratic_z", |b| {
        b.iter(|| quartic_uv_z_quadratic(black_box(1.0), 1.0, 8.0, black_box(1.0)).unwrap())
    });
    c.bench_function("quartic_higher_order_z", |b| {
        b.iter(|| quartic_uv_z_higher(black_box(1.0), 1.0, 8.0, black_box(1.0)).unwrap())
    });
}

fn bench_shell_quadrature(c: &mut Criterion) {
    let pot = shallow_double_well();
    let wells = vbar_wells(&pot).unwrap();
    c.bench_function("shell_data_mid_well", |b| {
        b.iter(|| shell_data(black_box(&pot), &wells[0], black_box(-0.075)).unwrap())
    });
}

fn bench_librations(c: &mut Criterion) {
    let pot = shallow_double_well();
    let opts = LibrationOpts::default();
    c.bench_function("find_librations_beta_60", |b| {
        b.iter(|| find_librations(black_box(&pot), 1.0, black_box(60.0), &opts).unwrap())
    });
    c.bench_function("sc_trace_z_beta_60", |b| {
        b.iter(|| sc_trace_z(black_box(&pot), 1.0, black_box(60.0), &opts).unwrap())
    });
}

fn bench_grid_spectrum(c: &mut Criterion) {
    let pot = Potential::new(vec![0.0, 0.0, 0.5]);
    c.bench_function("grid_spectrum_harmonic_8", |b| {
        b.iter(|| grid_spectrum(black_box(&pot), 1.0, 8, 1e-6).unwrap())
    });
}

criterion_group!(
    benches,
    bench_quartic_closed_forms,
    bench_shell_quadrature,
    bench_librations,
    bench_grid_spectrum
);
criterion_main!(benches);
