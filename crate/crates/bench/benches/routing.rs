use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dynacc_bench::city;
use dynacc_core::network::fifo_repair;
use dynacc_core::pipeline::accessibility_series;
use dynacc_core::routing::td_one_to_all;
use dynacc_core::TravelTimeFunction;

fn one_to_all(c: &mut Criterion) {
    let p = city(15, 32);
    let origin = p.area.study[p.area.study.len() / 3];
    let mut g = c.benchmark_group("td_one_to_all");
    for (label, t) in [("00:00", 0.0), ("08:00", 480.0), ("17:15", 1035.0)] {
        g.bench_function(label, |b| {
            b.iter(|| td_one_to_all(&p.graph, black_box(origin), black_box(t)).unwrap())
        });
    }
    g.finish();
}

fn repair(c: &mut Criterion) {
    let p = city(15, 32);
    let net = &p.network;
    let link = &net.links()[net.links().len() / 2];
    let raw = TravelTimeFunction::new(link, net.link_profile(net.links().len() / 2));
    c.bench_function("fifo_repair", |b| b.iter(|| fifo_repair(black_box(&raw))));
    let f = fifo_repair(&raw);
    c.bench_function("arrival_eval", |b| {
        b.iter(|| {
            let mut s = 0.0;
            for m in 0..1440 {
                s += f.arrival(black_box(m as f64));
            }
            s
        })
    });
}

fn series(c: &mut Criterion) {
    let p = city(6, 12);
    let opportunities = p.opportunities();
    let instants = p.schedule.instants();
    let mut g = c.benchmark_group("accessibility_series");
    g.sample_size(10);
    g.bench_function("81 zones x 96 departures", |b| {
        b.iter(|| {
            accessibility_series(&p.graph, &p.area.study, &opportunities, instants, &p.decay)
                .unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, one_to_all, repair, series);
criterion_main!(benches);
