use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use quadmpc::bench::{run_bench, Protocol};
use quadmpc::ProtocolParams;

fn sizes(p: Protocol) -> &'static [usize] {
    match p {
        Protocol::Matmult => &[4, 16],
        Protocol::Aa => &[10, 100, 1000],
        _ => &[10, 100],
    }
}

/// Wall-clock cost of each protocol with all four parties in process and no
/// simulated latency; the `aa` rows include the serialized baseline run.
fn protocols(c: &mut Criterion) {
    let params = ProtocolParams::default();
    for p in Protocol::ALL {
        let mut g = c.benchmark_group(p.name());
        g.sample_size(10);
        for &n in sizes(p) {
            g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
                b.iter(|| run_bench(p, n, "ideal", 1, params).expect("bench run"))
            });
        }
        g.finish();
    }
}

criterion_group!(benches, protocols);
criterion_main!(benches);
