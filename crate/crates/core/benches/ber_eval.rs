use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nneq::channel::{ChannelSpec, Framing, Nonlinearity, SnrConvention};
use nneq::harness::{evaluate_ber, Csi, EvalPlan, Receiver};
use nneq::models::{build_cnn_equalizer, FrameSetup, NetworkSpec};
use nneq::nn::Init;
use nneq::par::Execution;
use nneq::polar::PolarCode;

// Serial vs rayon evaluation of the same plan. Without the `parallel`
// feature both rows run serially.
fn ber_eval(c: &mut Criterion) {
    let channel = ChannelSpec::new(vec![0.3482, 0.8704, 0.3482], Nonlinearity::PolyCosMagnitude, 0.0).unwrap();
    let setup = FrameSetup::coded(channel, Framing::Tail, PolarCode::default_16_8());
    let plan = EvalPlan::new(&setup, &[4.0, 8.0], SnrConvention::EbN0, 4000, 1).unwrap();
    let mut cnn = build_cnn_equalizer(&NetworkSpec::default_cnn()).unwrap();
    cnn.init(1, Init::He);

    let mut group = c.benchmark_group("evaluate_ber");
    group.sample_size(10);
    for exec in [Execution::Serial, Execution::Parallel] {
        let plan = plan.clone().with_exec(exec);
        let label = format!("{exec:?}").to_lowercase();
        group.bench_with_input(BenchmarkId::new("bcjr", &label), &plan, |b, plan| {
            b.iter(|| evaluate_ber(Receiver::Bcjr(Csi::Perfect), &setup, plan).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("cnn", &label), &plan, |b, plan| {
            b.iter(|| evaluate_ber(Receiver::Cnn(&cnn), &setup, plan).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ber_eval);
criterion_main!(benches);
