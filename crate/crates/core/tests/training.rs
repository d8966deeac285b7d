use nneq::channel::{ChannelSpec, Framing, Nonlinearity, SnrConvention};
use nneq::harness::{evaluate_ber, EvalPlan, Receiver};
use nneq::models::{
    build_nnd, joint_finetune, train_cnn_equalizer, FrameSetup, JointOptions, NetworkSpec, TrainingConfig,
};
use nneq::nn::Init;
use nneq::polar::PolarCode;

#[test]
fn identity_channel_is_learned() {
    let channel = ChannelSpec::new(vec![1.0], Nonlinearity::Identity, 0.0).unwrap();
    let setup = FrameSetup::coded(channel, Framing::Tail, PolarCode::default_16_8());
    let config = TrainingConfig {
        // σ = 0.01
        snr_grid: vec![10.0 * (1.0 / (2.0 * 0.01f64.powi(2))).log10()],
        frames_per_snr: 240,
        iterations: 1500,
        ..TrainingConfig::default()
    };
    let trained = train_cnn_equalizer(&NetworkSpec::default_cnn(), &config, &setup).unwrap();
    let tail = &trained.loss_trace[trained.loss_trace.len() - 50..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    assert!(mean < 0.01, "final MSE {mean}");
}

#[test]
fn zero_joint_iterations_keep_the_cascade() {
    let channel = ChannelSpec::new(vec![0.3482, 0.8704, 0.3482], Nonlinearity::PolyCosMagnitude, 0.0).unwrap();
    let setup = FrameSetup::coded(channel, Framing::Tail, PolarCode::default_16_8());
    let config = TrainingConfig {
        iterations: 50,
        convention: SnrConvention::EbN0,
        ..TrainingConfig::default()
    };
    let cnn = train_cnn_equalizer(&NetworkSpec::default_cnn(), &config, &setup).unwrap();
    let mut nnd = build_nnd(&NetworkSpec::default_nnd()).unwrap();
    nnd.init(4, Init::He);
    let options = JointOptions {
        iterations: 0,
        ..JointOptions::default()
    };
    let joint = joint_finetune(&cnn.network, &nnd, &config, &options, &setup).unwrap();
    let plan = EvalPlan::new(&setup, &[3.0, 7.0], SnrConvention::EbN0, 500, 2).unwrap();
    let before = evaluate_ber(
        Receiver::CnnNnd {
            cnn: &cnn.network,
            nnd: &nnd,
        },
        &setup,
        &plan,
    )
    .unwrap();
    let after = evaluate_ber(
        Receiver::CnnNnd {
            cnn: &joint.cnn,
            nnd: &joint.nnd,
        },
        &setup,
        &plan,
    )
    .unwrap();
    assert_eq!(before, after);
}

#[test]
fn frozen_equalizer_is_untouched_by_joint_training() {
    let channel = ChannelSpec::new(vec![0.3482, 0.8704, 0.3482], Nonlinearity::PolyCosMagnitude, 0.0).unwrap();
    let setup = FrameSetup::coded(channel, Framing::Tail, PolarCode::default_16_8());
    let config = TrainingConfig {
        iterations: 5,
        ..TrainingConfig::default()
    };
    let cnn = train_cnn_equalizer(&NetworkSpec::default_cnn(), &config, &setup).unwrap();
    let mut nnd = build_nnd(&NetworkSpec::default_nnd()).unwrap();
    nnd.init(4, Init::He);
    let options = JointOptions {
        iterations: 20,
        freeze_cnn: true,
        ..JointOptions::default()
    };
    let joint = joint_finetune(&cnn.network, &nnd, &config, &options, &setup).unwrap();
    assert_eq!(joint.cnn.flat_params(), cnn.network.flat_params());
    assert_ne!(joint.nnd.flat_params(), nnd.flat_params());
    assert_eq!(joint.trace.len(), 20);
}
