use std::hint::black_box;

use cacrl_core::crl::{actor_step, build_surrogates, ParamBox, SolverOptions};
use cacrl_core::env::{generate_channel, rzf_precoder, Action, ChannelConfig, ChannelGeometry, PacketRegime, ScenarioConfig, XrEnv};
use cacrl_core::nn::{DualHeadNet, GaussianPolicy, ActionSpace};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario(users: usize, antennas: usize) -> ScenarioConfig {
    ScenarioConfig {
        slot_seconds: 1e-3,
        bandwidth_hz: 10e6,
        noise_dbm_per_hz: -100.0,
        channel: ChannelConfig {
            antennas,
            users,
            paths: 4,
            gain_db: (-10.0, 10.0),
            angular_spread_deg: 5.0,
        },
        deadlines: vec![10; users],
        max_dropout: vec![0.1; users],
        mean_episode_slots: None,
        traffic: PacketRegime::Medium.ranges(),
        max_power: 4.0,
        eps_range: (1e-3, 1.0),
        bits_scale: 1e-4,
        channel_scale: 1.0,
    }
}

fn precoder(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (k, m) in [(2, 4), (8, 16)] {
        let cfg = scenario(k, m).channel;
        let geo = ChannelGeometry::sample(&cfg, &mut rng).unwrap();
        let h = generate_channel(&mut rng, &cfg, &geo).unwrap();
        c.bench_function(&format!("rzf_precoder_k{k}_m{m}"), |b| b.iter(|| rzf_precoder(black_box(&h), 0.1).unwrap()));
    }
}

fn env_step(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut env = XrEnv::new(scenario(2, 4), &mut rng).unwrap();
    let action = Action {
        power: vec![1e-3; 2],
        eps: 0.1,
    };
    c.bench_function("env_step_k2_m4", |b| b.iter(|| env.step(black_box(&action), &mut rng).unwrap()));
}

fn networks(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let state_dim = 61;
    let net = DualHeadNet::new(state_dim, 3, &[64, 64], &[32]);
    let w = net.init(&mut rng).into_values();
    let s: Vec<f64> = (0..state_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a = vec![0.5; 3];
    c.bench_function("dual_head_q_forward_backward", |b| {
        let mut g = vec![0.0; w.len()];
        b.iter(|| {
            let pass = net.q_forward(&w, black_box(&s), &a).unwrap();
            net.q_backward(&w, &pass, 1.0, Some(&mut g)).unwrap()
        })
    });
    let space = ActionSpace {
        users: 2,
        max_power: 4.0,
        eps_range: (1e-3, 1.0),
    };
    let policy = GaussianPolicy::new(state_dim, &[64, 64], space);
    let theta = policy.init(&mut rng, 0.0, 0.5).into_values();
    let raw = vec![0.1, -0.2, 0.3];
    c.bench_function("policy_logprob_grad", |b| {
        b.iter(|| policy.logprob_grad(&theta, black_box(&s), &raw).unwrap())
    });
}

fn dual_solver(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 12_000;
    let k = 2;
    let anchor = vec![0.0; n];
    let mut f_hat = vec![1.0];
    f_hat.extend((0..k).map(|_| rng.gen_range(-0.1..0.05)));
    let g_hat: Vec<Vec<f64>> = (0..=k).map(|_| (0..n).map(|_| rng.gen_range(-0.01..0.01)).collect()).collect();
    let set = build_surrogates(anchor, f_hat, g_hat, vec![1.0; k + 1]).unwrap();
    let opts = SolverOptions::default();
    c.bench_function("actor_step_n12000_k2", |b| {
        b.iter(|| actor_step(black_box(&set), ParamBox::symmetric(10.0), &opts).unwrap())
    });
}

criterion_group!(benches, precoder, env_step, networks, dual_solver);
criterion_main!(benches);
