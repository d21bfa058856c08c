mod common;

use common::*;
use quadmpc::protocols::linear;
use quadmpc::tag;
use quadmpc::tensor::SecureTensor;
use rand::Rng;

#[test]
fn mult_small_examples() {
    let vals = [enc(2.0), enc(-3.0), enc(5.5), enc(0.0)];
    let out = run_on(1, &vals, |p, s| linear::mult_vec(p, &s[..2], &s[2..]));
    let z = open(&out.outputs);
    assert!((dec(z[0]) - 11.0).abs() <= 2.0 / (1 << FB) as f64);
    assert!(dec(z[1]).abs() <= 1.0 / (1 << FB) as f64);
}

#[test]
fn mult_matches_oracle() {
    let mut r = rng(2);
    let n = 10_000;
    let xs: Vec<f64> = (0..2 * n).map(|_| r.gen_range(-8.0..8.0)).collect();
    let vals: Vec<_> = xs.iter().map(|&v| enc(v)).collect();
    let out = run_on(2, &vals, |p, s| linear::mult_vec(p, &s[..n], &s[n..]));
    let z = open(&out.outputs);
    let mut worst = 0;
    for i in 0..n {
        let exact = round_shift(vals[i].as_i64() as i128 * vals[n + i].as_i64() as i128, FB);
        worst = worst.max((z[i].as_i64() as i128 - exact).unsigned_abs());
    }
    assert!(worst <= 2, "worst {worst} ULP");
    assert_eq!(out.stats.payload_bits(tag::MULT), 6 * 64 * n as u64);
    assert_eq!(out.stats.phase_count(tag::MULT), 2);
}

#[test]
fn matmult_numeric_case() {
    let vals: Vec<_> = [1.0, 0.0, 0.0, 2.0, 3.0, 4.0].iter().map(|&v| enc(v)).collect();
    let out = run_on(3, &vals, |p, s| {
        let x = SecureTensor::new(2, 2, FB, s[..4].to_vec())?;
        let y = SecureTensor::new(2, 1, FB, s[4..].to_vec())?;
        Ok(linear::matmult(p, &x, &y)?.data)
    });
    let z = open(&out.outputs);
    assert_eq!(z.iter().map(|v| dec(*v).round()).collect::<Vec<_>>(), vec![3.0, 8.0]);
    assert_eq!(out.stats.payload_bits(tag::MATMULT), 6 * 2 * 64);
}

#[test]
fn tcp_backend_matches_sim_transcript() {
    let vals: Vec<_> = (0..16).map(|i| enc(i as f64 * 0.5 - 3.0)).collect();
    let mut c = cfg(9);
    c.record_transcript = true;
    let sim = run_on_cfg(&c, &vals, |p, s| linear::mult_vec(p, &s[..8], &s[8..]));
    c.backend = quadmpc::Backend::TcpLoopback;
    let tcp = run_on_cfg(&c, &vals, |p, s| linear::mult_vec(p, &s[..8], &s[8..]));
    assert_eq!(sim.transcripts, tcp.transcripts);
    assert_eq!(sim.outputs, tcp.outputs);
    assert_eq!(sim.stats.sent, tcp.stats.sent);
}
