mod common;

use common::*;
use quadmpc::protocols::array_access::{self as aa, SharedArray};
use quadmpc::{tag, NetProfile, Z64};
use rand::Rng;

fn run_aa(
    seed: u64,
    a: &[i64],
    idx: &[u64],
    sync: bool,
    profile: NetProfile,
) -> (Vec<Z64>, quadmpc::SessionOutput<Vec<quadmpc::RepShare>>) {
    let t = a.len();
    let vals: Vec<Z64> = a.iter().map(|&v| Z64::from_i64(v)).chain(idx.iter().map(|&i| Z64(i))).collect();
    let mut c = cfg(seed);
    c.profile = profile;
    let out = run_on_cfg(&c, &vals, |p, s| {
        let arr = SharedArray::scalars(s[..t].to_vec())?;
        if sync {
            aa::array_access_sync_baseline(p, &arr, &s[t..])
        } else {
            aa::array_access(p, &arr, &s[t..])
        }
    });
    (open(&out.outputs), out)
}

#[test]
fn small_examples() {
    let (z, out) = run_aa(1, &[10, 20, 30], &[1], false, NetProfile::lan());
    assert_eq!(z, vec![Z64(20)]);
    assert_eq!(out.stats.payload_bits(tag::AA), (6 + 2 * 3) * 64);
    assert_eq!(out.stats.phase_count(tag::AA), 2);
    let (z, _) = run_aa(2, &[-5], &[0], false, NetProfile::lan());
    assert_eq!(z, vec![Z64::from_i64(-5)]);
}

#[test]
fn rotation_convention_exhaustive() {
    for t in 1..=16usize {
        let a: Vec<usize> = (0..t).map(|i| 100 + i).collect();
        for r in 0..t {
            let rotated: Vec<usize> = (0..t).map(|k| a[aa::rotation_source(k, r, t)]).collect();
            assert_eq!(rotated[0], a[t - 1 - r]);
            for i in 0..t {
                assert_eq!(rotated[aa::rotated_position(i as u64, r as u64, t)], a[i]);
            }
        }
    }
}

#[test]
fn random_access_matches_indexing() {
    let mut r = rng(3);
    let mut a = Vec::new();
    let mut idx = Vec::new();
    let mut want = Vec::new();
    let t = 17;
    for _ in 0..2000 {
        let i = r.gen_range(0..t as u64);
        idx.push(i);
    }
    for _ in 0..t {
        a.push(r.gen_range(-1000..1000i64));
    }
    for &i in &idx {
        want.push(Z64::from_i64(a[i as usize]));
    }
    let (z, out) = run_aa(3, &a, &idx, false, NetProfile::lan());
    assert_eq!(z, want);
    assert_eq!(out.stats.phase_count(tag::AA), 2);
    let (zs, outs) = run_aa(3, &a, &idx, true, NetProfile::lan());
    assert_eq!(zs, want);
    assert_eq!(outs.stats.phase_count(tag::AA_SYNC), 4);
}

#[test]
fn sync_slower_under_wan() {
    let a: Vec<i64> = (0..100).collect();
    let (_, fast) = run_aa(4, &a, &[42], false, NetProfile::wan());
    let (_, slow) = run_aa(4, &a, &[42], true, NetProfile::wan());
    assert_eq!(fast.outputs, slow.outputs);
    assert!(slow.virtual_time() - fast.virtual_time() >= 0.040, "{} vs {}", slow.virtual_time(), fast.virtual_time());
}
