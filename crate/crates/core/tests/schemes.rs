use proptest::prelude::*;
use wcs_core::channel::{transmit_soft, SignalBlock};
use wcs_core::codec::{capacity, draw_codebook, nn_decode};
use wcs_core::model::{
    random_library, seed, Bitstring, DemandVector, MessageLibrary, NetworkConfig, PartKey,
};
use wcs_core::schemes::engine::{round_robin_soft, run_full, run_soft, Backend};
use wcs_core::schemes::placement::full_store;
use wcs_core::schemes::placement::{
    cache_placement_full, cache_placement_round_robin, round_robin_store,
};
use wcs_core::schemes::rates::soft_rate;
use wcs_core::schemes::schedule::{
    delivery_schedule_round_robin, delivery_schedule_soft, physical, DecodePlan,
};
use wcs_core::Error;

fn lib(files: usize, bits: usize, s: u64) -> MessageLibrary {
    random_library(files, bits, s).unwrap()
}

#[test]
fn soft_all_binary_demands_up_to_seven_users() {
    for k in 5..=7 {
        let cfg = NetworkConfig::soft_uniform(k, 0.8, 1e3, 0.05);
        for i in 0..1u64 << k {
            let d = DemandVector::nth_of_all(i, k, 2);
            let r = run_soft(&cfg, &lib(2, 40, i), &d, Backend::Ideal).unwrap();
            assert!(r.guaranteed_success(), "K={k} demands {:?}", d.demands);
            assert_eq!(r.link_failures, 0);
        }
    }
}

#[test]
fn soft_k6_distinct_rate_matches_formula() {
    let cfg = NetworkConfig::soft_uniform(6, 1.0, 1e4, 0.05);
    let r = run_soft(
        &cfg,
        &lib(6, 40, 1),
        &DemandVector::cyclic(6, 6),
        Backend::Ideal,
    )
    .unwrap();
    let oracle = 5.0 / 3.0 * 0.5 * (1.0 + 9999.95f64).log2() - 0.25;
    assert!((r.rate - oracle).abs() < 1e-12);
    assert_eq!(&r.success[1..5], &[true; 4]);
}

#[test]
fn round_robin_serves_every_receiver() {
    for k in [5usize, 6, 7, 9] {
        let cfg = NetworkConfig::soft_uniform(k, 1.0, 1e4, 0.05);
        let mut rng = seed::rng(k as u64);
        for _ in 0..20 {
            let d = DemandVector::random(k, 6, &mut rng);
            let r = round_robin_soft(&cfg, &lib(6, 40 * (k - 2), 3), &d, Backend::Ideal).unwrap();
            assert!(r.all_success(), "K={k} {:?}", r.success);
            let expected = soft_rate(&cfg) * (k - 2) as f64 / k as f64;
            assert!((r.rate - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn each_receiver_plays_an_edge_role_twice() {
    let k = 7;
    for rx in 1..=k {
        let edge = (1..=k)
            .filter(|offset| physical(k, 1, *offset) == rx || physical(k, k, *offset) == rx)
            .count();
        assert_eq!(edge, 2, "rx {rx}");
    }
}

#[test]
fn round_robin_edge_chunks_are_incomplete() {
    // in its two edge super-periods a receiver gets fewer than five labels
    let k = 7;
    let d = DemandVector::cyclic(k, 6);
    let sched = delivery_schedule_round_robin(k, &d).unwrap();
    let store = round_robin_store(&lib(6, 40 * (k - 2), 1), k).unwrap();
    let pl = cache_placement_round_robin(k, 6, &store).unwrap();
    for rx in 1..=k {
        let mut complete = 0;
        for chunk in 1..=k {
            let decoded = sched
                .periods
                .iter()
                .filter(|p| p.chunk == chunk && !matches!(p.plan(rx), DecodePlan::Idle))
                .count();
            let cached = pl
                .cache(rx)
                .keys()
                .filter(|key| key.chunk == chunk && key.file == d.of(rx))
                .count();
            if decoded + cached >= 5 {
                complete += 1;
            }
        }
        assert_eq!(complete, k - 2, "rx {rx}");
    }
}

#[test]
fn full_all_binary_demands() {
    for k in [4usize, 6, 8] {
        let cfg = NetworkConfig::full(k, 0.7, 1e4, 0.05);
        for i in 0..1u64 << k {
            let d = DemandVector::nth_of_all(i, k, 2);
            let r = run_full(&cfg, &lib(2, 16, i), &d, Backend::Ideal).unwrap();
            assert!(r.all_success(), "K={k} {:?}", d.demands);
        }
    }
}

/// Independent check of why odd K fails: with odd receivers caching part 1
/// and odd transmitters sending part 2, Rx K (odd) cannot rebuild what
/// Tx 1 (odd) sends, because the ring closes two odd indices.
#[test]
fn odd_k_breaks_the_parity_rule_at_the_wrap() {
    for k in [5usize, 7, 9] {
        let sent = |tx: usize| if tx % 2 == 1 { 2 } else { 1 };
        let cached = |rx: usize| 3 - sent(rx);
        let conflicts: Vec<(usize, usize)> = (1..=k)
            .flat_map(|rx| {
                let prev = if rx == 1 { k } else { rx - 1 };
                let next = if rx == k { 1 } else { rx + 1 };
                [(rx, prev), (rx, next)]
            })
            .filter(|(rx, tx)| sent(*tx) != cached(*rx))
            .collect();
        assert!(conflicts.contains(&(k, 1)), "K={k}: {conflicts:?}");
        assert!(conflicts.contains(&(1, k)));
        let store = full_store(&lib(6, 16, 1), 0).unwrap();
        assert_eq!(
            cache_placement_full(k, 6, &store).unwrap_err(),
            Error::OddKForFullModel(k)
        );
        let cfg = NetworkConfig::full(k, 0.5, 100.0, 0.05);
        assert_eq!(
            run_full(
                &cfg,
                &lib(6, 16, 1),
                &DemandVector::cyclic(k, 6),
                Backend::Ideal
            )
            .unwrap_err(),
            Error::OddKForFullModel(k)
        );
    }
}

#[test]
fn full_k6_rate() {
    let cfg = NetworkConfig::full(6, 0.7, 1e4, 0.05);
    let r = run_full(
        &cfg,
        &lib(6, 16, 2),
        &DemandVector::cyclic(6, 6),
        Backend::Ideal,
    )
    .unwrap();
    assert!(r.all_success());
    assert!((r.rate - 2.0 * (0.5 * (1.0 + 9999.95f64).log2() - 0.05)).abs() < 1e-12);
    assert_eq!(r.memory_bits, 48);
}

#[test]
fn schedule_json_layout() {
    let d = DemandVector::new(vec![3, 1, 4, 1, 5, 2], 6).unwrap();
    let json = delivery_schedule_soft(6, &d).unwrap().to_json();
    let p1 = &json["periods"][0];
    assert_eq!(p1["tx"]["1"]["action"], "Direct");
    assert_eq!(p1["tx"]["1"]["key"]["file"], 3);
    assert_eq!(p1["tx"]["1"]["key"]["part"], 3);
    assert_eq!(p1["tx"]["2"]["action"], "XorPair");
    assert_eq!(p1["tx"]["2"]["a"]["file"], 1);
    assert_eq!(p1["tx"]["2"]["a"]["part"], 6);
    assert_eq!(p1["tx"]["2"]["b"]["file"], 4);
    assert_eq!(p1["tx"]["3"]["action"], "Silent");
    assert_eq!(p1["rx"]["3"]["plan"], "Decode");
    assert_eq!(p1["rx"]["3"]["listen"], 2);
    assert_eq!(json["periods"].as_array().unwrap().len(), 3);
}

#[test]
fn silent_out_of_subnet_transmitters_change_nothing() {
    // the soft schedule already silences them; a run where their parts are
    // all zero decodes identically
    let k = 6;
    let cfg = NetworkConfig::soft_uniform(k, 1.0, 1e4, 0.05);
    let d = DemandVector::cyclic(k, 6);
    let a = run_soft(&cfg, &lib(6, 40, 5), &d, Backend::Ideal).unwrap();
    let zeros = MessageLibrary::new(vec![Bitstring::zeros(40); 6]).unwrap();
    let b = run_soft(&cfg, &zeros, &d, Backend::Ideal).unwrap();
    assert_eq!(a.success, b.success);
    assert_eq!(a.link_failures, b.link_failures);
}

#[test]
fn mc_full_with_margin() {
    // 8 bits per 128 uses; capacity at P = 1 is about 0.49, so rate/capacity ~ 0.13
    let cfg = NetworkConfig::full(6, 0.7, 1.0, 0.05);
    let mut ok = 0;
    for t in 0..100u64 {
        let r = run_full(
            &cfg,
            &lib(6, 16, t),
            &DemandVector::cyclic(6, 6),
            Backend::MonteCarlo { n: 128, seed: t },
        )
        .unwrap();
        ok += usize::from(r.all_success());
    }
    assert!(ok >= 98, "{ok}/100");
}

#[test]
fn mc_rate_is_payload_over_block_length() {
    let cfg = NetworkConfig::soft_uniform(6, 1.0, 4.0, 0.05);
    let r = run_soft(
        &cfg,
        &lib(6, 40, 1),
        &DemandVector::cyclic(6, 6),
        Backend::MonteCarlo { n: 288, seed: 4 },
    )
    .unwrap();
    assert!((r.rate - 40.0 / 288.0).abs() < 1e-15);
    assert!((r.memory - 96.0 / 288.0).abs() < 1e-15);
}

/// Error rate of one unit-gain link with `bits` bits over `n` uses; the
/// other transmitter is silent and unheard.
fn link_error(bits: usize, n: usize, power: f64, trials: u64) -> f64 {
    let mut errors = 0;
    for t in 0..trials {
        let cb = draw_codebook(n, bits, power, 1000 + t).unwrap();
        let msg = (t as usize * 37) % (1 << bits);
        let x = cb.encode(&Bitstring::from_index(msg, bits)).unwrap();
        let y = transmit_soft(&[x, SignalBlock::zeros(n)], &[0.0, 0.0], t, false).unwrap();
        errors += usize::from(nn_decode(&y[0], &cb, 1.0).unwrap() != msg);
    }
    errors as f64 / trials as f64
}

#[test]
fn error_grows_as_capacity_shrinks() {
    let bits = 8;
    let n = 96;
    let rate = bits as f64 / n as f64;
    // power giving rate = 1.5 x capacity
    let p_over = 2f64.powf(2.0 * rate / 1.5) - 1.0;
    assert!((rate / capacity(1.0, p_over) - 1.5).abs() < 1e-9);
    let over = link_error(bits, n, p_over, 300);
    let four = link_error(bits, n, 4.0 * p_over, 300);
    assert!(over >= 0.3, "{over}");
    assert!(four <= over, "{four} > {over}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soft_interior_always_decodes(k in 5usize..12, s in any::<u64>(), alpha in 0.2f64..3.0) {
        let cfg = NetworkConfig::soft_uniform(k, alpha, 1e4, 0.05);
        let d = DemandVector::random(k, 6, &mut seed::rng(s));
        let r = run_soft(&cfg, &lib(6, 20, s), &d, Backend::Ideal).unwrap();
        prop_assert!(r.guaranteed_success());
    }

    #[test]
    fn full_every_receiver_decodes(half in 2usize..7, s in any::<u64>()) {
        let k = 2 * half;
        let cfg = NetworkConfig::full(k, 0.5, 1e4, 0.05);
        let d = DemandVector::random(k, 6, &mut seed::rng(s));
        let r = run_full(&cfg, &lib(6, 12, s), &d, Backend::Ideal).unwrap();
        prop_assert!(r.all_success());
    }

    #[test]
    fn cache_rebuilds_what_neighbours_send(k in 5usize..10, s in any::<u64>()) {
        // every period: the keys a receiver cancels are exactly the keys sent
        let d = DemandVector::random(k, 6, &mut seed::rng(s));
        let sched = delivery_schedule_soft(k, &d).unwrap();
        for p in &sched.periods {
            for rx in 1..=k {
                if let DecodePlan::Decode { cancel, .. } = p.plan(rx) {
                    for c in cancel {
                        let sent: Vec<PartKey> = p.action(c.tx).keys();
                        prop_assert_eq!(&sent, &c.keys);
                    }
                }
            }
        }
    }
}
