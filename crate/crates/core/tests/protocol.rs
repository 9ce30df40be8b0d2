use std::sync::Arc;

use privrec_core::crypto::ot::ot_extract;
use privrec_core::crypto::KeyPair;
use privrec_core::exact::encode_itemset;
use privrec_core::protocol::{
    private_all_assoc, private_approx_fetch, private_approx_top1, private_exact_fetch, private_two_party_sort,
    ClientConfig, ClientSession, Codec, Message, Mode, Server, ServerConfig, SessionInit, Stage,
    PROTOCOL_VERSION,
};
use privrec_core::rules::{recommend, select_rules, Criterion, OrderingFunction};
use privrec_core::transport::Loopback;
use privrec_core::{ItemSet, RuleDatabase, RuleId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Integer;

const BITS: u32 = 512;

fn toy_db() -> RuleDatabase {
    RuleDatabase::from_triples(
        6,
        &[(&[1], &[3, 4], 5), (&[2], &[4, 5], 3), (&[1, 2], &[6], 4), (&[3], &[1], 2)],
    )
    .unwrap()
    .with_default_items(vec![4, 1])
}

fn server(db: RuleDatabase, seed: u64) -> Arc<Server> {
    Arc::new(Server::new(db, ServerConfig { key_bits: BITS, seed, ..Default::default() }).unwrap())
}

fn client(s: &Arc<Server>, mode: Mode, dims: usize, seed: u64) -> ClientSession<Loopback> {
    let cfg = ClientConfig { key_bits: BITS, ot_dims: dims, mode, seed, ..Default::default() };
    ClientSession::open(Loopback::new(s), &cfg).unwrap()
}

fn set(v: &[u32]) -> ItemSet {
    ItemSet::new(v.iter().copied())
}

#[test]
fn all_assoc_matches_plain_pipeline() {
    let db = toy_db();
    let srv = server(db.clone(), 1);
    let mut c = client(&srv, Mode::Exact, 2, 2);
    for (t, w, max_len, cap) in [(&[1u32, 2][..], 0, 2, 3), (&[1, 2, 3], 3, 2, 2), (&[3], 0, 1, 5), (&[5, 6], 0, 2, 3), (&[1, 2], 99, 2, 3)] {
        let t = set(t);
        let plain = recommend(&db, &t, &Criterion::AllAssoc { w, t: max_len }, cap).unwrap().item_ids();
        let private = private_all_assoc(&mut c, &t, w, max_len, cap).unwrap();
        assert_eq!(private.items, plain, "t={t:?} w={w}");
        let selected = select_rules(&db, &t, &Criterion::AllAssoc { w, t: max_len }).unwrap();
        assert_eq!(private.default_used, selected.is_empty());
    }
    c.close().unwrap();
}

#[test]
fn fetch_count_is_number_of_subsets() {
    let db = RuleDatabase::from_triples(8, &[(&[1], &[2], 1), (&[3, 4], &[5], 1), (&[6], &[7], 1), (&[8], &[1], 1)]).unwrap();
    let srv = server(db, 3);
    let mut c = client(&srv, Mode::Exact, 2, 4);
    let a = private_all_assoc(&mut c, &set(&[1, 3, 4, 6, 8]), 0, 5, 3).unwrap();
    assert_eq!(a.fetches, 31);
    let a = private_all_assoc(&mut c, &set(&[1, 3, 4, 6, 8]), 0, 3, 3).unwrap();
    assert_eq!(a.fetches, 25);
}

#[test]
fn exact_fetch_round_trip_and_absent_keys() {
    let db = toy_db();
    let srv = server(db.clone(), 5);
    let mut c = client(&srv, Mode::Exact, 2, 6);
    let anon = srv.anonymization().clone();
    for r in db.rules() {
        let key = privrec_core::exact::encode_itemset(&anon.map_set(&r.antecedent));
        let got = private_exact_fetch(&mut c, &key).unwrap().expect("stored key");
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].rule_id, r.id);
        assert_eq!(got[0].consequent, anon.map_set(&r.consequent));
        assert_eq!(got[0].antecedent_len as usize, r.antecedent.len());
    }
    assert!(private_exact_fetch(&mut c, &privrec_core::exact::encode_itemset(&set(&[1, 2, 3]))).unwrap().is_none());
    assert!(private_exact_fetch(&mut c, b"not an itemset").unwrap().is_none());
}

#[test]
fn two_party_sort_examples() {
    let srv = server(toy_db(), 7);
    let mut c = client(&srv, Mode::Exact, 1, 8);
    let spk = c.params().server_key.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let enc = |v: &[u64], rng: &mut ChaCha8Rng| v.iter().map(|&x| spk.encrypt_u64(x, 1, rng).unwrap()).collect::<Vec<_>>();
    let bound = Integer::from(1u64 << 40);
    let r = private_two_party_sort(&mut c, &enc(&[3, 1, 2], &mut rng), &bound).unwrap();
    assert_eq!(r.order, vec![0, 2, 1]);
    let r = private_two_party_sort(&mut c, &enc(&[5, 7, 5, 7, 1], &mut rng), &bound).unwrap();
    assert_eq!(r.order, vec![1, 3, 0, 2, 4]);
    assert_eq!(r.tie_with_next, vec![true, false, true, false, false]);
    let before = c.timings().get("sort");
    let r = private_two_party_sort(&mut c, &enc(&[9], &mut rng), &bound).unwrap();
    assert_eq!(r.order, vec![0]);
    assert_eq!(c.timings().get("sort"), before);
}

#[test]
fn sort_matches_plaintext_on_random_lists() {
    let srv = server(toy_db(), 10);
    let mut c = client(&srv, Mode::Exact, 1, 11);
    let spk = c.params().server_key.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let n = rng.random_range(0..20);
        let v: Vec<u64> = (0..n).map(|_| rng.random_range(0..6)).collect();
        let cts: Vec<_> = v.iter().map(|&x| spk.encrypt_u64(x, 1, &mut rng).unwrap()).collect();
        let got = private_two_party_sort(&mut c, &cts, &Integer::from(u64::MAX)).unwrap();
        let mut want: Vec<usize> = (0..n).collect();
        want.sort_by(|&a, &b| v[b].cmp(&v[a]).then(a.cmp(&b)));
        assert_eq!(got.order, want, "{v:?}");
    }
}

#[test]
fn approx_top1_matches_plain_lsh_on_pseudonyms() {
    use privrec_core::lsh::{query_top1, LshParams};
    let db = toy_db();
    let params = LshParams::single(6, 4, 13);
    let cfg = ServerConfig { key_bits: BITS, seed: 14, approx: Some(params), ..Default::default() };
    let srv = Arc::new(Server::new(db.clone(), cfg).unwrap());
    let anon = srv.anonymization().clone();
    let triples: Vec<(Vec<u32>, Vec<u32>, u64)> = db
        .rules()
        .iter()
        .map(|r| (anon.map_set(&r.antecedent).into_vec(), anon.map_set(&r.consequent).into_vec(), r.weight))
        .collect();
    let refs: Vec<(&[u32], &[u32], u64)> = triples.iter().map(|(a, c, w)| (&a[..], &c[..], *w)).collect();
    let anon_db = RuleDatabase::from_triples(db.universe_size(), &refs).unwrap();
    let index = srv.lsh().unwrap();
    let mut c = client(&srv, Mode::Approx, 2, 15);
    for f in [OrderingFunction::weight_only(), OrderingFunction::length_then_weight(), OrderingFunction::weight_then_length()] {
        for t in [&[1u32, 2][..], &[1], &[3, 4], &[5]] {
            let t = set(t);
            let anon_t = anon.map_set(&t);
            let want = query_top1(&anon_t, index, &anon_db, &f).unwrap();
            let got = private_approx_top1(&mut c, &t, &f).unwrap();
            assert_eq!(got.fetches, if anon_t.is_empty() { 0 } else { 4 });
            match want {
                Some(r) => {
                    assert_eq!(got.rule, Some(r.id));
                    assert_eq!(got.items, db.rule(r.id).unwrap().consequent.items());
                }
                None => assert!(got.default_used),
            }
            if !anon_t.is_empty() {
                let (cands, n) = private_approx_fetch(&mut c, &anon_t).unwrap();
                assert_eq!(n, 4);
                let ids: Vec<RuleId> = cands.iter().map(|e| e.rule_id).collect();
                assert_eq!(ids, index.query_candidates(&anon_t).ids);
            }
        }
    }
}

#[test]
fn transcript_hides_items_and_weights() {
    let db = toy_db();
    let srv = server(db.clone(), 16);
    let mut c = client(&srv, Mode::Exact, 2, 17);
    let answer = private_all_assoc(&mut c, &set(&[1, 2]), 0, 2, 3).unwrap();
    assert!(!answer.default_used);
    let key = c.key();
    let params = c.params();
    let codec = Codec { client: Some(key.public().clone()), server: Some(params.server_key.clone()) };
    let chan = c.channel();
    let weights: Vec<Integer> = db.rules().iter().map(|r| Integer::from(r.weight)).collect();
    let (mut queries, mut fetched) = (0, 0);
    for f in chan.sent() {
        match codec.decode(f.kind, &f.payload).unwrap() {
            // Selection vectors are the only thing that depends on the items.
            Message::OtQueryBatch { queries: qs, .. } => {
                for q in qs {
                    for dim in &q.sel {
                        let bits: Vec<Integer> = dim.iter().map(|c| key.decrypt(c).unwrap()).collect();
                        assert!(bits.iter().all(|b| *b == 0 || *b == 1));
                        assert_eq!(bits.iter().filter(|b| **b == 1).count(), 1);
                    }
                    queries += 1;
                }
            }
            Message::SessionInit(_) | Message::SortPairs(_) | Message::SessionClose => {}
            other => panic!("unexpected client message {:?}", other.kind()),
        }
    }
    for f in chan.received() {
        if let Message::OtReplyBatch { stage: Stage::Fetch, replies, .. } = codec.decode(f.kind, &f.payload).unwrap() {
            for r in replies {
                let blocks = ot_extract(&r, key).unwrap();
                if let Ok(entries) = params.layout.unpack(&blocks) {
                    for e in entries {
                        // What the client can open is the masked weight only.
                        assert!(!weights.contains(&e.weight));
                        fetched += 1;
                    }
                }
            }
        }
    }
    assert!(queries >= 2 + 3);
    assert!(fetched >= 2);
}

#[test]
fn every_session_rehashes_the_table() {
    let srv = server(toy_db(), 18);
    let key = encode_itemset(&srv.anonymization().map_set(&set(&[1, 2])));
    let cfg = |seed| ClientConfig { key_bits: BITS, ot_dims: 2, seed, ..Default::default() };
    let mut c = ClientSession::open(Loopback::new(&srv), &cfg(0)).unwrap();
    let mut last = c.params().table.index_of(&key);
    let (trials, mut moved) = (12, 0);
    for seed in 1..=trials {
        let chan = c.close().unwrap();
        c = ClientSession::open(chan, &cfg(seed)).unwrap();
        let idx = c.params().table.index_of(&key);
        moved += usize::from(idx != last);
        last = idx;
        assert_eq!(private_exact_fetch(&mut c, &key).unwrap().unwrap()[0].rule_id, RuleId(3));
    }
    assert!(moved >= trials as usize - 2, "{moved}/{trials}");
}

#[test]
fn server_rekey_rebuilds_in_place() {
    let srv = server(toy_db(), 23);
    let key = encode_itemset(&srv.anonymization().map_set(&set(&[1])));
    let mut s = srv.session();
    assert!(s.rekey().is_err());
    let client_key = KeyPair::generate(BITS, 2, &mut ChaCha8Rng::seed_from_u64(24)).unwrap();
    let init = SessionInit { version: PROTOCOL_VERSION, mode: Mode::Exact, client_key: client_key.public().clone() };
    assert!(matches!(s.handle(Message::SessionInit(init)), Message::PublicParams(_)));
    let before = s.table_params().unwrap().clone();
    s.rekey().unwrap();
    let after = s.table_params().unwrap().clone();
    assert_ne!(before, after);
    assert!(s.timings().get("rekey") > std::time::Duration::ZERO);
    let _ = (before.index_of(&key), after.index_of(&key));
}
