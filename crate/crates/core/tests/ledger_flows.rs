use proptest::prelude::*;

use anonrep::ledger::Rejection;
use anonrep::network::{synthetic_store, Network, NetworkConfig};
use anonrep::proof::free_of_secrets;
use anonrep::report::{ledger_demo, DemoConfig};
use anonrep::suite::fuzz::ledger_fuzz;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fuzzed_histories_keep_safety(seed in any::<u64>()) {
        let r = ledger_fuzz(seed, 1, 120).unwrap();
        for (name, check) in r.checks() {
            prop_assert!(check.passed, "{}: {}", name, check.detail);
        }
    }
}

#[test]
fn identical_scripts_give_identical_state() {
    let a = ledger_demo(&DemoConfig::default()).unwrap();
    let b = ledger_demo(&DemoConfig::default()).unwrap();
    assert_eq!(a.summary.state_digest, b.summary.state_digest);
    assert_eq!(a.log.public_bytes(), b.log.public_bytes());
    let mut other = DemoConfig::default();
    other.seed += 1;
    assert_ne!(ledger_demo(&other).unwrap().summary.state_digest, a.summary.state_digest);
}

#[test]
fn token_transactions_carry_no_identity_bytes() {
    let mut cfg = NetworkConfig::new(3);
    cfg.log = true;
    let mut net = Network::new(cfg, synthetic_store(["a", "b"])).unwrap();
    let mut a = net.onboard("a").unwrap();
    let _b = net.onboard("b").unwrap();
    let old = a.pseudonym.clone().unwrap();
    let identity = vec![a.context.pk_ctx.0.to_vec(), a.master.m_pk.0.to_vec()];
    let before = net.log.as_ref().unwrap().records.len();
    net.mint_token(&mut a).unwrap();
    net.spend_token(&mut a).unwrap();
    net.use_token(&mut a).unwrap();

    let log = net.log.as_ref().unwrap();
    let token_txs = |from: usize| {
        log.records[from..]
            .iter()
            .filter(|r| matches!(r.kind.as_str(), "spend_at" | "spend_rt" | "use_rt"))
            .flat_map(|r| hex::decode(&r.bytes).unwrap())
            .collect::<Vec<u8>>()
    };
    assert!(free_of_secrets(&token_txs(0), &identity, 8));
    let after_rotation = token_txs(before);
    assert!(!after_rotation.is_empty());
    assert!(free_of_secrets(&after_rotation, &[old.apk.0.to_vec(), old.ask.to_vec()], 8));
}

#[test]
fn replayed_transactions_are_refused() {
    let mut net = Network::new(NetworkConfig::new(9), synthetic_store(["r", "w"])).unwrap();
    let r = net.onboard("r").unwrap();
    let mut w = net.onboard("w").unwrap();
    net.mint_token(&mut w).unwrap();
    let (_, tx) = net.use_rt_tx(&w).unwrap();
    net.submit_use_rt(&tx).unwrap();
    assert_eq!(net.submit_use_rt(&tx), Err(Rejection::SerialReused));

    let task = net.publish_task(&r, 10).unwrap();
    net.csml.credit(r.apk().unwrap(), 10);
    let (note, leaf) = net.deposit(&r, &task, 10).unwrap();
    net.csml.expire_task(&task).unwrap();
    let wd = net.withdraw_tx(&note, leaf, r.apk().unwrap()).unwrap();
    net.submit_withdraw(&wd).unwrap();
    assert_eq!(net.submit_withdraw(&wd), Err(Rejection::NullifierReused));
    assert!(net.csml.conserves_funds());
}
