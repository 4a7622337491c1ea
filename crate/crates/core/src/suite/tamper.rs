//! Proof soundness under statement tampering, and secret leakage into public bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Check;
use crate::crypto::Digest;
use crate::error::Result;
use crate::ledger::{DepositNote, MetricEntry};
use crate::network::{synthetic_store, Network, NetworkConfig, Participant};
use crate::proof::{free_of_secrets, verify, Proof, PublicInputs, RelationId, Statement};

/// Public statements and proofs from one honest run, plus every secret the
/// clients held along the way.
pub struct HonestRun {
    pub net: Network,
    pub proofs: Vec<(Statement, Proof)>,
    pub secrets: Vec<Vec<u8>>,
}

fn collect(secrets: &mut Vec<Vec<u8>>, p: &Participant) {
    for s in p.secrets() {
        if !secrets.contains(&s) {
            secrets.push(s);
        }
    }
}

/// Onboarding, a task with deposit, evaluation and payout, rotations, and an
/// expired task whose deposit is withdrawn. Exercises every relation.
pub fn honest_run(seed: u64) -> Result<HonestRun> {
    let mut cfg = NetworkConfig::new(seed);
    cfg.log = true;
    let mut net = Network::new(cfg, synthetic_store(["r", "w1", "w2"]))?;
    let mut proofs = Vec::new();
    let mut secrets = Vec::new();

    let mut people = Vec::new();
    for id in ["r", "w1", "w2"] {
        let mut p = net.enroll(id)?;
        net.mint_access(&mut p)?;
        collect(&mut secrets, &p);
        let (token, tx) = net.spend_at_tx(&p)?;
        proofs.push((tx.statement(), tx.proof));
        let idx = net.submit_spend_at(&tx)?;
        p.token = Some((token, idx));
        collect(&mut secrets, &p);
        let (keys, tx) = net.use_rt_tx(&p)?;
        proofs.push((tx.statement(), tx.proof));
        net.submit_use_rt(&tx)?;
        p.token = None;
        p.pseudonym = Some(keys);
        collect(&mut secrets, &p);
        people.push(p);
    }

    let (paid, _, _) = open_task(&mut net, &people, &mut proofs, &mut secrets)?;
    let entry = |p: &Participant, t: u64| MetricEntry { apk: p.apk().expect("onboarded"), trust_micro: t, weight_micro: 800_000 };
    let req = entry(&people[0], 700_000);
    let workers = vec![entry(&people[1], 900_000), entry(&people[2], 300_000)];
    net.evaluate(&paid, req, workers)?;
    let apks: Vec<Digest> = people[1..].iter().filter_map(Participant::apk).collect();
    let tx = net.pay_out_tx(&paid, apks)?;
    net.submit_pay_out(&tx)?;

    for p in people.iter_mut().skip(1) {
        net.mint_token(p)?;
        collect(&mut secrets, p);
        let (new, tx) = net.spend_rt_tx(p)?;
        proofs.push((tx.statement(), tx.proof));
        let idx = net.submit_spend_rt(&tx)?;
        p.token = Some((new, idx));
        collect(&mut secrets, p);
        let (keys, tx) = net.use_rt_tx(p)?;
        proofs.push((tx.statement(), tx.proof));
        net.submit_use_rt(&tx)?;
        p.token = None;
        p.pseudonym = Some(keys);
        collect(&mut secrets, p);
    }

    let (expired, note, leaf) = open_task(&mut net, &people, &mut proofs, &mut secrets)?;
    net.csml.expire_task(&expired)?;
    let tx = net.withdraw_tx(&note, leaf, people[0].apk().expect("onboarded"))?;
    proofs.push((tx.statement(), tx.proof));
    net.submit_withdraw(&tx)?;

    Ok(HonestRun { net, proofs, secrets })
}

/// `people[0]` publishes and funds a task; everyone else subscribes.
fn open_task(
    net: &mut Network,
    people: &[Participant],
    proofs: &mut Vec<(Statement, Proof)>,
    secrets: &mut Vec<Vec<u8>>,
) -> Result<(String, DepositNote, u64)> {
    let id = net.next_task_id();
    let tx = net.publish_tx(&people[0], &id, 90)?;
    proofs.push((tx.statement(), tx.proof));
    net.submit_publish(&tx)?;
    net.csml.credit(people[0].apk().expect("onboarded"), 90);
    let (note, leaf) = net.deposit(&people[0], &id, 90)?;
    secrets.extend(note.secrets().into_iter().map(<[u8]>::to_vec));
    for w in &people[1..] {
        let tx = net.subscribe_tx(w, &id)?;
        proofs.push((tx.statement(), tx.proof));
        net.submit_subscribe(&tx)?;
    }
    Ok((id, note, leaf))
}

fn flip(d: &mut Digest, rng: &mut ChaCha8Rng) {
    d.0[rng.random_range(0..32)] ^= 1 << rng.random_range(0..8);
}

fn bump(x: &mut u64, rng: &mut ChaCha8Rng) {
    *x ^= 1 << rng.random_range(0..20);
}

/// Change exactly one public field.
pub fn tamper(public: &PublicInputs, rng: &mut ChaCha8Rng) -> PublicInputs {
    let mut p = public.clone();
    let k = rng.random_range(0..5);
    match &mut p {
        PublicInputs::AS { rt_a, cm_u, pk } => match k % 3 {
            0 => flip(rt_a, rng),
            1 => flip(&mut cm_u.0, rng),
            _ => flip(pk, rng),
        },
        PublicInputs::RS { rt_r, serial, cm_r_next } => match k % 3 {
            0 => flip(rt_r, rng),
            1 => flip(&mut serial.0, rng),
            _ => flip(&mut cm_r_next.0, rng),
        },
        PublicInputs::RU { rt_r, serial, r_micro, new_apk } => match k % 4 {
            0 => flip(rt_r, rng),
            1 => flip(&mut serial.0, rng),
            2 => bump(r_micro, rng),
            _ => flip(new_apk, rng),
        },
        PublicInputs::I { task_id, handle, rt_a } => match k % 3 {
            0 => task_id.push('x'),
            1 => flip(&mut handle.0, rng),
            _ => flip(rt_a, rng),
        },
        PublicInputs::D { rt_d, nullifier, cm_d, amount, target_apk } => match k {
            0 => flip(rt_d, rng),
            1 => flip(&mut nullifier.0, rng),
            2 => flip(&mut cm_d.0, rng),
            3 => bump(amount, rng),
            _ => flip(target_apk, rng),
        },
    }
    p
}

/// Every honest proof verifies and every relation is covered.
pub fn honest_proofs(run: &HonestRun) -> Check {
    let env = &run.net.env;
    let bad = run.proofs.iter().filter(|(s, p)| !verify(env, s, p)).count();
    let missing: Vec<RelationId> =
        RelationId::ALL.into_iter().filter(|r| !run.proofs.iter().any(|(s, _)| s.relation() == *r)).collect();
    Check::new(
        bad == 0 && missing.is_empty(),
        format!("{} proofs, {bad} failed to verify, relations missing: {missing:?}", run.proofs.len()),
    )
}

/// Tampered statements, tags and relation ids against honest proofs.
pub fn tamper_trials(run: &HonestRun, trials: usize, seed: u64) -> Check {
    let env = &run.net.env;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = 0;
    for _ in 0..trials {
        let (st, proof) = &run.proofs[rng.random_range(0..run.proofs.len())];
        let ok = match rng.random_range(0..10) {
            0 => {
                let mut p = *proof;
                flip(&mut p.tag, &mut rng);
                verify(env, st, &p)
            }
            1 => {
                let others: Vec<_> = RelationId::ALL.into_iter().filter(|r| *r != proof.relation).collect();
                let p = Proof { relation: others[rng.random_range(0..others.len())], tag: proof.tag };
                verify(env, st, &p)
            }
            _ => verify(env, &Statement::new(tamper(&st.public, &mut rng)), proof),
        };
        accepted += ok as usize;
    }
    Check::new(accepted == 0, format!("{trials} tampered proofs, {accepted} accepted"))
}

/// No `min_len`-byte window of any client secret occurs in the public log.
pub fn leak_scan(run: &HonestRun, min_len: usize) -> Check {
    let bytes = run.net.log.as_ref().map(|l| l.public_bytes()).unwrap_or_default();
    let clean = free_of_secrets(&bytes, &run.secrets, min_len);
    Check::new(
        clean && !bytes.is_empty(),
        format!("{} secrets scanned against {} public bytes with {min_len}-byte windows", run.secrets.len(), bytes.len()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_run_is_sound_and_private() {
        let run = honest_run(5).unwrap();
        assert!(honest_proofs(&run).passed, "{}", honest_proofs(&run).detail);
        assert!(tamper_trials(&run, 500, 1).passed);
        assert!(leak_scan(&run, 4).passed);
    }

    #[test]
    fn scan_catches_a_planted_secret() {
        let mut run = honest_run(5).unwrap();
        let bytes = run.net.log.as_ref().unwrap().public_bytes();
        run.secrets.push(bytes[100..132].to_vec());
        assert!(!leak_scan(&run, 4).passed);
    }
}
