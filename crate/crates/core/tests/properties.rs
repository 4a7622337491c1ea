use proptest::prelude::*;

use anonrep::committee::{select_committee, vrf_eval, vrf_verify, AggSig, PartialSig, Roster};
use anonrep::crypto::{comm, derive_serial, hash_tagged, nullifier, prf, Digest, Encoder};
use anonrep::gas::{l1_total, l2_total, GasTable, FUNCTIONS};
use anonrep::merkle::{self, MerkleTree};
use anonrep::reputation::{
    interaction_weight, pw_mean_update, rat, trust_sensing, InteractionWeightParams, Rational, ReputationParams,
    SensingQuality, SensingWeights,
};

fn digest() -> impl Strategy<Value = Digest> {
    any::<[u8; 32]>().prop_map(Digest)
}

fn unit_micro() -> impl Strategy<Value = Rational> {
    (0i64..=1_000_000).prop_map(|n| rat(n, 1_000_000))
}

mod crypto {
    use super::*;

    proptest! {
        #[test]
        fn operations_are_deterministic(t in any::<[u8; 32]>(), p in prop::collection::vec(any::<u8>(), 1..64)) {
            prop_assert_eq!(comm(&t, &p).unwrap(), comm(&t, &p).unwrap());
            prop_assert_eq!(prf(&t, &p).unwrap(), prf(&t, &p).unwrap());
            prop_assert_eq!(derive_serial(&t, &t), derive_serial(&t, &t));
        }

        #[test]
        fn tags_separate_domains(a in 1u8..=14, b in 1u8..=14, x in prop::collection::vec(any::<u8>(), 0..64)) {
            prop_assume!(a != b);
            prop_assert_ne!(hash_tagged(a, &[&x]), hash_tagged(b, &[&x]));
        }

        #[test]
        fn distinct_inputs_give_distinct_outputs(s1 in any::<[u8; 32]>(), s2 in any::<[u8; 32]>()) {
            prop_assume!(s1 != s2);
            prop_assert_ne!(nullifier(&s1), nullifier(&s2));
            prop_assert_ne!(comm(&s1, b"x").unwrap(), comm(&s2, b"x").unwrap());
        }

        #[test]
        fn field_encoding_is_unambiguous(a in prop::collection::vec(any::<u8>(), 0..16), b in prop::collection::vec(any::<u8>(), 0..16), k in 0usize..16) {
            let joined = [a.clone(), b.clone()].concat();
            let k = k.min(joined.len());
            prop_assume!(k != a.len());
            let left = Encoder::new().field(&a).field(&b).finish();
            let right = Encoder::new().field(&joined[..k]).field(&joined[k..]).finish();
            prop_assert_ne!(left, right);
        }
    }
}

mod merkle_tree {
    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn snapshots_verify_forever(leaves in prop::collection::vec(digest(), 1..40)) {
            let mut tree = MerkleTree::new();
            let mut snaps = Vec::new();
            for leaf in &leaves {
                let (i, root) = tree.insert(*leaf).unwrap();
                snaps.push((root, *leaf, tree.prove(i).unwrap()));
            }
            for (root, leaf, path) in &snaps {
                prop_assert!(merkle::verify(root, leaf, path));
            }
            for (i, leaf) in leaves.iter().enumerate() {
                prop_assert!(merkle::verify(&tree.root(), leaf, &tree.prove(i as u64).unwrap()));
            }
            prop_assert_eq!(tree.root(), tree.recompute_root());
        }

        #[test]
        fn tampered_paths_fail(leaves in prop::collection::vec(digest(), 2..20), pick in any::<prop::sample::Index>(), what in 0u8..3, bit in 0usize..256) {
            let mut tree = MerkleTree::new();
            for l in &leaves {
                tree.insert(*l).unwrap();
            }
            let i = pick.index(leaves.len());
            let mut leaf = leaves[i];
            let mut path = tree.prove(i as u64).unwrap();
            let level = bit % path.siblings.len();
            match what {
                0 => leaf.0[bit / 8] ^= 1 << (bit % 8),
                1 => path.siblings[level].0[bit / 8] ^= 1 << (bit % 8),
                _ => path.directions[level] = !path.directions[level],
            }
            prop_assert!(!merkle::verify(&tree.root(), &leaf, &path));
        }

        #[test]
        fn same_inserts_same_root(leaves in prop::collection::vec(digest(), 0..30)) {
            let (mut a, mut b) = (MerkleTree::new(), MerkleTree::new());
            for l in &leaves {
                a.insert(*l).unwrap();
                b.insert(*l).unwrap();
            }
            prop_assert_eq!(a.root(), b.root());
        }
    }
}

mod reputation {
    use super::*;

    fn params() -> ReputationParams<Rational> {
        ReputationParams::new(rat(1, 5), rat(3, 5)).unwrap()
    }

    proptest! {
        #[test]
        fn update_stays_between_r_and_t(r in unit_micro(), t in unit_micro(), w in unit_micro(), th in unit_micro()) {
            let next = pw_mean_update(&r, &t, &w, &th, &params()).unwrap();
            prop_assert!(next >= r.min(t) && next <= r.max(t));
        }

        #[test]
        fn failed_outlier_gate_caps_trust_at_opinion_weight(o in unit_micro(), q in (unit_micro(), unit_micro(), unit_micro()), a1 in 0i64..=10) {
            let rest = rat(10 - a1, 30);
            let w = SensingWeights { alpha_1: rat(a1, 10), alpha_c: rest, alpha_f: rest, alpha_comp: rest };
            let sq = SensingQuality { o, q_c: q.0, q_f: q.1, q_comp: q.2, q_o: rat(0, 1) };
            prop_assert!(trust_sensing(&sq, &w).unwrap() <= w.alpha_1);
        }

        #[test]
        fn interaction_weight_is_a_unit_value(d in 0i64..5_000_000, a in 0i64..5_000_000, c in unit_micro()) {
            let quarter = rat(1, 4);
            let p = InteractionWeightParams {
                kappa: rat(1, 1), omega_0: quarter, omega_d: quarter, omega_a: quarter, omega_st: quarter,
                c_st: c, d_max: rat(1, 1), a_max: rat(1, 1),
            };
            let wf = interaction_weight(&p, &rat(d, 1_000_000), &rat(a, 1_000_000)).unwrap();
            prop_assert!(wf >= quarter && wf <= rat(1, 1));
        }
    }
}

mod gas {
    use super::*;

    proptest! {
        #[test]
        fn l2_monotone_and_l1_linear(f in 0usize..8, a in 1u64..2_000, b in 1u64..2_000) {
            let t = GasTable::default_table();
            let name = FUNCTIONS[f];
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(l2_total(&t, name, lo).unwrap() <= l2_total(&t, name, hi).unwrap());
            prop_assert_eq!(l1_total(&t, name, a + b).unwrap(), l1_total(&t, name, a).unwrap() + l1_total(&t, name, b).unwrap());
        }
    }
}

mod committee {
    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn too_few_valid_partials_never_verify(
            msg in prop::collection::vec(any::<u8>(), 1..32),
            signers in prop::collection::btree_set(0usize..7, 0..=2),
            junk in prop::collection::vec((0usize..7, digest()), 0..8),
            dup in 0usize..4,
        ) {
            let roster = Roster::deal(3, "prop", 7, 2);
            let mut partials: Vec<PartialSig> = signers.iter().map(|i| roster.part_sign(*i, &msg)).collect();
            let again: Vec<PartialSig> = partials.iter().cycle().take(dup * partials.len()).copied().collect();
            partials.extend(again);
            partials.extend(junk.into_iter().map(|(i, sig)| PartialSig { signer_index: i, sig }));
            let agg = AggSig { partials };
            prop_assert!(!roster.verify_agg(&msg, &agg));
        }

        #[test]
        fn selection_is_recomputable(sk in any::<[u8; 32]>(), input in prop::collection::vec(any::<u8>(), 0..32), k in 1usize..8) {
            let out = vrf_eval(&sk, &input);
            prop_assert!(vrf_verify(&sk, &input, &out));
            let a = select_committee(&out.r, k, 7).unwrap();
            prop_assert_eq!(&a, &select_committee(&vrf_eval(&sk, &input).r, k, 7).unwrap());
            prop_assert!(a.iter().all(|i| *i < 7));
        }
    }
}
