//! Frozen outputs of the independent Python implementation in
//! `oracles/crypto_vectors.py`.

use fiat_core::crypto::babyjubjub::subgroup_order;
use fiat_core::crypto::ecies::{ecies_decrypt_checked, ecies_encrypt};
use fiat_core::crypto::{ecdh, mimc::mimc7, poseidon, KeyPair, Point, Scalar};
use fiat_core::field::{parse_decimal, to_biguint};
use fiat_core::Fe;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fe(s: &str) -> Fe {
    parse_decimal(s).unwrap()
}

fn fes(v: impl IntoIterator<Item = u64>) -> Vec<Fe> {
    v.into_iter().map(Fe::from).collect()
}

#[test]
fn poseidon_round_constants_and_mds() {
    let p = poseidon::params();
    let hex = |s: &str| BigUint::parse_bytes(s.as_bytes(), 16).unwrap();
    assert_eq!(to_biguint(&p.rc[0]), hex("0ee9a592ba9a9518d05986d656f40c2114c4993c11bb29938d21d47304cd8e6e"));
    assert_eq!(to_biguint(&p.mds[0][0]), hex("109b7f411ba0e4c9b2b70caf5c36a7b194be7c11ad24378bfedb68592ba8118b"));
}

#[test]
fn poseidon_vectors() {
    let cases: [(Vec<Fe>, &str); 6] = [
        (fes([1, 2]), "7853200120776062878684798364095072458815029376092732009249414926327459813530"),
        (vec![], "13297227346748348616792935042878212687827823120645919540615015187477210521233"),
        (fes([1]), "415600613235378359744539731387103727073144920510400543186315443896602800829"),
        (fes([1, 2, 3]), "17937339561183986834007131145050176793379528085754456527268149013419469474309"),
        (fes([1, 2, 3, 4]), "15603722581647291351121858617337979057207616585593172381325651181494488678379"),
        (fes(0..10), "16737282041940129466434839956439669642628096291491476312803651721621242989981"),
    ];
    for (input, want) in cases {
        assert_eq!(poseidon::hash(&input), fe(want), "poseidon({input:?})");
    }
}

#[test]
fn mimc_vectors() {
    assert_eq!(
        mimc7(Fe::from(1u64), Fe::from(2u64)),
        fe("10594780656576967754230020536574539122676596303354946869887184401991294982664")
    );
    let zero_key = [
        "11730251359286723731141466095709901450170369094578288842486979042586033922425",
        "12240136457100152345096610842396488822128317434453048685489891202497829360467",
        "20808841395409656332564552932284796001294721646723037196107424963391316010609",
        "10513607674170245577899825752483841247286555366379776940083295721103562343571",
    ];
    for (i, want) in zero_key.iter().enumerate() {
        assert_eq!(mimc7(Fe::from(i as u64), Fe::from(0u64)), fe(want));
    }
    assert_eq!(
        mimc7(Fe::from(7u64), Fe::from(12345u64)),
        fe("3598604173049431944087639343897743624443936850319405209350365558775631498096")
    );
}

#[test]
fn baby_jubjub_vectors() {
    let g = Point::generator();
    assert!(g.is_on_curve());
    assert!(g.mul_biguint(subgroup_order()).is_identity());
    let five = g.mul(&Scalar::from_u64(5));
    assert_eq!(five.x, fe("11480966271046430430613841218147196773252373073876138147006741179837832100836"));
    assert_eq!(five.y, fe("15148236048131954717802795400425086368006776860859772698778589175317365693546"));

    let a = KeyPair::from_secret(Scalar::from_u64(123456789));
    let b = KeyPair::from_secret(Scalar::from_u64(987654321));
    let want = fe("4661099794367018374144822659717141842898590044940551427025269379747486852533");
    assert_eq!(ecdh(&a.sk, &b.pk).unwrap(), want);
    assert_eq!(ecdh(&b.sk, &a.pk).unwrap(), want);
}

#[test]
fn ecdh_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let a = KeyPair::generate(&mut rng);
        let b = KeyPair::generate(&mut rng);
        assert_eq!(ecdh(&a.sk, &b.pk).unwrap(), ecdh(&b.sk, &a.pk).unwrap());
    }
}

#[test]
fn ecies_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let kp = KeyPair::generate(&mut rng);
    for _ in 0..200 {
        let len = rng.gen_range(1..50);
        let plain: Vec<Fe> = (0..len).map(|_| Fe::from(rng.gen::<u64>()) * Fe::from(rng.gen::<u64>())).collect();
        let c = ecies_encrypt(&kp.pk, &plain, &Scalar::random(&mut rng)).unwrap();
        assert_eq!(ecies_decrypt_checked(&kp.sk, &c).unwrap(), plain);
    }
}
