use orbtrace::catalog;
use orbtrace::shift::{allowed_blocks, exact_allowed_blocks};
use orbtrace::{Alphabet, Configuration, GroupFamily, GroupSpec, ShiftSpace};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space(family: GroupFamily, radius: u32) -> ShiftSpace {
    ShiftSpace::new(GroupSpec::standard(family), Alphabet::binary(), radius).unwrap()
}

fn near_pair(s: &ShiftSpace, seed: u64, agree: u32) -> (Configuration, Configuration) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Configuration::random(s, s.radius(), &mut rng).unwrap();
    let start = s.ball().size_at(agree.min(s.radius()));
    let mut v = x.values().to_vec();
    for c in v.iter_mut().skip(start) {
        if rng.gen_bool(0.3) {
            *c ^= 1;
        }
    }
    (x.clone(), Configuration::new(s, s.radius(), v).unwrap())
}

// first disagreement radius by direct comparison over positions
fn brute_exponent(s: &ShiftSpace, x: &Configuration, y: &Configuration) -> Option<u32> {
    (0..x.values().len())
        .find(|&i| x.value(i) != y.value(i))
        .map(|i| s.ball().length_of(i).saturating_sub(1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn action_law_on_free_group(seed in any::<u64>(), gi in 0usize..17, hi in 0usize..17) {
        let s = space(GroupFamily::FreeGroup(2), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Configuration::random(&s, 6, &mut rng).unwrap();
        let (g, h) = (s.ball().element(gi).clone(), s.ball().element(hi).clone());
        let g_hx = s.shift(&g, &s.shift(&h, &x).unwrap()).unwrap();
        let gh = s.group().multiply(&g, &h).unwrap();
        let ghx = s.shift(&gh, &x).unwrap().restrict(&s, g_hx.radius()).unwrap();
        prop_assert_eq!(g_hx, ghx);
    }

    #[test]
    fn action_law_on_heisenberg(seed in any::<u64>(), gi in 0usize..7, hi in 0usize..7) {
        let s = space(GroupFamily::HeisenbergZ, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Configuration::random(&s, 4, &mut rng).unwrap();
        let (g, h) = (s.ball().element(gi).clone(), s.ball().element(hi).clone());
        let g_hx = s.shift(&g, &s.shift(&h, &x).unwrap()).unwrap();
        let gh = s.group().multiply(&g, &h).unwrap();
        let ghx = s.shift(&gh, &x).unwrap().restrict(&s, g_hx.radius()).unwrap();
        prop_assert_eq!(g_hx, ghx);
    }

    #[test]
    fn ultrametric_on_z2(seed in any::<u64>(), a in 0u32..5, b in 0u32..5) {
        let s = space(GroupFamily::IntegerLattice(2), 4);
        let (x, y) = near_pair(&s, seed, a);
        let (_, z) = near_pair(&s, seed ^ 0x9e37, b);
        let dxy = s.distance(&x, &y).unwrap().value();
        let dyz = s.distance(&y, &z).unwrap().value();
        let dxz = s.distance(&x, &z).unwrap().value();
        prop_assert!(dxz <= dxy.clone().max(dyz.clone()));
        prop_assert_eq!(s.distance(&y, &x).unwrap().value(), dxy);
        prop_assert!(s.distance(&x, &x).unwrap().indistinguishable);
    }

    #[test]
    fn distance_matches_first_disagreement(seed in any::<u64>(), agree in 0u32..6) {
        let s = space(GroupFamily::FreeGroup(2), 5);
        let (x, y) = near_pair(&s, seed, agree);
        let d = s.distance(&x, &y).unwrap();
        match brute_exponent(&s, &x, &y) {
            Some(e) => prop_assert_eq!((d.exponent, d.indistinguishable), (e, false)),
            None => prop_assert!(d.indistinguishable),
        }
    }

    #[test]
    fn truncated_distance_resolves_monotonically(seed in any::<u64>(), agree in 0u32..7) {
        let s = space(GroupFamily::IntegerLattice(1), 6);
        let (x, y) = near_pair(&s, seed, agree);
        let full = s.distance(&x, &y).unwrap();
        for r in 0..6 {
            let d = s.distance_on(&x, &y, r);
            if d.indistinguishable {
                prop_assert!(full.exponent >= r);
            } else {
                prop_assert_eq!(d, full);
            }
        }
    }

    #[test]
    fn shift_preserves_local_admissibility(seed in any::<u64>(), gi in 0usize..5) {
        let s = space(GroupFamily::IntegerLattice(2), 5);
        let hs = catalog::hard_square(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // a random hard-square configuration: ones only on a sparse checkerboard
        let values: Vec<u8> = s
            .ball()
            .elements()
            .iter()
            .map(|g| match g {
                orbtrace::GroupElement::Lattice(v) if (v[0] + v[1]).rem_euclid(2) == 0 => rng.gen_range(0..2),
                _ => 0,
            })
            .collect();
        let x = Configuration::new(&s, 5, values).unwrap();
        prop_assert!(s.locally_admissible(&x, &hs).unwrap());
        let gx = s.shift_at(gi, &x).unwrap();
        prop_assert!(s.locally_admissible(&gx, &hs).unwrap());
    }
}

fn fib_words(len: usize) -> usize {
    (0..1usize << len).filter(|w| w & (w >> 1) == 0).count()
}

#[test]
fn golden_mean_blocks_match_fibonacci() {
    let s = space(GroupFamily::IntegerLattice(1), 12);
    let gm = catalog::golden_mean(&s).unwrap();
    for k in 1..=4 {
        let exact = exact_allowed_blocks(&s, &gm, k).unwrap().blocks;
        assert_eq!(exact.len(), fib_words(2 * k as usize + 1));
        let mut previous = usize::MAX;
        for slack in 0..=4 {
            let approx = allowed_blocks(&s, &gm, k, slack).unwrap().blocks;
            assert!(exact.is_subset(&approx));
            assert!(approx.len() <= previous);
            previous = approx.len();
        }
    }
}

#[test]
fn even_window_slack_converges_to_transfer_graph() {
    let s = space(GroupFamily::IntegerLattice(1), 12);
    let ew = catalog::even_window(&s).unwrap();
    let exact = exact_allowed_blocks(&s, &ew, 3).unwrap().blocks;
    let approx = allowed_blocks(&s, &ew, 3, 6).unwrap().blocks;
    assert_eq!(exact, approx);
}

#[test]
fn encode_roundtrip() {
    let s = space(GroupFamily::HeisenbergZ, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Configuration::random(&s, 2, &mut rng).unwrap();
    let text = x.encode(s.alphabet());
    assert_eq!(Configuration::decode(&s, &text).unwrap(), x);
}
