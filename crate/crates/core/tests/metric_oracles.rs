mod oracle;

use swim_core::metrics::{auc, average_precision, gamepoint_k, gamepoint_p, nss, precision_at};
use swim_core::scenes::InstanceMask;
use swim_core::{SeededRng, Tensor2D};

fn random_pair(rng: &mut SeededRng, levels: usize) -> (Tensor2D, InstanceMask) {
    let scores: Vec<f64> = (0..64)
        .map(|_| if levels == 0 { rng.uniform() } else { rng.below(levels) as f64 / levels as f64 })
        .collect();
    let density = rng.uniform();
    let bits: Vec<bool> = (0..64).map(|_| rng.bernoulli(density)).collect();
    (Tensor2D::new(8, 8, scores).unwrap(), InstanceMask::from_bits(8, 8, bits).unwrap())
}

#[test]
fn metrics_match_brute_force_on_random_8x8() {
    let mut rng = SeededRng::new(2024);
    for trial in 0..1000 {
        // alternate continuous scores with heavily tied ones
        let (map, mask) = random_pair(&mut rng, [0, 3, 8][trial % 3]);
        let (s, m) = (map.data(), mask.bits());
        for p in [1.0, 5.0, 10.0, 50.0, 100.0] {
            assert_eq!(gamepoint_p(&map, &mask, p).unwrap().to_bits(), oracle::gamepoint_p(s, m, p).to_bits());
        }
        for k in [1, 5, 10, 50, 64] {
            assert_eq!(gamepoint_k(&map, &mask, k).unwrap().to_bits(), oracle::gamepoint_k(s, m, k).to_bits());
        }
        assert_eq!(auc(&map, &mask).ok().map(f64::to_bits), oracle::auc(s, m).map(f64::to_bits));
        assert_eq!(nss(&map, &mask).ok().map(f64::to_bits), oracle::nss(s, m).map(f64::to_bits));
        assert_eq!(
            average_precision(&map, &mask).ok().map(f64::to_bits),
            oracle::average_precision(s, m).map(f64::to_bits)
        );
        let p = precision_at(&map, &mask, 0.75).unwrap();
        let (v, empty) = oracle::precision_at(s, m, 0.75);
        assert_eq!((p.value.to_bits(), p.empty_prediction), (v.to_bits(), empty));
    }
}
