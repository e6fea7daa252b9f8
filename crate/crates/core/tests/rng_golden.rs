//! Frozen draws from the seeded generator. If these change, every stored
//! experiment seed silently means something different, so this must fail
//! loudly instead.

use rand::Rng;
use ygg_core::seeded_rng;

#[test]
fn seed_zero_draws_are_stable() {
    let mut rng = seeded_rng(0);
    let draws: Vec<u64> = (0..8).map(|_| rng.random::<u64>()).collect();
    assert_eq!(
        draws,
        [
            13080132717333068652,
            8594738769458413623,
            12896916468484187878,
            1109962093070354556,
            16216730426637698681,
            10137062675859812541,
            15292064470292927036,
            17255573299003615418,
        ]
    );
    let mut rng = seeded_rng(0);
    let ranged: Vec<u32> = (0..8).map(|_| rng.random_range(0..1000u32)).collect();
    assert_eq!(ranged, [654, 709, 729, 465, 507, 699, 560, 60]);
}
