use proptest::prelude::*;
use rand::Rng;
use scm_core::{params_for_rate, sample_interval, CollisionSchedule, NoiseConfig, StreamSeed, WeibullParams};
use scm_oracles as oracle;

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn shape_one_is_exponential() {
    let p = WeibullParams::new(1.0, 0.25).unwrap();
    let mut rng = StreamSeed::new(2024, 0).rng();
    let xs: Vec<f64> = (0..100_000).map(|_| sample_interval(&p, &mut rng)).collect();
    let d = oracle::ks_statistic(&xs, |t| 1.0 - (-t / 0.25).exp());
    assert!(d < oracle::ks_critical_1pct(xs.len()), "D = {d}");
}

#[test]
fn heavy_tailed_mean_is_gamma_three() {
    let p = WeibullParams::new(0.5, 1.0).unwrap();
    let mut rng = StreamSeed::new(99, 1).rng();
    let xs: Vec<f64> = (0..1_000_000).map(|_| sample_interval(&p, &mut rng)).collect();
    let (mean, se) = mean_and_se(&xs);
    assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn first_collision_times_average_to_mean_interval() {
    let cfg = NoiseConfig::from_rate(41, 1.0, 0.5).unwrap();
    let firsts: Vec<f64> = (0..500)
        .flat_map(|k| CollisionSchedule::new(&cfg, StreamSeed::new(8, k)).next_times().to_vec())
        .collect();
    let (mean, se) = mean_and_se(&firsts);
    assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn trajectory_streams_do_not_overlap() {
    let a: Vec<u64> = {
        let mut r = StreamSeed::new(1, 0).rng();
        (0..64).map(|_| r.random()).collect()
    };
    let mut r = StreamSeed::new(1, 1).rng();
    let b: Vec<u64> = (0..64).map(|_| r.random()).collect();
    assert!(a.iter().all(|x| !b.contains(x)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn per_site_events_strictly_increase(
        seed in any::<u64>(),
        shape in 0.3f64..50.0,
        rate in 0.1f64..50.0,
    ) {
        let cfg = NoiseConfig::from_rate(4, shape, rate).unwrap();
        let mut s = CollisionSchedule::new(&cfg, seed);
        let mut last = [0.0f64; 4];
        for _ in 0..400 {
            let (site, t) = s.pop_next(&cfg);
            prop_assert!(t > last[site]);
            prop_assert!(t.is_finite());
            last[site] = t;
            prop_assert!(s.next_times().iter().all(|&x| x >= t));
        }
    }

    #[test]
    fn rate_round_trip(shape in 0.2f64..200.0, rate in 1e-3f64..1e3) {
        let p = params_for_rate(shape, rate).unwrap();
        prop_assert!((scm_core::collision_rate(&p) / rate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_seeds_identical_streams(master in any::<u64>(), stream in any::<u64>()) {
        let cfg = NoiseConfig::from_rate(3, 0.8, 2.0).unwrap();
        let mut a = CollisionSchedule::new(&cfg, StreamSeed::new(master, stream));
        let mut b = CollisionSchedule::new(&cfg, StreamSeed::new(master, stream));
        for _ in 0..20 {
            prop_assert_eq!(a.pop_next(&cfg), b.pop_next(&cfg));
        }
    }
}
