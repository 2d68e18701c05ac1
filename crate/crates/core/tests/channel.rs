use proptest::prelude::*;
use rand::Rng;
use scma_ntn::channel::{superimpose, ChannelMode, ChannelRealization, NoiseConfig};
use scma_ntn::rng;
use scma_ntn::scma::{extract_slots, map_to_grid, ResourceGrid};
use scma_ntn::Complex;

fn random_grid(r: &mut impl Rng, subcarriers: usize, symbols: usize) -> ResourceGrid {
    let mut g = ResourceGrid::zeros(subcarriers, symbols);
    g.as_mut_slice()
        .iter_mut()
        .for_each(|x| *x = Complex::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
    g
}

fn random_channel(r: &mut impl Rng, users: usize, symbols: usize) -> ChannelRealization {
    let rows = (0..users)
        .map(|_| (0..symbols).map(|_| Complex::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect())
        .collect();
    ChannelRealization::from_rows(rows, ChannelMode::Normalized, 0).unwrap()
}

#[test]
fn single_user_without_noise_is_elementwise_product() {
    let mut r = rng::root(1);
    let x = random_grid(&mut r, 8, 5);
    let h = random_channel(&mut r, 1, 5);
    let y = superimpose(std::slice::from_ref(&x), &h, NoiseConfig::new(0.0).unwrap(), &mut r).unwrap();
    for t in 0..5 {
        for k in 0..8 {
            assert_eq!(y.get(k, t), h.get(0, t) * x.get(k, t));
        }
    }
}

#[test]
fn zero_channel_leaves_noise_of_the_configured_variance() {
    let mut r = rng::root(2);
    let (sc, sym) = (100, 1000);
    let grids = vec![random_grid(&mut r, sc, sym), random_grid(&mut r, sc, sym)];
    let h = ChannelRealization::from_rows(vec![vec![Complex::new(0.0, 0.0); sym]; 2], ChannelMode::Normalized, 0).unwrap();
    let y = superimpose(&grids, &h, NoiseConfig::new(0.7).unwrap(), &mut r).unwrap();
    let n = y.as_slice().len() as f64;
    let var = y.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
    assert!((var / 0.7 - 1.0).abs() < 0.05, "{var}");
    // both quadratures carry half the power
    let re = y.as_slice().iter().map(|z| z.re * z.re).sum::<f64>() / n;
    assert!((re / 0.35 - 1.0).abs() < 0.05);
}

#[test]
fn disjoint_supports_do_not_mix() {
    let mut r = rng::root(3);
    let mut a = ResourceGrid::zeros(4, 3);
    let mut b = ResourceGrid::zeros(4, 3);
    for t in 0..3 {
        *a.get_mut(0, t) = Complex::new(1.0, 0.5);
        *a.get_mut(1, t) = Complex::new(-0.2, 0.1);
        *b.get_mut(2, t) = Complex::new(0.3, -0.9);
        *b.get_mut(3, t) = Complex::new(0.0, 1.0);
    }
    let h = random_channel(&mut r, 2, 3);
    let y = superimpose(&[a.clone(), b.clone()], &h, NoiseConfig::new(0.0).unwrap(), &mut r).unwrap();
    for t in 0..3 {
        for k in 0..2 {
            assert_eq!(y.get(k, t), h.get(0, t) * a.get(k, t));
            assert_eq!(y.get(k + 2, t), h.get(1, t) * b.get(k + 2, t));
        }
    }
}

#[test]
fn noiseless_superposition_is_deterministic() {
    let mut r = rng::root(4);
    let grids = vec![random_grid(&mut r, 12, 4), random_grid(&mut r, 12, 4)];
    let h = random_channel(&mut r, 2, 4);
    let a = superimpose(&grids, &h, NoiseConfig::new(0.0).unwrap(), &mut rng::root(5)).unwrap();
    let b = superimpose(&grids, &h, NoiseConfig::new(0.0).unwrap(), &mut rng::root(6)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn negative_noise_rejected() {
    assert!(NoiseConfig::new(-1e-3).is_err());
    assert!(NoiseConfig::new(f64::NAN).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn superposition_is_linear_in_each_grid(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut r = rng::root(seed);
        let grids = vec![random_grid(&mut r, 8, 3), random_grid(&mut r, 8, 3), random_grid(&mut r, 8, 3)];
        let h = random_channel(&mut r, 3, 3);
        let scale = Complex::new(a, b);
        let mut scaled = grids.clone();
        scaled[1].as_mut_slice().iter_mut().for_each(|x| *x *= scale);
        let quiet = NoiseConfig::new(0.0).unwrap();
        let y = superimpose(&grids, &h, quiet, &mut r).unwrap();
        let ys = superimpose(&scaled, &h, quiet, &mut r).unwrap();
        for t in 0..3 {
            for k in 0..8 {
                let expected = y.get(k, t) + (scale - 1.0) * h.get(1, t) * grids[1].get(k, t);
                prop_assert!((ys.get(k, t) - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_mapping_round_trips(seed in any::<u64>(), width in 1usize..6, symbols in 1usize..5) {
        let mut r = rng::root(seed);
        let codewords: Vec<Vec<Complex>> = (0..12 * symbols)
            .map(|_| (0..width).map(|_| Complex::new(r.random(), r.random())).collect())
            .collect();
        let refs: Vec<&[Complex]> = codewords.iter().map(Vec::as_slice).collect();
        let grid = map_to_grid(&refs, width, symbols).unwrap();
        prop_assert_eq!(grid.shape(), (12 * width, symbols));
        prop_assert_eq!(extract_slots(&grid, width), codewords);
    }
}
