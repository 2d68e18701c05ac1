use proptest::prelude::*;
use rand::Rng;
use scma_ntn::neural::loss::{lbce, lbce_grad, lbce_naive, sigmoid, softplus};
use scma_ntn::neural::{preprocess, Architecture, Batch, InputFrame, ReceiverModel, Standardizer};
use scma_ntn::rng;
use scma_ntn::scma::FactorGraph;
use scma_ntn::Complex;

fn tiny() -> Architecture {
    Architecture {
        resources: 4,
        users: 2,
        bits: 2,
        conv3_layers: 2,
        conv3_filters: 3,
        kernel: 3,
        conv1_layers: 1,
        conv1_filters: 4,
        dense_layers: 2,
        dense_units: 3,
    }
}

fn random_batch(n: usize, arch: &Architecture, seed: u64) -> (Batch, Vec<u8>) {
    let mut r = rng::root(seed);
    let c = arch.input_channels();
    let data = (0..n * arch.resources * c).map(|_| r.random_range(-1.5..1.5)).collect();
    let labels = (0..n * arch.outputs()).map(|_| r.random_range(0..2u8)).collect();
    (Batch::from_vec(n, arch.resources, c, data), labels)
}

fn loss_of(model: &ReceiverModel, x: &Batch, labels: &[u8]) -> f64 {
    let (logits, _) = model.forward(x, true).unwrap();
    lbce(&logits.data, labels)
}

#[test]
fn backward_matches_central_differences() {
    let arch = tiny();
    let mut model = ReceiverModel::new(arch, 5).unwrap();
    // move batch-norm affine parameters off their trivial initial values
    let mut r = rng::root(6);
    for (name, p) in model.param_names().into_iter().zip(model.params_mut()) {
        if name.contains("bn.") || name.ends_with("bias") {
            p.iter_mut().for_each(|x| *x += r.random_range(-0.5..0.5));
        }
    }
    let (x, labels) = random_batch(6, &arch, 7);
    let (_, grads, _) = model.loss_and_gradients(&x, &labels).unwrap();
    let names = model.param_names();
    let step = 1e-5;
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for (t, name) in names.iter().enumerate() {
        let len = model.params()[t].len();
        let picks = (100 / names.len()).max(4).min(len);
        for _ in 0..picks {
            let i = r.random_range(0..len);
            let orig = model.params()[t][i];
            model.params_mut()[t][i] = orig + step;
            let up = loss_of(&model, &x, &labels);
            model.params_mut()[t][i] = orig - step;
            let down = loss_of(&model, &x, &labels);
            model.params_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * step);
            let analytic = grads.0[t][i];
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
            worst = worst.max(rel);
            assert!(rel < 1e-4, "{name}[{i}]: analytic {analytic:e} numeric {numeric:e}");
            checked += 1;
        }
    }
    assert!(checked >= 100, "only {checked} parameters checked");
    eprintln!("worst relative error {worst:e} over {checked} parameters");
}

#[test]
fn zero_input_and_weights_give_zero_conv_weight_gradients() {
    let arch = tiny();
    let mut model = ReceiverModel::new(arch, 1).unwrap();
    for (name, p) in model.param_names().into_iter().zip(model.params_mut()) {
        if name.ends_with("weight") {
            p.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    let x = Batch::zeros(4, arch.resources, arch.input_channels());
    let labels = vec![1u8; 4 * arch.outputs()];
    let (_, grads, _) = model.loss_and_gradients(&x, &labels).unwrap();
    for (name, g) in model.param_names().iter().zip(&grads.0) {
        if name.starts_with("conv") && name.ends_with(".weight") {
            assert!(g.iter().all(|&v| v == 0.0), "{name}");
        }
    }
    // the head bias still sees the loss
    let head_bias = model.param_names().iter().position(|n| n == "chain.0.head.bias").unwrap();
    assert!(grads.0[head_bias].iter().any(|&v| v != 0.0));
}

#[test]
fn logit_gradient_formula() {
    let mut r = rng::root(2);
    let logits: Vec<f64> = (0..12).map(|_| r.random_range(-6.0..6.0)).collect();
    let labels: Vec<u8> = (0..12).map(|_| r.random_range(0..2u8)).collect();
    let g = lbce_grad(&logits, &labels);
    let h = 1e-6;
    for u in 0..12 {
        let mut up = logits.clone();
        up[u] += h;
        let mut down = logits.clone();
        down[u] -= h;
        let numeric = (lbce(&up, &labels) - lbce(&down, &labels)) / (2.0 * h);
        assert!((numeric - g[u]).abs() < 1e-8);
        let expected = (sigmoid(logits[u]) - f64::from(labels[u])) / 12.0;
        assert!((g[u] - expected).abs() < 1e-15);
    }
}

#[test]
fn logits_are_llrs() {
    // sigmoid of a logit is P(b = 1); its log-odds recover the logit
    let mut r = rng::root(3);
    for _ in 0..1000 {
        let l: f64 = r.random_range(-20.0..20.0);
        let p = sigmoid(l);
        assert!(((p / (1.0 - p)).ln() - l).abs() < 1e-6 * l.abs().max(1.0));
        assert!((-p.ln() - softplus(-l)).abs() < 1e-12);
        assert!((-sigmoid(-l).ln() - softplus(l)).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn stable_and_naive_losses_agree(
        logits in prop::collection::vec(-20.0f64..20.0, 1..32),
        seed in any::<u64>(),
    ) {
        let mut r = rng::root(seed);
        let labels: Vec<u8> = logits.iter().map(|_| r.random_range(0..2u8)).collect();
        prop_assert!((lbce(&logits, &labels) - lbce_naive(&logits, &labels)).abs() < 1e-12);
        prop_assert!(lbce(&logits, &labels) >= 0.0);
    }

    #[test]
    fn standardize_is_affine(scale in 0.1f64..10.0, seed in any::<u64>()) {
        let mut r = rng::root(seed);
        let frames: Vec<InputFrame> = (0..20)
            .map(|_| InputFrame { resources: 2, channels: 3, data: (0..6).map(|_| r.random::<f64>()).collect() })
            .collect();
        let s = Standardizer::calibrate(&frames).unwrap();
        let f = &frames[0];
        let scaled = InputFrame { data: f.data.iter().map(|x| scale * x).collect(), ..f.clone() };
        let a = s.apply(f).unwrap();
        let b = s.apply(&scaled).unwrap();
        for ch in 0..6 {
            let expected = (scale - 1.0) * f.data[ch] / s.std[ch % 3];
            prop_assert!((b.data[ch] - a.data[ch] - expected).abs() < 1e-9 * (1.0 + expected.abs()));
        }
    }
}

#[test]
fn standardizing_the_calibration_set_whitens_it() {
    let mut r = rng::root(4);
    let fg = FactorGraph::default_graph();
    let frames: Vec<InputFrame> = (0..500)
        .map(|_| {
            let y: Vec<Complex> = (0..4).map(|_| Complex::new(r.random(), 3.0 * r.random::<f64>())).collect();
            let h: Vec<Complex> = (0..6).map(|_| Complex::new(r.random(), r.random())).collect();
            preprocess(&y, &h, &fg).unwrap()
        })
        .collect();
    let s = Standardizer::calibrate(&frames).unwrap();
    let out: Vec<InputFrame> = frames.iter().map(|f| s.apply(f).unwrap()).collect();
    for ch in 0..14 {
        let vals: Vec<f64> = out.iter().flat_map(|f| (0..4).map(move |k| f.get(k, ch))).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 1e-6);
        assert!((var.sqrt() - 1.0).abs() < 1e-3);
    }
}

#[test]
fn user_columns_are_not_interchangeable() {
    let arch = Architecture::small(4, 6, 2);
    let mut model = ReceiverModel::new(arch, 11).unwrap();
    let (x, _) = random_batch(8, &arch, 12);
    let (_, tape) = model.forward(&x, true).unwrap();
    model.update_running_stats(&tape);
    let mut swapped = x.clone();
    for row in swapped.data.chunks_mut(arch.input_channels()) {
        row.swap(2, 4);
        row.swap(3, 5);
    }
    let (a, _) = model.forward(&x, false).unwrap();
    let (b, _) = model.forward(&swapped, false).unwrap();
    let (a2, _) = model.forward(&x, false).unwrap();
    assert_eq!(a, a2);
    assert_ne!(a, b);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let arch = Architecture::small(4, 6, 2);
    let model = ReceiverModel::new(arch, 3).unwrap();
    let (x, labels) = random_batch(70, &arch, 4);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| model.loss_and_gradients(&x, &labels).map(|(l, g, _)| (l, g)).unwrap())
    };
    let (l1, g1) = run(1);
    let (l4, g4) = run(4);
    assert_eq!(l1.to_bits(), l4.to_bits());
    assert_eq!(g1, g4);
}
