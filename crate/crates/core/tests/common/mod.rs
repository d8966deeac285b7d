//! Independent reference computations shared by the test targets.
#![allow(dead_code)]

use nneq::channel::{Framing, Nonlinearity};
use nneq::nn::{mse_loss, Activation, Layer, Network, Tensor};
use rand::Rng;

pub fn random_input(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = nneq::rng::stream(seed, nneq::rng::Domain::Misc, 7, 7);
    let len = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..len).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap()
}

/// Which ReLU units are active, layer by layer.
pub fn relu_pattern(net: &Network, input: &Tensor) -> Vec<bool> {
    let mut x = input.clone();
    let mut pattern = Vec::new();
    for layer in net.layers() {
        x = layer.forward(&x).unwrap();
        let relu = match layer {
            Layer::Conv(l) => l.activation() == Activation::Relu,
            Layer::Dense(l) => l.activation == Activation::Relu,
        };
        if relu {
            pattern.extend(x.data().iter().map(|&v| v > 0.0));
        }
    }
    pattern
}

pub fn loss(net: &Network, input: &Tensor, target: &[f64]) -> f64 {
    let out = net.forward(input).unwrap();
    mse_loss(out.data(), target).unwrap().0
}

/// Central-difference check of every parameter. Returns (checked, worst relative error).
pub fn gradient_check(mut net: Network, input: &Tensor, seed: u64) -> (usize, f64) {
    let out = net.forward_train(input).unwrap();
    let mut rng = nneq::rng::stream(seed, nneq::rng::Domain::Misc, 9, 9);
    let target: Vec<f64> = (0..out.len()).map(|_| rng.random_range(0.0..1.0)).collect();
    let (_, g) = mse_loss(out.data(), &target).unwrap();
    let grads = net.backward(&Tensor::new(out.shape().to_vec(), g).unwrap()).unwrap();
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.data().to_vec()).collect();

    let eps = 1e-5;
    let base = relu_pattern(&net, input);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (p, a) in analytic.iter().enumerate() {
        #[allow(clippy::needless_range_loop)]
        for i in 0..a.len() {
            let orig = net.params()[p].data()[i];
            net.params_mut()[p].data_mut()[i] = orig + eps;
            let up = loss(&net, input, &target);
            let kink_up = relu_pattern(&net, input) != base;
            net.params_mut()[p].data_mut()[i] = orig - eps;
            let down = loss(&net, input, &target);
            let kink_down = relu_pattern(&net, input) != base;
            net.params_mut()[p].data_mut()[i] = orig;
            if kink_up || kink_down {
                continue;
            }
            let fd = (up - down) / (2.0 * eps);
            let scale = a[i].abs().max(fd.abs());
            let err = if scale < 1e-7 { 0.0 } else { (a[i] - fd).abs() / scale };
            worst = worst.max(err);
            checked += 1;
        }
    }
    (checked, worst)
}

/// Posterior P(s_i = +1 | r) by summing the likelihood over every symbol
/// sequence (and every stream prefix). Exponentially slow, small frames only.
pub fn brute_force_posterior(taps: &[f64], g: Nonlinearity, r: &[f64], sigma: f64, framing: Framing) -> Vec<f64> {
    let l = taps.len();
    let n = match framing {
        Framing::Tail => r.len() + 1 - l,
        _ => r.len(),
    };
    let prefix_len = if framing == Framing::Stream { l - 1 } else { 0 };
    let mut log_w = Vec::new();
    let mut seqs = Vec::new();
    for pattern in 0u32..(1 << (n + prefix_len)) {
        let s: Vec<f64> = (0..n + prefix_len)
            .map(|i| if pattern >> i & 1 == 0 { 1.0 } else { -1.0 })
            .collect();
        let mut ll = 0.0;
        for (j, &rj) in r.iter().enumerate() {
            // Output j depends on frame symbols j, j-1, ..., j-L+1.
            let mut v = 0.0;
            for (k, &h) in taps.iter().enumerate() {
                let idx = j as isize - k as isize;
                let sym = if idx >= 0 && (idx as usize) < n {
                    Some(s[prefix_len + idx as usize])
                } else if idx < 0 && framing == Framing::Stream && (-idx) as usize <= prefix_len {
                    Some(s[(prefix_len as isize + idx) as usize])
                } else {
                    None
                };
                if let Some(sym) = sym {
                    v += h * sym;
                }
            }
            let d = rj - g.eval(v);
            ll -= d * d / (2.0 * sigma * sigma);
        }
        log_w.push(ll);
        seqs.push(s[prefix_len..].to_vec());
    }
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|x| (x - top).exp()).collect();
    let total: f64 = w.iter().sum();
    (0..n)
        .map(|i| {
            seqs.iter()
                .zip(&w)
                .filter(|(s, _)| s[i] > 0.0)
                .map(|(_, w)| w)
                .sum::<f64>()
                / total
        })
        .collect()
}

/// MAP decision for the first symbol of a two-sample stream window
/// `r1 = g(h0 s1 + h1 s0) + n`, `r2 = g(h0 s2 + h1 s1) + n`, summing the
/// likelihood over the unseen neighbours `s0` and `s2`.
pub fn window_map_decision(r1: f64, r2: f64, taps: [f64; 2], g: Nonlinearity, sigma: f64) -> i8 {
    let pdf = |r: f64, mean: f64| (-(r - mean) * (r - mean) / (2.0 * sigma * sigma)).exp();
    let score = |s1: f64| {
        let first: f64 = [1.0, -1.0]
            .iter()
            .map(|s0| pdf(r1, g.eval(taps[0] * s1 + taps[1] * s0)))
            .sum();
        let second: f64 = [1.0, -1.0]
            .iter()
            .map(|s2| pdf(r2, g.eval(taps[0] * s2 + taps[1] * s1)))
            .sum();
        first * second
    };
    if score(1.0) >= score(-1.0) {
        1
    } else {
        -1
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull by the monotone chain, counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Whether some line strictly separates the two point sets. Exact for finite
/// sets: tests every candidate axis of the two convex hulls.
pub fn strictly_separable(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    if a.is_empty() || b.is_empty() {
        return true;
    }
    let ha = convex_hull(a);
    let hb = convex_hull(b);
    let mut axes = Vec::new();
    for h in [&ha, &hb] {
        for i in 0..h.len() {
            let p = h[i];
            let q = h[(i + 1) % h.len()];
            let d = (q.0 - p.0, q.1 - p.1);
            if d == (0.0, 0.0) {
                continue;
            }
            axes.push((-d.1, d.0));
            if h.len() < 3 {
                axes.push(d);
            }
        }
    }
    // two single points
    if let ([p], [q]) = (&ha[..], &hb[..]) {
        axes.push((q.0 - p.0, q.1 - p.1));
    }
    axes.iter().any(|&(x, y)| {
        let proj = |h: &[(f64, f64)]| {
            h.iter()
                .map(|p| p.0 * x + p.1 * y)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let (alo, ahi) = proj(&ha);
        let (blo, bhi) = proj(&hb);
        ahi < blo || bhi < alo
    })
}
