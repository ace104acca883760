//! Independent oracles shared by the integration and acceptance tests.

#![allow(dead_code)]

use skillsphere::motion::{Frame, MotionClip};
use skillsphere::nn::{DenseNet, Matrix};

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `ln Γ(x)` for `x > 0` by the Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `log C_p(κ)` from `1 / C_p(κ) = |S^{p-2}| ∫_{-1}^{1} e^{κt} (1 - t²)^{(p-3)/2} dt`,
/// evaluated with `t = 1 - s` in the log domain by composite Gauss–Legendre
/// over `s ∈ [0, 2]`, panels refined geometrically toward both ends.
pub fn log_normalizer_quadrature(p: usize, kappa: f64) -> f64 {
    let pf = p as f64;
    let log_area_sub = std::f64::consts::LN_2 + (pf - 1.0) / 2.0 * std::f64::consts::PI.ln() - ln_gamma((pf - 1.0) / 2.0);
    let power = (pf - 3.0) / 2.0;
    let nodes = gauss_legendre(30);
    // Panel edges: geometric from 1e-12 toward s = 1 from both ends, since
    // the integrand may peak at s = 0 and has power-law factors at both ends.
    let mut left = vec![0.0];
    let mut e = 1e-12;
    while e < 1.0 {
        left.push(e);
        e *= 1.05;
    }
    let mut edges = left.clone();
    edges.push(1.0);
    edges.extend(left.iter().rev().map(|x| 2.0 - x));
    // Integrand in log form: -κ s + power · ln(s (2 - s)).
    let log_f = |s: f64| -kappa * s + if power == 0.0 { 0.0 } else { power * (s * (2.0 - s)).ln() };
    let mut terms = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for &(x, wt) in &nodes {
            let s = mid + half * x;
            terms.push(log_f(s) + (wt * half).ln());
        }
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_integral = max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
    // e^{κt} = e^{κ} e^{-κs}
    -(log_area_sub + kappa + log_integral)
}

/// `log C_3(κ) = ln κ − ln(4π sinh κ)`, with `sinh` in stable log form.
pub fn log_normalizer_p3(kappa: f64) -> f64 {
    if kappa == 0.0 {
        return -(4.0 * std::f64::consts::PI).ln();
    }
    let log_sinh = kappa + (-(-2.0 * kappa).exp()).ln_1p() - std::f64::consts::LN_2;
    kappa.ln() - (4.0 * std::f64::consts::PI).ln() - log_sinh
}

/// Central difference with step `h`.
pub fn central_difference(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

/// Relative agreement test used throughout: `|a - n| ≤ rel · max(|a|, |n|) + abs`.
pub fn close(a: f64, n: f64, rel: f64, abs: f64) -> bool {
    (a - n).abs() <= rel * a.abs().max(n.abs()) + abs
}

/// Perturbs flat parameter `k` of `net` by `delta`.
pub fn perturbed(net: &DenseNet, k: usize, delta: f64) -> DenseNet {
    let mut probe = net.clone();
    let mut offset = 0;
    for slice in probe.params_mut() {
        if k < offset + slice.len() {
            slice[k - offset] += delta;
            break;
        }
        offset += slice.len();
    }
    probe
}

/// Perturbs entry `(i, j)` of `x`.
pub fn perturbed_input(x: &Matrix, i: usize, j: usize, delta: f64) -> Matrix {
    let mut y = x.clone();
    y.set(i, j, x.get(i, j) + delta);
    y
}

/// Straightforward re-computation of both frame kernels.
pub fn kernels_by_hand(a: &Frame, b: &Frame, alpha_jp: f64, alpha_v: f64) -> (f64, f64) {
    let mut jp = 0.0;
    for j in 0..a.joint_positions.len() {
        for c in 0..3 {
            let d = a.joint_positions[j][c] - b.joint_positions[j][c];
            jp += d * d;
        }
    }
    let mut v = 0.0;
    for c in 0..3 {
        let d = a.root_velocity[c] - b.root_velocity[c];
        v += d * d;
    }
    ((-alpha_jp * jp).exp(), (-alpha_v * v).exp())
}

/// A stationary 40-frame clip whose first and second halves hold two poses
/// three meters apart (with a small per-frame wobble so frames are distinct).
pub fn two_pose_clip() -> MotionClip {
    let frames = (0..40)
        .map(|i| {
            let base = if i < 20 { 0.0 } else { 3.0 };
            let wobble = 0.01 * i as f64;
            Frame::new([0.0, 0.0, 1.0], 0.0, vec![[base + wobble, 0.0, 0.0], [0.0, base, wobble]])
        })
        .collect();
    MotionClip::new("two_pose", 30.0, vec![], frames).unwrap()
}
