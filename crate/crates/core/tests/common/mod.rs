#![allow(dead_code)]

//! Reference implementations used only by the test suites. Nothing here
//! calls into the simulator, the transpiler or the SVM solver.

use nalgebra::DMatrix;
use num_complex::Complex64;
use qsvm_core::Gate;

pub type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(-i theta/2 (cos(phi) X + sin(phi) Y))`.
pub fn rphi(phi: f64, theta: f64) -> [[Complex64; 2]; 2] {
    let (s, co) = (theta / 2.0).sin_cos();
    [
        [c(co, 0.0), c(-s * phi.sin(), -s * phi.cos())],
        [c(s * phi.sin(), -s * phi.cos()), c(co, 0.0)],
    ]
}

/// `exp(-i chi X (x) X)`.
pub fn ms(chi: f64) -> [[Complex64; 4]; 4] {
    let (s, co) = chi.sin_cos();
    let z = c(0.0, 0.0);
    let d = c(co, 0.0);
    let o = c(0.0, -s);
    [[d, z, z, o], [z, d, o, z], [z, o, d, z], [o, z, z, d]]
}

pub fn cx() -> [[Complex64; 4]; 4] {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    [[one, z, z, z], [z, one, z, z], [z, z, z, one], [z, z, one, z]]
}

pub fn hadamard() -> [[Complex64; 2]; 2] {
    let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

fn bit(x: usize, q: usize, n: usize) -> usize {
    (x >> (n - 1 - q)) & 1
}

fn embed1(m: &[[Complex64; 2]; 2], q: usize, n: usize) -> CMat {
    let dim = 1 << n;
    CMat::from_fn(dim, dim, |r, col| {
        if (r ^ col) & !(1 << (n - 1 - q)) != 0 {
            c(0.0, 0.0)
        } else {
            m[bit(r, q, n)][bit(col, q, n)]
        }
    })
}

fn embed2(m: &[[Complex64; 4]; 4], a: usize, b: usize, n: usize) -> CMat {
    let dim = 1 << n;
    let mask = !((1 << (n - 1 - a)) | (1 << (n - 1 - b)));
    CMat::from_fn(dim, dim, |r, col| {
        if (r ^ col) & mask != 0 {
            c(0.0, 0.0)
        } else {
            m[2 * bit(r, a, n) + bit(r, b, n)][2 * bit(col, a, n) + bit(col, b, n)]
        }
    })
}

pub fn gate_unitary(g: &Gate, n: usize) -> CMat {
    use std::f64::consts::FRAC_PI_2;
    match *g {
        Gate::RPhi { qubit, phi, theta } => embed1(&rphi(phi, theta), qubit, n),
        Gate::Rx { qubit, theta } => embed1(&rphi(0.0, theta), qubit, n),
        Gate::Ry { qubit, theta } => embed1(&rphi(FRAC_PI_2, theta), qubit, n),
        Gate::H { qubit } => embed1(&hadamard(), qubit, n),
        Gate::Cx { control, target } => embed2(&cx(), control, target, n),
        Gate::Ms { a, b, chi } => embed2(&ms(chi), a, b, n),
    }
}

/// Full unitary of a gate list, first gate applied first.
pub fn unitary(gates: &[Gate], n: usize) -> CMat {
    gates
        .iter()
        .fold(CMat::identity(1 << n, 1 << n), |acc, g| gate_unitary(g, n) * acc)
}

/// `max |a - e^{i phase} b|` with the phase fixed by the largest entry of `b`.
pub fn phase_distance(a: &CMat, b: &CMat) -> f64 {
    let (mut best, mut idx) = (0.0, (0, 0));
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            if b[(i, j)].norm() > best {
                best = b[(i, j)].norm();
                idx = (i, j);
            }
        }
    }
    if best == 0.0 {
        return a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    let ph = a[idx] / b[idx];
    let ph = ph / ph.norm();
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - ph * y).norm())
        .fold(0.0, f64::max)
}

/// Ising energies over all `2^n` bit strings, `s = 1 - 2 b`, qubit 0 most significant.
pub fn ising_energies(n: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    (0..1usize << n)
        .map(|x| {
            let s = |q: usize| 1.0 - 2.0 * bit(x, q, n) as f64;
            edges.iter().map(|&(j, k, w)| w * s(j) * s(k)).sum()
        })
        .collect()
}

pub fn graph_kernel(n: usize, a: &[(usize, usize, f64)], b: &[(usize, usize, f64)], gamma: f64) -> f64 {
    let gmax = |e: &[(usize, usize, f64)]| e.iter().map(|t| t.2.abs()).fold(0.0, f64::max);
    let (ma, mb) = (gmax(a), gmax(b));
    let (ea, eb) = (ising_energies(n, a), ising_energies(n, b));
    let mut sum = c(0.0, 0.0);
    for (x, y) in ea.iter().zip(&eb) {
        sum += Complex64::from_polar(1.0, -gamma * (x / ma - y / mb));
    }
    (sum / ea.len() as f64).norm_sqr()
}

pub fn ry_kernel(x: &[f64; 4], y: &[f64; 4]) -> f64 {
    let mut k = 1.0;
    for i in 0..4 {
        let d = (x[i] - y[i]) / 2.0;
        k *= d.cos() * d.cos();
    }
    k
}

pub fn amplitude_kernel(x: &[f64; 4], y: &[f64; 4]) -> f64 {
    let nx = x.iter().map(|v| v * v).sum::<f64>();
    let ny = y.iter().map(|v| v * v).sum::<f64>();
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    dot * dot / (nx * ny)
}

pub fn dual_value(q: &[f64], alpha: &[f64]) -> f64 {
    let l = alpha.len();
    let mut quad = 0.0;
    for i in 0..l {
        for j in 0..l {
            quad += alpha[i] * alpha[j] * q[i * l + j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Projection onto `{0 <= a <= c, y.a = 0}` by bisection on the multiplier.
fn project(z: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |nu: f64| -> Vec<f64> {
        z.iter()
            .zip(y)
            .map(|(zi, yi)| (zi - nu * yi).clamp(0.0, c))
            .collect()
    };
    let excess = |nu: f64| -> f64 { at(nu).iter().zip(y).map(|(a, b)| a * b).sum() };
    let span = z.iter().map(|v| v.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient on the SVM dual. Returns the maximizer.
pub fn reference_qp(gram: &[f64], labels: &[i8], c: f64) -> Vec<f64> {
    let l = labels.len();
    let y: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
    let q: Vec<f64> = (0..l * l)
        .map(|t| y[t / l] * y[t % l] * 0.5 * (gram[t] + gram[(t % l) * l + t / l]))
        .collect();
    // Frobenius norm bounds the largest eigenvalue.
    let lip = q.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    let step = 1.0 / lip;
    let mut x = vec![0.0; l];
    let mut v = x.clone();
    let mut t = 1.0_f64;
    let grad_at = |a: &[f64]| -> Vec<f64> {
        (0..l)
            .map(|i| 1.0 - (0..l).map(|j| q[i * l + j] * a[j]).sum::<f64>())
            .collect()
    };
    let value = |a: &[f64]| dual_value(&q, a);
    let mut last = f64::NEG_INFINITY;
    for iter in 0..200_000 {
        let z: Vec<f64> = v.iter().zip(grad_at(&v)).map(|(a, g)| a + step * g).collect();
        let next = project(&z, &y, c);
        if value(&next) < value(&x) {
            if t == 1.0 {
                // even a plain step no longer improves
                break;
            }
            // momentum overshot: restart from a plain step
            t = 1.0;
            v = x.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        v = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        x = next;
        t = t_next;
        if iter % 256 == 0 {
            let now = value(&x);
            if dual_kkt_gap(gram, labels, &x, c) < 1e-10 || now - last < 1e-15 {
                break;
            }
            last = now;
        }
    }
    x
}

/// Labels-folded dual matrix `Q_ij = y_i y_j K_ij`.
pub fn folded(gram: &[f64], labels: &[i8]) -> Vec<f64> {
    let l = labels.len();
    (0..l * l)
        .map(|t| f64::from(labels[t / l]) * f64::from(labels[t % l]) * gram[t])
        .collect()
}

/// Largest violation of the dual optimality conditions: the gap between the
/// best ascent direction that raises and the one that lowers `y.a`.
pub fn dual_kkt_gap(gram: &[f64], labels: &[i8], alpha: &[f64], c: f64) -> f64 {
    let l = labels.len();
    let eps = 1e-8 * c;
    let mut raise = f64::NEG_INFINITY;
    let mut lower = f64::INFINITY;
    for i in 0..l {
        let y = f64::from(labels[i]);
        let f: f64 = (0..l)
            .map(|j| alpha[j] * f64::from(labels[j]) * gram[i * l + j])
            .sum();
        // stationarity: y_i - f_i = b for free points
        let r = y - f;
        let up_ok = if y > 0.0 { alpha[i] < c - eps } else { alpha[i] > eps };
        let down_ok = if y > 0.0 { alpha[i] > eps } else { alpha[i] < c - eps };
        if up_ok {
            raise = raise.max(r);
        }
        if down_ok {
            lower = lower.min(r);
        }
    }
    (raise - lower).max(0.0)
}

/// PSD Gram matrix with unit diagonal from random points under an RBF kernel.
pub fn random_gram(rng: &mut impl rand::Rng, l: usize) -> Vec<f64> {
    let pts: Vec<[f64; 3]> = (0..l)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let width = 0.2 + 2.0 * rng.random::<f64>();
    let mut k = vec![0.0; l * l];
    for i in 0..l {
        for j in 0..l {
            let d2: f64 = (0..3).map(|t| (pts[i][t] - pts[j][t]).powi(2)).sum();
            k[i * l + j] = (-d2 / width).exp();
        }
    }
    k
}

/// Balanced random labels: `ceil(l/2)` positives in random positions.
pub fn random_labels(rng: &mut impl rand::Rng, l: usize) -> Vec<i8> {
    use rand::seq::SliceRandom;
    let mut y: Vec<i8> = (0..l).map(|i| if i < l.div_ceil(2) { 1 } else { -1 }).collect();
    y.shuffle(rng);
    y
}

pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}
