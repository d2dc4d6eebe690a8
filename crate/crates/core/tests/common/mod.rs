#![allow(dead_code)]

use bourgan_core::nn::Mlp;
use ndarray::Array2;
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| rel_err(a, n))
        .fold(0.0, f64::max)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

/// Perturbs every parameter so that no ReLU input sits exactly on its kink.
pub fn jitter(mut net: Mlp, rng: &mut impl Rng) -> Mlp {
    let p: Vec<f64> = net.params_flat().iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
    net.set_params_flat(&p).unwrap();
    net
}

/// Central differences of `loss` with respect to every parameter of `net`.
pub fn numeric_param_grad(net: &Mlp, loss: impl Fn(&Mlp) -> f64) -> Vec<f64> {
    let base = net.params_flat();
    let mut probe = net.clone();
    (0..base.len())
        .map(|k| {
            let mut p = base.clone();
            p[k] = base[k] + FD_STEP;
            probe.set_params_flat(&p).unwrap();
            let up = loss(&probe);
            p[k] = base[k] - FD_STEP;
            probe.set_params_flat(&p).unwrap();
            let down = loss(&probe);
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Central differences of `loss` with respect to every entry of `x`.
pub fn numeric_input_grad(x: &Array2<f64>, loss: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
    let mut out = Array2::zeros(x.raw_dim());
    for idx in ndarray::indices(x.dim()) {
        let mut xp = x.clone();
        xp[idx] += FD_STEP;
        let mut xm = x.clone();
        xm[idx] -= FD_STEP;
        out[idx] = (loss(&xp) - loss(&xm)) / (2.0 * FD_STEP);
    }
    out
}

struct Edge {
    to: usize,
    cap: i64,
    cost: f64,
}

/// Exact 1-D W1 between two uniform empirical measures, solved as a
/// transportation problem with successive shortest paths.
pub fn transport_1d_oracle(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len(), b.len());
    let (source, sink) = (na + nb, na + nb + 1);
    let n = na + nb + 2;
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut add = |u: usize, v: usize, cap: i64, cost: f64, edges: &mut Vec<Edge>| {
        adj[u].push(edges.len());
        edges.push(Edge { to: v, cap, cost });
        adj[v].push(edges.len());
        edges.push(Edge { to: u, cap: 0, cost: -cost });
    };
    for i in 0..na {
        add(source, i, nb as i64, 0.0, &mut edges);
        for j in 0..nb {
            add(i, na + j, i64::MAX / 4, (a[i] - b[j]).abs(), &mut edges);
        }
    }
    for j in 0..nb {
        add(na + j, sink, na as i64, 0.0, &mut edges);
    }

    let mut remaining = (na * nb) as i64;
    let mut total = 0.0;
    while remaining > 0 {
        // Bellman-Ford on the residual graph.
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        dist[source] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u].is_infinite() {
                    continue;
                }
                for &e in &adj[u] {
                    let ed = &edges[e];
                    if ed.cap > 0 && dist[u] + ed.cost < dist[ed.to] - 1e-15 {
                        dist[ed.to] = dist[u] + ed.cost;
                        prev[ed.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        assert!(dist[sink].is_finite(), "transport oracle found no augmenting path");
        let mut push = remaining;
        let mut v = sink;
        while v != source {
            let e = prev[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let e = prev[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            v = edges[e ^ 1].to;
        }
        total += push as f64 * dist[sink];
        remaining -= push;
    }
    total / (na * nb) as f64
}

/// Minimum mean matching cost over all permutations.
pub fn brute_force_matching(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    fn go(a: &[[f64; 2]], b: &[[f64; 2]], row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
        if row == a.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                let c = (a[row][0] - b[j][0]).hypot(a[row][1] - b[j][1]);
                go(a, b, row + 1, used, acc + c, best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(a, b, 0, &mut vec![false; b.len()], 0.0, &mut best);
    best / a.len() as f64
}
