//! Reference implementations used as test oracles. Nothing here calls into
//! the library's likelihood or statistic code.
#![allow(dead_code)]

use hawkesnet::markmodel::{log_prob_mark, ActivityMode, EdgeScope, MarkModelSpec, MarkVariant};
use hawkesnet::{DynamicNetwork, Edge, EventRecord, Mark, NodeAux, NodeId};

/// Adaptive Simpson quadrature.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

/// Ground intensity by direct summation over strictly earlier events.
pub fn naive_intensity(t: f64, times: &[f64], mu: f64, k: f64, beta: f64) -> f64 {
    mu + k * times.iter().filter(|&&s| s < t).map(|&s| (-beta * (t - s)).exp()).sum::<f64>()
}

/// Integral of the ground intensity over `[0, horizon]`, piecewise between events.
pub fn quad_compensator(times: &[f64], horizon: f64, mu: f64, k: f64, beta: f64) -> f64 {
    let mut knots = vec![0.0];
    knots.extend(times.iter().copied().filter(|&t| t > 0.0 && t < horizon));
    knots.push(horizon);
    let f = |t: f64| naive_intensity(t, times, mu, k, beta);
    knots.windows(2).map(|w| simpson(&f, w[0], w[1], 1e-12)).sum()
}

/// Dense undirected graph for brute-force counting.
#[derive(Clone)]
pub struct Graph {
    pub adj: Vec<Vec<bool>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph { adj: vec![vec![false; n]; n] }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn add_node(&mut self) {
        let n = self.n() + 1;
        for row in &mut self.adj {
            row.push(false);
        }
        self.adj.push(vec![false; n]);
    }

    pub fn add(&mut self, a: usize, b: usize) {
        self.adj[a][b] = true;
        self.adj[b][a] = true;
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].iter().filter(|&&x| x).count()
    }

    pub fn edges(&self) -> usize {
        (0..self.n()).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    pub fn triangles(&self) -> usize {
        let n = self.n();
        let mut c = 0;
        for a in 0..n {
            for b in a + 1..n {
                for d in b + 1..n {
                    if self.adj[a][b] && self.adj[b][d] && self.adj[a][d] {
                        c += 1;
                    }
                }
            }
        }
        c
    }

    pub fn stars(&self, k: usize) -> usize {
        let choose = |n: usize, k: usize| -> usize {
            if k > n {
                0
            } else {
                (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
            }
        };
        (0..self.n()).map(|i| choose(self.degree(i), k)).sum()
    }

    /// `(edges, triangles, 2-stars, 3-stars)`.
    pub fn stats(&self) -> [f64; 4] {
        [self.edges() as f64, self.triangles() as f64, self.stars(2) as f64, self.stars(3) as f64]
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Log-likelihood of a change-statistic model with statistics
/// `edges, triangles, 2-star, 3-star`, recomputed event by event from a dense
/// graph: quadrature compensator, O(n^2) intensity, full-recount change
/// statistics.
pub fn naive_cs_loglik(events: &[EventRecord], horizon: f64, mu: f64, k: f64, beta: f64, mark: &MarkModelSpec) -> f64 {
    assert_eq!(mark.variant, MarkVariant::Cs);
    assert_eq!(mark.stats, ["edges", "triangles", "2-star", "3-star"]);
    let times: Vec<f64> = events.iter().map(|e| e.time).collect();
    let mut ll = -quad_compensator(&times, horizon, mu, k, beta);
    let mut g = Graph::new(0);
    let mut birth: Vec<f64> = Vec::new();
    let mut last_edge: Vec<Option<f64>> = Vec::new();
    for ev in events {
        let t = ev.time;
        ll += naive_intensity(t, &times, mu, k, beta).ln();
        let n_new = ev.mark.new_nodes.len();
        let lambda = mark.lambda_nodes;
        ll += n_new as f64 * lambda.ln() - lambda - ln_factorial(n_new);
        let n_old = g.n();
        for _ in 0..n_new {
            g.add_node();
            birth.push(t);
            last_edge.push(None);
        }
        let activity = |i: usize| -> f64 {
            if i >= n_old {
                return t;
            }
            match mark.activity {
                ActivityMode::Arrival => birth[i],
                ActivityMode::LastEdge => last_edge[i].unwrap_or(birth[i]),
            }
        };
        let chosen: Vec<(usize, usize)> = ev.mark.new_edges.iter().map(|e| (e.lo().index(), e.hi().index())).collect();
        let base = g.stats();
        for b in 0..g.n() {
            for a in 0..b {
                if g.adj[a][b] {
                    continue;
                }
                if mark.edge_scope == EdgeScope::NewNode && b < n_old {
                    continue;
                }
                let mut g2 = g.clone();
                g2.add(a, b);
                let after = g2.stats();
                let eta: f64 = (0..4).map(|j| mark.theta[j] * (after[j] - base[j])).sum();
                let age = t - activity(a).min(activity(b));
                let p = ((mark.nu + (-mark.tau * age).exp()) * sigmoid(eta)).min(1.0 - 1e-12);
                ll += if chosen.contains(&(a, b)) { p.ln() } else { (1.0 - p).ln() };
            }
        }
        for &(a, b) in &chosen {
            g.add(a, b);
            last_edge[a] = Some(t);
            last_edge[b] = Some(t);
        }
    }
    ll
}

/// Every mark with `k <= k_max` new nodes at time `t`, its candidate edges
/// enumerated independently of the library.
pub fn all_marks(spec: &MarkModelSpec, net: &DynamicNetwork, k_max: usize) -> Vec<Mark> {
    let n = net.node_count() as u32;
    let ks: Vec<usize> = if spec.variant == MarkVariant::Ba { vec![1] } else { (0..=k_max).collect() };
    let mut out = Vec::new();
    for k in ks {
        let total = n + k as u32;
        let mut cands = Vec::new();
        for b in 0..total {
            for a in 0..b {
                let old_pair = b < n;
                let allowed = match (spec.variant, spec.edge_scope) {
                    (MarkVariant::Ba, _) => !old_pair && a < n,
                    (_, EdgeScope::NewNode) => !old_pair,
                    (_, EdgeScope::AllPairs) => !(old_pair && net.has_edge(NodeId(a), NodeId(b))),
                };
                if allowed {
                    cands.push(Edge::between(a, b));
                }
            }
        }
        assert!(cands.len() <= 16, "too many candidates to enumerate: {}", cands.len());
        let nodes: Vec<NodeId> = (n..total).map(NodeId).collect();
        for mask in 0u32..(1 << cands.len()) {
            let edges = cands.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e).collect();
            out.push(Mark::new(nodes.clone(), edges));
        }
    }
    out
}

/// `sum exp(log q(m))` over [`all_marks`].
pub fn total_mark_mass(spec: &MarkModelSpec, net: &DynamicNetwork, aux: &NodeAux, t: f64, k_max: usize) -> f64 {
    all_marks(spec, net, k_max)
        .iter()
        .map(|m| log_prob_mark(spec, net, aux, t, m).expect("valid mark").log_prob.exp())
        .sum()
}

/// Smallest `k` with `P(Poisson(lambda) > k) < eps`.
pub fn poisson_truncation(lambda: f64, eps: f64) -> usize {
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    let mut k = 0;
    while 1.0 - cdf >= eps {
        k += 1;
        pmf *= lambda / k as f64;
        cdf += pmf;
    }
    k
}
