//! Composite Gauss–Legendre rules on (0, π].
//!
//! Every spectral integral in the crate runs on one rule per series length.
//! Integrands are even in ω, so integrals over [−π, π] are folded onto the
//! positive half-line and doubled.

use std::collections::HashMap;
use std::f64::consts::PI;

/// Target number of nodes per Gauss–Legendre panel.
const PANEL_ORDER: usize = 32;
/// Smallest node budget given to a sub-interval between breakpoints.
const MIN_SEGMENT_NODES: usize = 8;
/// Floor of the default node count.
const MIN_DEFAULT_NODES: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    breakpoints: Vec<f64>,
}

/// Default rule for a series of length `n`: `max(512, 4n)` nodes, no breakpoints.
pub fn default_quadrature(n: usize) -> QuadratureRule {
    QuadratureRule::composite(default_node_count(n), &[])
}

pub fn default_node_count(n: usize) -> usize {
    MIN_DEFAULT_NODES.max(4 * n.max(1))
}

impl QuadratureRule {
    /// Composite Gauss–Legendre rule with exactly `total` nodes (when
    /// `total >= 8 * segments`). Breakpoints inside (0, π) become panel
    /// boundaries so that piecewise-continuous weights integrate at full
    /// order.
    pub fn composite(total: usize, breakpoints: &[f64]) -> Self {
        assert!(total >= 1, "quadrature needs at least one node");
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .map(|b| b.abs())
            .filter(|b| *b > 1e-12 && *b < PI - 1e-12)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(0.0);
        edges.extend_from_slice(&cuts);
        edges.push(PI);

        let lengths: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
        let counts = allocate(total, &lengths);

        let mut cache: HashMap<usize, (Vec<f64>, Vec<f64>)> = HashMap::new();
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for (seg, &count) in counts.iter().enumerate() {
            let (lo, hi) = (edges[seg], edges[seg + 1]);
            let panels = count.div_ceil(PANEL_ORDER).max(1);
            let base = count / panels;
            let extra = count % panels;
            let mut left = lo;
            let mut used = 0usize;
            for k in 0..panels {
                let order = base + usize::from(k < extra);
                used += order;
                let right = if k + 1 == panels {
                    hi
                } else {
                    lo + (hi - lo) * used as f64 / count as f64
                };
                let (x, w) = cache.entry(order).or_insert_with(|| gauss_legendre(order));
                let half = 0.5 * (right - left);
                let mid = 0.5 * (right + left);
                for (xi, wi) in x.iter().zip(w.iter()) {
                    nodes.push(mid + half * xi);
                    weights.push(half * wi);
                }
                left = right;
            }
        }

        let (sin, cos) = nodes.iter().map(|w| w.sin_cos()).unzip();
        Self {
            nodes,
            weights,
            cos,
            sin,
            breakpoints: cuts,
        }
    }

    /// Same layout with `factor` times as many nodes; used as a refinement
    /// oracle.
    pub fn refined(&self, factor: usize) -> Self {
        Self::composite(self.len() * factor, &self.breakpoints)
    }

    /// The same rule mapped affinely from (0, π] onto (0, a].
    pub fn scaled_to(&self, a: f64) -> Self {
        assert!(a > 0.0 && a <= PI, "scaled rule needs 0 < a <= pi");
        let r = a / PI;
        let nodes: Vec<f64> = self.nodes.iter().map(|x| x * r).collect();
        let weights = self.weights.iter().map(|w| w * r).collect();
        let (sin, cos) = nodes.iter().map(|w| w.sin_cos()).unzip();
        Self {
            nodes,
            weights,
            cos,
            sin,
            breakpoints: self.breakpoints.iter().map(|b| b * r).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cos_nodes(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_nodes(&self) -> &[f64] {
        &self.sin
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn scheme(&self) -> String {
        format!(
            "composite-gauss-legendre(nodes={}, panel_order={}, breakpoints={})",
            self.len(),
            PANEL_ORDER,
            self.breakpoints.len()
        )
    }

    /// ∫₀^π φ(ω) dω.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// ∫₀^π of values already tabulated at the nodes.
    pub fn sum_half(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// ∫_{−π}^{π} of an even function tabulated at the nodes.
    pub fn sum_full(&self, values: &[f64]) -> f64 {
        2.0 * self.sum_half(values)
    }
}

/// Splits `total` nodes across segments proportionally to length.
fn allocate(total: usize, lengths: &[f64]) -> Vec<usize> {
    let span: f64 = lengths.iter().sum();
    let quotas: Vec<f64> = lengths.iter().map(|l| total as f64 * l / span).collect();
    let floor = MIN_SEGMENT_NODES.min(total / lengths.len()).max(1);
    let mut counts: Vec<usize> = quotas
        .iter()
        .map(|q| (q.floor() as usize).max(floor))
        .collect();
    let mut sum: usize = counts.iter().sum();
    while sum < total {
        let i = argmax(counts.len(), |i| quotas[i] - counts[i] as f64);
        counts[i] += 1;
        sum += 1;
    }
    while sum > total {
        let Some(i) = (0..counts.len())
            .filter(|&i| counts[i] > floor)
            .max_by(|&a, &b| {
                (counts[a] as f64 - quotas[a]).total_cmp(&(counts[b] as f64 - quotas[b]))
            })
        else {
            break;
        };
        counts[i] -= 1;
        sum -= 1;
    }
    counts
}

fn argmax(len: usize, key: impl Fn(usize) -> f64) -> usize {
    (0..len)
        .max_by(|&a, &b| key(a).total_cmp(&key(b)).then(b.cmp(&a)))
        .expect("non-empty")
}

/// Nodes and weights of the `m`-point Gauss–Legendre rule on [−1, 1],
/// ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_m.
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        dp = if d.is_finite() { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
