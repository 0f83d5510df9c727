//! Minimal dense-network machinery: forward pass with cached
//! activations, reverse-mode gradients for arbitrary head cotangents,
//! and a forward-mode tangent pass (used for Fisher-vector products).
//!
//! Networks are a tanh trunk with any number of linear heads; parameters
//! flatten into a single `Vec<f64>` in construction order.

use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Row-major `out_dim x in_dim`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Dense {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self { w: vec![0.0; in_dim * out_dim], b: vec![0.0; out_dim], in_dim, out_dim }
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.w[i * self.in_dim..(i + 1) * self.in_dim];
            *o = self.b[i] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// Scaled orthogonal initialization: rows (or columns, whichever is the
/// smaller set) are orthonormalized by modified Gram-Schmidt.
pub fn orthogonal(out_dim: usize, in_dim: usize, gain: f64, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let (rows, cols, transpose) =
        if out_dim <= in_dim { (out_dim, in_dim, false) } else { (in_dim, out_dim, true) };
    let mut m: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    for i in 0..rows {
        for j in 0..i {
            let dot: f64 = m[i].iter().zip(&m[j]).map(|(a, b)| a * b).sum();
            for k in 0..cols {
                m[i][k] -= dot * m[j][k];
            }
        }
        let norm: f64 = m[i].iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        for v in m[i].iter_mut() {
            *v = *v / norm * gain;
        }
    }
    let mut w = vec![0.0; out_dim * in_dim];
    for o in 0..out_dim {
        for i in 0..in_dim {
            w[o * in_dim + i] = if transpose { m[i][o] } else { m[o][i] };
        }
    }
    w
}

/// Tanh trunk plus linear heads.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub trunk: Vec<Dense>,
    pub heads: Vec<Dense>,
}

/// Cached activations from a forward pass: `acts[0]` is the input,
/// `acts[k]` the post-tanh output of trunk layer `k`.
#[derive(Debug, Clone)]
pub struct Cache {
    pub acts: Vec<Vec<f64>>,
    pub head_out: Vec<Vec<f64>>,
}

impl Mlp {
    /// New network with zero parameters.
    pub fn zeros(in_dim: usize, hidden: &[usize], head_dims: &[usize]) -> Self {
        let mut trunk = Vec::new();
        let mut d = in_dim;
        for &h in hidden {
            trunk.push(Dense::zeros(d, h));
            d = h;
        }
        let heads = head_dims.iter().map(|&hd| Dense::zeros(d, hd)).collect();
        Self { trunk, heads }
    }

    pub fn in_dim(&self) -> usize {
        self.trunk.first().map_or(self.heads[0].in_dim, |l| l.in_dim)
    }

    pub fn param_count(&self) -> usize {
        self.trunk.iter().chain(&self.heads).map(Dense::param_count).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in self.trunk.iter().chain(&self.heads) {
            out.extend_from_slice(&layer.w);
            out.extend_from_slice(&layer.b);
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut off = 0;
        for layer in self.trunk.iter_mut().chain(self.heads.iter_mut()) {
            let nw = layer.w.len();
            layer.w.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = layer.b.len();
            layer.b.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
    }

    pub fn forward(&self, x: &[f64]) -> Cache {
        let mut acts = Vec::with_capacity(self.trunk.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.trunk {
            let mut z = vec![0.0; layer.out_dim];
            layer.forward(acts.last().unwrap(), &mut z);
            for v in z.iter_mut() {
                *v = v.tanh();
            }
            acts.push(z);
        }
        let last = acts.last().unwrap();
        let head_out = self
            .heads
            .iter()
            .map(|h| {
                let mut o = vec![0.0; h.out_dim];
                h.forward(last, &mut o);
                o
            })
            .collect();
        Cache { acts, head_out }
    }

    /// Accumulate parameter gradients (flat layout) for the given head
    /// cotangents.
    pub fn backward(&self, cache: &Cache, head_cots: &[Vec<f64>], grad: &mut [f64]) {
        assert_eq!(grad.len(), self.param_count());
        let last = cache.acts.last().unwrap();
        let mut d_last = vec![0.0; last.len()];

        // Heads sit at the tail of the flat layout.
        let trunk_params: usize = self.trunk.iter().map(Dense::param_count).sum();
        let mut off = trunk_params;
        for (h, cot) in self.heads.iter().zip(head_cots) {
            for (i, &c) in cot.iter().enumerate() {
                let row = i * h.in_dim;
                for (k, &a) in last.iter().enumerate() {
                    grad[off + row + k] += c * a;
                    d_last[k] += c * h.w[row + k];
                }
                grad[off + h.w.len() + i] += c;
            }
            off += h.param_count();
        }

        // Walk the trunk backwards.
        let mut d_out = d_last;
        let mut layer_off: Vec<usize> = Vec::with_capacity(self.trunk.len());
        let mut acc = 0;
        for layer in &self.trunk {
            layer_off.push(acc);
            acc += layer.param_count();
        }
        for (idx, layer) in self.trunk.iter().enumerate().rev() {
            let a_out = &cache.acts[idx + 1];
            let a_in = &cache.acts[idx];
            let off = layer_off[idx];
            let mut d_in = vec![0.0; layer.in_dim];
            for i in 0..layer.out_dim {
                let dz = d_out[i] * (1.0 - a_out[i] * a_out[i]);
                let row = i * layer.in_dim;
                for k in 0..layer.in_dim {
                    grad[off + row + k] += dz * a_in[k];
                    d_in[k] += dz * layer.w[row + k];
                }
                grad[off + layer.w.len() + i] += dz;
            }
            d_out = d_in;
        }
    }

    /// Forward-mode directional derivative of the head outputs along the
    /// flat parameter tangent `v`.
    pub fn jvp(&self, x: &[f64], v: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(v.len(), self.param_count());
        let mut a = x.to_vec();
        let mut da = vec![0.0; x.len()];
        let mut off = 0;
        for layer in &self.trunk {
            let mut z = vec![0.0; layer.out_dim];
            let mut dz = vec![0.0; layer.out_dim];
            for i in 0..layer.out_dim {
                let row = i * layer.in_dim;
                let mut zi = layer.b[i] + v[off + layer.w.len() + i] * 0.0;
                let mut dzi = v[off + layer.w.len() + i];
                for k in 0..layer.in_dim {
                    zi += layer.w[row + k] * a[k];
                    dzi += v[off + row + k] * a[k] + layer.w[row + k] * da[k];
                }
                z[i] = zi.tanh();
                dz[i] = dzi * (1.0 - z[i] * z[i]);
            }
            a = z;
            da = dz;
            off += layer.param_count();
        }
        let mut out = Vec::with_capacity(self.heads.len());
        for h in &self.heads {
            let mut dh = vec![0.0; h.out_dim];
            for i in 0..h.out_dim {
                let row = i * h.in_dim;
                let mut d = v[off + h.w.len() + i];
                for k in 0..h.in_dim {
                    d += v[off + row + k] * a[k] + h.w[row + k] * da[k];
                }
                dh[i] = d;
            }
            out.push(dh);
            off += h.param_count();
        }
        out
    }

    /// Orthogonal-style initialization from the given stream: unit gain
    /// on the trunk, per-head gains as supplied, zero biases except for
    /// per-head bias offsets.
    pub fn init(
        in_dim: usize,
        hidden: &[usize],
        heads: &[(usize, f64, f64)], // (dim, weight gain, bias)
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let mut net = Mlp::zeros(in_dim, hidden, &heads.iter().map(|h| h.0).collect::<Vec<_>>());
        for layer in net.trunk.iter_mut() {
            layer.w = orthogonal(layer.out_dim, layer.in_dim, 1.0, rng);
        }
        for (head, &(_, gain, bias)) in net.heads.iter_mut().zip(heads) {
            head.w = orthogonal(head.out_dim, head.in_dim, gain, rng);
            for b in head.b.iter_mut() {
                *b = bias;
            }
        }
        net
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn flat_params_round_trip() {
        let mut net = Mlp::init(3, &[5, 4], &[(2, 0.01, 0.0), (2, 0.01, -1.0)], &mut rng(0));
        let flat = net.flat_params();
        assert_eq!(flat.len(), net.param_count());
        let copy = flat.clone();
        net.set_flat_params(&copy);
        assert_eq!(net.flat_params(), flat);
    }

    #[test]
    fn orthogonal_rows_are_orthonormal() {
        let w = orthogonal(4, 16, 1.0, &mut rng(1));
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..16).map(|k| w[i * 16 + k] * w[j * 16 + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "({i},{j}) dot {dot}");
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let net = Mlp::init(3, &[4, 4], &[(2, 0.5, 0.1)], &mut rng(2));
        let x = [0.3, -0.7, 0.2];
        let cot = vec![vec![0.8, -0.4]];
        let mut grad = vec![0.0; net.param_count()];
        let cache = net.forward(&x);
        net.backward(&cache, &cot, &mut grad);

        let scalar = |n: &Mlp| -> f64 {
            let c = n.forward(&x);
            c.head_out[0][0] * 0.8 - c.head_out[0][1] * 0.4
        };
        let mut net2 = net.clone();
        let base = net2.flat_params();
        let h = 1e-6;
        for p in (0..net.param_count()).step_by(7) {
            let mut theta = base.clone();
            theta[p] += h;
            net2.set_flat_params(&theta);
            let up = scalar(&net2);
            theta[p] -= 2.0 * h;
            net2.set_flat_params(&theta);
            let dn = scalar(&net2);
            let fd = (up - dn) / (2.0 * h);
            assert!((fd - grad[p]).abs() < 1e-6, "param {p}: fd {fd} vs bp {}", grad[p]);
        }
    }

    #[test]
    fn jvp_matches_finite_differences() {
        let net = Mlp::init(3, &[4, 4], &[(2, 0.5, 0.0)], &mut rng(3));
        let x = [0.5, 0.1, -0.9];
        let mut r = rng(4);
        let v: Vec<f64> =
            (0..net.param_count()).map(|_| StandardNormal.sample(&mut r)).collect();
        let jv = net.jvp(&x, &v);

        let mut net2 = net.clone();
        let base = net2.flat_params();
        let h = 1e-7;
        let shifted = |net2: &mut Mlp, sign: f64| -> Vec<f64> {
            let theta: Vec<f64> =
                base.iter().zip(&v).map(|(t, vi)| t + sign * h * vi).collect();
            net2.set_flat_params(&theta);
            net2.forward(&x).head_out[0].clone()
        };
        let up = shifted(&mut net2, 1.0);
        let dn = shifted(&mut net2, -1.0);
        for i in 0..2 {
            let fd = (up[i] - dn[i]) / (2.0 * h);
            assert!((fd - jv[0][i]).abs() < 1e-5, "fd {fd} vs jvp {}", jv[0][i]);
        }
    }
}
