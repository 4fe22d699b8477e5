//! Gated recurrent encoder (standard 4-gate cell), forward and
//! reverse-mode backward passes, with per-position caches for BPTT.

use super::math::{matvec_acc, matvec_t_acc, outer_acc, sigmoid};
use super::params::{Layout, LstmLayout, ModelParams, ModelVariant};
use crate::{Error, Result};

/// Per-position activations of one direction. Rows are indexed by
/// sentence position regardless of scan direction.
pub struct LstmCache {
    /// n × 4h post-activation gates in block order i, f, g, o.
    pub gates: Vec<f64>,
    /// n × h cell states.
    pub c: Vec<f64>,
    /// n × h hidden states.
    pub h: Vec<f64>,
}

/// Run one direction over `xs` (n × e). `reverse` scans right-to-left;
/// initial states are zero.
pub fn lstm_forward(
    params: &ModelParams,
    l: &LstmLayout,
    xs: &[f64],
    n: usize,
    reverse: bool,
) -> LstmCache {
    let h = params.layout.dims.hidden;
    let e = params.layout.dims.embed;
    let wx = params.mat(&l.wx);
    let wh = params.mat(&l.wh);
    let b = params.mat(&l.b);

    let mut cache = LstmCache {
        gates: vec![0.0; n * 4 * h],
        c: vec![0.0; n * h],
        h: vec![0.0; n * h],
    };
    let zeros = vec![0.0; h];
    let mut prev: Option<usize> = None;
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..n).rev())
    } else {
        Box::new(0..n)
    };
    for pos in order {
        let (h_prev, c_prev): (&[f64], &[f64]) = match prev {
            Some(p) => (&cache.h[p * h..(p + 1) * h], &cache.c[p * h..(p + 1) * h]),
            None => (&zeros, &zeros),
        };
        let mut z = b.to_vec();
        matvec_acc(wx, 4 * h, e, &xs[pos * e..(pos + 1) * e], &mut z);
        matvec_acc(wh, 4 * h, h, h_prev, &mut z);
        let mut c_new = vec![0.0; h];
        let mut h_new = vec![0.0; h];
        for k in 0..h {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[h + k]);
            let g = z[2 * h + k].tanh();
            let o = sigmoid(z[3 * h + k]);
            z[k] = i;
            z[h + k] = f;
            z[2 * h + k] = g;
            z[3 * h + k] = o;
            c_new[k] = f * c_prev[k] + i * g;
            h_new[k] = o * c_new[k].tanh();
        }
        cache.gates[pos * 4 * h..(pos + 1) * 4 * h].copy_from_slice(&z);
        cache.c[pos * h..(pos + 1) * h].copy_from_slice(&c_new);
        cache.h[pos * h..(pos + 1) * h].copy_from_slice(&h_new);
        prev = Some(pos);
    }
    cache
}

/// Backpropagate through one direction. `dh_out` (n × h) holds the
/// loss gradient with respect to each position's hidden state. Weight
/// gradients go into `grad_tail`, the dense slice covering parameters
/// from `tail_base` (the end of the embedding tables) onward; input
/// gradients accumulate into `dx` (n × e).
#[allow(clippy::too_many_arguments)]
pub fn lstm_backward(
    params: &ModelParams,
    l: &LstmLayout,
    xs: &[f64],
    n: usize,
    cache: &LstmCache,
    dh_out: &[f64],
    reverse: bool,
    grad_tail: &mut [f64],
    tail_base: usize,
    dx: &mut [f64],
) {
    let h = params.layout.dims.hidden;
    let e = params.layout.dims.embed;
    let wx = params.mat(&l.wx);
    let wh = params.mat(&l.wh);

    let zeros = vec![0.0; h];
    let mut dh_carry = vec![0.0; h];
    let mut dc_carry = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];

    // Positions in reverse scan order: the last-scanned position first.
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new(0..n)
    } else {
        Box::new((0..n).rev())
    };
    for pos in order {
        // The previous position in scan order (whose state fed this step).
        let prev_pos = if reverse {
            if pos + 1 < n { Some(pos + 1) } else { None }
        } else {
            pos.checked_sub(1)
        };
        let (h_prev, c_prev): (&[f64], &[f64]) = match prev_pos {
            Some(p) => (&cache.h[p * h..(p + 1) * h], &cache.c[p * h..(p + 1) * h]),
            None => (&zeros, &zeros),
        };
        let gates = &cache.gates[pos * 4 * h..(pos + 1) * 4 * h];
        let c = &cache.c[pos * h..(pos + 1) * h];

        for k in 0..h {
            let i = gates[k];
            let f = gates[h + k];
            let g = gates[2 * h + k];
            let o = gates[3 * h + k];
            let tc = c[k].tanh();
            let dh = dh_out[pos * h + k] + dh_carry[k];
            let d_o = dh * tc;
            let dc = dc_carry[k] + dh * o * (1.0 - tc * tc);
            let d_i = dc * g;
            let d_f = dc * c_prev[k];
            let d_g = dc * i;
            dz[k] = d_i * i * (1.0 - i);
            dz[h + k] = d_f * f * (1.0 - f);
            dz[2 * h + k] = d_g * (1.0 - g * g);
            dz[3 * h + k] = d_o * o * (1.0 - o);
            dc_carry[k] = dc * f;
        }

        let wx_r = l.wx.offset - tail_base..l.wx.offset - tail_base + l.wx.len();
        let wh_r = l.wh.offset - tail_base..l.wh.offset - tail_base + l.wh.len();
        let b_r = l.b.offset - tail_base..l.b.offset - tail_base + l.b.len();
        outer_acc(
            &mut grad_tail[wx_r],
            4 * h,
            e,
            &dz,
            &xs[pos * e..(pos + 1) * e],
        );
        outer_acc(&mut grad_tail[wh_r], 4 * h, h, &dz, h_prev);
        for (gb, d) in grad_tail[b_r].iter_mut().zip(&dz) {
            *gb += d;
        }
        matvec_t_acc(wx, 4 * h, e, &dz, &mut dx[pos * e..(pos + 1) * e]);
        dh_carry.iter_mut().for_each(|v| *v = 0.0);
        matvec_t_acc(wh, 4 * h, h, &dz, &mut dh_carry);
    }
}

/// Per-position encoder states: forward ⧺ backward halves for the
/// bidirectional variant, a single direction or the raw embeddings
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Hidden {
    pub n: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Hidden {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

pub(crate) fn concat_hidden(
    layout: &Layout,
    xs: &[f64],
    n: usize,
    fwd: Option<&LstmCache>,
    bwd: Option<&LstmCache>,
) -> Hidden {
    let h = layout.dims.hidden;
    let dim = layout.enc_dim;
    let mut data = vec![0.0; n * dim];
    match layout.variant {
        ModelVariant::Bidirectional => {
            let f = fwd.expect("forward cache");
            let b = bwd.expect("backward cache");
            for i in 0..n {
                data[i * dim..i * dim + h].copy_from_slice(&f.h[i * h..(i + 1) * h]);
                data[i * dim + h..(i + 1) * dim].copy_from_slice(&b.h[i * h..(i + 1) * h]);
            }
        }
        ModelVariant::Unidirectional => {
            let f = fwd.expect("forward cache");
            data.copy_from_slice(&f.h[..n * h]);
        }
        ModelVariant::WordOnly => {
            data.copy_from_slice(&xs[..n * layout.dims.embed]);
        }
    }
    Hidden { n, dim, data }
}

/// Encode a sequence of already-embedded vectors (n × embed).
pub fn encode_vectors(params: &ModelParams, xs: &[f64], n: usize) -> Result<Hidden> {
    if n == 0 {
        return Err(Error::InvalidInput("encode on an empty sequence".into()));
    }
    debug_assert_eq!(xs.len(), n * params.layout.dims.embed);
    let fwd = params
        .layout
        .fwd
        .as_ref()
        .map(|l| lstm_forward(params, l, xs, n, false));
    let bwd = params
        .layout
        .bwd
        .as_ref()
        .map(|l| lstm_forward(params, l, xs, n, true));
    Ok(concat_hidden(
        &params.layout,
        xs,
        n,
        fwd.as_ref(),
        bwd.as_ref(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::params::{ModelDims, VocabSizes};

    fn toy_params(variant: ModelVariant, seed: u64) -> ModelParams {
        let dims = ModelDims {
            embed: 5,
            hidden: 4,
            head_hidden: 3,
        };
        let sizes = VocabSizes {
            tokens: 6,
            lemmas: 6,
            ngrams: 12,
        };
        ModelParams::init(Layout::new(variant, dims, sizes), seed)
    }

    fn random_xs(n: usize, e: usize, seed: u64) -> Vec<f64> {
        use rand::Rng;
        let mut rng = crate::rng::substream(seed, "xs");
        (0..n * e).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn empty_sequence_is_rejected() {
        let p = toy_params(ModelVariant::Bidirectional, 1);
        assert!(encode_vectors(&p, &[], 0).is_err());
    }

    #[test]
    fn length_one_sequence_encodes() {
        let p = toy_params(ModelVariant::Bidirectional, 2);
        let xs = random_xs(1, 5, 3);
        let hidden = encode_vectors(&p, &xs, 1).unwrap();
        assert_eq!(hidden.n, 1);
        assert_eq!(hidden.dim, 8);
        assert!(hidden.data.iter().all(|v| v.is_finite()));
    }

    /// With the backward weights tied to the forward ones, encoding the
    /// reversed sequence mirrors the original with halves swapped.
    #[test]
    fn reversal_symmetry_with_tied_weights() {
        let mut p = toy_params(ModelVariant::Bidirectional, 7);
        let (fwd, bwd) = (p.layout.fwd.unwrap(), p.layout.bwd.unwrap());
        for (a, b) in [(fwd.wx, bwd.wx), (fwd.wh, bwd.wh), (fwd.b, bwd.b)] {
            let src = p.values[a.range()].to_vec();
            p.values[b.range()].copy_from_slice(&src);
        }
        let e = p.layout.dims.embed;
        let n = 6;
        let xs = random_xs(n, e, 11);
        let mut rev = vec![0.0; xs.len()];
        for i in 0..n {
            rev[i * e..(i + 1) * e].copy_from_slice(&xs[(n - 1 - i) * e..(n - i) * e]);
        }
        let h_orig = encode_vectors(&p, &xs, n).unwrap();
        let h_rev = encode_vectors(&p, &rev, n).unwrap();
        let half = p.layout.dims.hidden;
        for i in 0..n {
            let a = h_rev.row(i);
            let b = h_orig.row(n - 1 - i);
            // swap halves of b, then compare exactly
            assert_eq!(&a[..half], &b[half..], "fwd half at {i}");
            assert_eq!(&a[half..], &b[..half], "bwd half at {i}");
        }
    }

    /// The forward half at position i only sees the prefix; the
    /// backward half only the suffix.
    #[test]
    fn directional_locality() {
        let p = toy_params(ModelVariant::Bidirectional, 13);
        let e = p.layout.dims.embed;
        let n = 7;
        let xs = random_xs(n, e, 17);
        let base = encode_vectors(&p, &xs, n).unwrap();
        let half = p.layout.dims.hidden;

        // perturb a late position: forward halves up to that position unchanged
        let mut bumped = xs.clone();
        bumped[5 * e] += 1.0;
        let out = encode_vectors(&p, &bumped, n).unwrap();
        for i in 0..5 {
            assert_eq!(&out.row(i)[..half], &base.row(i)[..half], "fwd at {i}");
        }
        assert_ne!(&out.row(5)[..half], &base.row(5)[..half]);

        // perturb an early position: backward halves after it unchanged
        let mut bumped = xs.clone();
        bumped[e + 1] -= 0.5;
        let out = encode_vectors(&p, &bumped, n).unwrap();
        for i in 2..n {
            assert_eq!(&out.row(i)[half..], &base.row(i)[half..], "bwd at {i}");
        }
        assert_ne!(&out.row(1)[half..], &base.row(1)[half..]);
    }
}
