//! Transformer encoder with a two-layer decoder head, stored as one flat
//! parameter vector, with an explicit forward cache and reverse pass.

use rand::Rng;

use super::config::OperatorConfig;

/// One token per physical variable.
pub const TOKENS: usize = 8;
pub const INPUT_DIM: usize = 16;
pub const OUTPUT_DIM: usize = 12;

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Init {
    /// Uniform in `+-1/sqrt(fan_in)`.
    Uniform { fan_in: usize },
    Ones,
    Zeros,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorInfo {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
    pub(crate) init: Init,
}

impl TensorInfo {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
struct BlockLayout {
    ln1_g: usize,
    ln1_b: usize,
    wqkv: usize,
    bqkv: usize,
    wo: usize,
    bo: usize,
    ln2_g: usize,
    ln2_b: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

/// Offsets of every tensor in the flat parameter vector, in declared order.
#[derive(Debug, Clone)]
pub struct Layout {
    d: usize,
    heads: usize,
    ff: usize,
    dec: usize,
    embed_w: usize,
    embed_b: usize,
    in_w: usize,
    in_b: usize,
    blocks: Vec<BlockLayout>,
    lnf_g: usize,
    lnf_b: usize,
    out_w: usize,
    out_b: usize,
    fc1_w: usize,
    fc1_b: usize,
    fc2_w: usize,
    fc2_b: usize,
    tensors: Vec<TensorInfo>,
    total: usize,
}

struct Builder {
    tensors: Vec<TensorInfo>,
    total: usize,
}

impl Builder {
    fn push(&mut self, name: String, shape: &[usize], init: Init) -> usize {
        let offset = self.total;
        let info = TensorInfo {
            name,
            offset,
            shape: shape.to_vec(),
            init,
        };
        self.total += info.len();
        self.tensors.push(info);
        offset
    }

    /// Weight `[fan_in, fan_out]` and bias `[fan_out]`.
    fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize) -> (usize, usize) {
        let w = self.push(format!("{name}.weight"), &[fan_in, fan_out], Init::Uniform { fan_in });
        let b = self.push(format!("{name}.bias"), &[fan_out], Init::Uniform { fan_in });
        (w, b)
    }

    fn layer_norm(&mut self, name: &str, d: usize) -> (usize, usize) {
        let g = self.push(format!("{name}.gamma"), &[d], Init::Ones);
        let b = self.push(format!("{name}.beta"), &[d], Init::Zeros);
        (g, b)
    }
}

impl Layout {
    pub fn new(cfg: &OperatorConfig) -> Self {
        let (d, ff, dec) = (cfg.token_dim, cfg.ff_dim, cfg.decoder_dim);
        let mut b = Builder {
            tensors: Vec::new(),
            total: 0,
        };
        let embed_w = b.push("embed.weight".into(), &[TOKENS, 2, d], Init::Uniform { fan_in: 2 });
        let embed_b = b.push("embed.bias".into(), &[TOKENS, d], Init::Uniform { fan_in: 2 });
        let (in_w, in_b) = b.linear("backbone.input", d, d);
        let blocks = (0..cfg.num_blocks)
            .map(|i| {
                let (ln1_g, ln1_b) = b.layer_norm(&format!("block{i}.ln1"), d);
                let (wqkv, bqkv) = b.linear(&format!("block{i}.qkv"), d, 3 * d);
                let (wo, bo) = b.linear(&format!("block{i}.attn_out"), d, d);
                let (ln2_g, ln2_b) = b.layer_norm(&format!("block{i}.ln2"), d);
                let (w1, b1) = b.linear(&format!("block{i}.ff1"), d, ff);
                let (w2, b2) = b.linear(&format!("block{i}.ff2"), ff, d);
                BlockLayout {
                    ln1_g,
                    ln1_b,
                    wqkv,
                    bqkv,
                    wo,
                    bo,
                    ln2_g,
                    ln2_b,
                    w1,
                    b1,
                    w2,
                    b2,
                }
            })
            .collect();
        let (lnf_g, lnf_b) = b.layer_norm("backbone.ln_final", d);
        let (out_w, out_b) = b.linear("backbone.output", d, d);
        let (fc1_w, fc1_b) = b.linear("decoder.fc1", TOKENS * d, dec);
        let (fc2_w, fc2_b) = b.linear("decoder.fc2", dec, OUTPUT_DIM);
        Self {
            d,
            heads: cfg.num_heads,
            ff,
            dec,
            embed_w,
            embed_b,
            in_w,
            in_b,
            blocks,
            lnf_g,
            lnf_b,
            out_w,
            out_b,
            fc1_w,
            fc1_b,
            fc2_w,
            fc2_b,
            tensors: b.tensors,
            total: b.total,
        }
    }

    pub fn num_params(&self) -> usize {
        self.total
    }

    pub fn tensors(&self) -> &[TensorInfo] {
        &self.tensors
    }

    pub(crate) fn init(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.total];
        for t in &self.tensors {
            let slot = &mut p[t.offset..t.offset + t.len()];
            match t.init {
                Init::Uniform { fan_in } => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    for v in slot {
                        *v = rng.gen_range(-bound..bound);
                    }
                }
                Init::Ones => slot.fill(1.0),
                Init::Zeros => slot.fill(0.0),
            }
        }
        p
    }
}

/// `c = beta * c + op(a) * op(b)` for row-major matrices, where `op(a)` is
/// `m x k` and `op(b)` is `k x n`.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool, beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserts above bound every index touched by the strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `y[rows x out] = x[rows x in] * w + b`.
fn linear_forward(rows: usize, fan_in: usize, fan_out: usize, x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(rows * fan_out);
    for _ in 0..rows {
        y.extend_from_slice(b);
    }
    gemm(rows, fan_in, fan_out, x, false, w, false, 1.0, &mut y);
    y
}

/// Accumulates weight and bias gradients and returns `dx`.
#[allow(clippy::too_many_arguments)]
fn linear_backward(
    rows: usize,
    fan_in: usize,
    fan_out: usize,
    x: &[f64],
    w: &[f64],
    dy: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    gemm(fan_in, rows, fan_out, x, true, dy, false, 1.0, dw);
    for row in dy.chunks_exact(fan_out) {
        for (g, v) in db.iter_mut().zip(row) {
            *g += v;
        }
    }
    let mut dx = vec![0.0; rows * fan_in];
    gemm(rows, fan_out, fan_in, dy, false, w, true, 0.0, &mut dx);
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// `tanh` through one `exp`; saturates cleanly for large arguments.
fn fast_tanh(z: f64) -> f64 {
    1.0 - 2.0 / ((2.0 * z).exp() + 1.0)
}

pub(crate) fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + fast_tanh(GELU_C * (x + GELU_A * x * x * x)))
}

pub(crate) fn gelu_grad(x: f64) -> f64 {
    let t = fast_tanh(GELU_C * (x + GELU_A * x * x * x));
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

struct LnCache {
    xhat: Vec<f64>,
    rstd: Vec<f64>,
}

fn layer_norm_forward(d: usize, x: &[f64], g: &[f64], b: &[f64]) -> (Vec<f64>, LnCache) {
    let rows = x.len() / d;
    let mut y = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    let mut rstd = vec![0.0; rows];
    for r in 0..rows {
        let xr = &x[r * d..(r + 1) * d];
        let mean = xr.iter().sum::<f64>() / d as f64;
        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let s = 1.0 / (var + LN_EPS).sqrt();
        rstd[r] = s;
        for c in 0..d {
            let h = (xr[c] - mean) * s;
            xhat[r * d + c] = h;
            y[r * d + c] = g[c] * h + b[c];
        }
    }
    (y, LnCache { xhat, rstd })
}

fn layer_norm_backward(d: usize, cache: &LnCache, g: &[f64], dy: &[f64], dg: &mut [f64], db: &mut [f64]) -> Vec<f64> {
    let rows = dy.len() / d;
    let mut dx = vec![0.0; dy.len()];
    let mut dxhat = vec![0.0; d];
    for r in 0..rows {
        let xh = &cache.xhat[r * d..(r + 1) * d];
        let dyr = &dy[r * d..(r + 1) * d];
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for c in 0..d {
            dg[c] += dyr[c] * xh[c];
            db[c] += dyr[c];
            dxhat[c] = dyr[c] * g[c];
            m1 += dxhat[c];
            m2 += dxhat[c] * xh[c];
        }
        m1 /= d as f64;
        m2 /= d as f64;
        for c in 0..d {
            dx[r * d + c] = cache.rstd[r] * (dxhat[c] - m1 - xh[c] * m2);
        }
    }
    dx
}

struct BlockCache {
    ln1: LnCache,
    a1: Vec<f64>,
    qkv: Vec<f64>,
    probs: Vec<f64>,
    att: Vec<f64>,
    ln2: LnCache,
    a2: Vec<f64>,
    pre: Vec<f64>,
    act: Vec<f64>,
}

/// Activations kept for the reverse pass.
pub(crate) struct Cache {
    batch: usize,
    tokens: Vec<f64>,
    embed: Vec<f64>,
    blocks: Vec<BlockCache>,
    lnf: LnCache,
    zf: Vec<f64>,
    out_pre: Vec<f64>,
    out: Vec<f64>,
    f1_pre: Vec<f64>,
    f1: Vec<f64>,
}

/// Per-head scratch: `T x dh` copies of the query, key, value and output
/// gradient rows.
struct HeadScratch {
    dh: usize,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    g: Vec<f64>,
}

impl HeadScratch {
    fn new(dh: usize) -> Self {
        Self {
            dh,
            q: vec![0.0; TOKENS * dh],
            k: vec![0.0; TOKENS * dh],
            v: vec![0.0; TOKENS * dh],
            g: vec![0.0; TOKENS * dh],
        }
    }

    fn load(&mut self, qkv: &[f64], d: usize, base: usize, head: usize) {
        let dh = self.dh;
        for i in 0..TOKENS {
            let row = &qkv[(base + i) * 3 * d..(base + i + 1) * 3 * d];
            let o = head * dh;
            self.q[i * dh..(i + 1) * dh].copy_from_slice(&row[o..o + dh]);
            self.k[i * dh..(i + 1) * dh].copy_from_slice(&row[d + o..d + o + dh]);
            self.v[i * dh..(i + 1) * dh].copy_from_slice(&row[2 * d + o..2 * d + o + dh]);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl Layout {
    fn attention_forward(&self, batch: usize, qkv: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (d, h) = (self.d, self.heads);
        let dh = d / h;
        let inv = 1.0 / (dh as f64).sqrt();
        let mut att = vec![0.0; batch * TOKENS * d];
        let mut probs = vec![0.0; batch * h * TOKENS * TOKENS];
        let mut s = HeadScratch::new(dh);
        for b in 0..batch {
            let base = b * TOKENS;
            for hh in 0..h {
                s.load(qkv, d, base, hh);
                let p = &mut probs[(b * h + hh) * TOKENS * TOKENS..(b * h + hh + 1) * TOKENS * TOKENS];
                for i in 0..TOKENS {
                    let row = &mut p[i * TOKENS..(i + 1) * TOKENS];
                    let qi = &s.q[i * dh..(i + 1) * dh];
                    let mut mx = f64::NEG_INFINITY;
                    for (j, e) in row.iter_mut().enumerate() {
                        *e = dot(qi, &s.k[j * dh..(j + 1) * dh]) * inv;
                        mx = mx.max(*e);
                    }
                    let mut z = 0.0;
                    for e in row.iter_mut() {
                        *e = (*e - mx).exp();
                        z += *e;
                    }
                    let out = &mut att[(base + i) * d + hh * dh..(base + i) * d + (hh + 1) * dh];
                    for (j, e) in row.iter_mut().enumerate() {
                        *e /= z;
                        axpy(*e, &s.v[j * dh..(j + 1) * dh], out);
                    }
                }
            }
        }
        (att, probs)
    }

    fn attention_backward(&self, batch: usize, qkv: &[f64], probs: &[f64], datt: &[f64]) -> Vec<f64> {
        let (d, h) = (self.d, self.heads);
        let dh = d / h;
        let inv = 1.0 / (dh as f64).sqrt();
        let mut dqkv = vec![0.0; qkv.len()];
        let mut s = HeadScratch::new(dh);
        let mut dq = vec![0.0; TOKENS * dh];
        let mut dk = vec![0.0; TOKENS * dh];
        let mut dv = vec![0.0; TOKENS * dh];
        let mut dp = [0.0; TOKENS];
        for b in 0..batch {
            let base = b * TOKENS;
            for hh in 0..h {
                s.load(qkv, d, base, hh);
                for i in 0..TOKENS {
                    let o = (base + i) * d + hh * dh;
                    s.g[i * dh..(i + 1) * dh].copy_from_slice(&datt[o..o + dh]);
                }
                dq.fill(0.0);
                dk.fill(0.0);
                dv.fill(0.0);
                let p = &probs[(b * h + hh) * TOKENS * TOKENS..(b * h + hh + 1) * TOKENS * TOKENS];
                for i in 0..TOKENS {
                    let gi = &s.g[i * dh..(i + 1) * dh];
                    let pi = &p[i * TOKENS..(i + 1) * TOKENS];
                    let mut acc = 0.0;
                    for j in 0..TOKENS {
                        dp[j] = dot(gi, &s.v[j * dh..(j + 1) * dh]);
                        acc += pi[j] * dp[j];
                        axpy(pi[j], gi, &mut dv[j * dh..(j + 1) * dh]);
                    }
                    for j in 0..TOKENS {
                        let ds = pi[j] * (dp[j] - acc) * inv;
                        axpy(ds, &s.k[j * dh..(j + 1) * dh], &mut dq[i * dh..(i + 1) * dh]);
                        axpy(ds, &s.q[i * dh..(i + 1) * dh], &mut dk[j * dh..(j + 1) * dh]);
                    }
                }
                for i in 0..TOKENS {
                    let row = &mut dqkv[(base + i) * 3 * d..(base + i + 1) * 3 * d];
                    let o = hh * dh;
                    row[o..o + dh].copy_from_slice(&dq[i * dh..(i + 1) * dh]);
                    row[d + o..d + o + dh].copy_from_slice(&dk[i * dh..(i + 1) * dh]);
                    row[2 * d + o..2 * d + o + dh].copy_from_slice(&dv[i * dh..(i + 1) * dh]);
                }
            }
        }
        dqkv
    }

    /// Maps normalized token features `[batch, TOKENS, 2]` to raw head
    /// outputs `[batch, OUTPUT_DIM]`.
    pub(crate) fn forward(&self, params: &[f64], tokens: Vec<f64>) -> (Vec<f64>, Cache) {
        let (d, ff, dec) = (self.d, self.ff, self.dec);
        let batch = tokens.len() / (2 * TOKENS);
        let rows = batch * TOKENS;
        let p = |off: usize, len: usize| &params[off..off + len];

        let we = p(self.embed_w, TOKENS * 2 * d);
        let be = p(self.embed_b, TOKENS * d);
        let mut embed = vec![0.0; rows * d];
        for r in 0..rows {
            let t = r % TOKENS;
            let (f0, f1) = (tokens[2 * r], tokens[2 * r + 1]);
            for c in 0..d {
                embed[r * d + c] = f0 * we[(t * 2) * d + c] + f1 * we[(t * 2 + 1) * d + c] + be[t * d + c];
            }
        }
        let mut x = linear_forward(rows, d, d, &embed, p(self.in_w, d * d), p(self.in_b, d));

        let mut blocks = Vec::with_capacity(self.blocks.len());
        for bl in &self.blocks {
            let (a1, ln1) = layer_norm_forward(d, &x, p(bl.ln1_g, d), p(bl.ln1_b, d));
            let qkv = linear_forward(rows, d, 3 * d, &a1, p(bl.wqkv, 3 * d * d), p(bl.bqkv, 3 * d));
            let (att, probs) = self.attention_forward(batch, &qkv);
            let proj = linear_forward(rows, d, d, &att, p(bl.wo, d * d), p(bl.bo, d));
            for (xi, v) in x.iter_mut().zip(&proj) {
                *xi += v;
            }
            let (a2, ln2) = layer_norm_forward(d, &x, p(bl.ln2_g, d), p(bl.ln2_b, d));
            let pre = linear_forward(rows, d, ff, &a2, p(bl.w1, d * ff), p(bl.b1, ff));
            let act: Vec<f64> = pre.iter().map(|&v| gelu(v)).collect();
            let y = linear_forward(rows, ff, d, &act, p(bl.w2, ff * d), p(bl.b2, d));
            for (xi, v) in x.iter_mut().zip(&y) {
                *xi += v;
            }
            blocks.push(BlockCache {
                ln1,
                a1,
                qkv,
                probs,
                att,
                ln2,
                a2,
                pre,
                act,
            });
        }

        let (zf, lnf) = layer_norm_forward(d, &x, p(self.lnf_g, d), p(self.lnf_b, d));
        let out_pre = linear_forward(rows, d, d, &zf, p(self.out_w, d * d), p(self.out_b, d));
        let out: Vec<f64> = out_pre.iter().map(|&v| gelu(v)).collect();
        let f1_pre = linear_forward(batch, TOKENS * d, dec, &out, p(self.fc1_w, TOKENS * d * dec), p(self.fc1_b, dec));
        let f1: Vec<f64> = f1_pre.iter().map(|&v| gelu(v)).collect();
        let y = linear_forward(batch, dec, OUTPUT_DIM, &f1, p(self.fc2_w, dec * OUTPUT_DIM), p(self.fc2_b, OUTPUT_DIM));
        let cache = Cache {
            batch,
            tokens,
            embed,
            blocks,
            lnf,
            zf,
            out_pre,
            out,
            f1_pre,
            f1,
        };
        (y, cache)
    }

    /// Accumulates `d loss / d params` into `grad` given `dy = d loss / d y`.
    pub(crate) fn backward(&self, params: &[f64], cache: &Cache, dy: &[f64], grad: &mut [f64]) {
        let (d, ff, dec) = (self.d, self.ff, self.dec);
        let batch = cache.batch;
        let rows = batch * TOKENS;
        let p = |off: usize, len: usize| &params[off..off + len];
        // disjoint mutable views into the gradient vector
        fn two(g: &mut [f64], a: usize, la: usize, b: usize, lb: usize) -> (&mut [f64], &mut [f64]) {
            assert!(a + la <= b);
            let (lo, hi) = g.split_at_mut(b);
            (&mut lo[a..a + la], &mut hi[..lb])
        }

        let (gw, gb) = two(grad, self.fc2_w, dec * OUTPUT_DIM, self.fc2_b, OUTPUT_DIM);
        let mut df1 = linear_backward(batch, dec, OUTPUT_DIM, &cache.f1, p(self.fc2_w, dec * OUTPUT_DIM), dy, gw, gb);
        for (g, &x) in df1.iter_mut().zip(&cache.f1_pre) {
            *g *= gelu_grad(x);
        }
        let (gw, gb) = two(grad, self.fc1_w, TOKENS * d * dec, self.fc1_b, dec);
        let mut dout = linear_backward(batch, TOKENS * d, dec, &cache.out, p(self.fc1_w, TOKENS * d * dec), &df1, gw, gb);
        for (g, &x) in dout.iter_mut().zip(&cache.out_pre) {
            *g *= gelu_grad(x);
        }
        let (gw, gb) = two(grad, self.out_w, d * d, self.out_b, d);
        let dzf = linear_backward(rows, d, d, &cache.zf, p(self.out_w, d * d), &dout, gw, gb);
        let (gg, gb) = two(grad, self.lnf_g, d, self.lnf_b, d);
        let mut dx = layer_norm_backward(d, &cache.lnf, p(self.lnf_g, d), &dzf, gg, gb);

        for (bl, bc) in self.blocks.iter().zip(&cache.blocks).rev() {
            // feed-forward branch
            let (gw, gb) = two(grad, bl.w2, ff * d, bl.b2, d);
            let mut dpre = linear_backward(rows, ff, d, &bc.act, p(bl.w2, ff * d), &dx, gw, gb);
            for (g, &x) in dpre.iter_mut().zip(&bc.pre) {
                *g *= gelu_grad(x);
            }
            let (gw, gb) = two(grad, bl.w1, d * ff, bl.b1, ff);
            let da2 = linear_backward(rows, d, ff, &bc.a2, p(bl.w1, d * ff), &dpre, gw, gb);
            let (gg, gb) = two(grad, bl.ln2_g, d, bl.ln2_b, d);
            let dln2 = layer_norm_backward(d, &bc.ln2, p(bl.ln2_g, d), &da2, gg, gb);
            for (a, b) in dx.iter_mut().zip(&dln2) {
                *a += b;
            }
            // attention branch
            let (gw, gb) = two(grad, bl.wo, d * d, bl.bo, d);
            let datt = linear_backward(rows, d, d, &bc.att, p(bl.wo, d * d), &dx, gw, gb);
            let dqkv = self.attention_backward(batch, &bc.qkv, &bc.probs, &datt);
            let (gw, gb) = two(grad, bl.wqkv, 3 * d * d, bl.bqkv, 3 * d);
            let da1 = linear_backward(rows, d, 3 * d, &bc.a1, p(bl.wqkv, 3 * d * d), &dqkv, gw, gb);
            let (gg, gb) = two(grad, bl.ln1_g, d, bl.ln1_b, d);
            let dln1 = layer_norm_backward(d, &bc.ln1, p(bl.ln1_g, d), &da1, gg, gb);
            for (a, b) in dx.iter_mut().zip(&dln1) {
                *a += b;
            }
        }

        let (gw, gb) = two(grad, self.in_w, d * d, self.in_b, d);
        let de = linear_backward(rows, d, d, &cache.embed, p(self.in_w, d * d), &dx, gw, gb);
        let (gw, gb) = two(grad, self.embed_w, TOKENS * 2 * d, self.embed_b, TOKENS * d);
        for r in 0..rows {
            let t = r % TOKENS;
            let (f0, f1) = (cache.tokens[2 * r], cache.tokens[2 * r + 1]);
            for c in 0..d {
                let g = de[r * d + c];
                gw[(t * 2) * d + c] += f0 * g;
                gw[(t * 2 + 1) * d + c] += f1 * g;
                gb[t * d + c] += g;
            }
        }
    }
}
