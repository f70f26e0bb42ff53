//! Sequence encoders over frozen word vectors. Parameters live in one flat
//! slice so the optimizer and gradient checks can treat them uniformly.
//!
//! Recurrent layout, per direction (forward then backward):
//! `W` (4H x input), `U` (4H x H), `b` (4H), gate order i, f, g, o.

use rand::Rng;

use super::config::EncoderKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderShape {
    pub kind: EncoderKind,
    pub input: usize,
    pub dim: usize,
    pub hidden: usize,
}

impl EncoderShape {
    pub fn param_count(&self) -> usize {
        match self.kind {
            EncoderKind::MeanPool => self.dim * self.input,
            EncoderKind::Recurrent => 2 * self.direction_len(),
        }
    }

    fn direction_len(&self) -> usize {
        let g = 4 * self.hidden;
        g * self.input + g * self.hidden + g
    }

    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let uniform = |rng: &mut R, fan_in: usize, n: usize| -> Vec<f64> {
            let a = 1.0 / (fan_in.max(1) as f64).sqrt();
            (0..n).map(|_| rng.random_range(-a..=a)).collect()
        };
        match self.kind {
            EncoderKind::MeanPool => uniform(rng, self.input, self.param_count()),
            EncoderKind::Recurrent => {
                let g = 4 * self.hidden;
                let mut p = Vec::with_capacity(self.param_count());
                for _ in 0..2 {
                    p.extend(uniform(rng, self.input, g * self.input));
                    p.extend(uniform(rng, self.hidden, g * self.hidden));
                    p.extend(uniform(rng, self.hidden, g));
                }
                p
            }
        }
    }

    /// Encodes one sequence; `None` entries are unknown words (zero input).
    pub fn forward(&self, params: &[f64], xs: &[Option<&[f64]>]) -> Vec<f64> {
        if xs.is_empty() {
            return vec![0.0; self.dim];
        }
        match self.kind {
            EncoderKind::MeanPool => matvec(params, self.dim, self.input, &self.mean_input(xs)),
            EncoderKind::Recurrent => {
                let (fwd, bwd) = self.split(params);
                let f = self.run(fwd, xs, false);
                let b = self.run(bwd, xs, true);
                self.pool(&f, &b, xs.len())
            }
        }
    }

    /// Adds d(out)/d(params) contracted with `d_out` into `grad`.
    pub fn backward(&self, params: &[f64], xs: &[Option<&[f64]>], d_out: &[f64], grad: &mut [f64]) {
        if xs.is_empty() {
            return;
        }
        match self.kind {
            EncoderKind::MeanPool => {
                let xbar = self.mean_input(xs);
                for (i, d) in d_out.iter().enumerate() {
                    if *d != 0.0 {
                        axpy(*d, &xbar, &mut grad[i * self.input..(i + 1) * self.input]);
                    }
                }
            }
            EncoderKind::Recurrent => {
                let n = self.direction_len();
                let (fwd, bwd) = self.split(params);
                let (gf, gb) = grad.split_at_mut(n);
                let scale = 1.0 / xs.len() as f64;
                let h = self.hidden;
                let df: Vec<f64> = d_out[..h].iter().map(|d| d * scale).collect();
                let db: Vec<f64> = d_out[h..].iter().map(|d| d * scale).collect();
                let trace = self.run(fwd, xs, false);
                self.backprop(fwd, xs, &trace, &df, gf);
                let trace = self.run(bwd, xs, true);
                self.backprop(bwd, xs, &trace, &db, gb);
            }
        }
    }

    fn mean_input(&self, xs: &[Option<&[f64]>]) -> Vec<f64> {
        let mut xbar = vec![0.0; self.input];
        for x in xs.iter().flatten() {
            axpy(1.0, x, &mut xbar);
        }
        let n = xs.len() as f64;
        xbar.iter_mut().for_each(|v| *v /= n);
        xbar
    }

    fn split<'a>(&self, params: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        params.split_at(self.direction_len())
    }

    fn pool(&self, f: &Trace, b: &Trace, steps: usize) -> Vec<f64> {
        let h = self.hidden;
        let mut out = vec![0.0; 2 * h];
        for k in 0..steps {
            axpy(1.0, &f.h[k], &mut out[..h]);
            axpy(1.0, &b.h[k], &mut out[h..]);
        }
        out.iter_mut().for_each(|v| *v /= steps as f64);
        out
    }

    fn run(&self, p: &[f64], xs: &[Option<&[f64]>], reverse: bool) -> Trace {
        let (h, inp) = (self.hidden, self.input);
        let g4 = 4 * h;
        let (w, rest) = p.split_at(g4 * inp);
        let (u, b) = rest.split_at(g4 * h);
        let t_len = xs.len();
        let mut tr = Trace {
            order: (0..t_len).collect(),
            gates: Vec::with_capacity(t_len),
            c: Vec::with_capacity(t_len),
            h: Vec::with_capacity(t_len),
        };
        if reverse {
            tr.order.reverse();
        }
        for k in 0..t_len {
            let mut z = b.to_vec();
            if let Some(x) = xs[tr.order[k]] {
                matvec_add(w, g4, inp, x, &mut z);
            }
            if k > 0 {
                matvec_add(u, g4, h, &tr.h[k - 1], &mut z);
            }
            for (j, zj) in z.iter_mut().enumerate() {
                *zj = if (2 * h..3 * h).contains(&j) { zj.tanh() } else { sigmoid(*zj) };
            }
            let mut c = vec![0.0; h];
            let mut hv = vec![0.0; h];
            for j in 0..h {
                let prev = if k > 0 { tr.c[k - 1][j] } else { 0.0 };
                c[j] = z[h + j] * prev + z[j] * z[2 * h + j];
                hv[j] = z[3 * h + j] * c[j].tanh();
            }
            tr.gates.push(z);
            tr.c.push(c);
            tr.h.push(hv);
        }
        // Report hidden states by time position rather than processing step.
        if reverse {
            tr.h.reverse();
        }
        tr
    }

    /// Backpropagation through time for one direction. `dh_t` is the same
    /// for every time step because the output is a uniform average.
    fn backprop(&self, p: &[f64], xs: &[Option<&[f64]>], tr: &Trace, dh_t: &[f64], grad: &mut [f64]) {
        let (h, inp) = (self.hidden, self.input);
        let g4 = 4 * h;
        let u = &p[g4 * inp..g4 * inp + g4 * h];
        let (gw, rest) = grad.split_at_mut(g4 * inp);
        let (gu, gb) = rest.split_at_mut(g4 * h);
        let t_len = xs.len();
        // Hidden state by processing step.
        let reversed = tr.order.first().is_some_and(|&t| t != 0);
        let h_at = |k: usize| -> &[f64] {
            if reversed {
                &tr.h[t_len - 1 - k]
            } else {
                &tr.h[k]
            }
        };
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; g4];
        for k in (0..t_len).rev() {
            let z = &tr.gates[k];
            for j in 0..h {
                let dh = dh_t[j] + dh_next[j];
                let (i, f, g, o) = (z[j], z[h + j], z[2 * h + j], z[3 * h + j]);
                let tc = tr.c[k][j].tanh();
                let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
                let prev = if k > 0 { tr.c[k - 1][j] } else { 0.0 };
                dz[j] = dc * g * i * (1.0 - i);
                dz[h + j] = dc * prev * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - g * g);
                dz[3 * h + j] = dh * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            if let Some(x) = xs[tr.order[k]] {
                for (r, d) in dz.iter().enumerate() {
                    axpy(*d, x, &mut gw[r * inp..(r + 1) * inp]);
                }
            }
            axpy(1.0, &dz, gb);
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            if k > 0 {
                let hp = h_at(k - 1);
                for (r, d) in dz.iter().enumerate() {
                    axpy(*d, hp, &mut gu[r * h..(r + 1) * h]);
                    axpy(*d, &u[r * h..(r + 1) * h], &mut dh_next);
                }
            }
        }
    }
}

struct Trace {
    order: Vec<usize>,
    /// Activated gates by processing step.
    gates: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn matvec(m: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rows];
    matvec_add(m, rows, cols, x, &mut out);
    out
}

fn matvec_add(m: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        *o += dot(&m[r * cols..(r + 1) * cols], x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape(kind: EncoderKind) -> EncoderShape {
        EncoderShape {
            kind,
            input: 3,
            dim: 4,
            hidden: 2,
        }
    }

    #[test]
    fn empty_sequence_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for kind in [EncoderKind::MeanPool, EncoderKind::Recurrent] {
            let s = shape(kind);
            let p = s.init(&mut rng);
            assert_eq!(p.len(), s.param_count());
            assert_eq!(s.forward(&p, &[]), vec![0.0; 4]);
        }
    }

    #[test]
    fn mean_pool_single_token_is_linear_map() {
        let s = shape(EncoderKind::MeanPool);
        let p: Vec<f64> = (0..12).map(|i| i as f64 * 0.1 - 0.5).collect();
        let x = [1.0, -2.0, 0.5];
        let got = s.forward(&p, &[Some(&x)]);
        for r in 0..4 {
            let want: f64 = (0..3).map(|c| p[r * 3 + c] * x[c]).sum();
            assert!((got[r] - want).abs() < 1e-15);
        }
        // Unknown words count in the average as zeros.
        let half = s.forward(&p, &[Some(&x), None]);
        for r in 0..4 {
            assert!((half[r] - got[r] / 2.0).abs() < 1e-15);
        }
    }

    /// Step-by-step recurrence written out with explicit gate matrices.
    fn reference_lstm(p: &[f64], xs: &[[f64; 3]], hidden: usize) -> Vec<f64> {
        let inp = 3;
        let g4 = 4 * hidden;
        let dir_len = g4 * inp + g4 * hidden + g4;
        let run = |dp: &[f64], seq: Vec<[f64; 3]>| -> Vec<Vec<f64>> {
            let w = |gate: usize, j: usize, c: usize| dp[(gate * hidden + j) * inp + c];
            let u = |gate: usize, j: usize, c: usize| dp[g4 * inp + (gate * hidden + j) * hidden + c];
            let b = |gate: usize, j: usize| dp[g4 * inp + g4 * hidden + gate * hidden + j];
            let mut h = vec![0.0; hidden];
            let mut c = vec![0.0; hidden];
            let mut out = Vec::new();
            for x in seq {
                let pre = |gate: usize, j: usize| -> f64 {
                    let mut s = b(gate, j);
                    for k in 0..inp {
                        s += w(gate, j, k) * x[k];
                    }
                    for k in 0..hidden {
                        s += u(gate, j, k) * h[k];
                    }
                    s
                };
                let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
                let mut nh = vec![0.0; hidden];
                let mut nc = vec![0.0; hidden];
                for j in 0..hidden {
                    let i = sig(pre(0, j));
                    let f = sig(pre(1, j));
                    let g = pre(2, j).tanh();
                    let o = sig(pre(3, j));
                    nc[j] = f * c[j] + i * g;
                    nh[j] = o * nc[j].tanh();
                }
                h = nh;
                c = nc;
                out.push(h.clone());
            }
            out
        };
        let fwd = run(&p[..dir_len], xs.to_vec());
        let mut bwd = run(&p[dir_len..], xs.iter().rev().copied().collect());
        bwd.reverse();
        let mut out = vec![0.0; 2 * hidden];
        for t in 0..xs.len() {
            for j in 0..hidden {
                out[j] += fwd[t][j] / xs.len() as f64;
                out[hidden + j] += bwd[t][j] / xs.len() as f64;
            }
        }
        out
    }

    #[test]
    fn recurrent_matches_reference_recurrence() {
        let s = shape(EncoderKind::Recurrent);
        let p: Vec<f64> = (0..s.param_count()).map(|i| ((i * 37 % 23) as f64 - 11.0) * 0.05).collect();
        let xs = [[0.3, -0.2, 0.9], [-1.0, 0.4, 0.1], [0.5, 0.5, -0.7]];
        let refs: Vec<Option<&[f64]>> = xs.iter().map(|x| Some(&x[..])).collect();
        let got = s.forward(&p, &refs);
        let want = reference_lstm(&p, &xs, 2);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let mut refs: Vec<Option<&[f64]>> = xs.iter().map(|x| Some(&x[..])).collect();
        refs[2] = None;
        for kind in [EncoderKind::MeanPool, EncoderKind::Recurrent] {
            let s = shape(kind);
            let p = s.init(&mut rng);
            let w: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = |q: &[f64]| dot(&s.forward(q, &refs), &w);
            let mut grad = vec![0.0; p.len()];
            s.backward(&p, &refs, &w, &mut grad);
            for i in 0..p.len() {
                let mut q = p.clone();
                q[i] += 1e-6;
                let up = f(&q);
                q[i] -= 2e-6;
                let fd = (up - f(&q)) / 2e-6;
                assert!((fd - grad[i]).abs() < 1e-7, "{kind:?} param {i}: {} vs {fd}", grad[i]);
            }
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-16);
    }
}
