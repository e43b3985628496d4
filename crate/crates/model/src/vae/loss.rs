use pagforge_core::dataset::BOS_ID;
use pagforge_core::dataset::EOS_ID;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::gru::{self, add_to, matvec_add, matvec_t_add, outer_add, sigmoid, Step};
use super::layout::{Gru, Layout, Linear};
use super::{Sample, VaeConfig};

/// Per-molecule averages of each loss term plus teacher-forced token counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
    pub logp: f64,
    pub sa: f64,
    pub fp: f64,
    pub correct: usize,
    pub tokens: usize,
}

impl LossParts {
    pub fn accuracy(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.correct as f64 / self.tokens as f64
        }
    }

    pub(crate) fn add(&mut self, o: &LossParts) {
        self.total += o.total;
        self.recon += o.recon;
        self.kl += o.kl;
        self.logp += o.logp;
        self.sa += o.sa;
        self.fp += o.fp;
        self.correct += o.correct;
        self.tokens += o.tokens;
    }

    pub(crate) fn scale(&mut self, f: f64) {
        self.total *= f;
        self.recon *= f;
        self.kl *= f;
        self.logp *= f;
        self.sa *= f;
        self.fp *= f;
    }
}

/// Loss weights: `beta` on KL, `aux` on SA and FP, `aux * logp_factor` on logP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub beta: f64,
    pub aux: f64,
    pub logp_factor: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            beta: 1.0,
            aux: 1.0,
            logp_factor: 0.1,
        }
    }
}

pub(crate) struct Ctx<'a> {
    pub p: &'a [f64],
    pub lay: &'a Layout,
    pub cfg: &'a VaeConfig,
}

fn lin(p: &[f64], l: &Linear, x: &[f64]) -> Vec<f64> {
    let mut y = p[l.b..l.b + l.output].to_vec();
    matvec_add(&p[l.w..], l.input, 0, x, &mut y);
    y
}

fn lin_back(p: &[f64], g: &mut [f64], l: &Linear, x: &[f64], dy: &[f64], dx: Option<&mut [f64]>) {
    add_to(&mut g[l.b..l.b + l.output], dy);
    outer_add(&mut g[l.w..l.w + l.input * l.output], l.input, 0, dy, x);
    if let Some(dx) = dx {
        matvec_t_add(&p[l.w..l.w + l.input * l.output], l.input, 0, dy, dx);
    }
}

fn gru_mats<'p>(p: &'p [f64], g: &Gru) -> (&'p [f64], &'p [f64], &'p [f64], &'p [f64]) {
    let h3 = 3 * g.hidden;
    (
        &p[g.wi..g.wi + h3 * g.input],
        &p[g.wh..g.wh + h3 * g.hidden],
        &p[g.bi..g.bi + h3],
        &p[g.bh..g.bh + h3],
    )
}

fn emb<'p>(p: &'p [f64], base: usize, e: usize, tok: u32) -> &'p [f64] {
    let o = base + tok as usize * e;
    &p[o..o + e]
}

impl Ctx<'_> {
    fn run_encoder_dir(&self, g: &Gru, tokens: &[u32], reverse: bool) -> Vec<Step> {
        let (wi, wh, bi, bh) = gru_mats(self.p, g);
        let e = self.cfg.embed_dim;
        let mut h = vec![0.0; g.hidden];
        let mut steps = Vec::with_capacity(tokens.len());
        let order: Box<dyn Iterator<Item = &u32>> = if reverse {
            Box::new(tokens.iter().rev())
        } else {
            Box::new(tokens.iter())
        };
        for &t in order {
            let mut gi = bi.to_vec();
            matvec_add(wi, e, 0, emb(self.p, self.lay.enc_emb, e, t), &mut gi);
            let s = gru::forward(wh, bh, &gi, &h);
            h.clone_from(&s.h);
            steps.push(s);
        }
        steps
    }

    fn back_encoder_dir(&self, grad: &mut [f64], g: &Gru, tokens: &[u32], reverse: bool, steps: &[Step], dh_final: &[f64]) {
        let e = self.cfg.embed_dim;
        let (wi, wh, _, _) = gru_mats(self.p, g);
        let h3 = 3 * g.hidden;
        let mut dh = dh_final.to_vec();
        let mut dgi = vec![0.0; h3];
        let mut dh_prev = vec![0.0; g.hidden];
        let seq: Vec<u32> = if reverse {
            tokens.iter().rev().copied().collect()
        } else {
            tokens.to_vec()
        };
        let mut dbh = vec![0.0; h3];
        for (s, &t) in steps.iter().zip(&seq).rev() {
            gru::backward(wh, s, &dh, &mut grad[g.wh..g.wh + h3 * g.hidden], &mut dbh, &mut dgi, &mut dh_prev);
            add_to(&mut grad[g.bi..g.bi + h3], &dgi);
            let x = emb(self.p, self.lay.enc_emb, e, t);
            outer_add(&mut grad[g.wi..g.wi + h3 * e], e, 0, &dgi, x);
            let o = self.lay.enc_emb + t as usize * e;
            matvec_t_add(wi, e, 0, &dgi, &mut grad[o..o + e]);
            std::mem::swap(&mut dh, &mut dh_prev);
        }
        add_to(&mut grad[g.bh..g.bh + h3], &dbh);
    }

    /// Posterior mean and log-variance for a token sequence.
    pub(crate) fn posterior(&self, tokens: &[u32]) -> (Vec<f64>, Vec<f64>, Vec<Step>, Vec<Step>, Vec<f64>) {
        let hs = self.cfg.hidden;
        let fwd = self.run_encoder_dir(&self.lay.enc_fwd, tokens, false);
        let bwd = self.run_encoder_dir(&self.lay.enc_bwd, tokens, true);
        let mut enc = vec![0.0; 2 * hs];
        if let Some(s) = fwd.last() {
            enc[..hs].copy_from_slice(&s.h);
        }
        if let Some(s) = bwd.last() {
            enc[hs..].copy_from_slice(&s.h);
        }
        let mu = lin(self.p, &self.lay.mu, &enc);
        let lv = lin(self.p, &self.lay.logvar, &enc);
        (mu, lv, fwd, bwd, enc)
    }

    /// Initial decoder state and the latent part of the input projection.
    pub(crate) fn decoder_start(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h0: Vec<f64> = lin(self.p, &self.lay.dec_init, z).into_iter().map(f64::tanh).collect();
        let g = &self.lay.dec;
        let (wi, _, bi, _) = gru_mats(self.p, g);
        let mut gz = bi.to_vec();
        matvec_add(wi, g.input, self.cfg.embed_dim, z, &mut gz);
        (h0, gz)
    }

    /// One decoder step: returns the new cell cache and output logits.
    pub(crate) fn decoder_step(&self, gz: &[f64], prev: u32, h: &[f64]) -> (Step, Vec<f64>) {
        let g = &self.lay.dec;
        let e = self.cfg.embed_dim;
        let (wi, wh, _, bh) = gru_mats(self.p, g);
        let mut gi = gz.to_vec();
        matvec_add(wi, g.input, 0, emb(self.p, self.lay.dec_emb, e, prev), &mut gi);
        let s = gru::forward(wh, bh, &gi, h);
        let logits = lin(self.p, &self.lay.out, &s.h);
        (s, logits)
    }

    /// Loss for one molecule; gradient accumulated into `grad` when given.
    pub(crate) fn molecule(
        &self,
        sample: &Sample,
        rng: Option<&mut ChaCha8Rng>,
        w: &LossWeights,
        grad: Option<&mut [f64]>,
    ) -> LossParts {
        let cfg = self.cfg;
        let (l, e) = (cfg.latent_dim, cfg.embed_dim);
        let toks = &sample.tokens;
        let (mu, lv, fwd, bwd, enc) = self.posterior(toks);

        let mut rng = rng;
        let (z, eta) = match rng.as_deref_mut() {
            Some(r) => {
                let eta: Vec<f64> = (0..l).map(|_| StandardNormal.sample(&mut *r)).collect();
                let z = (0..l).map(|i| mu[i] + (0.5 * lv[i]).exp() * eta[i]).collect();
                (z, Some(eta))
            }
            None => (mu.clone(), None),
        };
        let kl = -0.5 * (0..l).map(|i| 1.0 + lv[i] - mu[i] * mu[i] - lv[i].exp()).sum::<f64>();

        let (h0, gz) = self.decoder_start(&z);
        let mut h = h0.clone();
        let mut dec_steps = Vec::with_capacity(toks.len() + 1);
        let mut probs = Vec::with_capacity(toks.len() + 1);
        let mut recon = 0.0;
        let mut correct = 0;
        for t in 0..=toks.len() {
            let prev = if t == 0 { BOS_ID } else { toks[t - 1] };
            let target = if t == toks.len() { EOS_ID } else { toks[t] } as usize;
            let (s, logits) = self.decoder_step(&gz, prev, &h);
            let mut best = 0;
            for (k, &v) in logits.iter().enumerate() {
                if v > logits[best] {
                    best = k;
                }
            }
            if best == target {
                correct += 1;
            }
            let m = logits[best];
            let ex: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
            let sum: f64 = ex.iter().sum();
            recon += sum.ln() + m - logits[target];
            h.clone_from(&s.h);
            dec_steps.push(s);
            probs.push(ex.into_iter().map(|v| v / sum).collect::<Vec<f64>>());
        }

        let train = rng.is_some();
        let mut head_cache = Vec::with_capacity(3);
        let mut outs = Vec::with_capacity(3);
        for layers in &self.lay.heads {
            let mut acts = vec![z.clone()];
            let mut masks: Vec<Vec<f64>> = Vec::new();
            let mut x = z.clone();
            for (i, layer) in layers.iter().enumerate() {
                let mut y = lin(self.p, layer, &x);
                if i + 1 < layers.len() {
                    let mut mask = vec![1.0; y.len()];
                    for (v, mk) in y.iter_mut().zip(&mut mask) {
                        if let (true, Some(r)) = (train, rng.as_deref_mut()) {
                            if r.random::<f64>() < cfg.dropout() {
                                *mk = 0.0;
                            } else {
                                *mk = 1.0 / (1.0 - cfg.dropout());
                            }
                        }
                        if *v <= 0.0 {
                            *mk = 0.0;
                        }
                        *v *= *mk;
                    }
                    masks.push(mask);
                    acts.push(y.clone());
                }
                x = y;
            }
            outs.push(x);
            head_cache.push((acts, masks));
        }
        let logp_err = outs[0][0] - sample.logp;
        let sa_err = outs[1][0] - sample.sa;
        let nb = sample.fp.len().max(1) as f64;
        let fp_loss = outs[2]
            .iter()
            .zip(&sample.fp)
            .map(|(&o, &y)| softplus(o) - y * o)
            .sum::<f64>()
            / nb;
        let wl = w.aux * w.logp_factor;
        let parts = LossParts {
            recon,
            kl,
            logp: logp_err.abs(),
            sa: sa_err.abs(),
            fp: fp_loss,
            total: recon + w.beta * kl + wl * logp_err.abs() + w.aux * sa_err.abs() + w.aux * fp_loss,
            correct,
            tokens: toks.len() + 1,
        };
        let Some(grad) = grad else { return parts };

        let mut dz = vec![0.0; l];
        let douts = [
            vec![wl * sign(logp_err)],
            vec![w.aux * sign(sa_err)],
            outs[2].iter().zip(&sample.fp).map(|(&o, &y)| w.aux * (sigmoid(o) - y) / nb).collect(),
        ];
        for ((layers, (acts, masks)), dout) in self.lay.heads.iter().zip(&head_cache).zip(douts) {
            let mut dy = dout;
            for i in (0..layers.len()).rev() {
                let mut dx = vec![0.0; layers[i].input];
                lin_back(self.p, grad, &layers[i], &acts[i], &dy, Some(&mut dx));
                if i > 0 {
                    for (d, m) in dx.iter_mut().zip(&masks[i - 1]) {
                        *d *= m;
                    }
                }
                dy = dx;
            }
            add_to(&mut dz, &dy);
        }

        let g = &self.lay.dec;
        let hs = cfg.hidden;
        let h3 = 3 * hs;
        let (wi, wh, _, _) = gru_mats(self.p, g);
        let mut dh = vec![0.0; hs];
        let mut dgi = vec![0.0; h3];
        let mut dh_prev = vec![0.0; hs];
        let mut sum_dgi = vec![0.0; h3];
        let mut dbh = vec![0.0; h3];
        for t in (0..=toks.len()).rev() {
            let prev = if t == 0 { BOS_ID } else { toks[t - 1] };
            let target = if t == toks.len() { EOS_ID } else { toks[t] } as usize;
            let mut dlogits = probs[t].clone();
            dlogits[target] -= 1.0;
            let s = &dec_steps[t];
            lin_back(self.p, grad, &self.lay.out, &s.h, &dlogits, Some(&mut dh));
            gru::backward(wh, s, &dh, &mut grad[g.wh..g.wh + h3 * hs], &mut dbh, &mut dgi, &mut dh_prev);
            add_to(&mut sum_dgi, &dgi);
            outer_add(&mut grad[g.wi..g.wi + h3 * g.input], g.input, 0, &dgi, emb(self.p, self.lay.dec_emb, e, prev));
            let o = self.lay.dec_emb + prev as usize * e;
            matvec_t_add(wi, g.input, 0, &dgi, &mut grad[o..o + e]);
            std::mem::swap(&mut dh, &mut dh_prev);
        }
        add_to(&mut grad[g.bh..g.bh + h3], &dbh);
        add_to(&mut grad[g.bi..g.bi + h3], &sum_dgi);
        outer_add(&mut grad[g.wi..g.wi + h3 * g.input], g.input, e, &sum_dgi, &z);
        matvec_t_add(wi, g.input, e, &sum_dgi, &mut dz);
        let dh0: Vec<f64> = dh.iter().zip(&h0).map(|(d, h)| d * (1.0 - h * h)).collect();
        lin_back(self.p, grad, &self.lay.dec_init, &z, &dh0, Some(&mut dz));

        let mut dmu = vec![0.0; l];
        let mut dlv = vec![0.0; l];
        for i in 0..l {
            dmu[i] = dz[i] + w.beta * mu[i];
            dlv[i] = 0.5 * w.beta * (lv[i].exp() - 1.0);
            if let Some(eta) = &eta {
                dlv[i] += dz[i] * eta[i] * 0.5 * (0.5 * lv[i]).exp();
            }
        }
        let mut denc = vec![0.0; 2 * hs];
        lin_back(self.p, grad, &self.lay.mu, &enc, &dmu, Some(&mut denc));
        lin_back(self.p, grad, &self.lay.logvar, &enc, &dlv, Some(&mut denc));
        if !toks.is_empty() {
            self.back_encoder_dir(grad, &self.lay.enc_fwd, toks, false, &fwd, &denc[..hs]);
            self.back_encoder_dir(grad, &self.lay.enc_bwd, toks, true, &bwd, &denc[hs..]);
        }
        parts
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
