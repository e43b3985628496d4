use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::VaeConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    init: Init,
}

impl Slot {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    /// `encoder`, `decoder`, or `aux.<head>`.
    pub fn group(&self) -> String {
        let mut parts = self.name.split('.');
        let first = parts.next().unwrap_or_default();
        match first {
            "aux" => format!("aux.{}", parts.next().unwrap_or_default()),
            _ => first.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Init {
    Normal,
    Uniform(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Linear {
    pub w: usize,
    pub b: usize,
    pub input: usize,
    pub output: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Gru {
    pub wi: usize,
    pub wh: usize,
    pub bi: usize,
    pub bh: usize,
    pub input: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    slots: Vec<Slot>,
    total: usize,
    pub(crate) enc_emb: usize,
    pub(crate) enc_fwd: Gru,
    pub(crate) enc_bwd: Gru,
    pub(crate) mu: Linear,
    pub(crate) logvar: Linear,
    pub(crate) dec_emb: usize,
    pub(crate) dec_init: Linear,
    pub(crate) dec: Gru,
    pub(crate) out: Linear,
    pub(crate) heads: [Vec<Linear>; 3],
}

pub const HEAD_NAMES: [&str; 3] = ["logp", "sa", "fp"];

struct Builder {
    slots: Vec<Slot>,
    total: usize,
}

impl Builder {
    fn add(&mut self, name: String, shape: Vec<usize>, init: Init) -> usize {
        let offset = self.total;
        let slot = Slot { name, shape, offset, init };
        self.total += slot.len();
        self.slots.push(slot);
        offset
    }

    fn linear(&mut self, name: &str, input: usize, output: usize) -> Linear {
        let k = 1.0 / (input as f64).sqrt();
        let w = self.add(format!("{name}.weight"), vec![output, input], Init::Uniform(k));
        let b = self.add(format!("{name}.bias"), vec![output], Init::Uniform(k));
        Linear { w, b, input, output }
    }

    fn gru(&mut self, name: &str, input: usize, hidden: usize) -> Gru {
        let k = 1.0 / (hidden as f64).sqrt();
        let wi = self.add(format!("{name}.w_ih"), vec![3 * hidden, input], Init::Uniform(k));
        let wh = self.add(format!("{name}.w_hh"), vec![3 * hidden, hidden], Init::Uniform(k));
        let bi = self.add(format!("{name}.b_ih"), vec![3 * hidden], Init::Uniform(k));
        let bh = self.add(format!("{name}.b_hh"), vec![3 * hidden], Init::Uniform(k));
        Gru { wi, wh, bi, bh, input, hidden }
    }
}

impl Layout {
    pub fn new(cfg: &VaeConfig) -> Self {
        let (v, e, h, l) = (cfg.vocab_size, cfg.embed_dim, cfg.hidden, cfg.latent_dim);
        let mut b = Builder { slots: Vec::new(), total: 0 };
        let enc_emb = b.add("encoder.embedding".into(), vec![v, e], Init::Normal);
        let enc_fwd = b.gru("encoder.fwd", e, h);
        let enc_bwd = b.gru("encoder.bwd", e, h);
        let mu = b.linear("encoder.mu", 2 * h, l);
        let logvar = b.linear("encoder.logvar", 2 * h, l);
        let dec_emb = b.add("decoder.embedding".into(), vec![v, e], Init::Normal);
        let dec_init = b.linear("decoder.init", l, h);
        let dec = b.gru("decoder.gru", e + l, h);
        let out = b.linear("decoder.out", h, v);
        let outputs = [1, 1, cfg.fp_bits];
        let heads = std::array::from_fn(|k| {
            let mut dims = vec![l];
            dims.extend(std::iter::repeat_n(cfg.aux_hidden, cfg.aux_layers.saturating_sub(1)));
            dims.push(outputs[k]);
            dims.windows(2)
                .enumerate()
                .map(|(i, w)| b.linear(&format!("aux.{}.{i}", HEAD_NAMES[k]), w[0], w[1]))
                .collect()
        });
        Layout {
            slots: b.slots,
            total: b.total,
            enc_emb,
            enc_fwd,
            enc_bwd,
            mu,
            logvar,
            dec_emb,
            dec_init,
            dec,
            out,
            heads,
        }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot(&self, name: &str) -> Option<&Slot> {
        self.slots.iter().find(|s| s.name == name)
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn groups(&self) -> Vec<String> {
        let mut g: Vec<String> = Vec::new();
        for s in &self.slots {
            let name = s.group();
            if !g.contains(&name) {
                g.push(name);
            }
        }
        g
    }

    /// Embeddings from N(0,1), everything else U(-k, k) with k = 1/sqrt(fan-in).
    pub fn initialize(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.total];
        for s in &self.slots {
            for x in &mut p[s.range()] {
                let v = match s.init {
                    Init::Normal => StandardNormal.sample(rng),
                    Init::Uniform(k) => rng.random_range(-k..=k),
                };
                *x = v as f32 as f64;
            }
        }
        p
    }
}
