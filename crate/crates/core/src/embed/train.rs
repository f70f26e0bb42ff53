use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{PerRelation, TrainConfig};
use super::encoder::{axpy, dot, sigmoid};
use super::model::{EmbeddingModel, EpochRecord};
use super::vectors::WordVectors;
use super::EmbedError;
use crate::graph::{negative_sample, split_validation, AdGraph, Adjacency, EdgeSets, NodeId, NodeKind, Relation};

/// One pairwise comparison: anchor `source` should score `positive` above
/// `negative` under `relation`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Term {
    pub relation: Relation,
    pub source: usize,
    pub positive: usize,
    pub negative: usize,
}

/// ln(1 + e^x) without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// -log sigma(o.mp - o.mn).
pub fn pair_loss(o: &[f64], mp: &[f64], mn: &[f64]) -> f64 {
    softplus(dot(o, mn) - dot(o, mp))
}

/// One term per (edge, negative). Edges whose negative pool is empty
/// contribute nothing.
pub fn draw_terms<R: Rng + ?Sized>(
    adj: &Adjacency,
    edges: &EdgeSets,
    negatives: &PerRelation<usize>,
    rng: &mut R,
) -> Vec<Term> {
    let mut terms = Vec::new();
    for r in Relation::ALL {
        for e in edges.get(r) {
            let Ok(neg) = negative_sample(adj, r, e.source, negatives.get(r), rng) else {
                continue;
            };
            terms.extend(neg.into_iter().map(|n| Term {
                relation: r,
                source: e.source,
                positive: e.target,
                negative: n.index,
            }));
        }
    }
    terms
}

/// Token ids into the model's word-vector table, one list per graph ad.
pub fn ad_inputs(model: &EmbeddingModel, graph: &AdGraph) -> Vec<Vec<Option<usize>>> {
    graph.ads.iter().map(|a| model.lookup(&a.tokens)).collect()
}

/// Mean lambda-weighted loss over `terms`. When `grad` is given (same length
/// as the model's parameters) the gradient of that mean is added to it.
pub fn loss_and_grad(
    model: &EmbeddingModel,
    ads: &[Vec<Option<usize>>],
    terms: &[Term],
    lambda: &PerRelation<f64>,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    if terms.is_empty() {
        return 0.0;
    }
    let mut ad_emb: Vec<Option<Vec<f64>>> = vec![None; ads.len()];
    for t in terms {
        if t.relation.source_kind() == NodeKind::Ad && ad_emb[t.source].is_none() {
            ad_emb[t.source] = Some(model.encode_ids(&ads[t.source]));
        }
    }
    let mut d_ad: Vec<Option<Vec<f64>>> = vec![None; ads.len()];
    let scale = 1.0 / terms.len() as f64;
    let mut total = 0.0;
    for t in terms {
        let src_kind = t.relation.source_kind();
        let dst_kind = t.relation.target_kind();
        let src_range = (src_kind != NodeKind::Ad).then(|| model.node_range(NodeId::new(src_kind, t.source)));
        let o: &[f64] = match &src_range {
            Some(r) => &model.params[r.clone()],
            None => ad_emb[t.source].as_deref().expect("encoded above"),
        };
        let pr = model.node_range(NodeId::new(dst_kind, t.positive));
        let nr = model.node_range(NodeId::new(dst_kind, t.negative));
        let (mp, mn) = (&model.params[pr.clone()], &model.params[nr.clone()]);
        let margin = dot(o, mp) - dot(o, mn);
        let weight = lambda.get(t.relation);
        total += weight * softplus(-margin);
        let Some(g) = grad.as_deref_mut() else { continue };
        if weight == 0.0 {
            continue;
        }
        // d/d(margin) of softplus(-margin) is -sigma(-margin).
        let coef = -weight * sigmoid(-margin) * scale;
        let o = o.to_vec();
        let diff: Vec<f64> = mp.iter().zip(mn).map(|(a, b)| a - b).collect();
        axpy(coef, &o, &mut g[pr]);
        axpy(-coef, &o, &mut g[nr]);
        match src_range {
            Some(r) => axpy(coef, &diff, &mut g[r]),
            None => {
                let d = d_ad[t.source].get_or_insert_with(|| vec![0.0; model.dim]);
                axpy(coef, &diff, d);
            }
        }
    }
    if let Some(g) = grad {
        let shape = model.shape();
        let off = model.encoder_offset();
        let enc = model.encoder_params();
        for (i, d) in d_ad.iter().enumerate() {
            if let Some(d) = d {
                shape.backward(enc, &model.inputs(&ads[i]), d, &mut g[off..]);
            }
        }
    }
    total * scale
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

/// Full-batch training with per-epoch negative resampling and early stopping
/// on held-out edges. Returns the parameters of the best validation epoch,
/// counting the untrained model as epoch 0.
pub fn train(graph: &AdGraph, vectors: &WordVectors, config: &TrainConfig) -> Result<EmbeddingModel, EmbedError> {
    config.validate()?;
    if graph.edges.total() == 0 {
        return Err(EmbedError::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = EmbeddingModel::init(graph, vectors, config, &mut rng);
    let ads = ad_inputs(&model, graph);
    let adj = graph.adjacency();
    let split = split_validation(graph, config.validation_fraction, config.seed)
        .map_err(|e| EmbedError::Config(e.to_string()))?;
    // Tiny graphs may have nothing to hold out; fall back to training edges.
    let held_out = if split.validation.total() > 0 {
        &split.validation
    } else {
        &split.train
    };
    let val_terms = draw_terms(&adj, held_out, &config.negatives, &mut rng);

    let mut best_loss = loss_and_grad(&model, &ads, &val_terms, &config.lambda, None);
    let mut best_params = model.params.clone();
    let mut history = vec![EpochRecord {
        epoch: 0,
        train_loss: None,
        validation_loss: best_loss,
    }];
    let mut adam = Adam::new(model.params.len(), config.lr);
    let mut grad = vec![0.0; model.params.len()];
    let mut stale = 0;
    for epoch in 1..=config.max_epochs {
        let terms = draw_terms(&adj, &split.train, &config.negatives, &mut rng);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let train_loss = loss_and_grad(&model, &ads, &terms, &config.lambda, Some(&mut grad));
        adam.step(&mut model.params, &grad);
        if model.params.iter().any(|p| !p.is_finite()) {
            return Err(EmbedError::NonFinite { epoch });
        }
        let val = loss_and_grad(&model, &ads, &val_terms, &config.lambda, None);
        history.push(EpochRecord {
            epoch,
            train_loss: Some(train_loss),
            validation_loss: val,
        });
        if val < best_loss {
            best_loss = val;
            best_params.copy_from_slice(&model.params);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    model.params = best_params;
    model.history = history;
    Ok(model)
}
