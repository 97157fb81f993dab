//! Two-layer per-pixel MLP trained with Adam.
//!
//! `features -> hidden (ReLU) -> classes (softmax | sigmoid)`. Parameters are a
//! single flat vector laid out as `[W1 (hidden x inputs), b1, W2 (classes x hidden), b2]`.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::loss::{focal_term, focal_term_grad, LossKind, DICE_SMOOTH};
use super::{FeatureGrid, LearnerConfig, LearnerError, ProbabilityMap};
use crate::volume::LabelMode;

/// Slices with more pixels contribute a fresh random subset of this size each epoch.
pub const MAX_PIXELS_PER_SLICE: usize = 4096;
const SEQUENTIAL_PIXELS: usize = 4096;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// One training slice: its features, its (true or pseudo) label mask and a loss weight.
#[derive(Clone, Copy, Debug)]
pub struct TrainingSample<'a> {
    pub features: &'a FeatureGrid,
    pub mask: &'a [u8],
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    /// Mean mini-batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

/// Weights, optimizer moments and the generator driving shuffles and subsampling.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub(super) inputs: usize,
    pub(super) hidden: usize,
    pub(super) classes: usize,
    pub(super) mode: LabelMode,
    pub(super) params: Vec<f64>,
    pub(super) first_moment: Vec<f64>,
    pub(super) second_moment: Vec<f64>,
    pub(super) step: u64,
    pub(super) rng: ChaCha8Rng,
}

struct Scratch {
    z1: Vec<f64>,
    hidden: Vec<f64>,
    probs: Vec<f64>,
    dprob: Vec<f64>,
    dz2: Vec<f64>,
    dz1: Vec<f64>,
}

impl Scratch {
    fn new(hidden: usize, classes: usize) -> Self {
        Scratch {
            z1: vec![0.0; hidden],
            hidden: vec![0.0; hidden],
            probs: vec![0.0; classes],
            dprob: vec![0.0; classes],
            dz2: vec![0.0; classes],
            dz1: vec![0.0; hidden],
        }
    }
}

pub(super) fn param_count(inputs: usize, hidden: usize, classes: usize) -> usize {
    hidden * inputs + hidden + classes * hidden + classes
}

impl ModelState {
    /// Seeded Glorot-uniform weights and zero biases.
    pub fn new(inputs: usize, hidden: usize, classes: usize, mode: LabelMode, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(inputs, hidden, classes));
        let limit1 = (6.0 / (inputs + hidden) as f64).sqrt();
        params.extend((0..hidden * inputs).map(|_| rng.random_range(-limit1..=limit1)));
        params.extend(std::iter::repeat_n(0.0, hidden));
        let limit2 = (6.0 / (hidden + classes) as f64).sqrt();
        params.extend((0..classes * hidden).map(|_| rng.random_range(-limit2..=limit2)));
        params.extend(std::iter::repeat_n(0.0, classes));
        let n = params.len();
        ModelState {
            inputs,
            hidden,
            classes,
            mode,
            params,
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            step: 0,
            rng,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn label_mode(&self) -> LabelMode {
        self.mode
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) {
        assert_eq!(params.len(), self.params.len());
        self.params = params;
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    fn split_params(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let (w1, rest) = self.params.split_at(self.hidden * self.inputs);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.classes * self.hidden);
        (w1, b1, w2, b2)
    }

    fn check_features(&self, features: &FeatureGrid) -> Result<(), LearnerError> {
        if features.features() != self.inputs {
            return Err(LearnerError::Argument(format!(
                "model expects {} features per pixel, got {}",
                self.inputs,
                features.features()
            )));
        }
        if features.pixels() == 0 {
            return Err(LearnerError::Argument("empty feature grid".into()));
        }
        Ok(())
    }

    #[inline]
    fn forward(&self, x: &[f64], s: &mut Scratch) {
        let (w1, b1, w2, b2) = self.split_params();
        for k in 0..self.hidden {
            let row = &w1[k * self.inputs..(k + 1) * self.inputs];
            let z = b1[k] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            s.z1[k] = z;
            s.hidden[k] = if z > 0.0 { z } else { 0.0 };
        }
        for c in 0..self.classes {
            let row = &w2[c * self.hidden..(c + 1) * self.hidden];
            s.probs[c] = b2[c] + row.iter().zip(&s.hidden).map(|(w, v)| w * v).sum::<f64>();
        }
        match self.mode {
            LabelMode::SingleLabel => {
                let max = s.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for p in s.probs.iter_mut() {
                    *p = (*p - max).exp();
                    total += *p;
                }
                for p in s.probs.iter_mut() {
                    *p /= total;
                }
            }
            LabelMode::MultiLabel => {
                for p in s.probs.iter_mut() {
                    *p = 1.0 / (1.0 + (-*p).exp());
                }
            }
        }
    }

    pub fn predict_proba(&self, features: &FeatureGrid) -> Result<ProbabilityMap, LearnerError> {
        self.check_features(features)?;
        let n = features.pixels();
        let mut values = vec![0.0; self.classes * n];
        let mut s = Scratch::new(self.hidden, self.classes);
        for p in 0..n {
            self.forward(features.pixel(p), &mut s);
            for c in 0..self.classes {
                let v = s.probs[c];
                if !v.is_finite() {
                    return Err(LearnerError::Numeric {
                        pixel: p,
                        context: format!("class {c} probability is {v}"),
                    });
                }
                values[c * n + p] = v;
            }
        }
        Ok(ProbabilityMap::new(
            self.classes,
            features.height(),
            features.width(),
            values,
        ))
    }

    /// Hidden activations max-pooled over all pixels.
    pub fn embed_slice(&self, features: &FeatureGrid) -> Result<Vec<f64>, LearnerError> {
        self.check_features(features)?;
        let mut s = Scratch::new(self.hidden, self.classes);
        let mut pooled = vec![f64::NEG_INFINITY; self.hidden];
        for p in 0..features.pixels() {
            self.forward(features.pixel(p), &mut s);
            for (m, &h) in pooled.iter_mut().zip(&s.hidden) {
                if !h.is_finite() {
                    return Err(LearnerError::Numeric {
                        pixel: p,
                        context: "hidden activation".into(),
                    });
                }
                *m = m.max(h);
            }
        }
        Ok(pooled)
    }

    /// Adds `weight * d(pixel losses)/d(params)` of one slice into `grad` and
    /// returns the weighted sum of per-pixel losses.
    fn accumulate<G>(
        &self,
        sample: &TrainingSample<'_>,
        pixels: Option<&[usize]>,
        grad: &mut [f64],
        mut dloss: G,
    ) -> f64
    where
        G: FnMut(&[f64], u8, &mut [f64]) -> f64,
    {
        let (_, _, w2, _) = self.split_params();
        let (hi, hh, ch) = (
            self.hidden * self.inputs,
            self.hidden,
            self.classes * self.hidden,
        );
        let mut s = Scratch::new(self.hidden, self.classes);
        let mut total = 0.0;
        let w = sample.weight;
        let mut visit = |p: usize| {
            let x = sample.features.pixel(p);
            self.forward(x, &mut s);
            total += w * dloss(&s.probs, sample.mask[p], &mut s.dprob);
            match self.mode {
                LabelMode::SingleLabel => {
                    let dot: f64 = s.dprob.iter().zip(&s.probs).map(|(g, p)| g * p).sum();
                    for c in 0..self.classes {
                        s.dz2[c] = w * s.probs[c] * (s.dprob[c] - dot);
                    }
                }
                LabelMode::MultiLabel => {
                    for c in 0..self.classes {
                        let p = s.probs[c];
                        s.dz2[c] = w * s.dprob[c] * p * (1.0 - p);
                    }
                }
            }
            let (g_w1, rest) = grad.split_at_mut(hi);
            let (g_b1, rest) = rest.split_at_mut(hh);
            let (g_w2, g_b2) = rest.split_at_mut(ch);
            for k in 0..self.hidden {
                s.dz1[k] = 0.0;
            }
            for c in 0..self.classes {
                let d = s.dz2[c];
                g_b2[c] += d;
                let row = &mut g_w2[c * self.hidden..(c + 1) * self.hidden];
                let wrow = &w2[c * self.hidden..(c + 1) * self.hidden];
                for k in 0..self.hidden {
                    row[k] += d * s.hidden[k];
                    s.dz1[k] += d * wrow[k];
                }
            }
            for k in 0..self.hidden {
                if s.z1[k] <= 0.0 {
                    continue;
                }
                let d = s.dz1[k];
                g_b1[k] += d;
                let row = &mut g_w1[k * self.inputs..(k + 1) * self.inputs];
                for (g, v) in row.iter_mut().zip(x) {
                    *g += d * v;
                }
            }
        };
        match pixels {
            Some(list) => list.iter().for_each(|&p| visit(p)),
            None => (0..sample.features.pixels()).for_each(&mut visit),
        }
        total
    }

    /// Weighted soft-Dice sums `(sum p t, sum p, sum t)` per class.
    fn dice_sums(&self, sample: &TrainingSample<'_>, pixels: Option<&[usize]>) -> Vec<[f64; 3]> {
        let mut s = Scratch::new(self.hidden, self.classes);
        let mut sums = vec![[0.0; 3]; self.classes];
        let mut visit = |p: usize| {
            self.forward(sample.features.pixel(p), &mut s);
            let label = sample.mask[p] as usize;
            for (c, acc) in sums.iter_mut().enumerate() {
                let t = if label == c { 1.0 } else { 0.0 };
                acc[0] += sample.weight * s.probs[c] * t;
                acc[1] += sample.weight * s.probs[c];
                acc[2] += sample.weight * t;
            }
        };
        match pixels {
            Some(list) => list.iter().for_each(|&p| visit(p)),
            None => (0..sample.features.pixels()).for_each(&mut visit),
        }
        sums
    }

    fn batch_gradient(
        &self,
        items: &[(&TrainingSample<'_>, Option<&[usize]>)],
        kind: LossKind,
        gamma: f64,
    ) -> (f64, Vec<f64>) {
        let n = self.params.len();
        let classes = self.classes;
        let mode = self.mode;
        let pixels: usize = items
            .iter()
            .map(|(s, px)| px.map_or(s.features.pixels(), |p| p.len()))
            .sum();
        // small batches are cheaper without per-slice buffers
        let sequential = pixels <= SEQUENTIAL_PIXELS;
        let map_items = |f: &(dyn Fn(&TrainingSample<'_>, Option<&[usize]>, &mut [f64]) -> f64
                               + Sync)| {
            if sequential {
                let mut g = vec![0.0; n];
                let l = items.iter().map(|(s, px)| f(s, *px, &mut g)).sum::<f64>();
                vec![(l, g)]
            } else {
                items
                    .par_iter()
                    .map(|(s, px)| {
                        let mut g = vec![0.0; n];
                        let l = f(s, *px, &mut g);
                        (l, g)
                    })
                    .collect()
            }
        };
        let sum_parts = |parts: Vec<(f64, Vec<f64>)>| {
            let mut loss = 0.0;
            let mut grad = vec![0.0; n];
            for (l, g) in parts {
                loss += l;
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += b;
                }
            }
            (loss, grad)
        };
        match kind {
            LossKind::Dice => {
                let per_item: Vec<Vec<[f64; 3]>> = items
                    .par_iter()
                    .map(|(s, px)| self.dice_sums(s, *px))
                    .collect();
                let mut sums = vec![[0.0; 3]; classes];
                for item in &per_item {
                    for (acc, v) in sums.iter_mut().zip(item) {
                        for i in 0..3 {
                            acc[i] += v[i];
                        }
                    }
                }
                let fg = (classes - 1) as f64;
                let loss = (1..classes)
                    .map(|c| {
                        let [i, p, t] = sums[c];
                        1.0 - (2.0 * i + DICE_SMOOTH) / (p + t + DICE_SMOOTH)
                    })
                    .sum::<f64>()
                    / fg;
                let parts = map_items(&|s, px, g| {
                    self.accumulate(s, px, g, |_, label, dprob| {
                        dprob[0] = 0.0;
                        for c in 1..classes {
                            let [i, p, t] = sums[c];
                            let denom = p + t + DICE_SMOOTH;
                            let tc = if label as usize == c { 1.0 } else { 0.0 };
                            dprob[c] = -(2.0 * tc * denom - (2.0 * i + DICE_SMOOTH))
                                / (denom * denom)
                                / fg;
                        }
                        0.0
                    });
                    0.0
                });
                let (_, grad) = sum_parts(parts);
                (loss, grad)
            }
            LossKind::Focal | LossKind::CrossEntropy => {
                let gamma = if kind == LossKind::CrossEntropy {
                    0.0
                } else {
                    gamma
                };
                let total_weight: f64 = items
                    .iter()
                    .map(|(s, px)| s.weight * px.map_or(s.features.pixels(), |p| p.len()) as f64)
                    .sum();
                let parts = map_items(&|s, px, g| {
                    self.accumulate(s, px, g, |probs, label, dprob| match mode {
                        LabelMode::SingleLabel => {
                            dprob.fill(0.0);
                            let t = label as usize;
                            dprob[t] = focal_term_grad(probs[t], gamma);
                            focal_term(probs[t], gamma)
                        }
                        LabelMode::MultiLabel => {
                            let mut l = 0.0;
                            for c in 0..classes {
                                let (pt, sign) = if label as usize == c {
                                    (probs[c], 1.0)
                                } else {
                                    (1.0 - probs[c], -1.0)
                                };
                                l += focal_term(pt, gamma);
                                dprob[c] = sign * focal_term_grad(pt, gamma) / classes as f64;
                            }
                            l / classes as f64
                        }
                    })
                });
                let (loss, mut grad) = sum_parts(parts);
                if total_weight > 0.0 {
                    grad.iter_mut().for_each(|g| *g /= total_weight);
                    (loss / total_weight, grad)
                } else {
                    (0.0, grad)
                }
            }
        }
    }

    /// Loss and analytic parameter gradient over every pixel of `samples`,
    /// treated as one mini-batch.
    pub fn loss_and_gradient(
        &self,
        samples: &[TrainingSample<'_>],
        kind: LossKind,
        gamma: f64,
    ) -> Result<(f64, Vec<f64>), LearnerError> {
        for s in samples {
            self.check_sample(s)?;
        }
        let items: Vec<_> = samples.iter().map(|s| (s, None)).collect();
        Ok(self.batch_gradient(&items, kind, gamma))
    }

    fn check_sample(&self, sample: &TrainingSample<'_>) -> Result<(), LearnerError> {
        self.check_features(sample.features)?;
        if sample.mask.len() != sample.features.pixels() {
            return Err(LearnerError::Argument(format!(
                "mask has {} pixels, features have {}",
                sample.mask.len(),
                sample.features.pixels()
            )));
        }
        if let Some(&l) = sample.mask.iter().find(|&&l| l as usize >= self.classes) {
            return Err(LearnerError::Argument(format!(
                "label {l} exceeds {} classes",
                self.classes
            )));
        }
        if !(sample.weight >= 0.0) || !sample.weight.is_finite() {
            return Err(LearnerError::Argument(format!(
                "invalid sample weight {}",
                sample.weight
            )));
        }
        Ok(())
    }

    fn adam_step(&mut self, grad: &[f64], lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - BETA1.powi(t);
        let bias2 = 1.0 - BETA2.powi(t);
        for (((p, m), v), &g) in self
            .params
            .iter_mut()
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
            .zip(grad)
        {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }

    /// Runs `config.epochs_per_iteration` epochs of shuffled mini-batch Adam,
    /// continuing from the current weights, moments and generator state.
    pub fn train_epochs(
        &mut self,
        samples: &[TrainingSample<'_>],
        config: &LearnerConfig,
    ) -> Result<TrainReport, LearnerError> {
        // a zero learning rate is accepted here (it freezes the weights); the
        // run-level config still requires a positive one
        if !(config.learning_rate >= 0.0) || !config.learning_rate.is_finite() {
            return Err(LearnerError::Argument(format!(
                "invalid learning rate {}",
                config.learning_rate
            )));
        }
        if config.epochs_per_iteration == 0 || config.batch_size == 0 {
            return Err(LearnerError::Argument(
                "epochs and batch size must be >= 1".into(),
            ));
        }
        if samples.is_empty() {
            return Err(LearnerError::Argument("empty training set".into()));
        }
        for s in samples {
            self.check_sample(s)?;
        }
        let mut report = TrainReport::default();
        for _ in 0..config.epochs_per_iteration {
            // slices in random order, pixels shuffled within each slice, so a
            // batch touches few slices
            let mut order: Vec<usize> = (0..samples.len()).collect();
            order.shuffle(&mut self.rng);
            let mut pairs: Vec<(u32, u32)> = Vec::new();
            for i in order {
                let n = samples[i].features.pixels();
                let start = pairs.len();
                if n > MAX_PIXELS_PER_SLICE {
                    let idx = index::sample(&mut self.rng, n, MAX_PIXELS_PER_SLICE);
                    pairs.extend(idx.into_iter().map(|p| (i as u32, p as u32)));
                } else {
                    pairs.extend((0..n as u32).map(|p| (i as u32, p)));
                }
                pairs[start..].shuffle(&mut self.rng);
            }
            let mut loss_sum = 0.0;
            let mut batches = 0usize;
            let mut batch: Vec<(u32, u32)> = Vec::with_capacity(config.batch_size);
            for chunk in pairs.chunks(config.batch_size) {
                batch.clear();
                batch.extend_from_slice(chunk);
                batch.sort_unstable();
                let groups: Vec<(usize, Vec<usize>)> = batch
                    .chunk_by(|a, b| a.0 == b.0)
                    .map(|g| {
                        (
                            g[0].0 as usize,
                            g.iter().map(|&(_, p)| p as usize).collect(),
                        )
                    })
                    .collect();
                let items: Vec<_> = groups
                    .iter()
                    .map(|(i, px)| (&samples[*i], Some(px.as_slice())))
                    .collect();
                let (loss, grad) =
                    self.batch_gradient(&items, config.loss_kind, config.focal_gamma);
                if !loss.is_finite() {
                    return Err(LearnerError::Numeric {
                        pixel: 0,
                        context: format!("training loss is {loss}"),
                    });
                }
                if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
                    return Err(LearnerError::Numeric {
                        pixel: 0,
                        context: format!("gradient component {i} is not finite"),
                    });
                }
                self.adam_step(&grad, config.learning_rate);
                loss_sum += loss;
                batches += 1;
            }
            report.epoch_losses.push(loss_sum / batches as f64);
        }
        Ok(report)
    }
}
