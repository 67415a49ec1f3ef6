//! Logit transforms and next-token selection.

use rand::Rng;

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&l| l - log_z).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Index of the largest logit; ties go to the lowest id.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &l) in logits.iter().enumerate().skip(1) {
        if l > logits[best] {
            best = i;
        }
    }
    best
}

/// Ids of the smallest high-probability prefix whose mass reaches `top_p`,
/// returned in ascending id order. Probability ties rank lower ids first.
pub fn nucleus(probs: &[f64], top_p: f64) -> Vec<usize> {
    if top_p >= 1.0 {
        return (0..probs.len()).collect();
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let mut mass = 0.0;
    let mut keep = 0;
    for &i in &order {
        mass += probs[i];
        keep += 1;
        if mass >= top_p {
            break;
        }
    }
    let mut kept = order[..keep].to_vec();
    kept.sort_unstable();
    kept
}

/// Greedy when `temperature == 0`, otherwise temperature-scaled nucleus
/// sampling. Draws exactly one uniform from `rng` per sampled token.
pub fn sample_next<R: Rng + ?Sized>(logits: &[f64], temperature: f64, top_p: f64, rng: &mut R) -> usize {
    if temperature == 0.0 {
        return argmax(logits);
    }
    let scaled: Vec<f64> = logits.iter().map(|&l| l / temperature).collect();
    let probs = softmax(&scaled);
    let kept = nucleus(&probs, top_p);
    let mass: f64 = kept.iter().map(|&i| probs[i]).sum();
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for &i in &kept {
        cum += probs[i] / mass;
        if u < cum {
            return i;
        }
    }
    *kept.last().expect("nucleus is never empty")
}
