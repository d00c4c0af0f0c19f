//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use halluc_core::dpo::{tokenize, ToyPolicy};
use halluc_core::model::{Language, PreferencePair};
use serde::Deserialize;

/// Central finite-difference gradient of the mean DPO batch loss.
///
/// For coordinate `i` the loss difference `L(w + h e_i) - L(w - h e_i)` is
/// evaluated pair by pair. The margin change only depends on the per-token
/// log-probability changes of the two policies (the reference cancels), and
/// `softplus(-z+) - softplus(-z-) = ln1p(sigmoid(-z-) * expm1(-(z+ - z-)))`
/// avoids subtracting two numbers near ln 2.
pub fn fd_gradient(
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    batch: &[PreferencePair],
    beta: f64,
    h: f64,
) -> Vec<f64> {
    let margin = |p: &ToyPolicy, pair: &PreferencePair| -> f64 {
        let ctx = pair.policy_context();
        let pos = tokenize(&pair.y_pos);
        let neg = tokenize(&pair.y_neg);
        let pp: f64 = p.sequence_logprob(&ctx, &pos).unwrap();
        let pn: f64 = p.sequence_logprob(&ctx, &neg).unwrap();
        let rp: f64 = reference.sequence_logprob(&ctx, &pos).unwrap();
        let rn: f64 = reference.sequence_logprob(&ctx, &neg).unwrap();
        beta * (pp - rp) - beta * (pn - rn)
    };
    let delta = |plus: &ToyPolicy, minus: &ToyPolicy, pair: &PreferencePair| -> f64 {
        let ctx = pair.policy_context();
        let diff = |text: &str| -> f64 {
            let toks = tokenize(text);
            let a = plus.token_logprobs(&ctx, &toks).unwrap();
            let b = minus.token_logprobs(&ctx, &toks).unwrap();
            a.iter().zip(&b).map(|(x, y)| x - y).sum()
        };
        beta * (diff(&pair.y_pos) - diff(&pair.y_neg))
    };
    let sigmoid = |x: f64| 1.0 / (1.0 + (-x).exp());

    (0..policy.logits().len())
        .map(|i| {
            let mut plus = policy.clone();
            plus.logits_mut()[i] += h;
            let mut minus = policy.clone();
            minus.logits_mut()[i] -= h;
            let total: f64 = batch
                .iter()
                .map(|pair| {
                    let z_minus = margin(&minus, pair);
                    let dz = delta(&plus, &minus, pair);
                    (sigmoid(-z_minus) * (-dz).exp_m1()).ln_1p()
                })
                .sum();
            total / (2.0 * h) / batch.len() as f64
        })
        .collect()
}

/// Largest relative error over coordinates whose analytic value exceeds
/// `floor` in magnitude.
pub fn worst_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .filter(|(a, _)| a.abs() > floor)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()))
        .fold(0.0, f64::max)
}

/// Norm-wise relative error `|a - n| / max(|a|, |n|)` in the Euclidean norm.
pub fn relative_error_norm(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, n)| a - n));
    let scale = norm(&mut analytic.iter().copied()).max(norm(&mut numeric.iter().copied()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Clipped n-gram matches by direct enumeration: an n-gram occurrence in the
/// candidate counts while fewer earlier copies exist than the reference holds.
pub fn brute_force_clipped(cand: &[String], refr: &[String], n: usize) -> (usize, usize) {
    if cand.len() < n {
        return (0, 0);
    }
    let occurrences = |seq: &[String], g: &[String]| {
        if seq.len() < n {
            return 0;
        }
        (0..=seq.len() - n).filter(|&i| &seq[i..i + n] == g).count()
    };
    let mut matched = 0;
    for i in 0..=cand.len() - n {
        let g = &cand[i..i + n];
        if occurrences(&cand[..i + n - 1], g) < occurrences(refr, g) {
            matched += 1;
        }
    }
    (matched, cand.len() - n + 1)
}

/// Unsmoothed sentence BLEU from the brute-force counts; orders longer than
/// the candidate are skipped.
pub fn brute_force_bleu(cand: &[String], refr: &[String], max_n: usize) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    let mut logs = Vec::new();
    for n in 1..=max_n {
        let (m, t) = brute_force_clipped(cand, refr, n);
        if t == 0 {
            continue;
        }
        if m == 0 {
            return 0.0;
        }
        logs.push((m as f64 / t as f64).ln());
    }
    let geo = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
    let (c, r) = (cand.len() as f64, refr.len() as f64);
    let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    bp * geo
}

#[derive(Deserialize)]
struct Sample {
    language: Language,
    text: String,
}

/// The seeded 13-language held-out corpus, 100 sentences per language.
pub fn heldout() -> Vec<(Language, String)> {
    include_str!("../fixtures/langid_heldout.jsonl")
        .lines()
        .map(|l| {
            let s: Sample = serde_json::from_str(l).unwrap();
            (s.language, s.text)
        })
        .collect()
}
