//! Random corpora and brute-force retrieval oracles shared by the docstore
//! properties and the acceptance gate.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};

pub const VOCAB: [&str; 48] = [
    "ryan",
    "susie",
    "blaine",
    "dana",
    "marco",
    "emma",
    "liam",
    "noah",
    "meeting",
    "room",
    "sun",
    "apple",
    "gym",
    "study",
    "walk",
    "lunch",
    "morning",
    "evening",
    "warm",
    "cool",
    "degrees",
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "budget",
    "review",
    "client",
    "call",
    "robot",
    "medicine",
    "dinner",
    "reading",
    "party",
    "quiet",
    "whiteboard",
    "coffee",
    "window",
    "garden",
    "music",
    "laundry",
    "yoga",
    "report",
    "plan",
    "team",
    "doctor",
    "nap",
];

/// `n` one-chunk documents of 3–12 vocabulary words.
pub fn random_corpus(rng: &mut impl RngCore, n: usize) -> Vec<(String, String)> {
    (0..n)
        .map(|i| {
            let len = rng.random_range(3..=12);
            let words: Vec<&str> = (0..len).map(|_| *VOCAB.choose(rng).unwrap()).collect();
            (format!("d{i:03}"), words.join(" "))
        })
        .collect()
}

fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Full exact-scan cosine ranking over raw vectors: (index, score) sorted by
/// score descending, then index.
pub fn brute_force_cosine(query: &[f64], vectors: &[Vec<f64>]) -> Vec<(usize, f64)> {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let qn = norm(query);
    let mut scored: Vec<(usize, f64)> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let dot: f64 = query.iter().zip(v).map(|(a, b)| a * b).sum();
            let d = qn * norm(v);
            (i, if d == 0.0 { 0.0 } else { dot / d })
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored
}

/// Textbook BM25 (k1 = 1.2, b = 0.75) over raw texts; only positive scores.
pub fn brute_force_bm25(query: &str, texts: &[String]) -> Vec<(usize, f64)> {
    let docs: Vec<Vec<String>> = texts.iter().map(|t| tokens(t)).collect();
    let n = docs.len() as f64;
    let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let terms: BTreeSet<String> = tokens(query).into_iter().collect();
    let df: BTreeMap<&String, f64> =
        terms.iter().map(|t| (t, docs.iter().filter(|d| d.contains(t)).count() as f64)).collect();
    let mut scored = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        let mut score = 0.0;
        for t in &terms {
            let tf = d.iter().filter(|w| *w == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let idf = (1.0 + (n - df[t] + 0.5) / (df[t] + 0.5)).ln();
            score += idf * tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * d.len() as f64 / avg));
        }
        if score > 0.0 {
            scored.push((i, score));
        }
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored
}

/// Checks that `got` and `want` name the same items in the same order, letting
/// neighbours swap only when their scores agree to rounding error.
pub fn same_ranking(got: &[(usize, f64)], want: &[(usize, f64)]) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!("{} results, oracle has {}", got.len(), want.len()));
    }
    for (pos, (g, w)) in got.iter().zip(want).enumerate() {
        if (g.1 - w.1).abs() > 1e-9 {
            return Err(format!("score {} at position {pos}, oracle {}", g.1, w.1));
        }
        if g.0 != w.0 && (g.1 - w.1).abs() > 1e-12 {
            return Err(format!("item {} at position {pos}, oracle {}", g.0, w.0));
        }
    }
    Ok(())
}
