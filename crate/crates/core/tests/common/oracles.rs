//! Brute-force metric oracles. They share no code with the library: n-grams
//! are counted by linear scans over whitespace-split words.

use std::collections::HashMap;

/// (candidate, references). All lowercase, single-space separated, so a
/// whitespace split gives the same tokens as the library tokenizer.
pub const TOY: [(&str, &[&str]); 5] = [
    ("the cat sat on the mat", &["the cat is on the mat", "a cat sat on a mat"]),
    ("a dog runs in the park", &["the dog runs through the park"]),
    ("two birds fly over blue water", &["two birds are flying over the water", "birds fly over water"]),
    ("a man rides a red bike", &["a man is riding a bike", "the man on a red bike", "red bike"]),
    ("sunset", &["the sun sets over the quiet lake"]),
];

fn words(s: &str) -> Vec<&str> {
    s.split(' ').filter(|w| !w.is_empty()).collect()
}

fn ngrams<'a>(t: &[&'a str], n: usize) -> Vec<Vec<&'a str>> {
    if t.len() < n {
        return Vec::new();
    }
    (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
}

fn count(list: &[Vec<&str>], g: &[&str]) -> usize {
    list.iter().filter(|x| x.as_slice() == g).count()
}

/// (clipped matches, candidate n-gram total) for one order.
fn clipped(cand: &[&str], refs: &[Vec<&str>], n: usize) -> (usize, usize) {
    let cg = ngrams(cand, n);
    let mut seen: Vec<Vec<&str>> = Vec::new();
    let mut matches = 0;
    for g in &cg {
        if seen.contains(g) {
            continue;
        }
        seen.push(g.clone());
        let max_ref = refs.iter().map(|r| count(&ngrams(r, n), g)).max().unwrap_or(0);
        matches += count(&cg, g).min(max_ref);
    }
    (matches, cg.len())
}

fn closest_ref_len(c: usize, refs: &[Vec<&str>]) -> usize {
    let mut best = refs[0].len();
    for r in refs {
        let (d, bd) = (r.len().abs_diff(c), best.abs_diff(c));
        if d < bd || (d == bd && r.len() < best) {
            best = r.len();
        }
    }
    best
}

pub fn oracle_sentence_bleu(cand: &str, refs: &[&str], n: usize) -> f64 {
    let c = words(cand);
    let r: Vec<Vec<&str>> = refs.iter().map(|x| words(x)).collect();
    if c.is_empty() || clipped(&c, &r, 1).0 == 0 {
        return 0.0;
    }
    let mut log_p = 0.0;
    for k in 1..=n {
        let (m, t) = clipped(&c, &r, k);
        let p = if m > 0 { m as f64 / t as f64 } else { 1.0 / (2.0 * t.max(1) as f64) };
        log_p += p.ln();
    }
    let rl = closest_ref_len(c.len(), &r) as f64;
    let bp = if (c.len() as f64) > rl { 1.0 } else { (1.0 - rl / c.len() as f64).exp() };
    bp * (log_p / n as f64).exp()
}

pub fn oracle_corpus_bleu(pairs: &[(&str, &[&str])], n: usize) -> f64 {
    let mut m = vec![0usize; n];
    let mut t = vec![0usize; n];
    let (mut cl, mut rl) = (0usize, 0usize);
    for (cand, refs) in pairs {
        let c = words(cand);
        let r: Vec<Vec<&str>> = refs.iter().map(|x| words(x)).collect();
        for k in 1..=n {
            let (mk, tk) = clipped(&c, &r, k);
            m[k - 1] += mk;
            t[k - 1] += tk;
        }
        cl += c.len();
        rl += closest_ref_len(c.len(), &r);
    }
    if m.contains(&0) {
        return 0.0;
    }
    let log_p: f64 = (0..n).map(|k| (m[k] as f64 / t[k] as f64).ln()).sum();
    let bp = if cl > rl { 1.0 } else { (1.0 - rl as f64 / cl as f64).exp() };
    bp * (log_p / n as f64).exp()
}

fn lcs(a: &[&str], b: &[&str]) -> usize {
    // Plain recursion with a memo keyed by suffix starts.
    fn go(a: &[&str], b: &[&str], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

pub fn oracle_rouge_l(cand: &str, refs: &[&str]) -> f64 {
    let c = words(cand);
    let mut best: f64 = 0.0;
    for r in refs {
        let r = words(r);
        let l = lcs(&c, &r) as f64;
        if l == 0.0 {
            continue;
        }
        let (p, rec) = (l / c.len() as f64, l / r.len() as f64);
        let b2 = 1.2f64 * 1.2;
        best = best.max((1.0 + b2) * p * rec / (rec + b2 * p));
    }
    best
}

pub fn oracle_cider(pairs: &[(&str, &[&str])]) -> Vec<f64> {
    let n_docs = pairs.len() as f64;
    let mut df: HashMap<Vec<&str>, f64> = HashMap::new();
    for (_, refs) in pairs {
        let mut doc: Vec<Vec<&str>> = Vec::new();
        for r in refs.iter() {
            for n in 1..=4 {
                for g in ngrams(&words(r), n) {
                    if !doc.contains(&g) {
                        doc.push(g);
                    }
                }
            }
        }
        for g in doc {
            *df.entry(g).or_insert(0.0) += 1.0;
        }
    }
    let vec_of = |s: &str, n: usize| -> HashMap<String, f64> {
        let t = words(s);
        let gs = ngrams(&t, n);
        let mut v = HashMap::new();
        for g in &gs {
            let idf = n_docs.ln() - df.get(g).copied().unwrap_or(1.0).max(1.0).ln();
            v.insert(g.join(" "), count(&gs, g) as f64 * idf);
        }
        v
    };
    pairs
        .iter()
        .map(|(cand, refs)| {
            let mut total = 0.0;
            for n in 1..=4 {
                let cv = vec_of(cand, n);
                let mut per_ref = 0.0;
                for r in refs.iter() {
                    let rv = vec_of(r, n);
                    let dot: f64 = cv.iter().map(|(g, x)| x * rv.get(g).copied().unwrap_or(0.0)).sum();
                    let nc = cv.values().map(|x| x * x).sum::<f64>().sqrt();
                    let nr = rv.values().map(|x| x * x).sum::<f64>().sqrt();
                    if nc * nr > 0.0 {
                        let d = words(cand).len() as f64 - words(r).len() as f64;
                        per_ref += dot / (nc * nr) * (-d * d / 72.0).exp();
                    }
                }
                total += per_ref / refs.len() as f64;
            }
            total / 4.0 * 10.0
        })
        .collect()
}

