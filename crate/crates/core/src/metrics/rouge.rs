use crate::corpus::TokenSequence;
use crate::error::{Error, Result};

/// Recall weight of the ROUGE-L F-measure.
pub const ROUGE_L_BETA: f64 = 1.2;

/// Length of the longest common subsequence of `a` and `b`.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn rouge_l_single(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(candidate, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / candidate.len() as f64;
    let r = lcs / reference.len() as f64;
    let b2 = ROUGE_L_BETA * ROUGE_L_BETA;
    (1.0 + b2) * p * r / (r + b2 * p)
}

/// Best LCS F-measure of `candidate` over all references.
pub fn rouge_l(candidate: &TokenSequence, references: &[TokenSequence]) -> Result<f64> {
    if references.is_empty() {
        return Err(Error::Argument("ROUGE-L needs at least one reference".into()));
    }
    Ok(references
        .iter()
        .map(|r| rouge_l_single(candidate.tokens(), r.tokens()))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    #[test]
    fn lcs_basics() {
        assert_eq!(lcs_len(&[1, 2, 3], &[1, 3]), 2);
        assert_eq!(lcs_len(&[1, 2, 3], &[4]), 0);
        assert_eq!(lcs_len::<u8>(&[], &[1]), 0);
        assert_eq!(lcs_len(&[1, 2, 1, 2], &[2, 1, 2, 1]), 3);
    }

    #[test]
    fn identity_and_empty() {
        let c = tokenize("a dog on the rock");
        assert_eq!(rouge_l(&c, std::slice::from_ref(&c)).unwrap(), 1.0);
        assert_eq!(rouge_l(&tokenize(""), std::slice::from_ref(&c)).unwrap(), 0.0);
        assert!(rouge_l(&c, &[]).is_err());
    }
}
