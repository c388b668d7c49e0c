//! Multi-index bookkeeping for alternating forms.
//!
//! A k-form on an n-dimensional mesh is stored through its components on the
//! lexicographically ordered basis `dx^I`, where `I` is a strictly increasing
//! multi-index of length k. Every sign that appears in the wedge product, the
//! Hodge star and the interior product is a permutation sign of merged
//! multi-indices, so all three operators share the helpers below. Keeping the
//! sign logic in one place is what makes identities like `star(star(a)) =
//! (-1)^{k(n-k)} a` hold exactly rather than up to a convention.

/// Binomial coefficient C(n, k); the number of components of a k-form.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num = 1usize;
    let mut den = 1usize;
    for i in 0..k {
        num *= n - i;
        den *= i + 1;
    }
    num / den
}

/// All strictly increasing multi-indices of length `k` drawn from `0..n`,
/// in lexicographic order. This order defines the component layout of forms.
pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut cur = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut cur, &mut out);
    out
}

/// Lexicographic rank of a strictly increasing multi-index among all
/// multi-indices of the same length over `0..n`.
pub fn position(n: usize, idx: &[usize]) -> usize {
    let k = idx.len();
    let mut rank = 0;
    let mut prev = 0;
    for (slot, &i) in idx.iter().enumerate() {
        for j in prev..i {
            rank += binomial(n - j - 1, k - slot - 1);
        }
        prev = i + 1;
    }
    rank
}

/// Merge two disjoint increasing multi-indices, returning the permutation
/// sign of `dx^a wedge dx^b = sign * dx^{sorted}` and the merged index.
/// Returns `None` when the indices share an axis (the wedge vanishes).
pub fn merge_sign(a: &[usize], b: &[usize]) -> Option<(f64, Vec<usize>)> {
    let mut merged = Vec::with_capacity(a.len() + b.len());
    let mut swaps = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            merged.push(a[i]);
            i += 1;
        } else {
            // b[j] moves left past the remaining entries of a
            swaps += a.len() - i;
            merged.push(b[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&a[i..]);
    merged.extend_from_slice(&b[j..]);
    let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, merged))
}

/// Complement of `idx` inside `0..n`, in increasing order.
pub fn complement(n: usize, idx: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - idx.len());
    let mut it = idx.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

/// Sign of `dx^I wedge dx^{I^c} = sign * dx^1 wedge ... wedge dx^n`,
/// i.e. the Hodge sign of the basis form `dx^I` in the flat metric.
pub fn hodge_sign(n: usize, idx: &[usize]) -> f64 {
    let comp = complement(n, idx);
    merge_sign(idx, &comp)
        .expect("complement never overlaps")
        .0
}

/// Insert axis `a` into the increasing multi-index `idx`, returning the sign
/// of `dx^a wedge dx^idx` and the enlarged index. `None` if `a` is present.
pub fn insert(idx: &[usize], a: usize) -> Option<(f64, Vec<usize>)> {
    merge_sign(&[a], idx)
}

/// Remove the entry at `pos`, returning the interior-product sign `(-1)^pos`
/// and the shortened index.
pub fn remove_at(idx: &[usize], pos: usize) -> (f64, Vec<usize>) {
    let mut rest = idx.to_vec();
    rest.remove(pos);
    let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
    (sign, rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(3, 0), 1);
        assert_eq!(binomial(3, 1), 3);
        assert_eq!(binomial(3, 2), 3);
        assert_eq!(binomial(3, 3), 1);
        assert_eq!(binomial(2, 1), 2);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn lexicographic_layout() {
        assert_eq!(
            multi_indices(3, 2),
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        for (r, idx) in multi_indices(3, 2).iter().enumerate() {
            assert_eq!(position(3, idx), r);
        }
        for (r, idx) in multi_indices(4, 2).iter().enumerate() {
            assert_eq!(position(4, idx), r);
        }
    }

    #[test]
    fn merge_signs() {
        // dx1 ^ dx0 = -dx0 ^ dx1
        assert_eq!(merge_sign(&[1], &[0]), Some((-1.0, vec![0, 1])));
        assert_eq!(merge_sign(&[0], &[1]), Some((1.0, vec![0, 1])));
        assert_eq!(merge_sign(&[0, 1], &[0]), None);
        // dx2 ^ dx0 ^ dx1 : two transpositions
        assert_eq!(merge_sign(&[2], &[0, 1]), Some((1.0, vec![0, 1, 2])));
    }

    #[test]
    fn hodge_signs_in_3d() {
        // star dx0 = dx1^dx2, star dx1 = -dx0^dx2, star dx2 = dx0^dx1
        assert_eq!(hodge_sign(3, &[0]), 1.0);
        assert_eq!(hodge_sign(3, &[1]), -1.0);
        assert_eq!(hodge_sign(3, &[2]), 1.0);
        assert_eq!(hodge_sign(3, &[]), 1.0);
        assert_eq!(hodge_sign(3, &[0, 1, 2]), 1.0);
    }

    #[test]
    fn complements() {
        assert_eq!(complement(3, &[1]), vec![0, 2]);
        assert_eq!(complement(3, &[]), vec![0, 1, 2]);
        assert_eq!(complement(2, &[0, 1]), Vec::<usize>::new());
    }
}
