//! Suffix array construction by prefix doubling, O(n log² n).

/// Returns the start positions of all suffixes of `text` in lexicographic
/// order. A suffix that is a proper prefix of another sorts first.
pub(crate) fn suffix_array(text: &[u32]) -> Vec<u32> {
    let n = text.len();
    let mut sa: Vec<u32> = (0..n as u32).collect();
    if n <= 1 {
        return sa;
    }
    let mut rank: Vec<u64> = text.iter().map(|&t| t as u64).collect();
    let mut next = vec![0u64; n];
    let mut width = 1usize;
    loop {
        let key = |i: u32| {
            let i = i as usize;
            let second = if i + width < n { rank[i + width] + 1 } else { 0 };
            (rank[i], second)
        };
        sa.sort_unstable_by_key(|&i| key(i));
        next[sa[0] as usize] = 0;
        for w in 1..n {
            let bump = (key(sa[w - 1]) != key(sa[w])) as u64;
            next[sa[w] as usize] = next[sa[w - 1] as usize] + bump;
        }
        std::mem::swap(&mut rank, &mut next);
        if rank[sa[n - 1] as usize] as usize == n - 1 || width >= n {
            break;
        }
        width *= 2;
    }
    sa
}
