use super::weight::{CostMatrix, Weight};

/// Largest `n` the dynamic program accepts (`2^(n-1) * (n-1)` states).
pub const DP_HARD_CAP: usize = 20;

/// Optimal tour starting at node 0 and its value. Node `v >= 1` is bit `v-1`.
pub(crate) fn held_karp<W: Weight>(m: &CostMatrix<W>) -> (Vec<usize>, W) {
    let n = m.n();
    assert!((3..=DP_HARD_CAP).contains(&n));
    let k = n - 1;
    let full = 1usize << k;
    let mut cost = vec![W::UNREACHABLE; full * k];
    let mut parent = vec![u8::MAX; full * k];
    for j in 0..k {
        cost[(1 << j) * k + j] = m.get(0, j + 1);
    }
    for mask in 1..full {
        for j in 0..k {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = cost[mask * k + j];
            if !(here < W::UNREACHABLE) {
                continue;
            }
            let mut rest = (full - 1) & !mask;
            while rest != 0 {
                let t = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let next = mask | (1 << t);
                let cand = here + m.get(j + 1, t + 1);
                let slot = next * k + t;
                if cand < cost[slot] {
                    cost[slot] = cand;
                    parent[slot] = j as u8;
                }
            }
        }
    }
    let last_mask = full - 1;
    let mut best = W::UNREACHABLE;
    let mut last = 0;
    for j in 0..k {
        let v = cost[last_mask * k + j] + m.get(j + 1, 0);
        if v < best {
            best = v;
            last = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = last_mask;
    let mut j = last;
    loop {
        order.push(j + 1);
        let p = parent[mask * k + j];
        mask &= !(1 << j);
        if p == u8::MAX {
            break;
        }
        j = p as usize;
    }
    order.push(0);
    order.reverse();
    (order, best)
}
