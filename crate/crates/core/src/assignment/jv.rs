//! Jonker–Volgenant (1987) for dense square matrices.
//!
//! Column reduction, reduction transfer and two passes of augmenting row
//! reduction build a partial assignment with consistent column prices; the
//! rows still free are then assigned one at a time along shortest augmenting
//! paths.

const NONE: usize = usize::MAX;

#[allow(clippy::needless_range_loop, clippy::mut_range_bound)]
pub(super) fn solve(cost: &[f64], n: usize) -> Vec<usize> {
    let c = |i: usize, j: usize| cost[i * n + j];
    let mut v = vec![0.0; n];
    let mut row_sol = vec![NONE; n];
    let mut col_sol = vec![NONE; n];
    let mut matches = vec![0usize; n];

    // Column reduction, scanning columns in reverse.
    for j in (0..n).rev() {
        let (imin, min) = (0..n).map(|i| (i, c(i, j))).fold((0, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        });
        v[j] = min;
        matches[imin] += 1;
        if matches[imin] == 1 {
            row_sol[imin] = j;
            col_sol[j] = imin;
        } else if v[j] < v[row_sol[imin]] {
            let j1 = row_sol[imin];
            row_sol[imin] = j;
            col_sol[j] = imin;
            col_sol[j1] = NONE;
        } else {
            col_sol[j] = NONE;
        }
    }

    // Reduction transfer.
    let mut free = Vec::with_capacity(n);
    for i in 0..n {
        match matches[i] {
            0 => free.push(i),
            1 => {
                let j1 = row_sol[i];
                let min = (0..n).filter(|&j| j != j1).map(|j| c(i, j) - v[j]).fold(f64::INFINITY, f64::min);
                if min.is_finite() {
                    v[j1] -= min;
                }
            }
            _ => {}
        }
    }

    // Augmenting row reduction, two passes.
    for _ in 0..2 {
        let prev_free = std::mem::take(&mut free);
        let mut pending = prev_free.clone();
        let mut k = 0;
        let mut scans = 0usize;
        while k < pending.len() {
            let i = pending[k];
            k += 1;
            scans += 1;

            let (mut umin, mut usubmin) = (c(i, 0) - v[0], f64::INFINITY);
            let (mut j1, mut j2) = (0, NONE);
            for j in 1..n {
                let h = c(i, j) - v[j];
                if h < usubmin {
                    if h >= umin {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }

            let mut i0 = col_sol[j1];
            let lowered = v[j1] - (usubmin - umin);
            // compare the actual new price: a tiny gap can round to no change
            let strictly_lowers = usubmin.is_finite() && lowered < v[j1];
            if strictly_lowers {
                v[j1] = lowered;
            } else if i0 != NONE && j2 != NONE {
                j1 = j2;
                i0 = col_sol[j2];
            }
            row_sol[i] = j1;
            col_sol[j1] = i;
            if i0 != NONE {
                row_sol[i0] = NONE;
                if strictly_lowers && scans < n * (prev_free.len() + 1) {
                    k -= 1;
                    pending[k] = i0;
                } else {
                    free.push(i0);
                }
            }
        }
    }

    // Augmentation along shortest paths.
    let mut d = vec![0.0; n];
    let mut pred = vec![0usize; n];
    let mut col_list: Vec<usize> = (0..n).collect();
    for &free_row in &free {
        for j in 0..n {
            d[j] = c(free_row, j) - v[j];
            pred[j] = free_row;
            col_list[j] = j;
        }
        // col_list[..low] ready, [low..up] todo at distance `min`, [up..] unscanned
        let (mut low, mut up) = (0usize, 0usize);
        let mut ready = 0usize;
        let mut min = 0.0;
        let end_of_path = 'search: loop {
            if up == low {
                ready = low;
                min = d[col_list[up]];
                up += 1;
                for k in up..n {
                    let j = col_list[k];
                    let h = d[j];
                    if h <= min {
                        if h < min {
                            up = low;
                            min = h;
                        }
                        col_list[k] = col_list[up];
                        col_list[up] = j;
                        up += 1;
                    }
                }
                for &j in &col_list[low..up] {
                    if col_sol[j] == NONE {
                        break 'search j;
                    }
                }
            }

            let j1 = col_list[low];
            low += 1;
            let i = col_sol[j1];
            let h = c(i, j1) - v[j1] - min;
            for k in up..n {
                let j = col_list[k];
                let v2 = c(i, j) - v[j] - h;
                if v2 < d[j] {
                    pred[j] = i;
                    if v2 == min {
                        if col_sol[j] == NONE {
                            break 'search j;
                        }
                        col_list[k] = col_list[up];
                        col_list[up] = j;
                        up += 1;
                    }
                    d[j] = v2;
                }
            }
        };

        for &j in &col_list[..ready] {
            v[j] += d[j] - min;
        }

        let mut j = end_of_path;
        loop {
            let i = pred[j];
            col_sol[j] = i;
            let next = row_sol[i];
            row_sol[i] = j;
            if i == free_row {
                break;
            }
            j = next;
        }
    }

    row_sol
}
