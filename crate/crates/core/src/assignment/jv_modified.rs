//! Rectangular shortest augmenting path (the "modified" Jonker–Volgenant).
//!
//! Rows are inserted one at a time; each insertion runs a Dijkstra search over
//! reduced costs `c[i][j] - u[i] - v[j]` from the new row to the nearest free
//! column, then updates the duals so reduced costs stay nonnegative. There is
//! no initialization phase and no need to pad `rows < cols` inputs.

const NONE: usize = usize::MAX;

/// Column for each row of the `nr × nc` (`nr <= nc`) row-major `cost`.
pub(super) fn solve(cost: &[f64], nr: usize, nc: usize) -> Option<Vec<usize>> {
    debug_assert!(nr <= nc);
    let mut u = vec![0.0; nr];
    let mut v = vec![0.0; nc];
    let mut shortest = vec![f64::INFINITY; nc];
    let mut path = vec![NONE; nc];
    let mut col4row = vec![NONE; nr];
    let mut row4col = vec![NONE; nc];
    let mut visited_row = vec![false; nr];
    let mut visited_col = vec![false; nc];

    for cur_row in 0..nr {
        shortest.iter_mut().for_each(|s| *s = f64::INFINITY);
        visited_row.iter_mut().for_each(|s| *s = false);
        visited_col.iter_mut().for_each(|s| *s = false);

        let mut min_val = 0.0;
        let mut i = cur_row;
        let sink = loop {
            visited_row[i] = true;
            let mut lowest = f64::INFINITY;
            let mut best = NONE;
            let row = &cost[i * nc..(i + 1) * nc];
            for j in 0..nc {
                if visited_col[j] {
                    continue;
                }
                let r = min_val + row[j] - u[i] - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                // lowest column wins ties, except a free column beats an assigned one
                if shortest[j] < lowest
                    || (shortest[j] == lowest && row4col[j] == NONE && best != NONE && row4col[best] != NONE)
                {
                    lowest = shortest[j];
                    best = j;
                }
            }
            if best == NONE || !lowest.is_finite() {
                return None;
            }
            min_val = lowest;
            visited_col[best] = true;
            if row4col[best] == NONE {
                break best;
            }
            i = row4col[best];
        };

        u[cur_row] += min_val;
        for r in 0..nr {
            if visited_row[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for j in 0..nc {
            if visited_col[j] {
                v[j] -= min_val - shortest[j];
            }
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }

    Some(col4row)
}
