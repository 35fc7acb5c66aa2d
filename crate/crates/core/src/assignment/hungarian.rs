//! Kuhn–Munkres over a square matrix, in the starred/primed-zero formulation.

const NONE: usize = usize::MAX;

/// Returns the assigned column of every row of the `n × n` row-major `cost`.
pub(super) fn solve(cost: &[f64], n: usize) -> Vec<usize> {
    let mut c = cost.to_vec();

    // Row then column reduction.
    for r in 0..n {
        let row = &mut c[r * n..(r + 1) * n];
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        row.iter_mut().for_each(|v| *v -= min);
    }
    for col in 0..n {
        let min = (0..n).map(|r| c[r * n + col]).fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            (0..n).for_each(|r| c[r * n + col] -= min);
        }
    }

    let mut star_in_row = vec![NONE; n];
    let mut star_in_col = vec![NONE; n];
    let mut prime_in_row = vec![NONE; n];
    let mut row_covered = vec![false; n];
    let mut col_covered = vec![false; n];

    // Greedy initial stars.
    for r in 0..n {
        for col in 0..n {
            if c[r * n + col] == 0.0 && star_in_col[col] == NONE {
                star_in_row[r] = col;
                star_in_col[col] = r;
                break;
            }
        }
    }

    loop {
        // Cover every column holding a star; done when all are covered.
        let mut covered = 0;
        for col in 0..n {
            col_covered[col] = star_in_col[col] != NONE;
            covered += col_covered[col] as usize;
        }
        if covered == n {
            break;
        }

        // Prime uncovered zeros until one heads an augmenting path.
        let (path_row, path_col) = loop {
            match find_uncovered_zero(&c, n, &row_covered, &col_covered) {
                Some((r, col)) => {
                    prime_in_row[r] = col;
                    match star_in_row[r] {
                        NONE => break (r, col),
                        star_col => {
                            row_covered[r] = true;
                            col_covered[star_col] = false;
                        }
                    }
                }
                None => adjust_by_min_uncovered(&mut c, n, &row_covered, &col_covered),
            }
        };

        // Flip the alternating prime/star path starting at the free prime.
        let (mut r, mut col) = (path_row, path_col);
        loop {
            let next_r = star_in_col[col];
            star_in_row[r] = col;
            star_in_col[col] = r;
            if next_r == NONE {
                break;
            }
            r = next_r;
            col = prime_in_row[r];
        }

        prime_in_row.iter_mut().for_each(|p| *p = NONE);
        row_covered.iter_mut().for_each(|v| *v = false);
    }

    star_in_row
}

fn find_uncovered_zero(c: &[f64], n: usize, row_covered: &[bool], col_covered: &[bool]) -> Option<(usize, usize)> {
    (0..n)
        .filter(|&r| !row_covered[r])
        .find_map(|r| (0..n).find(|&col| !col_covered[col] && c[r * n + col] == 0.0).map(|col| (r, col)))
}

/// Subtracts the smallest uncovered value from uncovered entries and adds it to
/// doubly covered ones. Singly covered entries are left untouched rather than
/// having `m` added and subtracted, which keeps their values bit-exact.
fn adjust_by_min_uncovered(c: &mut [f64], n: usize, row_covered: &[bool], col_covered: &[bool]) {
    let mut m = f64::INFINITY;
    for r in (0..n).filter(|&r| !row_covered[r]) {
        for col in (0..n).filter(|&col| !col_covered[col]) {
            m = m.min(c[r * n + col]);
        }
    }
    for r in 0..n {
        for col in 0..n {
            match (row_covered[r], col_covered[col]) {
                (true, true) => c[r * n + col] += m,
                (false, false) => c[r * n + col] -= m,
                _ => {}
            }
        }
    }
}
