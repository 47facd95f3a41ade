//! Minimum-cost assignment of rows to distinct columns (Hungarian method with potentials).

/// Cost of assigning a row to a column; `None` forbids the pair.
pub type Cost = Option<u64>;

const FORBIDDEN: i64 = 1 << 42;

/// Assigns every row to a distinct column at minimum total cost.
///
/// `cost(row, col)` is evaluated for `rows x cols` pairs. Returns the column
/// of each row, or `None` when no assignment avoids forbidden pairs. Costs must
/// stay below 2^32 so that forbidden pairs always dominate.
pub fn min_cost_assignment(
    rows: usize,
    cols: usize,
    cost: impl Fn(usize, usize) -> Cost,
) -> Option<Vec<usize>> {
    if rows == 0 {
        return Some(Vec::new());
    }
    if rows > cols {
        return None;
    }
    let a: Vec<Vec<i64>> = (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| cost(i, j).map_or(FORBIDDEN, |c| c as i64))
                .collect()
        })
        .collect();

    // 1-indexed potentials; column 0 is a virtual source.
    let mut u = vec![0i64; rows + 1];
    let mut v = vec![0i64; cols + 1];
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![usize::MAX; rows];
    for j in 1..=cols {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
        .iter()
        .enumerate()
        .all(|(i, &j)| a[i][j] < FORBIDDEN)
        .then_some(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(costs: &[Vec<Cost>], assignment: &[usize]) -> u64 {
        assignment
            .iter()
            .enumerate()
            .map(|(i, &j)| costs[i][j].unwrap())
            .sum()
    }

    #[test]
    fn picks_cheapest_pair() {
        // Two identical slots over robots with wages 5, 9, 6.
        let costs = vec![vec![Some(5), Some(9), Some(6)]; 2];
        let a = min_cost_assignment(2, 3, |i, j| costs[i][j]).unwrap();
        assert_eq!(total(&costs, &a), 11);
        let mut cols = a.clone();
        cols.sort();
        assert_eq!(cols, vec![0, 2]);
    }

    #[test]
    fn forbidden_pairs_respected() {
        let costs = [vec![Some(1), None], vec![Some(1), None]];
        assert_eq!(min_cost_assignment(2, 2, |i, j| costs[i][j]), None);
        let costs = [vec![None, Some(7)], vec![Some(100), Some(1)]];
        let a = min_cost_assignment(2, 2, |i, j| costs[i][j]).unwrap();
        assert_eq!(a, vec![1, 0]);
    }

    /// Cheapest injective row-to-column map by exhaustive search.
    fn brute(costs: &[Vec<Cost>], cols: usize, row: usize, used: &mut Vec<bool>) -> Option<u64> {
        if row == costs.len() {
            return Some(0);
        }
        let mut best = None;
        for j in 0..cols {
            if used[j] {
                continue;
            }
            if let Some(c) = costs[row][j] {
                used[j] = true;
                if let Some(rest) = brute(costs, cols, row + 1, used) {
                    best = Some(best.map_or(c + rest, |b: u64| b.min(c + rest)));
                }
                used[j] = false;
            }
        }
        best
    }

    proptest::proptest! {
        #[test]
        fn agrees_with_exhaustive_search(
            rows in 0usize..5,
            extra in 0usize..3,
            cells in proptest::collection::vec(proptest::option::weighted(0.8, 0u64..60), 35),
        ) {
            let cols = rows + extra;
            let costs: Vec<Vec<Cost>> = (0..rows).map(|i| cells[i * cols..(i + 1) * cols].to_vec()).collect();
            let fast = min_cost_assignment(rows, cols, |i, j| costs[i][j]);
            let slow = brute(&costs, cols, 0, &mut vec![false; cols]);
            proptest::prop_assert_eq!(fast.as_ref().map(|a| total(&costs, a)), slow);
            if let Some(a) = fast {
                let mut seen = a.clone();
                seen.sort();
                seen.dedup();
                proptest::prop_assert_eq!(seen.len(), rows);
            }
        }
    }

    #[test]
    fn more_rows_than_columns() {
        assert_eq!(min_cost_assignment(3, 2, |_, _| Some(1)), None);
        assert_eq!(min_cost_assignment(0, 0, |_, _| Some(1)), Some(vec![]));
    }
}
