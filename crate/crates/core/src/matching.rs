//! Maximum-weight assignment of rows to distinct columns.

/// Hungarian method on a `rows × cols` weight matrix with `rows ≤ cols`.
/// Returns the column of every row and the total weight.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let rows = weights.len();
    if rows == 0 {
        return (Vec::new(), 0.0);
    }
    let cols = weights[0].len();
    assert!(
        rows <= cols,
        "assignment needs at least as many columns as rows"
    );

    // Shortest augmenting paths on costs −w; index 0 is a sentinel.
    let cost = |i: usize, j: usize| -weights[i - 1][j - 1];
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_to = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0, j) - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    let total = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| weights[i][j])
        .sum();
    (assignment, total)
}

/// Optimal assignment with ties resolved toward the lowest column for the
/// earliest row: rows are fixed one at a time to the first column that still
/// admits an optimal completion.
pub fn lexicographic_max_weight_assignment(weights: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let (_, best) = max_weight_assignment(weights);
    let rows = weights.len();
    if rows == 0 {
        return (Vec::new(), 0.0);
    }
    let cols = weights[0].len();
    let slack = 1e-12 * best.abs().max(1.0);
    let mut taken = vec![false; cols];
    let mut fixed = Vec::with_capacity(rows);
    let mut fixed_weight = 0.0;
    for i in 0..rows {
        let choice = (0..cols)
            .filter(|&j| !taken[j])
            .find(|&j| {
                let free: Vec<usize> = (0..cols).filter(|&k| !taken[k] && k != j).collect();
                let rest: Vec<Vec<f64>> = weights[i + 1..]
                    .iter()
                    .map(|row| free.iter().map(|&k| row[k]).collect())
                    .collect();
                let (_, tail) = max_weight_assignment(&rest);
                fixed_weight + weights[i][j] + tail >= best - slack
            })
            .expect("an optimal completion always exists");
        taken[choice] = true;
        fixed.push(choice);
        fixed_weight += weights[i][choice];
    }
    (fixed, fixed_weight)
}
