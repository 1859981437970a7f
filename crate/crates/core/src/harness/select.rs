/// Benjamini–Hochberg step-up selection at FDR level `q`. Returns the
/// selected indices in ascending order.
pub fn bh_select(pvalues: &[f64], q: f64) -> Vec<usize> {
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));
    let cutoff = order
        .iter()
        .enumerate()
        .filter(|&(rank, &i)| pvalues[i] <= (rank + 1) as f64 * q / m as f64)
        .map(|(_, &i)| pvalues[i])
        .last();
    match cutoff {
        Some(c) => (0..m).filter(|&i| pvalues[i] <= c).collect(),
        None => Vec::new(),
    }
}
