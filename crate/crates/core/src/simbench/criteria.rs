use crate::distance::DissimilarityMatrix;
use crate::error::{Error, Result};

fn check_ids(estimated: &DissimilarityMatrix<f64>, truth: &DissimilarityMatrix<f64>) -> Result<()> {
    if estimated.ids() != truth.ids() {
        return Err(Error::InvalidArgument(
            "estimated and true matrices list different ids".into(),
        ));
    }
    Ok(())
}

/// `min_{a,b} Σ_i Σ_{j≠i} (a + b d̂_ij - d_ij)² / d_ij`, solved as weighted
/// least squares of `d` on `(1, d̂)` with weights `1 / d`.
pub fn q_criterion(
    estimated: &DissimilarityMatrix<f64>,
    truth: &DissimilarityMatrix<f64>,
) -> Result<f64> {
    check_ids(estimated, truth)?;
    let n = truth.len();
    let pairs = || (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)));
    if let Some((i, j)) = pairs().find(|&(i, j)| !(truth.get(i, j) > 0.0)) {
        return Err(Error::ZeroTrueDistance(
            truth.ids()[i].clone(),
            truth.ids()[j].clone(),
        ));
    }
    let (mut sw, mut swx, mut swy) = (0.0, 0.0, 0.0);
    for (i, j) in pairs() {
        let d = truth.get(i, j);
        let w = 1.0 / d;
        sw += w;
        swx += w * estimated.get(i, j);
        swy += w * d;
    }
    if sw == 0.0 {
        return Ok(0.0);
    }
    let (xm, ym) = (swx / sw, swy / sw);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (i, j) in pairs() {
        let w = 1.0 / truth.get(i, j);
        let dx = estimated.get(i, j) - xm;
        sxx += w * dx * dx;
        sxy += w * dx * (truth.get(i, j) - ym);
    }
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = ym - b * xm;
    Ok(pairs()
        .map(|(i, j)| {
            let d = truth.get(i, j);
            let r = a + b * estimated.get(i, j) - d;
            r * r / d
        })
        .sum())
}

/// Ranks `1..=m` of `values`, ties sharing their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// `Σ_i Σ_{j≠i} (r̂_ij - r_ij)²` where ranks are taken among the distinct
/// pairs `i < j`; each pair then contributes twice, once per ordering.
pub fn r_criterion(
    estimated: &DissimilarityMatrix<f64>,
    truth: &DissimilarityMatrix<f64>,
) -> Result<f64> {
    check_ids(estimated, truth)?;
    let n = truth.len();
    let upper = |m: &DissimilarityMatrix<f64>| -> Vec<f64> {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j))
            .collect()
    };
    let re = midranks(&upper(estimated));
    let rt = midranks(&upper(truth));
    Ok(2.0
        * re.iter()
            .zip(&rt)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>())
}
