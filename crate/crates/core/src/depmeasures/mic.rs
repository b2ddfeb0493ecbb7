//! Maximal information coefficient: max over admissible grid partitions of
//! normalized mutual information, MIC = max I(X;Y) / log2(min(nx, ny)) over
//! grids with nx * ny < B, B = ceil(n^exponent).
//!
//! Candidate cut points come from rank equipartitions of each axis. Plain
//! equipartition grids are evaluated for every admissible (nx, ny); for small
//! grids (at most [`REFINE_MAX_BINS`] bins on an axis) all cut subsets drawn
//! from a twice-as-fine equipartition are searched as well, which recovers
//! most of the freedom of the full heuristic at bounded cost. Cuts never
//! split tied values.

use super::{DependencyEstimate, Measure, MeasureError, PairedSamples};

pub const DEFAULT_MIC_EXPONENT: f64 = 0.6;

/// Axes with at most this many bins get the subset search over a finer
/// candidate set; larger axes use the plain equipartition only.
const REFINE_MAX_BINS: usize = 3;

/// Sample-count bound below which refined axes draw cuts from a dense
/// candidate set. Small samples profit most from cut placement and the
/// subset search stays cheap there.
const DENSE_REFINE_MAX_N: usize = 120;

/// Clump count for the dense candidate set (yields up to 20 cuts).
const DENSE_REFINE_CLUMPS: usize = 21;

pub fn mic(p: &PairedSamples, b_exponent: f64) -> Result<DependencyEstimate, MeasureError> {
    if p.is_empty() {
        return Err(MeasureError::Empty);
    }
    let n = p.len();
    if n < 4 {
        return Err(MeasureError::TooFewSamples {
            measure: Measure::Mic,
            need: 4,
            got: n,
        });
    }
    let budget = (n as f64).powf(b_exponent).ceil() as usize;

    let x_axis = Axis::new(&p.x.values);
    let y_axis = Axis::new(&p.y.values);

    let mut best = 0.0f64;
    let mut nx = 2;
    while nx * 2 < budget {
        let x_options = cut_options(&x_axis, nx, n);
        let mut ny = 2;
        while nx * ny < budget {
            let y_options = cut_options(&y_axis, ny, n);
            for xc in &x_options {
                for yc in &y_options {
                    if let Some(score) = grid_score(&x_axis, &y_axis, xc, yc, n) {
                        best = best.max(score);
                    }
                }
            }
            ny += 1;
        }
        nx += 1;
    }

    Ok(DependencyEstimate {
        measure: Measure::Mic,
        value: best,
        raw_value: best,
        sample_count: n,
        defined: true,
    })
}

/// Per-axis rank data: rank[i] is the position of sample i in the stable
/// (value, index) order, and `valid` marks rank positions where a cut may be
/// placed without splitting tied values.
struct Axis {
    rank: Vec<usize>,
    valid_cuts: Vec<usize>,
}

impl Axis {
    fn new(values: &[f64]) -> Axis {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let mut rank = vec![0usize; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let valid_cuts = (1..n)
            .filter(|&c| values[order[c - 1]] != values[order[c]])
            .collect();
        Axis { rank, valid_cuts }
    }

    /// Valid cut nearest to `target` (ties resolved downward).
    fn snap(&self, target: usize) -> Option<usize> {
        if self.valid_cuts.is_empty() {
            return None;
        }
        let pos = self.valid_cuts.partition_point(|&c| c < target);
        let after = self.valid_cuts.get(pos).copied();
        let before = pos.checked_sub(1).map(|i| self.valid_cuts[i]);
        match (before, after) {
            (Some(b), Some(a)) => Some(if target - b <= a - target { b } else { a }),
            (Some(b), None) => Some(b),
            (None, Some(a)) => Some(a),
            (None, None) => None,
        }
    }

    /// Equipartition boundaries into `m` clumps, snapped to valid cuts.
    fn equipartition(&self, m: usize, n: usize) -> Vec<usize> {
        let mut cuts: Vec<usize> = (1..m)
            .filter_map(|j| self.snap(j * n / m))
            .collect();
        cuts.sort_unstable();
        cuts.dedup();
        cuts
    }
}

/// Candidate cut sets for one axis and a requested bin count.
fn cut_options(axis: &Axis, bins: usize, n: usize) -> Vec<Vec<usize>> {
    if bins <= REFINE_MAX_BINS {
        let clumps = if n <= DENSE_REFINE_MAX_N {
            DENSE_REFINE_CLUMPS
        } else {
            2 * bins
        };
        // The plain equipartition cuts are always candidates, so the
        // refined search never scores below the unrefined grid.
        let mut candidates = axis.equipartition(clumps, n);
        candidates.extend(axis.equipartition(bins, n));
        candidates.sort_unstable();
        candidates.dedup();
        let mut out = subsets(&candidates, bins - 1);
        if out.is_empty() {
            // Fewer valid cuts than requested bins: use whatever exists.
            if candidates.is_empty() {
                return vec![];
            }
            out.push(candidates);
        }
        out
    } else {
        let cuts = axis.equipartition(bins, n);
        if cuts.is_empty() {
            vec![]
        } else {
            vec![cuts]
        }
    }
}

fn subsets(candidates: &[usize], take: usize) -> Vec<Vec<usize>> {
    if candidates.len() < take {
        return vec![];
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(take);
    pick(candidates, take, 0, &mut current, &mut out);
    out
}

fn pick(
    candidates: &[usize],
    take: usize,
    from: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if current.len() == take {
        out.push(current.clone());
        return;
    }
    let needed = take - current.len();
    for i in from..=candidates.len().saturating_sub(needed) {
        current.push(candidates[i]);
        pick(candidates, take, i + 1, current, out);
        current.pop();
    }
}

/// Normalized mutual information of the grid defined by rank cut positions.
fn grid_score(
    x_axis: &Axis,
    y_axis: &Axis,
    x_cuts: &[usize],
    y_cuts: &[usize],
    n: usize,
) -> Option<f64> {
    let bx = x_cuts.len() + 1;
    let by = y_cuts.len() + 1;
    if bx < 2 || by < 2 {
        return None;
    }
    let mut cells = vec![0usize; bx * by];
    let mut row = vec![0usize; bx];
    let mut col = vec![0usize; by];
    for i in 0..n {
        let xb = x_cuts.partition_point(|&c| c <= x_axis.rank[i]);
        let yb = y_cuts.partition_point(|&c| c <= y_axis.rank[i]);
        cells[xb * by + yb] += 1;
        row[xb] += 1;
        col[yb] += 1;
    }
    let nf = n as f64;
    let mut terms: Vec<f64> = Vec::with_capacity(bx * by);
    for xb in 0..bx {
        for yb in 0..by {
            let c = cells[xb * by + yb];
            if c > 0 {
                let pxy = c as f64 / nf;
                terms.push(pxy * ((c as f64 * nf) / (row[xb] as f64 * col[yb] as f64)).log2());
            }
        }
    }
    terms.sort_by(f64::total_cmp);
    let mi: f64 = terms.iter().sum();
    Some((mi / (bx.min(by) as f64).log2()).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depmeasures::SampleSeries;

    fn pair(x: Vec<f64>, y: Vec<f64>) -> PairedSamples {
        PairedSamples::new(SampleSeries::continuous(x), SampleSeries::continuous(y)).unwrap()
    }

    #[test]
    fn identity_on_distinct_values_is_one() {
        let xs: Vec<f64> = (0..100).map(f64::from).collect();
        let est = mic(&pair(xs.clone(), xs), DEFAULT_MIC_EXPONENT).unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn constant_series_scores_zero() {
        let xs: Vec<f64> = (0..50).map(f64::from).collect();
        let ys = vec![7.0; 50];
        let est = mic(&pair(xs, ys), DEFAULT_MIC_EXPONENT).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let est = mic(&pair(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]), 0.6);
        assert!(matches!(est, Err(MeasureError::TooFewSamples { .. })));
    }
}
