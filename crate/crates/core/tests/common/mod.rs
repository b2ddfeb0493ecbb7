//! Brute-force reference implementations, kept independent of the library's
//! computation paths. Each oracle follows the defining formula as directly
//! as possible: quadratic pair enumeration, explicit distance matrices,
//! exhaustive grid search.

#![allow(dead_code)]

use influence_rl::depmeasures::{PairedSamples, SampleSeries};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Direct textbook Pearson formula.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some(cov / (vx.sqrt() * vy.sqrt()))
}

/// Quadratic concordant/discordant pair count; ties in either coordinate
/// count as neither, denominator stays n(n-1)/2.
pub fn kendall_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            if x[i] == x[j] || y[i] == y[j] {
                continue;
            }
            let agree = (x[i] < x[j]) == (y[i] < y[j]);
            if agree {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    (concordant - discordant) as f64 / (n * (n - 1) / 2) as f64
}

/// Average ranks computed by counting smaller and equal values directly.
pub fn ranks_oracle(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let smaller = values.iter().filter(|&&o| o < v).count();
            let equal = values.iter().filter(|&&o| o == v).count();
            // average of ranks smaller+1 ..= smaller+equal
            smaller as f64 + (equal as f64 + 1.0) / 2.0
        })
        .collect()
}

/// Ranks both series then applies the Pearson oracle.
pub fn spearman_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson_oracle(&ranks_oracle(x), &ranks_oracle(y))
}

/// Explicit double-centered distance matrices.
pub struct DcorOracle {
    pub dcov2: f64,
    pub dvar_x: f64,
    pub dvar_y: f64,
    pub dcor: Option<f64>,
}

pub fn dcor_oracle(x: &[f64], y: &[f64]) -> DcorOracle {
    let n = x.len();
    let a = centered_distance_matrix(x);
    let b = centered_distance_matrix(y);
    let mut dcov2 = 0.0;
    let mut dvar_x = 0.0;
    let mut dvar_y = 0.0;
    for j in 0..n {
        for k in 0..n {
            dcov2 += a[j][k] * b[j][k];
            dvar_x += a[j][k] * a[j][k];
            dvar_y += b[j][k] * b[j][k];
        }
    }
    let n2 = (n * n) as f64;
    dcov2 /= n2;
    dvar_x /= n2;
    dvar_y /= n2;
    let dcor = if dvar_x > 0.0 && dvar_y > 0.0 {
        Some((dcov2.max(0.0) / (dvar_x * dvar_y).sqrt()).sqrt().min(1.0))
    } else {
        None
    };
    DcorOracle {
        dcov2,
        dvar_x,
        dvar_y,
        dcor,
    }
}

fn centered_distance_matrix(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut d = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in 0..n {
            d[j][k] = (v[j] - v[k]).abs();
        }
    }
    let row_mean: Vec<f64> = d.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let col_mean: Vec<f64> = (0..n)
        .map(|k| d.iter().map(|r| r[k]).sum::<f64>() / n as f64)
        .collect();
    let total: f64 = d.iter().flatten().sum::<f64>() / (n * n) as f64;
    let mut out = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in 0..n {
            out[j][k] = d[j][k] - row_mean[j] - col_mean[k] + total;
        }
    }
    out
}

/// Plug-in mutual information in bits by direct summation over the joint
/// table.
pub fn discrete_mi_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut xs: Vec<f64> = x.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut ys: Vec<f64> = y.to_vec();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut terms = Vec::new();
    for &a in &xs {
        for &b in &ys {
            let joint = x
                .iter()
                .zip(y)
                .filter(|&(&xv, &yv)| xv == a && yv == b)
                .count() as f64;
            if joint == 0.0 {
                continue;
            }
            let px = x.iter().filter(|&&xv| xv == a).count() as f64;
            let py = y.iter().filter(|&&yv| yv == b).count() as f64;
            terms.push((joint / n) * ((joint * n) / (px * py)).log2());
        }
    }
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Empirical Shannon entropy in bits.
pub fn entropy_oracle(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mut vs: Vec<f64> = v.to_vec();
    vs.sort_by(f64::total_cmp);
    vs.dedup();
    vs.iter()
        .map(|&a| {
            let p = v.iter().filter(|&&x| x == a).count() as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Digamma at positive integers via the harmonic series,
/// psi(m) = -gamma + sum_{j=1}^{m-1} 1/j.
pub fn digamma_int_oracle(m: usize) -> f64 {
    let mut acc = -EULER_GAMMA;
    for j in 1..m {
        acc += 1.0 / j as f64;
    }
    acc
}

/// Reference k-nearest-neighbor mutual information (in bits) following the
/// psi(k) + psi(n) - <psi(nx+1) + psi(ny+1)> formula with max-norm
/// neighborhoods and the same deterministic tie-breaking offsets as the
/// estimator under test.
pub fn knn_mi_oracle(x: &[f64], y: &[f64], k: usize) -> f64 {
    let n = x.len();
    let xj = jitter_reference(x);
    let yj = jitter_reference(y);
    let mut psi_sum = 0.0;
    for i in 0..n {
        let mut dists: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (xj[i] - xj[j]).abs().max((yj[i] - yj[j]).abs()))
            .collect();
        dists.sort_by(f64::total_cmp);
        let eps = dists[k - 1];
        let nx = (0..n)
            .filter(|&j| j != i && (xj[i] - xj[j]).abs() < eps)
            .count();
        let ny = (0..n)
            .filter(|&j| j != i && (yj[i] - yj[j]).abs() < eps)
            .count();
        psi_sum += digamma_int_oracle(nx + 1) + digamma_int_oracle(ny + 1);
    }
    (digamma_int_oracle(k) + digamma_int_oracle(n) - psi_sum / n as f64) / std::f64::consts::LN_2
}

/// The estimator's defined per-(index, value) tie-breaking offset.
fn jitter_reference(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = (hi - lo).max(1.0) * 1e-10;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut z = (i as u64)
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(v.to_bits().rotate_left(17));
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            let u = (z >> 11) as f64 / (1u64 << 53) as f64;
            v + scale * (u - 0.5)
        })
        .collect()
}

/// Exhaustive MIC search: every grid whose cuts sit between distinct sorted
/// values, with nx, ny <= `max_bins` and nx * ny < ceil(n^exponent).
pub fn mic_exhaustive_oracle(x: &[f64], y: &[f64], exponent: f64, max_bins: usize) -> f64 {
    let n = x.len();
    let budget = (n as f64).powf(exponent).ceil() as usize;
    let x_rank = stable_ranks(x);
    let y_rank = stable_ranks(y);
    let x_cuts_all = valid_cuts(x);
    let y_cuts_all = valid_cuts(y);

    // Points ordered by x rank, tagged with y rank.
    let mut by_x: Vec<(usize, usize)> = x_rank.iter().copied().zip(y_rank.iter().copied()).collect();
    by_x.sort_unstable();

    let mut best = 0.0f64;
    for ny in 2..=max_bins {
        for nx in 2..=max_bins {
            if nx * ny >= budget {
                continue;
            }
            for_each_combination(&y_cuts_all, ny - 1, &mut |y_cuts| {
                // y bin of each point, in x-rank order, then prefix counts.
                let ybin: Vec<usize> = by_x
                    .iter()
                    .map(|&(_, yr)| y_cuts.partition_point(|&c| c <= yr))
                    .collect();
                let mut prefix = vec![vec![0usize; ny]; n + 1];
                for i in 0..n {
                    let prev = prefix[i].clone();
                    prefix[i + 1] = prev;
                    prefix[i + 1][ybin[i]] += 1;
                }
                for_each_combination(&x_cuts_all, nx - 1, &mut |x_cuts| {
                    let mut bounds = Vec::with_capacity(nx + 1);
                    bounds.push(0);
                    bounds.extend_from_slice(x_cuts);
                    bounds.push(n);
                    let mut col = vec![0usize; ny];
                    let mut rows = Vec::with_capacity(nx);
                    let mut cells = Vec::with_capacity(nx * ny);
                    for w in bounds.windows(2) {
                        let mut row = 0usize;
                        for b in 0..ny {
                            let c = prefix[w[1]][b] - prefix[w[0]][b];
                            cells.push(c);
                            row += c;
                            col[b] += c;
                        }
                        rows.push(row);
                    }
                    let nf = n as f64;
                    let mut terms = Vec::new();
                    for (xi, &row) in rows.iter().enumerate() {
                        for (yi, &column) in col.iter().enumerate() {
                            let cell = cells[xi * ny + yi];
                            if cell > 0 {
                                let p = cell as f64 / nf;
                                terms.push(
                                    p * ((cell as f64 * nf) / (row as f64 * column as f64)).log2(),
                                );
                            }
                        }
                    }
                    terms.sort_by(f64::total_cmp);
                    let mi: f64 = terms.iter().sum();
                    let score = mi / (nx.min(ny) as f64).log2();
                    if score > best {
                        best = score;
                    }
                });
            });
        }
    }
    best.max(0.0)
}

fn stable_ranks(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut rank = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

fn valid_cuts(values: &[f64]) -> Vec<usize> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    (1..values.len())
        .filter(|&c| sorted[c - 1] != sorted[c])
        .collect()
}

fn for_each_combination(items: &[usize], take: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(
        items: &[usize],
        take: usize,
        from: usize,
        current: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if current.len() == take {
            f(current);
            return;
        }
        let needed = take - current.len();
        if items.len() - from < needed {
            return;
        }
        for i in from..=items.len() - needed {
            current.push(items[i]);
            rec(items, take, i + 1, current, f);
            current.pop();
        }
    }
    if items.len() < take {
        return;
    }
    rec(items, take, 0, &mut Vec::with_capacity(take), f);
}

pub fn discrete_pair(x: &[f64], y: &[f64]) -> PairedSamples {
    PairedSamples::new(
        SampleSeries::discrete(x.to_vec()),
        SampleSeries::discrete(y.to_vec()),
    )
    .unwrap()
}

pub fn continuous_pair(x: &[f64], y: &[f64]) -> PairedSamples {
    PairedSamples::new(
        SampleSeries::continuous(x.to_vec()),
        SampleSeries::continuous(y.to_vec()),
    )
    .unwrap()
}

/// Simple deterministic generator for reproducible test inputs.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}
