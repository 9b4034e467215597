//! Two-group hypothesis tests and the special functions behind their p-values.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("group {0} is empty")]
    EmptyGroup(char),
    #[error("all values are identical; rank variance is zero")]
    DegenerateVariance,
    #[error("contingency table has a zero marginal")]
    ZeroMarginal,
    #[error("non-finite value in sample")]
    NonFinite,
}

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + k as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..1000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    gamma_q(df / 2.0, x / 2.0)
}

pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        gamma_q(0.5, x * x)
    } else {
        2.0 - gamma_q(0.5, x * x)
    }
}

/// Standard normal upper tail `P(Z > z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MwuMethod {
    /// Exact null distribution when both groups have at most [`EXACT_LIMIT`] values,
    /// normal approximation otherwise.
    #[default]
    Auto,
    Exact,
    Asymptotic,
}

pub const EXACT_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// `U` for the first group: its midrank sum minus `n_a (n_a + 1) / 2`.
    pub u: f64,
    pub p_two_sided: f64,
}

/// Midranks (1-based, ties averaged) of `values`.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<MannWhitney, StatsError> {
    mann_whitney_with(a, b, MwuMethod::Auto)
}

pub fn mann_whitney_with(a: &[f64], b: &[f64], method: MwuMethod) -> Result<MannWhitney, StatsError> {
    if a.is_empty() {
        return Err(StatsError::EmptyGroup('a'));
    }
    if b.is_empty() {
        return Err(StatsError::EmptyGroup('b'));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    if pooled.iter().all(|&v| v == pooled[0]) {
        return Err(StatsError::DegenerateVariance);
    }
    let ranks = midranks(&pooled);
    let (na, nb) = (a.len(), b.len());
    let ra: f64 = ranks[..na].iter().sum();
    let u = ra - (na * (na + 1)) as f64 / 2.0;
    let exact = match method {
        MwuMethod::Exact => true,
        MwuMethod::Asymptotic => false,
        MwuMethod::Auto => na <= EXACT_LIMIT && nb <= EXACT_LIMIT,
    };
    let p = if exact { exact_p(&ranks, na, ra) } else { asymptotic_p(&pooled, na, nb, u) };
    Ok(MannWhitney { u, p_two_sided: p.min(1.0) })
}

/// Two-sided p from the permutation distribution of the first group's rank sum, counting
/// every assignment at least as far from the mean as the observed one.
fn exact_p(ranks: &[f64], na: usize, ra: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // counts[k][s]: subsets of size k with doubled rank sum s.
    let mut counts = vec![vec![0f64; max_sum + 1]; na + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=na).rev() {
            for s in (r..=max_sum).rev() {
                let add = counts[k - 1][s - r];
                if add != 0.0 {
                    counts[k][s] += add;
                }
            }
        }
    }
    let n = ranks.len() as f64;
    let mean2 = na as f64 * (n + 1.0);
    let obs = (2.0 * ra - mean2).abs();
    let total: f64 = counts[na].iter().sum();
    let extreme: f64 =
        counts[na].iter().enumerate().filter(|&(s, _)| (s as f64 - mean2).abs() >= obs - 1e-9).map(|(_, c)| c).sum();
    extreme / total
}

fn asymptotic_p(pooled: &[f64], na: usize, nb: usize, u: f64) -> f64 {
    let n = (na + nb) as f64;
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let (na, nb) = (na as f64, nb as f64);
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let dev = ((u - na * nb / 2.0).abs() - 0.5).max(0.0);
    2.0 * normal_sf(dev / var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub p: f64,
}

/// Pearson chi-square test of independence on `[[a, b], [c, d]]`, one degree of freedom,
/// no continuity correction.
pub fn chi_square_2x2(table: [[u64; 2]; 2]) -> Result<ChiSquare, StatsError> {
    let [[a, b], [c, d]] = table.map(|r| r.map(|v| v as f64));
    let (r1, r2, c1, c2) = (a + b, c + d, a + c, b + d);
    if r1 == 0.0 || r2 == 0.0 || c1 == 0.0 || c2 == 0.0 {
        return Err(StatsError::ZeroMarginal);
    }
    let n = r1 + r2;
    let diff = a * d - b * c;
    let statistic = n * diff * diff / (r1 * r2 * c1 * c2);
    Ok(ChiSquare { statistic, p: chi_square_sf(statistic, 1.0) })
}
