//! Summary statistics, regression, histograms and Hartigan's dip test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngKey;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation with the `n - 1` denominator (0 for fewer than two values).
pub fn std_unbiased(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ intercept + slope x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("linear fit needs two equal-length series of >= 2 points".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DivisionByZero("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit { slope, intercept, r_squared })
}

/// Quantile with linear interpolation between order statistics of a sorted sample.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bin count from the Freedman-Diaconis width `2 IQR n^{-1/3}`.
pub fn freedman_diaconis_bins(x: &[f64]) -> usize {
    if x.len() < 2 {
        return 1;
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let range = s[s.len() - 1] - s[0];
    if iqr <= 0.0 || range <= 0.0 {
        return 1;
    }
    let width = 2.0 * iqr / (s.len() as f64).cbrt();
    ((range / width).ceil() as usize).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Equal-width histogram over the sample range; `bins = None` uses Freedman-Diaconis.
pub fn histogram(x: &[f64], bins: Option<usize>) -> Result<Histogram> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("histogram of an empty sample".into()));
    }
    let bins = bins.unwrap_or_else(|| freedman_diaconis_bins(x)).max(1);
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for &v in x {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Hartigan's dip statistic of a sample (in CDF units).
pub fn dip_statistic(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    dip_sorted(&s)
}

fn dip_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    // One-based copy; index 0 unused.
    let mut x = Vec::with_capacity(n + 1);
    x.push(0.0);
    x.extend_from_slice(sorted);
    let mut dip = 1.0;
    if n < 2 || x[n] == x[1] {
        return dip / (2.0 * n as f64);
    }

    let mut mn = vec![0usize; n + 1];
    let mut mj = vec![0usize; n + 1];
    mn[1] = 1;
    for j in 2..=n {
        mn[j] = j - 1;
        loop {
            let mnj = mn[j];
            let mnmnj = mn[mnj];
            if mnj == 1
                || (x[j] - x[mnj]) * ((mnj - mnmnj) as f64) < (x[mnj] - x[mnmnj]) * ((j - mnj) as f64)
            {
                break;
            }
            mn[j] = mnmnj;
        }
    }
    mj[n] = n;
    for k in (1..n).rev() {
        mj[k] = k + 1;
        loop {
            let mjk = mj[k];
            let mjmjk = mj[mjk];
            if mjk == n
                || (x[k] - x[mjk]) * (mjk as f64 - mjmjk as f64) < (x[mjk] - x[mjmjk]) * (k as f64 - mjk as f64)
            {
                break;
            }
            mj[k] = mjmjk;
        }
    }

    let mut gcm = vec![0usize; n + 2];
    let mut lcm = vec![0usize; n + 2];
    let (mut low, mut high) = (1usize, n);
    loop {
        gcm[1] = high;
        let mut i = 1;
        while gcm[i] > low {
            gcm[i + 1] = mn[gcm[i]];
            i += 1;
        }
        let l_gcm = i;
        let mut ig = l_gcm;
        let mut ix = ig - 1;

        lcm[1] = low;
        let mut i = 1;
        while lcm[i] < high {
            lcm[i + 1] = mj[lcm[i]];
            i += 1;
        }
        let l_lcm = i;
        let mut ih = l_lcm;
        let mut iv = 2;

        let mut d = 0.0;
        if l_gcm != 2 || l_lcm != 2 {
            loop {
                let gcmix = gcm[ix];
                let lcmiv = lcm[iv];
                if gcmix > lcmiv {
                    let gcmi1 = gcm[ix + 1];
                    let dx = (lcmiv as f64 - gcmi1 as f64 + 1.0)
                        - (x[lcmiv] - x[gcmi1]) * (gcmix as f64 - gcmi1 as f64) / (x[gcmix] - x[gcmi1]);
                    iv += 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv - 1;
                    }
                } else {
                    let lcmiv1 = lcm[iv - 1];
                    let dx = (x[gcmix] - x[lcmiv1]) * (lcmiv as f64 - lcmiv1 as f64) / (x[lcmiv] - x[lcmiv1])
                        - (gcmix as f64 - lcmiv1 as f64 - 1.0);
                    ix -= 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv;
                    }
                }
                if ix < 1 {
                    ix = 1;
                }
                if iv > l_lcm {
                    iv = l_lcm;
                }
                if gcm[ix] == lcm[iv] {
                    break;
                }
            }
        } else {
            d = 1.0;
        }
        if d < dip {
            break;
        }

        let mut dip_l: f64 = 0.0;
        for j in ig..l_gcm {
            let mut max_t: f64 = 1.0;
            let (jb, je) = (gcm[j + 1], gcm[j]);
            if je - jb > 1 && x[je] != x[jb] {
                let c = (je - jb) as f64 / (x[je] - x[jb]);
                for jj in jb..=je {
                    let t = (jj - jb + 1) as f64 - (x[jj] - x[jb]) * c;
                    max_t = max_t.max(t);
                }
            }
            dip_l = dip_l.max(max_t);
        }
        let mut dip_u: f64 = 0.0;
        for j in ih..l_lcm {
            let mut max_t: f64 = 1.0;
            let (jb, je) = (lcm[j], lcm[j + 1]);
            if je - jb > 1 && x[je] != x[jb] {
                let c = (je - jb) as f64 / (x[je] - x[jb]);
                for jj in jb..=je {
                    let t = (x[jj] - x[jb]) * c - (jj as f64 - jb as f64 - 1.0);
                    max_t = max_t.max(t);
                }
            }
            dip_u = dip_u.max(max_t);
        }
        dip = dip.max(dip_l.max(dip_u));

        if low == gcm[ig] && high == lcm[ih] {
            break;
        }
        low = gcm[ig];
        high = lcm[ih];
    }
    dip / (2.0 * n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipTest {
    pub dip: f64,
    /// Fraction of uniform reference samples with a dip at least as large.
    pub p_value: f64,
    pub n_reference: usize,
}

/// Dip test of unimodality with a Monte-Carlo p-value against the uniform
/// distribution (the least favourable unimodal law).
pub fn dip_test(x: &[f64], n_reference: usize, seed: u64) -> Result<DipTest> {
    if x.len() < 4 {
        return Err(Error::InvalidArgument("dip test needs at least 4 observations".into()));
    }
    if n_reference == 0 {
        return Err(Error::InvalidArgument("dip test needs reference samples".into()));
    }
    let dip = dip_statistic(x);
    let n = x.len();
    let mut exceed = 0usize;
    let mut buf = vec![0.0; n];
    for r in 0..n_reference {
        let mut rng = RngKey::new(seed, r as u32, 0, 0).generator();
        for v in buf.iter_mut() {
            *v = rand::Rng::random::<f64>(&mut rng);
        }
        if dip_statistic(&buf) >= dip {
            exceed += 1;
        }
    }
    Ok(DipTest { dip, p_value: exceed as f64 / n_reference as f64, n_reference })
}
