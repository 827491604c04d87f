//! Exact divisible-load scheduling on a single-level tree network.
//!
//! A root processor `P0` holds a divisible load and ships fractions of it to
//! `n` children over dedicated links, one child at a time, in input order.
//! Every node has a front-end, so the root computes its own share while it
//! transmits and each child starts computing as soon as its chunk arrives.
//!
//! The optimum is reached when all processors finish at the same instant,
//! which gives the recursion `alpha[i-1] * w[i-1] = alpha[i] * (z[i] + w[i])`
//! and the closed form implemented by [`solve_optimal`]. [`oracle_solve`]
//! solves the same conditions as a plain linear system and is kept
//! independent of the closed form so the two can check each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Megabytes per gigabyte, used when turning MB/s into s/GB.
pub const MB_PER_GB: f64 = 1000.0;

/// Default compute intensity, GFLOP of work per GB of load.
pub const DEFAULT_COMPUTE_INTENSITY: f64 = 100.0;

/// Raw description of a single-level tree network and its workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SltnConfig {
    /// Compute speed of the root, GFLOPS/s.
    pub root_speed: f64,
    /// Compute speed of each child, GFLOPS/s, in distribution order.
    pub child_speeds: Vec<f64>,
    /// Bandwidth of the link to each child, MB/s.
    pub link_bandwidths: Vec<f64>,
    /// Total workload, GB.
    pub load_gb: f64,
}

impl SltnConfig {
    pub fn new(
        root_speed: f64,
        child_speeds: Vec<f64>,
        link_bandwidths: Vec<f64>,
        load_gb: f64,
    ) -> Result<Self> {
        let config = SltnConfig {
            root_speed,
            child_speeds,
            link_bandwidths,
            load_gb,
        };
        config.validate()?;
        Ok(config)
    }

    /// Number of children.
    pub fn n(&self) -> usize {
        self.child_speeds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.child_speeds.is_empty() {
            return Err(Error::invalid("a tree network needs at least one child"));
        }
        if self.child_speeds.len() != self.link_bandwidths.len() {
            return Err(Error::invalid(format!(
                "{} child speeds but {} link bandwidths",
                self.child_speeds.len(),
                self.link_bandwidths.len()
            )));
        }
        check_positive("root speed", self.root_speed)?;
        check_positive("load", self.load_gb)?;
        for (i, (&s, &b)) in self
            .child_speeds
            .iter()
            .zip(&self.link_bandwidths)
            .enumerate()
        {
            check_positive(&format!("speed of child {}", i + 1), s)?;
            check_positive(&format!("bandwidth of link {}", i + 1), b)?;
        }
        Ok(())
    }
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be positive and finite, got {v}")))
    }
}

/// Per-GB time costs: `w` to compute, `z` to transmit.
///
/// Compute rates must be strictly positive. Link rates may be zero, which
/// models a free link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRates {
    /// Root compute time, s/GB.
    pub w0: f64,
    /// Child compute times, s/GB.
    pub w: Vec<f64>,
    /// Link transmission times, s/GB.
    pub z: Vec<f64>,
}

impl TimeRates {
    pub fn new(w0: f64, w: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        let rates = TimeRates { w0, w, z };
        rates.validate()?;
        Ok(rates)
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    /// Compute rate of processor `i`, where index 0 is the root.
    #[inline]
    pub fn w_at(&self, i: usize) -> f64 {
        if i == 0 {
            self.w0
        } else {
            self.w[i - 1]
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.is_empty() {
            return Err(Error::invalid("a tree network needs at least one child"));
        }
        if self.w.len() != self.z.len() {
            return Err(Error::invalid(format!(
                "{} compute rates but {} link rates",
                self.w.len(),
                self.z.len()
            )));
        }
        check_positive("root compute rate", self.w0)?;
        for (i, (&w, &z)) in self.w.iter().zip(&self.z).enumerate() {
            check_positive(&format!("compute rate of child {}", i + 1), w)?;
            if !(z.is_finite() && z >= 0.0) {
                return Err(Error::invalid(format!(
                    "link rate of child {} must be finite and non-negative, got {z}",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Optimal load fractions and processing time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadAllocation {
    /// `n + 1` fractions, index 0 is the root.
    pub alpha: Vec<f64>,
    /// Optimal time for one GB of load, s.
    pub t_star_norm: f64,
    /// Optimal time for the whole load, s.
    pub t_star: f64,
}

/// Communication and finish instants of an allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingProfile {
    /// Instant the transfer to child `i` completes, for `i = 1..=n`.
    pub comm_finish: Vec<f64>,
    /// Finish instant of every processor, index 0 is the root.
    pub compute_finish: Vec<f64>,
}

impl TimingProfile {
    pub fn makespan(&self) -> f64 {
        self.compute_finish.iter().copied().fold(0.0, f64::max)
    }
}

/// Converts speeds and bandwidths into per-GB time costs.
///
/// `w = compute_intensity / speed` and `z = 1000 / bandwidth`.
pub fn to_time_rates(config: &SltnConfig, compute_intensity: f64) -> Result<TimeRates> {
    check_positive("compute intensity", compute_intensity)?;
    config.validate()?;
    Ok(TimeRates {
        w0: compute_intensity / config.root_speed,
        w: config
            .child_speeds
            .iter()
            .map(|s| compute_intensity / s)
            .collect(),
        z: config
            .link_bandwidths
            .iter()
            .map(|b| MB_PER_GB / b)
            .collect(),
    })
}

/// `beta[i-1] = (z[i] + w[i]) / w[i-1]` for children `i = 1..=n`.
pub fn beta_coefficients(rates: &TimeRates) -> Vec<f64> {
    (1..=rates.n())
        .map(|i| (rates.z[i - 1] + rates.w[i - 1]) / rates.w_at(i - 1))
        .collect()
}

/// Suffix products `S_i = prod(beta_k, k = i+1..=n)` for `i = 0..=n`; `S_n = 1`.
pub fn cumulative_products(betas: &[f64]) -> Vec<f64> {
    let mut s = vec![1.0; betas.len() + 1];
    for i in (0..betas.len()).rev() {
        s[i] = s[i + 1] * betas[i];
    }
    s
}

/// Natural log of the suffix products.
fn log_cumulative_products(betas: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; betas.len() + 1];
    for i in (0..betas.len()).rev() {
        s[i] = s[i + 1] + betas[i].ln();
    }
    s
}

const DIRECT_PRODUCT_MAX_N: usize = 12;
const DIRECT_PRODUCT_MAX_BETA: f64 = 10.0;

/// Closed-form optimal allocation.
///
/// Suffix products are formed in log space for long chains or large
/// ratios; the fractions only depend on ratios of `S`, so a common shift by
/// the largest log term is exact up to rounding.
pub fn solve_optimal(rates: &TimeRates, load_gb: f64) -> Result<LoadAllocation> {
    rates.validate()?;
    check_positive("load", load_gb)?;
    let betas = beta_coefficients(rates);

    let use_logs = rates.n() > DIRECT_PRODUCT_MAX_N
        || betas.iter().any(|&b| b > DIRECT_PRODUCT_MAX_BETA);
    let weights = if use_logs {
        let logs = log_cumulative_products(&betas);
        let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        logs.iter().map(|l| (l - shift).exp()).collect::<Vec<_>>()
    } else {
        cumulative_products(&betas)
    };

    let total: f64 = weights.iter().sum();
    if !total.is_finite() || total <= 0.0 || weights.iter().any(|s| !s.is_finite()) {
        return Err(Error::NumericOverflow(format!(
            "suffix products of {} beta coefficients are not representable",
            betas.len()
        )));
    }
    let alpha: Vec<f64> = weights.iter().map(|s| s / total).collect();
    if alpha.iter().any(|&a| a <= 0.0) {
        return Err(Error::NumericOverflow(
            "a load fraction underflowed to zero".into(),
        ));
    }
    let t_star_norm = rates.w0 * alpha[0];
    Ok(LoadAllocation {
        t_star: t_star_norm * load_gb,
        t_star_norm,
        alpha,
    })
}

/// Replays the distribution timeline for any allocation, optimal or not.
pub fn simulate_timeline(
    rates: &TimeRates,
    alloc: &LoadAllocation,
    load_gb: f64,
) -> Result<TimingProfile> {
    let n = rates.n();
    if alloc.alpha.len() != n + 1 {
        return Err(Error::invalid(format!(
            "allocation has {} fractions, network has {} processors",
            alloc.alpha.len(),
            n + 1
        )));
    }
    if rates.z.len() != n {
        return Err(Error::invalid("rate vectors differ in length"));
    }
    let mut comm_finish = Vec::with_capacity(n);
    let mut compute_finish = Vec::with_capacity(n + 1);
    compute_finish.push(load_gb * alloc.alpha[0] * rates.w0);
    let mut sent = 0.0;
    for i in 1..=n {
        sent += alloc.alpha[i] * rates.z[i - 1];
        let c = load_gb * sent;
        comm_finish.push(c);
        compute_finish.push(c + load_gb * alloc.alpha[i] * rates.w[i - 1]);
    }
    Ok(TimingProfile {
        comm_finish,
        compute_finish,
    })
}

/// Optimal allocation by Gaussian elimination on the simultaneous-finish
/// system, without the beta/S closed form.
///
/// Unknowns are `alpha_0..alpha_n`. Rows `1..=n` encode
/// `w[i-1] * alpha[i-1] - (z[i] + w[i]) * alpha[i] = 0`; the last row is
/// load conservation.
pub fn oracle_solve(rates: &TimeRates, load_gb: f64) -> Result<LoadAllocation> {
    rates.validate()?;
    check_positive("load", load_gb)?;
    let dim = rates.n() + 1;
    let mut a = vec![vec![0.0; dim + 1]; dim];
    for i in 1..dim {
        let row = &mut a[i - 1];
        row[i - 1] = rates.w_at(i - 1);
        row[i] = -(rates.z[i - 1] + rates.w[i - 1]);
    }
    for v in a[dim - 1].iter_mut() {
        *v = 1.0;
    }

    let alpha = gaussian_solve(a)?;
    let t_star_norm = rates.w0 * alpha[0];
    Ok(LoadAllocation {
        t_star: t_star_norm * load_gb,
        t_star_norm,
        alpha,
    })
}

/// Solves an augmented `dim x (dim + 1)` system with partial pivoting.
fn gaussian_solve(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let dim = a.len();
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .expect("non-empty pivot range");
        if a[pivot][col].abs() < f64::MIN_POSITIVE {
            return Err(Error::SingularSystem { column: col });
        }
        a.swap(col, pivot);
        for r in col + 1..dim {
            let factor = a[r][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(r);
            for (dst, src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *dst -= factor * src;
            }
        }
    }
    let mut x = vec![0.0; dim];
    for r in (0..dim).rev() {
        let tail: f64 = (r + 1..dim).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][dim] - tail) / a[r][r];
    }
    Ok(x)
}
