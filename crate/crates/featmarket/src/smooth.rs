//! Differentiable surrogate prices.
//!
//! The exact pricing scan is made differentiable by replacing its two
//! discrete steps: the sort becomes a temperature-controlled soft sorting
//! matrix, and the argmax over candidate revenues becomes a softmax. The
//! result `rho_smooth` converges to the exact price as both temperatures
//! shrink (away from ties), and exact partial derivatives with respect to
//! every unit and budget are available through a hand-rolled reverse pass.
//!
//! Normalization keeps the computation scale-free so fixed temperatures
//! behave consistently across batches: normalized demand is divided by its
//! minimum (smallest entry becomes 1) before the soft sort, candidate
//! revenues are divided by their maximum before the softmax, and the final
//! price is divided by the demand normalizer to restore units. Under these
//! choices `rho(alpha * u) = rho(u) / alpha` holds identically.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::market::DemandProfile;

/// Temperatures for the soft sort and soft argmax, plus a lower clamp on the
/// returned price so downstream `b / rho` terms stay finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothPriceConfig {
    pub temp_softsort: f64,
    pub temp_softmax: f64,
    pub rho_floor: f64,
}

impl Default for SmoothPriceConfig {
    fn default() -> Self {
        Self { temp_softsort: 1e-3, temp_softmax: 1e-2, rho_floor: 1e-12 }
    }
}

impl SmoothPriceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temp_softsort > 0.0) || !self.temp_softsort.is_finite() {
            return Err(MarketError::InvalidTemperature(self.temp_softsort));
        }
        if !(self.temp_softmax > 0.0) || !self.temp_softmax.is_finite() {
            return Err(MarketError::InvalidTemperature(self.temp_softmax));
        }
        if !(self.rho_floor > 0.0) {
            return Err(MarketError::InvalidConfig(format!(
                "rho_floor must be positive (got {})",
                self.rho_floor
            )));
        }
        Ok(())
    }
}

/// Smoothed price plus its exact partials with respect to each profile
/// point's units and budget (in profile order).
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPriceResult {
    pub rho_smooth: f64,
    pub d_rho_d_units: Vec<f64>,
    pub d_rho_d_budgets: Vec<f64>,
    /// True when the price was clamped at `rho_floor` (gradients are zero).
    pub clamped: bool,
}

/// Row-stochastic soft sorting matrix in ascending order.
///
/// Row `i` is a softmax over `-|sorted_i - value_j| / temp`, so as
/// `temp -> 0` the matrix converges to the ascending-sort permutation matrix
/// (ties share their rows' mass evenly). Applying it to the input yields a
/// softly sorted vector.
pub fn soft_sort(values: &[f64], temp: f64) -> Result<Vec<Vec<f64>>> {
    if values.is_empty() {
        return Err(MarketError::EmptyProfile);
    }
    if !(temp > 0.0) || !temp.is_finite() {
        return Err(MarketError::InvalidTemperature(temp));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values must not be NaN"));
    let mut rows = Vec::with_capacity(values.len());
    for s in sorted {
        let mut row: Vec<f64> = values.iter().map(|&v| (-(s - v).abs() / temp).exp()).collect();
        let total: f64 = row.iter().sum();
        for e in &mut row {
            *e /= total;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Intermediate state of the smooth pricing pipeline, kept for the reverse
/// pass.
struct Forward {
    n: usize,
    ubar: Vec<f64>,
    min_index: usize,
    gamma: f64,
    v: Vec<f64>,
    perm: Vec<usize>,
    sorted_v: Vec<f64>,
    /// Row-stochastic soft sort matrix, row-major.
    pi: Vec<f64>,
    row_sums: Vec<f64>,
    soft_norm: Vec<f64>,
    z: Vec<f64>,
    cum_units: Vec<f64>,
    max_index: usize,
    max_rev: f64,
    scaled_rev: Vec<f64>,
    weights: Vec<f64>,
    rho_norm: f64,
    rho: f64,
}

fn forward(units: &[f64], budgets: &[f64], cfg: &SmoothPriceConfig) -> Forward {
    let n = units.len();
    let t_sort = cfg.temp_softsort;
    let t_max = cfg.temp_softmax;

    let ubar: Vec<f64> = units.iter().zip(budgets).map(|(u, b)| u / b).collect();
    let mut min_index = 0;
    for (i, &x) in ubar.iter().enumerate() {
        if x < ubar[min_index] {
            min_index = i;
        }
    }
    let gamma = ubar[min_index];
    let v: Vec<f64> = ubar.iter().map(|x| x / gamma).collect();

    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| (v[a], a).partial_cmp(&(v[b], b)).expect("demand must be finite"));
    let sorted_v: Vec<f64> = perm.iter().map(|&j| v[j]).collect();

    let mut pi = vec![0.0; n * n];
    let mut row_sums = vec![0.0; n];
    for i in 0..n {
        let row = &mut pi[i * n..(i + 1) * n];
        let mut total = 0.0;
        for (j, e) in row.iter_mut().enumerate() {
            *e = (-(sorted_v[i] - v[j]).abs() / t_sort).exp();
            total += *e;
        }
        for e in row.iter_mut() {
            *e /= total;
        }
        row_sums[i] = total;
    }

    let mut soft_units = vec![0.0; n];
    let mut soft_norm = vec![0.0; n];
    for i in 0..n {
        let row = &pi[i * n..(i + 1) * n];
        let mut au = 0.0;
        let mut av = 0.0;
        for j in 0..n {
            au += row[j] * units[j];
            av += row[j] * v[j];
        }
        soft_units[i] = au;
        soft_norm[i] = av;
    }

    let z: Vec<f64> = soft_norm.iter().map(|d| 1.0 / d).collect();
    let mut cum_units = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc += soft_units[i];
        cum_units[i] = acc;
    }
    let rev: Vec<f64> = z.iter().zip(&cum_units).map(|(zi, ci)| zi * ci).collect();

    let mut max_index = 0;
    for (i, &r) in rev.iter().enumerate() {
        if r > rev[max_index] {
            max_index = i;
        }
    }
    let max_rev = rev[max_index];
    let scaled_rev: Vec<f64> = rev.iter().map(|r| r / max_rev).collect();

    // softmax over scaled revenues; the maximum entry is exactly 1
    let mut weights: Vec<f64> = scaled_rev.iter().map(|t| ((t - 1.0) / t_max).exp()).collect();
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= wsum;
    }

    let rho_norm: f64 = z.iter().zip(&weights).map(|(zi, qi)| zi * qi).sum();
    let rho = rho_norm / gamma;

    Forward {
        n,
        ubar,
        min_index,
        gamma,
        v,
        perm,
        sorted_v,
        pi,
        row_sums,
        soft_norm,
        z,
        cum_units,
        max_index,
        max_rev,
        scaled_rev,
        weights,
        rho_norm,
        rho,
    }
}

/// Reverse pass: d rho / d units and d rho / d budgets.
fn backward(units: &[f64], fwd: &Forward, cfg: &SmoothPriceConfig) -> (Vec<f64>, Vec<f64>) {
    let n = fwd.n;
    let t_sort = cfg.temp_softsort;
    let t_max = cfg.temp_softmax;

    // rho = rho_norm / gamma
    let d_rho_norm = 1.0 / fwd.gamma;
    let mut d_gamma = -fwd.rho_norm / (fwd.gamma * fwd.gamma);

    // rho_norm = z . q
    let mut d_z: Vec<f64> = fwd.weights.iter().map(|q| q * d_rho_norm).collect();
    let d_q: Vec<f64> = fwd.z.iter().map(|z| z * d_rho_norm).collect();

    // q = softmax(scaled_rev / t_max)
    let inner: f64 = fwd.weights.iter().zip(&d_q).map(|(q, dq)| q * dq).sum();
    let d_scaled: Vec<f64> = fwd
        .weights
        .iter()
        .zip(&d_q)
        .map(|(q, dq)| q * (dq - inner) / t_max)
        .collect();

    // scaled_rev = rev / max_rev, with max_rev = rev[max_index]
    let mut d_rev: Vec<f64> = d_scaled.iter().map(|d| d / fwd.max_rev).collect();
    let d_max: f64 = -fwd
        .scaled_rev
        .iter()
        .zip(&d_scaled)
        .map(|(t, dt)| t * dt)
        .sum::<f64>()
        / fwd.max_rev;
    d_rev[fwd.max_index] += d_max;

    // rev_i = z_i * cum_units_i
    let mut d_cum = vec![0.0; n];
    for i in 0..n {
        d_z[i] += fwd.cum_units[i] * d_rev[i];
        d_cum[i] = fwd.z[i] * d_rev[i];
    }

    // cum_units = cumsum(soft_units): suffix sums
    let mut d_soft_units = vec![0.0; n];
    let mut suffix = 0.0;
    for i in (0..n).rev() {
        suffix += d_cum[i];
        d_soft_units[i] = suffix;
    }

    // z = 1 / soft_norm
    let d_soft_norm: Vec<f64> = fwd
        .soft_norm
        .iter()
        .zip(&d_z)
        .map(|(d, dz)| -dz / (d * d))
        .collect();

    // soft_units = Pi * units, soft_norm = Pi * v, Pi row-stochastic from
    // exp(-|sorted_v_i - v_j| / t_sort)
    let mut d_units = vec![0.0; n];
    let mut d_v = vec![0.0; n];
    let mut d_sorted = vec![0.0; n];
    let mut d_pi_row = vec![0.0; n];
    for i in 0..n {
        let row = &fwd.pi[i * n..(i + 1) * n];
        for j in 0..n {
            d_pi_row[j] = d_soft_units[i] * units[j] + d_soft_norm[i] * fwd.v[j];
            d_units[j] += row[j] * d_soft_units[i];
            d_v[j] += row[j] * d_soft_norm[i];
        }
        // through the row-wise softmax structure of Pi
        let d_row_sum: f64 =
            -row.iter().zip(&d_pi_row).map(|(p, dp)| p * dp).sum::<f64>() / fwd.row_sums[i];
        for j in 0..n {
            // d rho / d E_ij times E_ij
            let dee = d_pi_row[j] * row[j] + d_row_sum * fwd.row_sums[i] * row[j];
            let sign = (fwd.sorted_v[i] - fwd.v[j]).signum();
            let sign = if fwd.sorted_v[i] == fwd.v[j] { 0.0 } else { sign };
            d_sorted[i] += dee * (-sign / t_sort);
            d_v[j] += dee * (sign / t_sort);
        }
    }

    // sorted_v_i = v[perm_i]
    for i in 0..n {
        d_v[fwd.perm[i]] += d_sorted[i];
    }

    // v = ubar / gamma
    let mut d_ubar = vec![0.0; n];
    for i in 0..n {
        d_ubar[i] += d_v[i] / fwd.gamma;
        d_gamma -= fwd.v[i] * d_v[i] / fwd.gamma;
    }

    // gamma = ubar[min_index]
    d_ubar[fwd.min_index] += d_gamma;

    // ubar = units / budgets
    let mut d_budgets = vec![0.0; n];
    for i in 0..n {
        let b = units[i] / fwd.ubar[i];
        d_units[i] += d_ubar[i] / b;
        d_budgets[i] = -d_ubar[i] * fwd.ubar[i] / b;
    }

    (d_units, d_budgets)
}

fn profile_arrays(profile: &DemandProfile) -> Result<(Vec<f64>, Vec<f64>)> {
    if profile.is_empty() {
        return Err(MarketError::EmptyProfile);
    }
    let units: Vec<f64> = profile.points.iter().map(|p| p.units).collect();
    let budgets: Vec<f64> = profile.points.iter().map(|p| p.budget).collect();
    Ok((units, budgets))
}

/// Smoothed market price. Positive for non-empty profiles; converges to the
/// exact price as the temperatures shrink when the revenue maximizer is
/// unique.
pub fn smooth_price(profile: &DemandProfile, cfg: &SmoothPriceConfig) -> Result<f64> {
    cfg.validate()?;
    let (units, budgets) = profile_arrays(profile)?;
    let fwd = forward(&units, &budgets, cfg);
    Ok(fwd.rho.max(cfg.rho_floor))
}

/// Smoothed price together with its exact partial derivatives with respect
/// to every unit and budget, via reverse-mode differentiation of the
/// implemented pipeline.
pub fn smooth_price_gradient(
    profile: &DemandProfile,
    cfg: &SmoothPriceConfig,
) -> Result<SmoothPriceResult> {
    cfg.validate()?;
    let (units, budgets) = profile_arrays(profile)?;
    let fwd = forward(&units, &budgets, cfg);
    if fwd.rho < cfg.rho_floor {
        return Ok(SmoothPriceResult {
            rho_smooth: cfg.rho_floor,
            d_rho_d_units: vec![0.0; units.len()],
            d_rho_d_budgets: vec![0.0; units.len()],
            clamped: true,
        });
    }
    let (d_units, d_budgets) = backward(&units, &fwd, cfg);
    Ok(SmoothPriceResult {
        rho_smooth: fwd.rho,
        d_rho_d_units: d_units,
        d_rho_d_budgets: d_budgets,
        clamped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::exact_price;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn profile(pairs: &[(f64, f64)]) -> DemandProfile {
        let units: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let budgets: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        DemandProfile::from_units_budgets(&units, &budgets).unwrap()
    }

    fn cfg(sort: f64, max: f64) -> SmoothPriceConfig {
        SmoothPriceConfig { temp_softsort: sort, temp_softmax: max, rho_floor: 1e-12 }
    }

    /// Random profile with well-separated normalized demands and a clearly
    /// unique revenue maximizer, so hard-sort limits are meaningful.
    fn tie_free_profile(rng: &mut ChaCha8Rng, m: usize) -> DemandProfile {
        loop {
            let units: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.5..1.5f64).exp()).collect();
            let budgets: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.5..1.5f64).exp()).collect();
            let p = DemandProfile::from_units_budgets(&units, &budgets).unwrap();
            let mut norm: Vec<f64> = p.points.iter().map(|pt| pt.normalized).collect();
            norm.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let min_gap = norm
                .windows(2)
                .map(|w| (w[1] - w[0]) / w[0])
                .fold(f64::INFINITY, f64::min);
            if min_gap < 1e-2 {
                continue;
            }
            let mut revs: Vec<f64> = crate::pricing::revenue_curve(&p)
                .candidates
                .iter()
                .map(|c| c.revenue)
                .collect();
            revs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            if revs.len() > 1 && (revs[0] - revs[1]) / revs[0] < 1e-2 {
                continue;
            }
            return p;
        }
    }

    #[test]
    fn soft_sort_limits() {
        let m = soft_sort(&[2.0, 1.0], 1e-6).unwrap();
        assert!(m[0][0] < 1e-12 && (m[0][1] - 1.0).abs() < 1e-12);
        assert!((m[1][0] - 1.0).abs() < 1e-12 && m[1][1] < 1e-12);

        let m = soft_sort(&[0.7, 0.7], 0.5).unwrap();
        for row in &m {
            assert!((row[0] - 0.5).abs() < 1e-15 && (row[1] - 0.5).abs() < 1e-15);
        }

        let m = soft_sort(&[3.0], 1.0).unwrap();
        assert_eq!(m, vec![vec![1.0]]);
    }

    #[test]
    fn soft_sort_rows_are_stochastic_and_sort_in_the_limit() {
        let values = [0.4, 3.0, 1.1, 2.2, 0.9];
        let m = soft_sort(&values, 2.0).unwrap();
        for row in &m {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&e| e >= 0.0));
        }
        let hard = soft_sort(&values, 1e-7).unwrap();
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, row) in hard.iter().enumerate() {
            let applied: f64 = row.iter().zip(values).map(|(e, v)| e * v).sum();
            assert!((applied - sorted[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn soft_sort_rejects_bad_inputs() {
        assert!(soft_sort(&[], 1.0).is_err());
        assert!(soft_sort(&[1.0], 0.0).is_err());
        assert!(soft_sort(&[1.0], -2.0).is_err());
    }

    #[test]
    fn single_point_is_exact_at_any_temperature() {
        for (u, b) in [(2.0, 1.0), (0.3, 5.0), (7.0, 0.2)] {
            for temps in [(1e-4, 1e-4), (0.1, 10.0), (1.0, 1.0)] {
                let rho = smooth_price(&profile(&[(u, b)]), &cfg(temps.0, temps.1)).unwrap();
                assert!((rho - b / u).abs() <= 1e-12 * (b / u));
            }
        }
    }

    #[test]
    fn identical_points_are_exact() {
        let p = profile(&[(2.0, 3.0); 7]);
        let rho = smooth_price(&p, &SmoothPriceConfig::default()).unwrap();
        assert!((rho - 1.5).abs() < 1e-12);
    }

    #[test]
    fn converges_to_exact_price() {
        let p = profile(&[(1.0, 1.0), (2.0, 1.0), (4.0, 1.0)]);
        let rho = smooth_price(&p, &cfg(1e-3, 1e-3)).unwrap();
        assert!((rho - 0.25).abs() / 0.25 <= 1e-3);
    }

    #[test]
    fn hard_limit_on_random_tie_free_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let p = tie_free_profile(&mut rng, 24);
            let exact = exact_price(&p).rho;
            let rho = smooth_price(&p, &cfg(1e-4, 1e-4)).unwrap();
            assert!((rho - exact).abs() / exact <= 1e-3, "rho={rho} exact={exact}");
        }
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = tie_free_profile(&mut rng, 32);
        let base = smooth_price(&p, &SmoothPriceConfig::default()).unwrap();
        let mut pts = p.points.clone();
        pts.reverse();
        pts.swap(0, 5);
        let shuffled = DemandProfile { points: pts, source_size: p.source_size };
        let rho = smooth_price(&shuffled, &SmoothPriceConfig::default()).unwrap();
        assert!((rho - base).abs() <= 1e-12 * base);
    }

    #[test]
    fn scale_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let p = tie_free_profile(&mut rng, 16);
            let base = smooth_price(&p, &cfg(1e-4, 1e-4)).unwrap();
            for alpha in [0.1, 10.0] {
                let units: Vec<f64> = p.points.iter().map(|pt| pt.units * alpha).collect();
                let budgets: Vec<f64> = p.points.iter().map(|pt| pt.budget).collect();
                let scaled = DemandProfile::from_units_budgets(&units, &budgets).unwrap();
                let rho = smooth_price(&scaled, &cfg(1e-4, 1e-4)).unwrap();
                assert!((rho * alpha - base).abs() <= 1e-9 * base);
            }
        }
    }

    #[test]
    fn single_point_gradient_closed_form() {
        let (u, b) = (2.0, 3.0);
        let res = smooth_price_gradient(&profile(&[(u, b)]), &SmoothPriceConfig::default()).unwrap();
        assert!((res.rho_smooth - b / u).abs() < 1e-12);
        assert!((res.d_rho_d_units[0] - (-b / (u * u))).abs() < 1e-10);
        assert!((res.d_rho_d_budgets[0] - 1.0 / u).abs() < 1e-10);
    }

    #[test]
    fn identical_points_share_gradients() {
        let p = profile(&[(2.0, 3.0), (2.0, 3.0)]);
        let res = smooth_price_gradient(&p, &SmoothPriceConfig::default()).unwrap();
        assert!((res.d_rho_d_units[0] - res.d_rho_d_units[1]).abs() < 1e-12);
        assert!((res.d_rho_d_budgets[0] - res.d_rho_d_budgets[1]).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let cfg = SmoothPriceConfig::default();
        for _ in 0..20 {
            let p = tie_free_profile(&mut rng, 8);
            let res = smooth_price_gradient(&p, &cfg).unwrap();
            let units: Vec<f64> = p.points.iter().map(|pt| pt.units).collect();
            let budgets: Vec<f64> = p.points.iter().map(|pt| pt.budget).collect();
            for k in 0..units.len() {
                let h = 1e-5 * units[k];
                let mut up = units.clone();
                up[k] += h;
                let mut dn = units.clone();
                dn[k] -= h;
                let f_up = smooth_price(
                    &DemandProfile::from_units_budgets(&up, &budgets).unwrap(),
                    &cfg,
                )
                .unwrap();
                let f_dn = smooth_price(
                    &DemandProfile::from_units_budgets(&dn, &budgets).unwrap(),
                    &cfg,
                )
                .unwrap();
                let fd = (f_up - f_dn) / (2.0 * h);
                let scale = fd.abs().max(res.rho_smooth / units[k]).max(1e-12);
                assert!(
                    (res.d_rho_d_units[k] - fd).abs() <= 1e-4 * scale,
                    "unit {k}: analytic {} fd {}",
                    res.d_rho_d_units[k],
                    fd
                );

                let h = 1e-5 * budgets[k];
                let mut up = budgets.clone();
                up[k] += h;
                let mut dn = budgets.clone();
                dn[k] -= h;
                let f_up = smooth_price(
                    &DemandProfile::from_units_budgets(&units, &up).unwrap(),
                    &cfg,
                )
                .unwrap();
                let f_dn = smooth_price(
                    &DemandProfile::from_units_budgets(&units, &dn).unwrap(),
                    &cfg,
                )
                .unwrap();
                let fd = (f_up - f_dn) / (2.0 * h);
                let scale = fd.abs().max(res.rho_smooth / budgets[k]).max(1e-12);
                assert!(
                    (res.d_rho_d_budgets[k] - fd).abs() <= 1e-4 * scale,
                    "budget {k}: analytic {} fd {}",
                    res.d_rho_d_budgets[k],
                    fd
                );
            }
        }
    }

    #[test]
    fn empty_profile_is_an_error() {
        let p = DemandProfile { points: vec![], source_size: 0 };
        assert!(matches!(
            smooth_price(&p, &SmoothPriceConfig::default()),
            Err(MarketError::EmptyProfile)
        ));
    }
}
