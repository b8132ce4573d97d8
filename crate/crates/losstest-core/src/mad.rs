//! Exact mean absolute deviation of an average of ±1 variables.
//!
//! For Z_1, …, Z_n i.i.d. with values in {−1, +1} and mean a, the module
//! evaluates M_n(a) = E|n⁻¹ Σ Z_i| by exact binomial summation, together
//! with the closed-form floor |a| + √2·n^{−3/2}·σⁿ (σ² = 1 − a²), an
//! independent decomposition used to cross-check the summation, and a
//! validity map that scans where the floor actually holds and how large
//! the matching ceiling constant would have to be.
//!
//! Everything is computed through log-space binomial terms so the same
//! code is usable from n = 1 up to n = 10⁴ without overflow, and M_n(a)
//! is evaluated at |a| so that the a ↔ −a symmetry holds bitwise.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Largest n accepted by the exact summation.
pub const MAX_EXACT_N: usize = 10_000;

/// Absolute slack granted to the floor when classifying a grid point as
/// satisfying it, so ulp-level rounding cannot flip a tight case.
pub const LOWER_BOUND_SLACK: f64 = 1e-12;

fn validate(n: usize, a: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    if n > MAX_EXACT_N {
        return Err(Error::Domain(format!("n = {n} exceeds the exact summation budget {MAX_EXACT_N}")));
    }
    if !a.is_finite() || libm::fabs(a) > 1.0 {
        return Err(Error::Domain(format!("mean a must lie in [-1, 1], got {a}")));
    }
    Ok(())
}

fn lchoose(n: usize, j: usize) -> f64 {
    libm::lgamma((n + 1) as f64) - libm::lgamma((j + 1) as f64) - libm::lgamma((n - j + 1) as f64)
}

/// Sum with Neumaier compensation; the binomial terms span many orders
/// of magnitude, so naive accumulation loses digits.
fn compensated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for t in terms {
        let s = sum + t;
        if libm::fabs(sum) >= libm::fabs(t) {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

fn logsumexp(logs: &[f64]) -> f64 {
    let m = logs.iter().fold(f64::NEG_INFINITY, |acc, &l| if l > acc { l } else { acc });
    if m == f64::NEG_INFINITY {
        return m;
    }
    let mut s = 0.0;
    for &l in logs {
        s += libm::exp(l - m);
    }
    m + libm::log(s)
}

/// E|n⁻¹ Σ Z_i| for ±1 variables with mean a, by exact summation over
/// the binomial count of +1s: Σ_j |2j − n|/n · C(n,j) p^j (1−p)^{n−j}
/// with p = (a+1)/2. Returns 1 exactly for |a| = 1.
pub fn mad_exact(n: usize, a: f64) -> Result<f64> {
    validate(n, a)?;
    let aa = libm::fabs(a);
    if aa == 1.0 {
        return Ok(1.0);
    }
    // evaluate at mean −|a|, i.e. success probability p ≤ 1/2; the sum is
    // invariant under p ↔ 1−p so this pins bitwise symmetry in a
    let p = (1.0 - aa) / 2.0;
    let lp = libm::log(p);
    let lq = libm::log(1.0 - p);
    let ln_n = libm::log(n as f64);
    let terms = (0..=n).filter_map(|j| {
        let dev = (2 * j) as i64 - n as i64;
        if dev == 0 {
            return None;
        }
        let log_term = libm::log(dev.unsigned_abs() as f64) - ln_n
            + lchoose(n, j)
            + j as f64 * lp
            + (n - j) as f64 * lq;
        Some(libm::exp(log_term))
    });
    Ok(compensated_sum(terms))
}

/// The closed-form floor |a| + √2·n^{−3/2}·(1 − a²)^{n/2}.
pub fn mad_lower_bound(n: usize, a: f64) -> Result<f64> {
    validate(n, a)?;
    let aa = libm::fabs(a);
    let nf = n as f64;
    let sigma_pow = libm::exp(0.5 * nf * libm::log(1.0 - aa * aa));
    Ok(aa + core::f64::consts::SQRT_2 * libm::pow(nf, -1.5) * sigma_pow)
}

/// log of 2·E[(2B(n,p) − n)⁺]/n for p = (1 − |a|)/2, the positive-part
/// term in the decomposition M_n(a) = |a| + 2·E[(2B − n)⁺]/n. Returns
/// −∞ when the term vanishes (|a| = 1, or n = 0 never reaches here).
fn log_plus_part(n: usize, a: f64) -> f64 {
    let aa = libm::fabs(a);
    if aa == 1.0 {
        return f64::NEG_INFINITY;
    }
    let p = (1.0 - aa) / 2.0;
    let lp = libm::log(p);
    let lq = libm::log(1.0 - p);
    let ln_n = libm::log(n as f64);
    let logs: Vec<f64> = (n / 2 + 1..=n)
        .map(|j| {
            let dev = (2 * j - n) as f64;
            core::f64::consts::LN_2 + libm::log(dev) - ln_n
                + lchoose(n, j)
                + j as f64 * lp
                + (n - j) as f64 * lq
        })
        .collect();
    logsumexp(&logs)
}

/// Evaluates both sides of the decomposition M_n(a) = |a| + 2·E[(2B(n,p)
/// − n)⁺]/n with p reduced to min(p, 1−p). The two routes share no
/// summation structure beyond the binomial weights, so agreement is a
/// real consistency check on the exact oracle.
pub fn mad_identity_check(n: usize, a: f64) -> Result<(f64, f64)> {
    validate(n, a)?;
    let lhs = mad_exact(n, a)?;
    let rhs = libm::fabs(a) + libm::exp(log_plus_part(n, a));
    Ok((lhs, rhs))
}

/// One evaluation point of the exact oracle and its bounds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MadReport {
    pub n: usize,
    pub a: f64,
    /// E|n⁻¹ Σ Z_i|, exact.
    pub exact: f64,
    /// |a| + √2·n^{−3/2}·σⁿ.
    pub lower_bound: f64,
    /// exact − lower_bound; negative where the floor fails.
    pub bound_gap: f64,
    /// 2·E[(2B(n,p) − n)⁺]/n, the exact excess of M_n(a) over |a|.
    pub plus_part: f64,
}

/// Evaluates the oracle and both bound ingredients at one point.
pub fn mad_report(n: usize, a: f64) -> Result<MadReport> {
    let exact = mad_exact(n, a)?;
    let lower_bound = mad_lower_bound(n, a)?;
    Ok(MadReport {
        n,
        a,
        exact,
        lower_bound,
        bound_gap: exact - lower_bound,
        plus_part: libm::exp(log_plus_part(n, a)),
    })
}

/// One row of the validity map.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidityRow {
    pub n: usize,
    pub a: f64,
    pub exact: f64,
    pub lower_bound: f64,
    /// exact ≥ lower_bound − [`LOWER_BOUND_SLACK`].
    pub lower_ok: bool,
    /// (M_n(a) − |a|)·n^{3/2}·σ^{−n}, the ceiling constant this point
    /// would demand. Computed through the positive-part decomposition in
    /// log space, because the naive difference M_n(a) − |a| drowns in
    /// cancellation once σⁿ falls below the rounding error of |a|.
    /// Absent where it is not finite.
    pub upper_ratio: Option<f64>,
}

/// Scans n = 1..=n_max against every grid mean and records where the
/// floor holds and what ceiling constant each point implies. Grid values
/// must lie strictly inside (−1, 1) so that σ > 0.
pub fn mad_validity_map(n_max: usize, a_grid: &[f64]) -> Result<Vec<ValidityRow>> {
    if n_max == 0 || n_max > 1000 {
        return Err(Error::Domain(format!("n_max must be in [1, 1000], got {n_max}")));
    }
    if a_grid.is_empty() {
        return Err(Error::Domain("a grid must be nonempty".into()));
    }
    for &a in a_grid {
        if !a.is_finite() || libm::fabs(a) >= 1.0 {
            return Err(Error::Domain(format!("grid mean must lie strictly inside (-1, 1), got {a}")));
        }
    }
    let mut rows = Vec::with_capacity(n_max * a_grid.len());
    for n in 1..=n_max {
        for &a in a_grid {
            let exact = mad_exact(n, a)?;
            let lower_bound = mad_lower_bound(n, a)?;
            let aa = libm::fabs(a);
            let log_ratio =
                log_plus_part(n, a) + 1.5 * libm::log(n as f64) - 0.5 * n as f64 * libm::log(1.0 - aa * aa);
            let ratio = libm::exp(log_ratio);
            rows.push(ValidityRow {
                n,
                a,
                exact,
                lower_bound,
                lower_ok: exact >= lower_bound - LOWER_BOUND_SLACK,
                upper_ratio: ratio.is_finite().then_some(ratio),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_domain() {
        assert!(mad_exact(0, 0.0).is_err());
        assert!(mad_exact(10_001, 0.0).is_err());
        assert!(mad_exact(5, 1.5).is_err());
        assert!(mad_exact(5, f64::NAN).is_err());
        assert!(mad_lower_bound(0, 0.0).is_err());
        assert!(mad_identity_check(3, -2.0).is_err());
    }

    #[test]
    fn single_variable_is_one() {
        for a in [-1.0, -0.6, 0.0, 0.3, 1.0] {
            assert_relative_eq!(mad_exact(1, a).unwrap(), 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn small_n_enumeration() {
        // n=2, a=0: |sum| ∈ {2,0,2}/2 with probs {1/4,1/2,1/4}
        assert_relative_eq!(mad_exact(2, 0.0).unwrap(), 0.5, max_relative = 1e-14);
        // n=2, |a|=1/2: p,q = {1/4,3/4} → 0.5625 + 0.0625
        assert_relative_eq!(mad_exact(2, 0.5).unwrap(), 0.625, max_relative = 1e-14);
        assert_relative_eq!(mad_exact(2, -0.5).unwrap(), 0.625, max_relative = 1e-14);
        assert_relative_eq!(mad_exact(3, 0.0).unwrap(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(mad_exact(4, 0.0).unwrap(), 0.375, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_mean_is_exactly_one() {
        for n in [1, 2, 5, 100, 10_000] {
            assert_eq!(mad_exact(n, 1.0).unwrap(), 1.0);
            assert_eq!(mad_exact(n, -1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn symmetry_is_bitwise() {
        for n in [1usize, 2, 3, 7, 20, 171, 200] {
            let mut a = -0.95;
            while a < 1.0 {
                let plus = mad_exact(n, a).unwrap();
                let minus = mad_exact(n, -a).unwrap();
                assert_eq!(plus.to_bits(), minus.to_bits(), "n={n} a={a}");
                a += 0.05;
            }
        }
    }

    #[test]
    fn identity_hand_examples() {
        let (lhs, rhs) = mad_identity_check(2, -0.5).unwrap();
        assert_relative_eq!(lhs, 0.625, max_relative = 1e-14);
        assert_relative_eq!(rhs, 0.625, max_relative = 1e-14);
        let (lhs, rhs) = mad_identity_check(3, 0.0).unwrap();
        assert_relative_eq!(lhs, 0.5, max_relative = 1e-14);
        assert_relative_eq!(rhs, 0.5, max_relative = 1e-14);
        let (lhs, rhs) = mad_identity_check(1, 0.0).unwrap();
        assert_relative_eq!(lhs, 1.0, max_relative = 1e-14);
        assert_relative_eq!(rhs, 1.0, max_relative = 1e-14);
        let (lhs, rhs) = mad_identity_check(5, 1.0).unwrap();
        assert_eq!(lhs, 1.0);
        assert_eq!(rhs, 1.0);
    }

    #[test]
    fn identity_agrees_on_a_grid() {
        for n in (1..=200).step_by(7) {
            for tenths in -9i32..=9 {
                let a = tenths as f64 / 10.0;
                let (lhs, rhs) = mad_identity_check(n, a).unwrap();
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn lower_bound_examples() {
        // tight at n=2, a=0
        let b = mad_lower_bound(2, 0.0).unwrap();
        assert_relative_eq!(b, 0.5, max_relative = 1e-14);
        assert!(mad_exact(2, 0.0).unwrap() >= b - LOWER_BOUND_SLACK);
        // n=4, a=0: floor √2/8 well below exact 0.375
        let b = mad_lower_bound(4, 0.0).unwrap();
        assert_relative_eq!(b, core::f64::consts::SQRT_2 / 8.0, max_relative = 1e-14);
        assert!(mad_exact(4, 0.0).unwrap() > b);
        // violated at n=1, a=0: √2 > 1
        let b = mad_lower_bound(1, 0.0).unwrap();
        assert_relative_eq!(b, core::f64::consts::SQRT_2, max_relative = 1e-14);
        assert!(mad_exact(1, 0.0).unwrap() < b - LOWER_BOUND_SLACK);
        // violated at n=2, |a|=0.5: 0.875 > 0.625
        let b = mad_lower_bound(2, 0.5).unwrap();
        assert_relative_eq!(b, 0.875, max_relative = 1e-14);
        assert!(mad_exact(2, 0.5).unwrap() < b - LOWER_BOUND_SLACK);
    }

    #[test]
    fn jensen_floor_and_cauchy_schwarz_ceiling() {
        for n in [1usize, 2, 5, 17, 64, 200, 999] {
            for tenths in -9i32..=9 {
                let a = tenths as f64 / 10.0;
                let m = mad_exact(n, a).unwrap();
                assert!(m >= libm::fabs(a) - 1e-12, "jensen n={n} a={a} m={m}");
                let ceil = libm::sqrt(a * a + (1.0 - a * a) / n as f64);
                assert!(m <= ceil + 1e-12, "cs n={n} a={a} m={m} ceil={ceil}");
            }
        }
    }

    #[test]
    fn zero_mean_asymptotics_constant() {
        // n·|M_n(0) − √(2/(πn))| peaks at the left edge of the window
        let mut worst = 0.0f64;
        let mut worst_n = 0;
        for n in 10..=1000 {
            let m = mad_exact(n, 0.0).unwrap();
            let approx_val = libm::sqrt(2.0 / (core::f64::consts::PI * n as f64));
            let scaled = n as f64 * libm::fabs(m - approx_val);
            if scaled > worst {
                worst = scaled;
                worst_n = n;
            }
        }
        assert_eq!(worst_n, 10);
        assert_relative_eq!(worst, 0.062195, max_relative = 1e-4);
        assert!(worst < 0.07);
    }

    #[test]
    fn report_fields_are_consistent() {
        let r = mad_report(6, 0.3).unwrap();
        assert_relative_eq!(r.bound_gap, r.exact - r.lower_bound, max_relative = 1e-15);
        assert_relative_eq!(r.exact, 0.3 + r.plus_part, max_relative = 1e-12);
        let r = mad_report(4, -1.0).unwrap();
        assert_eq!(r.exact, 1.0);
        assert_eq!(r.plus_part, 0.0);
    }

    #[test]
    fn validity_map_shape_and_flags() {
        let grid = [0.0, 0.5];
        let rows = mad_validity_map(4, &grid).unwrap();
        assert_eq!(rows.len(), 8);
        // n-major, grid-order within each n
        assert_eq!((rows[0].n, rows[0].a), (1, 0.0));
        assert_eq!((rows[1].n, rows[1].a), (1, 0.5));
        assert_eq!((rows[2].n, rows[2].a), (2, 0.0));

        let r20 = rows.iter().find(|r| r.n == 2 && r.a == 0.0).unwrap();
        assert!(r20.lower_ok);
        assert_relative_eq!(r20.exact, 0.5, max_relative = 1e-14);
        assert_relative_eq!(r20.lower_bound, 0.5, max_relative = 1e-14);

        let r25 = rows.iter().find(|r| r.n == 2 && r.a == 0.5).unwrap();
        assert!(!r25.lower_ok);

        let r10 = rows.iter().find(|r| r.n == 1 && r.a == 0.0).unwrap();
        assert!(!r10.lower_ok);

        for row in &rows {
            let ratio = row.upper_ratio.expect("grid means are interior, σ > 0");
            assert!(ratio > 0.0);
        }
    }

    #[test]
    fn validity_map_rejects_bad_input() {
        assert!(mad_validity_map(0, &[0.0]).is_err());
        assert!(mad_validity_map(1001, &[0.0]).is_err());
        assert!(mad_validity_map(10, &[]).is_err());
        assert!(mad_validity_map(10, &[1.0]).is_err());
        assert!(mad_validity_map(10, &[-1.0]).is_err());
        assert!(mad_validity_map(10, &[f64::NAN]).is_err());
    }

    #[test]
    fn upper_ratio_cap_for_half() {
        // observed ceiling constant for a = 0.5 over the stable range;
        // the maximum sits at the right edge
        let rows = mad_validity_map(200, &[0.5]).unwrap();
        let mut max_ratio = 0.0f64;
        let mut arg = 0;
        for r in rows.iter().filter(|r| r.n >= 13) {
            let v = r.upper_ratio.unwrap();
            if v > max_ratio {
                max_ratio = v;
                arg = r.n;
            }
        }
        assert_eq!(arg, 199);
        assert_relative_eq!(max_ratio, 2.639111, max_relative = 1e-5);
        assert!(max_ratio < 2.65);
    }

    #[test]
    fn large_n_still_stable() {
        // far outside the map range the exact sum must stay sane
        let m = mad_exact(10_000, 0.0).unwrap();
        let approx_val = libm::sqrt(2.0 / (core::f64::consts::PI * 10_000.0));
        assert_relative_eq!(m, approx_val, max_relative = 1e-4);
        let m = mad_exact(10_000, 0.9).unwrap();
        assert!(m >= 0.9 && m <= 1.0);
    }

    #[test]
    fn lower_bound_failure_points_match_oracle_scan() {
        // the floor in its asymptotic reading: each grid mean has a
        // first n beyond which it holds through n = 200. These starting
        // points come from the exact oracle itself.
        let grid: Vec<f64> = (0..=9).map(|t| t as f64 / 10.0).collect();
        let expected_n0 = [2usize, 3, 3, 5, 7, 13, 85, 63, 43, 28];
        let rows = mad_validity_map(200, &grid).unwrap();
        for (idx, &a) in grid.iter().enumerate() {
            let mut n0 = 1;
            for r in rows.iter().filter(|r| r.a == a) {
                if !r.lower_ok {
                    n0 = r.n + 1;
                }
            }
            assert_eq!(n0, expected_n0[idx], "a={a}");
        }
    }
}
