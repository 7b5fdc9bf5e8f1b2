//! Closed-form repair ratios, their bounds, and table data.
//!
//! A repair ratio is the average number of symbols downloaded to rebuild
//! one systematic node divided by the message size of the whole block
//! group. Everything here is exact ([`Q`]); decimals appear only when
//! rendering.

use std::fmt::Write as _;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rsr2::NodeSets;

pub type Q = Ratio<i128>;

fn q(n: usize) -> Q {
    Q::from_integer(n as i128)
}

fn parities(n: usize, k: usize) -> Result<usize> {
    if k == 0 || n <= k {
        return Err(Error::Domain(format!("need 0 < k < n, got n={n}, k={k}")));
    }
    Ok(n - k)
}

/// `Σ m²` over the RSR-II node sets.
fn rsr2_square_sum(k: usize, r: usize) -> usize {
    NodeSets::split(k, r - 1).sizes().iter().map(|m| m * m).sum()
}

/// Repair ratio of RSR-II.
pub fn gamma1(n: usize, k: usize) -> Result<Q> {
    let r = parities(n, k)?;
    if r < 3 {
        return Err(Error::Domain(format!("RSR-II needs r >= 3, got r={r}")));
    }
    let ns = NodeSets::split(k, r - 1);
    let (t, tl, th) = (q(ns.t), q(ns.t_low), q(ns.t_high));
    let (k, r) = (q(k), q(r));
    let one = Q::one();
    let two = q(2);
    let num = (r - two) * k * k + (r - one) * (t * th * th + (r - one - t) * tl * tl);
    Ok(num / (k * k * (two * r - q(3))))
}

/// Stripe-class decomposition of a repair ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatioBreakdown {
    /// Share of protected stripes.
    pub p_p: Q,
    /// Download per message symbol, protected stripes.
    pub eta_p: Q,
    /// Download per message symbol, plain stripes.
    pub eta_np: Q,
    pub gamma: Q,
}

impl RatioBreakdown {
    fn new(p_p: Q, eta_p: Q, eta_np: Q) -> RatioBreakdown {
        RatioBreakdown { p_p, eta_p, eta_np, gamma: (Q::one() - p_p) * eta_np + p_p * eta_p }
    }
}

/// RSR-II: `r - 1` protected stripes out of `2r - 3`.
pub fn gamma1_breakdown(n: usize, k: usize) -> Result<RatioBreakdown> {
    let r = parities(n, k)?;
    if r < 3 {
        return Err(Error::Domain(format!("RSR-II needs r >= 3, got r={r}")));
    }
    let p_p = q(r - 1) / q(2 * r - 3);
    Ok(RatioBreakdown::new(p_p, eta_p_rsr2(k, r), Q::one()))
}

/// Protected-stripe ratio of RSR-II, `Σ m² / k²`.
pub fn eta_p_rsr2(k: usize, r: usize) -> Q {
    q(rsr2_square_sum(k, r)) / q(k * k)
}

fn check_sp(r: usize, s: usize, p: usize) -> Result<()> {
    if s == 0 || p == 0 {
        return Err(Error::Domain(format!("s and p must be at least 1, got s={s}, p={p}")));
    }
    if (r - 1) * p < s {
        return Err(Error::Domain(format!("(r-1)p >= s violated: r={r}, s={s}, p={p}")));
    }
    Ok(())
}

/// Repair ratio of the generalized code with `s` protected and `p`
/// piggybacked stripes.
pub fn gamma2(n: usize, k: usize, s: usize, p: usize) -> Result<Q> {
    let r = parities(n, k)?;
    check_sp(r, s, p)?;
    let w = (r - 1) * p;
    let t = (k * s) % w;
    let (kq, wq) = (q(k), q(w));
    let num = kq * kq * q(p) + kq * kq * q(s * s) / wq + q(t * (w - t)) / wq;
    Ok(num / (kq * kq * q(s + p)))
}

pub fn gamma2_breakdown(n: usize, k: usize, s: usize, p: usize) -> Result<RatioBreakdown> {
    let r = parities(n, k)?;
    check_sp(r, s, p)?;
    let w = (r - 1) * p;
    let (lo, t) = ((k * s) / w, (k * s) % w);
    let squares = t * (lo + 1) * (lo + 1) + (w - t) * lo * lo;
    let p_p = q(s) / q(s + p);
    Ok(RatioBreakdown::new(p_p, q(squares) / q(k * k * s), Q::one()))
}

/// Lower bound on the generalized ratio at protected share `p_p`.
pub fn gamma_low(r: usize, p_p: Q) -> Q {
    let one = Q::one();
    (one - p_p) + p_p * p_p / ((one - p_p) * q(r - 1))
}

/// Upper bound on the generalized ratio at protected share `p_p`.
pub fn gamma_up(k: usize, r: usize, p_p: Q) -> Q {
    let one = Q::one();
    (one - p_p) * (one + q(r - 1) / q(4 * k * k)) + p_p * p_p / ((one - p_p) * q(r - 1))
}

pub fn bounds(n: usize, k: usize, s: usize, p: usize) -> Result<(Q, Q)> {
    let r = parities(n, k)?;
    check_sp(r, s, p)?;
    let p_p = q(s) / q(s + p);
    Ok((gamma_low(r, p_p), gamma_up(k, r, p_p)))
}

pub fn gamma_low_f64(r: f64, p_p: f64) -> f64 {
    (1.0 - p_p) + p_p * p_p / ((1.0 - p_p) * (r - 1.0))
}

pub fn gamma_up_f64(k: f64, r: f64, p_p: f64) -> f64 {
    (1.0 - p_p) * (1.0 + (r - 1.0) / (4.0 * k * k)) + p_p * p_p / ((1.0 - p_p) * (r - 1.0))
}

/// `(argmin, min)` of the lower bound over `p_p ∈ (0, 1)`.
pub fn gamma_low_min(r: f64) -> (f64, f64) {
    let sr = r.sqrt();
    (1.0 - 1.0 / sr, 2.0 / (sr + 1.0))
}

/// `(argmin, min)` of the upper bound over `p_p ∈ (0, 1)`.
pub fn gamma_up_min(k: f64, r: f64) -> (f64, f64) {
    let c = (r + (r - 1.0).powi(2) / (4.0 * k * k)).sqrt();
    (1.0 - 1.0 / c, (2.0 * c - 2.0) / (r - 1.0))
}

/// Smallest RSR-II ratio for `r` parities, reached when `(r-1) | k`.
pub fn gamma1_min(r: usize) -> Q {
    q(r - 1) / q(2 * r - 3)
}

/// Grid scan of `f` over `(lo, hi)` with `steps` interior points, then
/// golden-section refinement around the best point.
pub fn minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> (f64, f64) {
    let h = (hi - lo) / (steps as f64 + 1.0);
    let (mut best, mut best_v) = (lo + h, f(lo + h));
    for i in 2..=steps {
        let x = lo + h * i as f64;
        let v = f(x);
        if v < best_v {
            best = x;
            best_v = v;
        }
    }
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while b - a > 1e-12 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let x = (a + b) / 2.0;
    let v = f(x);
    if v < best_v {
        (x, v)
    } else {
        (best, best_v)
    }
}

/// Bounds on the `(s, p)` search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchSpace {
    pub max_stripes: usize,
    pub max_p: Option<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace { max_stripes: 32, max_p: None }
    }
}

/// Exhaustive search for the `(s, p)` minimizing the generalized ratio.
/// Ties go to fewer stripes, then to smaller `p`.
pub fn optimize_sp(n: usize, k: usize, space: SearchSpace) -> Result<(usize, usize, Q)> {
    let r = parities(n, k)?;
    if space.max_stripes < 2 {
        return Err(Error::Domain(format!("max_stripes must be at least 2, got {}", space.max_stripes)));
    }
    let mut best: Option<(usize, usize, Q)> = None;
    let p_cap = space.max_p.unwrap_or(usize::MAX).min(space.max_stripes - 1);
    for total in 2..=space.max_stripes {
        for p in 1..=p_cap.min(total - 1) {
            let s = total - p;
            if (r - 1) * p < s {
                continue;
            }
            let g = gamma2(n, k, s, p)?;
            if best.as_ref().is_none_or(|b| g < b.2) {
                best = Some((s, p, g));
            }
        }
    }
    best.ok_or_else(|| Error::Domain(format!("no feasible (s, p) for n={n}, k={k}")))
}

/// Inputs of the MSR repair-bandwidth formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MsrParams {
    pub n: usize,
    pub k: usize,
    /// Helper nodes contacted.
    pub d: usize,
}

impl MsrParams {
    pub fn new(n: usize, k: usize, d: usize) -> Result<MsrParams> {
        if k == 0 || d < k || d + 1 > n {
            return Err(Error::Domain(format!("need k <= d <= n-1, got n={n}, k={k}, d={d}")));
        }
        Ok(MsrParams { n, k, d })
    }

    /// Bandwidth for one node as a share of the message size.
    pub fn ratio(&self) -> Q {
        q(self.d) / q(self.k * (self.d - self.k + 1))
    }

    /// Bandwidth for a message of `m` symbols.
    pub fn bandwidth(&self, m: usize) -> Q {
        q(m) * self.ratio()
    }
}

/// MSR ratio with all `n - 1` survivors as helpers.
pub fn gamma_msr(n: usize, k: usize) -> Result<Q> {
    Ok(MsrParams::new(n, k, n - 1)?.ratio())
}

/// `2/r - 1/r²`, the rate-1/2 special case.
pub fn gamma_msr_half_rate(r: usize) -> Q {
    q(2) / q(r) - Q::one() / q(r * r)
}

/// One configuration of a comparison table. Missing `s`/`p` are chosen by
/// [`optimize_sp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableConfig {
    pub n: usize,
    pub k: usize,
    pub sp: Option<(usize, usize)>,
}

impl TableConfig {
    pub fn new(n: usize, k: usize) -> TableConfig {
        TableConfig { n, k, sp: None }
    }

    pub fn with_sp(n: usize, k: usize, s: usize, p: usize) -> TableConfig {
        TableConfig { n, k, sp: Some((s, p)) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub s: usize,
    pub p: usize,
    pub stripes: usize,
    /// Absent when `r < 3`.
    pub gamma1: Option<Q>,
    pub gamma2: Q,
    pub gamma_low: Q,
    pub gamma_up: Q,
    pub gamma_msr: Q,
}

pub const CSV_HEADER: &str = "n,k,r,s,p,stripes,gamma1,gamma2,gamma_low,gamma_up,gamma_msr";

/// The seven comparison rows with their published `(s, p)` choices.
pub fn reference_configs() -> Vec<TableConfig> {
    [(10, 5, 1, 1), (20, 10, 2, 1), (30, 15, 3, 1), (40, 20, 4, 1), (50, 25, 4, 1), (80, 40, 5, 1), (200, 100, 9, 1)]
        .into_iter()
        .map(|(n, k, s, p)| TableConfig::with_sp(n, k, s, p))
        .collect()
}

pub fn emit_tables(configs: &[TableConfig], space: SearchSpace) -> Result<Vec<TableRow>> {
    configs
        .iter()
        .map(|c| {
            let r = parities(c.n, c.k)?;
            let (s, p) = match c.sp {
                Some(sp) => sp,
                None => {
                    let (s, p, _) = optimize_sp(c.n, c.k, space)?;
                    (s, p)
                }
            };
            let (gamma_low, gamma_up) = bounds(c.n, c.k, s, p)?;
            Ok(TableRow {
                n: c.n,
                k: c.k,
                r,
                s,
                p,
                stripes: s + p,
                gamma1: if r >= 3 { Some(gamma1(c.n, c.k)?) } else { None },
                gamma2: gamma2(c.n, c.k, s, p)?,
                gamma_low,
                gamma_up,
                gamma_msr: gamma_msr(c.n, c.k)?,
            })
        })
        .collect()
}

/// Decimal rendering with `digits` fractional digits, rounding half to even.
pub fn format_decimal(x: Q, digits: u32) -> String {
    let scale = 10i128.pow(digits);
    let scaled = x.abs() * Q::from_integer(scale);
    let floor = scaled.floor().to_integer();
    let frac = scaled - Q::from_integer(floor);
    let half = Q::new(1, 2);
    let units = if frac > half || (frac == half && floor % 2 == 1) { floor + 1 } else { floor };
    let sign = if x.is_negative() && units != 0 { "-" } else { "" };
    if digits == 0 {
        return format!("{sign}{units}");
    }
    format!("{sign}{}.{:0width$}", units / scale, units % scale, width = digits as usize)
}

pub fn to_csv(rows: &[TableRow], digits: u32) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let g1 = row.gamma1.map(|g| format_decimal(g, digits)).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.n,
            row.k,
            row.r,
            row.s,
            row.p,
            row.stripes,
            g1,
            format_decimal(row.gamma2, digits),
            format_decimal(row.gamma_low, digits),
            format_decimal(row.gamma_up, digits),
            format_decimal(row.gamma_msr, digits),
        );
    }
    out
}

pub fn to_plain(rows: &[TableRow], digits: u32) -> String {
    let cols: Vec<&str> = CSV_HEADER.split(',').collect();
    let mut cells: Vec<Vec<String>> = vec![cols.iter().map(|c| c.to_string()).collect()];
    for line in to_csv(rows, digits).lines().skip(1) {
        cells.push(line.split(',').map(|c| if c.is_empty() { "-".into() } else { c.into() }).collect());
    }
    let widths: Vec<usize> =
        (0..cols.len()).map(|i| cells.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in cells {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// `(p_p, Γ_low, Γ_up)` at `samples` evenly spaced interior points.
pub fn bound_curves(k: usize, r: usize, samples: usize) -> Vec<(f64, f64, f64)> {
    (1..=samples)
        .map(|i| {
            let x = i as f64 / (samples as f64 + 1.0);
            (x, gamma_low_f64(r as f64, x), gamma_up_f64(k as f64, r as f64, x))
        })
        .collect()
}

/// Per-`r` minimum curves: `(r, min γ1, min Γ_low, γ_MSR)` at rate 1/2.
pub fn min_curves(rs: impl IntoIterator<Item = usize>) -> Vec<(usize, f64, f64, f64)> {
    rs.into_iter()
        .filter(|&r| r >= 3)
        .map(|r| {
            (
                r,
                gamma1_min(r).to_f64().unwrap_or(f64::NAN),
                gamma_low_min(r as f64).1,
                gamma_msr_half_rate(r).to_f64().unwrap_or(f64::NAN),
            )
        })
        .collect()
}

/// Exact value as `f64`.
pub fn to_f64(x: Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `true` when `x` is a whole number.
pub fn is_integer(x: Q) -> bool {
    x.fract().is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct average of per-node RSR-II downloads.
    fn gamma1_oracle(n: usize, k: usize) -> Q {
        let r = n - k;
        let ns = NodeSets::split(k, r - 1);
        let total: usize = (0..k)
            .map(|l| {
                let m = ns.sets()[ns.set_of(l).unwrap()].len();
                (r - 2) * k + (r - 1) + (r - 1) * (m - 1)
            })
            .sum();
        Q::new(total as i128, (k * k * (2 * r - 3)) as i128)
    }

    /// Direct count through the filled array columns.
    fn gamma2_oracle(n: usize, k: usize, s: usize, p: usize) -> Q {
        let w = (n - k - 1) * p;
        let mut sizes = vec![0usize; w];
        for pos in 0..k * s {
            sizes[pos % w] += 1;
        }
        let total = k * k * p + sizes.iter().map(|x| x * x).sum::<usize>();
        Q::new(total as i128, (k * k * (s + p)) as i128)
    }

    fn sweep() -> Vec<(usize, usize, usize, usize)> {
        let mut v = Vec::new();
        for k in 2..=24 {
            for r in 2..=12 {
                for p in 1..=4 {
                    for s in 1..=((r - 1) * p).min(20) {
                        v.push((k + r, k, s, p));
                    }
                }
            }
        }
        v
    }

    #[test]
    fn reference_gamma1_values() {
        assert_eq!(gamma1(10, 5).unwrap(), Q::new(103, 175));
        let expect = [
            (10, 5, "0.5886"),
            (20, 10, "0.5341"),
            (30, 15, "0.5207"),
            (40, 20, "0.5147"),
            (50, 25, "0.5114"),
            (80, 40, "0.5068"),
            (200, 100, "0.5026"),
        ];
        for (n, k, v) in expect {
            assert_eq!(format_decimal(gamma1(n, k).unwrap(), 4), v, "({n},{k})");
        }
    }

    #[test]
    fn gamma1_matches_oracle_and_decomposition() {
        for k in 2..40 {
            for r in 3..15 {
                let g = gamma1(k + r, k).unwrap();
                assert_eq!(g, gamma1_oracle(k + r, k));
                assert_eq!(gamma1_breakdown(k + r, k).unwrap().gamma, g);
                let eta = eta_p_rsr2(k, r);
                let floor = Q::new(1, (r - 1) as i128);
                if k % (r - 1) == 0 {
                    assert_eq!(eta, floor);
                    assert_eq!(g, gamma1_min(r));
                } else {
                    assert!(eta > floor, "k={k} r={r}");
                }
            }
        }
    }

    #[test]
    fn gamma1_needs_three_parities() {
        assert!(matches!(gamma1(6, 4), Err(Error::Domain(_))));
        assert!(matches!(gamma1(4, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn reference_gamma2_values() {
        assert_eq!(gamma2(20, 10, 2, 1).unwrap(), Q::new(146, 300));
        assert_eq!(gamma2(8, 4, 3, 2).unwrap(), Q::new(7, 10));
        for (c, v) in reference_configs().iter().zip(["0.6400", "0.4867", "0.4133", "0.3700", "0.3344", "0.2740", "0.1819"]) {
            let (s, p) = c.sp.unwrap();
            assert_eq!(format_decimal(gamma2(c.n, c.k, s, p).unwrap(), 4), v);
        }
    }

    #[test]
    fn gamma2_matches_oracle_and_decomposition() {
        for (n, k, s, p) in sweep() {
            let g = gamma2(n, k, s, p).unwrap();
            assert_eq!(g, gamma2_oracle(n, k, s, p));
            assert_eq!(gamma2_breakdown(n, k, s, p).unwrap().gamma, g);
        }
        assert!(matches!(gamma2(8, 4, 7, 2), Err(Error::Domain(_))));
        assert!(matches!(gamma2(8, 4, 0, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn bounds_sandwich_gamma2() {
        for (n, k, s, p) in sweep() {
            let (lo, up) = bounds(n, k, s, p).unwrap();
            let g = gamma2(n, k, s, p).unwrap();
            assert!(lo <= g && g <= up, "({n},{k},{s},{p})");
        }
    }

    #[test]
    fn bound_minimizers() {
        assert_eq!(gamma_low(4, Q::new(1, 2)), Q::new(2, 3));
        for r in 3..=50 {
            let rf = r as f64;
            let (x, v) = minimize(|x| gamma_low_f64(rf, x), 0.0, 1.0, 999);
            let (x0, v0) = gamma_low_min(rf);
            assert!((x - x0).abs() < 1e-3);
            assert!((v - v0).abs() < 1e-9);
            for k in [r, 2 * r, 100] {
                let kf = k as f64;
                let (x, v) = minimize(|x| gamma_up_f64(kf, rf, x), 0.0, 1.0, 999);
                let (x0, v0) = gamma_up_min(kf, rf);
                assert!((x - x0).abs() < 1e-3);
                assert!((v - v0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn asymptotes() {
        let r = 10_000;
        assert!((to_f64(gamma1_min(r)) - 0.5).abs() < 1e-4);
        assert!((gamma_low_min(r as f64).1 - 0.0198).abs() < 1e-4);
    }

    #[test]
    fn msr_ratio() {
        assert_eq!(gamma_msr_half_rate(5), Q::new(9, 25));
        assert_eq!(gamma_msr(10, 5).unwrap(), Q::new(9, 25));
        assert_eq!(MsrParams::new(5, 4, 4).unwrap().ratio(), Q::one());
        assert_eq!(MsrParams::new(10, 5, 9).unwrap().bandwidth(25), Q::from_integer(9));
        assert!(matches!(MsrParams::new(10, 5, 4), Err(Error::Domain(_))));
        for r in 1..200 {
            assert!(gamma_msr_half_rate(r + 1) < gamma_msr_half_rate(r));
            assert_eq!(gamma_msr(2 * r, r).unwrap(), gamma_msr_half_rate(r));
        }
    }

    #[test]
    fn fig6_ordering() {
        for r in 3..=50 {
            let msr = to_f64(gamma_msr_half_rate(r));
            let low = gamma_low_min(r as f64).1;
            assert!(msr < low, "r={r}");
            // the bound curve only drops below the RSR-II minimum from r = 8 on
            assert_eq!(low < to_f64(gamma1_min(r)), r >= 8, "r={r}");
        }
    }

    #[test]
    fn optimizer() {
        let space = |m, p| SearchSpace { max_stripes: m, max_p: p };
        let (s, p, g) = optimize_sp(20, 10, space(3, None)).unwrap();
        assert_eq!((s, p, format_decimal(g, 4).as_str()), (2, 1, "0.4867"));
        let (s, p, g) = optimize_sp(200, 100, space(10, None)).unwrap();
        assert_eq!((s, p, format_decimal(g, 4).as_str()), (9, 1, "0.1819"));
        // the unconstrained optimum can use more than one piggybacked stripe
        let (s, p, _) = optimize_sp(10, 5, SearchSpace::default()).unwrap();
        assert_eq!((s, p), (8, 5));
        // single piggybacked stripe reproduces the reference values
        for (c, v) in reference_configs().iter().zip(["0.6400", "0.4867", "0.4133", "0.3700", "0.3344", "0.2740", "0.1819"]) {
            let (_, _, g) = optimize_sp(c.n, c.k, space(32, Some(1))).unwrap();
            assert_eq!(format_decimal(g, 4), v);
        }
        assert!(matches!(optimize_sp(10, 5, space(1, None)), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn optimizer_beats_every_feasible_pair(k in 2usize..30, r in 2usize..10, m in 2usize..14) {
            let n = k + r;
            let (s0, p0, g0) = optimize_sp(n, k, SearchSpace { max_stripes: m, max_p: None }).unwrap();
            for p in 1..m {
                for s in 1..=m - p {
                    if (r - 1) * p < s { continue; }
                    let g = gamma2(n, k, s, p).unwrap();
                    prop_assert!(g0 <= g);
                    if g == g0 {
                        prop_assert!((s0 + p0, p0) <= (s + p, p));
                    }
                }
            }
        }

        #[test]
        fn decimal_rendering_rounds_half_even(num in -100_000i128..100_000, den in 1i128..5000) {
            let x = Q::new(num, den);
            let text = format_decimal(x, 4);
            let back: f64 = text.parse().unwrap();
            prop_assert!((back - to_f64(x)).abs() <= 5e-5 + 1e-12);
        }
    }

    #[test]
    fn decimal_edges() {
        assert_eq!(format_decimal(Q::new(1, 20000), 4), "0.0000");
        assert_eq!(format_decimal(Q::new(3, 20000), 4), "0.0002");
        assert_eq!(format_decimal(Q::new(-3, 20000), 4), "-0.0002");
        assert_eq!(format_decimal(Q::new(-1, 20000), 4), "0.0000");
        assert_eq!(format_decimal(Q::new(7, 10), 4), "0.7000");
        assert_eq!(format_decimal(Q::new(5, 2), 0), "2");
        assert_eq!(format_decimal(Q::from_integer(3), 2), "3.00");
    }

    #[test]
    fn csv_output() {
        let rows = emit_tables(&reference_configs(), SearchSpace::default()).unwrap();
        let csv = to_csv(&rows, 4);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("10,5,5,1,1,2,0.5886,0.6400,0.6250,0.6450,0.3600"));
        let rows = emit_tables(&[TableConfig::with_sp(6, 4, 1, 1)], SearchSpace::default()).unwrap();
        assert!(to_csv(&rows, 4).lines().nth(1).unwrap().starts_with("6,4,2,1,1,2,,"));
        assert!(to_plain(&rows, 4).starts_with("n"));
    }

    #[test]
    fn curves() {
        let c = bound_curves(5, 5, 99);
        assert_eq!(c.len(), 99);
        assert!(c.iter().all(|&(_, lo, up)| lo <= up));
        let m = min_curves(1..=10);
        assert_eq!(m.first().unwrap().0, 3);
        assert!(is_integer(Q::from_integer(2)));
    }
}
