//! Matrix inequalities certifying exponential decay of the observation error,
//! the certificate search and the maximal probe spacing map.
//!
//! For a fixed rate `ξ` every inequality is a 2×2 negative-semidefiniteness
//! condition, so the search works in closed form: `β` is explicit given
//! `(ξ, p0, p1)`, the best `p1` is the maximizer of the minimum of two concave
//! quadratics, `p0` is refined by golden-section search (the profile is
//! concave in `p0`) and `ξ` by a log grid followed by golden-section search.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::traffic_model::Density;

/// Inputs of one certificate question.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateQuery<T> {
    v_f: T,
    gamma: T,
    rho_min: T,
    rho_max: T,
    d_m: T,
}

impl<T: Scalar> CertificateQuery<T> {
    pub fn new(v_f: T, gamma: T, rho_min: T, rho_max: T, d_m: T) -> Result<Self> {
        if !(v_f > T::zero() && v_f.is_finite()) {
            return Err(Error::InvalidQuery(format!("v_f must be > 0, got {v_f}")));
        }
        if !(gamma > T::zero() && gamma.is_finite()) {
            return Err(Error::InvalidQuery(format!(
                "gamma must be > 0, got {gamma}"
            )));
        }
        if !(rho_min > T::zero() && rho_min <= rho_max && rho_max <= T::one()) {
            return Err(Error::InvalidQuery(format!(
                "density bounds must satisfy 0 < rho_min <= rho_max <= 1, got [{rho_min}, {rho_max}]"
            )));
        }
        if !(d_m > T::zero() && d_m.is_finite()) {
            return Err(Error::InvalidQuery(format!("d_M must be > 0, got {d_m}")));
        }
        Ok(Self {
            v_f,
            gamma,
            rho_min,
            rho_max,
            d_m,
        })
    }

    pub fn v_f(&self) -> T {
        self.v_f
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn rho_min(&self) -> T {
        self.rho_min
    }

    pub fn rho_max(&self) -> T {
        self.rho_max
    }

    pub fn d_m(&self) -> T {
        self.d_m
    }

    /// Same bounds, different spacing.
    pub fn with_d_m(&self, d_m: T) -> Result<Self> {
        Self::new(self.v_f, self.gamma, self.rho_min, self.rho_max, d_m)
    }

    /// Largest `p0` keeping `Ψ22 < 0`: `2γπ² e^{−ξ d_M/γ} / d_M²`.
    pub fn p0_limit(&self, xi: T) -> T {
        let two = T::lit(2.0);
        two * self.gamma * T::PI() * T::PI() * (-xi * self.d_m / self.gamma).exp()
            / (self.d_m * self.d_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateCandidate<T> {
    pub xi: T,
    pub beta: T,
    pub p0: T,
    pub p1: T,
}

impl<T: Scalar> CertificateCandidate<T> {
    pub fn new(xi: T, beta: T, p0: T, p1: T) -> Result<Self> {
        if !(xi > T::zero() && beta > T::zero() && p0 >= T::zero() && p1.is_finite()) {
            return Err(Error::InvalidQuery(format!(
                "candidate needs xi > 0, beta > 0, p0 >= 0, finite p1; got ({xi}, {beta}, {p0}, {p1})"
            )));
        }
        Ok(Self { xi, beta, p0, p1 })
    }

    /// Weight rate of the Lyapunov functional, `λ = ξ/γ`.
    pub fn lambda(&self, gamma: T) -> T {
        self.xi / gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityCertificate<T> {
    pub candidate: CertificateCandidate<T>,
    /// Overshoot `e^{ξ d_M/(2γ)}`.
    pub k: T,
    /// Decay rate `(ξ/γ) β`.
    pub alpha: T,
    /// Finite-time bound `d_M/(2β)`, hours.
    pub t_star: T,
}

/// Symmetric 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2<T> {
    pub a11: T,
    pub a12: T,
    pub a22: T,
}

impl<T: Scalar> Sym2<T> {
    pub fn det(&self) -> T {
        self.a11 * self.a22 - self.a12 * self.a12
    }
}

/// `Ψ_ξ(ρ̄)` without the `2ξβ` shift, split into its entries.
fn psi_parts<T: Scalar>(q: &CertificateQuery<T>, xi: T, p0: T, p1: T, rho_bar: T) -> Sym2<T> {
    let pi2 = T::PI() * T::PI();
    let slope = q.v_f * (q.rho_max - T::lit(8.0 / 3.0) * rho_bar - T::lit(4.0 / 3.0) * q.rho_min);
    let a11 = slope * xi + p1 * xi + xi * xi - q.gamma * p0;
    let a12 = p1 - T::lit(2.0) * q.v_f * rho_bar;
    let a22 = -T::lit(2.0) + p0 * q.d_m * q.d_m / (q.gamma * pi2) * (xi * q.d_m / q.gamma).exp();
    Sym2 { a11, a12, a22 }
}

pub fn psi_matrix<T: Scalar>(
    q: &CertificateQuery<T>,
    cand: &CertificateCandidate<T>,
    rho_bar: Density<T>,
) -> Sym2<T> {
    let mut m = psi_parts(q, cand.xi, cand.p0, cand.p1, rho_bar.value());
    m.a11 = m.a11 + T::lit(2.0) * cand.xi * cand.beta;
    m
}

/// Exact `M ⪯ 0` test.
pub fn is_nsd_2x2<T: Scalar>(m: &Sym2<T>) -> bool {
    is_nsd_2x2_tol(m, T::zero())
}

/// `M ⪯ 0` up to `tol` on each of the three conditions.
pub fn is_nsd_2x2_tol<T: Scalar>(m: &Sym2<T>, tol: T) -> bool {
    m.a11 <= tol && m.a22 <= tol && m.det() >= -tol
}

/// Both endpoint inequalities.
pub fn check_candidate<T: Scalar>(q: &CertificateQuery<T>, cand: &CertificateCandidate<T>) -> bool {
    [q.rho_min, q.rho_max].iter().all(|&r| {
        let mut m = psi_parts(q, cand.xi, cand.p0, cand.p1, r);
        m.a11 = m.a11 + T::lit(2.0) * cand.xi * cand.beta;
        is_nsd_2x2(&m)
    })
}

/// Scalar form `θ_ξ(ρ̄)`; `None` when `p0` is too large for the Schur
/// complement to exist.
pub fn theta<T: Scalar>(
    q: &CertificateQuery<T>,
    cand: &CertificateCandidate<T>,
    rho_bar: T,
) -> Option<T> {
    let xi = cand.xi;
    let phi_bar =
        xi * q.v_f * (q.rho_max - T::lit(8.0 / 3.0) * rho_bar - T::lit(4.0 / 3.0) * q.rho_min)
            + xi * xi;
    let denom = T::lit(2.0)
        - cand.p0 * q.d_m * q.d_m / (q.gamma * T::PI() * T::PI()) * (xi * q.d_m / q.gamma).exp();
    if !(denom > T::zero()) {
        return None;
    }
    let off = cand.p1 - T::lit(2.0) * q.v_f * rho_bar;
    Some(
        phi_bar + T::lit(2.0) * xi * cand.beta - q.gamma * cand.p0
            + xi * cand.p1
            + off * off / denom,
    )
}

/// `ξ*(ρ̄) = −v_f (ρ_max − 8/3 ρ̄ − 4/3 ρ_min) / 2`.
pub fn xi_star<T: Scalar>(q: &CertificateQuery<T>, rho_bar: T) -> T {
    -q.v_f * (q.rho_max - T::lit(8.0 / 3.0) * rho_bar - T::lit(4.0 / 3.0) * q.rho_min) / T::lit(2.0)
}

/// `(K, α, t*)`.
pub fn certificate_constants<T: Scalar>(
    cand: &CertificateCandidate<T>,
    q: &CertificateQuery<T>,
) -> (T, T, T) {
    let two = T::lit(2.0);
    let k = (cand.xi * q.d_m / (two * q.gamma)).exp();
    let alpha = cand.xi / q.gamma * cand.beta;
    let t_star = q.d_m / (two * cand.beta);
    (k, alpha, t_star)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions<T> {
    /// Log-spaced `ξ` samples before refinement.
    pub xi_points: usize,
    /// Lower end of the `ξ` range as a fraction of its upper end.
    pub xi_floor_ratio: T,
    /// Samples of `p0 / p0_limit` on `[0, p0_fraction_max]`.
    pub p0_points: usize,
    pub p0_fraction_max: T,
    /// Widens the `p1` range to `[−2v_f, 4v_f]` instead of `[0, 2v_f ρ_max]`.
    pub wide_p1: bool,
    pub golden_iterations: usize,
    /// Relative amount the reported `β` is reduced by.
    pub beta_shrink: T,
}

impl<T: Scalar> Default for SearchOptions<T> {
    fn default() -> Self {
        Self {
            xi_points: 64,
            xi_floor_ratio: T::lit(1e-3),
            p0_points: 32,
            p0_fraction_max: T::lit(0.999),
            wide_p1: false,
            golden_iterations: 60,
            beta_shrink: T::lit(1e-9),
        }
    }
}

/// Best `(p1, 2ξβ)` for fixed `ξ` and `p0`.
///
/// Each endpoint gives `g_k(p1) = (p1 − c_k)²/Ψ22 − A_k − ξ p1 ≥ 2ξβ`, a
/// concave quadratic with the same leading coefficient, so the maximum of
/// `min(g_1, g_2)` sits at a vertex, at the crossing or at a range end.
fn best_p1<T: Scalar>(q: &CertificateQuery<T>, xi: T, p0: T, range: (T, T)) -> Option<(T, T)> {
    let lo_m = psi_parts(q, xi, p0, T::zero(), q.rho_min);
    let hi_m = psi_parts(q, xi, p0, T::zero(), q.rho_max);
    let a22 = lo_m.a22;
    if !(a22 < T::zero()) {
        return None;
    }
    // With p1 = 0: a11 = A_k, a12 = −c_k.
    let ends = [(-lo_m.a12, lo_m.a11), (-hi_m.a12, hi_m.a11)];
    let g = |p1: T| {
        ends.iter()
            .map(|&(c, a)| (p1 - c) * (p1 - c) / a22 - a - xi * p1)
            .fold(T::infinity(), T::min)
    };
    let half = T::lit(0.5);
    let mut candidates = vec![range.0, range.1];
    for &(c, _) in &ends {
        candidates.push(c + xi * a22 * half);
    }
    let (c1, a1) = ends[0];
    let (c2, a2) = ends[1];
    if c2 != c1 {
        candidates.push((c1 + c2) * half + a22 * (a1 - a2) / (T::lit(2.0) * (c2 - c1)));
    }
    candidates
        .into_iter()
        .filter(|p| p.is_finite())
        .map(|p| p.max(range.0).min(range.1))
        .map(|p| (p, g(p)))
        .fold(None, |best: Option<(T, T)>, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })
}

/// Golden-section maximization of `f` on `[a, b]`.
fn golden_max<T: Scalar, F: Fn(T) -> T>(f: F, mut a: T, mut b: T, iterations: usize) -> (T, T) {
    let r = T::lit(0.618_033_988_749_894_9);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iterations {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grid search followed by golden-section refinement around the best sample.
fn grid_then_golden<T: Scalar, F: Fn(T) -> T>(f: F, nodes: &[T], iterations: usize) -> (T, T) {
    let values: Vec<T> = nodes.iter().map(|&x| f(x)).collect();
    let mut k = 0;
    for (j, v) in values.iter().enumerate() {
        if *v > values[k] {
            k = j;
        }
    }
    let a = nodes[k.saturating_sub(1)];
    let b = nodes[(k + 1).min(nodes.len() - 1)];
    let refined = if b > a {
        golden_max(&f, a, b, iterations)
    } else {
        (nodes[k], values[k])
    };
    if refined.1 > values[k] {
        refined
    } else {
        (nodes[k], values[k])
    }
}

/// `(p0, p1, 2ξβ)` optimal for a fixed `ξ`.
fn best_for_xi<T: Scalar>(
    q: &CertificateQuery<T>,
    xi: T,
    opts: &SearchOptions<T>,
    p1_range: (T, T),
) -> (T, T, T) {
    let limit = q.p0_limit(xi);
    let value = |f: T| best_p1(q, xi, f * limit, p1_range).map_or(T::neg_infinity(), |(_, v)| v);
    let n = opts.p0_points.max(2);
    let nodes: Vec<T> = (0..n)
        .map(|j| opts.p0_fraction_max * T::from_usize(j).unwrap() / T::from_usize(n - 1).unwrap())
        .collect();
    let (f, _) = grid_then_golden(value, &nodes, opts.golden_iterations);
    let p0 = f * limit;
    match best_p1(q, xi, p0, p1_range) {
        Some((p1, v)) => (p0, p1, v),
        None => (p0, T::zero(), T::neg_infinity()),
    }
}

pub fn max_beta<T: Scalar>(q: &CertificateQuery<T>) -> Option<StabilityCertificate<T>> {
    max_beta_with(q, &SearchOptions::default())
}

pub fn max_beta_with<T: Scalar>(
    q: &CertificateQuery<T>,
    opts: &SearchOptions<T>,
) -> Option<StabilityCertificate<T>> {
    let xi_hi = xi_star(q, q.rho_min).min(xi_star(q, q.rho_max));
    if !(xi_hi > T::zero()) {
        return None;
    }
    let p1_range = if opts.wide_p1 {
        (-T::lit(2.0) * q.v_f, T::lit(4.0) * q.v_f)
    } else {
        (T::zero(), T::lit(2.0) * q.v_f * q.rho_max)
    };
    let xi_lo = xi_hi * opts.xi_floor_ratio;
    let beta_of = |xi: T| best_for_xi(q, xi, opts, p1_range).2 / (T::lit(2.0) * xi);

    // Search in log ξ.
    let (l0, l1) = (xi_lo.ln(), xi_hi.ln());
    let n = opts.xi_points.max(2);
    let nodes: Vec<T> = (0..n)
        .map(|j| l0 + (l1 - l0) * T::from_usize(j).unwrap() / T::from_usize(n - 1).unwrap())
        .collect();
    let (log_xi, _) = grid_then_golden(|l: T| beta_of(l.exp()), &nodes, opts.golden_iterations);
    let xi = log_xi.exp().max(xi_lo).min(xi_hi);
    let (p0, p1, two_xi_beta) = best_for_xi(q, xi, opts, p1_range);
    let raw = two_xi_beta / (T::lit(2.0) * xi);
    if !(raw > T::zero()) || !raw.is_finite() {
        return None;
    }

    // Shrink until the candidate passes the exact test.
    let mut shrink = opts.beta_shrink;
    for _ in 0..40 {
        let beta = raw * (T::one() - shrink);
        let cand = CertificateCandidate { xi, beta, p0, p1 };
        if beta > T::zero() && check_candidate(q, &cand) {
            let (k, alpha, t_star) = certificate_constants(&cand, q);
            return Some(StabilityCertificate {
                candidate: cand,
                k,
                alpha,
                t_star,
            });
        }
        shrink = shrink * T::lit(4.0);
    }
    None
}

/// Result of the spacing search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxDm<T> {
    pub d_m: T,
    /// Set when no spacing down to `cap · 1e−9` is feasible.
    pub flagged: bool,
}

pub const DEFAULT_DM_CAP: f64 = 10.0;

/// Largest certifiable probe spacing, to relative tolerance `1e−3`.
pub fn max_dm<T: Scalar>(v_f: T, gamma: T, rho_min: T, rho_max: T, cap: T) -> Result<MaxDm<T>> {
    max_dm_with(v_f, gamma, rho_min, rho_max, cap, &SearchOptions::default())
}

pub fn max_dm_with<T: Scalar>(
    v_f: T,
    gamma: T,
    rho_min: T,
    rho_max: T,
    cap: T,
    opts: &SearchOptions<T>,
) -> Result<MaxDm<T>> {
    let base = CertificateQuery::new(v_f, gamma, rho_min, rho_max, cap)?;
    let feasible = |d: T| -> Result<bool> { Ok(max_beta_with(&base.with_d_m(d)?, opts).is_some()) };
    if feasible(cap)? {
        return Ok(MaxDm {
            d_m: cap,
            flagged: false,
        });
    }
    let floor = cap * T::lit(1e-9);
    let mut hi = cap;
    let mut lo = cap * T::lit(0.5);
    while !feasible(lo)? {
        hi = lo;
        lo = lo * T::lit(0.5);
        if lo < floor {
            return Ok(MaxDm {
                d_m: T::zero(),
                flagged: true,
            });
        }
    }
    let tol = T::lit(1e-3);
    while hi - lo > tol * lo {
        let mid = (lo + hi) * T::lit(0.5);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MaxDm {
        d_m: lo,
        flagged: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapCell<T> {
    pub rho_min: T,
    pub rho_max: T,
    pub d_m_max: T,
    pub flagged: bool,
}

/// Maximal spacing over the triangle `ρ_min ≤ ρ_max` of the levels `k/n`, `k = 1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityMap<T> {
    pub v_f: T,
    pub gamma: T,
    pub n: usize,
    /// Row-major in `ρ_min`, then `ρ_max`.
    pub cells: Vec<MapCell<T>>,
}

impl<T: Scalar> FeasibilityMap<T> {
    pub fn levels(&self) -> Vec<T> {
        map_levels(self.n)
    }

    /// Cell at level indices `(i, j)`, 1-based, `i ≤ j`.
    pub fn get(&self, i: usize, j: usize) -> Option<&MapCell<T>> {
        if i == 0 || i > j || j > self.n {
            return None;
        }
        // Rows before i hold n, n−1, ..., n−i+2 cells.
        let before = (i - 1) * self.n - (i - 1) * i.saturating_sub(2) / 2;
        self.cells.get(before + (j - i))
    }
}

fn map_levels<T: Scalar>(n: usize) -> Vec<T> {
    (1..=n)
        .map(|k| T::from_usize(k).unwrap() / T::from_usize(n).unwrap())
        .collect()
}

pub fn feasibility_map<T: Scalar>(v_f: T, gamma: T, n: usize, cap: T) -> Result<FeasibilityMap<T>> {
    if n == 0 {
        return Err(Error::InvalidQuery("map resolution must be >= 1".into()));
    }
    let levels = map_levels::<T>(n);
    let pairs: Vec<(T, T)> = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .map(|(i, j)| (levels[i], levels[j]))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(lo, hi)| {
            max_dm(v_f, gamma, lo, hi, cap).map(|m| MapCell {
                rho_min: lo,
                rho_max: hi,
                d_m_max: m.d_m,
                flagged: m.flagged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeasibilityMap {
        v_f,
        gamma,
        n,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn query(rho_min: f64, rho_max: f64, d_m: f64) -> CertificateQuery<f64> {
        CertificateQuery::new(70.0, 3.0, rho_min, rho_max, d_m).unwrap()
    }

    #[test]
    fn query_validation() {
        assert!(CertificateQuery::new(70.0, 3.0, 0.0, 0.5, 1.0).is_err());
        assert!(CertificateQuery::new(70.0, 0.0, 0.2, 0.5, 1.0).is_err());
        assert!(CertificateQuery::new(70.0, 3.0, 0.6, 0.5, 1.0).is_err());
        assert!(CertificateQuery::new(70.0, 3.0, 0.2, 1.1, 1.0).is_err());
        assert!(CertificateQuery::new(70.0, 3.0, 0.2, 0.5, 0.0).is_err());
        assert!(CertificateCandidate::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(CertificateCandidate::new(1.0, 1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn psi_at_zero_rate() {
        let q = query(0.3, 0.6, 0.6);
        let rho = Density::new(0.45).unwrap();
        let zero = CertificateCandidate {
            xi: 0.0,
            beta: 7.0,
            p0: 0.0,
            p1: 0.0,
        };
        let m = psi_matrix(&q, &zero, rho);
        assert_eq!(m.a11, 0.0);
        assert_relative_eq!(m.a12, -2.0 * 70.0 * 0.45);
        assert_eq!(m.a22, -2.0);
        assert!(!is_nsd_2x2(&m));
        assert_relative_eq!(
            m.det(),
            -4.0 * 70.0f64.powi(2) * 0.45f64.powi(2),
            max_relative = 1e-12
        );

        let balanced = CertificateCandidate {
            p1: 2.0 * 70.0 * 0.45,
            ..zero
        };
        let m = psi_matrix(&q, &balanced, rho);
        assert_eq!((m.a11, m.a12, m.a22), (0.0, 0.0, -2.0));
        assert!(is_nsd_2x2(&m));
    }

    #[test]
    fn nsd_examples() {
        let nsd = |a11, a12, a22| is_nsd_2x2(&Sym2 { a11, a12, a22 });
        assert!(nsd(0.0, 0.0, -2.0));
        assert!(!nsd(-1.0, 2.0, -1.0));
        assert!(nsd(-2.0, 1.0, -2.0));
        assert!(!nsd(1e-12, 0.0, -1.0));
        assert!(is_nsd_2x2_tol(
            &Sym2 {
                a11: 1e-12,
                a12: 0.0,
                a22: -1.0
            },
            1e-9
        ));
    }

    #[test]
    fn too_much_p0_fails() {
        let q = query(0.4, 0.65, 0.6);
        for xi in [0.1, 1.0, 10.0] {
            for scale in [1.0, 1.5, 10.0] {
                let cand = CertificateCandidate {
                    xi,
                    beta: 0.01,
                    p0: q.p0_limit(xi) * scale,
                    p1: 50.0,
                };
                assert!(!check_candidate(&q, &cand));
                if scale > 1.0 {
                    assert!(theta(&q, &cand, 0.5).is_none());
                }
            }
        }
    }

    #[test]
    fn xi_star_examples() {
        assert_relative_eq!(
            xi_star(&query(0.5, 0.5, 1.0), 0.5),
            52.5,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            xi_star(&query(0.4, 0.65, 1.0), 0.65),
            56.583_333_333_333_33,
            max_relative = 1e-14
        );
        let wide = CertificateQuery::new(70.0, 3.0, f64::MIN_POSITIVE, 1.0, 1.0).unwrap();
        assert_relative_eq!(xi_star(&wide, 0.0), -35.0, max_relative = 1e-12);
    }

    #[test]
    fn constants_examples() {
        let q = query(0.4, 0.65, 0.6);
        let cand = CertificateCandidate {
            xi: 45.0,
            beta: 0.859,
            p0: 0.0,
            p1: 0.0,
        };
        let (k, alpha, t_star) = certificate_constants(&cand, &q);
        assert_relative_eq!(k, 4.5f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(k, 90.017, max_relative = 1e-4);
        assert_relative_eq!(alpha, 15.0 * 0.859, max_relative = 1e-14);
        assert_relative_eq!(t_star, 0.349_243, max_relative = 1e-5);
        assert_relative_eq!(t_star * 60.0, 20.95, max_relative = 1e-3);
        let faster = CertificateCandidate { beta: 1.0, ..cand };
        assert!(certificate_constants(&faster, &q).2 < t_star);
    }

    #[test]
    fn zero_width_interval_is_certified() {
        for rho in [0.2, 0.5, 0.8] {
            let q = query(rho, rho, 0.3);
            let cert = max_beta(&q).expect("feasible");
            assert!(cert.candidate.beta > 0.0);
            assert!(check_candidate(&q, &cert.candidate));
            assert!(cert.k >= 1.0 && cert.alpha > 0.0 && cert.t_star > 0.0);
        }
    }

    #[test]
    fn wide_mixed_interval_at_long_spacing_fails() {
        assert!(max_beta(&query(0.1, 0.9, 100.0)).is_none());
        assert!(max_beta(&query(0.1, 0.9, 10.0)).is_none());
    }

    #[test]
    fn empty_rate_range_is_infeasible() {
        // ρ_max ≥ 4ρ_min makes ξ*(ρ_min) ≤ 0.
        let q = query(0.2, 0.8, 0.01);
        assert!(xi_star(&q, q.rho_min()) <= 0.0);
        assert!(max_beta(&q).is_none());
    }

    #[test]
    fn spacing_search() {
        let congested = max_dm(70.0, 3.0, 0.6, 0.7, DEFAULT_DM_CAP).unwrap();
        let mixed = max_dm(70.0, 3.0, 0.1, 0.9, DEFAULT_DM_CAP).unwrap();
        assert_eq!(congested.d_m, DEFAULT_DM_CAP);
        assert!(mixed.d_m < congested.d_m);
        let narrow = max_dm(70.0, 3.0, 0.4, 0.6, DEFAULT_DM_CAP).unwrap();
        let wide = max_dm(70.0, 3.0, 0.4, 0.7, DEFAULT_DM_CAP).unwrap();
        assert!(narrow.d_m >= wide.d_m);
        assert!(wide.d_m > 0.0 && !wide.flagged);

        // The bracket really straddles the feasibility edge.
        let q = query(0.4, 0.7, wide.d_m);
        assert!(max_beta(&q).is_some());
        assert!(max_beta(&q.with_d_m(wide.d_m * 1.002).unwrap()).is_none());
    }

    #[test]
    fn small_map_layout() {
        let map = feasibility_map(70.0, 3.0, 5, DEFAULT_DM_CAP).unwrap();
        assert_eq!(map.cells.len(), 15);
        assert_eq!(map.levels(), vec![0.2, 0.4, 0.6, 0.8, 1.0]);
        for i in 1..=5 {
            for j in i..=5 {
                let c = map.get(i, j).unwrap();
                assert_eq!(
                    (c.rho_min, c.rho_max),
                    (map.levels()[i - 1], map.levels()[j - 1])
                );
                assert!(c.d_m_max <= map.get(i, i).unwrap().d_m_max);
            }
        }
        assert!(map.get(3, 2).is_none());
        assert!(map.get(1, 6).is_none());
        assert_eq!(map, feasibility_map(70.0, 3.0, 5, DEFAULT_DM_CAP).unwrap());
    }

    #[test]
    fn golden_section_finds_interior_peak() {
        let (x, fx) = golden_max(|x: f64| -(x - 0.3).powi(2), 0.0, 1.0, 80);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx <= 0.0);
    }

    #[test]
    fn best_p1_matches_dense_scan() {
        let q = query(0.3, 0.7, 0.4);
        let (xi, p0) = (2.0, 0.5 * q.p0_limit(2.0));
        let range = (0.0, 2.0 * 70.0 * 0.7);
        let (p1, v) = best_p1(&q, xi, p0, range).unwrap();
        let scan = (0..=100_000)
            .map(|k| range.1 * k as f64 / 100_000.0)
            .map(|p| {
                [0.3, 0.7]
                    .iter()
                    .map(|&r| {
                        -theta(
                            &q,
                            &CertificateCandidate {
                                xi,
                                beta: 0.0,
                                p0,
                                p1: p,
                            },
                            r,
                        )
                        .unwrap()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(v >= scan - 1e-9);
        // Scan step is ~1e-3 and the optimum sits on a kink.
        assert!((v - scan).abs() < 5e-3);
        assert!(p1 >= range.0 && p1 <= range.1);
    }

    #[test]
    fn single_precision_search() {
        let q = CertificateQuery::<f32>::new(70.0, 3.0, 0.5, 0.5, 0.3).unwrap();
        let cert = max_beta(&q).unwrap();
        assert!(check_candidate(&q, &cert.candidate));
    }
}
