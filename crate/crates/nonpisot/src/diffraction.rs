//! Fourier-Bohr exponential sums, Bragg-peak detection, and the numerical
//! distribution function F(x) of the diffraction measure. For balanced
//! weights the diffraction is purely singular continuous: pointwise density
//! approximants |S(k)|^2 / (2r) fluctuate with the patch level, while their
//! integrals F(x) converge, so everything quantitative here is integrated.

use crate::algebra::{pf_data, QLambda, ZLambda, LAMBDA};
use crate::cocycle::{eval_p, gauss_legendre};
use crate::correlation::{base_system_solve, count_correlations, eta, extend_table};
use crate::inflation::{geometric_patch, WeightedPointSet};
use crate::mat::{c, m2_id, m2_mul, C, M2};
use rayon::prelude::*;
use std::f64::consts::TAU;

/// A single evaluation of the diffraction density approximant.
#[derive(Clone, Copy, Debug)]
pub struct SpectralSample {
    pub k: f64,
    /// |S(k)|^2 / (2r), the level-n approximant of the diffraction density.
    pub density_approx: f64,
    pub patch_radius: f64,
}

/// Direct exponential sum S(k) = sum_x u(x) e^{-2 pi i k x} over the patch,
/// with Kahan-compensated accumulation in both components.
pub fn exponential_sum(patch: &WeightedPointSet, k: f64) -> C {
    assert!(!patch.points.is_empty());
    let mut sum = c(0.0, 0.0);
    let mut comp = c(0.0, 0.0);
    for (idx, p) in patch.points.iter().enumerate() {
        let term = patch.weight_at(idx) * C::from_polar(1.0, -TAU * k * p.position_f64());
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Per-type exponential sums S_i(k) = sum over type-i points of e^{-2 pi i k x}
/// for the level-L patch, computed through the inflation recursion instead of
/// a direct sum. A level-n supertile of type 0 anchored at its left endpoint
/// contributes conj(B^(n)(k))_{i0}; the patch is two such supertiles with
/// n = 2L, anchored at -lambda^(2L+1) and 0.
pub fn patch_type_sums(level: u32, k: f64) -> [C; 2] {
    let n = 2 * level as usize;
    let mut prod: M2 = m2_id();
    let mut pw = 1.0;
    for _ in 0..n {
        let p = eval_p(pw * k);
        let b: M2 = [[c(1.0, 0.0), c(1.0, 0.0)], [p, c(0.0, 0.0)]];
        prod = m2_mul(&prod, &b);
        pw *= LAMBDA;
    }
    let r = LAMBDA.powi(2 * level as i32 + 1);
    let anchor = c(1.0, 0.0) + C::from_polar(1.0, TAU * k * r);
    [prod[0][0].conj() * anchor, prod[1][0].conj() * anchor]
}

/// S(k) = sum_i u_i S_i(k) for the level-L patch via the recursion.
pub fn weighted_patch_sum(level: u32, u: &[C; 2], k: f64) -> C {
    let s = patch_type_sums(level, k);
    u[0] * s[0] + u[1] * s[1]
}

/// Density approximant |S(k)|^2 / (2r) at the given level.
pub fn density_sample(level: u32, u: &[C; 2], k: f64) -> SpectralSample {
    let r = LAMBDA.powi(2 * level as i32 + 1);
    let s = weighted_patch_sum(level, u, k);
    SpectralSample { k, density_approx: s.norm_sqr() / (2.0 * r), patch_radius: r }
}

/// Scaled intensity |S(k)/(2r)|^2; tends to the Bragg intensity I(k), which
/// is nonzero only at k = 0 and only for unbalanced weights.
pub fn scaled_intensity(level: u32, u: &[C; 2], k: f64) -> f64 {
    let r = LAMBDA.powi(2 * level as i32 + 1);
    (weighted_patch_sum(level, u, k) / (2.0 * r)).norm_sqr()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BraggClass {
    Bragg,
    Continuous,
}

#[derive(Clone, Debug)]
pub struct BraggPoint {
    pub k: f64,
    /// (level, |S(k)/(2r)|^2) across the requested levels.
    pub per_level: Vec<(u32, f64)>,
    pub class: BraggClass,
    /// The intensity at the deepest level (the Bragg intensity if class is Bragg).
    pub intensity: f64,
}

/// Classifies each k as Bragg or continuous from the scaling of
/// |S(k)/(2r)|^2 across increasing patch levels: a Bragg peak tends to a
/// positive constant, a continuous point decays.
pub fn bragg_scan(u: &[C; 2], ks: &[f64], levels: &[u32]) -> Vec<BraggPoint> {
    assert!(levels.windows(2).all(|w| w[0] < w[1]), "levels must increase");
    ks.par_iter()
        .map(|&k| {
            let per_level: Vec<(u32, f64)> =
                levels.iter().map(|&l| (l, scaled_intensity(l, u, k))).collect();
            let first = per_level.first().unwrap().1;
            let last = per_level.last().unwrap().1;
            let class = if last > 1e-3 && last > 0.5 * first {
                BraggClass::Bragg
            } else {
                BraggClass::Continuous
            };
            BraggPoint { k, per_level, class, intensity: last }
        })
        .collect()
}

/// Exact pure-point intensity matrix I_ij(0) = nu_i nu_j; rank 1, entries
/// summing to 1, and u-weighted value ((6 + lambda)/13)^2 for u = (1, 1).
pub fn pure_point_matrix() -> [[f64; 2]; 2] {
    let nu0 = (LAMBDA - 1.0) / 3.0;
    let nu1 = (4.0 - LAMBDA) / 3.0;
    [[nu0 * nu0, nu0 * nu1], [nu1 * nu0, nu1 * nu1]]
}

/// A sampled approximation of F(x) = integral_0^x |S(k)|^2/(2r) dk.
#[derive(Clone, Debug)]
pub struct DistributionCurve {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub level: u32,
    pub weights: [C; 2],
    /// Width of the uniform k-quadrature panels, 1/(2r).
    pub panel_width: f64,
    /// F(x_max)/x_max, the average slope over the computed range.
    pub average_slope: f64,
}

impl DistributionCurve {
    pub fn is_non_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] > w[0])
    }
}

/// F on a uniform output grid of `grid + 1` points over [0, x_max]. The
/// k-integration uses uniform panels of width 1/(2r), the natural resolution
/// of a radius-r patch, with a 4-point Gauss rule per panel; the integrand is
/// an absolute square, so the cumulative sums are monotone by construction.
pub fn distribution_function(u: &[C; 2], x_max: f64, grid: usize, level: u32) -> DistributionCurve {
    assert!(x_max > 0.0 && grid > 0);
    let r = LAMBDA.powi(2 * level as i32 + 1);
    let two_r = 2.0 * r;
    let h = 1.0 / two_r;
    let n_panels = (x_max / h).ceil() as usize;
    let (nodes, wts) = gauss_legendre(4);
    let panel_integrals: Vec<f64> = (0..n_panels)
        .into_par_iter()
        .map(|j| {
            let a = j as f64 * h;
            let mut acc = 0.0;
            for (&x, &w) in nodes.iter().zip(&wts) {
                let k = a + 0.5 * h * (x + 1.0);
                acc += w * weighted_patch_sum(level, u, k).norm_sqr();
            }
            acc * 0.5 * h / two_r
        })
        .collect();
    let mut cumulative = Vec::with_capacity(n_panels + 1);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for v in &panel_integrals {
        acc += v;
        cumulative.push(acc);
    }
    // Sample the cumulative at the output grid by linear interpolation
    // between panel boundaries.
    let mut xs = Vec::with_capacity(grid + 1);
    let mut values = Vec::with_capacity(grid + 1);
    for i in 0..=grid {
        let x = x_max * i as f64 / grid as f64;
        let t = x / h;
        let j = (t.floor() as usize).min(n_panels - 1);
        let frac = t - j as f64;
        xs.push(x);
        values.push(cumulative[j] + frac * (cumulative[j + 1] - cumulative[j]));
    }
    let average_slope = values.last().unwrap() / x_max;
    DistributionCurve { xs, values, level, weights: *u, panel_width: h, average_slope }
}

/// Cross-module consistency: the exact renormalised eta_u against the
/// brute-force counted autocorrelation of a finite patch.
#[derive(Clone, Debug)]
pub struct AutocorrResidual {
    pub max_residual: f64,
    pub distances_checked: usize,
}

pub fn autocorrelation_compare(u: &[QLambda; 2], bound: &ZLambda, level: u32) -> AutocorrResidual {
    let bound_f = bound.to_f64();
    assert!(LAMBDA.powi(2 * level as i32 + 1) > 4.0 * bound_f, "patch too small for R");
    let table = extend_table(&base_system_solve(), bound);
    let patch = geometric_patch(level, [c(1.0, 0.0), c(1.0, 0.0)]);
    let emp = count_correlations(&patch, bound_f);
    let dens = pf_data().density.to_f64();
    let uf = [u[0].to_f64(), u[1].to_f64()];
    let mut max_residual: f64 = 0.0;
    let mut checked = 0;
    for (z, _) in &table.entries {
        let exact = eta(&table, u, z).to_f64();
        let mut counted = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                counted += uf[i] * uf[j] * emp.value(i, j, z);
            }
        }
        counted *= dens;
        max_residual = max_residual.max((exact - counted).abs());
        checked += 1;
    }
    AutocorrResidual { max_residual, distances_checked: checked }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::lambda_power;
    use crate::inflation::balanced_weights;

    #[test]
    fn direct_sum_at_zero_counts_points() {
        let patch = geometric_patch(2, [c(1.0, 0.0), c(1.0, 0.0)]);
        let s = exponential_sum(&patch, 0.0);
        assert!((s.re - patch.points.len() as f64).abs() < 1e-9);
        assert!(s.im.abs() < 1e-12);
    }

    #[test]
    fn recursion_matches_direct_sum() {
        for level in 1..=3u32 {
            let type0 = geometric_patch(level, [c(1.0, 0.0), c(0.0, 0.0)]);
            let type1 = geometric_patch(level, [c(0.0, 0.0), c(1.0, 0.0)]);
            for i in 0..12 {
                let k = -1.1 + i as f64 * 0.21;
                let fast = patch_type_sums(level, k);
                let d0 = exponential_sum(&type0, k);
                let d1 = exponential_sum(&type1, k);
                let scale = type0.points.len() as f64;
                assert!((fast[0] - d0).norm() < 1e-7 * scale, "level {level} k {k}");
                assert!((fast[1] - d1).norm() < 1e-7 * scale, "level {level} k {k}");
            }
        }
    }

    #[test]
    fn balanced_sum_vanishes_at_zero() {
        // (1 - lambda) nu_0 + nu_1 = 0, so |S(0)|/(2r) -> 0 with level.
        let u = balanced_weights();
        let mut prev = f64::INFINITY;
        for level in 1..=6u32 {
            let r = lambda_power(2 * level + 1).to_f64();
            let v = weighted_patch_sum(level, &u, 0.0).norm() / (2.0 * r);
            assert!(v < 0.4 * prev, "level {level}: {v} vs {prev}");
            prev = v;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn unbalanced_bragg_intensity_at_zero() {
        let target = ((6.0 + LAMBDA) / 13.0).powi(2);
        // Finite-size error shrinks by a factor (lambda'/lambda)^2 per level.
        for (level, tol) in [(4u32, 5e-3), (5, 2e-3), (6, 1e-3)] {
            let i0 = scaled_intensity(level, &[c(1.0, 0.0), c(1.0, 0.0)], 0.0);
            assert!((i0 - target).abs() < tol, "level {level}: {i0} vs {target}");
        }
    }

    #[test]
    fn bragg_scan_classification() {
        let levels = [3, 4, 5, 6];
        let one = [c(1.0, 0.0), c(1.0, 0.0)];
        let report = bragg_scan(&one, &[0.0, 0.37, 1.0], &levels);
        assert_eq!(report[0].class, BraggClass::Bragg);
        assert!((report[0].intensity - ((6.0 + LAMBDA) / 13.0).powi(2)).abs() < 1e-3);
        assert_eq!(report[1].class, BraggClass::Continuous);
        assert_eq!(report[2].class, BraggClass::Continuous);
        let bal = bragg_scan(&balanced_weights(), &[0.0, 0.37, 1.0], &levels);
        assert!(bal.iter().all(|p| p.class == BraggClass::Continuous));
    }

    #[test]
    fn pure_point_matrix_rank_one_and_normalised() {
        let m = pure_point_matrix();
        assert!((m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs() < 1e-15);
        let total: f64 = m.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let nu0 = (LAMBDA - 1.0) / 3.0;
        assert!((m[0][0] - nu0 * nu0).abs() < 1e-15);
        assert!((m[0][0] - 0.1886).abs() < 1e-4);
        // Row sums reproduce the frequencies.
        assert!((m[0][0] + m[0][1] - nu0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_identity() {
        // |sum u_i S_i|^2 = conj(u) . (S_i conj(S_j)) . u exactly.
        let level = 3;
        let u = [c(0.7, -0.3), c(-0.2, 1.1)];
        for i in 0..10 {
            let k = 0.05 + i as f64 * 0.13;
            let s = patch_type_sums(level, k);
            let direct = (u[0] * s[0] + u[1] * s[1]).norm_sqr();
            let mut form = c(0.0, 0.0);
            for a in 0..2 {
                for b in 0..2 {
                    form += u[a].conj() * u[b] * s[a].conj() * s[b];
                }
            }
            assert!((direct - form.re).abs() < 1e-10 * (1.0 + direct));
            assert!(form.im.abs() < 1e-10 * (1.0 + direct));
        }
    }

    #[test]
    fn distribution_function_basics() {
        let curve = distribution_function(&balanced_weights(), 3.0, 300, 4);
        assert_eq!(curve.values[0], 0.0);
        assert!(curve.is_non_decreasing());
        assert!(curve.is_strictly_increasing());
        // Average slope near (6 lambda - 3)/13 already at level 4.
        let target = (6.0 * LAMBDA - 3.0) / 13.0;
        assert!(
            (curve.average_slope - target).abs() < 0.05,
            "slope = {}",
            curve.average_slope
        );
    }

    #[test]
    fn distribution_converges_in_level() {
        let a = distribution_function(&balanced_weights(), 3.0, 100, 3);
        let b = distribution_function(&balanced_weights(), 3.0, 100, 4);
        let rel = ((a.values.last().unwrap() - b.values.last().unwrap())
            / b.values.last().unwrap())
        .abs();
        assert!(rel < 0.05, "rel = {rel}");
    }

    #[test]
    fn translation_bounded_proxy() {
        // Integrated density over unit intervals stays uniformly bounded.
        for level in 3..=4u32 {
            let curve = distribution_function(&balanced_weights(), 11.0, 11, level);
            for m in 0..11 {
                let mass = curve.values[m + 1] - curve.values[m];
                assert!(mass > 0.0 && mass < 3.0, "level {level}, [{m}, {}]: {mass}", m + 1);
            }
        }
    }

    #[test]
    fn autocorrelation_cross_check() {
        let bound = ZLambda::new(1, 1); // 1 + lambda
        let res = autocorrelation_compare(&crate::inflation::balanced_weights_exact(), &bound, 5);
        assert!(res.distances_checked >= 11);
        assert!(res.max_residual < 5e-3, "residual = {}", res.max_residual);
        // Zero weights give exactly zero residual.
        let zero = [QLambda::zero(), QLambda::zero()];
        let res0 = autocorrelation_compare(&zero, &bound, 4);
        assert_eq!(res0.max_residual, 0.0);
    }

    #[test]
    fn pointwise_density_fluctuates_but_integral_settles() {
        // At a typical k the density approximant does not settle with level,
        // while F over a fixed interval does; both are expected behaviour.
        let u = balanced_weights();
        let k = 0.7318;
        let d: Vec<f64> = (3..=6).map(|l| density_sample(l, &u, k).density_approx).collect();
        let spread = d.iter().cloned().fold(f64::MIN, f64::max)
            / d.iter().cloned().fold(f64::MAX, f64::min).max(1e-30);
        // Integrals over [0.5, 1.0] across the same levels.
        let f: Vec<f64> = (3..=6)
            .map(|l| {
                let c = distribution_function(&u, 1.0, 2, l);
                c.values[2] - c.values[1]
            })
            .collect();
        let frel = (f[2] - f[3]).abs() / f[3];
        assert!(frel < 0.05, "integral spread {frel}");
        // The pointwise spread is far larger than the integral one.
        assert!(spread > 1.0 + 10.0 * frel, "pointwise spread {spread}");
    }
}
