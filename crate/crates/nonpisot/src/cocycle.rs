//! The Fourier matrix cocycle B(k) = [[1, 1], [p(k), 0]] with
//! p(k) = e^{2 pi i k (lambda + 1)} (1 + 2 cos 2 pi k), its Kronecker square
//! A(k) = B(k) (x) conj(B(k)), and the Lyapunov exponents of the inward and
//! outward iterations. The outward driving orbit k -> lambda k is computed
//! through the exact quasiperiodic lift to the 2-torus, where the dynamics
//! is the integer toral endomorphism (x, y) -> (x + 3y, x) mod 1.

use crate::algebra::LAMBDA;
use crate::mat::*;
use rayon::prelude::*;
use std::f64::consts::TAU;
use thiserror::Error;

/// Matrices whose determinant magnitude |p| falls below this are treated as
/// singular (k in the exceptional set Z = (1/3)Z \ Z up to rounding).
pub const SINGULAR_TOL: f64 = 1e-8;

pub const LOG_LAMBDA: f64 = 0.834_115_194_352_401_2;
pub const LOG_SQRT_LAMBDA: f64 = LOG_LAMBDA / 2.0;
/// log(lambda - 1) = log 3 - log lambda, the exact sum of the two inward
/// Lyapunov exponents.
pub const LOG_LAMBDA_MINUS_ONE: f64 = 0.264_497_094_315_708_54;
/// Contracting inward exponent log((lambda - 1)/sqrt(lambda)) = log(3/lambda^{3/2}).
pub const CHI_IN_CONTRACTING: f64 = LOG_LAMBDA_MINUS_ONE - LOG_SQRT_LAMBDA;

#[derive(Debug, Error)]
pub enum CocycleError {
    #[error("cocycle is singular along the orbit: |p| = {value:.3e} at step {step}")]
    Singular { step: usize, value: f64 },
}

/// A finite exponential sum sum_j c_j e^{2 pi i f_j k}.
#[derive(Clone, Debug)]
pub struct TrigPoly {
    pub terms: Vec<(f64, C)>,
}

impl TrigPoly {
    /// The determinant polynomial -det B(k): frequencies lambda, lambda + 1,
    /// lambda + 2, all with coefficient 1.
    pub fn p() -> Self {
        TrigPoly {
            terms: (0..3).map(|j| (LAMBDA + j as f64, C::new(1.0, 0.0))).collect(),
        }
    }

    pub fn eval(&self, k: f64) -> C {
        self.terms
            .iter()
            .map(|&(f, c)| c * C::from_polar(1.0, TAU * f * k))
            .sum()
    }
}

/// p(k) in the numerically stable factored form
/// e^{2 pi i k (lambda + 1)} (1 + 2 cos 2 pi k).
pub fn eval_p(k: f64) -> C {
    C::from_polar(1.0, TAU * (LAMBDA + 1.0) * k) * (1.0 + 2.0 * (TAU * k).cos())
}

/// Quasiperiodic lift: p~(x, y) = e^{2 pi i (x + y)} (1 + 2 cos 2 pi y),
/// with p(k) = p~(lambda k mod 1, k mod 1).
pub fn eval_p_torus(x: f64, y: f64) -> C {
    C::from_polar(1.0, TAU * (x + y)) * (1.0 + 2.0 * (TAU * y).cos())
}

/// The Fourier matrix B(k) = [[1, 1], [p(k), 0]]; B(0) = M.
pub fn eval_b(k: f64) -> M2 {
    b_of_p(eval_p(k))
}

pub fn b_of_p(p: C) -> M2 {
    [[C::new(1.0, 0.0), C::new(1.0, 0.0)], [p, C::new(0.0, 0.0)]]
}

/// The lifted matrix B~(x, y).
pub fn eval_b_torus(x: f64, y: f64) -> M2 {
    b_of_p(eval_p_torus(x, y))
}

/// One step of the toral endomorphism driving the outward iteration.
pub fn torus_step(x: f64, y: f64) -> (f64, f64) {
    (frac(x + 3.0 * y), x)
}

pub fn frac(v: f64) -> f64 {
    v - v.floor()
}

/// A(k) = B(k) (x) conj(B(k)), acting on C^2 (x) C^2.
pub fn eval_a(k: f64) -> M4 {
    let b = eval_b(k);
    let mut bc = b;
    for row in bc.iter_mut() {
        for x in row.iter_mut() {
            *x = x.conj();
        }
    }
    kron2(&b, &bc)
}

/// The digit matrices of B(k) = D_0 + p(k) D_L.
pub fn digit_matrices() -> (M2, M2) {
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);
    ([[one, one], [zero, zero]], [[zero, zero], [one, zero]])
}

/// The unitary change of basis that makes A(k) real.
pub fn u_matrix() -> M4 {
    let s = 1.0 / 2.0_f64.sqrt();
    let a = C::new(s, -s);
    let b = C::new(s, 0.0);
    let mi = C::new(0.0, -s);
    let z = C::new(0.0, 0.0);
    [
        [a, z, z, z],
        [z, b, mi, z],
        [z, mi, b, z],
        [z, z, z, a],
    ]
}

/// A_U(k) = U A(k) U^{-1}, which has real entries:
/// [[1,1,1,1],[c+s,s,c,0],[c-s,c,-s,0],[c^2+s^2,0,0,0]] with
/// c(k) = sum_j cos(2 pi (lambda+j) k), s(k) = sum_j sin(2 pi (lambda+j) k).
pub fn eval_a_u(k: f64) -> [[f64; 4]; 4] {
    let mut c = 0.0;
    let mut s = 0.0;
    for j in 0..3 {
        let (sj, cj) = (TAU * (LAMBDA + j as f64) * k).sin_cos();
        c += cj;
        s += sj;
    }
    [
        [1.0, 1.0, 1.0, 1.0],
        [c + s, s, c, 0.0],
        [c - s, c, -s, 0.0],
        [c * c + s * s, 0.0, 0.0, 0.0],
    ]
}

fn mul4r(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut r = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = 0.0;
            for (l, bl) in b.iter().enumerate() {
                acc += a[i][l] * bl[j];
            }
            r[i][j] = acc;
        }
    }
    r
}

/// The conjugation-swap involution C(x (x) y) = conj(y) (x) conj(x) on C^4,
/// which commutes with every A(k).
pub fn involution_c(w: &V4) -> V4 {
    // Index (i, j) -> 2i + j; C(w)_{ij} = conj(w_{ji}).
    [w[0].conj(), w[2].conj(), w[1].conj(), w[3].conj()]
}

/// Exact dimension of the span of all products of the digit matrices of
/// length 1..=max_len inside Mat(2, Z), the identity included. Lengths 1 and
/// 2 give 3 and 4; the algebra is all of Mat(2).
pub fn ida_dimension(max_len: u32) -> usize {
    let d0: [i64; 4] = [1, 1, 0, 0];
    let dl: [i64; 4] = [0, 0, 1, 0];
    let mul = |a: &[i64; 4], b: &[i64; 4]| -> [i64; 4] {
        [
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ]
    };
    let mut vectors: Vec<[i64; 4]> = vec![[1, 0, 0, 1]];
    let mut layer = vec![d0, dl];
    for len in 1..=max_len {
        vectors.extend_from_slice(&layer);
        if len == max_len {
            break;
        }
        let mut next = Vec::with_capacity(layer.len() * 2);
        for m in &layer {
            next.push(mul(m, &d0));
            next.push(mul(m, &dl));
        }
        layer = next;
    }
    integer_rank(vectors)
}

/// Exact rank of a set of integer 4-vectors by fraction-free elimination.
fn integer_rank(mut rows: Vec<[i64; 4]>) -> usize {
    let mut rank = 0;
    for col in 0..4 {
        let Some(pos) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, pos);
        let pivot = rows[rank][col] as i128;
        for r in (rank + 1)..rows.len() {
            let factor = rows[r][col] as i128;
            if factor == 0 {
                continue;
            }
            for c in 0..4 {
                let v = pivot * rows[r][c] as i128 - factor * rows[rank][c] as i128;
                rows[r][c] = i64::try_from(v).expect("rank computation overflow");
            }
        }
        rank += 1;
        if rank == 4 {
            break;
        }
    }
    rank
}

fn flatten_real(m: &M4) -> [f64; 32] {
    let mut v = [0.0; 32];
    for i in 0..4 {
        for j in 0..4 {
            v[2 * (4 * i + j)] = m[i][j].re;
            v[2 * (4 * i + j) + 1] = m[i][j].im;
        }
    }
    v
}

/// Real dimension of the real algebra generated by the sampled matrices
/// A(k), viewed inside the 32-dimensional real vector space Mat(4, C).
/// Rank decisions use Gram-Schmidt with a fixed threshold of 1e-8.
pub fn kron_algebra_real_dimension(ks: &[f64]) -> usize {
    let gens: Vec<M4> = ks.iter().map(|&k| eval_a(k)).collect();
    let mut basis: Vec<[f64; 32]> = Vec::new();
    let mut queue: Vec<M4> = gens.clone();
    let mut accepted: Vec<M4> = Vec::new();
    while let Some(m) = queue.pop() {
        let mut v = flatten_real(&m);
        let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 {
            continue;
        }
        for x in v.iter_mut() {
            *x /= scale;
        }
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (x, c) in v.iter_mut().zip(b) {
                *x -= dot * c;
            }
        }
        let res = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if res > 1e-8 {
            for x in v.iter_mut() {
                *x /= res;
            }
            basis.push(v);
            for g in &gens {
                queue.push(m4_mul(&m, g));
                queue.push(m4_mul(g, &m));
            }
            accepted.push(m);
            if basis.len() == 32 {
                break;
            }
        }
    }
    basis.len()
}

/// Smallest k > 0 at which an entry of A_U(k/lambda) A_U(k) vanishes; the
/// product is entrywise strictly positive below it.
pub fn positivity_threshold() -> f64 {
    let min_entry = |k: f64| -> f64 {
        let prod = mul4r(&eval_a_u(k / LAMBDA), &eval_a_u(k));
        prod.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    };
    let step = 1e-4;
    let mut k_prev = step;
    assert!(min_entry(k_prev) > 0.0);
    let mut k = k_prev + step;
    while min_entry(k) > 0.0 {
        k_prev = k;
        k += step;
        assert!(k < 1.0, "no sign change found");
    }
    // Bisection on the minimal entry.
    let (mut lo, mut hi) = (k_prev, k);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if min_entry(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A log-norm trace of an iteration together with the least-squares slope
/// fitted over the second half of the trace.
#[derive(Clone, Debug)]
pub struct Trace {
    pub log_norms: Vec<f64>,
    pub slope: f64,
}

/// Least-squares slope of ys[m] against m over m in [from, len).
pub fn fit_slope(ys: &[f64], from: usize) -> f64 {
    let pts: Vec<(f64, f64)> = ys[from..]
        .iter()
        .enumerate()
        .map(|(i, &y)| ((from + i) as f64, y))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Blow-up of the iteration w -> A_U(k/lambda^m) w. The log-norm trace is
/// recorded per double step; the growth rate tends to 4 log lambda and the
/// direction aligns with w_PF = v_PF (x) v_PF.
#[derive(Clone, Debug)]
pub struct BlowupResult {
    /// log ||w|| after each double step.
    pub log_norms: Vec<f64>,
    /// Fitted growth per double step, expected 4 log lambda.
    pub growth_per_double_step: f64,
    /// 1 - |<w, w_PF>| / (||w|| ||w_PF||) at the end.
    pub misalignment: f64,
}

pub fn pf_pair_vector() -> V4 {
    let nu0 = (LAMBDA - 1.0) / 3.0;
    let nu1 = (4.0 - LAMBDA) / 3.0;
    [
        C::new(nu0 * nu0, 0.0),
        C::new(nu0 * nu1, 0.0),
        C::new(nu1 * nu0, 0.0),
        C::new(nu1 * nu1, 0.0),
    ]
}

pub fn blowup_iteration(k: f64, w0: &V4, double_steps: usize) -> BlowupResult {
    let u = u_matrix();
    let uinv = m4_conj_transpose(&u);
    let mut w = m4_vec(&u, w0);
    let mut log_scale = 0.0;
    let mut log_norms = Vec::with_capacity(double_steps);
    for m in 0..(2 * double_steps) {
        let a_u = {
            let a = eval_a(k / LAMBDA.powi(m as i32));
            m4_mul(&m4_mul(&u, &a), &uinv)
        };
        w = m4_vec(&a_u, &w);
        let norm = v4_norm(&w);
        log_scale += norm.ln();
        for x in w.iter_mut() {
            *x /= norm;
        }
        if m % 2 == 1 {
            log_norms.push(log_scale);
        }
    }
    let growth = fit_slope(&log_norms, log_norms.len() / 2);
    // Compare direction with w_PF (in the U basis it is the same line).
    let wpf = m4_vec(&u, &pf_pair_vector());
    let dot: C = w.iter().zip(&wpf).map(|(a, b)| a.conj() * b).sum();
    let misalignment = 1.0 - dot.norm() / v4_norm(&wpf);
    BlowupResult { log_norms, growth_per_double_step: growth, misalignment }
}

/// P_0, ..., P_n from the recursion P_{n+1}(k) = P_n(k) + p(lambda^n k) P_{n-1}(k),
/// with P_{-1} = 0, P_0 = 1.
pub fn pn_sequence(k: f64, n: usize) -> Vec<C> {
    let mut out = Vec::with_capacity(n + 1);
    let mut prev = C::new(0.0, 0.0); // P_{-1}
    let mut cur = C::new(1.0, 0.0); // P_0
    out.push(cur);
    for m in 0..n {
        let next = cur + eval_p(LAMBDA.powi(m as i32) * k) * prev;
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// The ordered product B^{(n)}(k) = B(k) B(lambda k) ... B(lambda^{n-1} k).
pub fn bn_product(k: f64, n: usize) -> M2 {
    let mut prod = m2_id();
    for m in 0..n {
        prod = m2_mul(&prod, &eval_b(LAMBDA.powi(m as i32) * k));
    }
    prod
}

/// Closed form of B^{(n)}(k) in terms of the P_n:
/// [[P_n(k), P_{n-1}(k)], [p(k) P_{n-1}(lambda k), p(k) P_{n-2}(lambda k)]].
pub fn bn_from_pn(k: f64, n: usize) -> M2 {
    assert!(n >= 2);
    let pk = pn_sequence(k, n);
    let pl = pn_sequence(LAMBDA * k, n);
    let p = eval_p(k);
    [[pk[n], pk[n - 1]], [p * pl[n - 1], p * pl[n - 2]]]
}

/// Minimum of ||B~^{(n)}(x, y)||_F^2 over an m x m grid on the torus, with
/// grid doubling until the value stabilises. Floors: 2 for n = 1, 1 for n = 2.
pub fn frobenius_floor(n: usize, initial_grid: usize) -> f64 {
    let mut grid = initial_grid.max(6);
    grid += (6 - grid % 6) % 6; // keep the exact minimisers (x, y) in 1/6 Z^2 on the grid
    let mut prev = f64::INFINITY;
    loop {
        let min = (0..grid)
            .into_par_iter()
            .map(|ix| {
                let x = ix as f64 / grid as f64;
                let mut row_min = f64::INFINITY;
                for iy in 0..grid {
                    let y = iy as f64 / grid as f64;
                    row_min = row_min.min(torus_product_frob_sq(x, y, n));
                }
                row_min
            })
            .reduce(|| f64::INFINITY, f64::min);
        if (prev - min).abs() < 1e-4 * (1.0 + min) || grid >= 4096 {
            return min;
        }
        prev = min;
        grid *= 2;
    }
}

/// ||B~^{(n)}(x, y)||_F^2 along the toral orbit.
pub fn torus_product_frob_sq(x: f64, y: f64, n: usize) -> f64 {
    let (mut cx, mut cy) = (x, y);
    let mut prod = m2_id();
    for _ in 0..n {
        prod = m2_mul(&prod, &eval_b_torus(cx, cy));
        let next = torus_step(cx, cy);
        cx = next.0;
        cy = next.1;
    }
    m2_frob_sq(&prod)
}

/// Result of the torus-mean quadrature for (1/2n) int log ||B~^{(n)}||_F^2.
#[derive(Clone, Debug)]
pub struct TorusMean {
    pub value: f64,
    /// (panels per axis, value) for each refinement level.
    pub history: Vec<(usize, f64)>,
}

/// Composite tensor Gauss-Legendre quadrature of
/// (1/2n) int_{[0,1]^2} log ||B~^{(n)}(x,y)||_F^2 dx dy,
/// with panel refinement until two consecutive levels differ by less than tol.
pub fn torus_mean_log_norm(n: usize, tol: f64) -> TorusMean {
    let order = 6;
    let (nodes, weights) = gauss_legendre(order);
    let mut history = Vec::new();
    let mut panels = 16usize;
    let mut prev = f64::NAN;
    loop {
        let h = 1.0 / panels as f64;
        let total: f64 = (0..panels * panels)
            .into_par_iter()
            .map(|idx| {
                let (px, py) = (idx / panels, idx % panels);
                let (x0, y0) = (px as f64 * h, py as f64 * h);
                let mut acc = 0.0;
                for (i, &xi) in nodes.iter().enumerate() {
                    let x = x0 + 0.5 * h * (xi + 1.0);
                    for (j, &yj) in nodes.iter().enumerate() {
                        let y = y0 + 0.5 * h * (yj + 1.0);
                        let f = torus_product_frob_sq(x, y, n).ln();
                        acc += weights[i] * weights[j] * f;
                    }
                }
                acc * 0.25 * h * h
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        let value = total / (2.0 * n as f64);
        history.push((panels, value));
        if !prev.is_nan() && (value - prev).abs() < tol {
            return TorusMean { value, history };
        }
        prev = value;
        assert!(panels <= 2048, "torus mean quadrature did not stabilise");
        panels *= 2;
    }
}

/// (1/n) log |det(B(k/lambda^n) ... B(k/lambda))|, which tends to log 3.
pub fn det_limit_inward(k: f64, n: usize) -> Result<f64, CocycleError> {
    let mut acc = 0.0;
    for m in 1..=n {
        let p = eval_p(k / LAMBDA.powi(m as i32));
        let v = p.norm();
        if v < SINGULAR_TOL {
            return Err(CocycleError::Singular { step: m, value: v });
        }
        acc += v.ln();
    }
    Ok(acc / n as f64)
}

/// -(1/n) sum_{l=0}^{n-1} log |1 + 2 cos(2 pi lambda^l k)|, the Birkhoff sum
/// behind the outward determinant limit; tends to 0 for a.e. k by Jensen.
pub fn det_limit_outward(k: f64, n: usize) -> Result<f64, CocycleError> {
    let (mut x, mut y) = (frac(LAMBDA * k), frac(k));
    let mut acc = 0.0;
    for step in 0..n {
        let v = (1.0 + 2.0 * (TAU * y).cos()).abs();
        if v < SINGULAR_TOL {
            return Err(CocycleError::Singular { step, value: v });
        }
        acc += v.ln();
        let next = torus_step(x, y);
        x = next.0;
        y = next.1;
    }
    Ok(-acc / n as f64)
}

/// int_0^1 log |1 + 2 cos(2 pi t)| dt, exactly 0 by Jensen's formula.
/// The integrand has logarithmic singularities at t = 1/3 and t = 2/3,
/// handled by geometrically graded panels towards those points.
pub fn jensen_integral() -> f64 {
    let f = |t: f64| (1.0 + 2.0 * (TAU * t).cos()).abs().ln();
    let third = 1.0 / 3.0;
    integrate_graded(&f, 0.0, third, false, true)
        + integrate_graded(&f, third, 2.0 * third, true, true)
        + integrate_graded(&f, 2.0 * third, 1.0, true, false)
}

/// Gauss-Legendre integration over [a, b] with geometric panel grading
/// towards whichever endpoints are singular.
fn integrate_graded(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    singular_a: bool,
    singular_b: bool,
) -> f64 {
    let (nodes, weights) = gauss_legendre(16);
    let gl = |lo: f64, hi: f64| -> f64 {
        let h = 0.5 * (hi - lo);
        let mid = 0.5 * (lo + hi);
        nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| w * f(mid + h * x))
            .sum::<f64>()
            * h
    };
    let mid = 0.5 * (a + b);
    let mut total = 0.0;
    for (end, lo, hi, singular) in [(a, a, mid, singular_a), (b, mid, b, singular_b)] {
        if !singular {
            total += gl(lo, hi);
            continue;
        }
        // Dyadic panels accumulating towards the singular endpoint.
        let len = hi - lo;
        let mut scale = 1.0;
        for _ in 0..48 {
            let next = scale * 0.5;
            let (plo, phi) = if end == lo {
                (end + next * len * (if end == a { 1.0 } else { -1.0 }), end + scale * len)
            } else {
                (hi - scale * len, hi - next * len)
            };
            // Orient the panel correctly for either end.
            let (plo, phi) = if plo < phi { (plo, phi) } else { (phi, plo) };
            total += gl(plo, phi);
            scale = next;
        }
        // The skipped sliver of width 2^{-48} len contributes O(2^{-48} log).
    }
    total
}

/// Legendre-Gauss nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Inward iteration v_m = (1/sqrt(lambda)) B(k/lambda^m) v_{m-1}; a generic
/// start vector picks up the maximal exponent log sqrt(lambda).
pub fn inward_lyapunov(k: f64, v0: V2, n: usize) -> Trace {
    let sqrt_l = LAMBDA.sqrt();
    let mut log_scale = 0.0;
    let mut log_norms = Vec::with_capacity(n + 1);
    let n0 = v2_norm(&v0);
    log_norms.push(0.0);
    let (mut a, mut b) = (v0[0] / n0, v0[1] / n0);
    for m in 1..=n {
        let mat = eval_b(k / LAMBDA.powi(m as i32));
        let w = m2_vec(&mat, &[a, b]);
        let norm = v2_norm(&w);
        log_scale += (norm / sqrt_l).ln();
        a = w[0] / norm;
        b = w[1] / norm;
        log_norms.push(log_scale);
    }
    let slope = fit_slope(&log_norms, n / 2);
    Trace { log_norms, slope }
}

/// Perron eigenbasis of M: columns (lambda, 3) and (1 - lambda, 3).
pub fn eigen_basis() -> M2 {
    [
        [c(LAMBDA, 0.0), c(1.0 - LAMBDA, 0.0)],
        [c(3.0, 0.0), c(3.0, 0.0)],
    ]
}

/// The nilpotent part in the eigenbasis: P^{-1} B(k) P = D - z(k) N with
/// z(k) = 3 - p(k), D = diag(lambda, 1 - lambda) and
/// N = (1/39) [[6 lambda - 3, 10 - 7 lambda], [7 lambda + 3, 3 - 6 lambda]].
pub fn nilpotent_n() -> M2 {
    let l = LAMBDA;
    [
        [c((6.0 * l - 3.0) / 39.0, 0.0), c((10.0 - 7.0 * l) / 39.0, 0.0)],
        [c((7.0 * l + 3.0) / 39.0, 0.0), c((3.0 - 6.0 * l) / 39.0, 0.0)],
    ]
}

fn d_minus_zn(k: f64) -> M2 {
    let z = c(3.0, 0.0) - eval_p(k);
    let n = nilpotent_n();
    [
        [c(LAMBDA, 0.0) - z * n[0][0], -z * n[0][1]],
        [-z * n[1][0], c(1.0 - LAMBDA, 0.0) - z * n[1][1]],
    ]
}

/// The contracting trajectory of the inward iteration in the eigenbasis,
/// constructed backward: starting from v'_n = (0, 1)^t (the contracting
/// direction of the limit matrix), the inverse steps
/// v'_{m-1} = sqrt(lambda) (D - z(k/lambda^m) N)^{-1} v'_m are expanding,
/// so the backward recursion is numerically stable for any depth, unlike
/// solving the accumulated forward product, which is ill-conditioned in
/// double precision beyond n of about 80.
pub struct Contracting {
    /// Unit start vector v'_{0,n} in the eigenbasis.
    pub start_eigen: V2,
    /// The same direction in the original basis (spans E^(1)_-(k)).
    pub start_original: V2,
    /// Forward log-norm trace along the trajectory, normalised at m = 0.
    pub trace: Trace,
}

pub fn contracting_direction(k: f64, n: usize) -> Result<Contracting, CocycleError> {
    let sqrt_l = LAMBDA.sqrt();
    let mut w: V2 = [c(0.0, 0.0), c(1.0, 0.0)];
    let mut rev_log_norms = vec![0.0f64]; // log ||v'_m|| + const, from m = n down
    let mut log_scale = 0.0;
    for m in (1..=n).rev() {
        let mat = d_minus_zn(k / LAMBDA.powi(m as i32));
        let det = m2_det(&mat);
        if det.norm() < SINGULAR_TOL {
            return Err(CocycleError::Singular { step: m, value: det.norm() });
        }
        let inv = m2_inv(&mat).unwrap();
        let next = m2_vec(&inv, &w);
        let scaled = [next[0] * sqrt_l, next[1] * sqrt_l];
        let norm = v2_norm(&scaled);
        log_scale += norm.ln();
        w = [scaled[0] / norm, scaled[1] / norm];
        rev_log_norms.push(log_scale);
    }
    // Forward orientation, normalised so that ||v'_0|| = 1.
    let base = *rev_log_norms.last().unwrap();
    let log_norms: Vec<f64> = rev_log_norms.iter().rev().map(|l| l - base).collect();
    let slope = fit_slope(&log_norms, n / 2);
    let p = eigen_basis();
    let orig = m2_vec(&p, &w);
    let on = v2_norm(&orig);
    Ok(Contracting {
        start_eigen: w,
        start_original: [orig[0] / on, orig[1] / on],
        trace: Trace { log_norms, slope },
    })
}

/// Outward Lyapunov exponents at a given depth. chi1 is the minimal and
/// chi2 the maximal exponent of the iteration v(lambda k) = sqrt(lambda)
/// B^{-1}(k) v(k); their exact sum is log lambda.
#[derive(Clone, Debug)]
pub struct Outward {
    pub chi1: f64,
    pub chi2: f64,
    /// chi1 + chi2 - log lambda; tends to 0.
    pub consistency: f64,
    /// Birkhoff average of -log |det B| along the orbit; tends to 0.
    pub det_average: f64,
}

pub fn outward_lyapunov(k: f64, n: usize) -> Result<Outward, CocycleError> {
    let (mut x, mut y) = (frac(LAMBDA * k), frac(k));
    let mut fwd = m2_id();
    let mut inv = m2_id();
    let mut log_fwd = 0.0;
    let mut log_inv = 0.0;
    let mut det_acc = 0.0;
    for step in 0..n {
        let p = eval_p_torus(x, y);
        if p.norm() < SINGULAR_TOL {
            return Err(CocycleError::Singular { step, value: p.norm() });
        }
        let b = b_of_p(p);
        // Forward product grows to the right: B(k) B(lambda k) ...
        fwd = m2_mul(&fwd, &b);
        let s = m2_frob(&fwd);
        log_fwd += s.ln();
        fwd = m2_scale(&fwd, c(1.0 / s, 0.0));
        // Inverse product grows to the left: ... B^{-1}(lambda k) B^{-1}(k).
        let binv = m2_inv(&b).unwrap();
        inv = m2_mul(&binv, &inv);
        let s = m2_frob(&inv);
        log_inv += s.ln();
        inv = m2_scale(&inv, c(1.0 / s, 0.0));
        det_acc += p.norm().ln();
        let next = torus_step(x, y);
        x = next.0;
        y = next.1;
    }
    let nf = n as f64;
    let chi1 = LOG_SQRT_LAMBDA - log_inv / nf;
    let chi2 = LOG_SQRT_LAMBDA + log_fwd / nf;
    Ok(Outward {
        chi1,
        chi2,
        consistency: chi1 + chi2 - LOG_LAMBDA,
        det_average: -det_acc / nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_factored_matches_sum_form() {
        let tp = TrigPoly::p();
        for i in 0..200 {
            let k = -3.0 + i as f64 * 0.031;
            assert!((tp.eval(k) - eval_p(k)).norm() < 1e-10, "k = {k}");
        }
        // |p| <= 3 with equality at k = 0.
        assert!((eval_p(0.0) - c(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn torus_lift_section() {
        for i in 1..60 {
            let k = i as f64 * 0.0173;
            let lhs = eval_p_torus(frac(LAMBDA * k), frac(k));
            assert!((lhs - eval_p(k)).norm() < 1e-9, "k = {k}");
        }
    }

    #[test]
    fn b_at_zero_is_m() {
        let b = eval_b(0.0);
        assert!((b[0][0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((b[1][0] - c(3.0, 0.0)).norm() < 1e-14);
        assert!(b[1][1].norm() < 1e-14);
    }

    #[test]
    fn digit_matrix_relations() {
        let (d0, dl) = digit_matrices();
        // B(k) = D_0 + p(k) D_L.
        let k = 0.37;
        let b = eval_b(k);
        let p = eval_p(k);
        for i in 0..2 {
            for j in 0..2 {
                assert!((b[i][j] - (d0[i][j] + p * dl[i][j])).norm() < 1e-12);
            }
        }
        // D_0 D_L = E_00, D_L D_0 = E_10 + E_11.
        let e00 = m2_mul(&d0, &dl);
        assert!((e00[0][0] - c(1.0, 0.0)).norm() < 1e-14 && e00[0][1].norm() < 1e-14);
        let low = m2_mul(&dl, &d0);
        assert!((low[1][0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((low[1][1] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn ida_dimensions() {
        assert_eq!(ida_dimension(1), 3);
        assert_eq!(ida_dimension(2), 4);
        assert_eq!(ida_dimension(5), 4);
    }

    #[test]
    fn kron_algebra_dimension_is_sixteen() {
        let ks = [0.11, 0.23, 0.555, 0.789, 0.912, 1.234];
        assert_eq!(kron_algebra_real_dimension(&ks), 16);
    }

    #[test]
    fn involution_commutes_with_a() {
        for i in 0..50 {
            let k = 0.013 + i as f64 * 0.021;
            let a = eval_a(k);
            let w: V4 = [c(0.3, -0.1), c(-1.2, 0.7), c(0.05, 2.0), c(1.0, 1.0)];
            let lhs = m4_vec(&a, &involution_c(&w));
            let rhs = involution_c(&m4_vec(&a, &w));
            let err: f64 = lhs
                .iter()
                .zip(&rhs)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "k = {k}, err = {err}");
        }
    }

    #[test]
    fn projectors_from_involution() {
        // (1 +- C)/2 are complementary idempotents commuting with A(k).
        let w: V4 = [c(0.4, 0.2), c(-0.3, 1.1), c(0.9, -0.6), c(0.0, 0.8)];
        let cw = involution_c(&w);
        let plus: V4 = std::array::from_fn(|i| (w[i] + cw[i]) * 0.5);
        let minus: V4 = std::array::from_fn(|i| (w[i] - cw[i]) * 0.5);
        // Projection parts are C-eigenvectors and sum back to w.
        let cplus = involution_c(&plus);
        for i in 0..4 {
            assert!((cplus[i] - plus[i]).norm() < 1e-14);
            assert!((plus[i] + minus[i] - w[i]).norm() < 1e-14);
        }
        let cminus = involution_c(&minus);
        for i in 0..4 {
            assert!((cminus[i] + minus[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn a_u_is_real_and_matches_closed_form() {
        let u = u_matrix();
        let uinv = m4_conj_transpose(&u);
        // U is unitary.
        let prod = m4_mul(&u, &uinv);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i][j] - c(expect, 0.0)).norm() < 1e-14);
            }
        }
        for i in 0..40 {
            let k = 0.003 + i as f64 * 0.027;
            let au = m4_mul(&m4_mul(&u, &eval_a(k)), &uinv);
            assert!(m4_max_imag(&au) < 1e-12, "k = {k}");
            let closed = eval_a_u(k);
            for r in 0..4 {
                for s in 0..4 {
                    assert!((au[r][s].re - closed[r][s]).abs() < 1e-12, "k={k} ({r},{s})");
                }
            }
        }
    }

    #[test]
    fn threshold_in_expected_window() {
        let k = positivity_threshold();
        assert!((0.03822..=0.03842).contains(&k), "k* = {k}");
        // Strict positivity on [0.001, 0.03].
        for i in 1..=30 {
            let kk = i as f64 * 0.001;
            let prod = mul4r(&eval_a_u(kk / LAMBDA), &eval_a_u(kk));
            assert!(prod.iter().flatten().all(|&e| e > 0.0), "k = {kk}");
        }
    }

    #[test]
    fn blowup_grows_like_lambda_fourth() {
        let w0: V4 = [c(1.0, 0.0), c(0.5, 0.0), c(0.25, 0.0), c(1.0, 0.0)];
        let res = blowup_iteration(0.7, &w0, 30);
        assert!((res.growth_per_double_step - 4.0 * LOG_LAMBDA).abs() < 1e-6);
        assert!(res.misalignment < 1e-10);
    }

    #[test]
    fn pn_matches_product() {
        // B^{(n)}(k) closed form against the explicit ordered product.
        for i in 0..20 {
            let k = 0.03 + i as f64 * 0.047;
            for n in 2..=12 {
                let prod = bn_product(k, n);
                let closed = bn_from_pn(k, n);
                for r in 0..2 {
                    for s in 0..2 {
                        assert!(
                            (prod[r][s] - closed[r][s]).norm() < 1e-9,
                            "k = {k}, n = {n}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn pn_alternative_recursion() {
        // P_{n+1}(k/lambda) = P_n(k) + p(k) P_{n-1}(lambda k).
        for i in 0..20 {
            let k = 0.05 + i as f64 * 0.031;
            let n = 9;
            let down = pn_sequence(k / LAMBDA, n + 1);
            let here = pn_sequence(k, n);
            let up = pn_sequence(LAMBDA * k, n);
            for m in 1..n {
                let rhs = here[m] + eval_p(k) * up[m - 1];
                assert!((down[m + 1] - rhs).norm() < 1e-9, "k = {k}, m = {m}");
            }
        }
    }

    #[test]
    fn frobenius_identity_and_floors() {
        for i in 0..10 {
            let k = 0.07 + i as f64 * 0.083;
            let n = 7;
            let prod = bn_product(k, n);
            let pk = pn_sequence(k, n);
            let pl = pn_sequence(LAMBDA * k, n);
            let rhs = pk[n].norm_sqr()
                + pk[n - 1].norm_sqr()
                + eval_p(k).norm_sqr() * (pl[n - 1].norm_sqr() + pl[n - 2].norm_sqr());
            assert!((m2_frob_sq(&prod) - rhs).abs() < 1e-7 * (1.0 + rhs));
        }
        let f1 = frobenius_floor(1, 96);
        assert!((f1 - 2.0).abs() < 1e-6, "floor 1 = {f1}");
        let f2 = frobenius_floor(2, 96);
        assert!((f2 - 1.0).abs() < 1e-6, "floor 2 = {f2}");
        // Upper bounds 11 and 35 hold on a coarse sample.
        for i in 0..200 {
            let (x, y) = (i as f64 * 0.005, (i as f64 * 0.013).fract());
            assert!(torus_product_frob_sq(x, y, 1) <= 11.0 + 1e-12);
            assert!(torus_product_frob_sq(x, y, 2) <= 35.0 + 1e-12);
        }
    }

    #[test]
    fn jensen_vanishes() {
        assert!(jensen_integral().abs() < 1e-6);
    }

    #[test]
    fn inward_determinant_limit() {
        let v = det_limit_inward(0.31, 60).unwrap();
        assert!((v - 3.0_f64.ln()).abs() < 1e-2, "got {v}");
    }

    #[test]
    fn inward_generic_exponent() {
        let tr = inward_lyapunov(0.02, [c(1.0, 0.0), c(1.0, 0.0)], 300);
        assert!((tr.slope - LOG_SQRT_LAMBDA).abs() < 1e-3, "slope = {}", tr.slope);
    }

    #[test]
    fn pf_start_gives_exact_sqrt_lambda_rate() {
        // v_PF is the k -> 0 eigenvector: per-step factor sqrt(lambda).
        let nu0 = (LAMBDA - 1.0) / 3.0;
        let nu1 = (4.0 - LAMBDA) / 3.0;
        let tr = inward_lyapunov(1e-9, [c(nu0, 0.0), c(nu1, 0.0)], 100);
        assert!((tr.slope - LOG_SQRT_LAMBDA).abs() < 1e-8);
    }

    #[test]
    fn eigenbasis_conjugation() {
        let p = eigen_basis();
        let pinv = m2_inv(&p).unwrap();
        let n = nilpotent_n();
        // N^2 = 0.
        let n2 = m2_mul(&n, &n);
        assert!(m2_frob(&n2) < 1e-14);
        // ker N contains (6 lambda - 3, 7 lambda + 3).
        let kerv: V2 = [c(6.0 * LAMBDA - 3.0, 0.0), c(7.0 * LAMBDA + 3.0, 0.0)];
        assert!(v2_norm(&m2_vec(&n, &kerv)) < 1e-12);
        for i in 0..20 {
            let k = 0.011 + i as f64 * 0.043;
            let lhs = m2_mul(&m2_mul(&pinv, &eval_b(k)), &p);
            let rhs = d_minus_zn(k);
            for r in 0..2 {
                for s in 0..2 {
                    assert!((lhs[r][s] - rhs[r][s]).norm() < 1e-11, "k = {k}");
                }
            }
        }
    }

    #[test]
    fn contracting_exponent_and_equivariance() {
        for &k in &[0.005, 0.01, 0.02] {
            let res = contracting_direction(k, 300).unwrap();
            assert!(
                (res.trace.slope - CHI_IN_CONTRACTING).abs() < 5e-3,
                "k = {k}, slope = {}",
                res.trace.slope
            );
        }
        // E^(1)_-(k/lambda) is parallel to B(k/lambda) E^(1)_-(k).
        let k = 0.02;
        let e_k = contracting_direction(k, 260).unwrap().start_original;
        let e_down = contracting_direction(k / LAMBDA, 260).unwrap().start_original;
        let mapped = m2_vec(&eval_b(k / LAMBDA), &e_k);
        let dot = (mapped[0].conj() * e_down[0] + mapped[1].conj() * e_down[1]).norm();
        let align = dot / (v2_norm(&mapped) * v2_norm(&e_down));
        assert!(1.0 - align < 1e-8, "align = {align}");
        // Pullback start vectors converge in n.
        let a = contracting_direction(k, 200).unwrap().start_eigen;
        let b = contracting_direction(k, 230).unwrap().start_eigen;
        let dot = (a[0].conj() * b[0] + a[1].conj() * b[1]).norm();
        assert!(1.0 - dot < 1e-10);
    }

    #[test]
    fn inward_pair_sums_to_log_lambda_minus_one() {
        let k = 0.01;
        let generic = inward_lyapunov(k, [c(1.0, 0.0), c(1.0, 0.0)], 300);
        let contracting = contracting_direction(k, 300).unwrap();
        let sum = generic.slope + contracting.trace.slope;
        assert!((sum - LOG_LAMBDA_MINUS_ONE).abs() < 5e-3, "sum = {sum}");
    }

    #[test]
    fn outward_exponents_positive() {
        let out = outward_lyapunov(0.123456, 20_000).unwrap();
        assert!(out.chi1 > 0.0, "chi1 = {}", out.chi1);
        assert!(out.chi2 > out.chi1);
        assert!(out.consistency.abs() < 0.05);
    }

    #[test]
    fn gauss_legendre_sanity() {
        let (nodes, weights) = gauss_legendre(8);
        // Integrates x^8 over [-1,1] close to 2/9 (degree > exactness).
        let approx: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| w * x.powi(8))
            .sum();
        assert!((approx - 2.0 / 9.0).abs() < 1e-10);
        let total: f64 = weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
    }
}
