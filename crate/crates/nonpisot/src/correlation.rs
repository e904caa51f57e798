//! Pair correlation functions of the geometric inflation point set and their
//! exact renormalisation. The four functions nu_ij live on the difference
//! set of the point set; restricted to the window |z| <= 1 + lambda they
//! satisfy a closed homogeneous linear system over Q(lambda) whose solution
//! space is one-dimensional. The normalisation nu_00(0) + nu_11(0) = 1 then
//! pins down every value, and the same identities extend the table to any
//! radius.

use crate::algebra::{QLambda, ZLambda};
use crate::inflation::{geometric_patch, WeightedPointSet};
use num::complex::Complex64;
use std::collections::HashMap;

/// Index convention for the pair (i, j): 2*i + j.
pub const PAIRS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// One term of a renormalisation identity: multiplicity * nu_source((z - shift)/lambda).
struct Term {
    mult: i64,
    source: usize,
    shift: ZLambda,
}

/// The four exact identities, all with prefactor 1/lambda:
///   nu_00(z) = [nu_00 + nu_01 + nu_10 + nu_11](z/L) / L
///   nu_01(z) = sum_{t in L, L+1, L+2} [nu_00 + nu_10]((z - t)/L) / L
///   nu_10(z) = sum_{t in L, L+1, L+2} [nu_00 + nu_01]((z + t)/L) / L
///   nu_11(z) = [3 nu_00(z/L) + 2 nu_00((z+-1)/L) + nu_00((z+-2)/L)] / L
fn identity_terms(target: usize) -> Vec<Term> {
    let t = |a: i64, b: i64| ZLambda::new(a, b);
    match target {
        0 => (0..4).map(|s| Term { mult: 1, source: s, shift: t(0, 0) }).collect(),
        1 => {
            let mut v = Vec::new();
            for source in [0usize, 2] {
                for shift in [t(0, 1), t(1, 1), t(2, 1)] {
                    v.push(Term { mult: 1, source, shift });
                }
            }
            v
        }
        2 => {
            let mut v = Vec::new();
            for source in [0usize, 1] {
                for shift in [t(0, -1), t(-1, -1), t(-2, -1)] {
                    v.push(Term { mult: 1, source, shift });
                }
            }
            v
        }
        3 => vec![
            Term { mult: 3, source: 0, shift: t(0, 0) },
            Term { mult: 2, source: 0, shift: t(1, 0) },
            Term { mult: 2, source: 0, shift: t(-1, 0) },
            Term { mult: 1, source: 0, shift: t(2, 0) },
            Term { mult: 1, source: 0, shift: t(-2, 0) },
        ],
        _ => unreachable!(),
    }
}

/// Exact pair correlation table: entries (z, [nu_00, nu_01, nu_10, nu_11])
/// sorted by the real embedding of z.
#[derive(Clone, Debug)]
pub struct CorrelationTable {
    pub entries: Vec<(ZLambda, [QLambda; 4])>,
    index: HashMap<ZLambda, usize>,
}

impl CorrelationTable {
    fn from_entries(mut entries: Vec<(ZLambda, [QLambda; 4])>) -> Self {
        entries.sort_by(|x, y| x.0.cmp_real(&y.0));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (z, _))| (z.clone(), i))
            .collect();
        CorrelationTable { entries, index }
    }

    pub fn get(&self, z: &ZLambda) -> Option<&[QLambda; 4]> {
        self.index.get(z).map(|&i| &self.entries[i].1)
    }

    /// Value of nu_{ij}(z); distances outside the table are zero.
    pub fn value(&self, i: usize, j: usize, z: &ZLambda) -> QLambda {
        self.get(z)
            .map(|v| v[2 * i + j].clone())
            .unwrap_or_else(QLambda::zero)
    }

    /// Largest |z| present.
    pub fn radius(&self) -> f64 {
        self.entries
            .iter()
            .map(|(z, _)| z.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Exact residuals of the four identities at z. All four are zero for
    /// every z whose renormalisation arguments stay inside the table radius.
    pub fn residuals(&self, z: &ZLambda) -> [QLambda; 4] {
        let lambda = QLambda::lambda();
        let inv_lambda = QLambda::inv_lambda();
        let mut res = [QLambda::zero(), QLambda::zero(), QLambda::zero(), QLambda::zero()];
        for (target, r) in res.iter_mut().enumerate() {
            let (i, j) = PAIRS[target];
            let mut acc = &lambda * &self.value(i, j, z);
            for term in identity_terms(target) {
                let w = &(&QLambda::from_zlambda(z) - &QLambda::from_zlambda(&term.shift)) * &inv_lambda;
                if let Some(zw) = w.as_zlambda() {
                    let (si, sj) = PAIRS[term.source];
                    let mult = QLambda::from_integers(term.mult, 0);
                    acc = &acc - &(&mult * &self.value(si, sj, &zw));
                }
            }
            *r = acc;
        }
        res
    }
}

/// All distances z = y - x between points of a patch with |z| <= bound,
/// decided exactly; returned sorted by the real embedding. The patch must
/// have radius at least lambda^2 * bound so that the restricted difference
/// set is complete.
pub fn distance_set(bound: &ZLambda) -> Vec<ZLambda> {
    let bound_f = bound.to_f64();
    assert!(bound.sign() > 0, "bound must be positive");
    // Smallest level with lambda^{2L+1} >= lambda^2 * bound.
    let mut level = 1u32;
    while crate::algebra::lambda_power(2 * level + 1).to_f64() < crate::algebra::LAMBDA.powi(2) * bound_f {
        level += 1;
    }
    let patch = geometric_patch(level, [Complex64::new(1.0, 0.0); 2]);
    let pos: Vec<(f64, i64, i64)> = patch
        .points
        .iter()
        .map(|p| (p.position_f64(), p.a, p.b))
        .collect();
    let mut seen: HashMap<(i64, i64), ()> = HashMap::new();
    seen.insert((0, 0), ());
    for i in 0..pos.len() {
        for j in (i + 1)..pos.len() {
            if pos[j].0 - pos[i].0 > bound_f + 1e-9 {
                break;
            }
            let d = (pos[j].1 - pos[i].1, pos[j].2 - pos[i].2);
            seen.entry(d).or_insert(());
            seen.entry((-d.0, -d.1)).or_insert(());
        }
    }
    let mut out: Vec<ZLambda> = seen
        .keys()
        .map(|&(a, b)| ZLambda::new(a, b))
        .filter(|z| z.abs_real().cmp_real(bound) != std::cmp::Ordering::Greater)
        .collect();
    out.sort_by(|x, y| x.cmp_real(y));
    out
}

/// Solves the restricted renormalisation system on the distance set with
/// |z| <= 1 + lambda (44 unknowns nu_ij(z)) exactly over Q(lambda). The
/// homogeneous system has a one-dimensional solution space; the returned
/// table is normalised by nu_00(0) + nu_11(0) = 1.
pub fn base_system_solve() -> CorrelationTable {
    let bound = ZLambda::new(1, 1); // 1 + lambda
    let dists = distance_set(&bound);
    assert_eq!(dists.len(), 11, "restricted distance set should have 11 points");
    let n = 4 * dists.len();
    let zindex: HashMap<ZLambda, usize> = dists.iter().cloned().enumerate().map(|(i, z)| (z, i)).collect();
    let unknown = |pair: usize, zi: usize| 4 * zi + pair;

    let lambda = QLambda::lambda();
    let inv_lambda = QLambda::inv_lambda();
    let mut rows: Vec<Vec<QLambda>> = Vec::with_capacity(n);
    for (zi, z) in dists.iter().enumerate() {
        for target in 0..4 {
            let mut row = vec![QLambda::zero(); n];
            row[unknown(target, zi)] = lambda.clone();
            for term in identity_terms(target) {
                let w = &(&QLambda::from_zlambda(z) - &QLambda::from_zlambda(&term.shift)) * &inv_lambda;
                if let Some(zw) = w.as_zlambda() {
                    // Arguments that are not distances of the point set (for
                    // instance 1 - lambda) carry the value zero and drop out.
                    if let Some(&wi) = zindex.get(&zw) {
                        let col = unknown(term.source, wi);
                        row[col] = &row[col] - &QLambda::from_integers(term.mult, 0);
                    }
                }
            }
            rows.push(row);
        }
    }

    let kernel = kernel_vector(rows, n);

    // Normalise: nu_00(0) + nu_11(0) = 1.
    let zero_i = zindex[&ZLambda::zero()];
    let c = &kernel[unknown(0, zero_i)] + &kernel[unknown(3, zero_i)];
    let c_inv = c.inv().expect("normalisation constant must be invertible");
    let entries = dists
        .iter()
        .enumerate()
        .map(|(zi, z)| {
            let vals = [
                &kernel[unknown(0, zi)] * &c_inv,
                &kernel[unknown(1, zi)] * &c_inv,
                &kernel[unknown(2, zi)] * &c_inv,
                &kernel[unknown(3, zi)] * &c_inv,
            ];
            (z.clone(), vals)
        })
        .collect();
    CorrelationTable::from_entries(entries)
}

/// Gaussian elimination over Q(lambda); asserts that the kernel is exactly
/// one-dimensional and returns a spanning vector.
fn kernel_vector(mut rows: Vec<Vec<QLambda>>, n: usize) -> Vec<QLambda> {
    let m = rows.len();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut rank = 0usize;
    for col in 0..n {
        // Find a pivot row.
        let mut piv = None;
        for (r, row) in rows.iter().enumerate().skip(rank) {
            if !row[col].is_zero() {
                piv = Some(r);
                break;
            }
        }
        let Some(piv) = piv else { continue };
        rows.swap(rank, piv);
        let inv = rows[rank][col].inv().unwrap();
        for x in rows[rank].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..m {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for cc in col..n {
                    let sub = &factor * &rows[rank][cc];
                    rows[r][cc] = &rows[r][cc] - &sub;
                }
            }
        }
        pivot_of_col[col] = Some(rank);
        rank += 1;
    }
    assert_eq!(rank, n - 1, "solution space must be one-dimensional");
    let free_col = pivot_of_col
        .iter()
        .position(|p| p.is_none())
        .expect("a free column must exist");
    let mut v = vec![QLambda::zero(); n];
    v[free_col] = QLambda::one();
    for col in 0..n {
        if let Some(r) = pivot_of_col[col] {
            v[col] = -rows[r][free_col].clone();
        }
    }
    v
}

/// Extends a base table outward to all distances |z| <= bound using the
/// identities directly: each new value only involves strictly smaller
/// distances, so one pass in order of increasing |z| suffices.
pub fn extend_table(base: &CorrelationTable, bound: &ZLambda) -> CorrelationTable {
    let mut dists = distance_set(bound);
    dists.sort_by(|x, y| x.abs_real().cmp_real(&y.abs_real()));
    let inv_lambda = QLambda::inv_lambda();
    let lambda_inv_q = inv_lambda.clone(); // prefactor 1/lambda
    let mut entries: Vec<(ZLambda, [QLambda; 4])> = Vec::with_capacity(dists.len());
    let mut index: HashMap<ZLambda, usize> = HashMap::new();
    let lookup = |entries: &Vec<(ZLambda, [QLambda; 4])>,
                  index: &HashMap<ZLambda, usize>,
                  pair: usize,
                  z: &ZLambda|
     -> QLambda {
        index
            .get(z)
            .map(|&i| entries[i].1[pair].clone())
            .unwrap_or_else(QLambda::zero)
    };
    for z in dists {
        if let Some(vals) = base.get(&z) {
            index.insert(z.clone(), entries.len());
            entries.push((z, vals.clone()));
            continue;
        }
        let mut vals = [QLambda::zero(), QLambda::zero(), QLambda::zero(), QLambda::zero()];
        for (target, slot) in vals.iter_mut().enumerate() {
            let mut acc = QLambda::zero();
            for term in identity_terms(target) {
                let w = &(&QLambda::from_zlambda(&z) - &QLambda::from_zlambda(&term.shift)) * &inv_lambda;
                if let Some(zw) = w.as_zlambda() {
                    let val = lookup(&entries, &index, term.source, &zw);
                    acc = &acc + &(&QLambda::from_integers(term.mult, 0) * &val);
                }
            }
            *slot = &lambda_inv_q * &acc;
        }
        index.insert(z.clone(), entries.len());
        entries.push((z, vals));
    }
    CorrelationTable::from_entries(entries)
}

/// Empirical pair correlations counted on a finite patch: for every distance
/// z with |z| <= bound, the number of ordered pairs of types (i, j) at
/// displacement z, divided by the number of points.
#[derive(Clone, Debug)]
pub struct EmpiricalTable {
    pub map: HashMap<(i64, i64), [f64; 4]>,
    pub total_points: u64,
}

impl EmpiricalTable {
    pub fn value(&self, i: usize, j: usize, z: &ZLambda) -> f64 {
        let key = match (z.a.checked_i64(), z.b.checked_i64()) {
            (Some(a), Some(b)) => (a, b),
            _ => return 0.0,
        };
        self.map.get(&key).map(|v| v[2 * i + j]).unwrap_or(0.0)
    }
}

/// Brute-force counting oracle on a patch. Pairs are counted in both
/// directions; z = 0 contributes the diagonal terms nu_ii(0).
pub fn count_correlations(patch: &WeightedPointSet, bound: f64) -> EmpiricalTable {
    let pts = &patch.points;
    let mut counts: HashMap<(i64, i64), [u64; 4]> = HashMap::new();
    {
        let diag = counts.entry((0, 0)).or_insert([0; 4]);
        for p in pts {
            diag[3 * p.tile as usize] += 1; // (0,0) -> slot 0, (1,1) -> slot 3
        }
    }
    let pos: Vec<f64> = pts.iter().map(|p| p.position_f64()).collect();
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if pos[j] - pos[i] > bound + 1e-9 {
                break;
            }
            let d = (pts[j].a - pts[i].a, pts[j].b - pts[i].b);
            let (ti, tj) = (pts[i].tile as usize, pts[j].tile as usize);
            counts.entry(d).or_insert([0; 4])[2 * ti + tj] += 1;
            counts.entry((-d.0, -d.1)).or_insert([0; 4])[2 * tj + ti] += 1;
        }
    }
    let total = pts.len() as u64;
    let map = counts
        .into_iter()
        .map(|(k, v)| (k, v.map(|c| c as f64 / total as f64)))
        .collect();
    EmpiricalTable { map, total_points: total }
}

/// Weighted autocorrelation coefficient
/// eta_u(z) = dens(Lambda) * sum_ij conj(u_i) nu_ij(z) u_j for real exact weights.
pub fn eta(table: &CorrelationTable, u: &[QLambda; 2], z: &ZLambda) -> QLambda {
    let dens = crate::algebra::pf_data().density;
    let mut acc = QLambda::zero();
    for i in 0..2 {
        for j in 0..2 {
            acc = &acc + &(&(&u[i] * &u[j]) * &table.value(i, j, z));
        }
    }
    &dens * &acc
}

/// The eleven distances of Table 1 with their exact correlation values,
/// used as the frozen reference for the base solver. Powers of 1/lambda:
/// L^-1 = (L-1)/3, L^-2 = (4-L)/9, L^-3 = (4L-7)/27, L^-4 = (19-7L)/81.
pub fn reference_base_table() -> Vec<(ZLambda, [QLambda; 4])> {
    let r = |pn: i64, pd: i64, qn: i64, qd: i64| QLambda::from_rationals(pn, pd, qn, qd);
    let zero = || QLambda::zero();
    let il1 = || r(-1, 3, 1, 3);
    let il2 = || r(4, 9, -1, 9);
    let il3 = || r(-7, 27, 4, 27);
    let il3_3 = || r(-7, 9, 4, 9); // 3 * lambda^-3
    let il2_2 = || r(8, 9, -2, 9);
    let il2_3 = || r(4, 3, -1, 3);
    let il4_3 = || r(19, 27, -7, 27); // 3 * lambda^-4
    vec![
        (ZLambda::new(-1, -1), [zero(), il3(), il2(), il4_3()]),
        (ZLambda::new(-3, 0), [zero(), il2(), zero(), zero()]),
        (ZLambda::new(0, -1), [il3_3(), zero(), il2(), zero()]),
        (ZLambda::new(-2, 0), [zero(), il2(), zero(), il2()]),
        (ZLambda::new(-1, 0), [zero(), il2(), zero(), il2_2()]),
        (ZLambda::new(0, 0), [il1(), zero(), zero(), il2_3()]),
        (ZLambda::new(1, 0), [zero(), zero(), il2(), il2_2()]),
        (ZLambda::new(2, 0), [zero(), zero(), il2(), il2()]),
        (ZLambda::new(0, 1), [il3_3(), il2(), zero(), zero()]),
        (ZLambda::new(3, 0), [zero(), zero(), il2(), zero()]),
        (ZLambda::new(1, 1), [zero(), il2(), il3(), il4_3()]),
    ]
}

/// Exact value of eta for the balanced weights at z = 0: (6 lambda - 3)/13.
pub fn eta_balanced_at_zero() -> QLambda {
    QLambda::from_rationals(-3, 13, 6, 13)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inflation::balanced_weights_exact;

    #[test]
    fn restricted_distances() {
        let d = distance_set(&ZLambda::new(1, 1));
        let expect: Vec<ZLambda> = vec![
            ZLambda::new(-1, -1),
            ZLambda::new(-3, 0),
            ZLambda::new(0, -1),
            ZLambda::new(-2, 0),
            ZLambda::new(-1, 0),
            ZLambda::new(0, 0),
            ZLambda::new(1, 0),
            ZLambda::new(2, 0),
            ZLambda::new(0, 1),
            ZLambda::new(3, 0),
            ZLambda::new(1, 1),
        ];
        assert_eq!(d, expect);
    }

    #[test]
    fn base_solution_matches_reference() {
        let table = base_system_solve();
        let reference = reference_base_table();
        assert_eq!(table.entries.len(), reference.len());
        for (z, vals) in &reference {
            let got = table.get(z).unwrap_or_else(|| panic!("missing {z}"));
            assert_eq!(got, vals, "values at z = {z}");
        }
    }

    #[test]
    fn eleven_ratio_at_zero() {
        // nu_11(0) = (3/lambda) nu_00(0).
        let table = base_system_solve();
        let z = ZLambda::zero();
        let three_over_lambda = QLambda::from_integers(3, 0) * QLambda::inv_lambda();
        assert_eq!(
            table.value(1, 1, &z),
            &three_over_lambda * &table.value(0, 0, &z)
        );
    }

    #[test]
    fn extension_value_at_two_lambda() {
        // nu_00(2 lambda) = (1/lambda) [nu_00 + nu_01 + nu_10 + nu_11](2)
        //                 = (1/lambda)(2 lambda^-2) = 2 lambda^-3.
        let table = extend_table(&base_system_solve(), &ZLambda::new(0, 2));
        let il3 = QLambda::from_rationals(-7, 27, 4, 27);
        assert_eq!(
            table.value(0, 0, &ZLambda::new(0, 2)),
            &QLambda::from_integers(2, 0) * &il3
        );
    }

    #[test]
    fn extended_table_symmetry() {
        // nu_ij(z) = nu_ji(-z) throughout.
        let table = extend_table(&base_system_solve(), &ZLambda::new(10, 0));
        for (z, vals) in &table.entries {
            let neg = -z;
            let mirrored = table.get(&neg).expect("difference set is symmetric");
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(vals[2 * i + j], mirrored[2 * j + i], "z = {z}");
                }
            }
        }
    }

    #[test]
    fn residuals_vanish_exactly() {
        let table = extend_table(&base_system_solve(), &ZLambda::new(10, 0));
        // Arguments of the identities at z stay within |z| + 2 + lambda, so
        // testing up to |z| <= 10 - (2 + lambda) keeps lookups inside.
        let safe = ZLambda::new(8, -1); // 10 - 2 - lambda
        for (z, _) in &table.entries {
            if z.abs_real().cmp_real(&safe) == std::cmp::Ordering::Greater {
                continue;
            }
            for r in table.residuals(z) {
                assert!(r.is_zero(), "residual at z = {z}");
            }
        }
    }

    #[test]
    fn eta_balanced_value() {
        let table = base_system_solve();
        let u = balanced_weights_exact();
        assert_eq!(eta(&table, &u, &ZLambda::zero()), eta_balanced_at_zero());
        assert!((eta_balanced_at_zero().to_f64() - 0.832).abs() < 1e-3);
    }

    #[test]
    fn counting_oracle_agrees_at_low_level() {
        let table = base_system_solve();
        let patch = geometric_patch(5, [Complex64::new(1.0, 0.0); 2]);
        let emp = count_correlations(&patch, 1.0 + crate::algebra::LAMBDA + 1e-9);
        for (z, vals) in &table.entries {
            for (pi, &(i, j)) in PAIRS.iter().enumerate() {
                let exact = vals[pi].to_f64();
                let counted = emp.value(i, j, z);
                assert!(
                    (exact - counted).abs() < 5e-3,
                    "nu_{i}{j}({z}): exact {exact}, counted {counted}"
                );
            }
        }
    }
}
