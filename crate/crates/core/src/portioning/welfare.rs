//! Utilitarian and egalitarian portioning.
//!
//! A user's disutility for a share vector `p` is the l1 distance between `p` and their
//! normalized row.

use super::lp::{LinearProgram, Relation};
use super::{NormalizedProfile, SimplexShare};
use crate::error::{Error, Result};

/// Total l1 disutility of `p` summed over users.
pub fn util_objective(profile: &NormalizedProfile, p: &[f64]) -> f64 {
    (0..profile.n_users)
        .map(|i| profile.row(i).iter().zip(p).map(|(w, x)| (x - w).abs()).sum::<f64>())
        .sum()
}

fn sorted_column(profile: &NormalizedProfile, j: usize) -> Vec<f64> {
    let mut c = profile.column(j);
    c.sort_by(f64::total_cmp);
    c
}

/// Smallest and largest value of `p_j` minimizing `sum_i |x - w_ij| - mu * x` over `x >= 0`.
fn minimizer_range(sorted: &[f64], mu: i64) -> (f64, f64) {
    let n = sorted.len() as i64;
    let half = mu + n;
    // the right derivative at x is 2 #{w <= x} - n, the left derivative 2 #{w < x} - n
    let r = half.div_euclid(2) + i64::from(half.rem_euclid(2) != 0);
    let lo = if r <= 0 {
        0.0
    } else if r > n {
        f64::INFINITY
    } else {
        sorted[(r - 1) as usize]
    };
    let s = half.div_euclid(2);
    let hi = if s < 0 {
        0.0
    } else if s >= n {
        1.0
    } else {
        sorted[s as usize].min(1.0)
    };
    (lo.min(1.0), hi.max(lo.min(1.0)))
}

/// Per-artist bounds of the optimal face of the utilitarian problem.
///
/// The objective is separable, so with the optimal multiplier `mu` on the simplex
/// constraint every artist's optimal values form an interval; the optimal set is that box
/// intersected with the simplex.
pub fn util_interval(profile: &NormalizedProfile) -> Result<Vec<(f64, f64)>> {
    let n = profile.n_users as i64;
    let columns: Vec<Vec<f64>> = (0..profile.n_artists).map(|j| sorted_column(profile, j)).collect();
    for mu in -n..=n {
        let ranges: Vec<(f64, f64)> = columns.iter().map(|c| minimizer_range(c, mu)).collect();
        let lo: f64 = ranges.iter().map(|r| r.0).sum();
        let hi: f64 = ranges.iter().map(|r| r.1).sum();
        if lo <= 1.0 + 1e-12 && hi >= 1.0 - 1e-12 {
            return Ok(ranges);
        }
    }
    Err(Error::SolverFailure("no multiplier brackets the simplex constraint".into()))
}

/// The maximum-entropy point of `{p : lo <= p <= hi, sum p = 1}`.
///
/// Stationarity gives `p_j = clamp(c, lo_j, hi_j)` for a common level `c`, found by bisection.
pub fn max_entropy_on_box(bounds: &[(f64, f64)]) -> Result<Vec<f64>> {
    let lo_sum: f64 = bounds.iter().map(|b| b.0).sum();
    let hi_sum: f64 = bounds.iter().map(|b| b.1).sum();
    if lo_sum > 1.0 + 1e-9 || hi_sum < 1.0 - 1e-9 {
        return Err(Error::SolverFailure("box does not meet the simplex".into()));
    }
    let fill = |c: f64| bounds.iter().map(|&(l, h)| c.clamp(l, h)).sum::<f64>();
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if fill(mid) < 1.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let c = 0.5 * (a + b);
    let mut p: Vec<f64> = bounds.iter().map(|&(l, h)| c.clamp(l, h)).collect();
    // hand any rounding residue to a coordinate with room to absorb it
    let residue = 1.0 - p.iter().sum::<f64>();
    if residue != 0.0 {
        if let Some(k) = (0..p.len()).find(|&k| p[k] + residue >= bounds[k].0 - 1e-15 && p[k] + residue <= bounds[k].1 + 1e-15) {
            p[k] += residue;
        }
    }
    Ok(p)
}

/// Minimizes total l1 disutility over the simplex, breaking ties by maximum entropy.
pub fn util_rule(profile: &NormalizedProfile) -> Result<SimplexShare> {
    let bounds = util_interval(profile)?;
    Ok(SimplexShare { shares: max_entropy_on_box(&bounds)? })
}

/// Variable layout of the egalitarian linear programs.
struct EgalModel<'a> {
    profile: &'a NormalizedProfile,
    /// For each user, the (artist, variable) pairs of its excess variables `u_ij >= w_ij - p_j`.
    excess: Vec<Vec<(usize, usize)>>,
    n_vars: usize,
}

/// Slack granted to users fixed at an earlier round's optimum.
const FIX_SLACK: f64 = 1e-10;

impl<'a> EgalModel<'a> {
    fn new(profile: &'a NormalizedProfile) -> Self {
        let m = profile.n_artists;
        let mut next = m;
        let excess = (0..profile.n_users)
            .map(|i| {
                profile
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(j, _)| {
                        next += 1;
                        (j, next - 1)
                    })
                    .collect()
            })
            .collect();
        EgalModel { profile, excess, n_vars: next }
    }

    /// The base rows: excess definitions and the simplex. Returns the LP and the
    /// disutility row builder for each user.
    fn base(&self, extra_vars: usize) -> LinearProgram {
        let m = self.profile.n_artists;
        let mut lp = LinearProgram::new(self.n_vars + extra_vars);
        for (i, ex) in self.excess.iter().enumerate() {
            for &(j, v) in ex {
                lp.add(vec![(j, 1.0), (v, 1.0)], Relation::Ge, self.profile.row(i)[j]);
            }
        }
        lp.add((0..m).map(|j| (j, 1.0)).collect(), Relation::Eq, 1.0);
        lp
    }

    /// `2 sum_j u_ij`, which equals user `i`'s l1 disutility at an optimum.
    fn disutility_row(&self, i: usize) -> Vec<(usize, f64)> {
        self.excess[i].iter().map(|&(_, v)| (v, 2.0)).collect()
    }
}

fn disutility(profile: &NormalizedProfile, i: usize, p: &[f64]) -> f64 {
    profile.row(i).iter().zip(p).map(|(w, x)| (x - w).abs()).sum()
}

/// Leximin egalitarian portioning with a maximum-entropy tie-break on the final optimal set.
pub fn egal_rule(profile: &NormalizedProfile) -> Result<SimplexShare> {
    let model = EgalModel::new(profile);
    let n = profile.n_users;
    let m = profile.n_artists;
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let mut p = vec![1.0 / m as f64; m];

    for _round in 0..n {
        if fixed.iter().all(Option::is_some) {
            break;
        }
        let t_var = model.n_vars;
        let mut lp = model.base(1);
        lp.objective[t_var] = 1.0;
        let mut free_rows = Vec::new();
        for i in 0..n {
            let mut row = model.disutility_row(i);
            match fixed[i] {
                Some(v) => {
                    lp.add(row, Relation::Le, v + FIX_SLACK);
                }
                None => {
                    row.push((t_var, -1.0));
                    free_rows.push((i, lp.add(row, Relation::Le, 0.0)));
                }
            }
        }
        let sol = lp.solve()?;
        let t_star = sol.x[t_var];
        p = sol.x[..m].to_vec();
        let mut newly: Vec<usize> = free_rows
            .iter()
            .filter(|&&(_, r)| sol.duals[r].abs() > 1e-9)
            .map(|&(i, _)| i)
            .collect();
        if newly.is_empty() {
            newly = free_rows
                .iter()
                .map(|&(i, _)| i)
                .filter(|&i| disutility(profile, i, &p) >= t_star - 1e-9)
                .collect();
        }
        if newly.is_empty() {
            return Err(Error::SolverFailure("leximin round fixed no user".into()));
        }
        for i in newly {
            fixed[i] = Some(t_star);
        }
    }
    let bounds: Vec<f64> = fixed.iter().map(|v| v.expect("every user fixed after n rounds")).collect();
    let shares = refine_max_entropy(&model, &bounds, p)?;
    Ok(SimplexShare { shares: renormalize(shares) })
}

fn renormalize(mut p: Vec<f64>) -> Vec<f64> {
    for x in &mut p {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Optimizes a linear objective in `p` over the leximin-optimal set.
fn face_extreme(model: &EgalModel, bounds: &[f64], obj: &[f64]) -> Result<Vec<f64>> {
    let mut lp = model.base(0);
    lp.objective[..obj.len()].copy_from_slice(obj);
    for (i, &v) in bounds.iter().enumerate() {
        lp.add(model.disutility_row(i), Relation::Le, v + FIX_SLACK);
    }
    Ok(lp.solve()?.x[..model.profile.n_artists].to_vec())
}

fn entropy_slope(p: &[f64], d: &[f64], tau: f64) -> f64 {
    p.iter()
        .zip(d)
        .filter(|(_, &dj)| dj != 0.0)
        .map(|(&pj, &dj)| -dj * (pj + tau * dj).max(1e-300).ln())
        .sum()
}

/// Frank-Wolfe ascent of entropy over the optimal set, run only when that set is not a point.
fn refine_max_entropy(model: &EgalModel, bounds: &[f64], p0: Vec<f64>) -> Result<Vec<f64>> {
    let m = model.profile.n_artists;
    let mut extremes = Vec::with_capacity(2 * m);
    let mut spread: f64 = 0.0;
    for j in 0..m {
        let mut obj = vec![0.0; m];
        obj[j] = 1.0;
        let lo = face_extreme(model, bounds, &obj)?;
        obj[j] = -1.0;
        let hi = face_extreme(model, bounds, &obj)?;
        spread = spread.max(hi[j] - lo[j]);
        extremes.push(lo);
        extremes.push(hi);
    }
    if spread <= 1e-9 {
        return Ok(p0);
    }
    let mut p: Vec<f64> = (0..m).map(|j| extremes.iter().map(|e| e[j]).sum::<f64>() / extremes.len() as f64).collect();
    let active: Vec<bool> = (0..m).map(|j| extremes.iter().any(|e| e[j] > 1e-12)).collect();
    for _ in 0..300 {
        let grad: Vec<f64> = (0..m)
            .map(|j| if active[j] { -(p[j].max(1e-300)).ln() - 1.0 } else { 0.0 })
            .collect();
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let s = face_extreme(model, bounds, &neg)?;
        let d: Vec<f64> = s.iter().zip(&p).map(|(a, b)| a - b).collect();
        let gap: f64 = grad.iter().zip(&d).map(|(g, x)| g * x).sum();
        if gap <= 1e-12 {
            break;
        }
        let (mut a, mut b) = (0.0, 1.0);
        if entropy_slope(&p, &d, 1.0) >= 0.0 {
            a = 1.0;
        } else {
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if entropy_slope(&p, &d, mid) > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
        }
        for (x, dj) in p.iter_mut().zip(&d) {
            *x += a * dj;
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Instance;
    use crate::portioning::normalize;

    fn profile(rows: &[&[f64]]) -> NormalizedProfile {
        normalize(&Instance::new(rows.iter().map(|r| r.to_vec()).collect(), 1.0).unwrap())
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    /// All points of the simplex on a grid with `steps` subdivisions, for m <= 3.
    fn grid(m: usize, steps: usize) -> Vec<Vec<f64>> {
        let h = 1.0 / steps as f64;
        let mut out = Vec::new();
        match m {
            2 => (0..=steps).for_each(|a| out.push(vec![a as f64 * h, 1.0 - a as f64 * h])),
            3 => {
                for a in 0..=steps {
                    for b in 0..=steps - a {
                        out.push(vec![a as f64 * h, b as f64 * h, (steps - a - b) as f64 * h]);
                    }
                }
            }
            _ => unreachable!(),
        }
        out
    }

    #[test]
    fn util_majority_takes_all() {
        let k = 3;
        let mut rows: Vec<&[f64]> = vec![&[1.0, 0.0]; k + 1];
        rows.extend(vec![&[0.0, 1.0][..]; k]);
        let s = util_rule(&profile(&rows)).unwrap();
        assert!(close(&s.shares, &[1.0, 0.0], 1e-12));
    }

    #[test]
    fn util_identical_rows() {
        let s = util_rule(&profile(&[&[0.2, 0.5, 0.3], &[0.2, 0.5, 0.3]])).unwrap();
        assert!(close(&s.shares, &[0.2, 0.5, 0.3], 1e-12));
    }

    #[test]
    fn util_identity_matrix_is_uniform() {
        let prof = profile(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let s = util_rule(&prof).unwrap();
        assert!(close(&s.shares, &[1.0 / 3.0; 3], 1e-12));
        // grid oracle: output attains the grid minimum
        let best = grid(3, 300).iter().map(|p| util_objective(&prof, p)).fold(f64::INFINITY, f64::min);
        assert!(util_objective(&prof, &s.shares) <= best + 1e-9);
    }

    /// Oracle: the optimal value from a direct linear program.
    fn util_lp_value(prof: &NormalizedProfile) -> f64 {
        let (n, m) = (prof.n_users, prof.n_artists);
        let mut lp = LinearProgram::new(m + n * m);
        for v in m..m + n * m {
            lp.objective[v] = 1.0;
        }
        for i in 0..n {
            for j in 0..m {
                let e = m + i * m + j;
                let w = prof.row(i)[j];
                lp.add(vec![(e, 1.0), (j, -1.0)], Relation::Ge, -w);
                lp.add(vec![(e, 1.0), (j, 1.0)], Relation::Ge, w);
            }
        }
        lp.add((0..m).map(|j| (j, 1.0)).collect(), Relation::Eq, 1.0);
        lp.solve().unwrap().objective
    }

    #[test]
    fn util_matches_lp_oracle() {
        let cases: Vec<Vec<&[f64]>> = vec![
            vec![&[3.0, 1.0, 0.0], &[0.0, 2.0, 2.0], &[1.0, 1.0, 1.0], &[5.0, 0.0, 1.0]],
            vec![&[1.0, 2.0], &[2.0, 1.0]],
            vec![&[0.1, 0.2, 0.3, 0.4], &[0.4, 0.3, 0.2, 0.1], &[1.0, 0.0, 0.0, 0.0]],
        ];
        for rows in cases {
            let prof = profile(&rows);
            let s = util_rule(&prof).unwrap();
            assert!((s.shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((util_objective(&prof, &s.shares) - util_lp_value(&prof)).abs() < 1e-9);
        }
    }

    #[test]
    fn egal_examples() {
        let prof = profile(&[&[1.0, 1.0, 1.0], &[0.0, 1.0, 1.0], &[0.0, 1.0, 1.0]]);
        let s = egal_rule(&prof).unwrap();
        assert!(close(&s.shares, &[1.0 / 6.0, 5.0 / 12.0, 5.0 / 12.0], 1e-7), "{:?}", s.shares);

        let s = egal_rule(&profile(&[&[0.2, 0.8], &[0.2, 0.8]])).unwrap();
        assert!(close(&s.shares, &[0.2, 0.8], 1e-9));

        let prof = profile(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let s = egal_rule(&prof).unwrap();
        assert!(close(&s.shares, &[0.5, 0.5], 1e-9));
        // scan oracle over p in [0, 1]
        let worst = |p: &[f64]| (0..prof.n_users).map(|i| disutility(&prof, i, p)).fold(0.0, f64::max);
        let best = grid(2, 1000).iter().map(|p| worst(p)).fold(f64::INFINITY, f64::min);
        assert!((worst(&s.shares) - best).abs() < 1e-9);
    }

    #[test]
    fn egal_minimax_matches_grid() {
        let prof = profile(&[&[3.0, 1.0, 0.0], &[0.0, 2.0, 2.0], &[1.0, 0.0, 4.0]]);
        let s = egal_rule(&prof).unwrap();
        let worst = |p: &[f64]| (0..prof.n_users).map(|i| disutility(&prof, i, p)).fold(0.0, f64::max);
        let best = grid(3, 400).iter().map(|p| worst(p)).fold(f64::INFINITY, f64::min);
        assert!(worst(&s.shares) <= best + 1e-9);
    }

    #[test]
    fn minimizer_range_edges() {
        let col = [0.0, 0.25, 1.0];
        assert_eq!(minimizer_range(&col, -3), (0.0, 0.0));
        assert_eq!(minimizer_range(&col, 3), (1.0, 1.0));
        // slope -1 on (0, 0.25), slope +1 on (0.25, 1): zero multiplier picks the median
        assert_eq!(minimizer_range(&col, 0), (0.25, 0.25));
        assert_eq!(minimizer_range(&col, 1), (0.25, 1.0));
    }
}
