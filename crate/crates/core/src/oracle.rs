//! Brute-force ground truth on tiny instances: exhaustive power-grid
//! search for the max-min energy efficiency and max-min rate problems at
//! a fixed detection matrix. Solver results are compared against these
//! optima through explicit grid-resolution error bounds.

use crate::clustering::BeamPlan;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::noma::{
    all_rates, energy_efficiency, total_power, DetectionMatrix, GainTable, InterferenceMap,
    PowerAllocation,
};
use crate::scalar::{fl, Scalar};

/// Default search grid over `[0, p_max]`: zero, then log-spaced points
/// from `p_max/1000` to `p_max/10`, then linearly spaced points up to
/// `p_max`. Efficiency optima often sit at low power, where the
/// geometric half keeps the relative resolution fine.
pub fn power_grid<T: Scalar>(cfg: &SystemConfig<T>, n: usize) -> Vec<T> {
    let mut grid = Vec::with_capacity(n.max(2));
    grid.push(T::zero());
    if n <= 2 {
        grid.push(cfg.p_max);
        return grid;
    }
    let n_geo = (n - 1) / 2;
    let n_lin = n - 1 - n_geo;
    let anchor = cfg.p_max * fl(0.1);
    let low = cfg.p_max * fl(1e-3);
    for k in 0..n_geo {
        if n_geo == 1 {
            grid.push(anchor);
        } else {
            let t = fl::<T>(k as f64) / fl((n_geo - 1) as f64);
            grid.push(low * (anchor / low).powf(t));
        }
    }
    for j in 1..=n_lin {
        grid.push(anchor + (cfg.p_max - anchor) * fl(j as f64) / fl(n_lin as f64));
    }
    grid
}

/// Largest gap between adjacent points of the (sorted) grid: every point
/// of `[0, p_max]` lies within this distance of a grid point.
pub fn max_grid_gap<T: Scalar>(grid: &[T]) -> T {
    let g = sorted_grid(grid);
    g.windows(2)
        .map(|w| w[1] - w[0])
        .fold(T::zero(), T::max)
}

fn sorted_grid<T: Scalar>(grid: &[T]) -> Vec<T> {
    let mut g: Vec<T> = grid.iter().copied().filter(|p| p.is_finite()).collect();
    g.sort_by(|a, b| a.partial_cmp(b).expect("grid points are comparable"));
    g.dedup();
    g
}

fn grid_search<T: Scalar>(
    det: &DetectionMatrix<T>,
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    map: &InterferenceMap<T>,
    grid: &[T],
    per_user: impl Fn(T, T) -> T,
) -> Result<(T, PowerAllocation<T>)> {
    let grid = sorted_grid(grid);
    if grid.is_empty() {
        return Err(Error::Infeasible);
    }
    let gains = GainTable::build(det, plan, cfg);
    let slots: Vec<(usize, usize)> = plan.slots().collect();
    let n = slots.len();
    let r_floor = cfg.r_min - fl(1e-12);
    let mut idx = vec![0usize; n];
    let mut power = PowerAllocation {
        p: vec![[T::zero(); 2]; plan.n_beams()],
    };
    let mut best: Option<(T, PowerAllocation<T>)> = None;
    'points: loop {
        for (k, &(m, i)) in slots.iter().enumerate() {
            power.p[m][i] = grid[idx[k]];
        }
        let rates = all_rates(&gains, map, &power);
        let mut score = T::infinity();
        let mut feasible = true;
        for &(m, i) in &slots {
            let r = rates[m][i];
            if r < r_floor {
                feasible = false;
                break;
            }
            score = score.min(per_user(r, power.p[m][i]));
        }
        // Strict improvement keeps the earliest point of the odometer
        // sweep over the sorted grid, so ties resolve to the
        // lexicographically smallest power vector regardless of the
        // caller's grid ordering.
        if feasible && best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, power.clone()));
        }
        let mut k = 0;
        loop {
            if k == n {
                break 'points;
            }
            idx[k] += 1;
            if idx[k] < grid.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
    best.ok_or(Error::Infeasible)
}

/// Exhaustive max-min energy efficiency over the default power grid with
/// `grid_points` points per user. Grid points where any user misses the
/// rate floor are skipped; errors with [`Error::Infeasible`] when every
/// point does.
pub fn grid_maxmin_ee<T: Scalar>(
    det: &DetectionMatrix<T>,
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    map: &InterferenceMap<T>,
    grid_points: usize,
) -> Result<(T, PowerAllocation<T>)> {
    grid_maxmin_ee_over(det, plan, cfg, map, &power_grid(cfg, grid_points))
}

/// [`grid_maxmin_ee`] over a caller-supplied grid (used for nested-grid
/// refinement checks).
pub fn grid_maxmin_ee_over<T: Scalar>(
    det: &DetectionMatrix<T>,
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    map: &InterferenceMap<T>,
    grid: &[T],
) -> Result<(T, PowerAllocation<T>)> {
    grid_search(det, plan, cfg, map, grid, |r, p| {
        energy_efficiency(r, total_power(cfg, p))
    })
}

/// Exhaustive max-min rate over the default power grid.
pub fn grid_maxmin_rate<T: Scalar>(
    det: &DetectionMatrix<T>,
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    map: &InterferenceMap<T>,
    grid_points: usize,
) -> Result<(T, PowerAllocation<T>)> {
    grid_maxmin_rate_over(det, plan, cfg, map, &power_grid(cfg, grid_points))
}

/// [`grid_maxmin_rate`] over a caller-supplied grid.
pub fn grid_maxmin_rate_over<T: Scalar>(
    det: &DetectionMatrix<T>,
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    map: &InterferenceMap<T>,
    grid: &[T],
) -> Result<(T, PowerAllocation<T>)> {
    grid_search(det, plan, cfg, map, grid, |r, _| r)
}

/// Worst rate movement one coordinate with gain `g` can cause when its
/// power slides across a single grid cell `[a, b]`: the gradient
/// magnitude is at most `rho*g/(ln2*(noise + g*p))` because the
/// coordinate's own contribution keeps the denominator above
/// `noise + g*p` whether it appears as signal or as interference, and
/// integrating that envelope over the cell gives
/// `rho*log2((noise + g*b)/(noise + g*a))`.
fn worst_cell_rate_move<T: Scalar>(g: T, noise: T, rho: T, grid: &[T]) -> T {
    grid.windows(2)
        .map(|w| rho * ((noise + g * w[1]) / (noise + g * w[0])).log2())
        .fold(T::zero(), T::max)
}

/// Bound on how far the min-user rate can move between a feasible power
/// vector and its per-coordinate rounding onto the grid: cell-wise rate
/// movements summed over the own signal and every interference-set
/// member, maximized over users. The grid must be the one the oracle
/// searched (it is sorted internally).
pub fn rate_grid_gap_bound<T: Scalar>(
    gains: &GainTable<T>,
    map: &InterferenceMap<T>,
    grid: &[T],
) -> T {
    let grid = sorted_grid(grid);
    let rho = map.slot_fraction;
    let mut worst = T::zero();
    for m in 0..map.n_beams() {
        for i in 0..2 {
            let noise = gains.noise[m];
            let mut sens = worst_cell_rate_move(gains.own(m, i), noise, rho, &grid);
            for &(j, l) in map.set(m, i) {
                sens += worst_cell_rate_move(gains.g[m][j][l], noise, rho, &grid);
            }
            worst = worst.max(sens);
        }
    }
    worst
}

/// [`rate_grid_gap_bound`] for the min-user energy efficiency. The
/// quotient rule splits each user's movement into rate movements scaled
/// by the power-cost floor plus the cost movement of the own coordinate
/// scaled by the cell's rate cap; all floors are taken per cell.
pub fn ee_grid_gap_bound<T: Scalar>(
    gains: &GainTable<T>,
    map: &InterferenceMap<T>,
    cfg: &SystemConfig<T>,
    grid: &[T],
) -> T {
    let grid = sorted_grid(grid);
    let rho = map.slot_fraction;
    let pc = cfg.circuit_power;
    let xi = cfg.amp_inefficiency;
    let mut worst = T::zero();
    for m in 0..map.n_beams() {
        for i in 0..2 {
            let noise = gains.noise[m];
            let g_own = gains.own(m, i);
            // Interference coordinates: rate movement over the smallest
            // possible power cost.
            let mut sens = T::zero();
            for &(j, l) in map.set(m, i) {
                sens += worst_cell_rate_move(gains.g[m][j][l], noise, rho, &grid) / pc;
            }
            // Own coordinate, cell by cell: the power cost stays above
            // `pc + xi*a` and the rate below the cell's interference-free
            // cap.
            let own = grid
                .windows(2)
                .map(|w| {
                    let cost_floor = pc + xi * w[0];
                    let rate_cap = rho * (T::one() + g_own * w[1] / noise).log2();
                    worst_cell_rate_move(g_own, noise, rho, &w[0..2]) / cost_floor
                        + xi * rate_cap * (w[1] - w[0]) / (cost_floor * cost_floor)
                })
                .fold(T::zero(), T::max);
            worst = worst.max(sens + own);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noma::rate;
    use crate::testutil::plan_from_effective;
    use num_complex::Complex;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn pair_plan(gs: f64, gw: f64) -> BeamPlan<f64> {
        plan_from_effective(vec![[vec![c(gs.sqrt(), 0.0)], vec![c(gw.sqrt(), 0.0)]]])
    }

    fn tiny_cfg() -> SystemConfig<f64> {
        SystemConfig {
            n_antennas: 1,
            n_rf: 1,
            codebook_size: 1,
            r_min: 0.05,
            ..SystemConfig::default()
        }
    }

    fn decoupled_map() -> InterferenceMap<f64> {
        InterferenceMap::new(vec![[vec![], vec![]]], 1.0)
    }

    #[test]
    fn decoupled_pair_matches_per_user_scans() {
        let plan = pair_plan(9.0, 2.0);
        let cfg = tiny_cfg();
        let det = DetectionMatrix {
            rows: vec![vec![c(1.0, 0.0)]],
        };
        let map = decoupled_map();
        let grid = power_grid(&cfg, 20);
        let (eta, _) = grid_maxmin_ee_over(&det, &plan, &cfg, &map, &grid).unwrap();
        // With empty interference sets the joint max-min splits into
        // independent per-user scans over the same grid.
        let gains = GainTable::build(&det, &plan, &cfg);
        let mut expect = f64::INFINITY;
        for i in 0..2 {
            let mut best = f64::NEG_INFINITY;
            for &p in &grid {
                let r = rate(gains.own(0, i) * p / gains.noise[0], 1.0);
                if r >= cfg.r_min - 1e-12 {
                    best = best.max(energy_efficiency(r, total_power(&cfg, p)));
                }
            }
            expect = expect.min(best);
        }
        assert!((eta - expect).abs() <= 1e-12, "{eta} vs {expect}");
    }

    #[test]
    fn decoupled_rate_maxes_at_full_power() {
        // Equal gains make full power the unique max-min point; unequal
        // gains would leave the stronger user's power free to tie.
        let plan = pair_plan(9.0, 9.0);
        let cfg = tiny_cfg();
        let det = DetectionMatrix {
            rows: vec![vec![c(1.0, 0.0)]],
        };
        let (_, p) = grid_maxmin_rate(&det, &plan, &cfg, &decoupled_map(), 20).unwrap();
        assert_eq!(p.p[0], [cfg.p_max, cfg.p_max]);
    }

    #[test]
    fn lower_noise_never_lowers_the_rate_optimum() {
        let plan = pair_plan(9.0, 2.0);
        let det = DetectionMatrix {
            rows: vec![vec![c(1.0, 0.0)]],
        };
        let order = crate::noma::decoding_order(&plan);
        let map = InterferenceMap::zf_weak(&order, 1);
        let mut prev = f64::NEG_INFINITY;
        for noise in [1e-1, 1e-2, 1e-3, 1e-4] {
            let cfg = SystemConfig {
                noise_power: noise,
                ..tiny_cfg()
            };
            let (z, _) = grid_maxmin_rate(&det, &plan, &cfg, &map, 12).unwrap();
            assert!(z >= prev, "optimum fell from {prev} to {z} at noise {noise}");
            prev = z;
        }
    }

    /// Mutual interference with identical gains is symmetric under
    /// swapping the two users, so some optimal power pair lies within one
    /// grid step of the diagonal.
    #[test]
    fn symmetric_pair_lands_near_the_diagonal() {
        let plan = pair_plan(4.0, 4.0);
        let cfg = tiny_cfg();
        let det = DetectionMatrix {
            rows: vec![vec![c(1.0, 0.0)]],
        };
        let map = InterferenceMap::new(vec![[vec![(0, 1)], vec![(0, 0)]]], 1.0);
        let grid = power_grid(&cfg, 20);
        let (_, p) = grid_maxmin_rate_over(&det, &plan, &cfg, &map, &grid).unwrap();
        let gap = max_grid_gap(&grid);
        assert!(
            (p.p[0][0] - p.p[0][1]).abs() <= gap + 1e-12,
            "powers {:?} split by more than one step {gap}",
            p.p[0]
        );
    }

    #[test]
    fn refining_the_grid_never_decreases_the_optimum() {
        let plan = pair_plan(9.0, 2.0);
        let cfg = tiny_cfg();
        let det = DetectionMatrix {
            rows: vec![vec![c(1.0, 0.0)]],
        };
        let order = crate::noma::decoding_order(&plan);
        let map = InterferenceMap::zf_weak(&order, 1);
        let coarse = power_grid(&cfg, 10);
        let mut fine = coarse.clone();
        for w in coarse.windows(2) {
            fine.push((w[0] + w[1]) / 2.0);
        }
        let (eta_c, _) = grid_maxmin_ee_over(&det, &plan, &cfg, &map, &coarse).unwrap();
        let (eta_f, _) = grid_maxmin_ee_over(&det, &plan, &cfg, &map, &fine).unwrap();
        assert!(eta_f >= eta_c, "{eta_f} < {eta_c}");
    }

    #[test]
    fn result_ignores_grid_ordering() {
        let plan = pair_plan(9.0, 2.0);
        let cfg = tiny_cfg();
        let det = DetectionMatrix {
            rows: vec![vec![c(1.0, 0.0)]],
        };
        let order = crate::noma::decoding_order(&plan);
        let map = InterferenceMap::zf_weak(&order, 1);
        let grid = power_grid(&cfg, 12);
        let mut shuffled = grid.clone();
        shuffled.reverse();
        shuffled.rotate_left(3);
        let (a, pa) = grid_maxmin_ee_over(&det, &plan, &cfg, &map, &grid).unwrap();
        let (b, pb) = grid_maxmin_ee_over(&det, &plan, &cfg, &map, &shuffled).unwrap();
        assert_eq!(a, b);
        assert_eq!(pa.p, pb.p);
    }

    #[test]
    fn unreachable_rate_floor_is_infeasible() {
        let plan = pair_plan(9.0, 2.0);
        let cfg = SystemConfig {
            r_min: 50.0,
            ..tiny_cfg()
        };
        let det = DetectionMatrix {
            rows: vec![vec![c(1.0, 0.0)]],
        };
        let err = grid_maxmin_ee(&det, &plan, &cfg, &decoupled_map(), 8).unwrap_err();
        assert!(matches!(err, Error::Infeasible));
    }

    /// The gap bounds certify how much the exact optimum can exceed the
    /// grid optimum: a finer grid must close on the coarse value within
    /// the coarse grid's own bound.
    #[test]
    fn gap_bound_covers_grid_refinement_error() {
        let plan = pair_plan(9.0, 2.0);
        let cfg = tiny_cfg();
        let det = DetectionMatrix {
            rows: vec![vec![c(1.0, 0.0)]],
        };
        let order = crate::noma::decoding_order(&plan);
        let map = InterferenceMap::zf_weak(&order, 1);
        let gains = GainTable::build(&det, &plan, &cfg);
        let coarse = power_grid(&cfg, 8);
        let fine = power_grid(&cfg, 160);
        let (eta_c, _) = grid_maxmin_ee_over(&det, &plan, &cfg, &map, &coarse).unwrap();
        let (eta_f, _) = grid_maxmin_ee_over(&det, &plan, &cfg, &map, &fine).unwrap();
        let bound = ee_grid_gap_bound(&gains, &map, &cfg, &coarse);
        assert!(eta_f <= eta_c + bound, "{eta_f} > {eta_c} + {bound}");
        let (z_c, _) = grid_maxmin_rate_over(&det, &plan, &cfg, &map, &coarse).unwrap();
        let (z_f, _) = grid_maxmin_rate_over(&det, &plan, &cfg, &map, &fine).unwrap();
        let rbound = rate_grid_gap_bound(&gains, &map, &coarse);
        assert!(z_f <= z_c + rbound, "{z_f} > {z_c} + {rbound}");
    }
}
