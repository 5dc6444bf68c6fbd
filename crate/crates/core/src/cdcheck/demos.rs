//! Counterexample demonstrations on the singular spaces: forced branching of
//! geodesic families out of the collapsed segment, non-existence of optimal
//! transport maps onto spread fibers, and the restriction search probing the
//! strict form of the entropy-convexity condition.

use serde::Serialize;

use super::CdError;
use crate::geometry::{
    dist_inf, forced_segment_witness, geodesic_refine, BranchingWitness, GeodesicFamily, Point2,
};
use crate::measure::{renyi_entropy, DiscreteMeasure, Grid, SpaceParams};
use crate::transport::{is_map_induced, solve_discrete_ot, CostKind, TransportPlan};

/// Cap on the exhaustive map-feasibility enumeration.
const ENUMERATION_CAP: u64 = 4_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct BranchingReport {
    pub witness: BranchingWitness,
    /// Largest spread of costs from one source across the target fiber;
    /// exactly zero when the fiber sits below the horizontal gap.
    pub cost_constancy_residual: f64,
    /// Sources split by the solver's optimal plan.
    pub split_sources: usize,
    /// Outcome of the exhaustive map-feasibility enumeration: `Some(true)`
    /// when no admissible plan is a map, so every optimal plan splits.
    pub every_plan_splits: Option<bool>,
    #[serde(skip)]
    pub family: GeodesicFamily,
    #[serde(skip)]
    pub plan: TransportPlan,
    #[serde(skip)]
    pub src_atoms: Vec<(Point2, f64)>,
    #[serde(skip)]
    pub dst_atoms: Vec<(Point2, f64)>,
}

fn singular_sources(
    grid: &Grid,
    range: (f64, f64),
    max_sources: usize,
) -> Result<Vec<Point2>, CdError> {
    let cols: Vec<usize> = (0..grid.nx)
        .filter(|&c| {
            let col = &grid.columns[c];
            col.singular && col.x >= range.0 && col.x <= range.1
        })
        .collect();
    if cols.len() < 2 {
        return Err(CdError::DemoPrecondition(format!(
            "need at least 2 collapsed columns in [{}, {}]",
            range.0, range.1
        )));
    }
    let n = cols.len().min(max_sources);
    let picked: Vec<Point2> = (0..n)
        .map(|i| {
            let idx = i * (cols.len() - 1) / (n - 1).max(1);
            Point2::new(grid.columns[cols[idx]].x, 0.0)
        })
        .collect();
    Ok(picked)
}

fn fiber_targets(
    params: &SpaceParams,
    grid: &Grid,
    dst_x: f64,
    n_targets: usize,
) -> Result<Vec<Point2>, CdError> {
    let col = grid
        .locate_col(dst_x)
        .ok_or_else(|| CdError::DemoPrecondition("target column outside the grid".into()))?;
    let c = &grid.columns[col];
    if c.singular {
        return Err(CdError::DemoPrecondition(
            "target column must have positive height".into(),
        ));
    }
    let n = n_targets.min(grid.nu).max(2);
    let height = params.height(c.x);
    Ok((0..n)
        .map(|i| {
            let u = (i as f64 + 0.5) / n as f64;
            Point2::new(c.x, u * height)
        })
        .collect())
}

/// Spread of squared costs across the fiber, per source; exact arithmetic
/// gives zero when `|dy| <= |dx|` everywhere.
fn cost_constancy(src: &[Point2], dst: &[Point2]) -> f64 {
    let mut worst: f64 = 0.0;
    for p in src {
        let base = CostKind::InfNormSq.eval(*p, dst[0]);
        for q in dst {
            worst = worst.max((CostKind::InfNormSq.eval(*p, *q) - base).abs());
        }
    }
    worst
}

/// Exhaustively enumerate source-to-target assignments and count those whose
/// pushforward matches the target masses. `None` when the space is too big.
fn count_feasible_maps(src_masses: &[f64], dst_masses: &[f64]) -> Option<usize> {
    let m = src_masses.len();
    let n = dst_masses.len();
    let total = (n as u64).checked_pow(m as u32)?;
    if total > ENUMERATION_CAP {
        return None;
    }
    let mut feasible = 0;
    let mut assign = vec![0usize; m];
    loop {
        let mut pushed = vec![0.0; n];
        for (i, &j) in assign.iter().enumerate() {
            pushed[j] += src_masses[i];
        }
        if pushed
            .iter()
            .zip(dst_masses)
            .all(|(a, b)| (a - b).abs() <= 1e-12)
        {
            feasible += 1;
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == m {
                return Some(feasible);
            }
            assign[k] += 1;
            if assign[k] < n {
                break;
            }
            assign[k] = 0;
            k += 1;
        }
    }
}

/// Transport a uniform measure on the collapsed segment onto a spread fiber,
/// exhibit a forced-segment branching witness in the optimal plan, and
/// certify that every admissible (hence every optimal) plan splits.
pub fn branching_demo(
    params: &SpaceParams,
    grid: &Grid,
    src_range: (f64, f64),
    dst_x: f64,
    max_sources: usize,
    n_targets: usize,
    depth: u32,
) -> Result<BranchingReport, CdError> {
    let sources = singular_sources(grid, src_range, max_sources)?;
    let targets = fiber_targets(params, grid, dst_x, n_targets)?;

    let gap = sources
        .iter()
        .map(|p| (p.x - dst_x).abs())
        .fold(f64::INFINITY, f64::min);
    let height = params.height(targets[0].x);
    if height >= gap {
        return Err(CdError::FiberTallerThanGap { height, gap });
    }

    let m = sources.len();
    let n = targets.len();
    let src_atoms: Vec<(Point2, f64)> = sources.iter().map(|&p| (p, 1.0 / m as f64)).collect();
    let dst_atoms: Vec<(Point2, f64)> = targets.iter().map(|&p| (p, 1.0 / n as f64)).collect();

    let residual = cost_constancy(&sources, &targets);
    let plan = solve_discrete_ot(&src_atoms, &dst_atoms, CostKind::InfNormSq)?;
    let by_src = plan.by_source(m);
    let split_sources = by_src
        .iter()
        .filter(|t| t.iter().filter(|e| e.1 > 1e-12).count() >= 2)
        .count();
    let split = by_src
        .iter()
        .position(|t| t.iter().filter(|e| e.1 > 1e-12).count() >= 2)
        .ok_or(CdError::NoSplitSource)?;
    let mut split_targets: Vec<usize> = by_src[split]
        .iter()
        .filter(|e| e.1 > 1e-12)
        .map(|e| e.0)
        .collect();
    split_targets.sort_unstable();

    let witness = forced_segment_witness(
        &params.profile,
        sources[split],
        targets[split_targets[0]],
        targets[split_targets[1]],
        depth,
    )?;

    let every_plan_splits = count_feasible_maps(
        &vec![1.0 / m as f64; m],
        &vec![1.0 / n as f64; n],
    )
    .map(|feasible| feasible == 0);

    let mut curves = Vec::with_capacity(plan.entries.len());
    let mut weights = Vec::with_capacity(plan.entries.len());
    for &(i, j, q) in &plan.entries {
        curves.push(geodesic_refine(
            src_atoms[i].0,
            dst_atoms[j].0,
            &params.profile,
            depth,
        )?);
        weights.push(q);
    }

    Ok(BranchingReport {
        witness,
        cost_constancy_residual: residual,
        split_sources,
        every_plan_splits,
        family: GeodesicFamily::new(curves, weights),
        plan,
        src_atoms,
        dst_atoms,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NoMapReport {
    /// Exact spread of costs over the fiber; zero certifies that every
    /// admissible plan is optimal.
    pub cost_constancy_residual: f64,
    /// Whether the solver's optimal plan happens to be map-induced.
    pub solver_plan_is_map: bool,
    pub maps_enumerated: u64,
    pub feasible_maps: usize,
    /// No admissible plan is induced by a map, hence no optimal one is.
    pub no_optimal_map: bool,
}

/// Sources on the collapsed segment, targets spread on a short fiber: every
/// admissible plan has the same cost, and no assignment of sources to
/// targets matches the marginals, so no optimal plan is induced by a map.
pub fn no_map_demo(
    params: &SpaceParams,
    grid: &Grid,
    src_xs: &[f64],
    src_masses: &[f64],
    dst_x: f64,
    n_targets: usize,
) -> Result<NoMapReport, CdError> {
    if src_xs.len() != src_masses.len() || src_xs.is_empty() {
        return Err(CdError::DemoPrecondition(
            "sources and masses must align".into(),
        ));
    }
    let mut sources = Vec::with_capacity(src_xs.len());
    for &x in src_xs {
        let col = grid
            .locate_col(x)
            .ok_or_else(|| CdError::DemoPrecondition("source outside grid".into()))?;
        if !grid.columns[col].singular {
            return Err(CdError::DemoPrecondition(
                "sources must lie on collapsed columns".into(),
            ));
        }
        sources.push(Point2::new(grid.columns[col].x, 0.0));
    }
    let total: f64 = src_masses.iter().sum();
    let src_masses: Vec<f64> = src_masses.iter().map(|m| m / total).collect();

    let targets = fiber_targets(params, grid, dst_x, n_targets)?;
    let height = params.height(targets[0].x);
    let gap = sources
        .iter()
        .map(|p| (p.x - dst_x).abs())
        .fold(f64::INFINITY, f64::min);
    if height >= gap {
        return Err(CdError::FiberTallerThanGap { height, gap });
    }

    let residual = cost_constancy(&sources, &targets);

    let n = targets.len();
    let dst_masses = vec![1.0 / n as f64; n];
    let src_atoms: Vec<(Point2, f64)> = sources
        .iter()
        .zip(&src_masses)
        .map(|(&p, &q)| (p, q))
        .collect();
    let dst_atoms: Vec<(Point2, f64)> = targets
        .iter()
        .zip(&dst_masses)
        .map(|(&p, &q)| (p, q))
        .collect();
    let plan = solve_discrete_ot(&src_atoms, &dst_atoms, CostKind::InfNormSq)?;
    let verdict = is_map_induced(&plan, sources.len(), 1e-9);

    let feasible = count_feasible_maps(&src_masses, &dst_masses).ok_or_else(|| {
        CdError::DemoPrecondition("instance too large for exhaustive enumeration".into())
    })?;
    let maps_enumerated = (n as u64).pow(sources.len() as u32);

    Ok(NoMapReport {
        cost_constancy_residual: residual,
        solver_plan_is_map: verdict.is_map,
        maps_enumerated,
        feasible_maps: feasible,
        no_optimal_map: residual == 0.0 && feasible == 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Restriction {
    /// Keep the whole family (density one).
    All,
    /// Curves ending in the upper half of the target fiber.
    UpperEndpoint,
    /// Curves ending in the lower half of the target fiber.
    LowerEndpoint,
    /// Seeded randomized probes: single-target-per-source selections and
    /// random subfamilies. Widens the indicator dictionary where the named
    /// half-space restrictions are too coarse.
    RandomProbes { count: usize },
}

impl Restriction {
    pub fn label(self) -> &'static str {
        match self {
            Restriction::All => "all",
            Restriction::UpperEndpoint => "upper-endpoint",
            Restriction::LowerEndpoint => "lower-endpoint",
            Restriction::RandomProbes { .. } => "random-probes",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RestrictionOutcome {
    pub name: String,
    pub curves: usize,
    /// Fewer than two distinct curves survive: entropy comparisons collapse.
    pub degenerate: bool,
    /// Dyadic triple `(a, b, c)` attaining the worst convexity slack.
    pub triple: (f64, f64, f64),
    pub entropy_left: f64,
    pub entropy_mid: f64,
    pub entropy_right: f64,
    /// `S(mid) - average`: positive beyond tolerance is a convexity
    /// violation.
    pub violation_slack: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StrictSearchReport {
    pub n_prime: f64,
    pub tol: f64,
    pub outcomes: Vec<RestrictionOutcome>,
    /// Index of the strongest non-degenerate violation candidate.
    pub best: Option<usize>,
}

impl StrictSearchReport {
    pub fn violation_found(&self) -> bool {
        self.best
            .map(|i| self.outcomes[i].violated)
            .unwrap_or(false)
    }
}

fn deposit_at_time(
    family: &GeodesicFamily,
    weights: &[f64],
    t: f64,
    grid: &Grid,
) -> Result<DiscreteMeasure, CdError> {
    let kept_weight: f64 = weights.iter().sum();
    let mut rho = vec![0.0; grid.cells.len()];
    for (curve, &w) in family.curves.iter().zip(weights) {
        if w <= 0.0 {
            continue;
        }
        let p = curve
            .at_time(t)
            .ok_or_else(|| CdError::DemoPrecondition(format!("curve not sampled at t = {t}")))?;
        let idx = grid
            .locate(p)
            .ok_or_else(|| CdError::DemoPrecondition("curve point left the grid".into()))?;
        rho[idx] += w / kept_weight / grid.cells[idx].weight;
    }
    Ok(DiscreteMeasure { rho })
}

/// Dyadic comparison triples probed along each restricted family.
const TRIPLES: [(f64, f64, f64); 4] = [
    (0.0, 0.5, 1.0),
    (0.0, 0.25, 0.5),
    (0.25, 0.5, 0.75),
    (0.5, 0.75, 1.0),
];

fn evaluate_weighting(
    name: String,
    grid: &Grid,
    family: &GeodesicFamily,
    weights: &[f64],
    n_prime: f64,
    tol: f64,
) -> Result<RestrictionOutcome, CdError> {
    let kept = weights.iter().filter(|w| **w > 0.0).count();
    if kept < 2 {
        return Ok(RestrictionOutcome {
            name,
            curves: kept,
            degenerate: true,
            triple: (0.0, 0.5, 1.0),
            entropy_left: f64::NAN,
            entropy_mid: f64::NAN,
            entropy_right: f64::NAN,
            violation_slack: 0.0,
            violated: false,
        });
    }
    let mut worst = f64::NEG_INFINITY;
    let mut at = TRIPLES[0];
    let mut entropies = (f64::NAN, f64::NAN, f64::NAN);
    for &(a, b, c) in &TRIPLES {
        let sa = renyi_entropy(&deposit_at_time(family, weights, a, grid)?, grid, n_prime)?;
        let sb = renyi_entropy(&deposit_at_time(family, weights, b, grid)?, grid, n_prime)?;
        let sc = renyi_entropy(&deposit_at_time(family, weights, c, grid)?, grid, n_prime)?;
        let slack = sb - 0.5 * (sa + sc);
        if slack > worst {
            worst = slack;
            at = (a, b, c);
            entropies = (sa, sb, sc);
        }
    }
    Ok(RestrictionOutcome {
        name,
        curves: kept,
        degenerate: false,
        triple: at,
        entropy_left: entropies.0,
        entropy_mid: entropies.1,
        entropy_right: entropies.2,
        violation_slack: worst,
        violated: worst > tol,
    })
}

/// Probe the strict form of the condition: re-weight the geodesic family by
/// restrictions from the dictionary, evaluate the entropy along dyadic
/// triples of the restricted curves, and report the largest convexity
/// violation found. Evidence-grade: a found violation is a witness, an empty
/// search is inconclusive.
pub fn strict_cd_restriction_search(
    grid: &Grid,
    family: &GeodesicFamily,
    restrictions: &[Restriction],
    n_prime: f64,
    tol: f64,
    seed: u64,
) -> Result<StrictSearchReport, CdError> {
    let endpoints: Vec<Point2> = family
        .curves
        .iter()
        .map(|c| *c.points.last().unwrap())
        .collect();
    let starts: Vec<Point2> = family.curves.iter().map(|c| c.points[0]).collect();
    let y_min = endpoints.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let y_max = endpoints
        .iter()
        .map(|p| p.y)
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = 0.5 * (y_min + y_max);

    let mut outcomes = Vec::new();
    for &r in restrictions {
        match r {
            Restriction::All | Restriction::UpperEndpoint | Restriction::LowerEndpoint => {
                let weights: Vec<f64> = family
                    .weights
                    .iter()
                    .zip(&endpoints)
                    .map(|(&w, p)| match r {
                        Restriction::All => w,
                        Restriction::UpperEndpoint => {
                            if p.y >= threshold {
                                w
                            } else {
                                0.0
                            }
                        }
                        _ => {
                            if p.y < threshold {
                                w
                            } else {
                                0.0
                            }
                        }
                    })
                    .collect();
                outcomes.push(evaluate_weighting(
                    r.label().to_string(),
                    grid,
                    family,
                    &weights,
                    n_prime,
                    tol,
                )?);
            }
            Restriction::RandomProbes { count } => {
                use rand::Rng;
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                // group curves by their starting point
                let mut groups: Vec<Vec<usize>> = Vec::new();
                for (i, s) in starts.iter().enumerate() {
                    match groups
                        .iter_mut()
                        .find(|g| dist_inf(starts[g[0]], *s) < 1e-12)
                    {
                        Some(g) => g.push(i),
                        None => groups.push(vec![i]),
                    }
                }
                let mut best: Option<RestrictionOutcome> = None;
                for probe in 0..count {
                    let mut weights = vec![0.0; family.curves.len()];
                    if probe % 2 == 0 {
                        // one curve per starting point
                        for g in &groups {
                            let pick = g[rng.gen_range(0..g.len())];
                            weights[pick] = family.weights[pick];
                        }
                    } else {
                        // random subfamily of at least two curves
                        loop {
                            for (i, w) in weights.iter_mut().enumerate() {
                                *w = if rng.gen_bool(0.5) {
                                    family.weights[i]
                                } else {
                                    0.0
                                };
                            }
                            if weights.iter().filter(|w| **w > 0.0).count() >= 2 {
                                break;
                            }
                        }
                    }
                    let outcome = evaluate_weighting(
                        format!("random-probe-{probe}"),
                        grid,
                        family,
                        &weights,
                        n_prime,
                        tol,
                    )?;
                    let replace = match &best {
                        None => true,
                        Some(b) => outcome.violation_slack > b.violation_slack,
                    };
                    if replace && !outcome.degenerate {
                        best = Some(outcome);
                    }
                }
                if let Some(b) = best {
                    outcomes.push(b);
                }
            }
        }
    }
    let best = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| !o.degenerate)
        .max_by(|a, b| {
            a.1.violation_slack
                .partial_cmp(&b.1.violation_slack)
                .unwrap()
        })
        .map(|(i, _)| i);
    Ok(StrictSearchReport {
        n_prime,
        tol,
        outcomes,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use crate::measure::build_grid;
    use crate::profiles::ProfileFn;

    const K: f64 = defaults::PROFILE_SCALE;

    fn singular_space() -> SpaceParams {
        SpaceParams::compact(
            ProfileFn::preset("ramp-smoothed", K).unwrap(),
            K,
            defaults::CONCENTRATION,
            true,
        )
    }

    #[test]
    fn branching_on_singular_strip() {
        let params = singular_space();
        let grid = build_grid(&params, 64, 8).unwrap();
        let rep = branching_demo(&params, &grid, (-0.6, -0.4), 0.5, 5, 8, 7).unwrap();
        assert_eq!(rep.cost_constancy_residual, 0.0);
        assert!(rep.split_sources >= 1);
        assert_eq!(rep.every_plan_splits, Some(true));
        assert!(rep.witness.common_segment_defect <= 1e-10);
        assert!(rep.witness.endpoint_separation > 0.0);
        assert!((rep.family.total_weight() - 1.0).abs() < 1e-9);
        // every family curve is constant-speed within the wobble budget
        assert!(rep.family.speed_defect() <= 10.0 * K);
    }

    #[test]
    fn branching_on_wedge_space() {
        let params = SpaceParams::wedge(K, defaults::CONCENTRATION, 4.0);
        let grid = build_grid(&params, 256, 8).unwrap();
        let rep = branching_demo(&params, &grid, (-0.6, -0.4), 0.5, 5, 8, 7).unwrap();
        assert_eq!(rep.cost_constancy_residual, 0.0);
        assert_eq!(rep.every_plan_splits, Some(true));
        assert!(rep.witness.t_star > 0.3 && rep.witness.t_star < 0.7);
    }

    #[test]
    fn no_map_single_source() {
        let params = singular_space();
        let grid = build_grid(&params, 64, 8).unwrap();
        let rep = no_map_demo(&params, &grid, &[-0.5], &[1.0], 0.5, 2).unwrap();
        assert_eq!(rep.cost_constancy_residual, 0.0);
        assert!(!rep.solver_plan_is_map);
        assert_eq!(rep.feasible_maps, 0);
        assert!(rep.no_optimal_map);
    }

    #[test]
    fn no_map_four_sources_eight_targets() {
        let params = singular_space();
        let grid = build_grid(&params, 64, 8).unwrap();
        let rep = no_map_demo(
            &params,
            &grid,
            &[-0.7, -0.55, -0.4, -0.25],
            &[0.3, 0.3, 0.2, 0.2],
            0.5,
            8,
        )
        .unwrap();
        assert_eq!(rep.cost_constancy_residual, 0.0);
        assert_eq!(rep.maps_enumerated, 4096);
        assert_eq!(rep.feasible_maps, 0);
        assert!(rep.no_optimal_map);
    }

    #[test]
    fn strict_search_reports_outcomes_and_finds_violation() {
        let params = singular_space();
        let grid = build_grid(&params, 64, 8).unwrap();
        let rep = branching_demo(&params, &grid, (-0.6, -0.4), 0.5, 5, 8, 7).unwrap();
        let search = strict_cd_restriction_search(
            &grid,
            &rep.family,
            &[
                Restriction::All,
                Restriction::UpperEndpoint,
                Restriction::LowerEndpoint,
                Restriction::RandomProbes { count: 200 },
            ],
            defaults::N_PRIME,
            1e-6,
            7,
        )
        .unwrap();
        assert_eq!(search.outcomes.len(), 4);
        assert!(search.best.is_some());
        for o in &search.outcomes {
            assert!(o.degenerate || o.violation_slack.is_finite());
        }
        // the widened dictionary finds a genuine convexity violation on this
        // forced-branching family
        assert!(
            search.violation_found(),
            "no violation found: best slack {:?}",
            search.best.map(|i| search.outcomes[i].violation_slack)
        );
    }

    #[test]
    fn strict_search_degenerate_restriction() {
        // a single source with two targets: the upper-endpoint restriction
        // keeps one curve, which is degenerate for the comparison
        let params = singular_space();
        let grid = build_grid(&params, 64, 8).unwrap();
        let rep = branching_demo(&params, &grid, (-0.55, -0.45), 0.5, 2, 2, 6);
        // this geometry may keep two sources; build a 2-curve family by hand
        let _ = rep;
        let p = crate::geometry::Point2::new(grid.columns[grid.locate_col(-0.5).unwrap()].x, 0.0);
        let col = grid.locate_col(0.5).unwrap();
        let h = params.height(grid.columns[col].x);
        let q_low = crate::geometry::Point2::new(grid.columns[col].x, 0.1 * h);
        let q_high = crate::geometry::Point2::new(grid.columns[col].x, 0.9 * h);
        let c1 = geodesic_refine(p, q_low, &params.profile, 5).unwrap();
        let c2 = geodesic_refine(p, q_high, &params.profile, 5).unwrap();
        let family = GeodesicFamily::new(vec![c1, c2], vec![0.5, 0.5]);
        let search = strict_cd_restriction_search(
            &grid,
            &family,
            &[Restriction::UpperEndpoint],
            defaults::N_PRIME,
            1e-6,
            0,
        )
        .unwrap();
        assert!(search.outcomes[0].degenerate);
        assert!(!search.violation_found());
    }
}
