use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AssignmentError, CostMatrix, LapSolver};
use crate::field_map::{FieldMap, Landmark, LandmarkClass};
use crate::geometry::Point2;
use crate::pose_estimation::fit_rigid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStrategy {
    /// One assignment problem per landmark class.
    Separate,
    /// One assignment problem over all landmarks, ignoring class.
    Identical,
    /// Run both and keep whichever leaves the smaller error.
    ParallelBest,
}

impl MatchStrategy {
    pub fn name(self) -> &'static str {
        match self {
            MatchStrategy::Separate => "separate",
            MatchStrategy::Identical => "identical",
            MatchStrategy::ParallelBest => "parallel_best",
        }
    }
}

impl fmt::Display for MatchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatchStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "separate" => Ok(MatchStrategy::Separate),
            "identical" => Ok(MatchStrategy::Identical),
            "parallel_best" | "parallel-best" | "best" => Ok(MatchStrategy::ParallelBest),
            other => Err(format!("unknown match strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub observation: usize,
    /// Index into [`FieldMap::landmarks`].
    pub landmark: usize,
    pub landmark_id: u32,
    /// Distance from the guessed world position to the landmark.
    pub distance: f64,
}

/// One-to-one observation→landmark correspondences.
///
/// `mean_error` and `max_error` are measured after the best rigid re-alignment
/// of the matched guess points onto their landmarks, so they report how well
/// the correspondence set can be explained by *some* pose rather than how far
/// the current guess is off. `raw_mean_error` is the distance at the guess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// Sorted by observation index.
    pub correspondences: Vec<Correspondence>,
    pub mean_error: f64,
    pub max_error: f64,
    pub raw_mean_error: f64,
    /// `Separate` or `Identical`; `ParallelBest` records whichever won.
    pub strategy_used: MatchStrategy,
    /// Classes that could not be matched within their own class and were
    /// pooled with the class-agnostic remainder.
    pub degraded_classes: Vec<LandmarkClass>,
}

impl Matching {
    pub(crate) fn from_correspondences(
        mut correspondences: Vec<Correspondence>,
        guess_point: impl Fn(usize) -> Point2,
        map: &FieldMap,
        strategy_used: MatchStrategy,
        degraded_classes: Vec<LandmarkClass>,
    ) -> Self {
        correspondences.sort_by_key(|c| c.observation);
        let n = correspondences.len().max(1) as f64;
        let raw_mean_error = correspondences.iter().map(|c| c.distance).sum::<f64>() / n;

        let src: Vec<Point2> = correspondences.iter().map(|c| guess_point(c.observation)).collect();
        let dst: Vec<Point2> = correspondences.iter().map(|c| map.landmarks()[c.landmark].position).collect();
        let aligned = fit_rigid(&src, &dst);
        let (sum, max) = src.iter().zip(&dst).fold((0.0, 0.0f64), |(s, m), (a, b)| {
            let d = aligned.transform_point(a).distance(b);
            (s + d, m.max(d))
        });

        Matching {
            correspondences,
            mean_error: sum / n,
            max_error: max,
            raw_mean_error,
            strategy_used,
            degraded_classes,
        }
    }

    /// `(observation, landmark id)` pairs in observation order.
    pub fn pairs(&self) -> Vec<(usize, u32)> {
        self.correspondences.iter().map(|c| (c.observation, c.landmark_id)).collect()
    }

    pub fn len(&self) -> usize {
        self.correspondences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correspondences.is_empty()
    }

    pub fn is_one_to_one(&self) -> bool {
        let mut obs: Vec<_> = self.correspondences.iter().map(|c| c.observation).collect();
        let mut lms: Vec<_> = self.correspondences.iter().map(|c| c.landmark).collect();
        obs.sort_unstable();
        lms.sort_unstable();
        obs.windows(2).all(|w| w[0] != w[1]) && lms.windows(2).all(|w| w[0] != w[1])
    }
}

/// `C[i][j] = |guess_i - landmark_j|`, zero-padded when there are more points than landmarks.
pub fn build_cost_matrix(guess_world_pts: &[Point2], candidates: &[Landmark]) -> Result<CostMatrix, AssignmentError> {
    if guess_world_pts.is_empty() || candidates.is_empty() {
        return Err(AssignmentError::Empty);
    }
    let data = guess_world_pts
        .iter()
        .flat_map(|p| candidates.iter().map(move |l| p.distance(&l.position)))
        .collect();
    CostMatrix::new(guess_world_pts.len(), candidates.len(), data)
}

/// Matches guessed world positions of classed observations to the map with
/// the rectangular shortest-augmenting-path solver.
pub fn match_landmarks(
    guess: &[(Point2, LandmarkClass)],
    map: &FieldMap,
    strategy: MatchStrategy,
) -> Result<Matching, AssignmentError> {
    match_landmarks_with(guess, map, strategy, LapSolver::ModifiedJonkerVolgenant)
}

pub fn match_landmarks_with(
    guess: &[(Point2, LandmarkClass)],
    map: &FieldMap,
    strategy: MatchStrategy,
    solver: LapSolver,
) -> Result<Matching, AssignmentError> {
    if guess.is_empty() {
        return Err(AssignmentError::Empty);
    }
    match strategy {
        MatchStrategy::Identical => Ok(match_identical(guess, map, solver)?),
        MatchStrategy::Separate => Ok(match_separate(guess, map, solver)?),
        MatchStrategy::ParallelBest => {
            let separate = match_separate(guess, map, solver)?;
            let identical = match_identical(guess, map, solver)?;
            // fewer matched observations loses; ties on error go to Separate
            let better_identical = identical.len() > separate.len()
                || (identical.len() == separate.len() && identical.mean_error < separate.mean_error);
            Ok(if better_identical { identical } else { separate })
        }
    }
}

fn match_identical(
    guess: &[(Point2, LandmarkClass)],
    map: &FieldMap,
    solver: LapSolver,
) -> Result<Matching, AssignmentError> {
    let obs: Vec<usize> = (0..guess.len()).collect();
    let all: Vec<usize> = (0..map.len()).collect();
    let corr = solve_subset(guess, &obs, map, &all, solver)?;
    Ok(Matching::from_correspondences(corr, |i| guess[i].0, map, MatchStrategy::Identical, Vec::new()))
}

fn match_separate(
    guess: &[(Point2, LandmarkClass)],
    map: &FieldMap,
    solver: LapSolver,
) -> Result<Matching, AssignmentError> {
    let mut corr = Vec::with_capacity(guess.len());
    let mut pooled = Vec::new();
    let mut degraded = Vec::new();
    let mut used = vec![false; map.len()];

    for class in LandmarkClass::ALL {
        let obs: Vec<usize> = (0..guess.len()).filter(|&i| guess[i].1 == class).collect();
        if obs.is_empty() {
            continue;
        }
        let candidates = map.indices_of_class(class);
        if candidates.len() < obs.len() {
            degraded.push(class);
            pooled.extend(obs);
            continue;
        }
        let matched = solve_subset(guess, &obs, map, candidates, solver)?;
        for c in &matched {
            used[c.landmark] = true;
        }
        corr.extend(matched);
    }

    if !pooled.is_empty() {
        pooled.sort_unstable();
        let free: Vec<usize> = (0..map.len()).filter(|&j| !used[j]).collect();
        if !free.is_empty() {
            corr.extend(solve_subset(guess, &pooled, map, &free, solver)?);
        }
    }

    Ok(Matching::from_correspondences(corr, |i| guess[i].0, map, MatchStrategy::Separate, degraded))
}

fn solve_subset(
    guess: &[(Point2, LandmarkClass)],
    obs: &[usize],
    map: &FieldMap,
    candidates: &[usize],
    solver: LapSolver,
) -> Result<Vec<Correspondence>, AssignmentError> {
    let lms = map.landmarks();
    let data = obs
        .iter()
        .flat_map(|&i| candidates.iter().map(move |&j| guess[i].0.distance(&lms[j].position)))
        .collect();
    let cost = CostMatrix::new(obs.len(), candidates.len(), data)?;
    let assignment = solver.solve(&cost)?;
    Ok(assignment
        .pairs
        .iter()
        .map(|&(r, c)| Correspondence {
            observation: obs[r],
            landmark: candidates[c],
            landmark_id: lms[candidates[c]].id,
            distance: cost.get(r, c),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_map::Landmark;
    use LandmarkClass::*;

    fn lm(id: u32, class: LandmarkClass, x: f64, y: f64) -> Landmark {
        Landmark { id, class, position: Point2::new(x, y) }
    }

    /// Every one-to-one assignment of observations to landmarks, optionally
    /// class-restricted, with its post-alignment mean error (test oracle).
    fn brute_force_best(guess: &[(Point2, LandmarkClass)], map: &FieldMap, same_class: bool) -> (Vec<(usize, u32)>, f64) {
        fn rec(
            i: usize,
            guess: &[(Point2, LandmarkClass)],
            map: &FieldMap,
            same_class: bool,
            used: &mut Vec<bool>,
            cur: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if i == guess.len() {
                out.push(cur.clone());
                return;
            }
            for j in 0..map.len() {
                if used[j] || (same_class && map.landmarks()[j].class != guess[i].1) {
                    continue;
                }
                used[j] = true;
                cur.push(j);
                rec(i + 1, guess, map, same_class, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
        let mut all = Vec::new();
        rec(0, guess, map, same_class, &mut vec![false; map.len()], &mut Vec::new(), &mut all);
        // Raw-cost optimum is what the LAP picks; report its aligned error.
        let raw = |a: &Vec<usize>| -> f64 {
            a.iter().enumerate().map(|(i, &j)| guess[i].0.distance(&map.landmarks()[j].position)).sum()
        };
        let best = all.iter().min_by(|a, b| raw(a).total_cmp(&raw(b))).unwrap();
        let src: Vec<Point2> = guess.iter().map(|g| g.0).collect();
        let dst: Vec<Point2> = best.iter().map(|&j| map.landmarks()[j].position).collect();
        let pose = fit_rigid(&src, &dst);
        let err = src.iter().zip(&dst).map(|(a, b)| pose.transform_point(a).distance(b)).sum::<f64>()
            / src.len() as f64;
        (best.iter().enumerate().map(|(i, &j)| (i, map.landmarks()[j].id)).collect(), err)
    }

    fn toy_map() -> FieldMap {
        FieldMap::new(
            vec![lm(0, Corner, 0.0, 0.0), lm(1, Cross, 1.0, 0.0), lm(2, Corner, 0.0, 3.0), lm(3, Cross, 1.0, 3.0)],
            14.0,
            9.0,
        )
        .unwrap()
    }

    #[test]
    fn exact_observation_matches_itself() {
        let map = toy_map();
        for s in [MatchStrategy::Separate, MatchStrategy::Identical, MatchStrategy::ParallelBest] {
            let m = match_landmarks(&[(Point2::new(0.0, 3.0), Corner)], &map, s).unwrap();
            assert_eq!(m.pairs(), vec![(0, 2)]);
            assert_eq!(m.mean_error, 0.0);
        }
    }

    #[test]
    fn identical_mismatch_resolved_by_class() {
        // Guess shifted by +0.6 m in x: the Corner guessed at (0.6, 3) lies
        // nearer the Cross at (1, 3) than its own landmark at (0, 3), so the
        // class-blind optimum pairs it with the wrong class.
        let map = toy_map();
        let shift = Point2::new(0.6, 0.0);
        let guess: Vec<_> = [(0.0, 0.0, Corner), (1.0, 0.0, Cross), (0.0, 3.0, Corner)]
            .iter()
            .map(|&(x, y, c)| (Point2::new(x, y) + shift, c))
            .collect();

        let (sep_pairs, sep_err) = brute_force_best(&guess, &map, true);
        let (id_pairs, id_err) = brute_force_best(&guess, &map, false);
        assert_eq!(sep_pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_ne!(id_pairs, sep_pairs);
        assert!(sep_err < 1e-12 && id_err > 0.1, "{sep_err} {id_err}");

        let sep = match_landmarks(&guess, &map, MatchStrategy::Separate).unwrap();
        let id = match_landmarks(&guess, &map, MatchStrategy::Identical).unwrap();
        let best = match_landmarks(&guess, &map, MatchStrategy::ParallelBest).unwrap();
        assert_eq!(sep.pairs(), sep_pairs);
        assert_eq!(id.pairs(), id_pairs);
        assert!((id.mean_error - id_err).abs() < 1e-12);
        assert!(sep.mean_error < id.mean_error);
        assert_eq!(best.pairs(), sep.pairs());
        assert_eq!(best.strategy_used, MatchStrategy::Separate);
    }

    #[test]
    fn misclassification_resolved_by_identical() {
        // Exact guess, but the observation of Corner 2 is labelled Cross.
        let map = toy_map();
        let guess =
            vec![(Point2::new(0.0, 0.0), Corner), (Point2::new(1.0, 0.0), Cross), (Point2::new(0.0, 3.0), Cross)];

        let (sep_pairs, sep_err) = brute_force_best(&guess, &map, true);
        let (id_pairs, id_err) = brute_force_best(&guess, &map, false);
        assert_eq!(id_pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_ne!(sep_pairs, id_pairs);
        assert!(id_err < 1e-12 && sep_err > 0.1);

        let sep = match_landmarks(&guess, &map, MatchStrategy::Separate).unwrap();
        let best = match_landmarks(&guess, &map, MatchStrategy::ParallelBest).unwrap();
        assert_eq!(sep.pairs(), sep_pairs);
        assert_eq!(best.pairs(), id_pairs);
        assert_eq!(best.strategy_used, MatchStrategy::Identical);
    }

    #[test]
    fn missing_class_degrades_to_pool() {
        let map = toy_map();
        let guess = vec![(Point2::new(0.1, 0.0), GoalPost), (Point2::new(1.0, 0.0), Cross)];
        let m = match_landmarks(&guess, &map, MatchStrategy::Separate).unwrap();
        assert_eq!(m.degraded_classes, vec![GoalPost]);
        assert_eq!(m.pairs(), vec![(0, 0), (1, 1)]);
        assert!(m.is_one_to_one());
    }

    #[test]
    fn more_observations_than_landmarks() {
        let map = toy_map();
        let guess: Vec<_> = (0..6).map(|i| (Point2::new(i as f64 * 0.2, 0.0), Corner)).collect();
        let m = match_landmarks(&guess, &map, MatchStrategy::Identical).unwrap();
        assert_eq!(m.len(), 4);
        assert!(m.is_one_to_one());
    }

    #[test]
    fn cost_matrix_cases() {
        let c = build_cost_matrix(&[Point2::ORIGIN], &[lm(0, Corner, 3.0, 4.0)]).unwrap();
        assert_eq!(c.data(), &[5.0]);
        let c = build_cost_matrix(
            &[Point2::ORIGIN, Point2::new(1.0, 0.0)],
            &[lm(0, Corner, 0.0, 0.0), lm(1, Corner, 1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(c.data(), &[0.0, 1.0, 1.0, 0.0]);
        let c = build_cost_matrix(
            &[Point2::ORIGIN, Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)],
            &[lm(0, Corner, 0.0, 0.0), lm(1, Corner, 1.0, 0.0)],
        )
        .unwrap();
        assert_eq!((c.rows(), c.cols(), c.real_cols()), (3, 3, 2));
        assert!((0..3).all(|r| c.get(r, 2) == 0.0));
        assert_eq!(build_cost_matrix(&[], &[lm(0, Corner, 0.0, 0.0)]), Err(AssignmentError::Empty));
        assert!(match_landmarks(&[], &toy_map(), MatchStrategy::Identical).is_err());
    }
}
