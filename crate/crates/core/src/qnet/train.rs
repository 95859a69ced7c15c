//! Rewards, discounted targets, experience replay and the training loop.

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::network::{forward_batch, init_network, loss_and_gradients, QNetworkParams, DEFAULT_HIDDEN};
use super::QNetError;
use crate::concept::{Concept, UnknownName};
use crate::embeddings::{EmbeddingTable, StateMatrix};
use crate::heuristics::{accuracy_celoe, f_measure, heuristic_celoe, HeuristicParams, LearningProblem};
use crate::kb::{IndividualSet, KnowledgeBase};
use crate::refinement::{refine_bounded, RefinementConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub update_every: usize,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_reward: f64,
    pub replay_capacity: usize,
    pub refinement_max_length: usize,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            episodes: 100,
            steps_per_episode: 10,
            update_every: 5,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_decay: 0.01,
            epsilon_min: 0.01,
            learning_rate: 0.01,
            batch_size: 512,
            max_reward: 10.0,
            replay_capacity: 8192,
            refinement_max_length: 12,
            hidden: DEFAULT_HIDDEN,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    fn validate(&self) -> Result<(), QNetError> {
        let fail = |m: &str| Err(QNetError::InvalidConfig(m.into()));
        if self.episodes == 0 || self.steps_per_episode == 0 || self.update_every == 0 {
            return fail("episodes, steps per episode and update interval must be positive");
        }
        if self.batch_size == 0 || self.replay_capacity == 0 || self.refinement_max_length == 0 || self.hidden == 0 {
            return fail("batch size, replay capacity, refinement length and hidden width must be positive");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1)");
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.epsilon_start) || !unit.contains(&self.epsilon_min) || self.epsilon_decay < 0.0 {
            return fail("epsilon values must lie in [0, 1] and decay must be non-negative");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || !self.max_reward.is_finite() {
            return fail("learning rate must be positive and max reward finite");
        }
        Ok(())
    }
}

/// Reward for moving from a concept with instances `parent` to one with
/// instances `child`: `max_reward` at a goal, otherwise the CELOE heuristic.
pub fn reward_from_sets(
    lp: &LearningProblem,
    all: &IndividualSet,
    parent: &IndividualSet,
    child: &IndividualSet,
    child_length: usize,
    params: &HeuristicParams,
    max_reward: f64,
) -> f64 {
    if f_measure(lp, child) == 1.0 {
        return max_reward;
    }
    let acc_parent = accuracy_celoe(lp, parent, all, params.t);
    let acc_child = accuracy_celoe(lp, child, all, params.t);
    heuristic_celoe(acc_parent, acc_child, child_length, params)
}

pub fn reward(
    kb: &KnowledgeBase,
    lp: &LearningProblem,
    parent: &Concept,
    child: &Concept,
    params: &HeuristicParams,
    max_reward: f64,
) -> Result<f64, UnknownName> {
    let parent_set = kb.retrieve(parent)?;
    let child_set = kb.retrieve(child)?;
    Ok(reward_from_sets(lp, &kb.all_individuals(), &parent_set, &child_set, child.length(), params, max_reward))
}

/// Discounted return from every position of a reward sequence:
/// `y[i] = r[i] + gamma * y[i + 1]`.
pub fn discounted_targets(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut targets = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (y, r) in targets.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *y = acc;
    }
    targets
}

/// Bounded FIFO of `(state, target)` pairs.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    entries: VecDeque<(StateMatrix, f64)>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer { entries: VecDeque::with_capacity(capacity.min(1 << 16)), capacity }
    }

    pub fn push(&mut self, state: StateMatrix, target: f64) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((state, target));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &(StateMatrix, f64)> + '_ {
        self.entries.iter()
    }

    /// Up to `size` distinct entries drawn uniformly, in draw order.
    pub fn sample(&self, size: usize, rng: &mut impl Rng) -> Vec<(StateMatrix, f64)> {
        let size = size.min(self.entries.len());
        index::sample(rng, self.entries.len(), size).into_iter().map(|i| self.entries[i].clone()).collect()
    }
}

/// One step of an episode.
#[derive(Debug, Clone)]
pub struct Transition {
    pub parent: Concept,
    pub child: Concept,
    pub parent_set: Arc<IndividualSet>,
    pub child_set: Arc<IndividualSet>,
    pub reward: f64,
    pub target: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub problem: usize,
    pub epsilon: f64,
    pub transitions: Vec<Transition>,
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRecord {
    /// 1-based episode after which the update ran.
    pub episode: usize,
    /// Batch loss before the parameter update.
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub params: QNetworkParams,
    pub updates: Vec<UpdateRecord>,
    pub episodes: Vec<EpisodeRecord>,
    pub replay: ReplayBuffer,
}

struct ProblemView<'a> {
    lp: &'a LearningProblem,
    pos_mean: Vec<f64>,
    neg_mean: Vec<f64>,
}

/// Epsilon-greedy deep Q-learning over refinement trajectories from `⊤`.
///
/// Each episode walks `steps_per_episode` refinements for one learning
/// problem (problems are cycled in order), stopping early at a goal or when
/// no unvisited refinement remains. The episode's discounted returns become
/// regression targets in the replay buffer; every `update_every` episodes a
/// minibatch is drawn and one Adam step taken.
pub fn train(
    kb: &KnowledgeBase,
    table: &EmbeddingTable,
    lps: &[LearningProblem],
    cfg: &TrainingConfig,
    heuristic: &HeuristicParams,
) -> Result<TrainReport, QNetError> {
    cfg.validate()?;
    if lps.is_empty() {
        return Err(QNetError::NoProblems);
    }
    if table.len() != kb.num_individuals() {
        return Err(QNetError::ShapeMismatch {
            what: "embedding table".into(),
            expected: vec![kb.num_individuals()],
            found: vec![table.len()],
        });
    }
    let sig = kb.signature();
    let all = kb.all_individuals();
    let refine_cfg = RefinementConfig { max_length: cfg.refinement_max_length, dedup: true };
    let problems: Vec<ProblemView<'_>> = lps
        .iter()
        .map(|lp| ProblemView { lp, pos_mean: table.mean(lp.positives()), neg_mean: table.mean(lp.negatives()) })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init_network(table.dimension(), cfg.hidden, cfg.seed)?;
    let mut adam = AdamState::new(&params);
    let mut replay = ReplayBuffer::new(cfg.replay_capacity);
    let mut epsilon = cfg.epsilon_start;
    let mut updates = Vec::new();
    let mut episodes = Vec::with_capacity(cfg.episodes);

    for episode in 0..cfg.episodes {
        let problem_index = episode % problems.len();
        let problem = &problems[problem_index];
        let mut current = Concept::Top;
        let mut current_set = kb.retrieve(&current)?;
        let mut visited = HashSet::from([current.canonical_key()]);
        let mut transitions: Vec<Transition> = Vec::new();
        let mut states = Vec::new();
        let mut truncated = false;

        for _ in 0..cfg.steps_per_episode {
            let mut children = Vec::new();
            for c in refine_bounded(sig, &current, &refine_cfg)? {
                if !visited.contains(&c.canonical_key()) {
                    let set = kb.retrieve(&c)?;
                    children.push((c, set));
                }
            }
            if children.is_empty() {
                log::debug!("episode {}: no admissible refinement of {current}", episode + 1);
                truncated = true;
                break;
            }
            let parent_mean = table.mean(&current_set);
            let state_of = |set: &IndividualSet| {
                StateMatrix::from_rows([&parent_mean, &table.mean(set), &problem.pos_mean, &problem.neg_mean])
            };
            let explore = rng.random::<f64>() < epsilon;
            let (choice, state) = if explore {
                let i = rng.random_range(0..children.len());
                (i, state_of(&children[i].1))
            } else {
                let candidates: Vec<StateMatrix> = children.iter().map(|(_, set)| state_of(set)).collect();
                let q = forward_batch(&params, &candidates)?;
                let best = q.iter().enumerate().fold(0, |best, (i, v)| if *v > q[best] { i } else { best });
                (best, candidates.into_iter().nth(best).expect("argmax in range"))
            };
            let (child, child_set) = children.swap_remove(choice);
            let r =
                reward_from_sets(problem.lp, &all, &current_set, &child_set, child.length(), heuristic, cfg.max_reward);
            let goal = f_measure(problem.lp, &child_set) == 1.0;
            visited.insert(child.canonical_key());
            transitions.push(Transition {
                parent: current.clone(),
                child: child.clone(),
                parent_set: current_set.clone(),
                child_set: child_set.clone(),
                reward: r,
                target: None,
            });
            states.push(state);
            current = child;
            current_set = child_set;
            if goal {
                break;
            }
        }

        let rewards: Vec<f64> = transitions.iter().map(|t| t.reward).collect();
        let targets = discounted_targets(&rewards, cfg.gamma);
        for ((t, y), state) in transitions.iter_mut().zip(&targets).zip(states) {
            t.target = Some(*y);
            replay.push(state, *y);
        }
        episodes.push(EpisodeRecord { problem: problem_index, epsilon, transitions, truncated });
        epsilon = (epsilon - cfg.epsilon_decay).max(cfg.epsilon_min);

        if (episode + 1) % cfg.update_every == 0 && !replay.is_empty() {
            let batch = replay.sample(cfg.batch_size, &mut rng);
            let (loss, grads) = loss_and_gradients(&params, &batch)?;
            adam_step(&mut params, &grads, &mut adam, cfg.learning_rate)?;
            log::debug!("episode {}: loss {loss}", episode + 1);
            updates.push(UpdateRecord { episode: episode + 1, loss });
        }
    }

    Ok(TrainReport { params, updates, episodes, replay })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::generate_embeddings;
    use crate::kb::parse_kb;
    use crate::syntax::parse_concept;

    #[test]
    fn discounted_targets_examples() {
        assert_eq!(discounted_targets(&[1.0, 1.0, 1.0], 0.5), vec![1.75, 1.5, 1.0]);
        assert_eq!(discounted_targets(&[0.3, -2.0, 4.0], 0.0), vec![0.3, -2.0, 4.0]);
        assert!(discounted_targets(&[], 0.9).is_empty());
    }

    #[test]
    fn replay_buffer_is_bounded_fifo() {
        let mut buffer = ReplayBuffer::new(3);
        let m = StateMatrix::from_rows([&[0.0; 2], &[0.0; 2], &[0.0; 2], &[0.0; 2]]);
        for y in 0..5 {
            buffer.push(m.clone(), y as f64);
            assert!(buffer.len() <= 3);
        }
        let targets: Vec<f64> = buffer.iter().map(|(_, y)| *y).collect();
        assert_eq!(targets, vec![2.0, 3.0, 4.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sample = buffer.sample(10, &mut rng);
        assert_eq!(sample.len(), 3);
    }

    fn family() -> (KnowledgeBase, LearningProblem) {
        let kb = parse_kb("type a Male\ntype b Female\nrole a hasChild c\nrole b hasChild c\n").unwrap();
        let lp =
            LearningProblem::new(kb.individual_set(["a", "b"]).unwrap(), kb.individual_set(["c"]).unwrap()).unwrap();
        (kb, lp)
    }

    #[test]
    fn rewards() {
        let (kb, lp) = family();
        let p = HeuristicParams::default();
        let top = Concept::Top;
        let goal = parse_concept("hasChild some Thing").unwrap();
        assert_eq!(reward(&kb, &lp, &top, &goal, &p, 10.0).unwrap(), 10.0);
        let male = parse_concept("Male").unwrap();
        let acc = accuracy_celoe(&lp, &kb.retrieve(&male).unwrap(), &kb.all_individuals(), p.t);
        let r = reward(&kb, &lp, &male, &male, &p, 10.0).unwrap();
        assert!((r - (acc - 0.02)).abs() < 1e-12);
    }

    #[test]
    fn single_step_episode() {
        let (kb, lp) = family();
        let table = generate_embeddings(&kb, 4, 0, 0.1).unwrap();
        let cfg = TrainingConfig { episodes: 1, steps_per_episode: 1, hidden: 8, ..Default::default() };
        let report = train(&kb, &table, &[lp], &cfg, &HeuristicParams::default()).unwrap();
        assert_eq!(report.replay.len(), 1);
        let t = &report.episodes[0].transitions[0];
        assert_eq!(t.target, Some(t.reward));
        assert_eq!(report.replay.iter().next().unwrap().1, t.reward);
        assert!(report.updates.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let (kb, lp) = family();
        let table = generate_embeddings(&kb, 4, 0, 0.1).unwrap();
        let cfg = TrainingConfig { episodes: 12, hidden: 8, batch_size: 16, seed: 3, ..Default::default() };
        let a = train(&kb, &table, std::slice::from_ref(&lp), &cfg, &HeuristicParams::default()).unwrap();
        let b = train(&kb, &table, &[lp], &cfg, &HeuristicParams::default()).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.updates, b.updates);
        assert_eq!(a.updates.len(), 2);
    }

    #[test]
    fn epsilon_schedule_and_bellman_targets() {
        let (kb, lp) = family();
        let table = generate_embeddings(&kb, 4, 0, 0.1).unwrap();
        let cfg = TrainingConfig { episodes: 30, hidden: 8, epsilon_decay: 0.05, gamma: 0.9, ..Default::default() };
        let report = train(&kb, &table, &[lp], &cfg, &HeuristicParams::default()).unwrap();
        let eps: Vec<f64> = report.episodes.iter().map(|e| e.epsilon).collect();
        assert!(eps.windows(2).all(|w| w[1] <= w[0]));
        assert!(eps.iter().all(|&e| e >= 0.01));
        for episode in &report.episodes {
            let ts = &episode.transitions;
            for i in 0..ts.len() {
                let next = ts.get(i + 1).map_or(0.0, |t| t.target.unwrap());
                assert!((ts[i].target.unwrap() - (ts[i].reward + 0.9 * next)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_configuration() {
        let (kb, lp) = family();
        let table = generate_embeddings(&kb, 4, 0, 0.1).unwrap();
        let p = HeuristicParams::default();
        let bad = TrainingConfig { gamma: 1.0, ..Default::default() };
        assert!(matches!(train(&kb, &table, std::slice::from_ref(&lp), &bad, &p), Err(QNetError::InvalidConfig(_))));
        assert!(matches!(train(&kb, &table, &[], &TrainingConfig::default(), &p), Err(QNetError::NoProblems)));
    }
}
