use drill::embeddings::{generate_embeddings, StateMatrix};
use drill::family::bundled_family_kb;
use drill::lpgen::{build_learning_problems, generate_goal_concepts, LpGenConfig};
use drill::qnet::{
    adam_step, discounted_targets, forward, forward_batch, init_network, loss_and_gradients, train, AdamState,
    QNetworkParams, ReplayBuffer, TrainReport, TrainingConfig,
};
use drill::HeuristicParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CHANNELS: usize = 32;

// Straightforward forward pass over an explicitly zero-padded input.
fn reference_forward(p: &QNetworkParams, m: &StateMatrix) -> f64 {
    let d = p.dimension();
    let mut padded = vec![vec![0.0; d + 2]; 6];
    for r in 0..4 {
        for c in 0..d {
            padded[r + 1][c + 1] = m.row(r)[c];
        }
    }
    let mut flat = Vec::with_capacity(CHANNELS * 4 * d);
    for k in 0..CHANNELS {
        for r in 0..4 {
            for c in 0..d {
                let mut s = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        s += p.kernels[k * 9 + i * 3 + j] * padded[r + i][c + j];
                    }
                }
                flat.push(s.max(0.0));
            }
        }
    }
    let mut out = p.b2[0];
    for h in 0..p.hidden() {
        let z: f64 = p.b1[h] + flat.iter().enumerate().map(|(i, a)| a * p.w[i * p.hidden() + h]).sum::<f64>();
        out += z.max(0.0) * p.h[h];
    }
    out
}

fn reference_loss(p: &QNetworkParams, batch: &[(StateMatrix, f64)]) -> f64 {
    batch.iter().map(|(m, y)| (reference_forward(p, m) - y).powi(2)).sum::<f64>() / batch.len() as f64
}

fn random_state(rng: &mut impl Rng, d: usize) -> StateMatrix {
    let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    StateMatrix::from_rows([&rows[0], &rows[1], &rows[2], &rows[3]])
}

#[test]
fn forward_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (d, hidden, seed) in [(2, 3, 0), (5, 7, 1), (32, 16, 2)] {
        let mut p = init_network(d, hidden, seed).unwrap();
        p.b1.iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
        p.b2[0] = 0.3;
        let states: Vec<_> = (0..40).map(|_| random_state(&mut rng, d)).collect();
        let batch = forward_batch(&p, &states).unwrap();
        for (m, q) in states.iter().zip(&batch) {
            let expected = reference_forward(&p, m);
            assert!((q - expected).abs() <= 1e-12 * expected.abs().max(1.0));
            assert_eq!(forward(&p, m).unwrap().to_bits(), q.to_bits());
        }
    }
}

#[test]
fn gradients_match_central_differences() {
    let (d, hidden, h) = (32, 256, 1e-5);
    let mut worst: f64 = 0.0;
    for draw in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + draw);
        let mut p = init_network(d, hidden, draw).unwrap();
        p.b1.iter_mut().for_each(|b| *b = rng.random_range(-0.05..0.05));
        let batch: Vec<_> =
            (0..1 + draw as usize % 3).map(|_| (random_state(&mut rng, d), rng.random_range(-2.0..2.0))).collect();
        let (loss, grads) = loss_and_gradients(&p, &batch).unwrap();
        assert!((loss - reference_loss(&p, &batch)).abs() < 1e-10);

        for t in 0..5 {
            let len = p.tensors()[t].len();
            let mut entries: Vec<usize> = (0..len.min(12)).map(|_| rng.random_range(0..len)).collect();
            // Make sure the largest components are among the checked ones.
            let g = grads.tensors()[t];
            let mut by_size: Vec<usize> = (0..len).collect();
            by_size.sort_by(|&a, &b| g[b].abs().total_cmp(&g[a].abs()));
            entries.extend(by_size.into_iter().take(4));
            for i in entries {
                let analytic = g[i];
                let original = p.tensors()[t][i];
                p.tensors_mut()[t][i] = original + h;
                let up = reference_loss(&p, &batch);
                p.tensors_mut()[t][i] = original - h;
                let down = reference_loss(&p, &batch);
                p.tensors_mut()[t][i] = original;
                let numeric = (up - down) / (2.0 * h);
                let scale = analytic.abs().max(numeric.abs());
                if scale > 1e-7 {
                    let rel = (analytic - numeric).abs() / scale;
                    worst = worst.max(rel);
                    assert!(rel < 1e-4, "draw {draw} tensor {t}[{i}]: {analytic} vs {numeric}");
                } else {
                    assert!((analytic - numeric).abs() < 1e-9);
                }
            }
        }
    }
    assert!(worst < 1e-4);
}

#[test]
fn adam_matches_hand_computed_steps() {
    let mut p = init_network(2, 2, 0).unwrap();
    let start = p.clone();
    let mut grads = QNetworkParams::zeros(2, 2);
    grads.b2[0] = 0.5;
    grads.h[1] = -2.0;
    let mut state = AdamState::new(&p);
    let lr = 0.01;
    adam_step(&mut p, &grads, &mut state, lr).unwrap();
    // After one step the bias-corrected moments are g and g², so each moved
    // weight shifts by almost exactly lr against its gradient sign.
    assert!((p.b2[0] - (start.b2[0] - lr * 0.5 / (0.5 + 1e-8))).abs() < 1e-15);
    assert!((p.h[1] - (start.h[1] + lr * 2.0 / (2.0 + 1e-8))).abs() < 1e-15);
    assert_eq!(p.w, start.w);

    let after_one = p.b2[0];
    grads.b2[0] = -1.0;
    adam_step(&mut p, &grads, &mut state, lr).unwrap();
    let m = (0.9 * 0.1 * 0.5 + -0.1) / (1.0 - 0.9f64.powi(2));
    let v = (0.999 * 0.001 * 0.25 + 0.001 * 1.0) / (1.0 - 0.999f64.powi(2));
    assert!((p.b2[0] - (after_one - lr * m / (v.sqrt() + 1e-8))).abs() < 1e-15);
    assert_eq!(state.step(), 2);
}

#[test]
fn replay_keeps_the_newest_entries() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut replay = ReplayBuffer::new(5);
    for i in 0..12 {
        replay.push(random_state(&mut rng, 2), i as f64);
        assert!(replay.len() <= 5);
    }
    let kept: Vec<f64> = replay.iter().map(|(_, y)| *y).collect();
    assert_eq!(kept, vec![7.0, 8.0, 9.0, 10.0, 11.0]);
    let sample = replay.sample(3, &mut rng);
    assert_eq!(sample.len(), 3);
    assert!(sample.iter().all(|(_, y)| kept.contains(y)));
    assert_eq!(replay.sample(50, &mut rng).len(), 5);
}

#[test]
fn discounted_returns_follow_the_recursion() {
    let rewards = [0.5, -0.25, 1.0, 10.0];
    for gamma in [0.0, 0.5, 0.99] {
        let g = discounted_targets(&rewards, gamma);
        let direct: Vec<f64> = (0..rewards.len())
            .map(|t| rewards[t..].iter().enumerate().map(|(k, r)| gamma.powi(k as i32) * r).sum())
            .collect();
        for (a, b) in g.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    assert!(discounted_targets(&[], 0.9).is_empty());
}

fn family_training_run(episodes: usize) -> TrainReport {
    let kb = bundled_family_kb();
    let cfg = LpGenConfig::default();
    let concepts = generate_goal_concepts(&kb, &cfg).unwrap();
    let generated = build_learning_problems(&kb, &concepts, &cfg).unwrap();
    let lps: Vec<_> = generated.problems.into_iter().take(10).collect();
    let table = generate_embeddings(&kb, 32, 0, 0.1).unwrap();
    let tcfg = TrainingConfig { episodes, ..TrainingConfig::default() };
    let heuristic = HeuristicParams::default();
    train(&kb, &table, &lps, &tcfg, &heuristic).unwrap()
}

#[test]
fn training_records_are_consistent() {
    let report = family_training_run(30);
    assert_eq!(report.episodes.len(), 30);
    assert_eq!(report.updates.len(), 6);
    let gamma = TrainingConfig::default().gamma;
    let mut pushed = 0;
    for (k, episode) in report.episodes.iter().enumerate() {
        assert_eq!(episode.problem, k % 10);
        let expected = (1.0 - 0.01 * k as f64).max(0.01);
        assert!((episode.epsilon - expected).abs() < 1e-12);
        let t = &episode.transitions;
        assert!(!t.is_empty() && t.len() <= 10);
        for i in 0..t.len() {
            let next = t.get(i + 1).map_or(0.0, |n| n.target.unwrap());
            assert!((t[i].target.unwrap() - (t[i].reward + gamma * next)).abs() < 1e-9);
            assert!(t[i].reward.is_finite());
            if i > 0 {
                assert_eq!(t[i].parent, t[i - 1].child);
            }
        }
        pushed += t.len();
    }
    assert_eq!(report.replay.len(), pushed.min(report.replay.capacity()));
    assert!(report.params.is_finite());
}

#[test]
fn training_loss_halves_on_the_family_run() {
    let report = family_training_run(100);
    let first = report.updates.first().unwrap().loss;
    let last = report.updates.last().unwrap().loss;
    assert!(last <= 0.5 * first, "loss {first} -> {last}");
}
