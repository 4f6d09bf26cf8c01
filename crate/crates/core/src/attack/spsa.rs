use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{influence_from, phi_from_predictions, weighted_total, AttackConfig, AttackSet, InfluenceResult, Perturbation};
use crate::error::{Error, Result};
use crate::predictor::BlackBoxModel;

/// Step size `a_n = a / (η(n) + n)^α` and probe width `c_n = c / n^γ`.
pub fn gain_sequences(cfg: &AttackConfig, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let a_n = cfg.a / (cfg.eta.eta(n) + nf).powf(cfg.alpha);
    let c_n = cfg.c / nf.powf(cfg.gamma);
    (a_n, c_n)
}

/// `N × S` direction with i.i.d. ±1 entries on rows in `p` and zeros elsewhere.
pub fn sample_masked_rademacher<R: Rng + ?Sized>(
    p: &AttackSet,
    n_nodes: usize,
    window: usize,
    rng: &mut R,
) -> Result<Array2<f64>> {
    if p.is_empty() {
        return Err(Error::EmptyAttackSet);
    }
    let mut delta = Array2::zeros((n_nodes, window));
    for &i in p.nodes() {
        for v in delta.row_mut(i) {
            *v = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        }
    }
    Ok(delta)
}

/// Simultaneous-perturbation gradient estimate
/// `[Φ(U + c Δ) - Φ(U - c Δ)] / (2c) · Δ`.
///
/// Multiplying by `Δ` equals dividing by it on ±1 entries and leaves masked
/// (zero) entries at zero. Calls `objective` exactly twice.
pub fn spsa_gradient<F>(mut objective: F, u: &Array2<f64>, c_n: f64, delta: &Array2<f64>) -> Result<Array2<f64>>
where
    F: FnMut(&Array2<f64>) -> Result<f64>,
{
    let step = delta * c_n;
    let plus = objective(&(u + &step))?;
    let minus = objective(&(u - &step))?;
    let diff = (plus - minus) / (2.0 * c_n);
    if !diff.is_finite() {
        return Err(Error::NonFinite {
            iteration: 0,
            what: format!("objective difference (Φ+ = {plus}, Φ- = {minus})"),
        });
    }
    Ok(delta * diff)
}

/// Projects `u` onto the attack box in place: rows in `mask` are clamped to
/// `[-ε⁻ x, ε⁺ x]`, all other rows are zeroed.
pub fn clip_in_place(u: &mut Array2<f64>, x: &Array2<f64>, cfg: &AttackConfig, mask: &[bool]) {
    for ((mut urow, xrow), &keep) in u.rows_mut().into_iter().zip(x.rows()).zip(mask) {
        if keep {
            for (v, &xv) in urow.iter_mut().zip(xrow) {
                *v = v.min(cfg.eps_plus * xv).max(-cfg.eps_minus * xv);
            }
        } else {
            urow.fill(0.0);
        }
    }
}

pub fn clip_perturbation(u: &Array2<f64>, x: &Array2<f64>, cfg: &AttackConfig, p: &AttackSet) -> Perturbation {
    let mut m = u.clone();
    clip_in_place(&mut m, x, cfg, &p.mask(u.nrows()));
    Perturbation::new(m, p.clone())
}

/// Whether `u` respects the box and support constraints for `p`.
pub fn satisfies_constraints(u: &Array2<f64>, x: &Array2<f64>, cfg: &AttackConfig, p: &AttackSet) -> bool {
    let mask = p.mask(u.nrows());
    u.rows().into_iter().zip(x.rows()).zip(mask).all(|((urow, xrow), keep)| {
        if keep {
            urow.iter()
                .zip(xrow)
                .all(|(&v, &xv)| v <= cfg.eps_plus * xv && v >= -cfg.eps_minus * xv)
        } else {
            urow.iter().all(|&v| v == 0.0)
        }
    })
}

#[derive(Debug, Clone)]
pub struct AttackOutcome {
    /// `X' = X + U`.
    pub adversarial: Array2<f64>,
    pub perturbation: Perturbation,
    pub influence: InfluenceResult,
    /// Model queries made, including the baseline and final predictions.
    pub evaluations: usize,
}

/// SPSA ascent on `Φ` with the attack set fixed.
pub fn run_attack<M: BlackBoxModel + ?Sized>(
    model: &M,
    x: &Array2<f64>,
    p: &AttackSet,
    cfg: &AttackConfig,
) -> Result<AttackOutcome> {
    run_attack_observed(model, x, p, cfg, |_, _| {})
}

/// [`run_attack`] that hands every clipped iterate `U_{n+1}` to `observer`.
pub fn run_attack_observed<M, O>(
    model: &M,
    x: &Array2<f64>,
    p: &AttackSet,
    cfg: &AttackConfig,
    mut observer: O,
) -> Result<AttackOutcome>
where
    M: BlackBoxModel + ?Sized,
    O: FnMut(usize, &Array2<f64>),
{
    cfg.validate()?;
    let (n_nodes, window) = x.dim();
    if let Some(&index) = p.nodes().iter().find(|&&i| i >= n_nodes) {
        return Err(Error::NodeOutOfRange { index, n_nodes });
    }
    if let Some(w) = &cfg.node_weights {
        if w.len() != n_nodes {
            return Err(Error::ShapeMismatch {
                expected: format!("{n_nodes} node weights"),
                actual: format!("{}", w.len()),
            });
        }
    }
    let baseline = model.predict(x)?;
    let mut evaluations = 1;
    let mut u = Array2::<f64>::zeros((n_nodes, window));

    if !p.is_empty() {
        let mask = p.mask(n_nodes);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for n in 1..=cfg.max_iter {
            let (a_n, c_n) = gain_sequences(cfg, n);
            let delta = sample_masked_rademacher(p, n_nodes, window, &mut rng)?;
            let objective = |v: &Array2<f64>| -> Result<f64> {
                let y = model.predict(&(x + v))?;
                Ok(weighted_total(&phi_from_predictions(&baseline, &y, cfg.objective), cfg))
            };
            let grad = spsa_gradient(objective, &u, c_n, &delta).map_err(|e| match e {
                Error::NonFinite { what, .. } => Error::NonFinite { iteration: n, what },
                other => other,
            })?;
            evaluations += 2;
            u.scaled_add(a_n, &grad);
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    iteration: n,
                    what: "perturbation update".into(),
                });
            }
            clip_in_place(&mut u, x, cfg, &mask);
            debug_assert!(satisfies_constraints(&u, x, cfg, p), "iterate {n} left the attack box");
            observer(n, &u);
        }
    }

    let adversarial = x + &u;
    let perturbed = model.predict(&adversarial)?;
    evaluations += 1;
    Ok(AttackOutcome {
        adversarial,
        perturbation: Perturbation::new(u, p.clone()),
        influence: influence_from(baseline, perturbed, cfg),
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use ndarray::{arr2, Axis};

    use super::*;
    use crate::predictor::FnModel;

    #[test]
    fn gain_sequences_match_formulas() {
        let cfg = AttackConfig::default();
        let (a1, c1) = gain_sequences(&cfg, 1);
        assert_eq!(c1, 0.1);
        assert_abs_diff_eq!(a1, 0.328 / 1.1f64.powf(0.202), epsilon = 1e-15);
        let mut prev = gain_sequences(&cfg, 1);
        for n in 2..=1000 {
            let cur = gain_sequences(&cfg, n);
            assert!(cur.0 < prev.0 && cur.1 < prev.1);
            prev = cur;
        }
    }

    #[test]
    fn rademacher_values_and_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = sample_masked_rademacher(&AttackSet::all(100), 100, 100, &mut rng).unwrap();
        assert!(d.iter().all(|&v| v == 1.0 || v == -1.0));
        // mean of 10^4 fair signs: sd 0.01
        assert!(d.mean().unwrap().abs() < 0.03);

        let p = AttackSet::new([1, 3], 5).unwrap();
        for _ in 0..20 {
            let d = sample_masked_rademacher(&p, 5, 4, &mut rng).unwrap();
            for i in [0, 2, 4] {
                assert!(d.row(i).iter().all(|&v| v == 0.0));
            }
        }
        assert!(matches!(
            sample_masked_rademacher(&AttackSet::empty(), 5, 4, &mut rng),
            Err(Error::EmptyAttackSet)
        ));
    }

    #[test]
    fn linear_objective_single_entry_is_exact() {
        let mut delta = Array2::zeros((2, 2));
        delta[[1, 0]] = -1.0;
        let g = spsa_gradient(|u| Ok(u.sum()), &Array2::zeros((2, 2)), 0.07, &delta).unwrap();
        assert_abs_diff_eq!(g[[1, 0]], 1.0, epsilon = 1e-12);
        assert_eq!(g[[0, 0]], 0.0);
    }

    #[test]
    fn linear_objective_gives_directional_difference() {
        let delta = arr2(&[[1.0, -1.0, 1.0], [1.0, 1.0, -1.0]]);
        let g = spsa_gradient(|u| Ok(u.sum()), &Array2::zeros((2, 3)), 0.1, &delta).unwrap();
        let s = delta.sum();
        for (gv, dv) in g.iter().zip(&delta) {
            assert_abs_diff_eq!(*gv, dv * s, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_and_even_objectives_give_zero() {
        let delta = arr2(&[[1.0, -1.0], [-1.0, 1.0]]);
        let u0 = Array2::zeros((2, 2));
        let g = spsa_gradient(|_| Ok(3.0), &u0, 0.1, &delta).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
        let g = spsa_gradient(|u| Ok(u.mapv(|v| v * v).sum()), &u0, 0.1, &delta).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let delta = arr2(&[[1.0]]);
        let r = spsa_gradient(|u| Ok(1.0 / (u[[0, 0]] - 0.1)), &arr2(&[[0.0]]), 0.1, &delta);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn clip_examples() {
        let cfg = AttackConfig::default();
        let x = arr2(&[[60.0, 40.0], [50.0, 50.0]]);
        let p = AttackSet::new([0], 2).unwrap();
        let inside = arr2(&[[10.0, -20.0], [0.0, 0.0]]);
        assert_eq!(clip_perturbation(&inside, &x, &cfg, &p).matrix(), &inside);
        let big = arr2(&[[1e3, -1e3], [5.0, 5.0]]);
        let c = clip_perturbation(&big, &x, &cfg, &p);
        assert_eq!(c.matrix(), &arr2(&[[30.0, -40.0], [0.0, 0.0]]));
        assert!(satisfies_constraints(c.matrix(), &x, &cfg, &p));
        assert!(!satisfies_constraints(&big, &x, &cfg, &p));
    }

    fn negated_row_sum() -> FnModel<impl Fn(&Array2<f64>) -> Array2<f64> + Sync> {
        // y_i = -Σ_k x_ik, so the signed influence is Φ(U) = Σ U
        FnModel(|x: &Array2<f64>| x.sum_axis(Axis(1)).mapv(|v| -v).insert_axis(Axis(1)))
    }

    #[test]
    fn empty_attack_set_leaves_input_unchanged() {
        let x = Array2::from_elem((3, 2), 50.0);
        let out = run_attack(&negated_row_sum(), &x, &AttackSet::empty(), &AttackConfig::default()).unwrap();
        assert_eq!(out.adversarial, x);
        assert_eq!(out.influence.total, 0.0);
        assert!(out.perturbation.matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn separable_objective_reaches_upper_corner() {
        let x = arr2(&[[60.0, 50.0, 40.0, 55.0], [45.0, 45.0, 45.0, 45.0]]);
        let cfg = AttackConfig {
            max_iter: 3000,
            seed: 17,
            ..AttackConfig::default()
        };
        let p = AttackSet::new([0], 2).unwrap();
        let out = run_attack(&negated_row_sum(), &x, &p, &cfg).unwrap();
        let u = out.perturbation.matrix();
        for k in 0..4 {
            let target = 0.5 * x[[0, k]];
            assert!((u[[0, k]] - target).abs() <= 0.02 * target, "u = {}", u[[0, k]]);
        }
        assert!(u.row(1).iter().all(|&v| v == 0.0));
        assert_eq!(out.evaluations, 2 * 3000 + 2);
    }

    #[test]
    fn attack_is_reproducible_under_seed() {
        let x = Array2::from_shape_fn((3, 3), |(i, j)| 40.0 + (i + 2 * j) as f64);
        let cfg = AttackConfig {
            max_iter: 200,
            seed: 5,
            ..AttackConfig::default()
        };
        let p = AttackSet::new([0, 2], 3).unwrap();
        let a = run_attack(&negated_row_sum(), &x, &p, &cfg).unwrap();
        let b = run_attack(&negated_row_sum(), &x, &p, &cfg).unwrap();
        assert_eq!(a.perturbation, b.perturbation);
    }
}
