mod common;

use common::*;
use ndarray::Array2;
use nlcs::dictlearn::{dict_update, dictionary_gradient, learn, total_objective, DictLearnConfig, TrainingSet};
use nlcs::linops::prox_l1;
use nlcs::measurements::{apply_measurement, MeasurementModel};
use nlcs::solvers::{
    consistency_level, sparse_code_adaptive, sparse_code_adaptive_batch, sparse_code_batch, sparse_code_fixed,
    HomotopyConfig, SolverConfig,
};
use nlcs::{dct_dictionary, Dictionary, Execution, SparseCode};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(FAMILIES.to_vec())
}

/// Observation of `Dα*` for a sparse `α*`.
fn sparse_instance(fam: Family, dict: &Dictionary, k: usize, r: &mut TestRng) -> nlcs::Observation {
    let x = dict.atoms().dot(&sparse_vector(dict.atom_count(), k, r));
    let peak = x.fold(0.0_f64, |m, v| m.max(v.abs()));
    let model = random_model(fam, dict.signal_dim(), peak, r);
    apply_measurement(&model, x.view()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fixed_lambda_objective_never_increases(fam in family(), seed in any::<u64>(), lambda in 1e-3f64..0.3) {
        let mut r = rng(seed);
        let dict = random_dictionary(12, 24, &mut r);
        let obs = sparse_instance(fam, &dict, 3, &mut r);
        let cfg = SolverConfig::l1(lambda).with_max_iters(150).with_rel_tol(1e-300);
        let (_, trace) = sparse_code_fixed(&dict, &obs, &SparseCode::zeros(24), &cfg).unwrap();
        for w in trace.objective.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{}: {} -> {}", fam.name(), w[0], w[1]);
        }
    }

    #[test]
    fn hard_thresholding_respects_sparsity(fam in family(), seed in any::<u64>(), k in 1usize..8) {
        let mut r = rng(seed);
        let dict = random_dictionary(10, 20, &mut r);
        let obs = sparse_instance(fam, &dict, 2, &mut r);
        let (code, _) = sparse_code_fixed(&dict, &obs, &SparseCode::zeros(20), &SolverConfig::l0(k)).unwrap();
        prop_assert!(code.nonzeros() <= k);
    }

    #[test]
    fn continuation_grows_penalty_and_shrinks_cost(seed in any::<u64>(), fam in prop::sample::select(vec![Family::Clip, Family::Quant, Family::Mask, Family::Identity, Family::Linear])) {
        let mut r = rng(seed);
        let dict = random_dictionary(12, 24, &mut r);
        let obs = sparse_instance(fam, &dict, 3, &mut r);
        let (_, trace) = sparse_code_adaptive(&dict, &obs, &SparseCode::zeros(24), &HomotopyConfig::default()).unwrap();
        for w in trace.stages.windows(2) {
            prop_assert!(w[1].penalty >= w[0].penalty - 1e-9);
            prop_assert!(w[1].consistency <= w[0].consistency + 1e-9);
            prop_assert!((w[1].lambda - 0.5 * w[0].lambda).abs() <= 1e-15 * w[0].lambda);
        }
    }

    #[test]
    fn true_code_meets_noise_bound(fam in family(), seed in any::<u64>(), sigma in 1e-3f64..1.0) {
        let mut r = rng(seed);
        let dict = random_dictionary(12, 24, &mut r);
        let alpha = sparse_vector(24, 3, &mut r);
        let x = dict.atoms().dot(&alpha);
        let noise = gaussian(12, &mut r) * sigma;
        let peak = x.fold(0.0_f64, |m, v| m.max(v.abs()));
        let model = random_model(fam, 12, peak, &mut r);
        let obs = apply_measurement(&model, (&x + &noise).view()).unwrap();
        let level = consistency_level(&dict, &SparseCode::new(alpha).unwrap(), &obs).unwrap();
        prop_assert!(level <= 0.5 * noise.dot(&noise) * (1.0 + 1e-12));
    }
}

#[test]
fn orthonormal_identity_problem_is_soft_thresholding() {
    let dict = dct_dictionary(16, 16).unwrap();
    let mut r = rng(11);
    let y = gaussian(16, &mut r);
    let obs = apply_measurement(&MeasurementModel::Identity, y.view()).unwrap();
    let lambda = 0.4;
    let cfg = SolverConfig::l1(lambda).with_max_iters(50);
    let (code, _) = sparse_code_fixed(&dict, &obs, &SparseCode::zeros(16), &cfg).unwrap();
    // min ½‖y − Dα‖² + λ‖α‖₁ with D orthonormal: α = soft(Dᵀy, λ)
    let oracle = prox_l1(dict.atoms().t().dot(&y).view(), lambda).unwrap();
    assert!(dist(code.coeffs(), oracle.view()) < 1e-10);
}

#[test]
fn continuation_reaches_target_on_clean_data() {
    let mut r = rng(5);
    let dict = random_dictionary(16, 32, &mut r);
    for fam in [Family::Clip, Family::Quant, Family::Mask, Family::Identity, Family::Linear] {
        let obs = sparse_instance(fam, &dict, 3, &mut r);
        let (code, trace) = sparse_code_adaptive(&dict, &obs, &SparseCode::zeros(32), &HomotopyConfig::default()).unwrap();
        assert!(trace.converged, "{}", fam.name());
        assert!(consistency_level(&dict, &code, &obs).unwrap() <= 1e-3);
    }
}

#[test]
fn batch_results_do_not_depend_on_execution() {
    let mut r = rng(8);
    let dict = random_dictionary(16, 32, &mut r);
    let obs: Vec<_> = (0..12).map(|_| sparse_instance(Family::Clip, &dict, 3, &mut r)).collect();
    let init = vec![SparseCode::zeros(32); obs.len()];
    let cfg = SolverConfig::l1(0.01).with_max_iters(60);
    let a = sparse_code_batch(&dict, &obs, &init, &cfg, Execution::Sequential).unwrap();
    let b = sparse_code_batch(&dict, &obs, &init, &cfg, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    let h = HomotopyConfig::default();
    let a = sparse_code_adaptive_batch(&dict, &obs, &init, &h, Execution::Sequential).unwrap();
    let b = sparse_code_adaptive_batch(&dict, &obs, &init, &h, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

fn training_problem(seed: u64) -> (TrainingSet, Dictionary, Vec<SparseCode>) {
    let mut r = rng(seed);
    let truth = random_dictionary(8, 12, &mut r);
    let obs: Vec<_> = (0..30).map(|_| sparse_instance(Family::Clip, &truth, 2, &mut r)).collect();
    let codes = (0..30).map(|_| SparseCode::new(sparse_vector(12, 2, &mut r)).unwrap()).collect();
    (TrainingSet::new(obs).unwrap(), random_dictionary(8, 12, &mut r), codes)
}

#[test]
fn dictionary_gradient_matches_finite_differences() {
    let (train, dict, codes) = training_problem(21);
    let g = dictionary_gradient(&dict, &codes, &train).unwrap();
    let total = |d: &Array2<f64>| {
        total_objective(&Dictionary::new(d.clone()).unwrap(), &codes, &train, &SolverConfig::l0(12)).unwrap()
    };
    let h = 1e-6;
    for i in 0..8 {
        for j in 0..12 {
            let mut plus = dict.atoms().to_owned();
            plus[[i, j]] += h;
            let mut minus = dict.atoms().to_owned();
            minus[[i, j]] -= h;
            // the library returns the descent direction, i.e. minus the gradient
            let fd = -(total(&plus) - total(&minus)) / (2.0 * h);
            assert!((fd - g[[i, j]]).abs() <= 1e-5 * (1.0 + g[[i, j]].abs()), "({i},{j}): {fd} vs {}", g[[i, j]]);
        }
    }
}

#[test]
fn dictionary_steps_never_increase_cost() {
    let (train, dict, codes) = training_problem(4);
    let cfg = DictLearnConfig { dict_iters: 30, ..DictLearnConfig::default() };
    let upd = dict_update(&dict, &codes, &train, &cfg).unwrap();
    for w in upd.costs.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
    assert!(upd.dictionary.column_norms().iter().all(|&n| n <= 1.0 + 1e-12));
}

#[test]
fn learning_is_identical_across_execution_modes() {
    let (train, dict, _) = training_problem(9);
    let base = DictLearnConfig { outer_iters: 4, coding: SolverConfig::l0(2).with_max_iters(10), ..DictLearnConfig::default() };
    let a = learn(&train, &dict, &DictLearnConfig { exec: Execution::Sequential, ..base.clone() }).unwrap();
    let b = learn(&train, &dict, &DictLearnConfig { exec: Execution::Parallel, ..base }).unwrap();
    assert_eq!(a.dictionary, b.dictionary);
    assert_eq!(a.codes, b.codes);
    assert_eq!(a.trace, b.trace);
    assert!(a.trace.after_dictionary.last().unwrap() <= &a.trace.initial_objective);
}
