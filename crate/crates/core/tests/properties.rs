use proptest::prelude::*;

use photolith::decoder::{decode, validate_order};
use photolith::evaluator::{check_feasibility, earliest_completion, metrics, read_schedule_csv, write_schedule_csv};
use photolith::exact::export_milp;
use photolith::instgen::{generate_instance, EquipmentScenario, GenConfig, ReadyScenario};
use photolith::rng::rng_from;
use photolith::search::{crossover, crossover_children, mutate, run_ga, GAConfig};
use photolith::{Instance, Objective};

fn config(n: usize, seed: u64, eq: bool, mixed: bool, t_hi: bool, r_hi: bool) -> GenConfig {
    GenConfig {
        n,
        ready: if mixed { ReadyScenario::Mixed30_70 } else { ReadyScenario::AllZero },
        tardiness: if t_hi { 0.6 } else { 0.3 },
        range: if r_hi { 2.5 } else { 0.5 },
        equipment: if eq { EquipmentScenario::Scenario1 } else { EquipmentScenario::Scenario2 },
        seed,
    }
}

prop_compose! {
    fn instance_and_order(max_n: usize)(n in 1..=max_n, seed in any::<u64>(), eq in any::<bool>(), mixed in any::<bool>(),
                                        t_hi in any::<bool>(), r_hi in any::<bool>())
                                       (order in Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
                                        inst in Just(generate_instance(&config(n, seed, eq, mixed, t_hi, r_hi)).unwrap()))
                                       -> (Instance, Vec<usize>) {
        (inst, order)
    }
}

fn kind_of(i: u8) -> Objective {
    Objective::ALL[i as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decoded_schedules_are_feasible((inst, order) in instance_and_order(15), k in 0u8..3) {
        let kind = kind_of(k);
        let (schedule, value) = decode(&inst, &order, kind).unwrap();
        let violations = check_feasibility(&inst, &schedule);
        prop_assert!(violations.is_empty(), "{violations:?}");
        prop_assert_eq!(metrics(&inst, &schedule).value(kind), value);
    }

    #[test]
    fn decoded_timing_is_semi_active((inst, order) in instance_and_order(10)) {
        let (schedule, _) = decode(&inst, &order, Objective::Cmax).unwrap();
        let retimed = earliest_completion(&inst, &schedule.assign, &schedule.sequences).unwrap();
        prop_assert_eq!(retimed.completion, schedule.completion);
    }

    #[test]
    fn decoded_schedules_satisfy_literal_model_rows((inst, order) in instance_and_order(5), k in 0u8..3) {
        let kind = kind_of(k);
        let (schedule, value) = decode(&inst, &order, kind).unwrap();
        let model = export_milp(&inst, kind);
        let values = model.values_from_schedule(&inst, &schedule);
        let broken = model.check(&values);
        prop_assert!(broken.is_empty(), "{:?}", &broken[..broken.len().min(3)]);
        prop_assert_eq!(model.objective_value(&values), value);
    }

    #[test]
    fn schedule_files_round_trip((inst, order) in instance_and_order(8)) {
        let (schedule, _) = decode(&inst, &order, Objective::Wct).unwrap();
        let mut buf = Vec::new();
        write_schedule_csv(&inst, &schedule, &mut buf).unwrap();
        let back = read_schedule_csv(&inst, &buf[..]).unwrap();
        prop_assert_eq!(back, schedule);
    }

    #[test]
    fn operators_keep_permutations(n in 1usize..30, seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let mut u: Vec<usize> = (0..n).collect();
        let mut v: Vec<usize> = (0..n).rev().collect();
        for _ in 0..20 {
            let c = crossover(&u, &v, &mut rng);
            prop_assert!(validate_order(&c, n).is_ok());
            let m = mutate(&c, &mut rng);
            prop_assert!(validate_order(&m, n).is_ok());
            if n >= 2 {
                prop_assert_eq!(m.iter().zip(&c).filter(|(a, b)| a != b).count(), 2);
            }
            u = v;
            v = m;
        }
    }

    #[test]
    fn crossover_children_swap_two_values(n in 1usize..20, seed in any::<u64>(), r_seed in any::<usize>()) {
        let mut rng = rng_from(seed);
        let u = mutate(&(0..n).collect::<Vec<_>>(), &mut rng);
        let v = mutate(&(0..n).rev().collect::<Vec<_>>(), &mut rng);
        let r = r_seed % n;
        let (cu, cv) = crossover_children(&u, &v, r);
        // The child of u carries v's value at position r when values differ.
        prop_assert_eq!(cu[r], v[r]);
        prop_assert!(validate_order(&cu, n).is_ok() && validate_order(&cv, n).is_ok());
        prop_assert!(cu.iter().zip(&u).filter(|(a, b)| a != b).count() <= 2);
    }

    #[test]
    fn generation_is_reproducible(n in 1usize..30, seed in any::<u64>(), eq in any::<bool>(), mixed in any::<bool>()) {
        let c = config(n, seed, eq, mixed, true, false);
        prop_assert_eq!(generate_instance(&c).unwrap(), generate_instance(&c).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ga_is_reproducible_and_no_worse_than_its_seed_order((inst, _) in instance_and_order(8), seed in any::<u64>(), k in 0u8..3) {
        let kind = kind_of(k);
        let cfg = GAConfig { pop_size: 16, max_generations: 30, stall_window: 10, seed, ..GAConfig::default() };
        let a = run_ga(&inst, kind, &cfg).unwrap();
        let b = run_ga(&inst, kind, &cfg).unwrap();
        prop_assert_eq!(&a.order, &b.order);
        prop_assert_eq!(&a.trace, &b.trace);
        let sorted = photolith::search::sp_initial_order(&inst);
        prop_assert!(a.value <= decode(&inst, &sorted, kind).unwrap().1);
        prop_assert!(a.trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(check_feasibility(&inst, &a.schedule).is_empty());
    }
}
