mod common;

macro_rules! suite {
    ($name:ident) => {
        #[test]
        fn $name() {
            if let Err(e) = common::props::$name() {
                panic!("{e}");
            }
        }
    };
}

suite!(delta_two_case_identity);
suite!(salience_counting_invariants);
suite!(fe_decomposition_identity);
suite!(kl_non_negativity);
suite!(sigmoid_symmetry);
suite!(zero_parameter_closed_form);
suite!(checkpoint_serialization_determinism);

#[test]
fn every_suite_is_listed() {
    assert_eq!(common::props::all_suites().len(), 7);
}
