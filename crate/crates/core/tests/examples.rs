//! Runs every example program once.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(catalog);
example!(hermite_expansion);
example!(limit_variance);
example!(exact_sampling);
example!(clt_experiment);
example!(hypothesis_audit);
example!(contraction);
