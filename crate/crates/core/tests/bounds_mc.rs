use nonconv::config::{Config, Experiment};
use nonconv::experiments::init_frequencies;

fn relu_config(widths: &str) -> Experiment {
    let text = format!(
        r#"
[architecture]
widths = {widths}
[activation]
kind = "relu"
[data]
kind = "discrete"
box = [0.0, 1.0]
atoms = [{{ x = [0.0], y = [0.0], p = 0.5 }}, {{ x = [1.0], y = [1.0], p = 0.5 }}]
reference_optimum = 0.0
"#
    );
    Experiment::from_config(Config::from_toml_str(&text).unwrap()).unwrap()
}

fn within(freq: f64, p: f64, n: usize, sigmas: f64) -> bool {
    (freq - p).abs() <= sigmas * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn window_event_frequency_dominates_layer1_product() {
    let exp = relu_config("[1, 1, 1]");
    let n = 40_000;
    let f = init_frequencies(&exp, n, 21, None).unwrap();
    assert!((f.bounds.layer1_bound - 0.02511628185918066).abs() < 1e-15);
    // exact probability of the window event, strictly above the product bound
    assert!(within(f.window_freq, 0.0500447966568617, n, 4.0), "{}", f.window_freq);
    assert!(f.window_freq >= f.bounds.layer1_bound);
    assert!(f.any_layer_freq >= f.window_freq);
}

#[test]
fn witness_frequency_matches_deep_product() {
    let exp = relu_config("[1, 1, 1, 1]");
    let n = 40_000;
    let f = init_frequencies(&exp, n, 22, None).unwrap();
    assert_eq!(f.bounds.deep_bound, 0.25);
    assert!(within(f.witness_freq, 0.25, n, 4.0), "{}", f.witness_freq);
    assert!(f.any_layer_freq >= f.witness_freq);
}

#[test]
fn frequencies_do_not_depend_on_threads() {
    let exp = relu_config("[1, 2, 2, 1]");
    assert_eq!(
        init_frequencies(&exp, 2_000, 5, Some(1)).unwrap(),
        init_frequencies(&exp, 2_000, 5, Some(3)).unwrap()
    );
}
