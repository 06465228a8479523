use hodiff::models::{ar1_reference, hospital_reference, Ar1, Hospital, DEFAULT_TAIL_EPS};

#[test]
fn hospital_exact_means_match_published_table() {
    for (n, target) in [(4u32, -0.933), (16, -0.865), (64, -0.823), (256, -0.801)] {
        let model = Hospital::new(n, 1.0).unwrap();
        let law = hospital_reference(&model, DEFAULT_TAIL_EPS).unwrap();
        let mean = law.mean();
        println!("N={n} E W={mean}");
        assert!((mean - target).abs() <= 0.002, "N={n}: {mean} vs {target}");
    }
}

#[test]
fn hospital_reference_sums_to_one() {
    let model = Hospital::new(4, 1.0).unwrap();
    let law = hospital_reference(&model, DEFAULT_TAIL_EPS).unwrap();
    assert!((law.expect(|_| 1.0) - 1.0).abs() < 1e-10);
}

#[test]
fn ar1_sample_mean_log_matches_gamma_law() {
    // D∞ is Gamma(1 + 1/α, 1), so E log D∞ = ψ(1 + 1/α).
    let alpha: f64 = 0.5;
    let model = Ar1::new(alpha).unwrap();
    let law = ar1_reference(&model, 200_000, 11).unwrap();
    let d = alpha.sqrt();
    let est = law.expect(|w| (w / d + 1.0 / alpha).ln());
    let se = law.expect_stderr(|w| (w / d + 1.0 / alpha).ln());
    let exact = statrs::function::gamma::digamma(1.0 + 1.0 / alpha);
    assert!((est - exact).abs() < 4.0 * se, "{est} vs {exact} (se {se})");
}
