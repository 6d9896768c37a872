//! Regenerate the repository's experiment configs (scratch tool).

use robustreg::datagen::{CovariateLaw, ErrorLaw};
use robustreg::experiments::*;
use robustreg::losses::LossKind;
use robustreg::regularizers::RegKind;
use robustreg::weights::{MallowsPower, WeightKind};

fn arm(
    name: &str,
    loss: LossKind,
    xi: Option<f64>,
    reg_kind: RegKind,
    mult: f64,
    shape: Option<f64>,
    init: InitStrategy,
) -> ArmConfig {
    ArmConfig {
        name: name.into(),
        loss: LossConfig { kind: loss, xi },
        weights: WeightConfig::default(),
        reg: RegConfig { kind: reg_kind, lambda: LambdaRule::Multiplier(mult), shape },
        r_rule: RRule::TrueL1Multiple(1.1),
        init,
    }
}

fn write(name: &str, config: &ExperimentConfig) {
    config.validate().unwrap();
    let path = format!("configs/{name}.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap() + "\n").unwrap();
    println!("wrote {path}");
}

fn main() {
    let solver = Some(SolverConfig { tol: 1e-6, max_iters: 20_000, eta: EtaRule::Auto });
    let base = ExperimentConfig {
        name: String::new(),
        p_values: vec![64, 128],
        sample_grid: SampleGrid::Ratios(vec![2.0, 4.0, 6.0, 8.0, 10.0]),
        k_rule: KRule::RoundSqrtP,
        covariates: CovariateLaw::GaussianIdentity,
        errors: ErrorLaw::Cauchy { scale: 0.1 },
        arms: vec![],
        trials: 50,
        master_seed: 20260809,
        solver,
        record_timing: false,
        oracle_radius: None,
    };

    let mut c = base.clone();
    c.name = "consistency-cauchy".into();
    c.arms = vec![
        arm("huber-l1", LossKind::Huber, None, RegKind::L1, 0.3, None, InitStrategy::Zero),
        arm("tukey-l1", LossKind::Tukey, None, RegKind::L1, 0.3, None, InitStrategy::TwoStep),
        arm("cauchy-l1", LossKind::Cauchy, None, RegKind::L1, 0.3, None, InitStrategy::TwoStep),
    ];
    write("consistency_cauchy", &c);

    let mut c = base.clone();
    c.name = "consistency-mixture".into();
    c.errors = ErrorLaw::NormalMixture { p_in: 0.7, sd_in: 0.1, sd_out: 10.0 };
    c.arms = vec![
        arm("ols-l1", LossKind::Squared, None, RegKind::L1, 0.3, None, InitStrategy::Zero),
        arm("huber-l1", LossKind::Huber, None, RegKind::L1, 0.3, None, InitStrategy::Zero),
        arm("tukey-l1", LossKind::Tukey, None, RegKind::L1, 0.3, None, InitStrategy::TwoStep),
        arm("cauchy-l1", LossKind::Cauchy, None, RegKind::L1, 0.3, None, InitStrategy::TwoStep),
    ];
    write("consistency_mixture", &c);

    let mut c = base.clone();
    c.name = "mallows-chi-square".into();
    c.covariates = CovariateLaw::ChiSquareCentered { df: 10.0 };
    c.arms = vec![
        ArmConfig {
            name: "mallows-huber".into(),
            loss: LossConfig { kind: LossKind::Huber, xi: None },
            weights: WeightConfig {
                kind: WeightKind::Mallows,
                b: Some(3.0),
                mallows_power: MallowsPower::Linear,
            },
            reg: RegConfig { kind: RegKind::L1, lambda: LambdaRule::Multiplier(0.3), shape: None },
            r_rule: RRule::TrueL1Multiple(1.1),
            init: InitStrategy::Zero,
        },
        arm("huber-l1", LossKind::Huber, None, RegKind::L1, 1.0, None, InitStrategy::Zero),
    ];
    write("mallows_chi_square", &c);

    let mut c = base.clone();
    c.name = "two-step-basins".into();
    c.p_values = vec![128];
    c.sample_grid = SampleGrid::Ratios(vec![10.0]);
    c.arms = vec![
        arm("tukey-two-step", LossKind::Tukey, Some(1.0), RegKind::L1, 0.3, None, InitStrategy::TwoStep),
        arm(
            "tukey-random-init",
            LossKind::Tukey,
            Some(1.0),
            RegKind::L1,
            0.3,
            None,
            InitStrategy::Random { sd: 3.0 },
        ),
    ];
    write("two_step_basins", &c);

    let mut c = base.clone();
    c.name = "scad-oracle".into();
    c.sample_grid = SampleGrid::Ratios(vec![2.0, 4.0, 8.0, 12.0, 16.0]);
    c.solver = Some(SolverConfig { tol: 1e-8, max_iters: 50_000, eta: EtaRule::Auto });
    c.arms = vec![
        arm("scad-cauchy", LossKind::Cauchy, None, RegKind::Scad, 1.0, Some(2.5), InitStrategy::TwoStep),
        arm("scad-huber", LossKind::Huber, None, RegKind::Scad, 1.0, Some(2.5), InitStrategy::TwoStep),
    ];
    write("scad_oracle", &c);
}
