use std::path::Path;

use hyperlattice::harness::EcfTarget;
use hyperlattice::lattice::FarField;
use hyperlattice::{
    ExperimentConfig, Family, GofConfig, Normalization, PerturbationSpec, Regime, SampleConfig, TestFunction,
    TruncationPolicy,
};
use hyperlattice_cli::parse_config_str;
use proptest::prelude::*;

fn family(kind: u8, p: f64, d: usize) -> Family {
    match kind {
        0 => Family::Gaussian { sigma: p },
        1 => Family::UniformCube { half_width: p },
        2 => Family::Laplace { scale: p },
        3 => Family::Cauchy { scale: p },
        4 => Family::SymStable { alpha: 0.5 + 1.5 * (p / 3.0).min(1.0), gamma: p },
        5 => Family::IsotropicStable { alpha: 0.3 + 1.7 * (p / 3.0).min(1.0), gamma: p },
        _ => Family::PointMass { value: vec![p; d] },
    }
}

prop_compose! {
    fn valid_config()(
        d in 1usize..=3,
        kind in 0u8..7,
        p in 0.05f64..3.0,
        r in 0.5f64..500.0,
        a in 0.1f64..4.0,
        hermite in proptest::option::of(0u32..4),
        replicates in 1u64..1_000_000,
        seed in any::<u64>(),
        k in 1.0f64..40.0,
        stationary in any::<bool>(),
        scan in proptest::option::of(proptest::collection::btree_set(1u32..10_000, 1..5)),
        norm in 0u8..3,
        ecf in 0u8..3,
        name in proptest::option::of("[a-z][a-z0-9 _-]{0,12}"),
    ) -> Option<ExperimentConfig> {
        let spec = PerturbationSpec::new(family(kind, p, d), d).ok()?;
        let f = match hermite {
            Some(k) => TestFunction::new(hyperlattice::Shape::HermiteGaussian { k }, d).ok()?,
            None => TestFunction::gaussian_bump(a, d).ok()?,
        };
        let sample = SampleConfig::new(r, spec, f)
            .ok()?
            .stationary(stationary)
            .with_truncation(TruncationPolicy::fixed(k, 1e-6).with_budget(1 << 30))
            .with_far_field(if kind == 3 { FarField::Auto } else { FarField::Off });
        let regime = (1..=6).map(|i| Regime::from_item(i).unwrap()).find(|g| g.check(&sample.spec).is_ok())?;
        let mut cfg = ExperimentConfig::new(sample, regime, replicates, seed);
        if let Some(n) = name {
            cfg = cfg.named(n);
        }
        if let Some(rs) = scan {
            cfg = cfg.with_scan(rs.into_iter().map(|v| v as f64 / 7.0).collect());
        }
        cfg = cfg.with_normalization(match norm {
            0 => Normalization::Theory,
            1 => Normalization::EmpiricalStd,
            _ => Normalization::Fixed { scale: a },
        });
        let target = match ecf {
            0 => None,
            1 => Some(EcfTarget::GaussianLimit { variance: a }),
            _ => Some(EcfTarget::StableLimit { alpha: 1.5, scale: a }),
        };
        cfg = cfg.with_gof(GofConfig { ecf_target: target, ..GofConfig::default() });
        cfg.validate().ok()?;
        Some(cfg)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn serialize_then_parse_is_identity(cfg in valid_config()) {
        prop_assume!(cfg.is_some());
        let cfg = cfg.unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = parse_config_str(&text, Path::new("roundtrip.json")).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0], &cfg);
        let again = serde_json::to_string_pretty(&back[0]).unwrap();
        prop_assert_eq!(again, text);
    }
}
