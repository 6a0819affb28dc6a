//! Bundled scenarios and the generated configuration reference.

use degflow::diagnostics::MonitorOptions;
use degflow::experiments::{
    AbsorbingConfig, ContractionConfig, EllipticIdentityConfig, EpsLadderConfig, Experiment, MoserConfig,
    RefinementConfig, SeparationConfig, SingleRunConfig,
};
use degflow::stepper::StepperConfig;

use crate::error::CliResult;
use crate::scenario::{GridSpec, Scenario};

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name, ".toml")))),*]
    };
}

const BUNDLED: &[(&str, &str)] = bundled![
    "constant_steady",
    "conservation_random_1d",
    "energy_law_convex_concave",
    "energy_refinement_cosine",
    "entropy_lyapunov_2d",
    "ipepa_identity",
    "separation_1d_canonical",
    "moser_schedule_d3",
    "moser_schedule_d2",
    "eps_ladder_existence",
    "absorbing_energy",
    "contraction_after_separation",
    "dewetting_plateau",
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Option<CliResult<Scenario>> {
    builtin_source(name).map(|text| Scenario::from_toml(text, &format!("builtin:{name}")))
}

/// Every bundled scenario, parsed.
pub fn list_builtin_scenarios() -> CliResult<Vec<Scenario>> {
    BUNDLED
        .iter()
        .map(|(name, text)| Scenario::from_toml(text, &format!("builtin:{name}")))
        .collect()
}

fn section<T: serde::Serialize>(title: &str, header: &str, value: &T) -> String {
    let body = toml::to_string(value).expect("defaults serialize");
    format!("## {title}\n\n```toml\n{header}{body}```\n\n")
}

/// Markdown page listing every configuration default.
pub fn reference_page() -> String {
    let mut s = String::from(
        "# Scenario configuration reference\n\n\
         Generated by `degflow list --reference`. Every key may be omitted; the value shown is used.\n\n\
         ## Top level\n\n\
         ```toml\n\
         name = \"...\"        # required, names the output directory\n\
         description = \"\"\n\
         anchor = \"\"         # result of the theory the scenario exercises\n\
         seed = 0            # seeds random initial data\n\
         t_final = 1.0\n\
         cadence = 10        # accepted steps between records\n\
         mollify = true      # smooth the initial datum at scale eps first\n\
         max_steps = 10000000\n\
         ```\n\n\
         ## [model]\n\n\
         `s`, `kappa` and `eps` are required.\n\n\
         ```toml\n\
         n = 0.0\n\
         beta = 0.0\n\
         delta = 0.0\n\
         a = 1.0\n\
         gamma = { kind = \"zero\" }   # or { kind = \"physical\", B = ..., k = ..., r0 = 0.1 }\n\
         g = 0.0                     # constant, or one value per cell\n\
         ```\n\n\
         ## [initial]\n\n\
         One of `constant { value }`, `cosine { mean, amplitude, modes = [1, 0] }`, \
         `raised_cosine { floor, height }`, `random { mean, amplitude, seed }`, `file { path }`. \
         Defaults to `constant` with value 1.\n\n",
    );
    s.push_str(&section("[grid]", "", &GridSpec::default()));
    s.push_str(&section("[stepper]", "", &StepperConfig::default()));
    s.push_str(&section("[monitor]", "", &MonitorOptions::default()));
    let kinds = [
        Experiment::SingleRun(SingleRunConfig::default()),
        Experiment::EpsLadder(EpsLadderConfig::default()),
        Experiment::Separation(SeparationConfig::default()),
        Experiment::Absorbing(AbsorbingConfig::default()),
        Experiment::Contraction(ContractionConfig::default()),
        Experiment::MoserSchedule(MoserConfig::default()),
        Experiment::EllipticIdentity(EllipticIdentityConfig::default()),
        Experiment::DtRefinement(RefinementConfig::default()),
    ];
    for e in &kinds {
        s.push_str(&section(&format!("[experiment] kind = \"{}\"", e.kind()), "", e));
    }
    s.push_str(
        "## Optional experiment keys\n\n\
         Unset unless given:\n\n\
         * `single_run`: `plateau_ratio`, the largest allowed final-to-initial dissipation ratio.\n\
         * `separation`: `iota`, the phase-1 start offset; `eps_time`, the start-time scale \
           (defaults to the transient `t_min_fraction·t_final`).\n\
         * `moser_schedule`: `s` and `kappa` override the model; `iota`; `expect_feasible`.\n",
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_scenario_parses_and_resolves() {
        for sc in list_builtin_scenarios().unwrap() {
            sc.resolve().unwrap_or_else(|e| panic!("{}: {e}", sc.name));
            assert!(!sc.anchor.is_empty(), "{} has no anchor", sc.name);
        }
    }

    #[test]
    fn file_names_match_scenario_names() {
        for name in builtin_names() {
            assert_eq!(builtin(name).unwrap().unwrap().name, name);
        }
    }

    #[test]
    fn catalog_contains_named_scenarios() {
        let names: Vec<_> = builtin_names().collect();
        for want in ["separation_1d_canonical", "eps_ladder_existence", "ipepa_identity"] {
            assert!(names.contains(&want), "{want}");
        }
    }

    #[test]
    fn catalog_covers_every_experiment_kind() {
        let kinds: std::collections::HashSet<_> = list_builtin_scenarios()
            .unwrap()
            .iter()
            .map(|s| s.experiment.kind())
            .collect();
        for k in [
            "single_run",
            "eps_ladder",
            "separation",
            "absorbing",
            "contraction",
            "moser_schedule",
            "elliptic_identity",
            "dt_refinement",
        ] {
            assert!(kinds.contains(k), "{k}");
        }
    }

    #[test]
    fn reference_page_is_current() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/configuration.md");
        let on_disk = std::fs::read_to_string(path).expect("docs/configuration.md exists");
        assert_eq!(on_disk, reference_page(), "regenerate with `degflow list --reference`");
    }
}
