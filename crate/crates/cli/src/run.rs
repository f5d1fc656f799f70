//! Experiment plans (everything validated and built) and their execution.

use orbtrace::profinite::{
    cylinder_preservation, equicontinuity_modulus, generate_cantor_pseudo_orbit, trace_equicontinuous,
    EquicontinuousActionSpec, ExplicitCantor, ModulusOptions, SubgroupChain,
};
use orbtrace::shadowing::{
    expansiveness_window, generate_pseudo_orbit, strict_agreement_radius, synthesize_forbidden_words, trace_batch,
    trace_uniqueness_check, weak_agreement_radius, GenerateOptions, ToleranceBundle, UniquenessStatus,
};
use orbtrace::shift::{allowed_blocks, exact_allowed_blocks, BlockMethod, BlockSet};
use orbtrace::toral::{CompareOptions, PerturbedToralAction, ToralActionSpec, DEFAULT_MODULUS_TOLERANCE};
use orbtrace::{
    compute_conjugacy, generating_set_compare, hyperbolicity_check, Dyadic, Error, GroupFamily, GroupSpec, Scalar,
    SftSpec, ShiftSpace,
};
use serde_json::{json, Value};

use crate::config::{
    config_error, explicit_action, generators, parse_dyadic, ChainKindName, ExperimentConfig, ExperimentKind,
    ScalarName,
};
use crate::CliError;

pub struct Outcome {
    pub passed: bool,
    pub result: Value,
    pub disclaimers: Vec<String>,
    pub grid_csv: Option<String>,
}

pub enum Plan {
    SftTrace {
        space: ShiftSpace,
        sft: SftSpec,
        tol: ToleranceBundle,
        outer: u32,
        options: GenerateOptions,
        samples: usize,
        uniqueness: Option<(Dyadic, u32, u64, usize)>,
    },
    SftSynthesize {
        space: ShiftSpace,
        sft: SftSpec,
        level: u32,
        slack: u32,
        compare_radius: u32,
    },
    Expansiveness {
        space: ShiftSpace,
        sft: SftSpec,
        eta: Dyadic,
        epsilons: Vec<Dyadic>,
        max_k: u32,
        slack: u32,
        budget: u64,
    },
    Toral {
        spec: ToralActionSpec,
        group: GroupSpec,
    },
    Cantor {
        spec: EquicontinuousActionSpec,
    },
    Compare {
        spec: ToralActionSpec,
        a: GroupSpec,
        b: GroupSpec,
    },
}

fn tolerance(cfg: &ExperimentConfig, window: u32) -> Result<ToleranceBundle, CliError> {
    let t = cfg.tolerance.as_ref().expect("checked");
    let eps = t.epsilon.as_deref().map(|e| parse_dyadic("tolerance.epsilon", e)).transpose()?;
    match (t.level, eps) {
        (Some(m), None) => ToleranceBundle::for_level(window, m),
        (None, Some(e)) => ToleranceBundle::for_epsilon(window, e),
        (Some(m), Some(e)) => ToleranceBundle::new(window, m, e),
        (None, None) => return Err(config_error("[tolerance] needs level or epsilon")),
    }
    .map_err(CliError::from_config)
}

/// Validates the config and builds every object the run needs.
pub fn plan(cfg: &ExperimentConfig, base_dir: &std::path::Path) -> Result<Plan, CliError> {
    match cfg.experiment {
        ExperimentKind::SftTrace => {
            let window = cfg.sft_window()?;
            let tol = tolerance(cfg, window)?;
            let t = cfg.trace.as_ref().expect("checked");
            let inner = t.inner_radius.unwrap_or(tol.level + 4);
            let space = cfg.shift_space(t.outer_radius + inner)?;
            let sft = cfg.sft(&space)?;
            let uniqueness = cfg
                .uniqueness
                .as_ref()
                .map(|u| Ok::<_, CliError>((parse_dyadic("uniqueness.eta", &u.eta)?, u.candidate_radius, u.budget, u.fields)))
                .transpose()?;
            Ok(Plan::SftTrace {
                space,
                sft,
                tol,
                outer: t.outer_radius,
                options: GenerateOptions {
                    mode: cfg.generation_mode(),
                    inner_radius: t.inner_radius,
                    perturb_fraction: t.perturb_fraction.unwrap_or(1.0),
                },
                samples: t.samples,
                uniqueness,
            })
        }
        ExperimentKind::SftSynthesize => {
            let s = cfg.synthesize.as_ref().expect("checked");
            let radius = s
                .space_radius
                .unwrap_or(s.compare_radius.max(s.level + 1 + s.slack) + s.level + 2);
            let space = cfg.shift_space(radius)?;
            let sft = cfg.sft(&space)?;
            Ok(Plan::SftSynthesize {
                space,
                sft,
                level: s.level,
                slack: s.slack,
                compare_radius: s.compare_radius,
            })
        }
        ExperimentKind::ExpansivenessWindow => {
            let e = cfg.expansiveness.as_ref().expect("checked");
            let eta = parse_dyadic("expansiveness.eta", &e.eta)?;
            let epsilons = e
                .epsilons
                .iter()
                .map(|s| parse_dyadic("expansiveness.epsilons", s))
                .collect::<Result<Vec<_>, _>>()?;
            if epsilons.is_empty() {
                return Err(config_error("expansiveness.epsilons is empty"));
            }
            let t = weak_agreement_radius(&eta).map_err(CliError::from_config)?;
            let mut j = 0;
            for eps in &epsilons {
                j = j.max(strict_agreement_radius(eps).map_err(CliError::from_config)?);
            }
            let radius = e.space_radius.unwrap_or(e.max_k + t + j + e.slack + 2);
            let space = cfg.shift_space(radius)?;
            let sft = cfg.sft(&space)?;
            Ok(Plan::Expansiveness {
                space,
                sft,
                eta,
                epsilons,
                max_k: e.max_k,
                slack: e.slack,
                budget: e.budget,
            })
        }
        ExperimentKind::ToralStability => {
            let spec = cfg.toral_spec()?;
            let group = cfg.group_spec()?;
            let t = cfg.toral.as_ref().expect("checked");
            if !(t.amplitude.is_finite() && t.amplitude >= 0.0) {
                return Err(config_error("toral.amplitude must be finite and non-negative"));
            }
            if t.grid == 0 || t.word_budget == 0 {
                return Err(config_error("toral.grid and toral.word_budget must be positive"));
            }
            Ok(Plan::Toral { spec, group })
        }
        ExperimentKind::CantorTrace => Ok(Plan::Cantor {
            spec: cantor_spec(cfg, base_dir)?,
        }),
        ExperimentKind::GeneratingSetCompare => {
            let spec = cfg.toral_spec()?;
            let a = cfg.group_spec()?;
            let c = cfg.compare.as_ref().expect("checked");
            let b = generators(spec.family(), &c.generators_b)?;
            if c.delta_prime.is_nan() || c.delta_prime <= 0.0 || c.grid == 0 {
                return Err(config_error("compare.delta_prime and compare.grid must be positive"));
            }
            Ok(Plan::Compare { spec, a, b })
        }
    }
}

fn cantor_spec(cfg: &ExperimentConfig, base_dir: &std::path::Path) -> Result<EquicontinuousActionSpec, CliError> {
    let c = cfg.chain.as_ref().expect("checked");
    let family = cfg.family()?;
    if c.kind != ChainKindName::Explicit {
        if cfg.group.generators.is_some() {
            return Err(config_error("subgroup chains use the canonical generators"));
        }
        if c.action.is_some() {
            return Err(config_error("chain.action is only used by the explicit kind"));
        }
    }
    let need = |v: Option<u64>, what: &str| v.ok_or_else(|| config_error(format!("chain.{what} is required")));
    let chain = match c.kind {
        ChainKindName::Odometer => {
            if family != GroupFamily::IntegerLattice(1) {
                return Err(config_error("the odometer acts by the integers"));
            }
            SubgroupChain::odometer(need(c.base, "base")?, need(c.depth.map(u64::from), "depth")? as u32)
        }
        ChainKindName::Lattice => {
            let GroupFamily::IntegerLattice(d) = family else {
                return Err(config_error("lattice chains need an integer-lattice group"));
            };
            SubgroupChain::lattice(need(c.base, "base")?, d, need(c.depth.map(u64::from), "depth")? as u32)
        }
        ChainKindName::Table => {
            let path = c.table.as_ref().ok_or_else(|| config_error("chain.table is required"))?;
            let path = base_dir.join(path);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
            SubgroupChain::from_csv(family, &text)
        }
        ChainKindName::Explicit => {
            let action = c.action.ok_or_else(|| config_error("chain.action is required for the explicit kind"))?;
            if c.base.is_some() || c.depth.is_some() || c.table.is_some() {
                return Err(config_error("the explicit kind takes only chain.action"));
            }
            return ExplicitCantor::new(cfg.group_spec()?, explicit_action(action))
                .map(EquicontinuousActionSpec::Explicit)
                .map_err(CliError::from_config);
        }
    };
    chain.map(EquicontinuousActionSpec::Profinite).map_err(CliError::from_config)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialise")
}

/// Exact blocks where decidable, else the slack approximation.
fn blocks(space: &ShiftSpace, sft: &SftSpec, k: u32, slack: u32) -> Result<BlockSet, CliError> {
    match exact_allowed_blocks(space, sft, k) {
        Err(Error::InvalidGenerators(_)) => allowed_blocks(space, sft, k, slack),
        other => other,
    }
    .map_err(CliError::from_lib)
}

pub fn execute(cfg: &ExperimentConfig, plan: Plan) -> Result<Outcome, CliError> {
    let seed = cfg.seed;
    match plan {
        Plan::SftTrace {
            space,
            sft,
            tol,
            outer,
            options,
            samples,
            uniqueness,
        } => {
            let summary =
                trace_batch(&space, &sft, &tol, outer, options.clone(), seed, samples).map_err(CliError::from_lib)?;
            let mut passed = summary.passed == summary.samples;
            let mut checks = Vec::new();
            if let Some((eta, candidate_radius, budget, fields)) = uniqueness {
                for i in 0..fields as u64 {
                    let field = generate_pseudo_orbit(&space, &sft, &tol, outer, options.clone(), seed + i)
                        .map_err(CliError::from_lib)?;
                    let r = trace_uniqueness_check(&space, &field, &sft, &tol, &eta, candidate_radius, budget, seed + i)
                        .map_err(CliError::from_lib)?;
                    passed &= match r.status {
                        UniquenessStatus::Unique | UniquenessStatus::NotApplicable => true,
                        UniquenessStatus::Multiple => r.truncation_limited,
                    };
                    let mut v = to_value(&r);
                    v.as_object_mut().expect("object").remove("candidates");
                    v["seed"] = json!(seed + i);
                    checks.push(v);
                }
            }
            let mut disclaimers = vec![
                format!(
                    "residuals verified for |g| <= {} on a field indexed by ball({outer}) with entries on ball({})",
                    summary.verified_radius,
                    space.radius() - outer
                ),
                format!("admissibility checked on every window ball({}) inside ball({outer})", sft.window_radius()),
            ];
            if !matches!(space.group().family(), GroupFamily::IntegerLattice(1) | GroupFamily::CyclicFinite(_)) {
                disclaimers.push("local admissibility only: global extendability is not decided for this group".into());
            }
            Ok(Outcome {
                passed,
                result: json!({
                    "tolerance": to_value(&tol),
                    "summary": to_value(&summary),
                    "uniqueness": checks,
                }),
                disclaimers,
                grid_csv: None,
            })
        }
        Plan::SftSynthesize {
            space,
            sft,
            level,
            slack,
            compare_radius,
        } => {
            let syn = synthesize_forbidden_words(&space, &sft, level, slack).map_err(CliError::from_lib)?;
            let source = blocks(&space, &sft, compare_radius, slack)?;
            let rebuilt = blocks(&space, &syn.sft, compare_radius, slack)?;
            let equal = source.blocks == rebuilt.blocks;
            let alphabet = space.alphabet();
            let words: Vec<String> = syn
                .forbidden
                .iter()
                .map(|w| w.iter().map(|&v| alphabet.symbol(v)).collect())
                .collect();
            let mut disclaimers = vec![format!(
                "forbidden words on ball({}) from blocks extendable to ball({})",
                syn.radius,
                syn.radius + slack
            )];
            if !matches!(source.method, BlockMethod::TransferGraph | BlockMethod::Exhaustive)
            {
                disclaimers.push(format!(
                    "languages compared by slack-{slack} approximation on ball({compare_radius})"
                ));
            }
            Ok(Outcome {
                passed: equal,
                result: json!({
                    "window_radius": syn.radius,
                    "forbidden_count": syn.forbidden.len(),
                    "forbidden": words,
                    "compare_radius": compare_radius,
                    "method": to_value(&source.method),
                    "source_blocks": source.blocks.len(),
                    "synthesized_blocks": rebuilt.blocks.len(),
                    "languages_equal": equal,
                }),
                disclaimers,
                grid_csv: None,
            })
        }
        Plan::Expansiveness {
            space,
            sft,
            eta,
            epsilons,
            max_k,
            slack,
            budget,
        } => {
            let mut passed = true;
            let mut windows = Vec::new();
            for eps in &epsilons {
                match expansiveness_window(&space, &sft, &eta, eps, max_k, slack, budget, seed) {
                    Ok(w) => {
                        passed &= w.scan.exhaustive;
                        windows.push(json!({
                            "epsilon": eps.to_string(),
                            "k": w.k,
                            "scan": to_value(&w.scan),
                            "rejected": w.rejected.len(),
                        }));
                    }
                    Err(Error::NotFound { .. }) => {
                        passed = false;
                        windows.push(json!({"epsilon": eps.to_string(), "k": null}));
                    }
                    Err(e) => return Err(CliError::from_lib(e)),
                }
            }
            Ok(Outcome {
                passed,
                result: json!({"eta": eta.to_string(), "max_k": max_k, "windows": windows}),
                disclaimers: vec![format!(
                    "pairs of locally admissible configurations on balls up to radius {} (slack {slack}); a window with exhaustive = false was sampled",
                    space.radius()
                )],
                grid_csv: None,
            })
        }
        Plan::Toral { spec, group } => {
            let t = cfg.toral.as_ref().expect("checked");
            match t.scalar {
                ScalarName::F64 => toral::<f64>(cfg, &spec, &group),
                ScalarName::F32 => toral::<f32>(cfg, &spec, &group),
            }
        }
        Plan::Cantor { spec } => cantor(cfg, &spec),
        Plan::Compare { spec, a, b } => {
            let c = cfg.compare.as_ref().expect("checked");
            let opts = CompareOptions {
                delta_prime: c.delta_prime,
                samples: c.samples,
                grid: c.grid,
                seed,
            };
            let r = generating_set_compare(&spec, &a, &b, &opts).map_err(CliError::from_lib)?;
            Ok(Outcome {
                passed: r.holds,
                disclaimers: vec![format!("d_A and d_B are sup estimates over a {0}x{0} grid of the torus", r.grid)],
                result: to_value(&r),
                grid_csv: None,
            })
        }
    }
}

fn toral<T: Scalar + serde::Serialize>(cfg: &ExperimentConfig, spec: &ToralActionSpec, group: &GroupSpec) -> Result<Outcome, CliError> {
    let t = cfg.toral.as_ref().expect("checked");
    let relations = spec.relation_check().map_err(CliError::from_lib)?;
    let spectra = spec
        .matrices()
        .iter()
        .map(|m| hyperbolicity_check(m, DEFAULT_MODULUS_TOLERANCE).map(|r| to_value(&r)))
        .collect::<orbtrace::Result<Vec<_>>>()
        .map_err(CliError::from_lib)?;
    let s = PerturbedToralAction::<T>::new(spec, group, t.amplitude, cfg.seed).map_err(CliError::from_config)?;
    let sample = compute_conjugacy(spec, &s, t.word_budget, t.grid).map_err(CliError::from_lib)?;
    let sup = sample.sup_displacement.f64();
    let equivariance = sample.max_equivariance_residual().f64();
    let defect = sample.max_relation_defect().f64();
    let bounded = if s.is_unperturbed() {
        sample.identity
    } else {
        sup <= t.bound_factor * sample.shadowing_bound
    };
    // a perturbation that breaks the relations cannot be conjugated exactly:
    // residuals within one order of magnitude of the relation defect pass
    let equivariant = sample.hyperbolic_residual.f64() <= t.equivariance_tolerance
        && sample
            .equivariance_residuals
            .iter()
            .all(|r| r.sup_residual.f64() <= t.equivariance_tolerance || r.sup_residual.f64() < 10.0 * defect);
    let passed = relations.iter().all(|r| r.holds) && bounded && equivariant;
    let mut result = to_value(&sample);
    let obj = result.as_object_mut().expect("object");
    obj.remove("table");
    obj.insert("points".into(), json!(sample.table.len()));
    obj.insert("relations".into(), to_value(&relations));
    obj.insert("spectra".into(), json!(spectra));
    obj.insert("perturbation".into(), to_value(&s.summary()));
    obj.insert("max_equivariance_residual".into(), json!(equivariance));
    obj.insert("max_relation_defect".into(), json!(defect));
    obj.insert("sup_within_bound".into(), json!(bounded));
    obj.insert("equivariant".into(), json!(equivariant));
    let csv = cfg.output.grid_csv.as_ref().map(|_| sample.to_csv());
    Ok(Outcome {
        passed,
        disclaimers: vec![
            format!(
                "sup |f - Id| over {} sample points ({}grid side {}, resolution {:e})",
                sample.table.len(),
                if sample.quasi_random { "quasi-random, " } else { "" },
                sample.grid,
                sample.resolution
            ),
            format!("f evaluated from the orbit window -{0}..={0}", t.word_budget),
        ],
        result,
        grid_csv: csv,
    })
}

fn cantor(cfg: &ExperimentConfig, spec: &EquicontinuousActionSpec) -> Result<Outcome, CliError> {
    let c = cfg.cantor.as_ref().expect("checked");
    let m = c.level;
    let modulus = equicontinuity_modulus(spec, m, &ModulusOptions::new(m)).map_err(CliError::from_lib)?;
    let Some(k) = c.k.or(modulus.k) else {
        return Ok(Outcome {
            passed: false,
            result: json!({"modulus": to_value(&modulus), "samples": 0}),
            disclaimers: vec!["no modulus of equicontinuity was found; nothing was traced".into()],
            grid_csv: None,
        });
    };
    let mut passed_samples = 0;
    let mut worst: Option<Dyadic> = None;
    let mut first_failure = None;
    let mut checked = 0;
    for i in 0..c.samples as u64 {
        let field = generate_cantor_pseudo_orbit(spec, c.radius, k, c.config_radius, cfg.seed + i, true)
            .map_err(CliError::from_lib)?;
        let r = trace_equicontinuous(spec, &field, m).map_err(CliError::from_lib)?;
        checked = r.checked;
        if r.passed() {
            passed_samples += 1;
        } else if first_failure.is_none() {
            first_failure = Some(cfg.seed + i);
        }
        if worst.as_ref().is_none_or(|w| r.epsilon_achieved > *w) {
            worst = Some(r.epsilon_achieved.clone());
        }
    }
    let cylinders = match (spec, c.cylinder_level) {
        (EquicontinuousActionSpec::Profinite(chain), Some(level)) => {
            Some(cylinder_preservation(chain, level).map_err(CliError::from_lib)?)
        }
        (_, Some(_)) => return Err(config_error("cantor.cylinder_level needs a subgroup chain")),
        _ => None,
    };
    let passed = passed_samples == c.samples && cylinders.as_ref().is_none_or(|cy| cy.holds);
    Ok(Outcome {
        passed,
        result: json!({
            "metric": to_value(&spec.metric_form()),
            "level": m,
            "k": k,
            "modulus": to_value(&modulus),
            "samples": c.samples,
            "passed": passed_samples,
            "first_failure": first_failure,
            "worst_epsilon": worst.map(|w| w.to_string()),
            "group_elements_checked": checked,
            "cylinders": cylinders.map(|cy| to_value(&cy)),
        }),
        disclaimers: vec![
            format!("residuals checked for every g in ball({}) of the acting group", c.radius),
            if modulus.exact {
                "modulus computed exactly".into()
            } else {
                format!("modulus sampled over ball({}) with {} points", modulus.group_radius, modulus.samples)
            },
        ],
        grid_csv: None,
    })
}
